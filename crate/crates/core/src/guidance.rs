//! Implementation-affinity classes and criticality ranking of functions.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::metrics::{MetricRecord, MetricsError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    pub gamma_high: f64,
    pub gamma_low: f64,
    pub com_high: f64,
    pub mom_high: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            gamma_high: 4.0,
            gamma_low: 1.5,
            com_high: 0.15,
            mom_high: 0.7,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<(), MetricsError> {
        let all = [
            self.gamma_high,
            self.gamma_low,
            self.com_high,
            self.mom_high,
        ];
        if all.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(MetricsError::Config(
                "thresholds: every threshold must be a positive number".into(),
            ));
        }
        if self.gamma_low >= self.gamma_high {
            return Err(MetricsError::Config(format!(
                "thresholds: gamma_low ({}) must be below gamma_high ({})",
                self.gamma_low, self.gamma_high
            )));
        }
        Ok(())
    }

    /// Parse a TOML table; omitted keys keep their defaults.
    pub fn from_toml(text: &str) -> Result<Self, MetricsError> {
        let th: Thresholds =
            toml::from_str(text).map_err(|e| MetricsError::Config(format!("thresholds: {e}")))?;
        th.validate()?;
        Ok(th)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassValue {
    #[serde(rename = "hw-candidate")]
    HwCandidate,
    #[serde(rename = "sw-candidate")]
    SwCandidate,
    #[serde(rename = "explore")]
    Explore,
}

impl fmt::Display for ClassValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassValue::HwCandidate => "hw-candidate",
            ClassValue::SwCandidate => "sw-candidate",
            ClassValue::Explore => "explore",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionClass {
    pub value: ClassValue,
    pub rationale: String,
}

/// Classify a function from its root record.
///
/// High parallelism with few tests suggests a dedicated circuit. Parallelism
/// at least twice the high cutoff is treated as dominant even when tests are
/// frequent. Low parallelism points to the processor; the rest needs
/// exploration.
pub fn classify(record: &MetricRecord, th: &Thresholds) -> FunctionClass {
    let (g, com) = (record.gamma, record.com);
    if g >= th.gamma_high && com <= th.com_high {
        return FunctionClass {
            value: ClassValue::HwCandidate,
            rationale: format!(
                "γ {g:.2} ≥ gamma_high {:.2} and COM {com:.2} ≤ com_high {:.2}",
                th.gamma_high, th.com_high
            ),
        };
    }
    if g >= 2.0 * th.gamma_high {
        return FunctionClass {
            value: ClassValue::HwCandidate,
            rationale: format!(
                "γ {g:.2} ≥ 2·gamma_high {:.2} outweighs COM {com:.2} > com_high {:.2}",
                2.0 * th.gamma_high,
                th.com_high
            ),
        };
    }
    if g <= th.gamma_low {
        return FunctionClass {
            value: ClassValue::SwCandidate,
            rationale: format!("γ {g:.2} ≤ gamma_low {:.2}", th.gamma_low),
        };
    }
    let why = if g < th.gamma_high {
        format!(
            "gamma_low {:.2} < γ {g:.2} < gamma_high {:.2}",
            th.gamma_low, th.gamma_high
        )
    } else {
        format!(
            "γ {g:.2} ≥ gamma_high {:.2} but COM {com:.2} > com_high {:.2}",
            th.gamma_high, th.com_high
        )
    };
    FunctionClass {
        value: ClassValue::Explore,
        rationale: why,
    }
}

pub fn memory_pressure(record: &MetricRecord, th: &Thresholds) -> bool {
    record.mom >= th.mom_high
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuidanceRow {
    pub name: String,
    pub gamma: f64,
    pub mom: f64,
    pub com: f64,
    pub class: ClassValue,
    pub rationale: String,
    pub memory_pressure: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuidanceReport {
    pub rows: Vec<GuidanceRow>,
}

/// Classify every function and order them by γ, highest first; equal γ
/// falls back to the function name.
pub fn rank(records: &[(String, MetricRecord)], th: &Thresholds) -> GuidanceReport {
    let mut rows: Vec<GuidanceRow> = records
        .iter()
        .map(|(name, r)| {
            let class = classify(r, th);
            GuidanceRow {
                name: name.clone(),
                gamma: r.gamma,
                mom: r.mom,
                com: r.com,
                class: class.value,
                rationale: class.rationale,
                memory_pressure: memory_pressure(r, th),
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        b.gamma
            .partial_cmp(&a.gamma)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.name.cmp(&b.name))
    });
    GuidanceReport { rows }
}
