use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::hcdfg::GraphNode;

use super::MetricsError;

/// Execution profile for one control structure.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileEntry {
    /// Loop trip count.
    pub trips: Option<u64>,
    /// Probability that an `if` condition holds.
    pub p_true: Option<f64>,
    /// Switch case probabilities in source order, default last when present.
    pub cases: Option<Vec<f64>>,
}

/// Trip counts and branch probabilities keyed by graph.
///
/// Keys are `function/label`, e.g. `"filter/loop@12"`. When several graphs
/// share a line, `function/label:column` selects one of them; the column
/// form takes precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Profile {
    pub entries: BTreeMap<String, ProfileEntry>,
}

impl Profile {
    pub fn from_toml(text: &str) -> Result<Self, MetricsError> {
        let profile: Profile =
            toml::from_str(text).map_err(|e| MetricsError::Config(format!("profile: {e}")))?;
        for (key, entry) in &profile.entries {
            if !key.contains('/') {
                return Err(MetricsError::Config(format!(
                    "profile: key `{key}` must have the form function/label"
                )));
            }
            if let Some(p) = entry.p_true {
                if !(0.0..=1.0).contains(&p) {
                    return Err(MetricsError::Config(format!(
                        "profile: `{key}`: p_true = {p} is outside [0, 1]"
                    )));
                }
            }
            if let Some(cases) = &entry.cases {
                if cases.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    return Err(MetricsError::Config(format!(
                        "profile: `{key}`: case probabilities must lie in [0, 1]"
                    )));
                }
            }
        }
        Ok(profile)
    }

    pub fn lookup(&self, g: &GraphNode) -> Option<&ProfileEntry> {
        let key = g.path_key();
        self.entries
            .get(&format!("{key}:{}", g.span.column))
            .or_else(|| self.entries.get(&key))
    }

    pub fn insert(&mut self, key: impl Into<String>, entry: ProfileEntry) {
        self.entries.insert(key.into(), entry);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_entries() {
        let p = Profile::from_toml(
            "[\"f/loop@3\"]\ntrips = 10\n[\"f/if@5\"]\np_true = 0.25\n[\"f/switch@9\"]\ncases = [0.5, 0.5]\n",
        )
        .unwrap();
        assert_eq!(p.entries["f/loop@3"].trips, Some(10));
        assert_eq!(p.entries["f/if@5"].p_true, Some(0.25));
        assert_eq!(
            p.entries["f/switch@9"].cases.as_deref(),
            Some(&[0.5, 0.5][..])
        );
    }

    #[test]
    fn rejects_bad_entries() {
        assert!(Profile::from_toml("[\"f/if@5\"]\np_true = 1.5\n").is_err());
        assert!(Profile::from_toml("[\"f/if@5\"]\nprob = 0.5\n").is_err());
        assert!(Profile::from_toml("[\"nokey\"]\ntrips = 1\n").is_err());
        assert!(Profile::from_toml("[\"f/loop@1\"]\ntrips = -1\n").is_err());
    }
}
