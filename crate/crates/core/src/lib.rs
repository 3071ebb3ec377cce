pub mod driver;
pub mod frontend;
pub mod guidance;
pub mod hcdfg;
pub mod metrics;
pub mod projection;
