//! The single table of physical defaults. Every field can be overridden from
//! JSON; missing fields keep their default.

use serde::{Deserialize, Serialize};

use crate::dynamics::{Envelope, DEFAULT_STEPS_PER_UNIT};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalDefaults {
    /// Gap of the synthetic rank-one protection Hamiltonian.
    pub gap: f64,
    /// Measurement duration in units of 1/ΔE.
    pub time_factor: f64,
    pub grid_points: usize,
    pub grid_half_width: f64,
    pub pointer_width: f64,
    pub pointer_mass: f64,
    pub steps_per_unit: f64,
    pub envelope: Envelope,
    /// Dense dimension limit.
    pub max_dim: usize,
}

impl Default for PhysicalDefaults {
    fn default() -> Self {
        Self {
            gap: 1.0,
            time_factor: 50.0,
            grid_points: 128,
            grid_half_width: 10.0,
            pointer_width: 1.0,
            pointer_mass: 1e6,
            steps_per_unit: DEFAULT_STEPS_PER_UNIT,
            envelope: Envelope::SinSquared,
            max_dim: crate::hilbert::DEFAULT_MAX_DIM,
        }
    }
}

impl PhysicalDefaults {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
