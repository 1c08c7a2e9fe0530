//! The verification suite: Lyapunov spectra, box-counting dimension,
//! trapping-region transversality, unstable-bundle orientability along
//! near-returns, basin censuses, and window-wise rate bounds.

pub mod boxdim;
pub mod consistency;
pub mod lyapunov;
pub mod orientability;
pub mod rates;
pub mod traps;

use serde::Serialize;

use crate::charts::ChartedPoint;

pub use boxdim::{box_counting, map_section_cloud, suspension_cloud, DimensionEstimate};
pub use consistency::{flow_derivative_consistency, verify_derivative_consistency};
pub use lyapunov::{lyapunov_spectrum, SpectrumEstimate};
pub use orientability::{orientability_test, OrientabilityVerdict, Verdict};
pub use rates::{splitting_rate_check, RateFit, RateReport};
pub use traps::{basin_census, forward_invariance_check, trap_check, CensusReport, InvarianceReport, TrapReport};

/// Equilibrium classification by linearization signs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumTag {
    Source,
    Sink,
    Saddle,
    NonHyperbolic,
}

pub fn classify_equilibrium(eigenvalues: &[[f64; 2]], tol: f64) -> EquilibriumTag {
    if eigenvalues.iter().any(|e| e[0].abs() <= tol) {
        return EquilibriumTag::NonHyperbolic;
    }
    let pos = eigenvalues.iter().filter(|e| e[0] > 0.0).count();
    if pos == eigenvalues.len() {
        EquilibriumTag::Source
    } else if pos == 0 {
        EquilibriumTag::Sink
    } else {
        EquilibriumTag::Saddle
    }
}

/// Serializable summary of a located equilibrium.
#[derive(Clone, Debug, Serialize)]
pub struct EquilibriumSummary {
    pub point: ChartedPoint,
    pub eigenvalues: Vec<[f64; 2]>,
    pub tag: EquilibriumTag,
}

/// Serializable summary of a located periodic orbit.
#[derive(Clone, Debug, Serialize)]
pub struct OrbitSummary {
    pub representative: ChartedPoint,
    pub period: f64,
    pub multipliers: Vec<[f64; 2]>,
    pub stability: crate::orbit::Stability,
}
