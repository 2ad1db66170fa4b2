use serde::{Deserialize, Serialize};

/// Numerical tolerances shared by every predicate in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Matrix identities: form preservation, relations, projective equality.
    pub identity: f64,
    /// Geometric predicates: tangency, sphere membership, line residuals.
    pub geometric: f64,
    /// Relative gap below which two eigenvalues count as repeated.
    pub cluster: f64,
    /// Relative width of the zero band of the trace discriminants.
    pub boundary_band: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            identity: 1e-9,
            geometric: 1e-7,
            cluster: 1e-6,
            boundary_band: 1e-8,
        }
    }
}
