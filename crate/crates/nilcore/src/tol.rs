/// Numerical thresholds shared by canonicalization and classification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Allowed deviation of a constant term from 1 before `log_unit` refuses.
    pub unit: f64,
    /// Coefficients below this count as zero in entanglement criteria.
    pub crit: f64,
    /// Residual at which feedback flows stop.
    pub conv: f64,
    /// Determinant magnitude below which the SL feedback matrix is singular.
    pub det: f64,
    /// Threshold separating zero from nonzero classifying quantities.
    pub class: f64,
    pub max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            unit: 1e-9,
            crit: 1e-9,
            conv: 1e-10,
            det: 1e-8,
            class: 1e-6,
            max_iter: 10_000,
        }
    }
}
