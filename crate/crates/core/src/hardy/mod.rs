//! Weighted discrete Hardy inequalities
//!
//! For positive weights `u`, `v` and `1 < p < ∞` the inequality
//! `Σ u_k |Σ_{i≤k} a_i|^p ≤ C_H^p Σ v_k |a_k|^p` holds iff the
//! characterization constant
//! `A = sup_k (Σ_{i≥k} u_i)^{1/p} (Σ_{i≤k} v_i^{1-q})^{1/q}` is finite,
//! and then `A ≤ C_H ≤ 4A`. Indices start at 1 throughout.

mod characterization;
mod operator;
mod sequence;

pub use characterization::{
    characterization_a, hardy_bounds, hardy_bounds_with, Characterization, Finiteness,
    HardyReport, DEFAULT_GROWTH_TOLERANCE,
};
pub use operator::{
    apply_dual_operator, apply_hardy_operator, dual_pair, dual_weights, empirical_best_constant,
    DualPair, EmpiricalConstant, WeightedHardyOperator,
};
pub use sequence::SequenceWeight;

pub(crate) use sequence::LogSum;

use crate::error::{Error, Result};

/// Conjugate exponent `q = p/(p-1)`.
pub fn conjugate_exponent(p: f64) -> Result<f64> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::Domain(format!("exponent p = {p} must satisfy 1 < p < inf")));
    }
    Ok(p / (p - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conjugates() {
        assert_eq!(conjugate_exponent(2.0).unwrap(), 2.0);
        for p in [1.1, 1.5, 3.0, 7.25, 40.0] {
            let q = conjugate_exponent(p).unwrap();
            assert!((1.0 / p + 1.0 / q - 1.0).abs() < 1e-14);
        }
        assert!(conjugate_exponent(1.0).is_err());
        assert!(conjugate_exponent(0.5).is_err());
        assert!(conjugate_exponent(f64::INFINITY).is_err());
        assert!(conjugate_exponent(f64::NAN).is_err());
    }
}
