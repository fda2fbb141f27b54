use serde::{Deserialize, Serialize};

use super::{conjugate_exponent, LogSum, SequenceWeight};
use crate::error::{Error, Result};

/// `ln(f64::MAX)`; constants whose logarithm exceeds this are reported as infinite.
const LN_MAX: f64 = 709.782712893384;

/// Relative growth of `A_N` under doubling of `N` above which the
/// constant is considered divergent.
pub const DEFAULT_GROWTH_TOLERANCE: f64 = 1e-3;

/// Characterization constant of a truncated pair `(u, v)`.
#[derive(Clone, Debug, Serialize)]
pub struct Characterization {
    pub n: usize,
    /// `ln A_N`.
    pub ln_a: f64,
    /// `A_N`, `+inf` when it exceeds the floating point range.
    pub a: f64,
    /// Smallest index attaining the maximum.
    pub k_star: usize,
}

/// `A_N = max_{1≤k≤N} (Σ_{i=k}^N u_i)^{1/p} (Σ_{i=1}^k v_i^{1-q})^{1/q}`.
pub fn characterization_a(
    u: &SequenceWeight,
    v: &SequenceWeight,
    p: f64,
    n: usize,
) -> Result<Characterization> {
    let q = conjugate_exponent(p)?;
    if n == 0 {
        return Err(Error::Domain("truncation N must be at least 1".into()));
    }
    for (name, w) in [("u", u), ("v", v)] {
        if !w.has_terms(n) {
            return Err(Error::Shape(format!(
                "weight {name} has {} terms, N = {n} requested",
                w.len().unwrap_or(0)
            )));
        }
    }
    // tail sums, accumulated from the largest index downwards
    let mut ln_tail = vec![0.0; n];
    let mut acc = LogSum::new();
    for k in (1..=n).rev() {
        acc.add_ln(u.ln_term(k)?);
        ln_tail[k - 1] = acc.ln();
    }
    let mut head = LogSum::new();
    let mut best = f64::NEG_INFINITY;
    let mut k_star = 1;
    for k in 1..=n {
        head.add_ln((1.0 - q) * v.ln_term(k)?);
        let val = ln_tail[k - 1] / p + head.ln() / q;
        if val > best {
            best = val;
            k_star = k;
        }
    }
    if !best.is_finite() {
        return Err(Error::InvariantViolation(format!("ln A_N evaluated to {best}")));
    }
    let a = if best > LN_MAX { f64::INFINITY } else { best.exp() };
    Ok(Characterization { n, ln_a: best, a, k_star })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Finiteness {
    /// `A_N` stabilizes under doubling of `N`.
    Finite,
    /// `A_N` keeps growing under doubling.
    Divergent,
    /// `A_N` itself exceeds the floating point range.
    Infinite,
    /// The weights are too short to test growth.
    Undetermined,
}

/// Hardy constant bounds `A_N ≤ C_H ≤ 4 A_N`, in the `1/p` normalization.
#[derive(Clone, Debug, Serialize)]
pub struct HardyReport {
    pub p: f64,
    pub q: f64,
    pub n: usize,
    pub a: f64,
    pub ln_a: f64,
    pub k_star: usize,
    pub lower: f64,
    pub upper: f64,
    pub verdict: Finiteness,
    /// `A_{2N}/A_N` and `A_{4N}/A_{2N}` when available.
    pub growth: Vec<f64>,
    /// Largest ratio `‖Ta‖_{p,u} / ‖a‖_{p,v}` found numerically, if computed.
    pub empirical: Option<f64>,
    /// `empirical^p`.
    pub empirical_pow: Option<f64>,
}

impl HardyReport {
    /// Attaches an empirical lower bound for `C_H`.
    pub fn with_empirical(mut self, c: f64) -> Self {
        self.empirical = Some(c);
        self.empirical_pow = Some(c.powf(self.p));
        self
    }
}

pub fn hardy_bounds(u: &SequenceWeight, v: &SequenceWeight, p: f64, n: usize) -> Result<HardyReport> {
    hardy_bounds_with(u, v, p, n, DEFAULT_GROWTH_TOLERANCE)
}

/// Like [`hardy_bounds`] with an explicit growth tolerance for the finiteness test.
pub fn hardy_bounds_with(
    u: &SequenceWeight,
    v: &SequenceWeight,
    p: f64,
    n: usize,
    growth_tol: f64,
) -> Result<HardyReport> {
    let q = conjugate_exponent(p)?;
    let base = characterization_a(u, v, p, n)?;
    let mut growth = Vec::new();
    let verdict = if base.a.is_infinite() {
        Finiteness::Infinite
    } else if !(u.has_terms(4 * n) && v.has_terms(4 * n)) {
        Finiteness::Undetermined
    } else {
        let a2 = characterization_a(u, v, p, 2 * n)?;
        let a4 = characterization_a(u, v, p, 4 * n)?;
        if a4.a.is_infinite() {
            Finiteness::Infinite
        } else {
            growth.push((a2.ln_a - base.ln_a).exp());
            growth.push((a4.ln_a - a2.ln_a).exp());
            if growth.iter().all(|&g| g > 1.0 + growth_tol) {
                Finiteness::Divergent
            } else {
                Finiteness::Finite
            }
        }
    };
    Ok(HardyReport {
        p,
        q,
        n,
        a: base.a,
        ln_a: base.ln_a,
        k_star: base.k_star,
        lower: base.a,
        upper: 4.0 * base.a,
        verdict,
        growth,
        empirical: None,
        empirical_pow: None,
    })
}
