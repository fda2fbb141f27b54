use serde::Serialize;

use super::{conjugate_exponent, SequenceWeight};
use crate::error::{Error, Result};

/// Partial sums `(Ta)_k = Σ_{i≤k} a_i` of a nonnegative sequence.
pub fn apply_hardy_operator(a: &[f64]) -> Result<Vec<f64>> {
    check_nonnegative(a)?;
    let mut s = 0.0;
    Ok(a.iter().map(|&x| {
        s += x;
        s
    })
    .collect())
}

/// Tail sums `(T*b)_i = Σ_{k≥i} b_k`, the adjoint of [`apply_hardy_operator`].
pub fn apply_dual_operator(b: &[f64]) -> Result<Vec<f64>> {
    check_nonnegative(b)?;
    let mut out = vec![0.0; b.len()];
    let mut s = 0.0;
    for (o, &x) in out.iter_mut().zip(b).rev() {
        s += x;
        *o = s;
    }
    Ok(out)
}

fn check_nonnegative(a: &[f64]) -> Result<()> {
    match a.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
        Some(k) => Err(Error::Data(format!("entry {} = {} is not finite and nonnegative", k + 1, a[k]))),
        None => Ok(()),
    }
}

/// `M = diag(u^{1/p}) T diag(v^{-1/p})` on `R^N`, so that
/// `‖Mx‖_p / ‖x‖_p` equals `‖Ta‖_{p,u} / ‖a‖_{p,v}` for `x = v^{1/p} a`.
///
/// Applied through two-term recursions whose coefficients are formed from
/// logarithms, so the weights may span far more than the `f64` range.
#[derive(Clone, Debug)]
pub struct WeightedHardyOperator {
    p: f64,
    /// `(u_j/v_j)^{1/p}`.
    diag: Vec<f64>,
    /// `(u_j/u_{j-1})^{1/p}`, entry 0 unused.
    forward: Vec<f64>,
    /// `(v_{j+1}/v_j)^{1/p}`, last entry unused.
    backward: Vec<f64>,
    /// `ln v_j / p`, used to map sequences `a` to `x`.
    ln_v_root: Vec<f64>,
}

impl WeightedHardyOperator {
    pub fn new(u: &SequenceWeight, v: &SequenceWeight, p: f64, n: usize) -> Result<Self> {
        conjugate_exponent(p)?;
        if n == 0 {
            return Err(Error::Domain("truncation N must be at least 1".into()));
        }
        let lu = u.ln_terms(n)?;
        let lv = v.ln_terms(n)?;
        let diag = lu.iter().zip(&lv).map(|(a, b)| ((a - b) / p).exp()).collect();
        let mut forward = vec![0.0; n];
        let mut backward = vec![0.0; n];
        for j in 1..n {
            forward[j] = ((lu[j] - lu[j - 1]) / p).exp();
            backward[j - 1] = ((lv[j] - lv[j - 1]) / p).exp();
        }
        let ln_v_root = lv.iter().map(|l| l / p).collect();
        Ok(Self { p, diag, forward, backward, ln_v_root })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut prev = 0.0;
        for j in 0..x.len() {
            prev = self.forward[j] * prev + self.diag[j] * x[j];
            y[j] = prev;
        }
    }

    pub fn apply_transpose(&self, z: &[f64], w: &mut [f64]) {
        let mut next = 0.0;
        for i in (0..z.len()).rev() {
            next = self.backward[i] * next + self.diag[i] * z[i];
            w[i] = next;
        }
    }

    /// `‖Mx‖_p / ‖x‖_p`.
    pub fn ratio(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; x.len()];
        self.apply(x, &mut y);
        norm_p(&y, self.p) / norm_p(x, self.p)
    }

    /// `x = v^{1/p} a`, rescaled to unit maximum so that no entry overflows.
    pub fn sequence_to_state(&self, ln_a: &[f64]) -> Vec<f64> {
        let l: Vec<f64> = ln_a.iter().zip(&self.ln_v_root).map(|(a, v)| a + v).collect();
        let m = l.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        l.iter().map(|x| (x - m).exp()).collect()
    }
}

fn norm_p(x: &[f64], p: f64) -> f64 {
    let m = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m == 0.0 {
        return 0.0;
    }
    if p == 2.0 {
        return m * x.iter().map(|v| (v / m) * (v / m)).sum::<f64>().sqrt();
    }
    m * x.iter().map(|v| (v.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Outcome of the numerical maximization of the Hardy ratio.
#[derive(Clone, Debug, Serialize)]
pub struct EmpiricalConstant {
    /// Best ratio `‖Ta‖_{p,u}/‖a‖_{p,v}` found, a lower bound for `C_H`.
    pub value: f64,
    /// `value^p`.
    pub value_pow: f64,
    pub iterations: usize,
}

/// Lower bound for `C_H` (in the `1/p` form) by maximizing the Hardy ratio.
///
/// Starts from `a_k = k^{-1/p-0.01}`. For `p = 2` this is power iteration on
/// `MᵀM`; otherwise projected gradient ascent on `ln‖Mx‖_p - ln‖x‖_p` over
/// nonnegative `x`. The best ratio seen is returned, so `budget = 0` gives
/// the ratio of the starting sequence.
pub fn empirical_best_constant(
    u: &SequenceWeight,
    v: &SequenceWeight,
    p: f64,
    n: usize,
    budget: usize,
) -> Result<EmpiricalConstant> {
    let op = WeightedHardyOperator::new(u, v, p, n)?;
    let s = 1.0 / p + 0.01;
    let ln_a: Vec<f64> = (1..=n).map(|k| -s * (k as f64).ln()).collect();
    let x = op.sequence_to_state(&ln_a);
    let (value, iterations) = if p == 2.0 {
        power_iteration(&op, x, budget)
    } else {
        gradient_ascent(&op, x, budget)
    };
    Ok(EmpiricalConstant { value, value_pow: value.powf(p), iterations })
}

fn power_iteration(op: &WeightedHardyOperator, mut x: Vec<f64>, budget: usize) -> (f64, usize) {
    let n = x.len();
    let mut y = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut best = 0.0f64;
    let mut done = 0;
    scale(&mut x);
    loop {
        op.apply(&x, &mut y);
        let r = norm_p(&y, 2.0) / norm_p(&x, 2.0);
        let prev = best;
        best = best.max(r);
        if done == budget || (done > 10 && best - prev <= 1e-15 * best) {
            break;
        }
        op.apply_transpose(&y, &mut z);
        if norm_p(&z, 2.0) == 0.0 {
            break;
        }
        std::mem::swap(&mut x, &mut z);
        scale(&mut x);
        done += 1;
    }
    (best, done)
}

fn scale(x: &mut [f64]) {
    let m = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m > 0.0 {
        x.iter_mut().for_each(|v| *v /= m);
    }
}

fn gradient_ascent(op: &WeightedHardyOperator, mut x: Vec<f64>, budget: usize) -> (f64, usize) {
    let p = op.p();
    let n = x.len();
    let objective = |x: &[f64], y: &mut [f64]| -> f64 {
        op.apply(x, y);
        norm_p(y, p).ln() - norm_p(x, p).ln()
    };
    let mut y = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut ty = vec![0.0; n];
    normalize_p(&mut x, p);
    let mut f = objective(&x, &mut y);
    let mut step = 1.0;
    let mut done = 0;
    while done < budget {
        // gradient of F at ‖x‖_p = 1: Mᵀ(y^{p-1})/‖y‖_p^p - x^{p-1}
        let ny = norm_p(&y, p);
        let g: Vec<f64> = y.iter().map(|v| (v.abs() / ny).powf(p - 1.0) / ny).collect();
        op.apply_transpose(&g, &mut w);
        let grad: Vec<f64> = w.iter().zip(&x).map(|(a, b)| a - b.abs().powf(p - 1.0)).collect();
        let mut improved = false;
        step *= 2.0;
        for _ in 0..40 {
            for ((t, xi), gi) in trial.iter_mut().zip(&x).zip(&grad) {
                *t = (xi + step * gi).max(0.0);
            }
            if normalize_p(&mut trial, p) {
                let ft = objective(&trial, &mut ty);
                if ft > f {
                    std::mem::swap(&mut x, &mut trial);
                    std::mem::swap(&mut y, &mut ty);
                    let gain = ft - f;
                    f = ft;
                    improved = gain > 1e-15 * f.abs().max(1.0);
                    break;
                }
            }
            step *= 0.5;
        }
        done += 1;
        if !improved {
            break;
        }
    }
    (f.exp(), done)
}

/// Rescales to unit `p`-norm; false if `x` vanishes.
fn normalize_p(x: &mut [f64], p: f64) -> bool {
    let nx = norm_p(x, p);
    if nx == 0.0 || !nx.is_finite() {
        return false;
    }
    x.iter_mut().for_each(|v| *v /= nx);
    true
}

/// Weight pair of the adjoint inequality on `{1, ..., N}`.
#[derive(Clone, Debug)]
pub struct DualPair {
    pub u: SequenceWeight,
    pub v: SequenceWeight,
    /// Exponent of the dual inequality, the conjugate of the primal one.
    pub p: f64,
    pub n: usize,
}

/// Dual pair `u'_k = v_{N+1-k}^{1-q}`, `v'_k = u_{N+1-k}^{1-q}` with exponent `q`.
///
/// Reversing the index turns tail sums into partial sums, so the dual pair
/// has the same characterization constant and the same Hardy constant as
/// `(u, v, p)` truncated at `N`.
pub fn dual_pair(u: &SequenceWeight, v: &SequenceWeight, p: f64, n: usize) -> Result<DualPair> {
    let q = conjugate_exponent(p)?;
    let lu = u.ln_terms(n)?;
    let lv = v.ln_terms(n)?;
    let du: Vec<f64> = lv.iter().rev().map(|l| (1.0 - q) * l).collect();
    let dv: Vec<f64> = lu.iter().rev().map(|l| (1.0 - q) * l).collect();
    Ok(DualPair {
        u: SequenceWeight::from_ln_terms(&du)?,
        v: SequenceWeight::from_ln_terms(&dv)?,
        p: q,
        n,
    })
}

/// Dual pair of the symmetric case `v = u`; both dual weights equal `rev(u^{1-q})`.
pub fn dual_weights(u: &SequenceWeight, p: f64, n: usize) -> Result<DualPair> {
    dual_pair(u, u, p, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hardy::characterization_a;

    #[test]
    fn operators_on_small_vectors() {
        assert_eq!(apply_hardy_operator(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 3.0, 6.0]);
        assert_eq!(apply_dual_operator(&[1.0, 2.0, 3.0]).unwrap(), vec![6.0, 5.0, 3.0]);
        assert!(apply_hardy_operator(&[1.0, f64::NAN]).is_err());
        assert!(apply_dual_operator(&[1.0, -1.0]).is_err());
        assert!(apply_hardy_operator(&[]).unwrap().is_empty());
    }

    #[test]
    fn weighted_operator_matches_definition() {
        let uu = [0.5, 2.0, 0.25, 1.5];
        let vv = [1.0, 0.3, 4.0, 2.0];
        let p = 2.5;
        let u = SequenceWeight::from_terms(&uu).unwrap();
        let v = SequenceWeight::from_terms(&vv).unwrap();
        let op = WeightedHardyOperator::new(&u, &v, p, 4).unwrap();
        let x = [0.3, -1.0, 2.0, 0.7];
        let mut y = [0.0; 4];
        op.apply(&x, &mut y);
        for j in 0..4 {
            let s: f64 = (0..=j).map(|i| x[i] * vv[i].powf(-1.0 / p)).sum();
            let e = uu[j].powf(1.0 / p) * s;
            assert!((y[j] - e).abs() < 1e-14, "{j}");
        }
        let z = [1.0, 0.5, -0.25, 3.0];
        let mut w = [0.0; 4];
        op.apply_transpose(&z, &mut w);
        let lhs: f64 = y.iter().zip(&z).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.iter().zip(&w).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-13);
    }

    #[test]
    fn classical_empirical() {
        let u = SequenceWeight::power(-2.0);
        let v = SequenceWeight::constant(1.0).unwrap();
        let e = empirical_best_constant(&u, &v, 2.0, 20_000, 200).unwrap();
        let a = characterization_a(&u, &v, 2.0, 20_000).unwrap().a;
        assert!(e.value >= a - 1e-9 && e.value <= 4.0 * a);
        assert!(e.value_pow > 3.0 && e.value_pow < 4.0, "{}", e.value_pow);
    }

    #[test]
    fn empirical_zero_budget_is_start_ratio() {
        let u = SequenceWeight::power(-2.0);
        let v = SequenceWeight::constant(1.0).unwrap();
        let e = empirical_best_constant(&u, &v, 2.0, 1000, 0).unwrap();
        let a: Vec<f64> = (1..=1000).map(|k| (k as f64).powf(-0.51)).collect();
        let ta = apply_hardy_operator(&a).unwrap();
        let num: f64 = ta.iter().enumerate().map(|(k, t)| t * t / ((k + 1) as f64).powi(2)).sum();
        let den: f64 = a.iter().map(|x| x * x).sum();
        assert!((e.value - (num / den).sqrt()).abs() < 1e-12);
        assert_eq!(e.iterations, 0);
    }

    #[test]
    fn gradient_ascent_improves_start() {
        let u = SequenceWeight::power(-3.0);
        let v = SequenceWeight::constant(1.0).unwrap();
        let start = empirical_best_constant(&u, &v, 3.0, 500, 0).unwrap();
        let best = empirical_best_constant(&u, &v, 3.0, 500, 300).unwrap();
        let a = characterization_a(&u, &v, 3.0, 500).unwrap().a;
        assert!(best.value > start.value * 0.999);
        assert!(best.value <= 4.0 * a);
    }

    #[test]
    fn dual_pair_shares_constant() {
        let uu = [0.5, 2.0, 0.25, 1.5, 0.01];
        let vv = [1.0, 0.3, 4.0, 2.0, 7.0];
        let u = SequenceWeight::from_terms(&uu).unwrap();
        let v = SequenceWeight::from_terms(&vv).unwrap();
        for p in [1.5, 2.0, 4.0] {
            let d = dual_pair(&u, &v, p, 5).unwrap();
            let a = characterization_a(&u, &v, p, 5).unwrap().a;
            let ad = characterization_a(&d.u, &d.v, d.p, 5).unwrap().a;
            assert!((a - ad).abs() < 1e-12 * a, "p = {p}: {a} vs {ad}");
        }
    }
}
