//! Weights `ω(x₁)` depending on the distance to the cusp, and the Hardy
//! sequences they induce on the dyadic cover.

use std::io::Read;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::CuspDomain;
use crate::hardy::{conjugate_exponent, Finiteness, SequenceWeight};
use crate::quadrature::{gauss_legendre, integrate};

const LN2: f64 = std::f64::consts::LN_2;

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSpec {
    /// `ω = x₁^β`.
    Power { beta: f64 },
    /// `ω = (1 - ln x₁)^α`.
    LogPower { alpha: f64 },
    Tabulated(TabulatedWeight),
}

impl WeightSpec {
    pub fn power(beta: f64) -> Self {
        WeightSpec::Power { beta }
    }

    pub fn log_power(alpha: f64) -> Self {
        WeightSpec::LogPower { alpha }
    }

    pub fn unit() -> Self {
        WeightSpec::Power { beta: 0.0 }
    }

    /// `ln ω(x₁)` for `0 < x₁ ≤ 1`.
    pub fn ln_eval(&self, x1: f64) -> f64 {
        match self {
            WeightSpec::Power { beta } => beta * x1.ln(),
            WeightSpec::LogPower { alpha } => alpha * (1.0 - x1.ln()).ln(),
            WeightSpec::Tabulated(t) => t.ln_eval(x1),
        }
    }

    pub fn eval(&self, x1: f64) -> f64 {
        match self {
            WeightSpec::Power { beta } => x1.powf(*beta),
            _ => self.ln_eval(x1).exp(),
        }
    }

    /// `ln ω(2^{-i})`, exact in `i` for the closed-form kinds.
    pub fn ln_eval_dyadic(&self, i: usize) -> f64 {
        let t = i as f64 * LN2;
        match self {
            WeightSpec::Power { beta } => -beta * t,
            WeightSpec::LogPower { alpha } => alpha * (1.0 + t).ln(),
            WeightSpec::Tabulated(w) => w.ln_eval((-(i as f64)).exp2()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            WeightSpec::Power { beta } => format!("power(beta={beta})"),
            WeightSpec::LogPower { alpha } => format!("log_power(alpha={alpha})"),
            WeightSpec::Tabulated(t) => format!("tabulated({} samples)", t.x.len()),
        }
    }
}

/// Weight given by samples `(x₁, ω)`, interpolated piecewise linearly in
/// `(ln x₁, ln ω)`, so power laws are reproduced exactly. Below the first
/// sample it continues as the power law through the first two samples;
/// above the last sample it is constant.
#[derive(Clone, Debug, Serialize)]
pub struct TabulatedWeight {
    x: Vec<f64>,
    omega: Vec<f64>,
    #[serde(skip)]
    ln_x: Vec<f64>,
    #[serde(skip)]
    ln_omega: Vec<f64>,
    tail_exponent: f64,
}

impl TabulatedWeight {
    pub fn new(samples: &[(f64, f64)]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Data("tabulated weight needs at least one sample".into()));
        }
        let mut s = samples.to_vec();
        s.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (k, &(x, w)) in s.iter().enumerate() {
            if !(x.is_finite() && x > 0.0 && x <= 1.0) {
                return Err(Error::Data(format!("sample abscissa {x} outside (0, 1]")));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Data(format!("weight sample {w} at x = {x} is not positive")));
            }
            if k > 0 && s[k - 1].0 == x {
                return Err(Error::Data(format!("duplicate abscissa {x}")));
            }
        }
        let x: Vec<f64> = s.iter().map(|p| p.0).collect();
        let omega: Vec<f64> = s.iter().map(|p| p.1).collect();
        let ln_x: Vec<f64> = x.iter().map(|v| v.ln()).collect();
        let ln_omega: Vec<f64> = omega.iter().map(|v| v.ln()).collect();
        let tail_exponent = if x.len() > 1 {
            (ln_omega[1] - ln_omega[0]) / (ln_x[1] - ln_x[0])
        } else {
            0.0
        };
        Ok(Self { x, omega, ln_x, ln_omega, tail_exponent })
    }

    /// Reads two numeric columns `x1,omega`; a non-numeric first row is taken as a header.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
        let mut samples = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() < 2 {
                return Err(Error::Data(format!("row {} has fewer than two columns", row + 1)));
            }
            match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
                (Ok(x), Ok(w)) => samples.push((x, w)),
                _ if row == 0 => continue,
                _ => return Err(Error::Data(format!("row {} is not numeric", row + 1))),
            }
        }
        Self::new(&samples)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    /// Exponent `s` of the power law `ω ∝ x₁^s` used below the first sample.
    pub fn tail_exponent(&self) -> f64 {
        self.tail_exponent
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.x.iter().cloned().zip(self.omega.iter().cloned())
    }

    fn ln_eval(&self, x1: f64) -> f64 {
        let l = x1.ln();
        let n = self.ln_x.len();
        if l <= self.ln_x[0] {
            return self.ln_omega[0] + self.tail_exponent * (l - self.ln_x[0]);
        }
        if l >= self.ln_x[n - 1] {
            return self.ln_omega[n - 1];
        }
        let k = self.ln_x.partition_point(|&v| v <= l);
        let (l0, l1) = (self.ln_x[k - 1], self.ln_x[k]);
        let t = (l - l0) / (l1 - l0);
        (1.0 - t) * self.ln_omega[k - 1] + t * self.ln_omega[k]
    }
}

/// Admissibility data of a weight on the dyadic cover.
#[derive(Clone, Debug, Serialize)]
pub struct AdmissibilityReport {
    /// `sup_i sup_{Ω_i} ω / inf_{Ω_i} ω`.
    pub c_omega: f64,
    /// Ratios for `i = 0, ..., i_max`.
    pub ratios: Vec<f64>,
    /// Whether `ω^p` is integrable over `Ω`.
    pub integrable: bool,
    /// `∫_Ω ω^p`, infinite when not integrable.
    pub integral: f64,
}

/// Checks that `ω` is comparable to a constant on every `Ω_i` and that `ω^p ∈ L¹(Ω)`.
pub fn admissibility(w: &WeightSpec, p: f64, gamma: f64, i_max: usize) -> Result<AdmissibilityReport> {
    conjugate_exponent(p)?;
    let domain = CuspDomain::new(gamma)?;
    let mut ratios = Vec::with_capacity(i_max + 1);
    let mut i_end = i_max;
    if let WeightSpec::Tabulated(t) = w {
        // reach past the first sample so every interpolated piece is seen
        let first = -t.x[0].log2();
        i_end = i_end.max(first.ceil() as usize + 1);
    }
    for i in 0..=i_end {
        let (a, b) = domain.strip_bounds(i);
        let mut lo = w.ln_eval(a).min(w.ln_eval(b));
        let mut hi = w.ln_eval(a).max(w.ln_eval(b));
        if let WeightSpec::Tabulated(t) = w {
            for &x in t.x.iter().filter(|&&x| x > a && x < b) {
                lo = lo.min(w.ln_eval(x));
                hi = hi.max(w.ln_eval(x));
            }
        }
        ratios.push((hi - lo).exp());
    }
    let measured = ratios.iter().cloned().fold(1.0f64, f64::max);
    ratios.truncate(i_max + 1);
    let closed = match w {
        WeightSpec::Power { beta } => (2.0 * beta.abs()).exp2(),
        WeightSpec::LogPower { alpha } => (1.0 + 2.0 * LN2).powf(alpha.abs()),
        WeightSpec::Tabulated(t) => (2.0 * t.tail_exponent.abs()).exp2(),
    };
    let (integrable, integral) = weighted_volume(w, p, gamma);
    Ok(AdmissibilityReport { c_omega: closed.max(measured), ratios, integrable, integral })
}

/// `∫_Ω ω^p = ∫_0^1 ω(x)^p x^γ dx`.
fn weighted_volume(w: &WeightSpec, p: f64, gamma: f64) -> (bool, f64) {
    let rule = gauss_legendre(16);
    match w {
        WeightSpec::Power { beta } => {
            let e = beta * p + gamma + 1.0;
            if e > 0.0 { (true, 1.0 / e) } else { (false, f64::INFINITY) }
        }
        WeightSpec::LogPower { alpha } => {
            // x = e^{-t}: ∫_0^∞ (1+t)^{pα} e^{-(γ+1)t} dt
            let c = gamma + 1.0;
            let f = |t: f64| (p * alpha * (1.0 + t).ln() - c * t).exp();
            let h = 0.5 / c;
            let mut total = 0.0;
            let mut k = 0usize;
            loop {
                let part = integrate(f, k as f64 * h, (k + 1) as f64 * h, &rule);
                total += part;
                k += 1;
                if (k as f64 * h * c > 40.0 && part < 1e-17 * total) || k > 100_000 {
                    break;
                }
            }
            (true, total)
        }
        WeightSpec::Tabulated(t) => {
            let e = t.tail_exponent * p + gamma + 1.0;
            if e <= 0.0 {
                return (false, f64::INFINITY);
            }
            let x0 = t.x[0];
            let tail = (p * t.ln_omega[0]).exp() * x0.powf(gamma + 1.0) / e;
            // integrate in s = ln x between consecutive samples, then up to 1
            let mut knots = t.ln_x.clone();
            if *knots.last().unwrap() < 0.0 {
                knots.push(0.0);
            }
            let f = |s: f64| (p * w.ln_eval(s.exp()) + (gamma + 1.0) * s).exp();
            let body: f64 = knots.windows(2).map(|k| integrate(f, k[0], k[1], &rule)).sum();
            (true, tail + body)
        }
    }
}

/// `u_i = |Ω_i| ω(2^{-i})^p` for `i ≥ 1`, kept in logarithmic form.
pub fn hardy_sequence(w: &WeightSpec, gamma: f64, p: f64) -> Result<SequenceWeight> {
    conjugate_exponent(p)?;
    let domain = CuspDomain::new(gamma)?;
    let w = w.clone();
    Ok(SequenceWeight::from_ln_fn(move |i| domain.ln_subdomain_measure(i) + p * w.ln_eval_dyadic(i)))
}

/// `r = 2^{-pβ-γ-1}`, the ratio of the Hardy sequence of `x₁^β`.
fn power_ratio(beta: f64, gamma: f64, p: f64) -> Result<f64> {
    conjugate_exponent(p)?;
    CuspDomain::new(gamma)?;
    let r = (-p * beta - gamma - 1.0).exp2();
    if !(r < 1.0) {
        return Err(Error::Domain(format!(
            "power weight needs beta*p + gamma > -1 (beta = {beta}, gamma = {gamma}, p = {p})"
        )));
    }
    Ok(r)
}

/// Closed-form bound `(1/(1-r))^{1/p} (r^{1-q}/(r^{1-q}-1))^{1/q}` on `A` for `ω = x₁^β`.
pub fn power_a_bound(beta: f64, gamma: f64, p: f64) -> Result<f64> {
    let r = power_ratio(beta, gamma, p)?;
    let q = conjugate_exponent(p)?;
    let s = r.powf(1.0 - q);
    Ok((1.0 / (1.0 - r)).powf(1.0 / p) * (s / (s - 1.0)).powf(1.0 / q))
}

/// `4 (1/(r(1-r)))^{1/p} (1/(r^{1-q}-1))^{1/q}`, the bound on `C_H` for `ω = x₁^β`.
pub fn power_ch_bound(beta: f64, gamma: f64, p: f64) -> Result<f64> {
    let r = power_ratio(beta, gamma, p)?;
    let q = conjugate_exponent(p)?;
    Ok(4.0 * (1.0 / (r * (1.0 - r))).powf(1.0 / p) * (1.0 / (r.powf(1.0 - q) - 1.0)).powf(1.0 / q))
}

/// Hardy data for `ω = (1 - ln x₁)^α`.
#[derive(Clone, Debug, Serialize)]
pub struct LogWeightReport {
    pub alpha: f64,
    pub gamma: f64,
    pub p: f64,
    pub n: usize,
    pub a_n: f64,
    pub a_2n: f64,
    pub a_4n: f64,
    pub k_star: usize,
    pub verdict: Finiteness,
    /// `r̃ = 2^{(γ+1)(q-1)}`.
    pub r_tilde: f64,
    /// `ã = -pα q/p`.
    pub a_tilde: f64,
    /// `∫_1^{N+1} r̃^t (1+t ln2)^ã dt / (r̃^N (1+N ln2)^ã)`.
    pub quotient: f64,
    /// `r̃ / ln r̃`, the limit of `quotient`.
    pub quotient_limit: f64,
    /// `Σ_{i=1}^N r̃^i (1+i ln2)^ã / (r̃^N (1+N ln2)^ã)`.
    pub sum_quotient: f64,
    /// `r̃ / (r̃ - 1)`, the limit of `sum_quotient`.
    pub sum_quotient_limit: f64,
}

/// Relative change of `A_N` under doubling below which the log weight is reported finite.
pub const LOG_STABILITY_TOL: f64 = 1e-6;

/// Required shrink factor of successive doubling increments of `ln A_N` when
/// `A_N` has not yet stabilized to [`LOG_STABILITY_TOL`].
pub const CONTRACTION: f64 = 1.5;

pub fn log_weight_a(alpha: f64, gamma: f64, p: f64, n: usize) -> Result<LogWeightReport> {
    let q = conjugate_exponent(p)?;
    if n == 0 {
        return Err(Error::Domain("truncation N must be at least 1".into()));
    }
    let w = WeightSpec::log_power(alpha);
    let u = hardy_sequence(&w, gamma, p)?;
    let base = crate::hardy::characterization_a(&u, &u, p, n)?;
    let doubled = crate::hardy::characterization_a(&u, &u, p, 2 * n)?;
    let quadrupled = crate::hardy::characterization_a(&u, &u, p, 4 * n)?;
    let d1 = doubled.ln_a - base.ln_a;
    let d2 = quadrupled.ln_a - doubled.ln_a;
    let verdict = if base.a.is_infinite() || quadrupled.a.is_infinite() {
        Finiteness::Infinite
    } else if d1.exp_m1().abs() <= LOG_STABILITY_TOL {
        Finiteness::Finite
    } else if d2 <= d1 / CONTRACTION {
        // increments shrinking geometrically under doubling sum to a finite limit
        Finiteness::Finite
    } else {
        Finiteness::Divergent
    };
    let r_tilde = ((gamma + 1.0) * (q - 1.0)).exp2();
    let a_tilde = -p * alpha * q / p;
    let nf = n as f64;
    let base_log = 1.0 + nf * LN2;
    let integrand = |t: f64| ((t - nf) * r_tilde.ln() + a_tilde * ((1.0 + t * LN2) / base_log).ln()).exp();
    let rule = gauss_legendre(12);
    let mut quotient = 0.0;
    let mut sum_quotient = 0.0;
    for k in (1..=n).rev() {
        let kf = k as f64;
        let part = integrate(integrand, kf, kf + 1.0, &rule);
        let term = integrand(kf);
        quotient += part;
        sum_quotient += term;
        if part < 1e-18 * quotient && term < 1e-18 * sum_quotient {
            break;
        }
    }
    Ok(LogWeightReport {
        alpha,
        gamma,
        p,
        n,
        a_n: base.a,
        a_2n: doubled.a,
        a_4n: quadrupled.a,
        k_star: base.k_star,
        verdict,
        r_tilde,
        a_tilde,
        quotient,
        quotient_limit: r_tilde / r_tilde.ln(),
        sum_quotient,
        sum_quotient_limit: r_tilde / (r_tilde - 1.0),
    })
}

/// Truncations to `x₁ > ε` of the two integrals of `f = (1 - ln x₁)^{-1} x₁^{-γ-1}`,
/// which lies in `L²(Ω, x₁^{γ+1})` but not in `L¹(Ω)`.
#[derive(Clone, Debug, Serialize)]
pub struct CounterexampleIntegrals {
    pub epsilon: f64,
    /// `∫ |f| = ln(1 - ln ε)`, unbounded as `ε → 0`.
    pub l1: f64,
    /// `∫ |f|² x₁^{γ+1} = 1 - 1/(1 - ln ε)`, bounded by 1.
    pub weighted: f64,
}

pub fn counterexample_integrals(gamma: f64, epsilon: f64) -> Result<CounterexampleIntegrals> {
    CuspDomain::new(gamma)?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!("epsilon = {epsilon} must lie in (0, 1)")));
    }
    let m = 1.0 - epsilon.ln();
    Ok(CounterexampleIntegrals { epsilon, l1: m.ln(), weighted: 1.0 - 1.0 / m })
}
