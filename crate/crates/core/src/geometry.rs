//! The cusp domain `Ω = {0 < x₁ < 1, 0 < x₂ < x₁^γ}` and its dyadic cover.
//!
//! `Ω_i` is the part of `Ω` over `2^{-(i+2)} < x₁ < 2^{-i}`; consecutive
//! pieces overlap in `B_i = Ω_{i-1} ∩ Ω_i`, the part over
//! `(2^{-(i+1)}, 2^{-i})`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// `C_γ` in `|Ω_i| = C_γ 2^{-(γ+1)i}`.
pub fn measure_constant(gamma: f64) -> f64 {
    (1.0 - (-2.0 * (gamma + 1.0)).exp2()) / (gamma + 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CuspDomain {
    gamma: f64,
}

impl CuspDomain {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma >= 1.0) {
            return Err(Error::Domain(format!("cusp exponent gamma = {gamma} must be >= 1")));
        }
        Ok(Self { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Height `x₁^γ` of the domain over `x₁`.
    pub fn height(&self, x1: f64) -> f64 {
        x1.powf(self.gamma)
    }

    pub fn contains(&self, x: [f64; 2]) -> bool {
        x[0] > 0.0 && x[0] < 1.0 && x[1] > 0.0 && x[1] < self.height(x[0])
    }

    /// `x₁`-range `(2^{-(i+2)}, 2^{-i})` of `Ω_i`.
    pub fn strip_bounds(&self, i: usize) -> (f64, f64) {
        (exp2i(-(i as i64) - 2), exp2i(-(i as i64)))
    }

    pub fn in_subdomain(&self, i: usize, x: [f64; 2]) -> bool {
        let (a, b) = self.strip_bounds(i);
        x[0] > a && x[0] < b && self.contains(x)
    }

    /// Closure of `Ω_i` enlarged by `tol` times the local length scales.
    fn in_subdomain_closure(&self, i: usize, x: [f64; 2], tol: f64) -> bool {
        let (a, b) = self.strip_bounds(i);
        let h = self.height(b);
        x[0] >= a - tol * b
            && x[0] <= b + tol * b
            && x[1] >= -tol * h
            && x[1] <= self.height(x[0].max(0.0)) + tol * h
    }

    pub fn subdomain_measure(&self, i: usize) -> f64 {
        self.ln_subdomain_measure(i).exp()
    }

    /// `ln |Ω_i|`, usable for indices where `|Ω_i|` underflows.
    pub fn ln_subdomain_measure(&self, i: usize) -> f64 {
        measure_constant(self.gamma).ln() - (self.gamma + 1.0) * i as f64 * std::f64::consts::LN_2
    }

    /// `|B_i|` for `i ≥ 1`.
    pub fn overlap_measure(&self, i: usize) -> Result<f64> {
        if i == 0 {
            return Err(Error::Domain("overlap B_i is defined for i >= 1".into()));
        }
        let g1 = self.gamma + 1.0;
        Ok((1.0 - (-g1).exp2()) / g1 * (-g1 * i as f64).exp2())
    }

    /// Indices `i` with `x₁` strictly inside the range of `Ω_i`.
    pub fn covering_indices(&self, x1: f64) -> Vec<usize> {
        if !(x1 > 0.0 && x1 < 1.0) {
            return Vec::new();
        }
        let k = (-x1.log2()).floor() as i64;
        (k - 2..=k + 1)
            .filter(|&i| i >= 0)
            .map(|i| i as usize)
            .filter(|&i| {
                let (a, b) = self.strip_bounds(i);
                x1 > a && x1 < b
            })
            .collect()
    }

    /// Ball certificate showing `Ω_i` is star-shaped with respect to a ball.
    pub fn star_shape_cert(&self, i: usize) -> StarShapeCert {
        let g = self.gamma;
        let rho = (-g * (i as f64 + 2.0)).exp2();
        let r = rho / (2.0 * g);
        let b = exp2i(-(i as i64));
        StarShapeCert {
            subdomain: i,
            outer_radius: 2.0 * b,
            rho,
            inner_radius: r,
            center: [b - r, r],
        }
    }

    /// Samples `n_samples` pairs `(y, x)` with `y ∈ Ω_i` and `x` in the
    /// certificate ball and checks that every segment `[x, y]` stays in the
    /// closure of `Ω_i`. A second batch of the same size draws `y` from the
    /// corner next to the ball, where the segment slopes are smallest.
    pub fn verify_star_shaped(&self, i: usize, n_samples: usize, seed: u64) -> StarShapeReport {
        let cert = self.star_shape_cert(i);
        let (a, b) = self.strip_bounds(i);
        let r = cert.inner_radius;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((i as u64) << 32));
        let mut report = StarShapeReport {
            subdomain: i,
            samples: 0,
            critical_samples: 0,
            segment_points: SEGMENT_POINTS,
            segment_violations: 0,
            distance_violations: 0,
            min_critical_slope: f64::INFINITY,
        };
        let hb = self.height(b);
        let corner = b - 2.0 * r;
        let hc = self.height(corner);
        for batch in 0..2 {
            for _ in 0..n_samples {
                let y = if batch == 0 {
                    self.sample_region(&mut rng, a, b, 0.0, hb)
                } else {
                    self.sample_region(&mut rng, corner, b, hc, hb)
                };
                let x = sample_ball(&mut rng, cert.center, r);
                if batch == 0 {
                    report.samples += 1;
                } else {
                    report.critical_samples += 1;
                    let dx = (y[0] - x[0]).abs();
                    let slope = if dx == 0.0 { f64::INFINITY } else { (y[1] - x[1]).abs() / dx };
                    report.min_critical_slope = report.min_critical_slope.min(slope);
                }
                for z in [x, y] {
                    let n = z[0].hypot(z[1]);
                    if !(z[0] <= n && n <= std::f64::consts::SQRT_2 * z[0]) {
                        report.distance_violations += 1;
                    }
                }
                let ok = (0..SEGMENT_POINTS).all(|j| {
                    let t = j as f64 / (SEGMENT_POINTS - 1) as f64;
                    let z = [x[0] + t * (y[0] - x[0]), x[1] + t * (y[1] - x[1])];
                    self.in_subdomain_closure(i, z, CLOSURE_TOL)
                });
                if !ok {
                    report.segment_violations += 1;
                }
            }
        }
        report
    }

    /// Uniform point of `Ω ∩ ([x0,x1] × [y0,y1])` by rejection.
    fn sample_region<R: Rng>(
        &self,
        rng: &mut R,
        x0: f64,
        x1: f64,
        y0: f64,
        y1: f64,
    ) -> [f64; 2] {
        loop {
            let z = [rng.gen_range(x0..x1), rng.gen_range(y0..y1)];
            if z[0] > 0.0 && z[1] < self.height(z[0]) && z[1] > 0.0 {
                return z;
            }
        }
    }
}

const SEGMENT_POINTS: usize = 256;
const CLOSURE_TOL: f64 = 1e-12;

fn sample_ball<R: Rng>(rng: &mut R, c: [f64; 2], r: f64) -> [f64; 2] {
    loop {
        let (s, t): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if s * s + t * t < 1.0 {
            return [c[0] + r * s, c[1] + r * t];
        }
    }
}

fn exp2i(k: i64) -> f64 {
    (k as f64).exp2()
}

/// `Ω_i` lies in a ball of radius `R` and is star-shaped with respect to the
/// ball of radius `r` about `center`.
#[derive(Clone, Debug, Serialize)]
pub struct StarShapeCert {
    pub subdomain: usize,
    pub outer_radius: f64,
    /// `2^{-γ(i+2)}`, the height of the cusp at the left end of `Ω_i`.
    pub rho: f64,
    pub inner_radius: f64,
    pub center: [f64; 2],
}

impl StarShapeCert {
    pub fn radius_ratio(&self) -> f64 {
        self.outer_radius / self.inner_radius
    }

    /// `2R/r`, which bounds the divergence constant of `Ω_i` for `p = 2`.
    pub fn divergence_constant(&self) -> f64 {
        2.0 * self.radius_ratio()
    }
}

/// `R/r = γ 2^{γ(i+2) - i + 2}`.
pub fn radius_ratio_closed_form(gamma: f64, i: usize) -> f64 {
    let i = i as f64;
    gamma * (gamma * (i + 2.0) - i + 2.0).exp2()
}

#[derive(Clone, Debug, Serialize)]
pub struct StarShapeReport {
    pub subdomain: usize,
    pub samples: usize,
    pub critical_samples: usize,
    pub segment_points: usize,
    pub segment_violations: usize,
    pub distance_violations: usize,
    /// Smallest `|y₂-x₂|/|y₁-x₁|` over the corner batch.
    pub min_critical_slope: f64,
}
