use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type LnGenerator = Arc<dyn Fn(usize) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Source {
    /// Logarithms of explicitly given terms `w_1, w_2, ...`.
    Table(Arc<[f64]>),
    /// Generator returning `ln w_i`.
    Ln(LnGenerator),
}

/// A positive sequence `w_1, w_2, ...`, stored through its logarithms.
///
/// Working with `ln w_i` keeps geometric sequences such as `2^{-3i}` usable
/// far past the point where the terms themselves underflow.
#[derive(Clone)]
pub struct SequenceWeight {
    source: Source,
}

impl fmt::Debug for SequenceWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.source {
            Source::Table(t) => f.debug_struct("SequenceWeight").field("table_len", &t.len()).finish(),
            Source::Ln(_) => f.write_str("SequenceWeight(generator)"),
        }
    }
}

impl SequenceWeight {
    /// Finite table of terms; `terms[0]` is `w_1`.
    pub fn from_terms(terms: &[f64]) -> Result<Self> {
        let mut ln = Vec::with_capacity(terms.len());
        for (k, &w) in terms.iter().enumerate() {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Data(format!("weight term {} = {w} is not positive and finite", k + 1)));
            }
            ln.push(w.ln());
        }
        Ok(Self { source: Source::Table(ln.into()) })
    }

    /// Finite table given by logarithms of the terms.
    pub fn from_ln_terms(ln_terms: &[f64]) -> Result<Self> {
        if let Some(k) = ln_terms.iter().position(|x| !x.is_finite()) {
            return Err(Error::Data(format!("log weight term {} is not finite", k + 1)));
        }
        Ok(Self { source: Source::Table(ln_terms.to_vec().into()) })
    }

    /// Unbounded sequence given by its terms. Terms are validated when read.
    pub fn from_fn<F>(f: F) -> Self
    where
        F: Fn(usize) -> f64 + Send + Sync + 'static,
    {
        Self::from_ln_fn(move |i| {
            let w = f(i);
            if w > 0.0 { w.ln() } else { f64::NAN }
        })
    }

    /// Unbounded sequence given by `i ↦ ln w_i`.
    pub fn from_ln_fn<F>(f: F) -> Self
    where
        F: Fn(usize) -> f64 + Send + Sync + 'static,
    {
        Self { source: Source::Ln(Arc::new(f)) }
    }

    /// `w_i = c` for all `i`.
    pub fn constant(c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::Data(format!("constant weight {c} is not positive and finite")));
        }
        let l = c.ln();
        Ok(Self::from_ln_fn(move |_| l))
    }

    /// `w_i = i^s`.
    pub fn power(s: f64) -> Self {
        Self::from_ln_fn(move |i| s * (i as f64).ln())
    }

    /// `w_i = c r^i`.
    pub fn geometric(c: f64, r: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0 && r.is_finite() && r > 0.0) {
            return Err(Error::Data(format!("geometric weight needs c, r > 0 (got {c}, {r})")));
        }
        let (lc, lr) = (c.ln(), r.ln());
        Ok(Self::from_ln_fn(move |i| lc + i as f64 * lr))
    }

    /// Number of available terms, `None` for generators.
    pub fn len(&self) -> Option<usize> {
        match &self.source {
            Source::Table(t) => Some(t.len()),
            Source::Ln(_) => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    /// Whether at least `n` terms are available.
    pub fn has_terms(&self, n: usize) -> bool {
        self.len().map_or(true, |l| l >= n)
    }

    /// `ln w_i`, with `i ≥ 1`.
    pub fn ln_term(&self, i: usize) -> Result<f64> {
        if i == 0 {
            return Err(Error::Domain("sequence weights are indexed from 1".into()));
        }
        let l = match &self.source {
            Source::Table(t) => *t.get(i - 1).ok_or_else(|| {
                Error::Shape(format!("weight table has {} terms, index {i} requested", t.len()))
            })?,
            Source::Ln(f) => f(i),
        };
        if !l.is_finite() {
            return Err(Error::Data(format!("weight term {i} is not positive and finite")));
        }
        Ok(l)
    }

    pub fn term(&self, i: usize) -> Result<f64> {
        self.ln_term(i).map(f64::exp)
    }

    /// `ln w_1, ..., ln w_n`.
    pub fn ln_terms(&self, n: usize) -> Result<Vec<f64>> {
        (1..=n).map(|i| self.ln_term(i)).collect()
    }

    pub fn terms(&self, n: usize) -> Result<Vec<f64>> {
        (1..=n).map(|i| self.term(i)).collect()
    }

    /// `λ w`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Data(format!("scale factor {lambda} is not positive and finite")));
        }
        let l = lambda.ln();
        Ok(self.map_ln(move |x| x + l))
    }

    /// `w^s`.
    pub fn powf(&self, s: f64) -> Self {
        self.map_ln(move |x| s * x)
    }

    fn map_ln<F>(&self, g: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        match &self.source {
            Source::Table(t) => Self { source: Source::Table(t.iter().map(|&x| g(x)).collect()) },
            Source::Ln(f) => {
                let f = Arc::clone(f);
                Self::from_ln_fn(move |i| g(f(i)))
            }
        }
    }
}

/// Sum of positive numbers given by their logarithms, kept as `s · e^shift`
/// so that neither tiny nor huge partial sums leave the floating point range.
#[derive(Clone, Copy, Debug)]
pub(crate) struct LogSum {
    shift: f64,
    scaled: f64,
}

impl LogSum {
    pub(crate) fn new() -> Self {
        Self { shift: f64::NEG_INFINITY, scaled: 0.0 }
    }

    pub(crate) fn add_ln(&mut self, x: f64) {
        if self.scaled == 0.0 {
            self.shift = x;
            self.scaled = 1.0;
        } else if x > self.shift {
            self.scaled = self.scaled * (self.shift - x).exp() + 1.0;
            self.shift = x;
        } else {
            self.scaled += (x - self.shift).exp();
        }
    }

    /// Logarithm of the sum; `-inf` for the empty sum.
    pub(crate) fn ln(&self) -> f64 {
        if self.scaled == 0.0 { f64::NEG_INFINITY } else { self.shift + self.scaled.ln() }
    }
}
