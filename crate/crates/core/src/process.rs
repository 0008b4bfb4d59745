//! Process description: drift, bounds and the open domain box.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{check_dim, Error, Result};
use crate::rng;

/// Expected one-step change of each coordinate as a function of scaled time
/// and scaled state. Implementations must be pure.
pub trait Drift: Send + Sync {
    fn eval(&self, s: f64, z: &[f64], out: &mut [f64]);
}

impl<F> Drift for F
where
    F: Fn(f64, &[f64], &mut [f64]) + Send + Sync,
{
    fn eval(&self, s: f64, z: &[f64], out: &mut [f64]) {
        self(s, z, out)
    }
}

/// Open axis-aligned box `(s_low, s_high) x prod_l (z_low[l], z_high[l])`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainBox {
    s_low: f64,
    s_high: f64,
    z_low: Vec<f64>,
    z_high: Vec<f64>,
}

impl DomainBox {
    pub fn new(s_low: f64, s_high: f64, z_low: Vec<f64>, z_high: Vec<f64>) -> Result<Self> {
        check_dim(z_low.len(), z_high.len())?;
        if z_low.is_empty() {
            return Err(Error::invalid("domain needs at least one coordinate"));
        }
        if !(s_low < s_high) || !s_low.is_finite() || !s_high.is_finite() {
            return Err(Error::invalid("domain requires finite s_low < s_high"));
        }
        if z_low
            .iter()
            .zip(&z_high)
            .any(|(lo, hi)| !(lo < hi) || !lo.is_finite() || !hi.is_finite())
        {
            return Err(Error::invalid("domain requires finite z_low[l] < z_high[l]"));
        }
        Ok(DomainBox { s_low, s_high, z_low, z_high })
    }

    /// Same bounds on every coordinate.
    pub fn uniform(s_low: f64, s_high: f64, z_low: f64, z_high: f64, dim: usize) -> Result<Self> {
        DomainBox::new(s_low, s_high, vec![z_low; dim], vec![z_high; dim])
    }

    pub fn dim(&self) -> usize {
        self.z_low.len()
    }

    pub fn s_bounds(&self) -> (f64, f64) {
        (self.s_low, self.s_high)
    }

    pub fn z_low(&self) -> &[f64] {
        &self.z_low
    }

    pub fn z_high(&self) -> &[f64] {
        &self.z_high
    }

    /// Strict membership; the caller guarantees `z.len() == self.dim()`.
    pub fn contains(&self, s: f64, z: &[f64]) -> bool {
        self.s_low < s
            && s < self.s_high
            && z.iter()
                .zip(self.z_low.iter().zip(&self.z_high))
                .all(|(&x, (&lo, &hi))| lo < x && x < hi)
    }
}

/// A point of a scaled trajectory: `s = t/n`, `z = Y_t/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledPoint {
    pub s: f64,
    pub z: Vec<f64>,
}

#[derive(Clone)]
pub struct ProcessSpec {
    coord_count: usize,
    drift: Arc<dyn Drift>,
    increment_bound: f64,
    magnitude_bound: f64,
    domain: DomainBox,
    lipschitz_hint: Option<f64>,
}

impl fmt::Debug for ProcessSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProcessSpec")
            .field("coord_count", &self.coord_count)
            .field("increment_bound", &self.increment_bound)
            .field("magnitude_bound", &self.magnitude_bound)
            .field("domain", &self.domain)
            .field("lipschitz_hint", &self.lipschitz_hint)
            .finish_non_exhaustive()
    }
}

impl ProcessSpec {
    pub fn new(
        coord_count: usize,
        drift: impl Drift + 'static,
        increment_bound: f64,
        magnitude_bound: f64,
        domain: DomainBox,
    ) -> Result<Self> {
        if coord_count == 0 {
            return Err(Error::invalid("coord_count must be positive"));
        }
        check_dim(coord_count, domain.dim())?;
        for (name, v) in [("increment_bound", increment_bound), ("magnitude_bound", magnitude_bound)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(alloc::format!("{name} must be positive and finite")));
            }
        }
        Ok(ProcessSpec {
            coord_count,
            drift: Arc::new(drift),
            increment_bound,
            magnitude_bound,
            domain,
            lipschitz_hint: None,
        })
    }

    pub fn with_lipschitz_hint(mut self, hint: f64) -> Result<Self> {
        if !(hint >= 0.0) || !hint.is_finite() {
            return Err(Error::invalid("lipschitz hint must be finite and non-negative"));
        }
        self.lipschitz_hint = Some(hint);
        Ok(self)
    }

    pub fn with_increment_bound(mut self, bound: f64) -> Result<Self> {
        if !(bound > 0.0) || !bound.is_finite() {
            return Err(Error::invalid("increment_bound must be positive and finite"));
        }
        self.increment_bound = bound;
        Ok(self)
    }

    /// Replaces the drift, keeping bounds and domain.
    pub fn with_drift(mut self, drift: impl Drift + 'static) -> Self {
        self.drift = Arc::new(drift);
        self
    }

    pub fn coord_count(&self) -> usize {
        self.coord_count
    }

    pub fn increment_bound(&self) -> f64 {
        self.increment_bound
    }

    pub fn magnitude_bound(&self) -> f64 {
        self.magnitude_bound
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn lipschitz_hint(&self) -> Option<f64> {
        self.lipschitz_hint
    }

    pub fn drift(&self) -> &dyn Drift {
        &*self.drift
    }

    /// Writes `f(s, z)` into `out` without checks. Hot path for the integrator.
    #[inline]
    pub fn drift_into(&self, s: f64, z: &[f64], out: &mut [f64]) {
        self.drift.eval(s, z, out);
    }

    pub fn evaluate_drift(&self, s: f64, z: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.coord_count, z.len())?;
        let mut out = vec![0.0; self.coord_count];
        self.drift.eval(s, z, &mut out);
        if out.iter().any(|v| !v.is_finite()) && self.domain.contains(s, z) {
            return Err(Error::DriftEvaluation { s });
        }
        Ok(out)
    }

    pub fn in_domain(&self, s: f64, z: &[f64]) -> Result<bool> {
        check_dim(self.coord_count, z.len())?;
        Ok(self.domain.contains(s, z))
    }

    /// Largest observed `|f_l(u) - f_l(v)| / ||u - v||_1` over `sample_count`
    /// pairs of points `(s, z)` drawn uniformly from the domain box.
    ///
    /// Pairs are drawn sequentially from one stream, so a longer run with the
    /// same seed sees every pair of a shorter one.
    pub fn estimate_lipschitz(&self, sample_count: usize, seed: u64) -> Result<f64> {
        if sample_count < 2 {
            return Err(Error::invalid("estimate_lipschitz needs sample_count >= 2"));
        }
        let dim = self.coord_count;
        let (s_low, s_high) = self.domain.s_bounds();
        let mut rng = rng::stream(seed);
        let mut zu = vec![0.0; dim];
        let mut zv = vec![0.0; dim];
        let mut fu = vec![0.0; dim];
        let mut fv = vec![0.0; dim];
        let mut tracker = LipschitzTracker::default();

        for _ in 0..sample_count {
            let su = rng::uniform_real(&mut rng, s_low, s_high);
            for (l, x) in zu.iter_mut().enumerate() {
                *x = rng::uniform_real(&mut rng, self.domain.z_low[l], self.domain.z_high[l]);
            }
            let sv = rng::uniform_real(&mut rng, s_low, s_high);
            for (l, x) in zv.iter_mut().enumerate() {
                *x = rng::uniform_real(&mut rng, self.domain.z_low[l], self.domain.z_high[l]);
            }
            tracker.observe(self, (su, &zu), (sv, &zv), &mut fu, &mut fv)?;
        }
        tracker.finish()
    }
}

/// Running maximum of difference quotients; zero-distance pairs are skipped.
#[derive(Default)]
struct LipschitzTracker {
    best: f64,
    usable: usize,
}

impl LipschitzTracker {
    fn observe(
        &mut self,
        spec: &ProcessSpec,
        (su, zu): (f64, &[f64]),
        (sv, zv): (f64, &[f64]),
        fu: &mut [f64],
        fv: &mut [f64],
    ) -> Result<()> {
        let dist = libm::fabs(su - sv) + zu.iter().zip(zv).map(|(a, b)| libm::fabs(a - b)).sum::<f64>();
        if dist == 0.0 {
            return Ok(());
        }
        self.usable += 1;
        spec.drift.eval(su, zu, fu);
        spec.drift.eval(sv, zv, fv);
        for (a, b) in fu.iter().zip(fv.iter()) {
            if !a.is_finite() {
                return Err(Error::DriftEvaluation { s: su });
            }
            if !b.is_finite() {
                return Err(Error::DriftEvaluation { s: sv });
            }
            self.best = self.best.max(libm::fabs(a - b) / dist);
        }
        Ok(())
    }

    fn finish(self) -> Result<f64> {
        if self.usable == 0 {
            Err(Error::DegenerateSamples)
        } else {
            Ok(self.best)
        }
    }
}
