//! The coupon-collecting process.
//!
//! Each step draws one of `n` coupon types uniformly at random. The tracked
//! coordinates are `Y^i`, the number of types held in exactly `i` copies, for
//! `0 <= i <= l`, plus an overflow coordinate `l + 1` for types with more
//! than `l` copies. The drift is
//!
//! ```text
//! f_0     = -z_0
//! f_i     = z_{i-1} - z_i      (1 <= i <= l)
//! f_{l+1} = z_l
//! ```
//!
//! whose entries sum to zero, so the total mass `sum_i z_i = 1` is conserved.
//! Started from `z = (1, 0, ..., 0)` the solution is the Poisson profile
//! `z_i(s) = s^i e^{-s} / i!`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::process::{DomainBox, Drift, ProcessSpec};
use crate::rng;

pub const DEFAULT_TRUNCATION: usize = 10;
pub const COVER_TIME_CAP: u64 = 1_000_000_000;

/// Highest tracked copy count `l`; types above it share the overflow bucket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TruncationLevel(usize);

impl TruncationLevel {
    pub fn new(l: usize) -> Result<Self> {
        if l == 0 {
            return Err(Error::invalid("truncation level must be at least 1"));
        }
        Ok(TruncationLevel(l))
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// Number of tracked coordinates, `l + 2`.
    pub fn coord_count(self) -> usize {
        self.0 + 2
    }

    #[inline]
    pub fn bucket(self, copies: u32) -> usize {
        (copies as usize).min(self.0 + 1)
    }
}

impl Default for TruncationLevel {
    fn default() -> Self {
        TruncationLevel(DEFAULT_TRUNCATION)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CouponDrift {
    l: TruncationLevel,
}

impl CouponDrift {
    pub fn new(l: TruncationLevel) -> Self {
        CouponDrift { l }
    }
}

impl Drift for CouponDrift {
    fn eval(&self, _s: f64, z: &[f64], out: &mut [f64]) {
        let l = self.l.get();
        out[0] = -z[0];
        for i in 1..=l {
            out[i] = z[i - 1] - z[i];
        }
        out[l + 1] = z[l];
    }
}

pub fn make_coupon_spec(l: TruncationLevel, s_max: f64) -> Result<ProcessSpec> {
    if !(s_max > 0.0) || !s_max.is_finite() {
        return Err(Error::invalid("s_max must be positive and finite"));
    }
    let dim = l.coord_count();
    let domain = DomainBox::uniform(-0.1, s_max + 0.1, -0.1, 1.1, dim)?;
    ProcessSpec::new(dim, CouponDrift::new(l), 1.0, 1.0, domain)
}

/// `(1, 0, ..., 0)`: every type starts with zero copies.
pub fn initial_state(l: TruncationLevel) -> Vec<f64> {
    let mut z = vec![0.0; l.coord_count()];
    z[0] = 1.0;
    z
}

/// `s^i e^{-s} / i!`, evaluated in log space.
pub fn closed_form(s: f64, i: usize) -> f64 {
    if s == 0.0 {
        return if i == 0 { 1.0 } else { 0.0 };
    }
    let i_f = i as f64;
    libm::exp(i_f * libm::log(s) - s - libm::lgamma(i_f + 1.0))
}

/// Closed form of coordinate `i` of the truncated system, including the
/// overflow coordinate `l + 1 = 1 - sum_{j <= l} z_j`.
pub fn closed_form_coordinate(s: f64, i: usize, l: TruncationLevel) -> f64 {
    if i <= l.get() {
        closed_form(s, i)
    } else {
        1.0 - (0..=l.get()).map(|j| closed_form(s, j)).sum::<f64>()
    }
}

/// Which buckets a single draw moved between.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepDelta {
    pub from: usize,
    pub to: usize,
}

impl StepDelta {
    /// `max_l |Y_{t+1}^l - Y_t^l|`.
    pub fn max_increment(self) -> u32 {
        u32::from(self.from != self.to)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CouponState {
    l: TruncationLevel,
    t: u64,
    per_type: Vec<u32>,
    counts_of_counts: Vec<u64>,
    cover_time: Option<u64>,
}

impl CouponState {
    pub fn new(n: usize, l: TruncationLevel) -> Result<Self> {
        if n == 0 || n > u32::MAX as usize {
            return Err(Error::invalid("n must be in 1..=u32::MAX"));
        }
        let mut counts_of_counts = vec![0; l.coord_count()];
        counts_of_counts[0] = n as u64;
        Ok(CouponState { l, t: 0, per_type: vec![0; n], counts_of_counts, cover_time: None })
    }

    /// State reached after the given per-type copy counts; `t` is their sum.
    /// The cover time is unknown for such a state and left unset.
    pub fn from_type_counts(per_type: Vec<u32>, l: TruncationLevel) -> Result<Self> {
        let mut state = CouponState::new(per_type.len(), l)?;
        state.t = per_type.iter().map(|&c| u64::from(c)).sum();
        state.per_type = per_type;
        state.counts_of_counts = state.recount();
        Ok(state)
    }

    pub fn n(&self) -> usize {
        self.per_type.len()
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn truncation(&self) -> TruncationLevel {
        self.l
    }

    pub fn per_type_counts(&self) -> &[u32] {
        &self.per_type
    }

    pub fn counts_of_counts(&self) -> &[u64] {
        &self.counts_of_counts
    }

    pub fn cover_time(&self) -> Option<u64> {
        self.cover_time
    }

    pub fn is_covered(&self) -> bool {
        self.counts_of_counts[0] == 0
    }

    /// `(t/n, Y/n)`.
    pub fn scaled_time(&self) -> f64 {
        self.t as f64 / self.n() as f64
    }

    pub fn scaled_counts(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.counts_of_counts.iter().map(|&c| c as f64 / n).collect()
    }

    pub fn write_scaled_counts(&self, out: &mut [f64]) {
        let n = self.n() as f64;
        for (o, &c) in out.iter_mut().zip(&self.counts_of_counts) {
            *o = c as f64 / n;
        }
    }

    /// Bucket histogram recomputed from the per-type counts.
    pub fn recount(&self) -> Vec<u64> {
        let mut counts = vec![0; self.l.coord_count()];
        for &c in &self.per_type {
            counts[self.l.bucket(c)] += 1;
        }
        counts
    }

    /// Records one draw of type `draw`.
    pub fn step(&mut self, draw: usize) -> Result<StepDelta> {
        let n = self.n();
        if draw >= n {
            return Err(Error::DrawOutOfRange { draw: draw as u64, n: n as u64 });
        }
        Ok(self.step_unchecked(draw))
    }

    #[inline]
    fn step_unchecked(&mut self, draw: usize) -> StepDelta {
        let copies = self.per_type[draw];
        self.per_type[draw] = copies + 1;
        let from = self.l.bucket(copies);
        let to = self.l.bucket(copies + 1);
        if from != to {
            self.counts_of_counts[from] -= 1;
            self.counts_of_counts[to] += 1;
        }
        self.t += 1;
        if from == 0 && self.counts_of_counts[0] == 0 {
            self.cover_time = Some(self.t);
        }
        StepDelta { from, to }
    }

    /// Draws a uniform type from `rng` and records it.
    #[inline]
    pub fn step_random<R: rand::Rng + ?Sized>(&mut self, rng: &mut R) -> StepDelta {
        let draw = rng::uniform_index(rng, self.n() as u32) as usize;
        self.step_unchecked(draw)
    }

    /// Bucket move a draw of `draw` would cause, without applying it.
    pub fn peek(&self, draw: usize) -> StepDelta {
        let copies = self.per_type[draw];
        StepDelta { from: self.l.bucket(copies), to: self.l.bucket(copies + 1) }
    }
}

/// Number of draws until every one of `n` types has been seen.
pub fn cover_time(n: usize, seed: u64) -> Result<u64> {
    cover_time_with_cap(n, seed, COVER_TIME_CAP)
}

pub fn cover_time_with_cap(n: usize, seed: u64, cap: u64) -> Result<u64> {
    let mut state = CouponState::new(n, TruncationLevel(1))?;
    let mut rng = rng::stream(seed);
    while !state.is_covered() {
        if state.t() >= cap {
            return Err(Error::StepCapExceeded { cap });
        }
        state.step_random(&mut rng);
    }
    Ok(state.cover_time().expect("covered state has a cover time"))
}

/// [`exact_cover_tail`] rejects results whose error bound exceeds this
/// fraction of the value.
pub const MAX_RELATIVE_ERROR: f64 = 1e-6;

/// `P(T > k)` for `n` types by inclusion–exclusion:
///
/// ```text
/// P(T > k) = sum_{j=1}^{n} (-1)^{j+1} C(n, j) (1 - j/n)^k
/// ```
///
/// Terms are formed in log space and summed with Neumaier compensation. The
/// term magnitudes are log-concave in `j`, so the series is cut once it is
/// past its peak and terms drop below `1e-30` of the running total.
pub fn exact_cover_tail(n: usize, k: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    // Fewer than n draws cannot cover n types.
    if k < n as u64 {
        return Ok(1.0);
    }
    if n == 1 {
        return Ok(0.0);
    }
    let n_f = n as f64;
    let k_f = k as f64;
    let eps = f64::EPSILON;

    let mut sum = Neumaier::default();
    let mut abs_sum = 0.0;
    let mut err_bound = 0.0;
    let mut log_binom = 0.0;
    let mut prev_mag = 0.0_f64;

    for j in 1..=n {
        let j_f = j as f64;
        log_binom += libm::log((n_f - j_f + 1.0) / j_f);
        // (1 - j/n)^k vanishes at j = n since k >= n >= 1.
        if j == n {
            break;
        }
        let log_power = k_f * libm::log1p(-j_f / n_f);
        let log_mag = log_binom + log_power;
        let mag = libm::exp(log_mag);
        let term = if j % 2 == 1 { mag } else { -mag };
        sum.add(term);
        abs_sum += mag;
        // exp amplifies the absolute error of its argument into a relative
        // one; the argument carries about (|log_power| + j) ulps.
        err_bound += mag * eps * (libm::fabs(log_power) + libm::fabs(log_binom) + 4.0);

        let past_peak = mag < prev_mag;
        if past_peak && mag < 1e-30 * libm::fabs(sum.total()).max(f64::MIN_POSITIVE) {
            break;
        }
        prev_mag = mag;
    }

    let value = sum.total();
    let bound = err_bound + 2.0 * eps * abs_sum;
    if bound > MAX_RELATIVE_ERROR * libm::fabs(value) {
        return Err(Error::PrecisionLoss { value, bound });
    }
    Ok(value.clamp(0.0, 1.0))
}

/// `P(T >= k)`, i.e. `P(T > k - 1)`.
pub fn exact_cover_tail_at_least(n: usize, k: u64) -> Result<f64> {
    match k.checked_sub(1) {
        None => Ok(1.0),
        Some(km1) => exact_cover_tail(n, km1),
    }
}

#[derive(Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if libm::fabs(self.sum) >= libm::fabs(x) {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lv(l: usize) -> TruncationLevel {
        TruncationLevel::new(l).unwrap()
    }

    #[test]
    fn drift_examples() {
        let spec = make_coupon_spec(lv(2), 10.0).unwrap();
        assert_eq!(spec.evaluate_drift(0.0, &[1.0, 0.0, 0.0, 0.0]).unwrap(), vec![-1.0, 1.0, 0.0, 0.0]);
        assert_eq!(spec.evaluate_drift(0.0, &[0.5, 0.5, 0.0, 0.0]).unwrap(), vec![-0.5, 0.0, 0.5, 0.0]);
        assert_eq!(spec.evaluate_drift(0.0, &[0.0, 0.0, 1.0, 0.0]).unwrap(), vec![0.0, 0.0, -1.0, 1.0]);
    }

    #[test]
    fn spec_shape() {
        let spec = make_coupon_spec(lv(10), 4.0).unwrap();
        assert_eq!(spec.coord_count(), 12);
        assert_eq!(spec.increment_bound(), 1.0);
        assert_eq!(spec.magnitude_bound(), 1.0);
        assert_eq!(spec.domain().s_bounds(), (-0.1, 4.1));
        assert!(make_coupon_spec(lv(3), 0.0).is_err());
        assert!(TruncationLevel::new(0).is_err());
    }

    #[test]
    fn closed_form_values() {
        assert_eq!(closed_form(0.0, 0), 1.0);
        assert_eq!(closed_form(0.0, 3), 0.0);
        assert!((closed_form(1.0, 1) - 0.367_879_441_171_442_3).abs() < 1e-15);
        assert!((closed_form(1.0, 2) - 0.183_939_720_585_721_2).abs() < 1e-15);
        // Large i stays finite and tiny instead of overflowing s^i and i!.
        let v = closed_form(3.0, 300);
        assert!((0.0..1e-200).contains(&v));
    }

    #[test]
    fn single_type_step() {
        let mut st = CouponState::new(1, lv(3)).unwrap();
        st.step(0).unwrap();
        assert_eq!(st.counts_of_counts(), &[0, 1, 0, 0, 0]);
        assert_eq!(st.cover_time(), Some(1));
    }

    #[test]
    fn repeated_draws() {
        let mut st = CouponState::new(4, lv(2)).unwrap();
        st.step(0).unwrap();
        st.step(0).unwrap();
        assert_eq!(st.counts_of_counts(), &[3, 0, 1, 0]);
        st.step(0).unwrap();
        st.step(0).unwrap();
        // Overflow to overflow leaves the histogram alone.
        assert_eq!(st.counts_of_counts(), &[3, 0, 0, 1]);
        assert_eq!(st.t(), 4);
        assert_eq!(st.cover_time(), None);
    }

    #[test]
    fn out_of_range_draw() {
        let mut st = CouponState::new(4, lv(2)).unwrap();
        assert_eq!(st.step(4), Err(Error::DrawOutOfRange { draw: 4, n: 4 }));
        assert!(CouponState::new(0, lv(2)).is_err());
    }

    #[test]
    fn from_type_counts_histogram() {
        let st = CouponState::from_type_counts(vec![1, 0, 1, 0], lv(10)).unwrap();
        assert_eq!(&st.counts_of_counts()[..3], &[2, 2, 0]);
        assert_eq!(st.t(), 2);
    }

    #[test]
    fn cover_time_single_type() {
        for seed in 0..20 {
            assert_eq!(cover_time(1, seed).unwrap(), 1);
        }
    }

    #[test]
    fn cover_time_cap() {
        assert_eq!(cover_time_with_cap(1000, 3, 10), Err(Error::StepCapExceeded { cap: 10 }));
    }

    #[test]
    fn exact_tail_small_cases() {
        assert_eq!(exact_cover_tail(1, 0).unwrap(), 1.0);
        assert_eq!(exact_cover_tail(1, 1).unwrap(), 0.0);
        assert!((exact_cover_tail(2, 2).unwrap() - 0.5).abs() < 1e-15);
        assert!((exact_cover_tail(3, 3).unwrap() - 7.0 / 9.0).abs() < 1e-15);
        assert_eq!(exact_cover_tail_at_least(2, 0).unwrap(), 1.0);
    }

    #[test]
    fn exact_tail_flags_cancellation() {
        // k = n sits in the regime where alternating terms of size ~2^n cancel
        // down to n!/n^n.
        assert!(matches!(exact_cover_tail(400, 400), Err(Error::PrecisionLoss { .. })));
    }
}
