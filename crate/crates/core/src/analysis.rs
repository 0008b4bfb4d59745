//! Concentration of simulated trajectories around the ODE solution, its
//! scaling in `n`, and the cover-time threshold experiment.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::coupon::{self, make_coupon_spec, TruncationLevel};
use crate::error::{check_dim, Error, Result};
use crate::mc::{self, RunPlan, DEFAULT_GRID_POINTS};
use crate::ode::{self, IntegratorConfig, Trajectory};
use crate::rng::derive_seed;

/// Gumbel rows carry the exact inclusion–exclusion tail up to this `n`.
pub const EXACT_ORACLE_MAX_N: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationReport {
    pub run_index: usize,
    pub sup_deviation: f64,
    pub argmax_s: f64,
    pub per_coordinate: Vec<f64>,
    pub compared_points: usize,
    /// Steps between grid samples divided by `n`, when known.
    pub grid_gap_bound: Option<f64>,
}

/// Max over the shared grid prefix and all coordinates of `|a - b|`.
///
/// The prefix is the leading run of points whose `s` values agree exactly,
/// cut at the earlier domain exit of the two trajectories.
pub fn sup_deviation(a: &Trajectory, b: &Trajectory) -> Result<DeviationReport> {
    let dim = a.dim();
    check_dim(dim, b.dim())?;
    let cutoff = match (a.sigma_exit(), b.sigma_exit()) {
        (Some(x), Some(y)) => x.min(y),
        (Some(x), None) | (None, Some(x)) => x,
        (None, None) => f64::INFINITY,
    };

    let mut per_coordinate = vec![0.0_f64; dim];
    let mut sup = 0.0_f64;
    let mut argmax_s = f64::NAN;
    let mut compared = 0usize;

    for (p, q) in a.points().iter().zip(b.points()) {
        if p.s != q.s || p.s > cutoff {
            break;
        }
        if compared == 0 {
            argmax_s = p.s;
        }
        compared += 1;
        for (l, (x, y)) in p.z.iter().zip(&q.z).enumerate() {
            let d = libm::fabs(x - y);
            per_coordinate[l] = per_coordinate[l].max(d);
            if d > sup {
                sup = d;
                argmax_s = p.s;
            }
        }
    }

    if compared == 0 {
        return Err(Error::NoCommonGrid);
    }
    Ok(DeviationReport {
        run_index: 0,
        sup_deviation: sup,
        argmax_s,
        per_coordinate,
        compared_points: compared,
        grid_gap_bound: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparedRun {
    pub simulated: Trajectory,
    pub ode: Trajectory,
    pub deviation: DeviationReport,
}

/// Grid used by [`compare_run`]: step `h`, about [`DEFAULT_GRID_POINTS`] points.
pub fn default_config(h: f64, s_max: f64) -> Result<IntegratorConfig> {
    IntegratorConfig::with_target_points(h, s_max, DEFAULT_GRID_POINTS)
}

/// One simulation against RK4 on a shared grid ending at `s_max`.
pub fn compare_run(n: usize, l: TruncationLevel, s_max: f64, seed: u64, h: f64) -> Result<ComparedRun> {
    compare_run_with(n, l, s_max, seed, default_config(h, s_max)?)
}

pub fn compare_run_with(
    n: usize,
    l: TruncationLevel,
    s_max: f64,
    seed: u64,
    config: IntegratorConfig,
) -> Result<ComparedRun> {
    let plan = RunPlan::with_scaled_horizon(n, l, s_max, config, seed, 1)?;
    let ode = coupon_reference(&plan)?;
    compare_planned(&plan, 0, ode)
}

/// RK4 solution of the coupon system on `plan`'s grid.
pub fn coupon_reference(plan: &RunPlan) -> Result<Trajectory> {
    let spec = make_coupon_spec(plan.truncation(), plan.s_max())?;
    ode::integrate_on(&spec, &coupon::initial_state(plan.truncation()), plan.grid())
}

/// Simulates run `run_index` of `plan` and measures it against `ode`.
pub fn compare_planned(plan: &RunPlan, run_index: usize, ode: Trajectory) -> Result<ComparedRun> {
    let simulated = mc::simulate(plan, run_index)?;
    let mut deviation = sup_deviation(&simulated, &ode)?;
    deviation.run_index = run_index;
    deviation.grid_gap_bound = Some(plan.grid_gap_bound());
    Ok(ComparedRun { simulated, ode, deviation })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRow {
    pub n: usize,
    pub runs: usize,
    pub mean_sup_dev: f64,
    pub std_error: f64,
}

impl ScalingRow {
    pub fn from_deviations(n: usize, sup_devs: &[f64]) -> Self {
        let runs = sup_devs.len();
        let (mean, std_error) = mean_and_std_error(sup_devs);
        ScalingRow { n, runs, mean_sup_dev: mean, std_error }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    /// Decay exponent: `mean_sup_dev ~ exp(intercept) * n^(-alpha)`.
    pub alpha: f64,
    pub intercept: f64,
}

impl ScalingReport {
    /// Sorts rows by `n` and fits `ln(mean) = intercept - alpha ln(n)` by
    /// least squares.
    pub fn from_rows(mut rows: Vec<ScalingRow>) -> Result<Self> {
        rows.sort_by_key(|r| r.n);
        if rows.len() < 2 {
            return Err(Error::DegenerateFit("need at least two sizes".into()));
        }
        if let Some(r) = rows.iter().find(|r| !(r.mean_sup_dev > 0.0)) {
            return Err(Error::DegenerateFit(format!("mean deviation {} at n = {}", r.mean_sup_dev, r.n)));
        }
        let xs: Vec<f64> = rows.iter().map(|r| libm::log(r.n as f64)).collect();
        let ys: Vec<f64> = rows.iter().map(|r| libm::log(r.mean_sup_dev)).collect();
        let k = xs.len() as f64;
        let x_bar = xs.iter().sum::<f64>() / k;
        let y_bar = ys.iter().sum::<f64>() / k;
        let sxx: f64 = xs.iter().map(|x| (x - x_bar) * (x - x_bar)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - x_bar) * (y - y_bar)).sum();
        if sxx == 0.0 {
            return Err(Error::DegenerateFit("no spread in ln n".into()));
        }
        let slope = sxy / sxx;
        Ok(ScalingReport { rows, alpha: -slope, intercept: y_bar - slope * x_bar })
    }

    pub fn is_strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].mean_sup_dev < w[0].mean_sup_dev)
    }
}

/// Plan for size `n` in a scaling study; the master seed is split per `n`.
pub fn scaling_plan(
    n: usize,
    runs_per_n: usize,
    master_seed: u64,
    l: TruncationLevel,
    s_max: f64,
    config: IntegratorConfig,
) -> Result<RunPlan> {
    RunPlan::with_scaled_horizon(n, l, s_max, config, derive_seed(master_seed, n as u64), runs_per_n)
}

pub fn validate_scaling_sizes(ns: &[usize]) -> Result<()> {
    if ns.len() < 2 {
        return Err(Error::invalid("scaling study needs at least two values of n"));
    }
    if let Some(&n) = ns.iter().find(|&&n| n < 10) {
        return Err(Error::invalid(format!("n = {n} is below the minimum of 10")));
    }
    Ok(())
}

pub fn scaling_study(
    ns: &[usize],
    runs_per_n: usize,
    master_seed: u64,
    l: TruncationLevel,
    s_max: f64,
) -> Result<ScalingReport> {
    scaling_study_with(ns, runs_per_n, master_seed, l, s_max, default_config(IntegratorConfig::default().step, s_max)?)
}

pub fn scaling_study_with(
    ns: &[usize],
    runs_per_n: usize,
    master_seed: u64,
    l: TruncationLevel,
    s_max: f64,
    config: IntegratorConfig,
) -> Result<ScalingReport> {
    validate_scaling_sizes(ns)?;
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let plan = scaling_plan(n, runs_per_n, master_seed, l, s_max, config)?;
        let ode = coupon_reference(&plan)?;
        let mut devs = Vec::with_capacity(runs_per_n);
        for run in 0..runs_per_n {
            devs.push(sup_deviation(&mc::simulate(&plan, run)?, &ode)?.sup_deviation);
        }
        rows.push(ScalingRow::from_deviations(n, &devs));
    }
    ScalingReport::from_rows(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GumbelRow {
    pub c: f64,
    /// `ceil(n ln n + c n)`, floored at zero.
    pub threshold: u64,
    pub empirical: f64,
    pub std_error: f64,
    /// `1 - exp(-exp(-exp(c)))`
    pub reference_nested: f64,
    /// `1 - exp(-exp(-c))`
    pub reference_classical: f64,
    pub exact: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GumbelReport {
    pub n: usize,
    pub trials: usize,
    pub rows: Vec<GumbelRow>,
}

pub fn gumbel_threshold(n: usize, c: f64) -> u64 {
    let n_f = n as f64;
    libm::ceil(n_f * libm::log(n_f) + c * n_f).max(0.0) as u64
}

pub fn reference_nested(c: f64) -> f64 {
    1.0 - libm::exp(-libm::exp(-libm::exp(c)))
}

pub fn reference_classical(c: f64) -> f64 {
    1.0 - libm::exp(-libm::exp(-c))
}

impl GumbelReport {
    /// Tail estimates `P(T >= threshold(c))` from observed cover times.
    pub fn from_cover_times(n: usize, cs: &[f64], times: &[u64]) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::invalid("no cover times"));
        }
        let trials = times.len() as f64;
        let mut rows = Vec::with_capacity(cs.len());
        for &c in cs {
            if !c.is_finite() {
                return Err(Error::invalid("c must be finite"));
            }
            let threshold = gumbel_threshold(n, c);
            let hits = times.iter().filter(|&&t| t >= threshold).count();
            let p = hits as f64 / trials;
            let exact = if n <= EXACT_ORACLE_MAX_N {
                Some(coupon::exact_cover_tail_at_least(n, threshold)?)
            } else {
                None
            };
            rows.push(GumbelRow {
                c,
                threshold,
                empirical: p,
                std_error: libm::sqrt(p * (1.0 - p) / trials),
                reference_nested: reference_nested(c),
                reference_classical: reference_classical(c),
                exact,
            });
        }
        Ok(GumbelReport { n, trials: times.len(), rows })
    }
}

pub fn validate_gumbel(n: usize, trials: usize) -> Result<()> {
    if trials < 100 {
        return Err(Error::invalid("gumbel experiment needs at least 100 trials"));
    }
    if n < 10 {
        return Err(Error::invalid("gumbel experiment needs n >= 10"));
    }
    Ok(())
}

/// Cover time of trial `i`, seeded by `derive_seed(master_seed, i)`.
pub fn gumbel_trial(n: usize, master_seed: u64, trial: usize) -> Result<u64> {
    coupon::cover_time(n, derive_seed(master_seed, trial as u64))
}

pub fn gumbel_experiment(n: usize, trials: usize, cs: &[f64], master_seed: u64) -> Result<GumbelReport> {
    validate_gumbel(n, trials)?;
    let times = (0..trials).map(|i| gumbel_trial(n, master_seed, i)).collect::<Result<Vec<_>>>()?;
    GumbelReport::from_cover_times(n, cs, &times)
}

/// Sample mean and standard error of the mean (zero for fewer than two values).
pub fn mean_and_std_error(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let k = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / k;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1.0);
    (mean, libm::sqrt(var / k))
}
