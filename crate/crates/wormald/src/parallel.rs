//! Parallel versions of the multi-run experiments.
//!
//! Work is split by run index and collected in index order, so every result
//! is bit-identical to the sequential functions in `wormald_core::analysis`.

use rayon::prelude::*;
use wormald_core::analysis::{
    self, compare_planned, coupon_reference, sup_deviation, ComparedRun, GumbelReport, ScalingReport, ScalingRow,
};
use wormald_core::coupon::TruncationLevel;
use wormald_core::mc::{self, RunPlan};
use wormald_core::ode::{IntegratorConfig, Trajectory};
use wormald_core::Result;

pub fn simulate_all(plan: &RunPlan) -> Result<Vec<Trajectory>> {
    (0..plan.run_count()).into_par_iter().map(|i| mc::simulate(plan, i)).collect()
}

pub fn compare_all(plan: &RunPlan) -> Result<Vec<ComparedRun>> {
    let ode = coupon_reference(plan)?;
    (0..plan.run_count()).into_par_iter().map(|i| compare_planned(plan, i, ode.clone())).collect()
}

pub fn max_increment_all(plan: &RunPlan) -> Result<Vec<u32>> {
    (0..plan.run_count()).into_par_iter().map(|i| mc::max_increment(plan, i)).collect()
}

pub fn sup_deviations(plan: &RunPlan) -> Result<Vec<f64>> {
    let ode = coupon_reference(plan)?;
    (0..plan.run_count())
        .into_par_iter()
        .map(|i| Ok(sup_deviation(&mc::simulate(plan, i)?, &ode)?.sup_deviation))
        .collect()
}

pub fn scaling_study(
    ns: &[usize],
    runs_per_n: usize,
    master_seed: u64,
    l: TruncationLevel,
    s_max: f64,
    config: IntegratorConfig,
) -> Result<ScalingReport> {
    analysis::validate_scaling_sizes(ns)?;
    let rows = ns
        .iter()
        .map(|&n| {
            let plan = analysis::scaling_plan(n, runs_per_n, master_seed, l, s_max, config)?;
            Ok(ScalingRow::from_deviations(n, &sup_deviations(&plan)?))
        })
        .collect::<Result<Vec<_>>>()?;
    ScalingReport::from_rows(rows)
}

pub fn cover_times(n: usize, trials: usize, master_seed: u64) -> Result<Vec<u64>> {
    (0..trials).into_par_iter().map(|i| analysis::gumbel_trial(n, master_seed, i)).collect()
}

pub fn gumbel_experiment(n: usize, trials: usize, cs: &[f64], master_seed: u64) -> Result<GumbelReport> {
    analysis::validate_gumbel(n, trials)?;
    GumbelReport::from_cover_times(n, cs, &cover_times(n, trials, master_seed)?)
}
