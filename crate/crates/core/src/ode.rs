//! Fixed-step RK4 integration of `dz/ds = f(s, z)` on a sampling grid.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::process::{ProcessSpec, ScaledPoint};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    /// RK4 step `h`.
    pub step: f64,
    /// Emit every `grid_stride`-th step.
    pub grid_stride: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig { step: 1e-3, grid_stride: 1 }
    }
}

impl IntegratorConfig {
    pub fn new(step: f64, grid_stride: usize) -> Result<Self> {
        let cfg = IntegratorConfig { step, grid_stride };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Stride giving roughly `points` grid points over `[0, s_max]`.
    pub fn with_target_points(step: f64, s_max: f64, points: usize) -> Result<Self> {
        let steps = s_max / step;
        let stride = libm::round(steps / points.max(1) as f64).max(1.0) as usize;
        IntegratorConfig::new(step, stride)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::invalid("step size must be positive and finite"));
        }
        if self.grid_stride == 0 {
            return Err(Error::invalid("grid stride must be at least 1"));
        }
        Ok(())
    }
}

/// The step schedule shared by the integrator and the simulator.
///
/// Step `j` starts at `s = j * step`; the last step is shortened so that it
/// ends exactly on `s_max`. Grid points are the step boundaries whose index
/// is a multiple of `stride`, plus the final boundary. Both consumers compute
/// `s` through [`Grid::step_s`], so their grids agree bit for bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    step: f64,
    stride: usize,
    s_max: f64,
    total_steps: usize,
}

impl Grid {
    pub fn new(config: IntegratorConfig, s_max: f64) -> Result<Self> {
        config.validate()?;
        if !(s_max >= 0.0) || !s_max.is_finite() {
            return Err(Error::invalid("s_max must be finite and non-negative"));
        }
        let ratio = s_max / config.step;
        // Absorb rounding in s_max / h so that e.g. 10 / 1e-3 is 10000 steps.
        let total = libm::ceil(ratio * (1.0 - 1e-12));
        if total > 1e12 {
            return Err(Error::invalid("too many integration steps"));
        }
        Ok(Grid { step: config.step, stride: config.grid_stride, s_max, total_steps: total as usize })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    pub fn total_steps(&self) -> usize {
        self.total_steps
    }

    #[inline]
    pub fn step_s(&self, j: usize) -> f64 {
        if j >= self.total_steps {
            self.s_max
        } else {
            j as f64 * self.step
        }
    }

    #[inline]
    pub fn is_grid_step(&self, j: usize) -> bool {
        j.is_multiple_of(self.stride) || j == self.total_steps
    }

    /// Step indexes of the grid points, in increasing order.
    pub fn grid_steps(&self) -> impl Iterator<Item = usize> + '_ {
        (0..=self.total_steps).filter(move |&j| self.is_grid_step(j))
    }

    pub fn s_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.grid_steps().map(move |j| self.step_s(j))
    }

    pub fn point_count(&self) -> usize {
        let regular = self.total_steps / self.stride + 1;
        if self.total_steps.is_multiple_of(self.stride) {
            regular
        } else {
            regular + 1
        }
    }

    /// Largest scaled-time gap between consecutive grid points.
    pub fn max_spacing(&self) -> f64 {
        if self.total_steps == 0 {
            0.0
        } else {
            (self.stride as f64 * self.step).min(self.s_max)
        }
    }
}

/// Scaled trajectory on a grid. If `sigma_exit` is set, the last point is
/// the first grid point found outside the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    points: Vec<ScaledPoint>,
    sigma_exit: Option<f64>,
}

impl Trajectory {
    pub fn new(points: Vec<ScaledPoint>, sigma_exit: Option<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("trajectory must contain at least one point"));
        }
        let dim = points[0].z.len();
        for w in points.windows(2) {
            check_dim(dim, w[1].z.len())?;
            if !(w[0].s < w[1].s) {
                return Err(Error::invalid("trajectory times must be strictly increasing"));
            }
        }
        Ok(Trajectory { points, sigma_exit })
    }

    pub fn points(&self) -> &[ScaledPoint] {
        &self.points
    }

    pub fn sigma_exit(&self) -> Option<f64> {
        self.sigma_exit
    }

    pub fn dim(&self) -> usize {
        self.points[0].z.len()
    }

    pub fn last(&self) -> &ScaledPoint {
        self.points.last().expect("trajectory is nonempty")
    }

    pub fn into_points(self) -> Vec<ScaledPoint> {
        self.points
    }
}

pub fn integrate(spec: &ProcessSpec, z0: &[f64], s_max: f64, config: IntegratorConfig) -> Result<Trajectory> {
    let (_, s_high) = spec.domain().s_bounds();
    if s_max > s_high {
        return Err(Error::invalid("s_max lies beyond the domain"));
    }
    integrate_on(spec, z0, &Grid::new(config, s_max)?)
}

/// Classical RK4 over `grid`, stopping at the first grid point outside the
/// domain.
pub fn integrate_on(spec: &ProcessSpec, z0: &[f64], grid: &Grid) -> Result<Trajectory> {
    let dim = spec.coord_count();
    check_dim(dim, z0.len())?;
    if !spec.domain().contains(0.0, z0) {
        return Err(Error::InitialStateOutsideDomain);
    }

    let mut z = z0.to_vec();
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];

    let mut points = Vec::with_capacity(grid.point_count());
    points.push(ScaledPoint { s: 0.0, z: z.clone() });

    for j in 0..grid.total_steps() {
        let s = grid.step_s(j);
        let s_next = grid.step_s(j + 1);
        let dt = s_next - s;
        let half = 0.5 * dt;

        spec.drift_into(s, &z, &mut k1);
        for i in 0..dim {
            tmp[i] = z[i] + half * k1[i];
        }
        spec.drift_into(s + half, &tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = z[i] + half * k2[i];
        }
        spec.drift_into(s + half, &tmp, &mut k3);
        for i in 0..dim {
            tmp[i] = z[i] + dt * k3[i];
        }
        spec.drift_into(s_next, &tmp, &mut k4);
        for i in 0..dim {
            z[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }

        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { s: s_next });
        }

        if grid.is_grid_step(j + 1) {
            points.push(ScaledPoint { s: s_next, z: z.clone() });
            if !spec.domain().contains(s_next, &z) {
                return Trajectory::new(points, Some(s_next));
            }
        }
    }

    Trajectory::new(points, None)
}

/// Empirical order `log2(err(h) / err(h/2))` against an exact solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceOrder {
    pub order: f64,
    pub coarse_error: f64,
    pub fine_error: f64,
    /// Set when `err(h/2) == 0`; `order` is then `+inf`.
    pub saturated: bool,
}

pub fn convergence_order(
    spec: &ProcessSpec,
    z0: &[f64],
    s_max: f64,
    h: f64,
    oracle: impl Fn(f64, usize) -> f64,
) -> Result<ConvergenceOrder> {
    let coarse = max_error(&integrate(spec, z0, s_max, IntegratorConfig::new(h, 1)?)?, &oracle);
    let fine = max_error(&integrate(spec, z0, s_max, IntegratorConfig::new(h / 2.0, 1)?)?, &oracle);
    if fine == 0.0 {
        return Ok(ConvergenceOrder { order: f64::INFINITY, coarse_error: coarse, fine_error: fine, saturated: true });
    }
    Ok(ConvergenceOrder {
        order: libm::log2(coarse / fine),
        coarse_error: coarse,
        fine_error: fine,
        saturated: false,
    })
}

/// Max over grid points and coordinates of `|z_l(s) - oracle(s, l)|`.
pub fn max_error(traj: &Trajectory, oracle: impl Fn(f64, usize) -> f64) -> f64 {
    let oracle = &oracle;
    traj.points()
        .iter()
        .flat_map(|p| p.z.iter().enumerate().map(move |(l, &v)| libm::fabs(v - oracle(p.s, l))))
        .fold(0.0, f64::max)
}
