//! Wave-propagation finite-volume scheme (Reconstruct-Evolve-Average).
//!
//! Each step solves one Riemann problem per interface, then updates
//!
//! ```text
//! Q_j <- Q_j - dt/dx [ sum_p (s^p_{j-1/2})^+ W^p_{j-1/2} + sum_p (s^p_{j+1/2})^- W^p_{j+1/2} ]
//!            - dt/dx [ F~_{j+1/2} - F~_{j-1/2} ]
//! ```
//!
//! where the second line is the limited second-order correction, absent for
//! [`Limiter::None`]. Fans are computed from a frozen copy of the cells
//! (the look-ahead scan reads arbitrarily far downstream) and applied in a
//! separate phase.

use tracing::{debug, trace};

use crate::error::{Error, Result};
use crate::flux::{check_density, FluxKind, FluxModel, DENSITY_SLACK};
use crate::riemann::{solve_interface, solve_interface_hull, WaveFan};

/// Halvings of a step before the run gives up.
pub const MAX_STEP_REJECTIONS: usize = 5;

/// Ghost cells on each side of the grid.
const GHOSTS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryCondition {
    Periodic,
    /// Zeroth-order extrapolation into the ghost cells.
    Outflow,
}

impl BoundaryCondition {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryCondition::Periodic => "periodic",
            BoundaryCondition::Outflow => "outflow",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "periodic" => Some(BoundaryCondition::Periodic),
            "outflow" => Some(BoundaryCondition::Outflow),
            _ => None,
        }
    }
}

/// Uniform 1D grid of cell averages.
#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    pub x_lo: f64,
    pub x_hi: f64,
    pub dx: f64,
    pub q: Vec<f64>,
    pub bc: BoundaryCondition,
    pub time: f64,
}

impl GridState {
    pub fn new(x_lo: f64, x_hi: f64, q: Vec<f64>, bc: BoundaryCondition) -> Result<Self> {
        if !(x_hi > x_lo) || !x_lo.is_finite() || !x_hi.is_finite() {
            return Err(Error::Parameter(format!(
                "domain [{x_lo}, {x_hi}] is empty or not finite"
            )));
        }
        if q.is_empty() {
            return Err(Error::Parameter("grid needs at least one cell".into()));
        }
        for &v in &q {
            check_density(v)?;
        }
        let dx = (x_hi - x_lo) / q.len() as f64;
        Ok(GridState {
            x_lo,
            x_hi,
            dx,
            q,
            bc,
            time: 0.0,
        })
    }

    /// Grid whose cells hold `average(a, b)` for cell `[a, b]`.
    pub fn from_cell_averages(
        x_lo: f64,
        x_hi: f64,
        n_cells: usize,
        bc: BoundaryCondition,
        average: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        if n_cells == 0 {
            return Err(Error::Parameter("grid needs at least one cell".into()));
        }
        let dx = (x_hi - x_lo) / n_cells as f64;
        let q = (0..n_cells)
            .map(|j| {
                let a = x_lo + j as f64 * dx;
                average(a, a + dx)
            })
            .collect();
        Self::new(x_lo, x_hi, q, bc)
    }

    pub fn n_cells(&self) -> usize {
        self.q.len()
    }

    pub fn cell_bounds(&self, j: usize) -> (f64, f64) {
        let a = self.x_lo + j as f64 * self.dx;
        (a, a + self.dx)
    }

    pub fn cell_center(&self, j: usize) -> f64 {
        self.x_lo + (j as f64 + 0.5) * self.dx
    }

    /// `dx * sum_j Q_j`.
    pub fn mass(&self) -> f64 {
        self.dx * self.q.iter().sum::<f64>()
    }

    /// Cell values padded with two ghost cells on each side.
    fn extended(&self) -> Vec<f64> {
        let n = self.q.len() as isize;
        (0..self.q.len() + 2 * GHOSTS)
            .map(|i| self.q[self.cell_index(i as isize - GHOSTS as isize, n)])
            .collect()
    }

    fn cell_index(&self, k: isize, n: isize) -> usize {
        match self.bc {
            BoundaryCondition::Periodic => k.rem_euclid(n) as usize,
            BoundaryCondition::Outflow => k.clamp(0, n - 1) as usize,
        }
    }
}

/// Wave limiter functions `phi(theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Limiter {
    /// `phi = 0`: the first-order Godunov scheme.
    None,
    Minmod,
    Superbee,
    /// Monotonized central.
    Mc,
}

impl Limiter {
    pub fn phi(self, theta: f64) -> f64 {
        match self {
            Limiter::None => 0.0,
            Limiter::Minmod => theta.clamp(0.0, 1.0),
            Limiter::Superbee => 0.0f64.max((2.0 * theta).min(1.0)).max(theta.min(2.0)),
            Limiter::Mc => (0.5 * (1.0 + theta)).min(2.0).min(2.0 * theta).max(0.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Limiter::None => "none",
            Limiter::Minmod => "minmod",
            Limiter::Superbee => "superbee",
            Limiter::Mc => "mc",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "none" => Some(Limiter::None),
            "minmod" => Some(Limiter::Minmod),
            "superbee" => Some(Limiter::Superbee),
            "mc" => Some(Limiter::Mc),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub model: FluxModel,
    /// Courant number in `(0, 1)`.
    pub cfl: f64,
    /// Half-width of the band around `rho_m` treated as the plateau.
    pub delta: f64,
    pub limiter: Limiter,
    pub t_end: f64,
}

impl SolverConfig {
    pub const DEFAULT_CFL: f64 = 0.9;
    pub const DEFAULT_DELTA: f64 = 1e-5;

    /// CFL 0.9, delta 1e-5, superbee limiter.
    pub fn new(model: FluxModel, t_end: f64) -> Self {
        SolverConfig {
            model,
            cfl: Self::DEFAULT_CFL,
            delta: Self::DEFAULT_DELTA,
            limiter: Limiter::Superbee,
            t_end,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(Error::Parameter(format!(
                "cfl = {} must lie in (0, 1)",
                self.cfl
            )));
        }
        if !(self.delta >= 0.0) {
            return Err(Error::Parameter(format!(
                "delta = {} must be >= 0",
                self.delta
            )));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::Parameter(format!(
                "t_end = {} must be finite and >= 0",
                self.t_end
            )));
        }
        if self.model.kind() == FluxKind::Mollified {
            return Err(Error::Parameter(
                "the mollified flux is for analysis only and cannot be integrated".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    FirstOrder,
    HighResolution,
}

/// First cell downstream of interface `j+1/2` (scanning `k = j+2, j+3, ...`)
/// whose value lies outside the plateau band, or `None` when the scan runs
/// off the grid. Periodic grids wrap and inspect at most `N - 1` cells.
fn lookahead(q: &[f64], j: usize, rho_m: f64, delta: f64, bc: BoundaryCondition) -> Option<f64> {
    let n = q.len();
    let off_plateau = |v: f64| (v - rho_m).abs() > delta;
    match bc {
        BoundaryCondition::Outflow => q.iter().skip(j + 2).copied().find(|&v| off_plateau(v)),
        BoundaryCondition::Periodic => (2..=n)
            .map(|offset| q[(j + offset) % n])
            .find(|&v| off_plateau(v)),
    }
}

/// Look-ahead state `Q_I` for interface `j+1/2`; `rho_m` itself when every
/// downstream cell sits on the plateau.
pub fn lookahead_index(q: &[f64], j: usize, rho_m: f64, delta: f64, bc: BoundaryCondition) -> f64 {
    lookahead(q, j, rho_m, delta, bc).unwrap_or(rho_m)
}

/// Fans over the ghost-extended grid: entry `e` joins extended cells `e`
/// and `e + 1`, so cell `j` sits between entries `j + 1` and `j + 2`.
struct Sweep {
    fans: Vec<WaveFan>,
    sentinels: usize,
}

fn sweep(state: &GridState, config: &SolverConfig) -> Result<Sweep> {
    let model = &config.model;
    let ext = state.extended();
    let n = state.q.len() as isize;
    let rho_m = model.rho_m();
    let delta = config.delta;
    let mut sentinels = 0;
    let mut fans = Vec::with_capacity(ext.len() - 1);
    for e in 0..ext.len() - 1 {
        let (ql, qr) = (ext[e], ext[e + 1]);
        let fan = match model.kind() {
            FluxKind::DiscontinuousPL => {
                let needs_lookahead = (ql - rho_m).abs() > delta && (qr - rho_m).abs() <= delta;
                let q_i = if needs_lookahead {
                    let j = state.cell_index(e as isize - GHOSTS as isize, n);
                    match lookahead(&state.q, j, rho_m, delta, state.bc) {
                        Some(v) => v,
                        None => {
                            sentinels += 1;
                            trace!(interface = j, "look-ahead found no off-plateau cell");
                            rho_m
                        }
                    }
                } else {
                    rho_m
                };
                solve_interface(model, ql, qr, q_i, delta)?
            }
            FluxKind::ContinuousPL | FluxKind::RegularizedPL => {
                solve_interface_hull(model, ql, qr)?
            }
            FluxKind::Mollified => {
                return Err(Error::Parameter(
                    "the mollified flux cannot be integrated".into(),
                ))
            }
        };
        fans.push(fan);
    }
    Ok(Sweep { fans, sentinels })
}

/// One fan per physical interface: `N` for periodic grids (the last one
/// wraps), `N + 1` for outflow grids (including both boundaries).
pub fn compute_interface_waves(state: &GridState, config: &SolverConfig) -> Result<Vec<WaveFan>> {
    let mut fans = sweep(state, config)?.fans;
    let n = state.n_cells();
    let range = match state.bc {
        BoundaryCondition::Periodic => GHOSTS..GHOSTS + n,
        BoundaryCondition::Outflow => GHOSTS - 1..GHOSTS + n,
    };
    fans.truncate(range.end);
    fans.drain(..range.start);
    Ok(fans)
}

/// `cfl * min dx/|s|` over all non-null waves, capped at `dt_max`, which is
/// also returned when there are no moving waves.
pub fn select_dt(fans: &[WaveFan], dx: f64, cfl: f64, dt_max: f64) -> f64 {
    let fastest = fans.iter().map(WaveFan::max_speed).fold(0.0, f64::max);
    if fastest > 0.0 {
        (cfl * dx / fastest).min(dt_max)
    } else {
        dt_max
    }
}

/// Limited second-order correction flux at extended interface `e`.
fn correction_flux(fans: &[WaveFan], e: usize, nu: f64, limiter: Limiter) -> f64 {
    let mut total = 0.0;
    for (p, wave) in fans[e].waves.iter().enumerate() {
        if wave.is_null() || wave.strength == 0.0 {
            continue;
        }
        let upwind = if wave.speed > 0.0 {
            fans[e - 1].waves[p]
        } else {
            fans[e + 1].waves[p]
        };
        let theta = if upwind.is_null() {
            0.0
        } else {
            upwind.strength / wave.strength
        };
        let limited = limiter.phi(theta) * wave.strength;
        let s = wave.speed.abs();
        total += 0.5 * s * (1.0 - nu * s) * limited;
    }
    total
}

fn apply_fans(
    state: &GridState,
    fans: &[WaveFan],
    dt: f64,
    scheme: Scheme,
    limiter: Limiter,
) -> Vec<f64> {
    let nu = dt / state.dx;
    let n = state.n_cells();
    let fluct: Vec<(f64, f64)> = fans.iter().map(WaveFan::fluctuations).collect();
    let mut q: Vec<f64> = (0..n)
        .map(|j| {
            let from_left = fluct[j + 1].1;
            let from_right = fluct[j + 2].0;
            state.q[j] - nu * (from_left + from_right)
        })
        .collect();
    if scheme == Scheme::HighResolution {
        let corr: Vec<f64> = (1..=n + 1)
            .map(|e| correction_flux(fans, e, nu, limiter))
            .collect();
        for (j, v) in q.iter_mut().enumerate() {
            *v -= nu * (corr[j + 1] - corr[j]);
        }
    }
    q
}

fn in_bounds(q: &[f64]) -> bool {
    q.iter()
        .all(|v| (-DENSITY_SLACK..=1.0 + DENSITY_SLACK).contains(v))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub dt: f64,
    pub rejections: usize,
    pub lookahead_sentinels: usize,
    pub max_speed: f64,
}

/// Advances by `dt` (halving on bound violations). The returned state's
/// time is `state.time + dt_taken`.
pub fn step_with_dt(
    state: &GridState,
    config: &SolverConfig,
    scheme: Scheme,
    dt: f64,
) -> Result<(GridState, StepReport)> {
    let Sweep { fans, sentinels } = sweep(state, config)?;
    advance(state, config, scheme, &fans, sentinels, dt, None)
}

fn advance(
    state: &GridState,
    config: &SolverConfig,
    scheme: Scheme,
    fans: &[WaveFan],
    sentinels: usize,
    dt: f64,
    land_on: Option<f64>,
) -> Result<(GridState, StepReport)> {
    if !(dt > 0.0) {
        return Err(Error::StepRejected {
            time: state.time,
            attempts: 0,
        });
    }
    let mut dt = dt;
    let mut rejections = 0;
    loop {
        let q = apply_fans(state, fans, dt, scheme, config.limiter);
        if in_bounds(&q) {
            let time = match land_on {
                Some(target) if rejections == 0 => target,
                _ => state.time + dt,
            };
            let next = GridState {
                q: q.into_iter().map(|v| v.clamp(0.0, 1.0)).collect(),
                time,
                ..state.clone()
            };
            let max_speed = fans.iter().map(WaveFan::max_speed).fold(0.0, f64::max);
            return Ok((
                next,
                StepReport {
                    dt,
                    rejections,
                    lookahead_sentinels: sentinels,
                    max_speed,
                },
            ));
        }
        rejections += 1;
        if rejections > MAX_STEP_REJECTIONS {
            return Err(Error::StepRejected {
                time: state.time,
                attempts: rejections,
            });
        }
        debug!(time = state.time, dt, "density left [0, 1], halving step");
        dt *= 0.5;
    }
}

fn adaptive_step(
    state: &GridState,
    config: &SolverConfig,
    scheme: Scheme,
    target: f64,
) -> Result<(GridState, StepReport)> {
    let Sweep { fans, sentinels } = sweep(state, config)?;
    let remaining = target - state.time;
    let dt = select_dt(&fans, state.dx, config.cfl, remaining);
    let land_on = (dt >= remaining).then_some(target);
    advance(state, config, scheme, &fans, sentinels, dt, land_on)
}

/// One first-order Godunov step with the CFL time step, clipped to `t_end`.
pub fn step_first_order(state: &GridState, config: &SolverConfig) -> Result<GridState> {
    config.validate()?;
    Ok(adaptive_step(
        state,
        config,
        Scheme::FirstOrder,
        config.t_end.max(state.time),
    )?
    .0)
}

/// One high-resolution step with the configured limiter. With
/// [`Limiter::None`] the result is identical to [`step_first_order`].
pub fn step_high_resolution(state: &GridState, config: &SolverConfig) -> Result<GridState> {
    config.validate()?;
    Ok(adaptive_step(
        state,
        config,
        Scheme::HighResolution,
        config.t_end.max(state.time),
    )?
    .0)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunStats {
    pub steps: usize,
    pub rejections: usize,
    /// Interfaces whose look-ahead found no off-plateau cell.
    pub lookahead_sentinels: usize,
    pub min_dt: f64,
    /// `(t, V)` after every accepted step, starting with the initial state.
    pub mass_history: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    /// One snapshot per requested output time.
    pub snapshots: Vec<GridState>,
    /// State at `max(t_end, last output time)`.
    pub final_state: GridState,
    pub stats: RunStats,
}

/// Runs the high-resolution scheme (first order when the limiter is
/// `None`) from `initial`, landing exactly on each output time and then on
/// `t_end`.
pub fn run(initial: &GridState, config: &SolverConfig, output_times: &[f64]) -> Result<RunOutput> {
    config.validate()?;
    let mut prev = initial.time;
    for &t in output_times {
        if !(t >= prev) || t > config.t_end {
            return Err(Error::Parameter(format!(
                "output times must be ascending, start at or after t = {} and end by t_end = {}",
                initial.time, config.t_end
            )));
        }
        prev = t;
    }

    let mut state = initial.clone();
    let mut stats = RunStats {
        min_dt: f64::INFINITY,
        mass_history: vec![(state.time, state.mass())],
        ..RunStats::default()
    };
    let mut snapshots = Vec::with_capacity(output_times.len());
    let targets = output_times
        .iter()
        .map(|&t| (t, true))
        .chain([(config.t_end, false)]);
    for (target, snapshot) in targets {
        while state.time < target {
            let (next, report) = adaptive_step(&state, config, Scheme::HighResolution, target)?;
            stats.steps += 1;
            stats.rejections += report.rejections;
            stats.lookahead_sentinels += report.lookahead_sentinels;
            stats.min_dt = stats.min_dt.min(report.dt);
            state = next;
            stats.mass_history.push((state.time, state.mass()));
        }
        if snapshot {
            snapshots.push(state.clone());
        }
    }
    if stats.lookahead_sentinels > 0 {
        debug!(
            count = stats.lookahead_sentinels,
            "look-ahead fell back to the free-flow branch"
        );
    }
    Ok(RunOutput {
        snapshots,
        final_state: state,
        stats,
    })
}
