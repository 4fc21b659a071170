//! Error norms, convergence-rate fits and conservation tracking.

use rayon::prelude::*;
use tracing::info;

use crate::engine::{run, BoundaryCondition, GridState, SolverConfig};
use crate::error::{Error, Result};
use crate::exact::{riemann_profile, Profile, RiemannData};
use crate::flux::FluxModel;

/// Ratio between successive grid spacings in a self-convergence study.
pub const REFINEMENT_FACTOR: usize = 3;

fn check_profile_grid(state: &GridState, reference: &[f64]) -> Result<()> {
    if state.q.len() != reference.len() {
        return Err(Error::Parameter(format!(
            "grid has {} cells but the reference has {}",
            state.q.len(),
            reference.len()
        )));
    }
    Ok(())
}

/// Exact cell averages of `profile` on the grid of `state`.
pub fn exact_cell_averages(state: &GridState, profile: &Profile) -> Vec<f64> {
    (0..state.n_cells())
        .map(|j| {
            let (a, b) = state.cell_bounds(j);
            profile.cell_average(a, b)
        })
        .collect()
}

/// `dx * sum |Q_j - R_j|`.
pub fn l1_distance(state: &GridState, reference: &[f64]) -> Result<f64> {
    check_profile_grid(state, reference)?;
    Ok(state.dx
        * state
            .q
            .iter()
            .zip(reference)
            .map(|(q, r)| (q - r).abs())
            .sum::<f64>())
}

/// `sqrt(dx * sum (Q_j - R_j)^2)`.
pub fn l2_distance(state: &GridState, reference: &[f64]) -> Result<f64> {
    check_profile_grid(state, reference)?;
    let sq: f64 = state
        .q
        .iter()
        .zip(reference)
        .map(|(q, r)| (q - r) * (q - r))
        .sum();
    Ok((state.dx * sq).sqrt())
}

/// Discrete L1 error against the exact cell averages of `profile`.
pub fn l1_error(state: &GridState, profile: &Profile) -> f64 {
    let reference = exact_cell_averages(state, profile);
    state.dx
        * state
            .q
            .iter()
            .zip(&reference)
            .map(|(q, r)| (q - r).abs())
            .sum::<f64>()
}

/// Discrete L2 error against the exact cell averages of `profile`.
pub fn l2_error(state: &GridState, profile: &Profile) -> f64 {
    let reference = exact_cell_averages(state, profile);
    let sq: f64 = state
        .q
        .iter()
        .zip(&reference)
        .map(|(q, r)| (q - r) * (q - r))
        .sum();
    (state.dx * sq).sqrt()
}

/// Least-squares slope of `ln(err)` against `ln(dx)`.
///
/// Any zero error makes the data scale-free, reported as `f64::INFINITY`.
pub fn fit_rate(dx: &[f64], err: &[f64]) -> Result<f64> {
    if dx.len() != err.len() || dx.len() < 3 {
        return Err(Error::Parameter(format!(
            "rate fit needs three or more (dx, error) pairs, got {} and {}",
            dx.len(),
            err.len()
        )));
    }
    if dx.iter().any(|&h| !(h > 0.0)) || err.iter().any(|&e| !(e >= 0.0)) {
        return Err(Error::Parameter(
            "rate fit needs positive spacings and non-negative errors".into(),
        ));
    }
    if err.contains(&0.0) {
        return Ok(f64::INFINITY);
    }
    let xs: Vec<f64> = dx.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = err.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Parameter("rate fit needs distinct spacings".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// Relative mass change `(V^n - V^0) / V^0`; NaN when `V^0 = 0`.
pub fn conservation_error(v0: f64, vn: f64) -> f64 {
    if v0 == 0.0 {
        f64::NAN
    } else {
        (vn - v0) / v0
    }
}

/// Worst `|E_r|` over a mass history.
pub fn max_conservation_error(history: &[(f64, f64)]) -> f64 {
    let Some(&(_, v0)) = history.first() else {
        return 0.0;
    };
    history
        .iter()
        .map(|&(_, v)| conservation_error(v0, v).abs())
        .fold(0.0, f64::max)
}

/// `(t, E_r)` for every entry of a mass history.
pub fn er_series(history: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let v0 = history.first().map_or(0.0, |&(_, v)| v);
    history
        .iter()
        .map(|&(t, v)| (t, conservation_error(v0, v)))
        .collect()
}

/// Averages consecutive blocks of `factor` cells.
pub fn restrict(q: &[f64], factor: usize) -> Result<Vec<f64>> {
    if factor == 0 || !q.len().is_multiple_of(factor) {
        return Err(Error::Parameter(format!(
            "cannot restrict {} cells by a factor of {factor}",
            q.len()
        )));
    }
    Ok(q.chunks(factor)
        .map(|c| c.iter().sum::<f64>() / factor as f64)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelError {
    pub dx: f64,
    pub n_cells: usize,
    pub l1: f64,
    pub l2: f64,
    /// Steps the run needed to reach the final time.
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub levels: Vec<LevelError>,
    pub l1_rate: f64,
    pub l2_rate: f64,
    /// `(t, E_r)` of the finest run; empty for studies against an exact solution.
    pub er_series: Vec<(f64, f64)>,
}

impl RunReport {
    fn from_levels(levels: Vec<LevelError>) -> Result<Self> {
        let dx: Vec<f64> = levels.iter().map(|l| l.dx).collect();
        let l1: Vec<f64> = levels.iter().map(|l| l.l1).collect();
        let l2: Vec<f64> = levels.iter().map(|l| l.l2).collect();
        Ok(RunReport {
            l1_rate: fit_rate(&dx, &l1)?,
            l2_rate: fit_rate(&dx, &l2)?,
            levels,
            er_series: Vec::new(),
        })
    }
}

fn cells_for(x_lo: f64, x_hi: f64, dx: f64) -> Result<usize> {
    let n = ((x_hi - x_lo) / dx).round();
    if !(n >= 1.0) || ((x_hi - x_lo) / n - dx).abs() > 1e-9 * dx {
        return Err(Error::Parameter(format!(
            "dx = {dx} does not divide the domain [{x_lo}, {x_hi}]"
        )));
    }
    Ok(n as usize)
}

/// Grid holding the exact cell averages of a Riemann initial condition.
pub fn riemann_initial_state(
    model: &FluxModel,
    data: &RiemannData,
    x_lo: f64,
    x_hi: f64,
    n_cells: usize,
    bc: BoundaryCondition,
) -> Result<GridState> {
    let ic = riemann_profile(model, data, 0.0)?;
    GridState::from_cell_averages(x_lo, x_hi, n_cells, bc, |a, b| ic.cell_average(a, b))
}

/// Error of the scheme against the exact Riemann solution on each grid
/// spacing in `dxs`, with fitted rates. Levels run in parallel.
pub fn riemann_convergence(
    config: &SolverConfig,
    data: &RiemannData,
    (x_lo, x_hi): (f64, f64),
    bc: BoundaryCondition,
    dxs: &[f64],
) -> Result<RunReport> {
    let exact = riemann_profile(&config.model, data, config.t_end)?;
    let levels = dxs
        .par_iter()
        .map(|&dx| {
            let n = cells_for(x_lo, x_hi, dx)?;
            let initial = riemann_initial_state(&config.model, data, x_lo, x_hi, n, bc)?;
            let out = run(&initial, config, &[])?;
            let state = out.final_state;
            Ok(LevelError {
                dx: state.dx,
                n_cells: n,
                l1: l1_error(&state, &exact),
                l2: l2_error(&state, &exact),
                steps: out.stats.steps,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let study = RunReport::from_levels(levels)?;
    info!(
        rho_l = data.rho_l,
        rho_r = data.rho_r,
        l1_rate = study.l1_rate,
        l2_rate = study.l2_rate,
        "riemann convergence"
    );
    Ok(study)
}

/// Self-convergence on grids `n0 * 3^p`, `p = 0..=levels`, measured against
/// the finest grid restricted to each coarser one. The rates are fitted
/// over the coarse levels `p < levels` only.
pub fn self_convergence<F>(
    config: &SolverConfig,
    n0: usize,
    levels: usize,
    initial: F,
) -> Result<RunReport>
where
    F: Fn(usize) -> Result<GridState> + Sync,
{
    if levels < 3 {
        return Err(Error::Parameter(
            "self-convergence needs at least three levels below the reference".into(),
        ));
    }
    let finals = (0..=levels)
        .into_par_iter()
        .map(|p| {
            let n = n0 * REFINEMENT_FACTOR.pow(p as u32);
            let out = run(&initial(n)?, config, &[])?;
            Ok((out.final_state, out.stats.steps, out.stats.mass_history))
        })
        .collect::<Result<Vec<_>>>()?;
    let (finest, _, history) = &finals[levels];
    let mut errors = Vec::with_capacity(levels);
    for (p, (state, steps, _)) in finals[..levels].iter().enumerate() {
        let factor = REFINEMENT_FACTOR.pow((levels - p) as u32);
        let reference = restrict(&finest.q, factor)?;
        errors.push(LevelError {
            dx: state.dx,
            n_cells: state.n_cells(),
            l1: l1_distance(state, &reference)?,
            l2: l2_distance(state, &reference)?,
            steps: *steps,
        });
    }
    let mut study = RunReport::from_levels(errors)?;
    study.er_series = er_series(history);
    info!(
        l1_rate = study.l1_rate,
        l2_rate = study.l2_rate,
        "self convergence"
    );
    Ok(study)
}

/// A run of cells sitting on the plateau `rho_m`, as index range `start..end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlateauRun {
    pub start: usize,
    pub end: usize,
}

impl PlateauRun {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

/// Longest run of consecutive cells within `tol` of `rho_m`.
pub fn longest_plateau(q: &[f64], rho_m: f64, tol: f64) -> Option<PlateauRun> {
    let mut best: Option<PlateauRun> = None;
    let mut start = None;
    for (j, &v) in q.iter().chain([f64::NAN].iter()).enumerate() {
        let on = (v - rho_m).abs() <= tol;
        match (on, start) {
            (true, None) => start = Some(j),
            (false, Some(s)) => {
                if best.is_none_or(|b| j - s > b.len()) {
                    best = Some(PlateauRun { start: s, end: j });
                }
                start = None;
            }
            _ => {}
        }
    }
    best
}

/// Plateau on the upstream side of a congested peak: the cells left of
/// the maximum, scanning leftward from it, that are within `tol` of `rho_m`.
///
/// Returns `None` unless the profile has a congested peak (max above
/// `rho_m + peak_margin`) and at least `min_cells` such cells.
pub fn left_plateau(
    q: &[f64],
    rho_m: f64,
    tol: f64,
    peak_margin: f64,
    min_cells: usize,
) -> Option<PlateauRun> {
    let (peak, &max) = q.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
    if max <= rho_m + peak_margin {
        return None;
    }
    let best = longest_plateau(&q[..peak], rho_m, tol)?;
    (best.len() >= min_cells).then_some(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_of_exact_power_law() {
        let dx = [0.1, 0.05, 0.025, 0.0125];
        let err: Vec<f64> = dx.iter().map(|h: &f64| 3.0 * h.powf(0.75)).collect();
        assert!((fit_rate(&dx, &err).unwrap() - 0.75).abs() < 1e-12);
        let zero = [1e-3, 0.0, 1e-4, 1e-5];
        assert_eq!(fit_rate(&dx, &zero).unwrap(), f64::INFINITY);
        assert!(fit_rate(&dx[..2], &err[..2]).is_err());
        assert!(fit_rate(&[0.1, 0.1, 0.1], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn conservation_error_examples() {
        assert_eq!(conservation_error(2.0, 2.0), 0.0);
        assert!((conservation_error(2.0, 2.002) - 1e-3).abs() < 1e-15);
        assert!(conservation_error(0.0, 1.0).is_nan());
        assert_eq!(
            max_conservation_error(&[(0.0, 1.0), (0.1, 1.5), (0.2, 0.9)]),
            0.5
        );
    }

    #[test]
    fn restriction_averages_blocks() {
        let q = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert_eq!(restrict(&q, 3).unwrap(), vec![2.0, 5.0]);
        assert!(restrict(&q, 4).is_err());
    }

    #[test]
    fn errors_vanish_on_exact_averages() {
        let model = FluxModel::discontinuous(0.5, 0.5).unwrap();
        let data = RiemannData {
            rho_l: 0.9,
            rho_r: 0.2,
            x0: 0.0,
        };
        let state = riemann_initial_state(&model, &data, -1.0, 1.0, 40, BoundaryCondition::Outflow)
            .unwrap();
        let ic = riemann_profile(&model, &data, 0.0).unwrap();
        assert_eq!(l1_error(&state, &ic), 0.0);
        assert_eq!(l2_error(&state, &ic), 0.0);
        // one wrong cell
        let mut bad = state.clone();
        bad.q[0] += 0.1;
        assert!((l1_error(&bad, &ic) - 0.1 * bad.dx).abs() < 1e-15);
        assert!((l2_error(&bad, &ic) - (0.01 * bad.dx).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn plateau_detection() {
        let q = [0.4, 0.5, 0.5, 0.5, 0.3, 0.5, 0.5, 0.9, 0.6];
        assert_eq!(
            longest_plateau(&q, 0.5, 0.01),
            Some(PlateauRun { start: 1, end: 4 })
        );
        assert_eq!(
            left_plateau(&q, 0.5, 0.01, 0.05, 3),
            Some(PlateauRun { start: 1, end: 4 })
        );
        assert_eq!(left_plateau(&q, 0.5, 0.01, 0.05, 4), None);
        let flat = [0.5, 0.5, 0.5, 0.52];
        assert_eq!(left_plateau(&flat, 0.5, 0.01, 0.05, 1), None);
    }
}
