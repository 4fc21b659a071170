//! Closed-form solutions of the Riemann and double Riemann problems for the
//! discontinuous flux, in the limit of vanishing mollification.
//!
//! Every solution here is piecewise constant in `x` at a fixed time, so it
//! is represented by a [`Profile`] that can be sampled pointwise or
//! integrated exactly over a cell.

use crate::error::{Error, Result};
use crate::flux::{check_density, FluxKind, FluxModel};
use crate::riemann::{double_riemann_speeds, DoubleRiemannCase};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiemannData {
    pub rho_l: f64,
    pub rho_r: f64,
    /// Location of the initial jump.
    pub x0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleRiemannData {
    pub c_l: f64,
    pub c_r: f64,
    /// Left edge of the initial `rho_m` plateau.
    pub x1: f64,
    /// Right edge of the initial `rho_m` plateau.
    pub x2: f64,
}

/// Which neighbour owns a point lying exactly on a front.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tie {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Front {
    pub position: f64,
    pub tie: Tie,
}

/// Piecewise-constant profile: `states[i]` holds between `fronts[i-1]` and
/// `fronts[i]`. Fronts are sorted by position.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub states: Vec<f64>,
    pub fronts: Vec<Front>,
}

impl Profile {
    fn constant(value: f64) -> Self {
        Profile {
            states: vec![value],
            fronts: Vec::new(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        for (i, front) in self.fronts.iter().enumerate() {
            let before = match front.tie {
                Tie::Left => x <= front.position,
                Tie::Right => x < front.position,
            };
            if before {
                return self.states[i];
            }
        }
        *self.states.last().expect("profile has at least one state")
    }

    /// Exact integral over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let mut total = 0.0;
        let mut left = f64::NEG_INFINITY;
        for (i, state) in self.states.iter().enumerate() {
            let right = self
                .fronts
                .get(i)
                .map_or(f64::INFINITY, |front| front.position);
            let lo = left.max(a);
            let hi = right.min(b);
            if hi > lo {
                total += state * (hi - lo);
            }
            left = right;
        }
        total
    }

    pub fn cell_average(&self, a: f64, b: f64) -> f64 {
        self.integrate(a, b) / (b - a)
    }
}

fn require_discontinuous(model: &FluxModel) -> Result<()> {
    if model.kind() == FluxKind::DiscontinuousPL {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "exact solutions are available for the discontinuous flux only, got {}",
            model.kind().name()
        )))
    }
}

/// The Riemann solution at time `t` as a profile.
///
/// Besides the three non-trivial cases (A: `rho_r < rho_m < rho_l`,
/// B: `gamma/(gamma+1) < rho_l < rho_m < rho_r`, C: `rho_l < rho_m < rho_r`
/// with `rho_l <= gamma/(gamma+1)`) this covers same-branch advection at
/// speed 1 or `-gamma`, and single waves when one state equals `rho_m`,
/// with the branch at `rho_m` picked by the other state.
pub fn riemann_profile(model: &FluxModel, data: &RiemannData, t: f64) -> Result<Profile> {
    require_discontinuous(model)?;
    check_density(data.rho_l)?;
    check_density(data.rho_r)?;
    if !(t >= 0.0) {
        return Err(Error::Parameter(format!("time t = {t} must be >= 0")));
    }
    let RiemannData { rho_l, rho_r, x0 } = *data;
    if rho_l == rho_r {
        return Ok(Profile::constant(rho_l));
    }
    let single = |speed: f64, tie: Tie| Profile {
        states: vec![rho_l, rho_r],
        fronts: vec![Front {
            position: x0 + speed * t,
            tie,
        }],
    };
    if t == 0.0 {
        return Ok(single(0.0, Tie::Right));
    }

    let rho_m = model.rho_m();
    let gamma = model.gamma();
    let f = |r: f64| model.value(r);

    let profile = if rho_l == rho_m {
        single(if rho_r < rho_m { 1.0 } else { -gamma }, Tie::Right)
    } else if rho_r == rho_m {
        let speed = if rho_l < rho_m {
            (model.free_flow(rho_m) - f(rho_l)) / (rho_m - rho_l)
        } else {
            (model.congested(rho_m) - f(rho_l)) / (rho_m - rho_l)
        };
        single(speed, Tie::Right)
    } else if rho_l < rho_m && rho_r < rho_m {
        single(1.0, Tie::Right)
    } else if rho_l > rho_m && rho_r > rho_m {
        single(-gamma, Tie::Right)
    } else if rho_r < rho_m {
        // Case A: 1-shock into the plateau, free-flow contact out of it.
        let s = (f(rho_l) - model.free_flow(rho_m)) / (rho_l - rho_m);
        plateau_profile(rho_l, rho_m, rho_r, x0 + s * t, x0 + t)
    } else if rho_l > model.compound_threshold() {
        // Case B: 1-shock into the plateau, congested contact out of it.
        let s = (model.congested(rho_m) - f(rho_l)) / (rho_m - rho_l);
        plateau_profile(rho_l, rho_m, rho_r, x0 + s * t, x0 - gamma * t)
    } else {
        // Case C: single shock.
        let s = (f(rho_r) - f(rho_l)) / (rho_r - rho_l);
        single(s, Tie::Right)
    };
    Ok(profile)
}

/// Three-state profile whose middle state owns both closed edges.
fn plateau_profile(left: f64, middle: f64, right: f64, x_a: f64, x_b: f64) -> Profile {
    Profile {
        states: vec![left, middle, right],
        fronts: vec![
            Front {
                position: x_a,
                tie: Tie::Right,
            },
            Front {
                position: x_b,
                tie: Tie::Left,
            },
        ],
    }
}

/// Point value of the Riemann solution.
pub fn eval_riemann_exact(model: &FluxModel, data: &RiemannData, x: f64, t: f64) -> Result<f64> {
    Ok(riemann_profile(model, data, t)?.eval(x))
}

/// Time at which the two waves of a case 2b double Riemann problem merge.
pub fn merge_time(model: &FluxModel, data: &DoubleRiemannData) -> Result<Option<f64>> {
    let case = DoubleRiemannCase::classify(model, data.c_l, data.c_r)?;
    if case != DoubleRiemannCase::Case2b {
        return Ok(None);
    }
    let (l1, l2) = double_riemann_speeds(case, data.c_l, data.c_r, model)?;
    Ok(Some((data.x2 - data.x1) / (l1 - l2)))
}

/// The double Riemann solution `C_l | rho_m | C_r` at time `t`.
///
/// Before the waves meet the profile keeps the plateau between
/// `x1 + lambda_1 t` and `x2 + lambda_2 t`. In case 2b the waves collide and
/// continue as the single shock joining `C_l` and `C_r`.
pub fn double_riemann_profile(
    model: &FluxModel,
    data: &DoubleRiemannData,
    t: f64,
) -> Result<Profile> {
    require_discontinuous(model)?;
    check_density(data.c_l)?;
    check_density(data.c_r)?;
    if !(data.x1 < data.x2) {
        return Err(Error::Parameter(format!(
            "plateau edges must satisfy x1 < x2, got {} and {}",
            data.x1, data.x2
        )));
    }
    if !(t >= 0.0) {
        return Err(Error::Parameter(format!("time t = {t} must be >= 0")));
    }
    let case = DoubleRiemannCase::classify(model, data.c_l, data.c_r)?;
    let (l1, l2) = double_riemann_speeds(case, data.c_l, data.c_r, model)?;
    let rho_m = model.rho_m();

    if let Some(t_merge) = merge_time(model, data)? {
        if t > t_merge {
            let x_merge = data.x1 + l1 * t_merge;
            let s = (model.value(data.c_r) - model.value(data.c_l)) / (data.c_r - data.c_l);
            return Ok(Profile {
                states: vec![data.c_l, data.c_r],
                fronts: vec![Front {
                    position: x_merge + s * (t - t_merge),
                    tie: Tie::Right,
                }],
            });
        }
    }
    Ok(plateau_profile(
        data.c_l,
        rho_m,
        data.c_r,
        data.x1 + l1 * t,
        data.x2 + l2 * t,
    ))
}

/// Point value of the double Riemann solution.
pub fn eval_double_riemann_exact(
    model: &FluxModel,
    data: &DoubleRiemannData,
    x: f64,
    t: f64,
) -> Result<f64> {
    Ok(double_riemann_profile(model, data, t)?.eval(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> FluxModel {
        FluxModel::discontinuous(0.5, 0.5).unwrap()
    }

    fn rp(rho_l: f64, rho_r: f64) -> RiemannData {
        RiemannData {
            rho_l,
            rho_r,
            x0: 0.0,
        }
    }

    #[test]
    fn case_a_plateau() {
        let f = reference();
        assert_eq!(
            eval_riemann_exact(&f, &rp(0.9, 0.2), 0.0, 0.2).unwrap(),
            0.5
        );
        assert_eq!(
            eval_riemann_exact(&f, &rp(0.9, 0.2), -0.3, 0.2).unwrap(),
            0.9
        );
        assert_eq!(
            eval_riemann_exact(&f, &rp(0.9, 0.2), 0.25, 0.2).unwrap(),
            0.2
        );
        // both plateau edges are closed
        assert_eq!(
            eval_riemann_exact(&f, &rp(0.9, 0.2), 0.2, 0.2).unwrap(),
            0.5
        );
        assert_eq!(
            eval_riemann_exact(&f, &rp(0.9, 0.2), -0.225, 0.2).unwrap(),
            0.5
        );
    }

    #[test]
    fn case_b_and_c() {
        let f = reference();
        assert_eq!(
            eval_riemann_exact(&f, &rp(0.4, 0.9), -0.2, 0.1).unwrap(),
            0.4
        );
        assert_eq!(
            eval_riemann_exact(&f, &rp(0.4, 0.9), -0.1, 0.1).unwrap(),
            0.5
        );
        assert_eq!(
            eval_riemann_exact(&f, &rp(0.4, 0.9), -0.04, 0.1).unwrap(),
            0.9
        );
        let s = (0.05 - 0.2) / 0.7;
        assert_eq!(
            eval_riemann_exact(&f, &rp(0.2, 0.9), s * 0.1, 0.1).unwrap(),
            0.9
        );
        assert_eq!(
            eval_riemann_exact(&f, &rp(0.2, 0.9), s * 0.1 - 1e-9, 0.1).unwrap(),
            0.2
        );
    }

    #[test]
    fn initial_data_at_t_zero() {
        let f = reference();
        for &(l, r) in &[(0.9, 0.2), (0.4, 0.9), (0.2, 0.9), (0.1, 0.4)] {
            assert_eq!(eval_riemann_exact(&f, &rp(l, r), -1e-12, 0.0).unwrap(), l);
            assert_eq!(eval_riemann_exact(&f, &rp(l, r), 0.0, 0.0).unwrap(), r);
        }
    }

    #[test]
    fn single_wave_cases_at_rho_m() {
        let f = reference();
        // left state rho_m, free right state: contact at speed 1
        assert_eq!(
            eval_riemann_exact(&f, &rp(0.5, 0.2), 0.09, 0.1).unwrap(),
            0.5
        );
        assert_eq!(
            eval_riemann_exact(&f, &rp(0.5, 0.2), 0.11, 0.1).unwrap(),
            0.2
        );
        // right state rho_m, congested left state: congested contact
        assert_eq!(
            eval_riemann_exact(&f, &rp(0.8, 0.5), -0.06, 0.1).unwrap(),
            0.8
        );
        assert_eq!(
            eval_riemann_exact(&f, &rp(0.8, 0.5), -0.04, 0.1).unwrap(),
            0.5
        );
    }

    #[test]
    fn cell_average_integration() {
        let f = reference();
        let p = riemann_profile(&f, &rp(0.9, 0.2), 0.2).unwrap();
        // cell [-0.25, -0.2] straddles the shock at -0.225
        assert!((p.cell_average(-0.25, -0.2) - 0.7).abs() < 1e-14);
        assert!((p.integrate(-1.0, 1.0) - (0.9 * 0.775 + 0.5 * 0.425 + 0.2 * 0.8)).abs() < 1e-14);
        assert_eq!(p.integrate(0.3, 0.3), 0.0);
    }

    #[test]
    fn double_riemann_square_wave() {
        let f = reference();
        let d = DoubleRiemannData {
            c_l: 0.2,
            c_r: 0.3,
            x1: -0.1,
            x2: 0.1,
        };
        // the plateau [x1, x2] moves with speed 1 to [0.2, 0.4]
        assert_eq!(eval_double_riemann_exact(&f, &d, 0.25, 0.3).unwrap(), 0.5);
        assert_eq!(eval_double_riemann_exact(&f, &d, 0.15, 0.3).unwrap(), 0.2);
        assert_eq!(eval_double_riemann_exact(&f, &d, 0.45, 0.3).unwrap(), 0.3);
        assert_eq!(eval_double_riemann_exact(&f, &d, 0.19, 0.3).unwrap(), 0.2);
        // t = 0 reproduces the initial data
        assert_eq!(eval_double_riemann_exact(&f, &d, -0.1, 0.0).unwrap(), 0.5);
        assert_eq!(eval_double_riemann_exact(&f, &d, 0.1, 0.0).unwrap(), 0.5);
        assert_eq!(
            eval_double_riemann_exact(&f, &d, -0.1 - 1e-12, 0.0).unwrap(),
            0.2
        );
        assert_eq!(
            eval_double_riemann_exact(&f, &d, 0.1 + 1e-12, 0.0).unwrap(),
            0.3
        );
    }

    #[test]
    fn double_riemann_case_four_moves_left() {
        let f = reference();
        let d = DoubleRiemannData {
            c_l: 0.7,
            c_r: 0.9,
            x1: -0.1,
            x2: 0.1,
        };
        let p = double_riemann_profile(&f, &d, 0.2).unwrap();
        assert!((p.fronts[0].position - (-0.2)).abs() < 1e-14);
        assert!((p.fronts[1].position - 0.0).abs() < 1e-14);
    }

    #[test]
    fn double_riemann_case_2b_merges() {
        let f = reference();
        let d = DoubleRiemannData {
            c_l: 0.2,
            c_r: 0.9,
            x1: -0.1,
            x2: 0.1,
        };
        let l1 = (0.25 - 0.2) / 0.3;
        let t_merge = 0.2 / (l1 + 0.5);
        assert!((merge_time(&f, &d).unwrap().unwrap() - t_merge).abs() < 1e-14);
        let before = double_riemann_profile(&f, &d, 0.5 * t_merge).unwrap();
        assert_eq!(before.states.len(), 3);
        let after = double_riemann_profile(&f, &d, t_merge + 0.1).unwrap();
        assert_eq!(after.states, vec![0.2, 0.9]);
        let s = (0.05 - 0.2) / 0.7;
        let expected = -0.1 + l1 * t_merge + s * 0.1;
        assert!((after.fronts[0].position - expected).abs() < 1e-14);
    }

    #[test]
    fn errors() {
        let f = reference();
        let c = FluxModel::continuous(0.5, 0.5).unwrap();
        assert!(riemann_profile(&c, &rp(0.9, 0.2), 0.1).is_err());
        assert!(riemann_profile(&f, &rp(0.9, 0.2), -0.1).is_err());
        let bad = DoubleRiemannData {
            c_l: 0.2,
            c_r: 0.3,
            x1: 0.1,
            x2: -0.1,
        };
        assert!(double_riemann_profile(&f, &bad, 0.1).is_err());
    }
}
