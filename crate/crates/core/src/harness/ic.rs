//! Grids and exact profiles for the configured initial condition.

use quadrature::double_exponential;

use super::config::{Domain, InitialCondition};
use crate::analysis::riemann_initial_state;
use crate::engine::GridState;
use crate::error::{Error, Result};
use crate::exact::{riemann_profile, Profile};
use crate::flux::{FluxKind, FluxModel};

const CELL_QUADRATURE_TOL: f64 = 1e-14;

/// Exact cell average of the Gaussian bump over `[a, b]`.
pub fn gaussian_cell_average(
    sigma: f64,
    amplitude: f64,
    offset: f64,
    center: f64,
    a: f64,
    b: f64,
) -> f64 {
    let bump = |x: f64| {
        let z = (x - center) / sigma;
        (-0.5 * z * z).exp()
    };
    let integral = double_exponential::integrate(bump, a, b, CELL_QUADRATURE_TOL).integral;
    (offset + amplitude * integral / (b - a)).clamp(0.0, 1.0)
}

impl InitialCondition {
    /// Cell averages of the initial profile on `n_cells` cells of `domain`.
    pub fn grid(&self, model: &FluxModel, domain: &Domain, n_cells: usize) -> Result<GridState> {
        let Domain { x_lo, x_hi, bc, .. } = *domain;
        match *self {
            InitialCondition::Riemann(data) => {
                riemann_initial_state(model, &data, x_lo, x_hi, n_cells, bc)
            }
            InitialCondition::Gaussian {
                sigma,
                amplitude,
                offset,
                center,
            } => GridState::from_cell_averages(x_lo, x_hi, n_cells, bc, |a, b| {
                gaussian_cell_average(sigma, amplitude, offset, center, a, b)
            }),
            InitialCondition::Constant { value } => {
                GridState::from_cell_averages(x_lo, x_hi, n_cells, bc, |_, _| value)
            }
        }
    }

    /// Exact solution at `t`, available for Riemann data under the
    /// discontinuous flux.
    pub fn oracle(&self, model: &FluxModel, t: f64) -> Result<Option<Profile>> {
        match self {
            InitialCondition::Riemann(data) if model.kind() == FluxKind::DiscontinuousPL => {
                riemann_profile(model, data, t).map(Some)
            }
            _ => Ok(None),
        }
    }
}

pub(crate) fn require_ic(ic: &Option<InitialCondition>) -> Result<&InitialCondition> {
    ic.as_ref()
        .ok_or_else(|| Error::Parameter("this experiment has no initial condition".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_average_matches_midpoint_on_fine_cells() {
        let (a, b) = (0.1, 0.1 + 1e-4);
        let avg = gaussian_cell_average(0.1, 1.0, 0.0, 0.0, a, b);
        let mid = (-0.5 * ((a + b) / 2.0 / 0.1f64).powi(2)).exp();
        assert!((avg - mid).abs() < 1e-9);
    }

    #[test]
    fn gaussian_mass_matches_closed_form() {
        // integral over [-1, 1] is sigma sqrt(2 pi) up to e^-50 tails
        let dx = 0.01;
        let total: f64 = (0..200)
            .map(|j| {
                let a = -1.0 + j as f64 * dx;
                gaussian_cell_average(0.1, 1.0, 0.0, 0.0, a, a + dx) * dx
            })
            .sum();
        let expected = 0.1 * (2.0 * std::f64::consts::PI).sqrt();
        assert!((total - expected).abs() < 1e-13);
    }
}
