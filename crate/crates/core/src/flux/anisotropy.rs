use super::FluxModel;
use crate::error::{Error, Result};

/// Worst margins of the two anisotropy conditions over a sampled density grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnisotropyReport {
    /// `min over rho of f(rho)/rho - f'(rho)`.
    pub velocity_margin: f64,
    /// `min over pairs of min(v_l, v_r) - (f_r - f_l)/(rho_r - rho_l)`.
    pub wave_margin: f64,
    pub samples: usize,
}

impl AnisotropyReport {
    pub fn worst_margin(&self) -> f64 {
        self.velocity_margin.min(self.wave_margin)
    }

    /// Margins at or above `-1e-12` count as satisfied.
    pub fn passed(&self) -> bool {
        self.worst_margin() >= -1e-12
    }
}

/// Vehicle speed `f(rho)/rho`, with the free-flow limit 1 at `rho = 0`.
fn vehicle_speed(model: &FluxModel, rho: f64) -> f64 {
    if rho == 0.0 {
        model.derivative(0.0)
    } else {
        model.value(rho) / rho
    }
}

/// Checks that characteristics travel no faster than vehicles
/// (`f(rho)/rho >= f'(rho)`) and that every chord is slower than the
/// vehicles on both sides of it, on `samples` evenly spaced densities in
/// `[0, 1]`. Degenerate pairs `rho_l = rho_r` are skipped. At the flux
/// discontinuity the one-sided slope of the owning branch is used.
pub fn anisotropy_check(model: &FluxModel, samples: usize) -> Result<AnisotropyReport> {
    if samples < 2 {
        return Err(Error::Parameter(format!(
            "anisotropy check needs at least 2 samples, got {samples}"
        )));
    }
    let grid: Vec<f64> = (0..samples)
        .map(|i| i as f64 / (samples - 1) as f64)
        .collect();
    let flux: Vec<f64> = grid.iter().map(|&r| model.value(r)).collect();
    let speed: Vec<f64> = grid.iter().map(|&r| vehicle_speed(model, r)).collect();

    let mut velocity_margin = f64::INFINITY;
    for (i, &rho) in grid.iter().enumerate() {
        velocity_margin = velocity_margin.min(speed[i] - model.derivative(rho));
    }

    let mut wave_margin = f64::INFINITY;
    for l in 0..samples {
        for r in 0..samples {
            if l == r {
                continue;
            }
            let chord = (flux[r] - flux[l]) / (grid[r] - grid[l]);
            wave_margin = wave_margin.min(speed[l].min(speed[r]) - chord);
        }
    }

    Ok(AnisotropyReport {
        velocity_margin,
        wave_margin,
        samples,
    })
}
