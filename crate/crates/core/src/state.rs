//! Full dynamic state of one simulated cell.

use crate::coreshell::PhaseBoundaryState;
use crate::degradation::AgingState;
use crate::grid::SpatialGrid;
use crate::params::CellParameters;

/// Dynamic state at one time instant. Confined to a single simulation;
/// everything shared across simulations (parameters, tables, grids) is
/// immutable.
#[derive(Debug, Clone, PartialEq)]
pub struct CellState {
    /// Radial solid concentration, positive particle (cell-centered), mol/m^3.
    pub c_s_p: Vec<f64>,
    /// Radial solid concentration, negative particle, mol/m^3.
    pub c_s_n: Vec<f64>,
    /// Axial electrolyte concentration, mol/m^3.
    pub c_e: Vec<f64>,
    /// Axial electrolyte potential, V (gauge: zero at the negative collector).
    pub phi_e: Vec<f64>,
    /// Exogenous temperature, K.
    pub temperature: f64,
    /// Simulation clock, s.
    pub time: f64,
    pub aging: AgingState,
    pub coreshell: Option<PhaseBoundaryState>,
}

impl CellState {
    /// Equilibrium state at the given SOC: uniform concentrations in both
    /// particles per the stoichiometric window, uniform electrolyte.
    pub fn at_soc(params: &CellParameters, grid: &SpatialGrid, soc: f64, t_kelvin: f64) -> Self {
        let theta_n = params.theta_n_0 + soc * (params.theta_n_100 - params.theta_n_0);
        let theta_p = params.theta_p_0 - soc * (params.theta_p_0 - params.theta_p_100);
        Self {
            c_s_p: vec![theta_p * params.c_s_max_p; grid.n_r],
            c_s_n: vec![theta_n * params.c_s_max_n; grid.n_r],
            c_e: vec![params.c_e_init; grid.n_x_total()],
            phi_e: vec![0.0; grid.n_x_total()],
            temperature: t_kelvin,
            time: 0.0,
            aging: AgingState::fresh(params),
            coreshell: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn soc_endpoints_hit_window() {
        let p = CellParameters::default_nmc();
        let g = SpatialGrid::default_production();
        let full = CellState::at_soc(&p, &g, 1.0, 298.15);
        assert_relative_eq!(full.c_s_n[0] / p.c_s_max_n, p.theta_n_100, epsilon = 1e-12);
        let empty = CellState::at_soc(&p, &g, 0.0, 298.15);
        assert_relative_eq!(empty.c_s_p[0] / p.c_s_max_p, p.theta_p_0, epsilon = 1e-12);
    }
}
