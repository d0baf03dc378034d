//! Electrolyte mass and charge transport across positive electrode,
//! separator, and negative electrode. Conservative finite volumes with
//! two-point face fluxes; interfaces sit on shared faces so concentration
//! and flux continuity hold by construction.

use super::kinetics::effective_transport;
use super::EspmError;
use crate::constants::{FARADAY, GAS_CONSTANT};
use crate::grid::{AxialLayout, Region};
use crate::params::CellParameters;

/// Current porosities of the two electrodes (aging shifts them away from the
/// initial values held in [`CellParameters`]).
#[derive(Debug, Clone, Copy)]
pub struct Porosities {
    pub eps_p: f64,
    pub eps_n: f64,
}

impl Porosities {
    pub fn fresh(params: &CellParameters) -> Self {
        Self {
            eps_p: params.eps_p,
            eps_n: params.eps_n,
        }
    }
}

fn cell_porosity(params: &CellParameters, eps: Porosities, region: Region) -> f64 {
    match region {
        Region::Positive => eps.eps_p,
        Region::Separator => params.eps_s,
        Region::Negative => eps.eps_n,
    }
}

/// Pore-wall molar source J_i of the region, mol/(m^3 s). Positive current
/// (discharge) releases lithium into the electrolyte at the negative
/// electrode and consumes it at the positive one; the separator is inert.
pub fn pore_wall_flux(params: &CellParameters, current: f64, region: Region) -> f64 {
    match region {
        Region::Positive => -current / (params.a_cell * FARADAY * params.l_p),
        Region::Separator => 0.0,
        Region::Negative => current / (params.a_cell * FARADAY * params.l_n),
    }
}

/// Two-point face conductance between adjacent cells with widths `dx` and
/// transport coefficients `k` (diffusivity or conductivity).
fn face_conductance(dx_a: f64, k_a: f64, dx_b: f64, k_b: f64) -> f64 {
    1.0 / (dx_a / (2.0 * k_a) + dx_b / (2.0 * k_b))
}

/// Advances the electrolyte concentration one implicit step.
///
/// Zero flux at both collectors; the pore-wall sources are held explicit
/// (they depend only on the applied current). The effective diffusivity is
/// evaluated per cell at the start-of-step concentration, which keeps the
/// system linear without breaking discrete conservation.
pub fn electrolyte_mass_step(
    c_e: &mut [f64],
    current: f64,
    dt: f64,
    params: &CellParameters,
    layout: &AxialLayout,
    eps: Porosities,
    t_kelvin: f64,
) -> Result<(), EspmError> {
    if dt <= 0.0 {
        return Err(EspmError::Domain(format!("dt must be positive, got {dt}")));
    }
    let n = layout.n_cells();
    debug_assert_eq!(c_e.len(), n);

    let d_eff: Vec<f64> = (0..n)
        .map(|i| {
            let e = cell_porosity(params, eps, layout.region[i]);
            effective_transport(e, params.brugg, params.d_e.eval(c_e[i], t_kelvin))
                .expect("porosity and bulk diffusivity validated")
        })
        .collect();

    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        let e = cell_porosity(params, eps, layout.region[i]);
        let cap = e * layout.dx[i] / dt;
        let g_in = if i == 0 {
            0.0
        } else {
            face_conductance(layout.dx[i - 1], d_eff[i - 1], layout.dx[i], d_eff[i])
        };
        let g_out = if i == n - 1 {
            0.0
        } else {
            face_conductance(layout.dx[i], d_eff[i], layout.dx[i + 1], d_eff[i + 1])
        };
        lower[i] = -g_in;
        upper[i] = -g_out;
        diag[i] = cap + g_in + g_out;
        let source = (1.0 - params.t_plus) * pore_wall_flux(params, current, layout.region[i]);
        rhs[i] = cap * c_e[i] + source * layout.dx[i];
    }

    if !crate::numeric::solve_tridiagonal(&lower, &diag, &upper, &mut rhs) {
        return Err(EspmError::Singular("electrolyte mass"));
    }
    for (i, &v) in rhs.iter().enumerate() {
        if v <= 0.0 {
            return Err(EspmError::Depletion { cell: i, value: v });
        }
    }
    c_e.copy_from_slice(&rhs);
    Ok(())
}

/// Total electrolyte lithium, integral of porosity * concentration over x
/// (per unit cell area).
pub fn electrolyte_lithium(
    c_e: &[f64],
    params: &CellParameters,
    layout: &AxialLayout,
    eps: Porosities,
) -> f64 {
    let mut total = 0.0;
    for ((&c, &dx), &region) in c_e.iter().zip(&layout.dx).zip(&layout.region) {
        total += cell_porosity(params, eps, region) * c * dx;
    }
    total
}

/// Solves the electrolyte charge equation for the potential profile.
///
/// Returns the cell-centered potential (gauged to zero at the negative
/// collector face) and the collector-to-collector difference entering the
/// terminal voltage. Region conductivities are evaluated at the region
/// average concentration; the concentration overpotential term carries
/// `2RT(1 - t_plus)/F` scaled by the configurable thermodynamic multiplier.
pub fn electrolyte_potential_solve(
    c_e: &[f64],
    current: f64,
    t_kelvin: f64,
    params: &CellParameters,
    layout: &AxialLayout,
    eps: Porosities,
) -> Result<(Vec<f64>, f64), EspmError> {
    let n = layout.n_cells();
    debug_assert_eq!(c_e.len(), n);
    for (i, &c) in c_e.iter().enumerate() {
        if c <= 0.0 {
            return Err(EspmError::Depletion { cell: i, value: c });
        }
    }

    let kappa_region = |region: Region| -> Result<f64, EspmError> {
        let c_avg = layout.region_average(c_e, region);
        let e = cell_porosity(params, eps, region);
        let bulk = params.kappa_e.eval(c_avg, t_kelvin);
        if bulk <= 0.0 {
            return Err(EspmError::Singular("electrolyte conductivity"));
        }
        Ok(effective_transport(e, params.brugg, bulk)
            .expect("porosity validated, bulk checked above"))
    };
    let kap = [
        kappa_region(Region::Positive)?,
        kappa_region(Region::Separator)?,
        kappa_region(Region::Negative)?,
    ];
    let kappa_of = |region: Region| match region {
        Region::Positive => kap[0],
        Region::Separator => kap[1],
        Region::Negative => kap[2],
    };

    let beta = 2.0 * GAS_CONSTANT * t_kelvin * params.v_td * (1.0 - params.t_plus) / FARADAY;
    let ln_c: Vec<f64> = c_e.iter().map(|&c| c.ln()).collect();

    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        let g_in = if i == 0 {
            0.0
        } else {
            face_conductance(
                layout.dx[i - 1],
                kappa_of(layout.region[i - 1]),
                layout.dx[i],
                kappa_of(layout.region[i]),
            )
        };
        let g_out = if i == n - 1 {
            0.0
        } else {
            face_conductance(
                layout.dx[i],
                kappa_of(layout.region[i]),
                layout.dx[i + 1],
                kappa_of(layout.region[i + 1]),
            )
        };
        lower[i] = -g_in;
        upper[i] = -g_out;
        diag[i] = g_in + g_out;
        let diffusional = if i == 0 {
            g_out * (ln_c[i + 1] - ln_c[i])
        } else if i == n - 1 {
            -g_in * (ln_c[i] - ln_c[i - 1])
        } else {
            g_out * (ln_c[i + 1] - ln_c[i]) - g_in * (ln_c[i] - ln_c[i - 1])
        };
        // row i encodes -d[kappa phi']: the balance demands
        // d[kappa phi'] = beta d[kappa ln(c)'] - F J dx
        let source = FARADAY * pore_wall_flux(params, current, layout.region[i]);
        rhs[i] = source * layout.dx[i] - beta * diffusional;
    }
    // gauge: pin the last cell, shift to the collector face afterwards
    lower[n - 1] = 0.0;
    upper[n - 1] = 0.0;
    diag[n - 1] = 1.0;
    rhs[n - 1] = 0.0;

    if !crate::numeric::solve_tridiagonal(&lower, &diag, &upper, &mut rhs) {
        return Err(EspmError::Singular("electrolyte potential"));
    }

    // collector-face values by parabolic extrapolation (zero-slope faces)
    let face_pos = (9.0 * rhs[0] - rhs[1]) / 8.0;
    let face_neg = (9.0 * rhs[n - 1] - rhs[n - 2]) / 8.0;
    let delta_phi = face_pos - face_neg;
    for v in rhs.iter_mut() {
        *v -= face_neg;
    }
    Ok((rhs, delta_phi))
}

/// Closed-form ohmic electrolyte drop for uniform concentration, used as an
/// oracle for the potential solver and as a sanity bound in reports.
pub fn ohmic_delta_phi(
    current: f64,
    params: &CellParameters,
    eps: Porosities,
    kappa_bulk: f64,
) -> f64 {
    let kp = effective_transport(eps.eps_p, params.brugg, kappa_bulk).unwrap();
    let ks = effective_transport(params.eps_s, params.brugg, kappa_bulk).unwrap();
    let kn = effective_transport(eps.eps_n, params.brugg, kappa_bulk).unwrap();
    -(current / params.a_cell)
        * (params.l_p / (2.0 * kp) + params.l_s / ks + params.l_n / (2.0 * kn))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpatialGrid;
    use approx::assert_relative_eq;

    fn setup() -> (CellParameters, AxialLayout) {
        let p = CellParameters::default_nmc();
        let g = SpatialGrid::new(5, 12, 6, 12).unwrap();
        let layout = AxialLayout::build(&p, &g);
        (p, layout)
    }

    #[test]
    fn no_current_uniform_is_fixed_point() {
        let (p, layout) = setup();
        let eps = Porosities::fresh(&p);
        let mut c = vec![p.c_e_init; layout.n_cells()];
        electrolyte_mass_step(&mut c, 0.0, 5.0, &p, &layout, eps, 298.15).unwrap();
        for v in &c {
            assert_relative_eq!(*v, p.c_e_init, epsilon = 1e-9);
        }
    }

    #[test]
    fn lithium_conserved_under_load() {
        let (p, layout) = setup();
        let eps = Porosities::fresh(&p);
        let mut c = vec![p.c_e_init; layout.n_cells()];
        let before = electrolyte_lithium(&c, &p, &layout, eps);
        for _ in 0..500 {
            electrolyte_mass_step(&mut c, 3.0, 1.0, &p, &layout, eps, 298.15).unwrap();
            let after = electrolyte_lithium(&c, &p, &layout, eps);
            assert_relative_eq!(after, before, max_relative = 1e-10);
        }
        // gradient developed
        assert!(c[0] < *c.last().unwrap());
    }

    #[test]
    fn symmetric_geometry_gives_antisymmetric_profile() {
        let mut p = CellParameters::default_nmc();
        p.l_p = 70e-6;
        p.l_n = 70e-6;
        p.eps_p = 0.3;
        p.eps_n = 0.3;
        let g = SpatialGrid::new(5, 10, 6, 10).unwrap();
        let layout = AxialLayout::build(&p, &g);
        let eps = Porosities::fresh(&p);
        let mut c = vec![p.c_e_init; layout.n_cells()];
        for _ in 0..2000 {
            electrolyte_mass_step(&mut c, 3.0, 1.0, &p, &layout, eps, 298.15).unwrap();
        }
        let n = c.len();
        for i in 0..n {
            assert_relative_eq!(c[i] + c[n - 1 - i], 2.0 * p.c_e_init, max_relative = 1e-8);
        }
    }

    #[test]
    fn potential_zero_without_current() {
        let (p, layout) = setup();
        let eps = Porosities::fresh(&p);
        let c = vec![p.c_e_init; layout.n_cells()];
        let (phi, dphi) = electrolyte_potential_solve(&c, 0.0, 298.15, &p, &layout, eps).unwrap();
        assert_relative_eq!(dphi, 0.0, epsilon = 1e-15);
        for v in phi {
            assert_relative_eq!(v, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn potential_matches_ohmic_closed_form_on_uniform_concentration() {
        // the interface half-cells see a linearly varying flux, so the
        // two-point scheme carries an O(dx^2) error there; check agreement
        // at two grids and second-order shrinkage between them
        let p = CellParameters::default_nmc();
        let eps = Porosities::fresh(&p);
        let current = 3.0;
        let kappa_bulk = p.kappa_e.eval(p.c_e_init, 298.15);
        let expected = ohmic_delta_phi(current, &p, eps, kappa_bulk);
        let solve = |nx: usize| -> f64 {
            let g = SpatialGrid::new(3, nx, nx / 2, nx).unwrap();
            let layout = AxialLayout::build(&p, &g);
            let c = vec![p.c_e_init; layout.n_cells()];
            let (_, dphi) =
                electrolyte_potential_solve(&c, current, 298.15, &p, &layout, eps).unwrap();
            dphi
        };
        let coarse = solve(12);
        let fine = solve(48);
        assert!(coarse < 0.0, "discharge must lose electrolyte potential");
        assert_relative_eq!(coarse, expected, max_relative = 5e-3);
        assert_relative_eq!(fine, expected, max_relative = 5e-4);
        let ratio = (coarse - expected).abs() / (fine - expected).abs();
        assert!(
            ratio > 8.0,
            "expected ~16x error reduction for 4x refinement, got {ratio:.1}x"
        );
    }

    #[test]
    fn potential_is_linear_in_current_for_uniform_concentration() {
        let (p, layout) = setup();
        let eps = Porosities::fresh(&p);
        let c = vec![p.c_e_init; layout.n_cells()];
        let (_, d1) = electrolyte_potential_solve(&c, 1.5, 298.15, &p, &layout, eps).unwrap();
        let (_, d2) = electrolyte_potential_solve(&c, 3.0, 298.15, &p, &layout, eps).unwrap();
        assert_relative_eq!(d2, 2.0 * d1, max_relative = 1e-12);
    }

    #[test]
    fn depleted_concentration_rejected() {
        let (p, layout) = setup();
        let eps = Porosities::fresh(&p);
        let mut c = vec![p.c_e_init; layout.n_cells()];
        c[3] = 0.0;
        assert!(matches!(
            electrolyte_potential_solve(&c, 1.0, 298.15, &p, &layout, eps),
            Err(EspmError::Depletion { cell: 3, .. })
        ));
    }
}
