//! Degradation mechanisms: SEI layer growth, lithium plating, surface film
//! thickness, loss of active material, and the induced porosity variation.
//! Side currents feed the negative-particle surface boundary condition, the
//! film adds a series resistance, and porosity changes propagate into the
//! effective electrolyte transport.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{FARADAY, GAS_CONSTANT};
use crate::params::{CellParameters, Electrode};

#[derive(Debug, Error, PartialEq)]
pub enum DegradationError {
    #[error("porosity collapsed to {0} in the {1} electrode")]
    PorosityCollapse(f64, &'static str),
    #[error("degradation parameter out of range: {0}")]
    Parameter(String),
}

/// Kinetic and material constants of the aging mechanisms.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct AgingParameters {
    /// SEI kinetic constant at 25 degC, m/s.
    pub k_f_ref: f64,
    /// Activation energy for the optional Arrhenius factor on k_f, J/mol.
    pub ea_k_f: f64,
    /// Solvent concentration at the particle surface, mol/m^3 (held
    /// constant: solvent excess).
    pub c_solv_surf: f64,
    /// Side-reaction transfer coefficient.
    pub alpha_s: f64,
    /// Plating exchange current, A/m^2.
    pub i_0_lpl: f64,
    /// Fraction of plated lithium converted to SEI.
    pub beta_lpl: f64,
    /// Molar masses, kg/mol.
    pub m_sei: f64,
    pub m_li: f64,
    /// Densities, kg/m^3.
    pub rho_sei: f64,
    pub rho_li: f64,
    /// SEI ionic conductivity, S/m.
    pub kappa_sei: f64,
    /// Inactive-area evolution coefficients, 1/s.
    pub beta_prime_p: f64,
    pub beta_prime_n: f64,
    /// Specific fracture surface areas, 1/m.
    pub a_f_p: f64,
    pub a_f_n: f64,
}

impl Default for AgingParameters {
    /// All mechanisms off; material constants at standard values so enabling
    /// one mechanism needs only its kinetic constant.
    fn default() -> Self {
        Self {
            k_f_ref: 0.0,
            ea_k_f: 0.0,
            c_solv_surf: 4541.0,
            alpha_s: 0.5,
            i_0_lpl: 0.0,
            beta_lpl: 0.0,
            m_sei: 0.162,
            m_li: 6.94e-3,
            rho_sei: 1690.0,
            rho_li: 534.0,
            kappa_sei: 5e-6,
            beta_prime_p: 0.0,
            beta_prime_n: 0.0,
            a_f_p: 0.0,
            a_f_n: 0.0,
        }
    }
}

impl AgingParameters {
    pub fn validate(&self) -> Result<(), DegradationError> {
        let nonneg = [
            ("k_f_ref", self.k_f_ref),
            ("c_solv_surf", self.c_solv_surf),
            ("alpha_s", self.alpha_s),
            ("i_0_lpl", self.i_0_lpl),
            ("kappa_sei", self.kappa_sei),
            ("beta_prime_p", self.beta_prime_p),
            ("beta_prime_n", self.beta_prime_n),
            ("a_f_p", self.a_f_p),
            ("a_f_n", self.a_f_n),
        ];
        for (name, v) in nonneg {
            if v < 0.0 || !v.is_finite() {
                return Err(DegradationError::Parameter(format!(
                    "{name} must be nonnegative, got {v}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.beta_lpl) {
            return Err(DegradationError::Parameter(format!(
                "beta_lpl must be in [0, 1], got {}",
                self.beta_lpl
            )));
        }
        for (name, v) in [
            ("m_sei", self.m_sei),
            ("m_li", self.m_li),
            ("rho_sei", self.rho_sei),
            ("rho_li", self.rho_li),
        ] {
            if v <= 0.0 {
                return Err(DegradationError::Parameter(format!(
                    "{name} must be strictly positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    fn k_f(&self, t_kelvin: f64) -> f64 {
        self.k_f_ref * crate::params::arrhenius(self.ea_k_f, t_kelvin)
    }
}

/// Slow aging state carried inside the cell state. Fresh cells hold the
/// identity values (zero films, geometric areas, initial porosities).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AgingState {
    /// Cumulative SEI and plated-lithium concentrations, mol/m^3.
    pub c_sei: f64,
    pub c_li: f64,
    /// Surface film thickness and its two components, m.
    pub l_film: f64,
    pub l_sei: f64,
    pub l_li: f64,
    /// Inactive specific areas, 1/m.
    pub a_ina_p: f64,
    pub a_ina_n: f64,
    /// Total specific areas a + a_f - a_ina, 1/m.
    pub a_t_p: f64,
    pub a_t_n: f64,
    /// Current porosities.
    pub eps_p: f64,
    pub eps_n: f64,
    /// Film resistance, Ohm.
    pub r_film: f64,
    /// Times the porosity update had to clamp at the upper bound.
    pub porosity_clamps: u32,
}

impl AgingState {
    pub fn fresh(params: &CellParameters) -> Self {
        Self {
            c_sei: 0.0,
            c_li: 0.0,
            l_film: 0.0,
            l_sei: 0.0,
            l_li: 0.0,
            a_ina_p: 0.0,
            a_ina_n: 0.0,
            a_t_p: params.specific_area(Electrode::Positive),
            a_t_n: params.specific_area(Electrode::Negative),
            eps_p: params.eps_p,
            eps_n: params.eps_n,
            r_film: 0.0,
            porosity_clamps: 0,
        }
    }

    /// Fresh state with the fracture areas already added to the totals.
    pub fn fresh_with(params: &CellParameters, aging: &AgingParameters) -> Self {
        let mut s = Self::fresh(params);
        s.a_t_p += aging.a_f_p;
        s.a_t_n += aging.a_f_n;
        s
    }
}

/// Tafel side current of SEI formation, A/m^3 (nonpositive). `phi_s_n` is
/// the negative-electrode solid potential `U_n + eta_n + R_film I`; the
/// exponent sees `phi_s_n - R_film I`.
pub fn sei_current(
    a_t_n: f64,
    phi_s_n: f64,
    current: f64,
    r_film: f64,
    t_kelvin: f64,
    aging: &AgingParameters,
) -> f64 {
    -FARADAY
        * a_t_n
        * aging.k_f(t_kelvin)
        * aging.c_solv_surf
        * tafel(phi_s_n - r_film * current, aging.alpha_s, t_kelvin)
}

/// Tafel side current of irreversible lithium plating, A/m^3 (nonpositive).
pub fn plating_current(
    a_t_n: f64,
    phi_s_n: f64,
    current: f64,
    r_film: f64,
    t_kelvin: f64,
    aging: &AgingParameters,
) -> f64 {
    -2.0 * a_t_n * aging.i_0_lpl * tafel(phi_s_n - r_film * current, aging.alpha_s, t_kelvin)
}

fn tafel(driving: f64, alpha_s: f64, t_kelvin: f64) -> f64 {
    (-alpha_s * FARADAY / (GAS_CONSTANT * t_kelvin) * driving).exp()
}

/// Growth rates of the SEI and plated-lithium concentrations, mol/(m^3 s).
/// Both are nonnegative for nonpositive side currents, and satisfy
/// `2F (dc_sei + dc_li) = -(j_sei + j_lpl)` exactly.
pub fn species_rates(j_sei: f64, j_lpl: f64, aging: &AgingParameters) -> (f64, f64) {
    let dc_sei = -(j_sei / (2.0 * FARADAY) + j_lpl / (2.0 * FARADAY) * aging.beta_lpl);
    let dc_li = -j_lpl / (2.0 * FARADAY) * (1.0 - aging.beta_lpl);
    (dc_sei, dc_li)
}

/// Film growth rates split by species, m/s: `(dl_sei, dl_li)`; the total
/// film rate is their sum, keeping `l_film = l_sei + l_li` exact.
pub fn film_growth(dc_sei: f64, dc_li: f64, a_t_n: f64, aging: &AgingParameters) -> (f64, f64) {
    (
        dc_sei * aging.m_sei / aging.rho_sei / a_t_n,
        dc_li * aging.m_li / aging.rho_li / a_t_n,
    )
}

/// Film resistance `L_sei / (a_t A L_n kappa_sei)`, Ohm.
pub fn film_resistance(l_sei: f64, a_t_n: f64, a_cell: f64, l_n: f64, kappa_sei: f64) -> f64 {
    if kappa_sei == 0.0 {
        return 0.0;
    }
    l_sei / (a_t_n * a_cell * l_n * kappa_sei)
}

/// One loss-of-active-material step for one electrode. Uses the exact
/// exponential solution of `da_ina/dt = beta' (a + a_f - a_ina)` over `dt`,
/// so `a_t(t) = a_t(0) exp(-beta' t)` holds to machine precision.
pub fn lam_step(a_ina: f64, a_geom: f64, a_f: f64, beta_prime: f64, dt: f64) -> (f64, f64) {
    let ceiling = a_geom + a_f;
    let a_t = (ceiling - a_ina) * (-beta_prime * dt).exp();
    (ceiling - a_t, a_t)
}

/// Porosity of one electrode given its inactive/fracture areas and (for the
/// negative electrode) the film thickness. Clamps at the upper bound and
/// errors when porosity collapses to zero or below.
pub fn porosity_update(
    params: &CellParameters,
    electrode: Electrode,
    a_ina: f64,
    a_f: f64,
    l_film: f64,
) -> Result<(f64, bool), DegradationError> {
    let (eps0, r, name) = match electrode {
        Electrode::Positive => (params.eps_p, params.r_p, "positive"),
        Electrode::Negative => (params.eps_n, params.r_n, "negative"),
    };
    let mut eps = eps0 + (a_ina - a_f) * r / 3.0;
    if electrode == Electrode::Negative {
        eps -= params.nu_n * 3.0 * l_film / r;
    }
    if eps <= 0.0 {
        return Err(DegradationError::PorosityCollapse(eps, name));
    }
    let mut clamped = false;
    if eps >= 1.0 {
        eps = 1.0 - f64::EPSILON;
        clamped = true;
    }
    Ok((eps, clamped))
}

/// Advances the slow aging quantities over `dt` given side currents computed
/// from the electrochemical state. Species use explicit Euler (their time
/// constants are hours); LAM uses its exact exponential update.
pub fn advance_aging(
    state: &mut AgingState,
    j_sei: f64,
    j_lpl: f64,
    dt: f64,
    params: &CellParameters,
    aging: &AgingParameters,
) -> Result<(), DegradationError> {
    let (dc_sei, dc_li) = species_rates(j_sei, j_lpl, aging);
    state.c_sei += dc_sei * dt;
    state.c_li += dc_li * dt;

    let (dl_sei, dl_li) = film_growth(dc_sei, dc_li, state.a_t_n, aging);
    state.l_sei += dl_sei * dt;
    state.l_li += dl_li * dt;
    state.l_film = state.l_sei + state.l_li;

    let (a_ina_p, a_t_p) = lam_step(
        state.a_ina_p,
        params.specific_area(Electrode::Positive),
        aging.a_f_p,
        aging.beta_prime_p,
        dt,
    );
    let (a_ina_n, a_t_n) = lam_step(
        state.a_ina_n,
        params.specific_area(Electrode::Negative),
        aging.a_f_n,
        aging.beta_prime_n,
        dt,
    );
    state.a_ina_p = a_ina_p;
    state.a_t_p = a_t_p;
    state.a_ina_n = a_ina_n;
    state.a_t_n = a_t_n;

    state.r_film = film_resistance(
        state.l_sei,
        state.a_t_n,
        params.a_cell,
        params.l_n,
        aging.kappa_sei,
    );

    let (eps_p, cl_p) =
        porosity_update(params, Electrode::Positive, state.a_ina_p, aging.a_f_p, 0.0)?;
    let (eps_n, cl_n) = porosity_update(
        params,
        Electrode::Negative,
        state.a_ina_n,
        aging.a_f_n,
        state.l_film,
    )?;
    state.eps_p = eps_p;
    state.eps_n = eps_n;
    if cl_p || cl_n {
        state.porosity_clamps += 1;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn aging_on() -> AgingParameters {
        AgingParameters {
            k_f_ref: 1e-15,
            i_0_lpl: 1e-4,
            beta_lpl: 0.3,
            ..AgingParameters::default()
        }
    }

    #[test]
    fn sei_vanishes_without_kinetics_or_solvent() {
        let mut a = aging_on();
        a.k_f_ref = 0.0;
        assert_eq!(sei_current(3e5, 0.1, 1.0, 0.0, 298.15, &a), 0.0);
        let mut a = aging_on();
        a.c_solv_surf = 0.0;
        assert_eq!(sei_current(3e5, 0.1, 1.0, 0.0, 298.15, &a), 0.0);
    }

    #[test]
    fn sei_magnitude_decreases_with_potential() {
        let a = aging_on();
        let j_low = sei_current(3e5, 0.05, 0.0, 0.0, 298.15, &a);
        let j_high = sei_current(3e5, 0.20, 0.0, 0.0, 298.15, &a);
        assert!(j_low < 0.0 && j_high < 0.0);
        assert!(j_high.abs() < j_low.abs());
    }

    #[test]
    fn plating_zero_without_exchange_current() {
        let mut a = aging_on();
        a.i_0_lpl = 0.0;
        assert_eq!(plating_current(3e5, 0.05, 1.0, 0.0, 298.15, &a), 0.0);
    }

    #[test]
    fn plating_to_sei_ratio_independent_of_potential() {
        let a = aging_on();
        let ratio = |phi: f64| {
            plating_current(3e5, phi, 0.0, 0.0, 298.15, &a)
                / sei_current(3e5, phi, 0.0, 0.0, 298.15, &a)
        };
        assert_relative_eq!(ratio(0.02), ratio(0.3), max_relative = 1e-12);
    }

    #[test]
    fn colder_cell_plates_harder_at_negative_driving() {
        let a = aging_on();
        // negative driving potential: the exponent is positive, and halving T
        // doubles it
        let warm = plating_current(3e5, -0.05, 0.0, 0.0, 300.0, &a);
        let cold = plating_current(3e5, -0.05, 0.0, 0.0, 150.0, &a);
        assert!(cold.abs() > warm.abs());
    }

    #[test]
    fn species_rates_edge_cases() {
        let mut a = aging_on();
        a.beta_lpl = 1.0;
        let (_, dc_li) = species_rates(-5.0, -3.0, &a);
        assert_eq!(dc_li, 0.0);
        a.beta_lpl = 0.0;
        let (dc_sei, dc_li) = species_rates(0.0, -3.0, &a);
        assert_eq!(dc_sei, 0.0);
        assert_relative_eq!(dc_li, 3.0 / (2.0 * FARADAY), epsilon = 1e-18);
    }

    proptest! {
        #[test]
        fn species_rates_identity(
            j_sei in -10.0..0.0f64,
            j_lpl in -10.0..0.0f64,
            beta in 0.0..1.0f64,
        ) {
            let a = AgingParameters { beta_lpl: beta, ..aging_on() };
            let (dc_sei, dc_li) = species_rates(j_sei, j_lpl, &a);
            prop_assert!(dc_sei >= 0.0 && dc_li >= 0.0);
            let lhs = 2.0 * FARADAY * (dc_sei + dc_li);
            prop_assert!((lhs + j_sei + j_lpl).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn film_split_and_identity() {
        let a = aging_on();
        let (dl_sei, dl_li) = film_growth(2.0, 0.0, 3e5, &a);
        assert!(dl_sei > 0.0);
        assert_eq!(dl_li, 0.0);
        // dimensional spot check: (mol/m^3/s)(kg/mol)/(kg/m^3)/(1/m) = m/s
        let expected = 2.0 * a.m_sei / a.rho_sei / 3e5;
        assert_relative_eq!(dl_sei, expected, epsilon = 1e-18);
    }

    #[test]
    fn film_resistance_linear_in_thickness() {
        let r1 = film_resistance(1e-7, 3e5, 0.1, 7e-5, 5e-6);
        let r2 = film_resistance(2e-7, 3e5, 0.1, 7e-5, 5e-6);
        assert_relative_eq!(r2, 2.0 * r1, epsilon = 1e-12);
        assert_eq!(film_resistance(0.0, 3e5, 0.1, 7e-5, 5e-6), 0.0);
        // arithmetic oracle
        let expected = 1e-7 / (3e5 * 0.1 * 7e-5 * 5e-6);
        assert_relative_eq!(r1, expected, epsilon = 1e-12);
    }

    #[test]
    fn lam_exact_exponential() {
        let a_geom = 3e5;
        let a_f = 1e4;
        let beta = 3e-7;
        let mut a_ina = 0.0;
        let mut a_t = a_geom + a_f;
        let dt = 60.0;
        let steps = 6000; // 100 h
        for _ in 0..steps {
            let (ina, t) = lam_step(a_ina, a_geom, a_f, beta, dt);
            a_ina = ina;
            a_t = t;
        }
        let expected = (a_geom + a_f) * (-beta * dt * steps as f64).exp();
        assert_relative_eq!(a_t, expected, max_relative = 1e-12);
    }

    #[test]
    fn lam_fixed_points() {
        let (ina, a_t) = lam_step(5.0, 3.0, 2.0, 0.1, 100.0);
        assert_relative_eq!(ina, 5.0, epsilon = 1e-12); // at ceiling: zero rate
        assert_relative_eq!(a_t, 0.0, epsilon = 1e-12);
        let (ina, _) = lam_step(1.0, 3.0, 2.0, 0.0, 100.0);
        assert_eq!(ina, 1.0); // beta' = 0: unchanged
    }

    #[test]
    fn porosity_identity_and_monotonicity() {
        let p = CellParameters::default_nmc();
        // a_ina == a_f, no film: unchanged
        let (eps, _) = porosity_update(&p, Electrode::Negative, 1e4, 1e4, 0.0).unwrap();
        assert_relative_eq!(eps, p.eps_n, epsilon = 1e-12);
        // growing film shrinks negative porosity
        let (eps_film, _) = porosity_update(&p, Electrode::Negative, 1e4, 1e4, 1e-7).unwrap();
        assert!(eps_film < eps);
        // fracture only shrinks positive porosity by a_f R / 3
        let a_f = 1e4;
        let (eps_p, _) = porosity_update(&p, Electrode::Positive, 0.0, a_f, 0.0).unwrap();
        assert_relative_eq!(eps_p, p.eps_p - a_f * p.r_p / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn porosity_collapse_detected() {
        let p = CellParameters::default_nmc();
        let err = porosity_update(&p, Electrode::Negative, 0.0, 0.0, 1e-4).unwrap_err();
        assert!(matches!(err, DegradationError::PorosityCollapse(_, _)));
    }

    #[test]
    fn advance_keeps_film_identity_and_monotone_inventory() {
        let p = CellParameters::default_nmc();
        let a = aging_on();
        let mut s = AgingState::fresh_with(&p, &a);
        let mut last_c_sei = 0.0;
        let mut last_c_li = 0.0;
        for _ in 0..100 {
            let j_sei = sei_current(s.a_t_n, 0.08, 1.0, s.r_film, 298.15, &a);
            let j_lpl = plating_current(s.a_t_n, 0.08, 1.0, s.r_film, 298.15, &a);
            assert!(j_sei <= 0.0 && j_lpl <= 0.0);
            advance_aging(&mut s, j_sei, j_lpl, 10.0, &p, &a).unwrap();
            assert!(s.c_sei >= last_c_sei && s.c_li >= last_c_li);
            assert_eq!(s.l_film, s.l_sei + s.l_li);
            last_c_sei = s.c_sei;
            last_c_li = s.c_li;
        }
        assert!(s.r_film > 0.0);
    }
}
