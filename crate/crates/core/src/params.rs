//! Cell parameter set: geometry, transport, kinetics, and the stoichiometric
//! window. Immutable after validation; simulations share it by reference.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{GAS_CONSTANT, T_REF};

#[derive(Debug, Error, PartialEq)]
pub enum ParameterError {
    #[error("parameter `{0}` must be strictly positive, got {1}")]
    NonPositive(&'static str, f64),
    #[error("parameter `{0}` must lie in (0, 1), got {1}")]
    NotUnitInterval(&'static str, f64),
    #[error("stoichiometry window invalid: {0}")]
    Window(String),
}

/// Bulk transport property with optional concentration polynomial and
/// Arrhenius temperature scaling. The default is a constant.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TransportProperty {
    /// Polynomial coefficients in the concentration (mol/m^3), constant term
    /// first. A single coefficient means no concentration dependence.
    pub coeffs: Vec<f64>,
    /// Activation energy J/mol for Arrhenius scaling about 25 degC; 0 = none.
    #[serde(default)]
    pub activation_energy: f64,
}

impl TransportProperty {
    pub fn constant(value: f64) -> Self {
        Self {
            coeffs: vec![value],
            activation_energy: 0.0,
        }
    }

    /// Evaluates the property at electrolyte concentration `c` and
    /// temperature `t_kelvin`.
    pub fn eval(&self, c: f64, t_kelvin: f64) -> f64 {
        let mut v = 0.0;
        for &a in self.coeffs.iter().rev() {
            v = v * c + a;
        }
        if self.activation_energy != 0.0 {
            v *= arrhenius(self.activation_energy, t_kelvin);
        }
        v
    }
}

/// Arrhenius factor exp(-Ea/R (1/T - 1/T_ref)).
pub fn arrhenius(activation_energy: f64, t_kelvin: f64) -> f64 {
    (-activation_energy / GAS_CONSTANT * (1.0 / t_kelvin - 1.0 / T_REF)).exp()
}

/// Physical and geometric description of one cell.
///
/// Units follow SI throughout: lengths m, area m^2, diffusivities m^2/s,
/// conductivity S/m, concentrations mol/m^3, resistances Ohm, reaction rates
/// m^2.5/(mol^0.5 s), activation energies J/mol.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CellParameters {
    pub a_cell: f64,
    pub l_p: f64,
    pub l_s: f64,
    pub l_n: f64,
    pub r_p: f64,
    pub r_n: f64,
    pub eps_p: f64,
    pub eps_s: f64,
    pub eps_n: f64,
    pub nu_p: f64,
    pub nu_n: f64,
    pub d_s_p_ref: f64,
    pub d_s_n_ref: f64,
    pub d_e: TransportProperty,
    pub kappa_e: TransportProperty,
    pub t_plus: f64,
    pub brugg: f64,
    /// Thermodynamic-factor multiplier on the electrolyte concentration
    /// overpotential term; 1 by default.
    pub v_td: f64,
    pub k_p: f64,
    pub k_n: f64,
    pub c_s_max_p: f64,
    pub c_s_max_n: f64,
    pub c_e_init: f64,
    pub theta_p_0: f64,
    pub theta_p_100: f64,
    pub theta_n_0: f64,
    pub theta_n_100: f64,
    pub r_l: f64,
    pub r_el: f64,
    pub ea_d_s_p: f64,
    pub ea_d_s_n: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Electrode {
    Positive,
    Negative,
}

impl CellParameters {
    pub fn validate(&self) -> Result<(), ParameterError> {
        let positive = [
            ("a_cell", self.a_cell),
            ("l_p", self.l_p),
            ("l_s", self.l_s),
            ("l_n", self.l_n),
            ("r_p", self.r_p),
            ("r_n", self.r_n),
            ("d_s_p_ref", self.d_s_p_ref),
            ("d_s_n_ref", self.d_s_n_ref),
            ("k_p", self.k_p),
            ("k_n", self.k_n),
            ("c_s_max_p", self.c_s_max_p),
            ("c_s_max_n", self.c_s_max_n),
            ("c_e_init", self.c_e_init),
            ("d_e", self.d_e.eval(self.c_e_init, T_REF)),
            ("kappa_e", self.kappa_e.eval(self.c_e_init, T_REF)),
        ];
        for (name, v) in positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(ParameterError::NonPositive(name, v));
            }
        }
        if self.r_l < 0.0 {
            return Err(ParameterError::NonPositive("r_l", self.r_l));
        }
        if self.r_el < 0.0 {
            return Err(ParameterError::NonPositive("r_el", self.r_el));
        }
        let unit = [
            ("eps_p", self.eps_p),
            ("eps_s", self.eps_s),
            ("eps_n", self.eps_n),
            ("nu_p", self.nu_p),
            ("nu_n", self.nu_n),
            ("t_plus", self.t_plus),
        ];
        for (name, v) in unit {
            if !(v > 0.0 && v < 1.0) {
                return Err(ParameterError::NotUnitInterval(name, v));
            }
        }
        if !(0.0..=1.0).contains(&self.theta_n_0)
            || !(0.0..=1.0).contains(&self.theta_n_100)
            || self.theta_n_0 >= self.theta_n_100
        {
            return Err(ParameterError::Window(format!(
                "negative electrode requires 0 <= theta_n_0 < theta_n_100 <= 1, \
                 got [{}, {}]",
                self.theta_n_0, self.theta_n_100
            )));
        }
        if !(0.0..=1.0).contains(&self.theta_p_0)
            || !(0.0..=1.0).contains(&self.theta_p_100)
            || self.theta_p_100 >= self.theta_p_0
        {
            return Err(ParameterError::Window(format!(
                "positive electrode requires 0 <= theta_p_100 < theta_p_0 <= 1, \
                 got [{}, {}]",
                self.theta_p_100, self.theta_p_0
            )));
        }
        Ok(())
    }

    /// Geometric specific surface area 3 nu / R of the fresh electrode, 1/m.
    pub fn specific_area(&self, electrode: Electrode) -> f64 {
        match electrode {
            Electrode::Positive => 3.0 * self.nu_p / self.r_p,
            Electrode::Negative => 3.0 * self.nu_n / self.r_n,
        }
    }

    /// Solid diffusivity at temperature `t_kelvin` (Arrhenius about 25 degC).
    pub fn solid_diffusivity(&self, electrode: Electrode, t_kelvin: f64) -> f64 {
        match electrode {
            Electrode::Positive => self.d_s_p_ref * arrhenius(self.ea_d_s_p, t_kelvin),
            Electrode::Negative => self.d_s_n_ref * arrhenius(self.ea_d_s_n, t_kelvin),
        }
    }

    /// Cell capacity in Ah derived from the negative-electrode stoichiometric
    /// window (the SOC bookkeeping electrode).
    pub fn capacity_ah(&self) -> f64 {
        crate::constants::FARADAY
            * self.a_cell
            * self.l_n
            * self.nu_n
            * self.c_s_max_n
            * (self.theta_n_100 - self.theta_n_0)
            / 3600.0
    }

    /// Total cell thickness, m.
    pub fn total_thickness(&self) -> f64 {
        self.l_p + self.l_s + self.l_n
    }

    /// Positive 100% stoichiometry that balances the electrode windows: a
    /// discharge sweeping the negative window must sweep the positive one
    /// exactly, or the two electrode SOCs drift apart.
    fn balanced_theta_p_100(&self) -> f64 {
        let q_n = self.l_n * self.nu_n * self.c_s_max_n * (self.theta_n_100 - self.theta_n_0);
        self.theta_p_0 - q_n / (self.l_p * self.nu_p * self.c_s_max_p)
    }

    /// Synthetic NMC/graphite pouch cell used as the test vehicle and as the
    /// shipped default configuration (~3 Ah).
    pub fn default_nmc() -> Self {
        let mut p = Self {
            a_cell: 0.1,
            l_p: 70e-6,
            l_s: 25e-6,
            l_n: 75e-6,
            r_p: 5e-6,
            r_n: 6e-6,
            eps_p: 0.30,
            eps_s: 0.45,
            eps_n: 0.30,
            nu_p: 0.58,
            nu_n: 0.60,
            d_s_p_ref: 1.0e-14,
            d_s_n_ref: 3.0e-14,
            d_e: TransportProperty::constant(2.5e-10),
            kappa_e: TransportProperty::constant(1.0),
            t_plus: 0.38,
            brugg: 1.5,
            v_td: 1.0,
            k_p: 2.0e-11,
            k_n: 2.0e-11,
            c_s_max_p: 51_410.0,
            c_s_max_n: 31_080.0,
            c_e_init: 1000.0,
            theta_p_0: 0.92,
            theta_p_100: 0.36, // placeholder, balanced below
            theta_n_0: 0.03,
            theta_n_100: 0.85,
            r_l: 0.012,
            r_el: 0.0,
            ea_d_s_p: 25_000.0,
            ea_d_s_n: 35_000.0,
        };
        p.theta_p_100 = p.balanced_theta_p_100();
        p
    }

    /// Synthetic LFP/graphite cell for the core-shell and hybrid paths.
    /// The LFP positive carries less lithium per volume, so it is thicker
    /// and denser to hold the balanced window.
    pub fn default_lfp() -> Self {
        let mut p = Self {
            l_p: 100e-6,
            nu_p: 0.60,
            c_s_max_p: 22_806.0,
            theta_p_0: 0.95,
            d_s_p_ref: 8.0e-15,
            k_p: 3.0e-11,
            ..Self::default_nmc()
        };
        p.theta_p_100 = p.balanced_theta_p_100();
        p
    }
}
