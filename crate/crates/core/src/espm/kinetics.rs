//! Interfacial kinetics, effective transport, SOC bookkeeping, and the
//! terminal-voltage assembly.

use super::EspmError;
use crate::constants::{FARADAY, GAS_CONSTANT, I0_FLOOR};
use crate::ocp::{OcpBranches, OcpTable};
use crate::params::{CellParameters, Electrode};

/// Bruggeman-corrected effective transport coefficient `eps^brugg * bulk`.
/// Applies identically to diffusivity and conductivity.
pub fn effective_transport(eps: f64, brugg: f64, bulk: f64) -> Result<f64, EspmError> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(EspmError::Domain(format!(
            "porosity must be in (0, 1], got {eps}"
        )));
    }
    if bulk <= 0.0 {
        return Err(EspmError::Domain(format!(
            "bulk transport coefficient must be positive, got {bulk}"
        )));
    }
    Ok(eps.powf(brugg) * bulk)
}

/// Exchange current density `F k sqrt(c_e) sqrt(c_s) sqrt(c_max - c_s)`,
/// clamped below by [`I0_FLOOR`] so the overpotential stays finite at a
/// saturated or depleted surface.
pub fn exchange_current_density(
    c_e_local: f64,
    c_s_surf: f64,
    c_s_max: f64,
    k: f64,
    _t_kelvin: f64,
) -> Result<f64, EspmError> {
    if c_e_local <= 0.0 {
        return Err(EspmError::Domain(format!(
            "electrolyte concentration must be positive, got {c_e_local}"
        )));
    }
    if !(0.0..=c_s_max).contains(&c_s_surf) {
        return Err(EspmError::Domain(format!(
            "surface concentration {c_s_surf} outside [0, {c_s_max}]"
        )));
    }
    let i0 = FARADAY * k * c_e_local.sqrt() * c_s_surf.sqrt() * (c_s_max - c_s_surf).sqrt();
    Ok(i0.max(I0_FLOOR))
}

/// Butler-Volmer overpotential with symmetric transfer coefficients:
/// `(RT / 0.5F) asinh(-+ I / (2 A a_t L i_0))`. The per-area current is
/// negative on the positive electrode during discharge and positive on the
/// negative one.
pub fn overpotential(
    current: f64,
    i0: f64,
    a_t: f64,
    length: f64,
    a_cell: f64,
    t_kelvin: f64,
    electrode: Electrode,
) -> Result<f64, EspmError> {
    if i0 <= 0.0 || a_t <= 0.0 {
        return Err(EspmError::Domain(
            "exchange current and specific area must be positive".into(),
        ));
    }
    let signed = match electrode {
        Electrode::Positive => -current,
        Electrode::Negative => current,
    };
    let arg = signed / (2.0 * a_cell * a_t * length * i0);
    Ok(GAS_CONSTANT * t_kelvin / (0.5 * FARADAY) * arg.asinh())
}

/// Electrode state of charge from the volume-averaged stoichiometry.
/// Not clamped; transient excursions outside [0, 1] are meaningful.
pub fn soc(c_s_bulk: f64, c_s_max: f64, params: &CellParameters, electrode: Electrode) -> f64 {
    let theta = c_s_bulk / c_s_max;
    match electrode {
        Electrode::Negative => (theta - params.theta_n_0) / (params.theta_n_100 - params.theta_n_0),
        Electrode::Positive => (params.theta_p_0 - theta) / (params.theta_p_0 - params.theta_p_100),
    }
}

/// The pieces of an assembled terminal voltage, kept for diagnostics and as
/// hybrid-model features.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoltageTerms {
    pub u_p: f64,
    pub u_n: f64,
    pub eta_p: f64,
    pub eta_n: f64,
    pub delta_phi_e: f64,
    pub ohmic: f64,
    /// Any OCP lookup left its table domain.
    pub extrapolated: bool,
}

impl VoltageTerms {
    pub fn total(&self) -> f64 {
        self.u_p - self.u_n + self.eta_p - self.eta_n + self.delta_phi_e - self.ohmic
    }
}

/// Assembles `V = U_p - U_n + eta_p - eta_n + dPhi_e - I (R_l + R_el +
/// R_film)` from surface stoichiometries and precomputed overpotentials.
#[allow(clippy::too_many_arguments)]
pub fn terminal_voltage(
    theta_p_surf: f64,
    theta_n_surf: f64,
    eta_p: f64,
    eta_n: f64,
    delta_phi_e: f64,
    current: f64,
    params: &CellParameters,
    positive_ocp: &OcpBranches,
    negative_ocp: &OcpTable,
    r_film: f64,
) -> VoltageTerms {
    let (u_p, ex_p) = positive_ocp.eval(theta_p_surf);
    let (u_n, ex_n) = negative_ocp.eval(theta_n_surf);
    VoltageTerms {
        u_p,
        u_n,
        eta_p,
        eta_n,
        delta_phi_e,
        ohmic: current * (params.r_l + params.r_el + r_film),
        extrapolated: ex_p || ex_n,
    }
}
