//! Time integration of the coupled cell model.
//!
//! Each step advances solid diffusion in both particles (implicit),
//! electrolyte mass transport (implicit), and the electrolyte potential
//! (direct elliptic solve), with a zero-order hold on the applied current.
//! Degradation side currents enter the negative-particle surface flux and
//! the slow aging quantities advance by first-order splitting after the
//! electrochemical step. The positive particle optionally runs the
//! core-shell moving-boundary model instead of standard diffusion.

use serde::{Deserialize, Serialize};

use super::electrolyte::{self, Porosities};
use super::kinetics::{self, VoltageTerms};
use super::solid;
use super::EspmError;
use crate::constants::FARADAY;
use crate::coreshell::{self, CorePhase, CoreShellConfig, CoreShellError, PhaseBoundaryState};
use crate::degradation::{self, AgingParameters, AgingState};
use crate::grid::{AxialLayout, Region, SpatialGrid};
use crate::ocp::{OcpBranches, OcpTable};
use crate::params::{CellParameters, Electrode};
use crate::state::CellState;
use crate::timeseries::TimeSeries;

/// Bilinear contact-resistance lookup over (SOC, current), clamped at the
/// table edges. Stands in for a constant `R_l` when the high-frequency
/// resistance depends on the operating point.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ContactResistanceMap {
    pub soc_breaks: Vec<f64>,
    pub current_breaks: Vec<f64>,
    /// values[i][j] is R_l at soc_breaks[i], current_breaks[j], Ohm.
    pub values: Vec<Vec<f64>>,
}

impl ContactResistanceMap {
    pub fn eval(&self, soc: f64, current: f64) -> f64 {
        let (i, wi) = bracket(&self.soc_breaks, soc);
        let (j, wj) = bracket(&self.current_breaks, current);
        let v00 = self.values[i][j];
        let v01 = self.values[i][j + 1];
        let v10 = self.values[i + 1][j];
        let v11 = self.values[i + 1][j + 1];
        (1.0 - wi) * ((1.0 - wj) * v00 + wj * v01) + wi * ((1.0 - wj) * v10 + wj * v11)
    }
}

fn bracket(breaks: &[f64], x: f64) -> (usize, f64) {
    if breaks.len() < 2 || x <= breaks[0] {
        return (0, 0.0);
    }
    let n = breaks.len();
    if x >= breaks[n - 1] {
        return (n - 2, 1.0);
    }
    let hi = breaks.partition_point(|&v| v <= x);
    let lo = hi - 1;
    (lo, (x - breaks[lo]) / (breaks[hi] - breaks[lo]))
}

#[derive(Debug, Clone)]
pub struct SimulationOptions {
    /// Degradation mechanisms; `None` runs the fresh-cell path.
    pub aging: Option<AgingParameters>,
    /// Core-shell positive particle; `None` uses standard solid diffusion.
    pub coreshell: Option<CoreShellConfig>,
    /// Optional `[V_min, V_max]` termination window.
    pub cutoffs: Option<(f64, f64)>,
    /// Initial state of charge.
    pub initial_soc: f64,
    /// Temperature used when the profile carries no temperature column, K.
    pub default_temperature: f64,
    /// Maximum step-halving depth when a step fails.
    pub max_step_halvings: u32,
    /// Extra series film resistance, Ohm. Carries the lumped aged-cell SEI
    /// parameter when simulating an aged cell without aging dynamics.
    pub r_film_offset: f64,
    /// Operating-point dependent contact resistance; `None` uses `R_l`.
    pub contact_resistance: Option<ContactResistanceMap>,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            aging: None,
            coreshell: None,
            cutoffs: None,
            initial_soc: 1.0,
            default_temperature: 298.15,
            max_step_halvings: 8,
            r_film_offset: 0.0,
            contact_resistance: None,
        }
    }
}

/// Per-sample record of the assembled voltage and the internal signal
/// vector consumed by the hybrid model.
#[derive(Debug, Clone, Copy)]
pub struct StepRecord {
    pub voltage: f64,
    pub soc_n: f64,
    pub soc_p: f64,
    pub eta_p: f64,
    pub eta_n: f64,
    pub delta_phi_e: f64,
    pub theta_surf_p: f64,
    pub theta_surf_n: f64,
    pub extrapolated: bool,
}

/// Simulation result, one row per input profile sample (fewer if a voltage
/// cutoff terminated the run early).
#[derive(Debug, Clone, Default)]
pub struct SimulationOutput {
    pub t: Vec<f64>,
    pub current: Vec<f64>,
    pub voltage: Vec<f64>,
    pub soc_n: Vec<f64>,
    pub soc_p: Vec<f64>,
    pub temperature: Vec<f64>,
    pub eta_p: Vec<f64>,
    pub eta_n: Vec<f64>,
    pub delta_phi_e: Vec<f64>,
    pub theta_surf_p: Vec<f64>,
    pub theta_surf_n: Vec<f64>,
    pub extrapolated: Vec<bool>,
    pub c_sei: Vec<f64>,
    pub c_li: Vec<f64>,
    pub l_film: Vec<f64>,
    pub r_film: Vec<f64>,
    pub eps_p: Vec<f64>,
    pub eps_n: Vec<f64>,
    pub a_t_p: Vec<f64>,
    pub a_t_n: Vec<f64>,
    /// Normalized boundary position r_p / R_p; only with core-shell enabled.
    pub r_p_frac: Option<Vec<f64>>,
    /// Set when a voltage cutoff ended the run: (time, voltage).
    pub terminated: Option<(f64, f64)>,
}

impl SimulationOutput {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    fn push(&mut self, t: f64, current: f64, temp: f64, rec: &StepRecord, state: &CellState) {
        self.t.push(t);
        self.current.push(current);
        self.voltage.push(rec.voltage);
        self.soc_n.push(rec.soc_n);
        self.soc_p.push(rec.soc_p);
        self.temperature.push(temp);
        self.eta_p.push(rec.eta_p);
        self.eta_n.push(rec.eta_n);
        self.delta_phi_e.push(rec.delta_phi_e);
        self.theta_surf_p.push(rec.theta_surf_p);
        self.theta_surf_n.push(rec.theta_surf_n);
        self.extrapolated.push(rec.extrapolated);
        self.c_sei.push(state.aging.c_sei);
        self.c_li.push(state.aging.c_li);
        self.l_film.push(state.aging.l_film);
        self.r_film.push(state.aging.r_film);
        self.eps_p.push(state.aging.eps_p);
        self.eps_n.push(state.aging.eps_n);
        self.a_t_p.push(state.aging.a_t_p);
        self.a_t_n.push(state.aging.a_t_n);
        if let (Some(col), Some(cs)) = (self.r_p_frac.as_mut(), state.coreshell.as_ref()) {
            col.push(cs.r_p);
        }
    }
}

/// Everything a kinetic evaluation needs at one operating point.
struct KineticSnapshot {
    terms: VoltageTerms,
    soc_n: f64,
    soc_p: f64,
    theta_surf_p: f64,
    theta_surf_n: f64,
    /// Surface fluxes D dc/dr, mol/(m^2 s).
    g_p: f64,
    g_n: f64,
    j_sei: f64,
    j_lpl: f64,
}

/// Deterministic single-cell integrator. Immutable once built; a state is
/// confined to one simulation at a time, so independent simulations may
/// share one `Simulator` across threads.
pub struct Simulator<'a> {
    pub params: &'a CellParameters,
    pub grid: &'a SpatialGrid,
    pub positive_ocp: &'a OcpBranches,
    pub negative_ocp: &'a OcpTable,
    pub options: SimulationOptions,
    layout: AxialLayout,
}

impl<'a> Simulator<'a> {
    pub fn new(
        params: &'a CellParameters,
        grid: &'a SpatialGrid,
        positive_ocp: &'a OcpBranches,
        negative_ocp: &'a OcpTable,
        options: SimulationOptions,
    ) -> Result<Self, EspmError> {
        params
            .validate()
            .map_err(|e| EspmError::Domain(e.to_string()))?;
        grid.validate()
            .map_err(|e| EspmError::Domain(e.to_string()))?;
        if let Some(a) = &options.aging {
            a.validate().map_err(|e| EspmError::Domain(e.to_string()))?;
        }
        if let Some(cs) = &options.coreshell {
            cs.validate().map_err(EspmError::CoreShell)?;
        }
        let layout = AxialLayout::build(params, grid);
        Ok(Self {
            params,
            grid,
            positive_ocp,
            negative_ocp,
            options,
            layout,
        })
    }

    /// Equilibrium state at the configured initial SOC.
    pub fn initial_state(&self) -> CellState {
        let mut state = CellState::at_soc(
            self.params,
            self.grid,
            self.options.initial_soc,
            self.options.default_temperature,
        );
        if let Some(aging) = &self.options.aging {
            state.aging = AgingState::fresh_with(self.params, aging);
        }
        if let Some(cfg) = &self.options.coreshell {
            let theta = state.c_s_p[0] / self.params.c_s_max_p;
            let midpoint = 0.5 * (cfg.c_alpha_frac + cfg.c_beta_frac);
            // whichever phase the bulk sits in becomes the shell
            let core_phase = if theta < midpoint {
                CorePhase::Beta
            } else {
                CorePhase::Alpha
            };
            state.coreshell = Some(
                PhaseBoundaryState::with_bulk_theta(
                    self.params.r_p,
                    self.params.c_s_max_p,
                    theta,
                    core_phase,
                    cfg,
                )
                .expect("config validated in new()"),
            );
        }
        state
    }

    fn porosities(&self, state: &CellState) -> Porosities {
        Porosities {
            eps_p: state.aging.eps_p,
            eps_n: state.aging.eps_n,
        }
    }

    fn r_film_total(&self, state: &CellState) -> f64 {
        state.aging.r_film + self.options.r_film_offset
    }

    /// Evaluates kinetics, side currents, and the assembled voltage for the
    /// given state and operating point without advancing anything.
    fn snapshot(
        &self,
        state: &CellState,
        current: f64,
        t_kelvin: f64,
    ) -> Result<KineticSnapshot, EspmError> {
        let p = self.params;
        let d_s_p = p.solid_diffusivity(Electrode::Positive, t_kelvin);
        let d_s_n = p.solid_diffusivity(Electrode::Negative, t_kelvin);
        let a_t_p = state.aging.a_t_p;
        let a_t_n = state.aging.a_t_n;
        let r_film = self.r_film_total(state);

        // prescribed surface gradients (side currents folded in below)
        let g_p = current / (a_t_p * p.a_cell * FARADAY * p.l_p);
        let g_n_main = -current / (a_t_n * p.a_cell * FARADAY * p.l_n);

        let theta_surf_p = match &state.coreshell {
            Some(cs) => cs.surface_concentration(p.r_p, d_s_p, g_p) / p.c_s_max_p,
            None => solid::surface_concentration(&state.c_s_p, p.r_p, d_s_p, g_p) / p.c_s_max_p,
        };
        let theta_surf_n =
            solid::surface_concentration(&state.c_s_n, p.r_n, d_s_n, g_n_main) / p.c_s_max_n;

        let c_e_p = self.layout.region_average(&state.c_e, Region::Positive);
        let c_e_n = self.layout.region_average(&state.c_e, Region::Negative);

        let clamp_p = (theta_surf_p * p.c_s_max_p).clamp(0.0, p.c_s_max_p);
        let clamp_n = (theta_surf_n * p.c_s_max_n).clamp(0.0, p.c_s_max_n);
        let i0_p =
            kinetics::exchange_current_density(c_e_p, clamp_p, p.c_s_max_p, p.k_p, t_kelvin)?;
        let i0_n =
            kinetics::exchange_current_density(c_e_n, clamp_n, p.c_s_max_n, p.k_n, t_kelvin)?;
        let eta_p = kinetics::overpotential(
            current,
            i0_p,
            a_t_p,
            p.l_p,
            p.a_cell,
            t_kelvin,
            Electrode::Positive,
        )?;
        let eta_n = kinetics::overpotential(
            current,
            i0_n,
            a_t_n,
            p.l_n,
            p.a_cell,
            t_kelvin,
            Electrode::Negative,
        )?;

        // degradation side currents from the present kinetic state
        let (j_sei, j_lpl) = match &self.options.aging {
            Some(aging) => {
                let (u_n, _) = self.negative_ocp.eval(theta_surf_n);
                let phi_s_n = u_n + eta_n + r_film * current;
                (
                    degradation::sei_current(a_t_n, phi_s_n, current, r_film, t_kelvin, aging),
                    degradation::plating_current(a_t_n, phi_s_n, current, r_film, t_kelvin, aging),
                )
            }
            None => (0.0, 0.0),
        };
        let g_n =
            (-current + p.l_n * p.a_cell * (j_sei + j_lpl)) / (a_t_n * p.a_cell * FARADAY * p.l_n);

        let (_, delta_phi_e) = electrolyte::electrolyte_potential_solve(
            &state.c_e,
            current,
            t_kelvin,
            p,
            &self.layout,
            self.porosities(state),
        )?;

        let mut terms = kinetics::terminal_voltage(
            theta_surf_p,
            theta_surf_n,
            eta_p,
            eta_n,
            delta_phi_e,
            current,
            p,
            self.positive_ocp,
            self.negative_ocp,
            r_film,
        );
        let soc_n = kinetics::soc(
            solid::volume_average(&state.c_s_n),
            p.c_s_max_n,
            p,
            Electrode::Negative,
        );
        let soc_p = match &state.coreshell {
            Some(cs) => {
                let theta = cs.bulk_theta(p.r_p, p.c_s_max_p);
                kinetics::soc(theta * p.c_s_max_p, p.c_s_max_p, p, Electrode::Positive)
            }
            None => kinetics::soc(
                solid::volume_average(&state.c_s_p),
                p.c_s_max_p,
                p,
                Electrode::Positive,
            ),
        };
        if let Some(map) = &self.options.contact_resistance {
            terms.ohmic = current * (map.eval(soc_n, current) + p.r_el + r_film);
        }

        Ok(KineticSnapshot {
            terms,
            soc_n,
            soc_p,
            theta_surf_p,
            theta_surf_n,
            g_p,
            g_n,
            j_sei,
            j_lpl,
        })
    }

    fn record_from(&self, snap: &KineticSnapshot) -> StepRecord {
        StepRecord {
            voltage: snap.terms.total(),
            soc_n: snap.soc_n,
            soc_p: snap.soc_p,
            eta_p: snap.terms.eta_p,
            eta_n: snap.terms.eta_n,
            delta_phi_e: snap.terms.delta_phi_e,
            theta_surf_p: snap.theta_surf_p,
            theta_surf_n: snap.theta_surf_n,
            extrapolated: snap.terms.extrapolated,
        }
    }

    /// Measures voltage and SOC at the current state without advancing it.
    pub fn measure(
        &self,
        state: &CellState,
        current: f64,
        t_kelvin: f64,
    ) -> Result<StepRecord, EspmError> {
        Ok(self.record_from(&self.snapshot(state, current, t_kelvin)?))
    }

    fn try_step(
        &self,
        state: &mut CellState,
        current: f64,
        t_kelvin: f64,
        dt: f64,
    ) -> Result<(), EspmError> {
        let p = self.params;
        let snap = self.snapshot(state, current, t_kelvin)?;
        let d_s_p = p.solid_diffusivity(Electrode::Positive, t_kelvin);
        let d_s_n = p.solid_diffusivity(Electrode::Negative, t_kelvin);

        match (&self.options.coreshell, state.coreshell.as_mut()) {
            (Some(cfg), Some(cs)) => {
                if let Some(wanted) = CorePhase::for_current(current) {
                    if wanted != cs.core_phase {
                        cs.nucleate(wanted, p.r_p, cfg);
                    }
                }
                coreshell::coreshell_step(cs, p.r_p, d_s_p, snap.g_p, p.c_s_max_p, dt, cfg)?;
            }
            _ => {
                solid::solid_diffusion_step(
                    &mut state.c_s_p,
                    p.r_p,
                    d_s_p,
                    snap.g_p,
                    p.c_s_max_p,
                    dt,
                )?;
            }
        }
        solid::solid_diffusion_step(&mut state.c_s_n, p.r_n, d_s_n, snap.g_n, p.c_s_max_n, dt)?;
        let porosities = self.porosities(state);
        electrolyte::electrolyte_mass_step(
            &mut state.c_e,
            current,
            dt,
            p,
            &self.layout,
            porosities,
            t_kelvin,
        )?;
        let (phi, _) = electrolyte::electrolyte_potential_solve(
            &state.c_e,
            current,
            t_kelvin,
            p,
            &self.layout,
            porosities,
        )?;
        state.phi_e = phi;

        if let Some(aging) = &self.options.aging {
            degradation::advance_aging(&mut state.aging, snap.j_sei, snap.j_lpl, dt, p, aging)
                .map_err(|e| EspmError::Domain(e.to_string()))?;
        }
        state.temperature = t_kelvin;
        state.time += dt;
        Ok(())
    }

    /// Advances one profile interval, sub-stepping on failure. Boundary
    /// collisions of the core-shell front are structural (full conversion)
    /// and propagate immediately.
    pub fn step(
        &self,
        state: &mut CellState,
        current: f64,
        t_kelvin: f64,
        dt: f64,
    ) -> Result<(), EspmError> {
        let mut halvings = 0u32;
        loop {
            let mut trial = state.clone();
            let n_sub = 1usize << halvings;
            let sub_dt = dt / n_sub as f64;
            let mut failure = None;
            for _ in 0..n_sub {
                if let Err(e) = self.try_step(&mut trial, current, t_kelvin, sub_dt) {
                    failure = Some(e);
                    break;
                }
            }
            match failure {
                None => {
                    *state = trial;
                    return Ok(());
                }
                Some(e) => {
                    let structural = matches!(
                        e,
                        EspmError::CoreShell(CoreShellError::BoundaryCollision { .. })
                    );
                    if structural || halvings >= self.options.max_step_halvings {
                        return Err(EspmError::StepFailed {
                            time: state.time,
                            substeps: halvings,
                            source: Box::new(e),
                        });
                    }
                    halvings += 1;
                }
            }
        }
    }

    /// Runs the full profile from the configured initial state. Sample `k`
    /// of the output reports the state at profile time `t_k` measured under
    /// the profile current `I_k`; the current is held constant over each
    /// interval. Terminates early when a configured voltage cutoff is
    /// crossed.
    pub fn simulate(&self, profile: &TimeSeries) -> Result<SimulationOutput, EspmError> {
        profile
            .validate()
            .map_err(|e| EspmError::Domain(e.to_string()))?;
        let mut state = self.initial_state();
        self.run_from(&mut state, profile)
    }

    /// Same as [`simulate`](Self::simulate) but continuing from an existing
    /// state (cycling protocols chain segments this way).
    pub fn run_from(
        &self,
        state: &mut CellState,
        profile: &TimeSeries,
    ) -> Result<SimulationOutput, EspmError> {
        let temp_at = |k: usize| -> f64 {
            profile
                .temperature
                .as_ref()
                .map(|v| v[k])
                .unwrap_or(self.options.default_temperature)
        };
        let mut out = SimulationOutput {
            r_p_frac: self
                .options
                .coreshell
                .as_ref()
                .map(|_| Vec::with_capacity(profile.len())),
            ..Default::default()
        };

        let rec = self.measure(state, profile.current[0], temp_at(0))?;
        out.push(profile.t[0], profile.current[0], temp_at(0), &rec, state);
        if let Some(cs) = out.r_p_frac.as_mut() {
            // store normalized positions
            if let Some(last) = cs.last_mut() {
                *last /= self.params.r_p;
            }
        }

        for k in 1..profile.len() {
            let dt = profile.t[k] - profile.t[k - 1];
            self.step(state, profile.current[k - 1], temp_at(k - 1), dt)?;
            let rec = self.measure(state, profile.current[k], temp_at(k))?;
            out.push(profile.t[k], profile.current[k], temp_at(k), &rec, state);
            if let Some(col) = out.r_p_frac.as_mut() {
                if let Some(last) = col.last_mut() {
                    *last /= self.params.r_p;
                }
            }
            if let Some((v_min, v_max)) = self.options.cutoffs {
                if rec.voltage < v_min || rec.voltage > v_max {
                    out.terminated = Some((profile.t[k], rec.voltage));
                    break;
                }
            }
        }
        Ok(out)
    }
}
