//! Cross-module invariants of the assembled simulator.

use cellbench_core::degradation::AgingParameters;
use cellbench_core::drivecycle::{pulse_train, DriveCycleSpec};
use cellbench_core::espm::electrolyte::{electrolyte_lithium, Porosities};
use cellbench_core::espm::{SimulationOptions, Simulator};
use cellbench_core::grid::{AxialLayout, SpatialGrid};
use cellbench_core::ocp::{self, OcpBranches};
use cellbench_core::params::CellParameters;
use cellbench_core::timeseries::TimeSeries;

#[test]
fn electrolyte_lithium_conserved_over_a_drive_cycle() {
    let params = CellParameters::default_nmc();
    let grid = SpatialGrid::new(10, 8, 4, 8).unwrap();
    let layout = AxialLayout::build(&params, &grid);
    let pos = OcpBranches::Single(ocp::default_nmc_table());
    let neg = ocp::default_negative_table();
    let sim = Simulator::new(
        &params,
        &grid,
        &pos,
        &neg,
        SimulationOptions {
            initial_soc: 0.5,
            ..Default::default()
        },
    )
    .unwrap();

    let profile = pulse_train(
        &DriveCycleSpec {
            duration: 900.0,
            dt: 1.0,
            max_current: params.capacity_ah(),
            ..Default::default()
        },
        3,
    );
    let mut state = sim.initial_state();
    let eps = Porosities::fresh(&params);
    let reference = electrolyte_lithium(&state.c_e, &params, &layout, eps);
    for k in 1..profile.len() {
        sim.step(
            &mut state,
            profile.current[k - 1],
            298.15,
            profile.t[k] - profile.t[k - 1],
        )
        .unwrap();
        let now = electrolyte_lithium(&state.c_e, &params, &layout, eps);
        assert!(
            ((now - reference) / reference).abs() < 1e-8,
            "drift at sample {k}"
        );
    }
}

#[test]
fn soc_tracks_coulomb_count_through_arbitrary_profiles() {
    let params = CellParameters::default_nmc();
    let grid = SpatialGrid::default_production();
    let pos = OcpBranches::Single(ocp::default_nmc_table());
    let neg = ocp::default_negative_table();
    let sim = Simulator::new(
        &params,
        &grid,
        &pos,
        &neg,
        SimulationOptions {
            initial_soc: 0.6,
            ..Default::default()
        },
    )
    .unwrap();
    let profile = pulse_train(
        &DriveCycleSpec {
            duration: 1200.0,
            dt: 2.0,
            max_current: 2.0 * params.capacity_ah(),
            ..Default::default()
        },
        8,
    );
    let out = sim.simulate(&profile).unwrap();

    // zero-order-hold Coulomb count matching the integrator's convention
    let q_as = params.capacity_ah() * 3600.0;
    let mut soc_cc = 0.6;
    for k in 1..out.len() {
        let dt = out.t[k] - out.t[k - 1];
        soc_cc -= profile.current[k - 1] * dt / q_as;
        assert!(
            (out.soc_n[k] - soc_cc).abs() < 1e-6,
            "SOC diverged from the Coulomb count at sample {k}: {} vs {soc_cc}",
            out.soc_n[k]
        );
    }
}

#[test]
fn aging_bookkeeping_matches_solid_lithium_loss() {
    // at rest, the only lithium sink is the side reactions: the drop in
    // solid inventory must equal 2 A L_n (delta c_sei + delta c_li)
    let params = CellParameters::default_nmc();
    let grid = SpatialGrid::new(10, 6, 4, 6).unwrap();
    let pos = OcpBranches::Single(ocp::default_nmc_table());
    let neg = ocp::default_negative_table();
    let aging = AgingParameters {
        k_f_ref: 2e-13,
        i_0_lpl: 1e-3,
        beta_lpl: 0.4,
        ..Default::default()
    };
    let sim = Simulator::new(
        &params,
        &grid,
        &pos,
        &neg,
        SimulationOptions {
            aging: Some(aging),
            initial_soc: 0.9,
            ..Default::default()
        },
    )
    .unwrap();

    let mut state = sim.initial_state();
    let solid_lithium = |s: &cellbench_core::CellState| -> f64 {
        // mol: volume-average concentration times active volume, both electrodes
        let c_p = cellbench_core::espm::solid::volume_average(&s.c_s_p);
        let c_n = cellbench_core::espm::solid::volume_average(&s.c_s_n);
        c_p * params.a_cell * params.l_p * params.nu_p
            + c_n * params.a_cell * params.l_n * params.nu_n
    };
    let before = solid_lithium(&state);
    let profile = TimeSeries::constant_current(0.0, 3600.0, 5.0);
    sim.run_from(&mut state, &profile).unwrap();
    let lost = before - solid_lithium(&state);
    let booked = 2.0 * params.a_cell * params.l_n * (state.aging.c_sei + state.aging.c_li);
    assert!(lost > 0.0, "side reactions consumed no lithium");
    assert!(
        ((lost - booked) / booked).abs() < 1e-6,
        "bookkeeping mismatch: lost {lost:.6e} mol vs booked {booked:.6e} mol"
    );
}

#[test]
fn film_growth_raises_resistance_and_sags_voltage() {
    let params = CellParameters::default_nmc();
    let grid = SpatialGrid::new(10, 6, 4, 6).unwrap();
    let pos = OcpBranches::Single(ocp::default_nmc_table());
    let neg = ocp::default_negative_table();
    let aging = AgingParameters {
        k_f_ref: 5e-13,
        ..Default::default()
    };
    let sim = Simulator::new(
        &params,
        &grid,
        &pos,
        &neg,
        SimulationOptions {
            aging: Some(aging),
            initial_soc: 0.8,
            ..Default::default()
        },
    )
    .unwrap();
    let profile = TimeSeries::constant_current(params.capacity_ah() / 2.0, 1200.0, 5.0);
    let out = sim.simulate(&profile).unwrap();
    let last = out.len() - 1;
    assert!(out.r_film[last] > 0.0);
    assert!(out.l_film[last] > 0.0);
    // film identity holds in the outputs
    for k in 0..out.len() {
        assert!(out.r_film[k] >= 0.0);
    }
}
