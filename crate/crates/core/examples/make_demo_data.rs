//! Generates the demo datasets referenced by the shipped configs:
//! a synthetic cycling record for SOH estimation and a pair of LFP
//! drive-cycle records with injected voltage hysteresis for the hybrid
//! model.

use cellbench_core::coreshell::CoreShellConfig;
use cellbench_core::drivecycle::{pulse_train, DriveCycleSpec};
use cellbench_core::espm::{SimulationOptions, Simulator};
use cellbench_core::grid::SpatialGrid;
use cellbench_core::ocp;
use cellbench_core::params::CellParameters;
use cellbench_core::soh::{synthetic_cycling, SyntheticCyclingSpec};
use cellbench_core::timeseries::TimeSeries;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let out = std::path::Path::new("demo_data");
    std::fs::create_dir_all(out).expect("create demo_data/");

    // cycling data for `soh train` / `soh eval`
    let cycling = synthetic_cycling(
        &SyntheticCyclingSpec {
            cycles: 60,
            q_nom_ah: 3.0,
            ..Default::default()
        },
        11,
    );
    cycling.save_csv(out.join("cycling.csv")).unwrap();
    println!(
        "wrote demo_data/cycling.csv ({} cycles)",
        cycling.cycles.len()
    );

    // LFP drive cycles with sign-dependent hysteresis on top of the
    // core-shell physics voltage
    let params = CellParameters::default_lfp();
    let grid = SpatialGrid::new(12, 8, 4, 8).unwrap();
    let pos = ocp::default_lfp_branches();
    let neg = ocp::default_negative_table();
    let sim = Simulator::new(
        &params,
        &grid,
        &pos,
        &neg,
        SimulationOptions {
            coreshell: Some(CoreShellConfig::default()),
            initial_soc: 0.55,
            ..Default::default()
        },
    )
    .unwrap();

    let hysteresis = 0.015;
    let write_profile = |name: &str, cycle_seed: u64, noise_seed: u64| {
        let profile = pulse_train(
            &DriveCycleSpec {
                duration: 1500.0,
                dt: 1.0,
                max_current: params.capacity_ah() * 0.8,
                min_segment: 30.0,
                max_segment: 120.0,
                noise_amplitude: 0.0,
                bias: 0.0,
            },
            cycle_seed,
        );
        let sim_out = sim.simulate(&profile).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
        let voltage: Vec<f64> = sim_out
            .voltage
            .iter()
            .zip(&sim_out.current)
            .map(|(v, i)| v + hysteresis * i.signum() + rng.gen_range(-0.001..0.001))
            .collect();
        let record = TimeSeries {
            voltage: Some(voltage),
            ..profile
        };
        record.save_csv(out.join(name)).unwrap();
        println!("wrote demo_data/{name} ({} samples)", record.len());
    };
    write_profile("lfp_train.csv", 11, 101);
    write_profile("lfp_test.csv", 23, 102);

    // fresh and aged records for identification (the aged cell carries an
    // extra surface-film resistance)
    let nmc = CellParameters::default_nmc();
    let nmc_grid = SpatialGrid::new(10, 8, 4, 8).unwrap();
    let nmc_pos = ocp::OcpBranches::Single(ocp::default_nmc_table());
    let nmc_neg = ocp::default_negative_table();
    let i_1c = nmc.capacity_ah();
    let id_profile = TimeSeries::constant_current(i_1c / 2.0, 900.0, 15.0)
        .chain(&TimeSeries::constant_current(0.0, 300.0, 15.0))
        .chain(&TimeSeries::constant_current(-i_1c / 3.0, 300.0, 15.0))
        .chain(&TimeSeries::constant_current(i_1c, 600.0, 15.0));
    let write_id = |name: &str, r_film_offset: f64| {
        let sim = Simulator::new(
            &nmc,
            &nmc_grid,
            &nmc_pos,
            &nmc_neg,
            SimulationOptions {
                r_film_offset,
                ..Default::default()
            },
        )
        .unwrap();
        let out_sim = sim.simulate(&id_profile).unwrap();
        let record = TimeSeries {
            voltage: Some(out_sim.voltage.clone()),
            soc_cc: Some(out_sim.soc_n.clone()),
            ..id_profile.clone()
        };
        record.save_csv(out.join(name)).unwrap();
        println!("wrote demo_data/{name} ({} samples)", record.len());
    };
    write_id("nmc_fresh.csv", 0.0);
    write_id("nmc_aged.csv", 0.02);

    // pseudo-OCV sweep paired with a 3.0 Ah discharged capacity
    let q_cell = 3.0;
    let q_n = 3.6;
    let q_p = 6.0;
    let theta_n_100 = 0.85;
    let theta_p_100 = 0.37;
    let mut rows = String::from("capacity_ah,v\n");
    for k in 0..=80 {
        let q = q_cell * k as f64 / 80.0;
        let theta_n = theta_n_100 - q / q_n;
        let theta_p = theta_p_100 + q / q_p;
        let v = ocp::nmc_ocp(theta_p) - ocp::graphite_ocp(theta_n);
        rows.push_str(&format!("{q},{v}\n"));
    }
    std::fs::write(out.join("ocv.csv"), rows).unwrap();
    println!("wrote demo_data/ocv.csv (81 samples)");
}
