//! One function per scenario. Each returns scalar results as JSON plus any
//! time series for CSV output.

use clap::ValueEnum;
use num_complex::Complex64;
use opo_qtraj::composite::{
    concurrence_pure, conditional_concurrence, bell_fidelity, share_via_beamsplitter, single_rail_bell,
    SharedStateReport,
};
use opo_qtraj::dynamics::{
    collapse, evolve_no_jump, jump_rates, master_equation_steady_state, run_ensemble, sample_trajectory,
    steady_state_numeric, trajectory_seed, Estimate,
};
use opo_qtraj::storage::{check_cit_regime, return_infidelity, run_storage_with_release, storage_survival_curve};
use opo_qtraj::weakfield::{
    big_omega, collapsed_state_transmission, conditional_evolution_analytic, mean_photon_analytic,
    resonant_case_amplitudes, steady_state_analytic, ConditionalState, WeakFieldAmplitudes,
};
use opo_qtraj::{Channel, Level, Params, State};
use serde_json::{json, Value};

use crate::config::{Format, RunConfig};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Steady,
    Collapse,
    Evolve,
    Trajectories,
    Share,
    Storage,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Steady => "steady",
            Command::Collapse => "collapse",
            Command::Evolve => "evolve",
            Command::Trajectories => "trajectories",
            Command::Share => "share",
            Command::Storage => "storage",
        }
    }
}

/// A CSV table whose first column is `time`.
pub struct Series {
    pub name: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

pub struct Outcome {
    pub results: Value,
    pub series: Vec<Series>,
    pub warnings: Vec<String>,
}

fn cx(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn amplitudes_json(a: &WeakFieldAmplitudes<f64>) -> Value {
    json!({
        "c_g0": cx(a.c_g0),
        "c_g1": cx(a.c_g1),
        "c_e0": cx(a.c_e0),
        "c_g2": cx(a.c_g2),
        "c_e1": cx(a.c_e1),
    })
}

fn estimate_json(e: Estimate<f64>) -> Value {
    json!({ "mean": e.mean, "std_error": e.std_error })
}

/// Within three standard errors; `None` when there is no error bar.
fn within_3se(e: Estimate<f64>, value: f64) -> Option<bool> {
    e.std_error.map(|_| e.agrees_with(value, 3.0))
}

pub fn run(command: Command, config: &RunConfig) -> Result<Outcome, CliError> {
    let params = config.params()?;
    let mut outcome = match command {
        Command::Steady => steady(&params)?,
        Command::Collapse => collapse_cmd(&params)?,
        Command::Evolve => evolve(&params, config)?,
        Command::Trajectories => trajectories(&params, config)?,
        Command::Share => share(&params)?,
        Command::Storage => storage(&params, config)?,
    };
    let mut warnings = params.warnings();
    warnings.append(&mut outcome.warnings);
    outcome.warnings = warnings;
    Ok(outcome)
}

fn steady(p: &Params) -> Result<Outcome, CliError> {
    let analytic = steady_state_analytic(p)?;
    let numeric = steady_state_numeric(p)?;
    let diff = analytic
        .as_array()
        .iter()
        .zip(numeric.as_array())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
    let (_, unit) = numeric.to_state(p.n_max)?.normalized()?;
    let (transmission, fluorescence) = jump_rates(p, &unit)?;
    let master = master_equation_steady_state(p)?;
    Ok(Outcome {
        results: json!({
            "amplitudes": amplitudes_json(&analytic),
            "amplitudes_numeric": amplitudes_json(&numeric),
            "max_amplitude_difference": diff,
            "mean_photon": mean_photon_analytic(p)?,
            "mean_photon_numeric": numeric.photon_number(),
            "master_mean_photon": master.photon_number,
            "master_excitation": master.excitation,
            "transmission_rate": transmission,
            "fluorescence_rate": fluorescence,
            "weak_field_ok": p.weak_field_ok(),
        }),
        series: Vec::new(),
        warnings: Vec::new(),
    })
}

fn numeric_steady_state(p: &Params) -> Result<State, CliError> {
    Ok(steady_state_numeric(p)?.to_state(p.n_max)?)
}

fn transmission_conditional(p: &Params) -> Result<(ConditionalState<f64>, State), CliError> {
    let jumped = collapse(&numeric_steady_state(p)?, Channel::Transmission)?;
    Ok((ConditionalState::from_state(&jumped, Channel::Transmission)?, jumped))
}

fn collapse_cmd(p: &Params) -> Result<Outcome, CliError> {
    let (cond, jumped) = transmission_conditional(p)?;
    let analytic = collapsed_state_transmission(p)?;
    let diff = (cond.c_g1 - analytic.c_g1).norm().max((cond.c_e0 - analytic.c_e0).norm());
    let fluorescence = match collapse(&numeric_steady_state(p)?, Channel::Fluorescence) {
        Ok(s) => json!({
            "c_g0": cx(s.amplitude(0, Level::Ground)),
            "c_g1": cx(s.amplitude(1, Level::Ground)),
            "one_photon_probability": s.amplitude(1, Level::Ground).norm_sqr(),
        }),
        Err(opo_qtraj::Error::ImpossibleDetection { .. }) => Value::Null,
        Err(e) => return Err(e.into()),
    };
    let mut warnings = Vec::new();
    if fluorescence.is_null() {
        warnings.push("fluorescence detection is impossible from this steady state".to_owned());
    }
    Ok(Outcome {
        results: json!({
            "channel": "transmission",
            "c_g1": cx(cond.c_g1),
            "c_e0": cx(cond.c_e0),
            "c_g0_after_collapse": cx(jumped.amplitude(0, Level::Ground)),
            "norm_sq": jumped.norm_sq(),
            "bell_fidelity": bell_fidelity(&cond),
            "concurrence": conditional_concurrence(&cond)?,
            "analytic": { "c_g1": cx(analytic.c_g1), "c_e0": cx(analytic.c_e0) },
            "max_analytic_difference": diff,
            "fluorescence": fluorescence,
        }),
        series: Vec::new(),
        warnings,
    })
}

fn regime(p: &Params) -> &'static str {
    if p.phi != 0.0 || p.delta != 0.0 {
        return "detuned";
    }
    let d = p.kappa - p.gamma / 2.0;
    let omega_sq = d * d - 4.0 * p.g * p.g;
    let scale = d * d + 4.0 * p.g * p.g;
    if omega_sq.abs() <= 1e-12 * scale {
        "critical"
    } else if omega_sq > 0.0 {
        "overdamped"
    } else {
        "underdamped"
    }
}

fn evolve(p: &Params, config: &RunConfig) -> Result<Outcome, CliError> {
    let start = collapsed_state_transmission(p)?;
    // after the click the one-quantum sector evolves on its own
    let free = p.with_drive(Complex64::new(0.0, 0.0));
    let dt = config.dt();
    let t_final = config.settings().t_final;
    let steps = (t_final / dt).round().max(1.0) as usize;
    let stride = (steps / 200).max(1);

    let mut state = start.to_state(p.n_max)?;
    let mut rows = Vec::new();
    let mut max_diff = 0.0f64;
    let mut done = 0;
    loop {
        let tau = done as f64 * dt;
        let (g1, e0) = conditional_evolution_analytic(start.c_g1, start.c_e0, &free, tau)?;
        let (n1, n0) = (state.amplitude(1, Level::Ground), state.amplitude(0, Level::Excited));
        max_diff = max_diff.max((n1 - g1).norm()).max((n0 - e0).norm());
        rows.push(vec![tau, n1.re, n1.im, n0.re, n0.im, state.norm_sq(), g1.re, g1.im, e0.re, e0.im]);
        if done >= steps {
            break;
        }
        let chunk = stride.min(steps - done);
        state = evolve_no_jump(&state, &free, dt, chunk)?;
        done += chunk;
    }

    let resonant = (2.0 * p.kappa - p.gamma).abs() <= 1e-12 * p.gamma
        && (p.gamma - p.g).abs() <= 1e-12 * p.g
        && regime(p) != "detuned";
    let resonant_case = if resonant {
        let (mut direct, mut reversed) = (0.0f64, 0.0f64);
        for row in &rows {
            let (cp, cm) = resonant_case_amplitudes(p.g, row[0])?;
            if cm.abs() < 1e-6 {
                continue;
            }
            let ours = Complex64::new(row[6], row[7]) / Complex64::new(row[8], row[9]);
            direct = direct.max((ours - cp / cm).norm());
            reversed = reversed.max((ours + cp / cm).norm());
        }
        json!({ "max_ratio_mismatch": direct, "max_ratio_mismatch_c_e0_reversed": reversed })
    } else {
        Value::Null
    };
    let last = &rows[rows.len() - 1];
    Ok(Outcome {
        results: json!({
            "initial": { "c_g1": cx(start.c_g1), "c_e0": cx(start.c_e0) },
            "regime": regime(p),
            "omega": cx(big_omega(&free)),
            "t_final": last[0],
            "final_numeric": { "c_g1": [last[1], last[2]], "c_e0": [last[3], last[4]], "norm_sq": last[5] },
            "final_analytic": { "c_g1": [last[6], last[7]], "c_e0": [last[8], last[9]] },
            "max_analytic_difference": max_diff,
            "resonant_case": resonant_case,
        }),
        series: vec![Series {
            name: "amplitudes",
            columns: vec![
                "c_g1_re",
                "c_g1_im",
                "c_e0_re",
                "c_e0_im",
                "norm_sq",
                "analytic_c_g1_re",
                "analytic_c_g1_im",
                "analytic_c_e0_re",
                "analytic_c_e0_im",
            ],
            rows,
        }],
        warnings: Vec::new(),
    })
}

fn trajectories(p: &Params, config: &RunConfig) -> Result<Outcome, CliError> {
    let settings = config.settings();
    let n_traj = config.sim.n_traj.unwrap_or(1);
    let seed = config.seed();
    let ens = run_ensemble(p, n_traj, &settings, seed)?;
    let master = master_equation_steady_state(p)?;
    let rate = 2.0 * p.kappa * master.photon_number;

    let mut series = Vec::new();
    if config.formats().contains(&Format::Csv) {
        let record = sample_trajectory(p, &settings, trajectory_seed(seed, 0))?;
        series.push(Series {
            name: "sample",
            columns: vec!["photon_number", "excitation", "norm_sq"],
            rows: record.samples.iter().map(|s| vec![s.time, s.photon_number, s.excitation, s.norm_sq]).collect(),
        });
    }
    let mut warnings = Vec::new();
    if n_traj < 2 {
        warnings.push("a single trajectory has no standard error".to_owned());
    }
    Ok(Outcome {
        results: json!({
            "n_traj": n_traj,
            "base_seed": seed,
            "t_final": settings.t_final,
            "dt": settings.dt,
            "burn_in": settings.burn_in,
            "photon_number": estimate_json(ens.photon_number),
            "excitation": estimate_json(ens.excitation),
            "transmission_rate": estimate_json(ens.transmission_rate),
            "fluorescence_rate": estimate_json(ens.fluorescence_rate),
            "transmission_clicks": ens.transmission_clicks,
            "fluorescence_clicks": ens.fluorescence_clicks,
            "total_jumps": ens.total_jumps,
            "master_photon_number": master.photon_number,
            "master_transmission_rate": rate,
            "photon_number_within_3se": within_3se(ens.photon_number, master.photon_number),
            "transmission_rate_within_3se": within_3se(ens.transmission_rate, rate),
        }),
        series,
        warnings,
    })
}

fn share(p: &Params) -> Result<Outcome, CliError> {
    let (cond, _) = transmission_conditional(p)?;
    let shared = share_via_beamsplitter(&cond)?;
    Ok(Outcome {
        results: json!({
            "n_atoms": p.n_atoms,
            "collective_g": p.g,
            "conditional": { "c_g1": cx(cond.c_g1), "c_e0": cx(cond.c_e0) },
            "atom_field_concurrence": conditional_concurrence(&cond)?,
            "shared": SharedStateReport::from(&shared),
            "norm_sq": shared.norm_sq(),
            "overlap_single_rail_bell": shared.inner(&single_rail_bell()).norm_sqr(),
            "photonic_concurrence": concurrence_pure(shared.photonic_qubits()).ok(),
        }),
        series: Vec::new(),
        warnings: Vec::new(),
    })
}

fn storage(p: &Params, config: &RunConfig) -> Result<Outcome, CliError> {
    let st = &config.storage;
    let schedule = config.schedule()?;
    let dt = config.dt();
    let cit = check_cit_regime(p, st.cit_factor.unwrap_or(10.0))?;
    let t_store = st.t_store.unwrap_or(0.0);
    let report = run_storage_with_release(p, &schedule, t_store, st.t_release.unwrap_or(0.0), dt)?;
    let mut warnings = Vec::new();
    if !cit.ok {
        warnings.push("parameters are outside the CIT regime kappa >> sqrt(N) g >> gamma".to_owned());
    }
    if !report.adiabatic {
        warnings.push("ramp is shorter than 10/kappa and is flagged non-adiabatic".to_owned());
    }
    let mut series = vec![Series {
        name: "populations",
        columns: vec!["g", "cavity_population", "atomic_population", "norm_sq"],
        rows: report
            .samples
            .iter()
            .map(|s| vec![s.time, s.g, s.cavity_population, s.atomic_population, s.norm_sq])
            .collect(),
    }];
    let survival = match &st.survival_grid {
        Some(grid) => {
            let curve = storage_survival_curve(p, &schedule, grid, dt)?;
            series.push(Series {
                name: "survival",
                columns: vec!["survival_probability"],
                rows: curve.points.iter().map(|&(t, s)| vec![t, s]).collect(),
            });
            json!({ "points": curve.points, "fitted_decay_rate": curve.fitted_decay_rate })
        }
        None => Value::Null,
    };
    Ok(Outcome {
        results: json!({
            "cit": cit,
            "schedule": report.schedule,
            "t_store": report.t_store,
            "t_release": report.t_release,
            "phases": report.phases,
            "survival_probability": report.survival_probability,
            "retrieval_probability": report.retrieval_probability,
            "final_norm_sq": report.final_norm_sq,
            "bookkeeping_error": report.bookkeeping_error,
            "storage_decay_rate": report.storage_decay_rate,
            "gamma": p.gamma,
            "adiabaticity": report.adiabaticity,
            "adiabatic": report.adiabatic,
            "final_polariton_infidelity": return_infidelity(p, &report)?,
            "survival_curve": survival,
        }),
        series,
        warnings,
    })
}
