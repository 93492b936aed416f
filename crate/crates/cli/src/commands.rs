//! The four experiment workflows behind the CLI subcommands.

use std::path::Path;

use anyhow::{anyhow, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use eulerlab::consistency::{
    consistency_report, refinement_study, residual_entropy, residual_mass, residual_momentum,
    RateTable,
};
use eulerlab::dmv::Ensemble;
use eulerlab::domain::{
    nonnegative_scalar_catalogue, scalar_catalogue, vector_catalogue, Field, Trajectory,
};
use eulerlab::riemann::{sample, shock_entropy_check, solve_star, RiemannSolution, WaveKind};
use eulerlab::selection::{
    eval_functional, lerch_separation, select, temperature_lift, LerchReport, SelectOptions,
    SelectionFunctional, SelectionReport,
};
use eulerlab::solver::{simulate, SimSummary};

use crate::config::ExperimentConfig;
use crate::output::{config_hash, unix_timestamp, write_csv, write_json, FORMAT_VERSION};

/// Errors are split by exit code: config problems exit 2, numerics exit 3.
pub enum CliError {
    Config(anyhow::Error),
    Numerical(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Config(e) | CliError::Numerical(e) => format!("{e:#}"),
        }
    }
}

fn cfg_err<T>(r: Result<T>) -> Result<T, CliError> {
    r.map_err(CliError::Config)
}

fn num_err<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Numerical(anyhow!("{e}")))
}

/// Writes the expanded config next to the outputs and returns its hash.
fn persist_config(config: &ExperimentConfig, out: &Path) -> Result<String, CliError> {
    let hash = cfg_err(config_hash(config))?;
    cfg_err(write_json(&out.join("config.json"), config))?;
    Ok(hash)
}

#[derive(Serialize)]
struct SimulateReport<'a> {
    format_version: &'static str,
    config_hash: &'a str,
    timestamp: u64,
    scheme_id: String,
    e0: f64,
    m0: f64,
    entropy_production: f64,
    summary: &'a SimSummary,
}

pub fn cmd_simulate(config: &ExperimentConfig, out: &Path) -> Result<u8, CliError> {
    let hash = persist_config(config, out)?;
    let grid = cfg_err(config.grid.build())?;
    let init = cfg_err(config.initial.build_field(&config.gas, &grid))?;
    let run = num_err(simulate(&config.gas, &init, config.t_end, &config.scheme))?;
    num_err(run.trajectory.save(&out.join("trajectory")))?;
    let report = SimulateReport {
        format_version: FORMAT_VERSION,
        config_hash: &hash,
        timestamp: unix_timestamp(),
        scheme_id: run.trajectory.scheme_id().to_string(),
        e0: run.trajectory.e0(),
        m0: run.trajectory.m0(),
        entropy_production: run.summary.entropy_final - run.summary.entropy_initial,
        summary: &run.summary,
    };
    cfg_err(write_json(&out.join("summary.json"), &report))?;
    Ok(0)
}

#[derive(Serialize)]
struct StarReport<'a> {
    format_version: &'static str,
    config_hash: &'a str,
    timestamp: u64,
    p_star: f64,
    u_star: f64,
    left_wave: String,
    right_wave: String,
    rho_star_left: f64,
    rho_star_right: f64,
    lambda: f64,
    shocks: Vec<ShockRow>,
}

#[derive(Serialize)]
struct ShockRow {
    side: String,
    speed: f64,
    entropy_production: f64,
}

fn wave_name(w: WaveKind) -> String {
    match w {
        WaveKind::Shock => "shock".into(),
        WaveKind::Rarefaction => "rarefaction".into(),
    }
}

pub fn cmd_riemann(config: &ExperimentConfig, out: &Path) -> Result<u8, CliError> {
    let hash = persist_config(config, out)?;
    let data = cfg_err(config.initial.riemann_data(config.gas))?.ok_or_else(|| {
        CliError::Config(anyhow!(
            "the riemann command needs initial data of kind \"sod\" or \"riemann\""
        ))
    })?;
    let sol: RiemannSolution = num_err(solve_star(&data))?;
    let shocks = shock_entropy_check(&sol, &data)
        .into_iter()
        .map(|s| ShockRow {
            side: format!("{:?}", s.side).to_lowercase(),
            speed: s.speed,
            entropy_production: s.production,
        })
        .collect();
    let report = StarReport {
        format_version: FORMAT_VERSION,
        config_hash: &hash,
        timestamp: unix_timestamp(),
        p_star: sol.p_star,
        u_star: sol.u_star,
        left_wave: wave_name(sol.left_wave),
        right_wave: wave_name(sol.right_wave),
        rho_star_left: sol.rho_star_left,
        rho_star_right: sol.rho_star_right,
        lambda: sol.lambda,
        shocks,
    };
    cfg_err(write_json(&out.join("star.json"), &report))?;

    let section = config.riemann.clone().unwrap_or_default();
    let gas = data.gas;
    let span = 1.05 * sol.lambda;
    let n = section.samples.max(2);
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let xi = -span + 2.0 * span * i as f64 / (n - 1) as f64;
        let prim = sample(&sol, &data, xi);
        let theta = prim.temperature();
        let entropy = gas
            .entropy_from_primitive(prim.rho, theta)
            .map_err(|e| CliError::Numerical(anyhow!("{e}")))?;
        rows.push(vec![
            xi.to_string(),
            prim.rho.to_string(),
            prim.u.to_string(),
            prim.v.to_string(),
            prim.p.to_string(),
            theta.to_string(),
            entropy.to_string(),
        ]);
    }
    cfg_err(write_csv(
        &out.join("profile.csv"),
        "xi,rho,u,v,pressure,theta,entropy",
        &rows,
    ))?;
    Ok(0)
}

#[derive(Serialize)]
struct StudyReport<'a> {
    format_version: &'static str,
    config_hash: &'a str,
    timestamp: u64,
    scheme_id: String,
    table: &'a RateTable,
}

pub fn cmd_consistency(config: &ExperimentConfig, out: &Path, workers: usize) -> Result<u8, CliError> {
    let hash = persist_config(config, out)?;
    let section = config
        .consistency
        .clone()
        .ok_or_else(|| CliError::Config(anyhow!("config has no consistency section")))?;
    let resolutions = section.resolutions;
    if resolutions.len() < 2 {
        return Err(CliError::Config(anyhow!(
            "a refinement study needs at least two resolutions"
        )));
    }
    for w in resolutions.windows(2) {
        if w[1] <= w[0] || w[1] % w[0] != 0 {
            return Err(CliError::Config(anyhow!(
                "resolutions must increase and nest, got {} -> {}",
                w[0],
                w[1]
            )));
        }
    }

    let pool = cfg_err(
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .context("building worker pool"),
    )?;
    let base_n = resolutions[0];
    let runs: Result<Vec<Trajectory>, String> = pool.install(|| {
        resolutions
            .par_iter()
            .map(|&n| {
                let grid = config.grid.build_with_resolution(n).map_err(|e| e.to_string())?;
                let init = config
                    .initial
                    .build_field(&config.gas, &grid)
                    .map_err(|e| e.to_string())?;
                let mut scheme = config.scheme;
                // checkpoint spacing shrinks with the grid so the time
                // quadrature refines along with the space discretization
                scheme.checkpoint_dt *= base_n as f64 / n as f64;
                simulate(&config.gas, &init, config.t_end, &scheme)
                    .map(|run| run.trajectory)
                    .map_err(|e| e.to_string())
            })
            .collect()
    });
    let trajectories = num_err(runs)?;

    let coarse_grid = trajectories[0].grid().clone();
    let scalars = scalar_catalogue(&coarse_grid);
    let vectors = vector_catalogue(&coarse_grid);
    let entropys = nonnegative_scalar_catalogue(&coarse_grid);

    // per-interval residual rows on the coarse checkpoint partition
    let coarse_times = trajectories[0].times().to_vec();
    let mut rows = Vec::new();
    for traj in &trajectories {
        let n = traj.grid().cells_per_axis()[0];
        for w in coarse_times.windows(2) {
            for tf in &scalars {
                let v = num_err(residual_mass(traj, tf, w[0], w[1]))?;
                rows.push(vec![
                    "mass".to_string(),
                    tf.label(),
                    w[0].to_string(),
                    w[1].to_string(),
                    n.to_string(),
                    v.to_string(),
                ]);
            }
            for tf in &vectors {
                let v = num_err(residual_momentum(traj, tf, w[0], w[1]))?;
                rows.push(vec![
                    "momentum".to_string(),
                    tf.label(),
                    w[0].to_string(),
                    w[1].to_string(),
                    n.to_string(),
                    v.to_string(),
                ]);
            }
            for tf in &entropys {
                let v = num_err(residual_entropy(traj, tf, w[0], w[1]))?;
                rows.push(vec![
                    "entropy".to_string(),
                    tf.label(),
                    w[0].to_string(),
                    w[1].to_string(),
                    n.to_string(),
                    v.to_string(),
                ]);
            }
        }
    }
    cfg_err(write_csv(
        &out.join("residuals.csv"),
        "kind,test_function,t1,t2,resolution,value",
        &rows,
    ))?;

    let refs: Vec<&Trajectory> = trajectories.iter().collect();
    let table = num_err(refinement_study(&refs, &scalars, &vectors, &entropys))?;

    let mut rate_rows = Vec::new();
    for row in &table.rows {
        for (i, v) in row.values.iter().enumerate() {
            rate_rows.push(vec![
                row.kind.to_string(),
                row.test_function.clone(),
                table.resolutions[i].to_string(),
                v.to_string(),
                row.orders
                    .get(i)
                    .map(|o| o.to_string())
                    .unwrap_or_default(),
            ]);
        }
    }
    cfg_err(write_csv(
        &out.join("rates.csv"),
        "kind,test_function,resolution,value,order",
        &rate_rows,
    ))?;

    // per-trajectory headline reports, small and cheap
    for traj in &trajectories {
        let report = num_err(consistency_report(traj, &scalars, &vectors, &entropys))?;
        cfg_err(write_json(
            &out.join(format!("consistency_{}.json", report.resolution)),
            &report,
        ))?;
    }

    let report = StudyReport {
        format_version: FORMAT_VERSION,
        config_hash: &hash,
        timestamp: unix_timestamp(),
        scheme_id: trajectories[0].scheme_id().to_string(),
        table: &table,
    };
    cfg_err(write_json(&out.join("study.json"), &report))?;
    Ok(0)
}

#[derive(Serialize)]
struct MemberReport {
    label: String,
    scheme_id: String,
    resolution: usize,
    seed: Option<u64>,
    summary: SimSummary,
}

#[derive(Serialize)]
struct LiftReportJson {
    tau: f64,
    epsilon: f64,
    defect_before: f64,
    post_lift_defect: f64,
    jump_closed_form: f64,
    jump_measured: f64,
    jump_bound: f64,
    bound_satisfied: bool,
}

#[derive(Serialize)]
struct EnsembleReport<'a> {
    format_version: &'static str,
    config_hash: &'a str,
    timestamp: u64,
    e0: f64,
    m0: f64,
    members: Vec<MemberReport>,
    selection: &'a SelectionReport,
    chosen_label: String,
    functional_values: Vec<FunctionalRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lift: Option<LiftReportJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lerch: Option<&'a LerchReport>,
}

#[derive(Serialize)]
struct FunctionalRow {
    member: String,
    entropy_functional: f64,
    energy_functional: f64,
    equilibrium_gap_functional: f64,
    tail_bound: f64,
}

pub fn cmd_ensemble_select(
    config: &ExperimentConfig,
    out: &Path,
    workers: usize,
) -> Result<u8, CliError> {
    let hash = persist_config(config, out)?;
    let section = config
        .ensemble
        .clone()
        .ok_or_else(|| CliError::Config(anyhow!("config has no ensemble section")))?;
    if section.members.is_empty() {
        return Err(CliError::Config(anyhow!("ensemble needs at least 1 member")));
    }

    let pool = cfg_err(
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .context("building worker pool"),
    )?;

    struct MemberRun {
        label: String,
        trajectory: Trajectory,
        summary: SimSummary,
        seed: Option<u64>,
    }

    let gas = config.gas;
    let runs: Result<Vec<MemberRun>, String> = pool.install(|| {
        section
            .members
            .par_iter()
            .enumerate()
            .map(|(i, spec)| {
                let label = spec.label(i);
                let n = spec.n.unwrap_or_else(|| config.grid.base_resolution());
                let grid = config
                    .grid
                    .build_with_resolution(n)
                    .map_err(|e| e.to_string())?;
                let initial = match spec.seed {
                    Some(seed) => crate::config::InitialData::Perturbed {
                        base: Box::new(config.initial.clone()),
                        seed,
                        amplitude: section.perturb_amplitude,
                    },
                    None => config.initial.clone(),
                };
                let init = initial.build_field(&gas, &grid).map_err(|e| e.to_string())?;
                let scheme = spec.scheme(&config.scheme);
                let run =
                    simulate(&gas, &init, config.t_end, &scheme).map_err(|e| e.to_string())?;
                let mut trajectory = run.trajectory;
                if section.energy_slack > 0.0 {
                    // re-budget: keeps the fields, inflates E0 to create a defect
                    trajectory = Trajectory::new(
                        gas,
                        trajectory.times().to_vec(),
                        trajectory.fields().to_vec(),
                        trajectory.e0() * (1.0 + section.energy_slack),
                        trajectory.entropy_tol(),
                        trajectory.scheme_id(),
                    )
                    .map_err(|e| e.to_string())?;
                }
                // member-private output directory
                let dir = out.join("members").join(&label);
                trajectory.save(&dir.join("trajectory")).map_err(|e| e.to_string())?;
                write_json(&dir.join("summary.json"), &run.summary).map_err(|e| e.to_string())?;
                Ok(MemberRun {
                    label,
                    trajectory,
                    summary: run.summary,
                    seed: spec.seed,
                })
            })
            .collect()
    });
    let runs = num_err(runs)?;

    let labels: Vec<String> = runs.iter().map(|r| r.label.clone()).collect();
    let member_reports: Vec<MemberReport> = runs
        .iter()
        .map(|r| MemberReport {
            label: r.label.clone(),
            scheme_id: r.trajectory.scheme_id().to_string(),
            resolution: r.trajectory.grid().cells_per_axis()[0],
            seed: r.seed,
            summary: r.summary.clone(),
        })
        .collect();
    let trajectories: Vec<Trajectory> = runs.into_iter().map(|r| r.trajectory).collect();
    let ensemble = num_err(Ensemble::new(trajectories, labels))?;

    // per-checkpoint diagnostics
    let mut diag_rows = Vec::new();
    for (k, &t) in ensemble.times().to_vec().iter().enumerate() {
        let gap = num_err(ensemble.energy_gap(k))?;
        let fd = num_err(ensemble.flux_defect(k))?;
        let bary = num_err(ensemble.barycenter(k))?;
        let defect = ensemble.e0() - bary.total_energy(ensemble.gas());
        diag_rows.push(vec![
            t.to_string(),
            gap.to_string(),
            fd.integrated_trace.to_string(),
            (fd.r * fd.integrated_trace).to_string(),
            defect.to_string(),
            fd.compatibility_holds.to_string(),
        ]);
    }
    cfg_err(write_csv(
        &out.join("diagnostics.csv"),
        "time,energy_gap,integrated_trace,r_times_trace,barycenter_defect,compatibility_holds",
        &diag_rows,
    ))?;

    // Cesaro partial averages at the final checkpoint
    let last = ensemble.times().len() - 1;
    let averages = num_err(ensemble.cesaro_averages(last))?;
    let full_mean = averages.last().unwrap().clone();
    let mut cesaro_rows = Vec::new();
    for (i, avg) in averages.iter().enumerate() {
        let d = num_err(avg.l1_distance(&full_mean))?;
        cesaro_rows.push(vec![(i + 1).to_string(), d.to_string()]);
    }
    cfg_err(write_csv(
        &out.join("cesaro.csv"),
        "n,l1_distance_to_mean",
        &cesaro_rows,
    ))?;

    // selection
    let procedure = section.selection.to_procedure();
    let opts = SelectOptions {
        tie_tol: section.tie_tol,
    };
    let (chosen, selection_report) = num_err(select(&ensemble, &procedure, opts))?;

    // headline functional values for every member
    let theta_bar = ensemble.e0() / (ensemble.gas().cv() * ensemble.m0());
    let mut functional_values = Vec::new();
    for i in 0..ensemble.len() {
        let member = ensemble.member(i);
        let fs = num_err(eval_functional(&SelectionFunctional::entropy(), member))?;
        let fe = num_err(eval_functional(&SelectionFunctional::energy(), member))?;
        let fg = num_err(eval_functional(
            &SelectionFunctional::equilibrium_gap(theta_bar),
            member,
        ))?;
        functional_values.push(FunctionalRow {
            member: ensemble.provenance(i).to_string(),
            entropy_functional: fs.value,
            energy_functional: fe.value,
            equilibrium_gap_functional: fg.value,
            tail_bound: fs.tail_bound.max(fe.tail_bound).max(fg.tail_bound),
        });
    }

    // optional lift demonstration on the chosen member
    let mut lift_json = None;
    let mut lerch_report: Option<LerchReport> = None;
    if let Some(lift_section) = &section.lift {
        let member = ensemble.member(chosen);
        let e0 = member.e0();
        let lift = num_err(temperature_lift(member, lift_section.tau, e0))?;
        let scheme = section.members[chosen].scheme(&config.scheme);
        let remaining = config.t_end - lift_section.tau;
        let tail_run = num_err(simulate(&gas, &lift.field, remaining, &scheme))?;
        let tail = num_err(Trajectory::new(
            gas,
            tail_run.trajectory.times().to_vec(),
            tail_run.trajectory.fields().to_vec(),
            e0,
            tail_run.trajectory.entropy_tol(),
            tail_run.trajectory.scheme_id(),
        ))?;
        let lifted = num_err(eulerlab::selection::concatenate(
            member,
            lift_section.tau,
            &tail,
        ))?;
        num_err(lifted.save(&out.join("lifted").join("trajectory")))?;

        let k_tau = num_err(member.checkpoint_index(lift_section.tau))?;
        let g_of = |f: &Field| f.total_energy(&gas) - lift.theta_bar * f.total_entropy();
        let jump_measured = g_of(&lift.field) - g_of(member.right_value(k_tau));
        let post_lift_defect = e0 - lift.field.total_energy(&gas);
        lift_json = Some(LiftReportJson {
            tau: lift_section.tau,
            epsilon: lift.epsilon,
            defect_before: lift.defect,
            post_lift_defect,
            jump_closed_form: lift.jump_value,
            jump_measured,
            jump_bound: lift.jump_bound,
            bound_satisfied: lift.jump_value <= lift.jump_bound + 1e-10 * e0.abs(),
        });
        lerch_report = Some(num_err(lerch_separation(
            member,
            &lifted,
            lift_section.tau,
            &lift_section.lambda_grid,
        ))?);
    }

    let report = EnsembleReport {
        format_version: FORMAT_VERSION,
        config_hash: &hash,
        timestamp: unix_timestamp(),
        e0: ensemble.e0(),
        m0: ensemble.m0(),
        members: member_reports,
        selection: &selection_report,
        chosen_label: ensemble.provenance(chosen).to_string(),
        functional_values,
        lift: lift_json,
        lerch: lerch_report.as_ref(),
    };
    cfg_err(write_json(&out.join("report.json"), &report))?;

    Ok(if selection_report.tie_broken_by_order {
        4
    } else {
        0
    })
}

/// Dispatch table used by `main`.
pub fn run(
    command: &str,
    config: &ExperimentConfig,
    out: &Path,
    workers: usize,
) -> Result<u8, CliError> {
    match command {
        "simulate" => cmd_simulate(config, out),
        "riemann" => cmd_riemann(config, out),
        "consistency" => cmd_consistency(config, out, workers),
        "ensemble-select" => cmd_ensemble_select(config, out, workers),
        other => Err(CliError::Config(anyhow!("unknown command {other}"))),
    }
}
