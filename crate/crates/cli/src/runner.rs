//! Scenario execution: parameter sweeps, always-on traces, and cost curves.
//!
//! Points run in parallel; output order is fixed by sorting on the row key,
//! never by completion order. A failing point marks its row invalid and the
//! run keeps going — the manifest carries the error.

use std::path::PathBuf;

use rayon::prelude::*;

use qbsim_core::dynamics::{
    default_steps, final_state_fidelity, propagate, Driver, Trajectory,
};
use qbsim_core::metrics::{energy_cost, local_stability, StabilityNormalization};
use qbsim_core::model::{Drive, DriveConfig};
use qbsim_core::schedule::ScheduleKind;
use qbsim_core::tol;

use crate::config::Scenario;
use crate::output::{emit, fmt_f64, Csv, Manifest, RunDiagnostics};

pub struct RunOutcome {
    pub csv_path: PathBuf,
    pub manifest_path: PathBuf,
    pub invalid_rows: usize,
}

fn build_drive(scenario: &Scenario, schedule: &ScheduleKind, omega_tau: f64) -> qbsim_core::Result<Drive> {
    let tau = omega_tau / scenario.omega_drive;
    let config = DriveConfig::new(
        scenario.omega_drive,
        scenario.omega_ref,
        tau,
        schedule.clone(),
        scenario.space,
    )?
    .with_clamp(scenario.clamp_after_tau);
    Drive::new(config)
}

/// Propagate at full and half resolution; the fidelity delta between the two
/// final states is the convergence diagnostic the manifest gates on.
fn run_with_halving(
    drive: &Drive,
    driver: Driver,
    t_end: f64,
    steps: usize,
) -> qbsim_core::Result<(Trajectory, f64)> {
    let full = propagate(drive, driver, t_end, steps)?;
    let half = propagate(drive, driver, t_end, (steps / 2).max(100))?;
    let delta = (1.0 - final_state_fidelity(&full, &half)).abs();
    Ok((full, delta))
}

struct SweepTask {
    schedule: ScheduleKind,
    driver: Driver,
    omega_tau: f64,
}

struct SweepResult {
    ergotropy: Option<f64>,
    diagnostics: RunDiagnostics,
}

pub fn run_sweep_tau(scenario: &Scenario) -> anyhow::Result<RunOutcome> {
    let mut tasks = Vec::new();
    for schedule in &scenario.schedules {
        for &driver in &scenario.drivers {
            for &omega_tau in &scenario.omega_tau_grid {
                tasks.push(SweepTask {
                    schedule: schedule.clone(),
                    driver,
                    omega_tau,
                });
            }
        }
    }
    tasks.sort_by(|a, b| {
        (a.schedule.name(), a.driver.name())
            .cmp(&(b.schedule.name(), b.driver.name()))
            .then(a.omega_tau.total_cmp(&b.omega_tau))
    });

    let results: Vec<SweepResult> = tasks
        .par_iter()
        .map(|task| {
            let key = format!(
                "{}/{}/omega_tau={}",
                task.schedule.name(),
                task.driver.name(),
                fmt_f64(task.omega_tau)
            );
            let outcome = build_drive(scenario, &task.schedule, task.omega_tau).and_then(|drive| {
                let t_end = drive.config().tau;
                run_with_halving(&drive, task.driver, t_end, scenario.steps_per_tau)
            });
            match outcome {
                Ok((traj, delta)) => SweepResult {
                    ergotropy: Some(traj.final_sample().ergotropy_qb),
                    diagnostics: RunDiagnostics {
                        key,
                        status: "ok".into(),
                        error: None,
                        step_halving_delta: Some(delta),
                        quad_refinement_delta: None,
                        norm_drift_max: Some(traj.norm_drift_max),
                        min_gap: Some(traj.min_gap),
                        substeps: Some(traj.substeps_total),
                        flagged: delta > tol::STEP_HALVING_FLAG,
                    },
                },
                Err(e) => SweepResult {
                    ergotropy: None,
                    diagnostics: RunDiagnostics {
                        key,
                        status: "invalid".into(),
                        error: Some(e.to_string()),
                        step_halving_delta: None,
                        quad_refinement_delta: None,
                        norm_drift_max: None,
                        min_gap: None,
                        substeps: None,
                        flagged: true,
                    },
                },
            }
        })
        .collect();

    let mut csv = Csv::new("schedule,driver,omega_tau,ergotropy_over_Emax_qubit,status");
    let mut diagnostics = Vec::with_capacity(results.len());
    let mut invalid = 0usize;
    for (task, result) in tasks.iter().zip(results.into_iter()) {
        let (value, status) = match result.ergotropy {
            Some(e) => (fmt_f64(e), "ok"),
            None => (String::new(), "invalid"),
        };
        if status != "ok" {
            invalid += 1;
        }
        csv.push_row(&[
            task.schedule.name().to_string(),
            task.driver.name().to_string(),
            fmt_f64(task.omega_tau),
            value,
            status.to_string(),
        ]);
        diagnostics.push(result.diagnostics);
    }

    let manifest = Manifest::new(scenario.echo.clone(), diagnostics);
    let (csv_path, manifest_path) = emit(&scenario.out_dir, "sweep_tau", &csv, &manifest)?;
    Ok(RunOutcome {
        csv_path,
        manifest_path,
        invalid_rows: invalid,
    })
}

struct TraceTask {
    schedule: ScheduleKind,
    driver: Driver,
}

struct TraceRows {
    rows: Vec<[String; 8]>,
    diagnostics: RunDiagnostics,
}

pub fn run_trace(scenario: &Scenario) -> anyhow::Result<RunOutcome> {
    let omega_tau = scenario.omega_tau_grid[0];
    let mut tasks = Vec::new();
    for schedule in &scenario.schedules {
        for &driver in &scenario.drivers {
            tasks.push(TraceTask {
                schedule: schedule.clone(),
                driver,
            });
        }
    }
    tasks.sort_by(|a, b| {
        (a.schedule.name(), a.driver.name()).cmp(&(b.schedule.name(), b.driver.name()))
    });

    let results: Vec<TraceRows> = tasks
        .par_iter()
        .map(|task| {
            let key = format!("{}/{}", task.schedule.name(), task.driver.name());
            let run = build_drive(scenario, &task.schedule, omega_tau).and_then(|drive| {
                let tau = drive.config().tau;
                let t_end = scenario.t_end_multiplier * tau;
                let steps = default_steps(t_end, tau) * scenario.steps_per_tau
                    / qbsim_core::dynamics::DEFAULT_STEPS_PER_TAU;
                let (traj, delta) =
                    run_with_halving(&drive, task.driver, t_end, steps.max(100))?;
                let stability =
                    local_stability(&traj, tau, StabilityNormalization::EMaxQubit)?;
                Ok((drive, traj, delta, stability))
            });
            match run {
                Ok((drive, traj, delta, stability)) => {
                    let tau = drive.config().tau;
                    let dt = traj.grid[1] - traj.grid[0];
                    // the stability window is the trailing segment of samples
                    let window_start = traj.samples.len() - stability.eta.len();
                    let mut rows = Vec::with_capacity(traj.samples.len());
                    for (i, s) in traj.samples.iter().enumerate() {
                        let eta = if i >= window_start {
                            fmt_f64(stability.eta[i - window_start])
                        } else {
                            String::new()
                        };
                        let at_tau = if (s.t - tau).abs() <= 0.5 * dt { "1" } else { "0" };
                        rows.push([
                            task.schedule.name().to_string(),
                            task.driver.name().to_string(),
                            fmt_f64(scenario.omega_drive * s.t),
                            fmt_f64(s.ergotropy_qb),
                            fmt_f64(s.fidelity_target),
                            eta,
                            at_tau.to_string(),
                            "ok".to_string(),
                        ]);
                    }
                    TraceRows {
                        rows,
                        diagnostics: RunDiagnostics {
                            key,
                            status: "ok".into(),
                            error: None,
                            step_halving_delta: Some(delta),
                            quad_refinement_delta: None,
                            norm_drift_max: Some(traj.norm_drift_max),
                            min_gap: Some(traj.min_gap),
                            substeps: Some(traj.substeps_total),
                            flagged: delta > tol::STEP_HALVING_FLAG,
                        },
                    }
                }
                Err(e) => TraceRows {
                    rows: vec![[
                        task.schedule.name().to_string(),
                        task.driver.name().to_string(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        "invalid".to_string(),
                    ]],
                    diagnostics: RunDiagnostics {
                        key,
                        status: "invalid".into(),
                        error: Some(e.to_string()),
                        step_halving_delta: None,
                        quad_refinement_delta: None,
                        norm_drift_max: None,
                        min_gap: None,
                        substeps: None,
                        flagged: true,
                    },
                },
            }
        })
        .collect();

    let mut csv = Csv::new(
        "schedule,driver,omega_t,ergotropy_over_Emax_qubit,fidelity_to_target,eta_ls,at_tau,status",
    );
    let mut diagnostics = Vec::with_capacity(results.len());
    let mut invalid = 0usize;
    for result in results {
        if result.diagnostics.status != "ok" {
            invalid += 1;
        }
        for row in &result.rows {
            csv.push_row(row.as_slice());
        }
        diagnostics.push(result.diagnostics);
    }

    let manifest = Manifest::new(scenario.echo.clone(), diagnostics);
    let (csv_path, manifest_path) = emit(&scenario.out_dir, "trace", &csv, &manifest)?;
    Ok(RunOutcome {
        csv_path,
        manifest_path,
        invalid_rows: invalid,
    })
}

struct CostResult {
    fields: Option<[f64; 4]>,
    diagnostics: RunDiagnostics,
}

pub fn run_cost(scenario: &Scenario) -> anyhow::Result<RunOutcome> {
    let schedule = scenario.schedules[0].clone();
    let mut grid = scenario.omega_tau_grid.clone();
    grid.sort_by(f64::total_cmp);

    let results: Vec<CostResult> = grid
        .par_iter()
        .map(|&omega_tau| {
            let key = format!("{}/omega_tau={}", schedule.name(), fmt_f64(omega_tau));
            let run = build_drive(scenario, &schedule, omega_tau).and_then(|drive| {
                let report = energy_cost(&drive, scenario.quad_points)?;
                let mut refined_points = (scenario.quad_points + 1) / 2;
                if refined_points % 2 == 0 {
                    refined_points += 1;
                }
                let coarse = energy_cost(&drive, refined_points.max(3))?;
                let quad_delta = ((report.sigma_ad - coarse.sigma_ad) / report.sigma_ad)
                    .abs()
                    .max(((report.sigma_tqd - coarse.sigma_tqd) / report.sigma_tqd).abs());
                let t_end = drive.config().tau;
                let (traj, halving) =
                    run_with_halving(&drive, Driver::Adiabatic, t_end, scenario.steps_per_tau)?;
                Ok((report, quad_delta, traj, halving))
            });
            match run {
                Ok((report, quad_delta, traj, halving)) => CostResult {
                    fields: Some([
                        report.sigma_ad,
                        report.sigma_tqd,
                        report.sigma_rel,
                        traj.final_sample().ergotropy_qb,
                    ]),
                    diagnostics: RunDiagnostics {
                        key,
                        status: "ok".into(),
                        error: None,
                        step_halving_delta: Some(halving),
                        quad_refinement_delta: Some(quad_delta),
                        norm_drift_max: Some(traj.norm_drift_max),
                        min_gap: Some(traj.min_gap),
                        substeps: Some(traj.substeps_total),
                        flagged: halving > tol::STEP_HALVING_FLAG
                            || quad_delta > tol::STEP_HALVING_FLAG,
                    },
                },
                Err(e) => CostResult {
                    fields: None,
                    diagnostics: RunDiagnostics {
                        key,
                        status: "invalid".into(),
                        error: Some(e.to_string()),
                        step_halving_delta: None,
                        quad_refinement_delta: None,
                        norm_drift_max: None,
                        min_gap: None,
                        substeps: None,
                        flagged: true,
                    },
                },
            }
        })
        .collect();

    let mut csv = Csv::new(
        "omega_tau,sigma_ad_over_hbar_omega,sigma_tqd_over_hbar_omega,sigma_rel,adiabatic_ergotropy_over_Emax_qubit,status",
    );
    let mut diagnostics = Vec::with_capacity(results.len());
    let mut invalid = 0usize;
    for (&omega_tau, result) in grid.iter().zip(results.into_iter()) {
        match result.fields {
            Some([ad, tqd, rel, ergo]) => {
                csv.push_row(&[
                    fmt_f64(omega_tau),
                    fmt_f64(ad),
                    fmt_f64(tqd),
                    fmt_f64(rel),
                    fmt_f64(ergo),
                    "ok".to_string(),
                ]);
            }
            None => {
                invalid += 1;
                csv.push_row(&[
                    fmt_f64(omega_tau),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    "invalid".to_string(),
                ]);
            }
        }
        diagnostics.push(result.diagnostics);
    }

    let manifest = Manifest::new(scenario.echo.clone(), diagnostics);
    let (csv_path, manifest_path) = emit(&scenario.out_dir, "cost", &csv, &manifest)?;
    Ok(RunOutcome {
        csv_path,
        manifest_path,
        invalid_rows: invalid,
    })
}
