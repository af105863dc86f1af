//! One function per subcommand.

use std::time::Instant;

use lticert::certificates::{
    build_data_matrices, energy_bound, l2_gain, l2_gain_sweep, learn_lyapunov, peak_bound,
    solve_lyapunov_equation, CertificateKind,
};
use lticert::certificates::validate_certificate;
use lticert::linalg::{dot, Matrix};
use lticert::oracles::{
    ellipsoid_invariance_check, hinf_norm, lyap_solve_model, observability_gramian, OracleReport,
};
use lticert::trajectory::{
    self, differentiate, read_csv, write_csv, DiffScheme, DiffTrajectory, InputSignal,
    IntegrationMethod, Trajectory,
};
use serde_json::{json, Value};

use crate::model::{load_model, load_weight, parse_vector, WeightSpec};
use crate::report::{
    emit, matrix_json, oracle_json, validation_json, write_level_set, InputDigest, Report,
};
use crate::{
    CliError, CompareArgs, EnergyArgs, GainArgs, InputArg, LyapArgs, LyapEqArgs, MethodArg,
    PeakArgs, SimulateArgs, WhichArg,
};

fn load_diff(path: &str, scheme: DiffScheme) -> Result<(Trajectory, DiffTrajectory), CliError> {
    let traj = read_csv(path)?;
    let diff = differentiate(&traj, scheme)?;
    Ok((traj, diff))
}

fn finish(report: Report, out: Option<&str>, started: Instant, summary: &str) -> Result<(), CliError> {
    let mut report = report;
    report.duration_ms = started.elapsed().as_millis() as u64;
    match out {
        Some(path) => {
            emit(&report, Some(path))?;
            println!("{summary}");
            println!("report written to {path}");
        }
        None => {
            eprintln!("{summary}");
            emit(&report, None)?;
        }
    }
    Ok(())
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let x0 = parse_vector(&args.x0, "x0")?;
    let input = match args.input {
        InputArg::Zero => InputSignal::Zero,
        InputArg::Step => InputSignal::UnitStep,
    };
    let method = match args.method {
        MethodArg::Zoh => IntegrationMethod::ExactZoh,
        MethodArg::Rk4 => IntegrationMethod::Rk4,
    };
    let traj = trajectory::simulate(&model, &x0, &input, args.t_final, args.dt, method)?;
    write_csv(&traj, &args.out)?;
    println!("wrote {} samples (dt = {}) to {}", traj.samples(), traj.dt, args.out);
    Ok(())
}

pub fn lyap(args: &LyapArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let (traj, diff) = load_diff(&args.traj, args.diff.into())?;
    let dm = build_data_matrices(&diff, None)?;
    let cert = learn_lyapunov(&dm, args.c1, args.c2)?;

    if let (Some(level), Some(path)) = (args.emit_levelset, args.levelset_out.as_deref()) {
        write_level_set(&cert.p, level, path)?;
    }
    let validation = validate_certificate(&cert.p, &diff, CertificateKind::Lyapunov)?;

    let report = Report {
        command: "lyap".into(),
        input: InputDigest::of(&args.traj, &traj),
        certificate: json!({
            "kind": "lyapunov",
            "P": matrix_json(&cert.p),
            "c1": cert.c1,
            "c2": cert.c2,
            "trace": cert.p.trace(),
            "min_positivity_margin": cert.min_positivity_margin,
            "min_decrease_margin": cert.min_decrease_margin,
        }),
        validation: Some(validation_json(&validation)),
        oracle: None,
        duration_ms: 0,
    };
    let summary = format!(
        "lyapunov certificate found: decrease margin {:.3e}, {} violations on training data",
        cert.min_decrease_margin, validation.violations
    );
    finish(report, args.out.as_deref(), started, &summary)
}

pub fn lyap_eq(args: &LyapEqArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let (traj, mut diff) = load_diff(&args.traj, args.diff.into())?;
    if let Some(model_path) = args.model.as_deref() {
        let model = load_model(model_path)?;
        diff = diff.with_exact_derivatives(&model)?;
    }
    let n = diff.state_dim();
    let q = match load_weight(&args.q)? {
        WeightSpec::Identity => Matrix::identity(n),
        WeightSpec::Explicit(m) => m,
    };

    let selected = match args.points {
        None => diff.clone(),
        Some(k) => {
            if k < 2 {
                return Err(CliError::Input("--points must be at least 2".into()));
            }
            let total = diff.samples();
            let indices: Vec<usize> =
                (0..k.min(total)).map(|j| j * (total - 1) / (k.min(total) - 1)).collect();
            diff.select(&indices)?
        }
    };
    let p = solve_lyapunov_equation(&selected, &q)?;
    let validation = validate_certificate(&p, &selected, CertificateKind::Lyapunov)?;

    let report = Report {
        command: "lyap-eq".into(),
        input: InputDigest::of(&args.traj, &traj),
        certificate: json!({
            "kind": "lyapunov-equation",
            "P": matrix_json(&p),
            "Q": if args.q == "identity" { json!("identity") } else { matrix_json(&q) },
            "points_used": selected.samples(),
        }),
        validation: Some(validation_json(&validation)),
        oracle: None,
        duration_ms: 0,
    };
    let summary = format!(
        "Lyapunov equation solved from {} samples (state dimension {})",
        selected.samples(),
        n
    );
    finish(report, args.out.as_deref(), started, &summary)
}

fn initial_state(traj: &Trajectory, flag: Option<&str>) -> Result<Vec<f64>, CliError> {
    match flag {
        Some(text) => parse_vector(text, "x0"),
        None => Ok(traj.states.row(0).to_vec()),
    }
}

pub fn energy(args: &EnergyArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let (traj, diff) = load_diff(&args.traj, args.diff.into())?;
    let x0 = initial_state(&traj, args.x0.as_deref())?;
    let dm = build_data_matrices(&diff, None)?;
    let eb = energy_bound(&dm, &x0)?;
    let validation = validate_certificate(&eb.p, &diff, CertificateKind::Energy)?;

    let report = Report {
        command: "energy".into(),
        input: InputDigest::of(&args.traj, &traj),
        certificate: json!({
            "kind": "energy-bound",
            "P": matrix_json(&eb.p),
            "x0": x0,
            "bound": eb.bound,
        }),
        validation: Some(validation_json(&validation)),
        oracle: None,
        duration_ms: 0,
    };
    let summary = format!("output-energy bound {:.6}", eb.bound);
    finish(report, args.out.as_deref(), started, &summary)
}

pub fn peak(args: &PeakArgs, seed: u64) -> Result<(), CliError> {
    let started = Instant::now();
    let (traj, diff) = load_diff(&args.traj, args.diff.into())?;
    let x0 = initial_state(&traj, args.x0.as_deref())?;
    let dm = build_data_matrices(&diff, None)?;
    let pb = peak_bound(&dm, &x0)?;

    if let Some(path) = args.emit_ellipse.as_deref() {
        write_level_set(&pb.p, 1.0, path)?;
    }
    let sample_validation =
        validate_certificate(&pb.p, &diff, CertificateKind::Peak { bound: pb.bound })?;
    let mut validation = validation_json(&sample_validation);
    if let Some(model_path) = args.validate_model.as_deref() {
        let model = load_model(model_path)?;
        let check = ellipsoid_invariance_check(&model, &pb.p, 100, traj.t_final(), traj.dt, seed)?;
        validation["ellipsoid"] = json!({
            "boundary_trajectories": check.samples,
            "max_quad_form": check.max_quad_form,
            "max_output_norm": check.max_output_norm,
        });
    }

    let report = Report {
        command: "peak".into(),
        input: InputDigest::of(&args.traj, &traj),
        certificate: json!({
            "kind": "peak-bound",
            "P": matrix_json(&pb.p),
            "x0": x0,
            "lambda": pb.lambda,
            "bound": pb.bound,
        }),
        validation: Some(validation),
        oracle: None,
        duration_ms: 0,
    };
    let summary = format!("output-peak bound {:.6} (lambda {:.6})", pb.bound, pb.lambda);
    finish(report, args.out.as_deref(), started, &summary)
}

pub fn gain(args: &GainArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let (traj, diff) = load_diff(&args.traj, args.diff.into())?;
    let dm = build_data_matrices(&diff, None)?;
    let gb = l2_gain(&dm)?;
    let validation = validate_certificate(&gb.p, &diff, CertificateKind::Gain { beta: gb.beta })?;

    let report = Report {
        command: "gain".into(),
        input: InputDigest::of(&args.traj, &traj),
        certificate: json!({
            "kind": "gain-bound",
            "P": matrix_json(&gb.p),
            "beta": gb.beta,
            "gamma": gb.gamma,
        }),
        validation: Some(validation_json(&validation)),
        oracle: None,
        duration_ms: 0,
    };
    // horizon of the differentiated data actually entering the program
    let horizon = (diff.samples().saturating_sub(1)) as f64 * diff.dt;
    let summary = format!("T={horizon:.2} gamma={:.5}", gb.gamma);
    finish(report, args.out.as_deref(), started, &summary)
}

fn skipped(reason: &str) -> Value {
    json!({ "skipped": reason })
}

fn matrix_deviation(data: &Matrix, oracle: &Matrix) -> (f64, f64) {
    let mut max_abs = 0.0f64;
    let mut max_rel = 0.0f64;
    for i in 0..data.rows() {
        for j in 0..data.cols() {
            let abs = (data[(i, j)] - oracle[(i, j)]).abs();
            max_abs = max_abs.max(abs);
            max_rel = max_rel.max(abs / oracle[(i, j)].abs().max(1e-300));
        }
    }
    (max_abs, max_rel)
}

pub fn compare(args: &CompareArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let (traj, diff) = load_diff(&args.traj, args.diff.into())?;
    let model = load_model(&args.model)?;
    if model.state_dim() != traj.state_dim() {
        return Err(CliError::Input(format!(
            "model has {} states, trajectory has {}",
            model.state_dim(),
            traj.state_dim()
        )));
    }

    let want = |section: WhichArg| args.which == section || args.which == WhichArg::All;
    let mut oracle_sections = serde_json::Map::new();

    if want(WhichArg::LyapEq) {
        let section = match solve_lyapunov_equation(&diff, &Matrix::identity(traj.state_dim())) {
            Ok(p_data) => match lyap_solve_model(model.a(), &Matrix::identity(traj.state_dim())) {
                Ok(p_oracle) => {
                    let (max_abs, max_rel) = matrix_deviation(&p_data, &p_oracle);
                    json!({
                        "data_P": matrix_json(&p_data),
                        "oracle_P": matrix_json(&p_oracle),
                        "max_abs_deviation": max_abs,
                        "max_rel_deviation": max_rel,
                    })
                }
                Err(e) => skipped(&e.to_string()),
            },
            Err(e) => skipped(&e.to_string()),
        };
        oracle_sections.insert("lyap_eq".into(), section);
    }

    if want(WhichArg::Energy) {
        let section = if traj.outputs.is_none() {
            skipped("no outputs recorded in the trajectory")
        } else if model.output_dim() == 0 {
            skipped("model has no output map")
        } else {
            let x0 = traj.states.row(0).to_vec();
            match build_data_matrices(&diff, None).map_err(CliError::from).and_then(|dm| {
                energy_bound(&dm, &x0).map_err(CliError::from)
            }) {
                Ok(eb) => match observability_gramian(model.a(), model.c()) {
                    Ok(w) => {
                        let oracle_value = dot(&w.matvec(&x0), &x0);
                        oracle_json(&OracleReport::new("output_energy", oracle_value, eb.bound))
                    }
                    Err(e) => skipped(&e.to_string()),
                },
                Err(e) => skipped(&e.to_string()),
            }
        };
        oracle_sections.insert("energy".into(), section);
    }

    if want(WhichArg::Gain) {
        let section = if traj.inputs.is_none() {
            skipped("no inputs recorded in the trajectory")
        } else if traj.outputs.is_none() {
            skipped("no outputs recorded in the trajectory")
        } else {
            match hinf_norm(&model, 1e-3, 1e3, 2000) {
                Ok(oracle_gamma) => {
                    let full = build_data_matrices(&diff, None)
                        .map_err(CliError::from)
                        .and_then(|dm| l2_gain(&dm).map_err(CliError::from));
                    match full {
                        Ok(gb) => {
                            let mut section =
                                oracle_json(&OracleReport::new("l2_gain", oracle_gamma, gb.gamma));
                            if let Some(sweep_text) = args.sweep.as_deref() {
                                let horizons = parse_vector(sweep_text, "sweep")?;
                                let rows: Vec<Value> = l2_gain_sweep(&traj, &horizons, args.diff.into())
                                    .into_iter()
                                    .map(|(t, res)| match res {
                                        Ok(gb) => json!({
                                            "t_final": t,
                                            "gamma": gb.gamma,
                                            "rel_deviation": (gb.gamma - oracle_gamma).abs()
                                                / oracle_gamma.abs().max(1e-300),
                                        }),
                                        Err(e) => json!({ "t_final": t, "skipped": e.to_string() }),
                                    })
                                    .collect();
                                section["sweep"] = json!(rows);
                            }
                            section
                        }
                        Err(e) => skipped(&e.to_string()),
                    }
                }
                Err(e) => skipped(&e.to_string()),
            }
        };
        oracle_sections.insert("gain".into(), section);
    }

    let report = Report {
        command: "compare".into(),
        input: InputDigest::of(&args.traj, &traj),
        certificate: Value::Null,
        validation: None,
        oracle: Some(Value::Object(oracle_sections)),
        duration_ms: 0,
    };
    let summary = format!("compared {} section(s) against the model oracles", {
        let o = report.oracle.as_ref().unwrap().as_object().unwrap();
        o.len()
    });
    finish(report, args.out.as_deref(), started, &summary)
}
