//! Command implementations behind the `invmeas` binary.
//!
//! Every output JSON carries the tool version and the SHA-256 of the config
//! file, and nothing time-dependent, so identical configs give identical files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::config::{load_config, read_moments_file, LoadedConfig};
use crate::error::{Error, Result};
use crate::moment::MomentVector;
use crate::objective::MomentTarget;
use crate::polynomial::{Basis, MultiIndex, Polynomial};
use crate::reconstruct::{christoffel_in_box, density, levelset_grid};
use crate::simulate::estimate_moments;
use crate::solver::{assemble, solve, ConicProgram, SolveStatus};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_OPTIMAL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Solve,
    Simulate,
    Reconstruct,
    DumpProgram,
}

#[derive(Clone, Debug)]
pub struct Invocation {
    pub command: Command,
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub moments: Option<PathBuf>,
}

/// Files written and the exit code to report.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub exit_code: i32,
    pub files: Vec<PathBuf>,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Singular(_) | Error::Escaped { .. } => EXIT_NUMERICAL,
        _ => EXIT_CONFIG,
    }
}

/// Machine-readable error report for stderr.
pub fn error_json(err: &Error) -> String {
    let kind = match err {
        Error::DegreeCapExceeded { .. } => "degree_cap_exceeded",
        Error::DegreeMismatch(_) => "degree_mismatch",
        Error::DimensionMismatch(_) => "dimension_mismatch",
        Error::BasisMismatch { .. } => "basis_mismatch",
        Error::MissingNoiseMoments { .. } => "missing_noise_moments",
        Error::MissingMoments { .. } => "missing_moments",
        Error::InvalidParameter(_) => "invalid_parameter",
        Error::Unsupported(_) => "unsupported",
        Error::Singular(_) => "singular",
        Error::Escaped { .. } => "escaped",
        Error::Parse { .. } => "parse",
        Error::Config { .. } => "config",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
    };
    let mut body = json!({
        "kind": kind,
        "message": err.to_string(),
        "exit_code": exit_code(err),
    });
    match err {
        Error::Config { key, .. } => body["key"] = json!(key),
        Error::MissingMoments { required_degree, .. } => body["required_degree"] = json!(required_degree),
        _ => {}
    }
    json!({ "error": body }).to_string()
}

pub fn run(inv: &Invocation) -> Result<Outcome> {
    let cfg = load_config(&inv.config)?;
    let out = output_dir(inv, &cfg);
    fs::create_dir_all(&out)?;
    match inv.command {
        Command::Solve => cmd_solve(&cfg, &out),
        Command::Simulate => cmd_simulate(&cfg, &out),
        Command::DumpProgram => cmd_dump_program(&cfg, &out),
        Command::Reconstruct => {
            let moments = inv.moments.clone().ok_or_else(|| Error::Config {
                key: "--moments".into(),
                message: "reconstruct needs a moments file".into(),
            })?;
            cmd_reconstruct(&cfg, &moments, &out)
        }
    }
}

fn output_dir(inv: &Invocation, cfg: &LoadedConfig) -> PathBuf {
    match (&inv.out, &cfg.config.output) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) => cfg.dir.join(o),
        (None, None) => PathBuf::from("."),
    }
}

fn stamp(cfg: &LoadedConfig) -> Value {
    json!({ "tool": "invmeas", "version": VERSION, "config_hash": cfg.hash })
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(v)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn moment_list(y: &MomentVector) -> Vec<MomentTarget> {
    MultiIndex::enumerate(y.dim(), y.degree())
        .into_iter()
        .zip(y.values().iter().copied())
        .map(|(alpha, value)| MomentTarget { alpha, value })
        .collect()
}

fn build_program(cfg: &LoadedConfig) -> Result<ConicProgram> {
    let model = cfg.model()?;
    let relax = cfg.relaxation()?;
    assemble(&model, relax.k, &cfg.objective()?, relax.basis)
}

pub fn cmd_dump_program(cfg: &LoadedConfig, out: &Path) -> Result<Outcome> {
    let program = build_program(cfg)?;
    let path = out.join("program.txt");
    fs::write(&path, program.dump())?;
    Ok(Outcome {
        exit_code: EXIT_OK,
        files: vec![path],
    })
}

pub fn cmd_solve(cfg: &LoadedConfig, out: &Path) -> Result<Outcome> {
    let program = build_program(cfg)?;
    let mut files = Vec::new();
    if cfg.config.dump_program {
        let path = out.join("program.txt");
        fs::write(&path, program.dump())?;
        files.push(path);
    }
    let result = solve(&program, &cfg.config.solver)?;
    let frame = program.frame.as_ref().expect("assembled programs carry a frame");
    let meta = program.meta.as_ref().expect("assembled programs carry metadata");
    let user = frame.to_user_moments(&result.y, frame.moment_degree)?;

    let mut doc = stamp(cfg);
    doc["kind"] = json!(meta.kind);
    doc["k"] = json!(meta.order);
    doc["d_k"] = json!(meta.moment_degree);
    doc["status"] = json!(result.status);
    doc["objective"] = json!(result.objective);
    doc["iterations"] = json!(result.iterations);
    doc["residuals"] = json!({
        "primal": result.primal_residual,
        "dual": result.dual_residual,
        "gap": result.gap,
        "equality": result.equality_residual,
        "min_psd_eigenvalue": result.min_psd_eigenvalue,
    });
    doc["uniqueness_assumed"] = json!(result.uniqueness_assumed);
    doc["moments"] = json!(moment_list(&user));
    doc["working"] = json!({
        "basis": frame.basis,
        "blocks": frame.blocks,
        "center": frame.scaling.center(),
        "half_width": frame.scaling.half_width(),
        "values": result.y,
    });
    let path = out.join("moments.json");
    write_json(&path, &doc)?;
    files.push(path);

    let exit_code = match result.status {
        SolveStatus::Optimal => EXIT_OK,
        status => {
            log::warn!("solver status {status:?}");
            EXIT_NOT_OPTIMAL
        }
    };
    Ok(Outcome { exit_code, files })
}

pub fn cmd_simulate(cfg: &LoadedConfig, out: &Path) -> Result<Outcome> {
    let model = cfg.model()?;
    let traj = cfg.trajectory()?;
    let moments = estimate_moments(&model, &traj)?;
    let mut doc = stamp(cfg);
    doc["x0"] = json!(traj.x0);
    doc["iterations"] = json!(traj.iterations);
    doc["burn_in"] = json!(traj.burn_in);
    doc["seed"] = json!(traj.seed);
    doc["moments"] = json!(moments
        .into_iter()
        .map(|(alpha, value)| MomentTarget { alpha, value })
        .collect::<Vec<_>>());
    let path = out.join("empirical_moments.json");
    write_json(&path, &doc)?;
    Ok(Outcome {
        exit_code: EXIT_OK,
        files: vec![path],
    })
}

/// Largest degree `D` such that every monomial moment with `|alpha| <= D` is present.
fn complete_vector(n: usize, map: &BTreeMap<MultiIndex, f64>) -> Result<MomentVector> {
    let mut degree = 0;
    while MultiIndex::enumerate(n, degree + 1)
        .iter()
        .all(|a| map.contains_key(a))
    {
        degree += 1;
        if degree > 200 {
            break;
        }
    }
    if !map.contains_key(&MultiIndex::zeros(n)) {
        return Err(Error::MissingMoments {
            required_degree: 0,
            available_degree: 0,
        });
    }
    let values = MultiIndex::enumerate(n, degree).iter().map(|a| map[a]).collect();
    MomentVector::new(n, Basis::Monomial, degree, values)
}

fn polynomial_json(p: &Polynomial) -> Result<Value> {
    Ok(serde_json::to_value(p)?)
}

fn write_grid(path: &Path, grid: &crate::reconstruct::LevelSetGrid) -> Result<()> {
    let mut buf = Vec::new();
    grid.write_csv(&mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn cmd_reconstruct(cfg: &LoadedConfig, moments: &Path, out: &Path) -> Result<Outcome> {
    let set = cfg.set()?;
    let (n, map) = read_moments_file(moments)?;
    if n != set.dim() {
        return Err(Error::DimensionMismatch(format!(
            "moments file has {n} variables, config has {}",
            set.dim()
        )));
    }
    let y = complete_vector(n, &map)?;
    let rc = &cfg.config.reconstruct;
    if rc.christoffel.is_none() && rc.density.is_none() {
        return Err(Error::Config {
            key: "reconstruct".into(),
            message: "request `christoffel` and/or `density`".into(),
        });
    }
    let grid = cfg.grid()?;
    let mut files = Vec::new();

    if let Some(dc) = &rc.density {
        let dm = density(&y, dc.k, &set, dc.truncation)?;
        let mut doc = stamp(cfg);
        doc["degree"] = json!(dm.degree);
        doc["truncation"] = json!(dm.truncation);
        doc["polynomial"] = polynomial_json(&dm.user_polynomial()?)?;
        doc["scaled"] = json!({
            "center": dm.scaling.center(),
            "half_width": dm.scaling.half_width(),
            "polynomial": polynomial_json(&dm.q)?,
        });
        let path = out.join("density.json");
        write_json(&path, &doc)?;
        files.push(path);

        let values = levelset_grid(|x: &[f64]| dm.evaluate(x), f64::INFINITY, &grid)?;
        let mut text = String::new();
        let header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        text.push_str(&format!("{},density\n", header.join(",")));
        for (x, v) in values.nodes.iter().zip(&values.values) {
            let coords: Vec<String> = x.iter().map(|c| format!("{c:e}")).collect();
            text.push_str(&format!("{},{v:e}\n", coords.join(",")));
        }
        let path = out.join("density_grid.csv");
        fs::write(&path, text)?;
        files.push(path);
    }

    if let Some(cc) = &rc.christoffel {
        if cc.confidence.is_empty() {
            return Err(Error::Config {
                key: "reconstruct.christoffel.confidence".into(),
                message: "needs at least one confidence level".into(),
            });
        }
        let mut levels = Vec::new();
        let mut first = None;
        for (i, &eps) in cc.confidence.iter().enumerate() {
            let model = christoffel_in_box(&y, &set, cc.d, eps, cc.regularization)?;
            let grid_vals = levelset_grid(|x: &[f64]| model.evaluate(x), model.level, &grid)?;
            let path = out.join(format!("support_grid_{eps}.csv"));
            write_grid(&path, &grid_vals)?;
            files.push(path);
            if i == 0 {
                let path = out.join("support_grid.csv");
                write_grid(&path, &grid_vals)?;
                files.push(path);
            }
            levels.push(json!({
                "confidence": eps,
                "level": model.level,
                "grid_fraction_inside": grid_vals.inside.iter().filter(|&&b| b).count() as f64
                    / grid_vals.inside.len() as f64,
            }));
            first.get_or_insert(model);
        }
        let model = first.expect("at least one confidence level");
        let mut doc = stamp(cfg);
        doc["d"] = json!(cc.d);
        doc["regularization"] = json!(model.regularization);
        doc["levels"] = json!(levels);
        doc["polynomial"] = polynomial_json(&model.user_polynomial()?)?;
        doc["scaled"] = json!({
            "center": model.scaling.center(),
            "half_width": model.scaling.half_width(),
            "polynomial": polynomial_json(&model.q)?,
        });
        let path = out.join("christoffel.json");
        write_json(&path, &doc)?;
        files.push(path);
    }

    Ok(Outcome {
        exit_code: EXIT_OK,
        files,
    })
}
