//! Task dispatch: one simulation/analysis per invocation.

use std::path::Path;

use paranet::device::{calibrate_system, collision_check};
use paranet::fit::{parse_sweep_data, fit_sweep, FitError, FitParam, FitProblem, LeastSquaresOptions};
use paranet::noise::{sweep_noise, NoiseError};
use paranet::scattering::{sweep_detuning, sweep_loop_phase, ScatteringError};
use paranet::stability::determinant_roots;
use paranet::tune::{tune, Direction, TuneTarget};
use paranet::{Mode64, Network64};

use crate::config::{build_from_config, Config, OutputFormat};
use crate::emit;

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or inputs: exit code 1.
    Validation(String),
    /// The computation itself failed: exit code 2.
    Numerical(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Numerical(m) => write!(f, "{m}"),
        }
    }
}

pub struct RunOutput {
    pub contents: String,
    pub summary: String,
}

fn need<T: Clone>(field: Option<&T>, name: &str, task: &str) -> Result<T, CliError> {
    field
        .cloned()
        .ok_or_else(|| CliError::Validation(format!("task `{task}` requires `task.{name}`")))
}

fn sweep_range(cfg: &Config) -> Result<(f64, f64), CliError> {
    match (cfg.task.span_hz, cfg.task.f_min_hz, cfg.task.f_max_hz) {
        (Some(span), None, None) => Ok((-span / 2.0, span / 2.0)),
        (None, Some(lo), Some(hi)) => Ok((lo, hi)),
        _ => Err(CliError::Validation(
            "specify either task.span_hz or both task.f_min_hz and task.f_max_hz".into(),
        )),
    }
}

fn scattering_err(e: ScatteringError) -> CliError {
    match e {
        ScatteringError::SingularMatrix { .. } => CliError::Numerical(e.to_string()),
        other => CliError::Validation(other.to_string()),
    }
}

pub fn execute(cfg: &Config, base_dir: &Path, format: OutputFormat) -> Result<RunOutput, CliError> {
    match cfg.task.kind.as_str() {
        "sweep" => run_sweep(cfg, format),
        "phase-sweep" => run_phase_sweep(cfg, format),
        "noise" => run_noise(cfg, format),
        "stability" => run_stability(cfg, format),
        "tune" => run_tune(cfg, format),
        "fit" => run_fit(cfg, base_dir, format),
        "calibrate" => run_calibrate(cfg, base_dir, format),
        "collision-check" => run_collision_check(cfg, format),
        other => Err(CliError::Validation(format!(
            "unknown task kind `{other}` (expected sweep | phase-sweep | noise | stability | tune | fit | calibrate | collision-check)"
        ))),
    }
}

fn network(cfg: &Config) -> Result<Network64, CliError> {
    build_from_config(&cfg.network).map_err(CliError::Validation)
}

fn run_sweep(cfg: &Config, format: OutputFormat) -> Result<RunOutput, CliError> {
    let net = network(cfg)?;
    let probe = need(cfg.task.probe.as_ref(), "probe", "sweep")?;
    let (lo, hi) = sweep_range(cfg)?;
    let points = cfg.task.points.unwrap_or(401);
    let result = sweep_detuning(&net, &probe, lo, hi, points).map_err(scattering_err)?;
    let n_stable = result.stable.iter().filter(|&&s| s).count();
    if n_stable == 0 {
        return Err(CliError::Numerical(
            "every sweep point is at a singular operating point".into(),
        ));
    }
    let contents = match format {
        OutputFormat::Csv => emit::sweep_csv(&result),
        OutputFormat::Json => emit::sweep_json(&result),
    };
    Ok(RunOutput {
        contents,
        summary: format!(
            "sweep: {} points over [{:.3}, {:.3}] MHz, {} stable, {} ports",
            points,
            lo / 1e6,
            hi / 1e6,
            n_stable,
            result.port_labels.len()
        ),
    })
}

fn run_phase_sweep(cfg: &Config, format: OutputFormat) -> Result<RunOutput, CliError> {
    let net = network(cfg)?;
    let probe = need(cfg.task.probe.as_ref(), "probe", "phase-sweep")?;
    let edge = need(cfg.task.edge.as_ref(), "edge", "phase-sweep")?;
    if edge.len() != 2 {
        return Err(CliError::Validation(
            "task.edge must name two modes, e.g. [\"a\", \"b\"]".into(),
        ));
    }
    let lo = cfg.task.phi_min_deg.unwrap_or(-180.0).to_radians();
    let hi = cfg.task.phi_max_deg.unwrap_or(180.0).to_radians();
    let points = cfg.task.points.unwrap_or(361);
    let result = sweep_loop_phase(&net, &probe, (&edge[0], &edge[1]), lo, hi, points)
        .map_err(scattering_err)?;
    let n_stable = result.stable.iter().filter(|&&s| s).count();
    let contents = match format {
        OutputFormat::Csv => emit::sweep_csv(&result),
        OutputFormat::Json => emit::sweep_json(&result),
    };
    Ok(RunOutput {
        contents,
        summary: format!(
            "phase-sweep: {} points over [{:.1}, {:.1}] deg, {} stable",
            points,
            lo.to_degrees(),
            hi.to_degrees(),
            n_stable
        ),
    })
}

fn run_noise(cfg: &Config, format: OutputFormat) -> Result<RunOutput, CliError> {
    let net = network(cfg)?;
    let probe = need(cfg.task.probe.as_ref(), "probe", "noise")?;
    let (lo, hi) = sweep_range(cfg)?;
    let points = cfg.task.points.unwrap_or(401);
    let result = sweep_noise(&net, &probe, lo, hi, points).map_err(|e| match e {
        NoiseError::Scattering(s) => scattering_err(s),
        other => CliError::Validation(other.to_string()),
    })?;
    let n_stable = result.stable.iter().filter(|&&s| s).count();
    if n_stable == 0 {
        return Err(CliError::Numerical(
            "every sweep point is at a singular operating point".into(),
        ));
    }
    let contents = match format {
        OutputFormat::Csv => emit::noise_csv(&result),
        OutputFormat::Json => emit::noise_json(&result),
    };
    Ok(RunOutput {
        contents,
        summary: format!("noise: {} points, {} stable", points, n_stable),
    })
}

fn run_stability(cfg: &Config, format: OutputFormat) -> Result<RunOutput, CliError> {
    let net = network(cfg)?;
    let probe = need(cfg.task.probe.as_ref(), "probe", "stability")?;
    let report = determinant_roots(&net, &probe)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let contents = match format {
        OutputFormat::Csv => emit::stability_csv(&report),
        OutputFormat::Json => emit::stability_json(&report),
    };
    Ok(RunOutput {
        contents,
        summary: format!(
            "stability: {} roots, stable = {}, margin = {:.3e}",
            report.roots.len(),
            report.stable,
            report.margin
        ),
    })
}

fn run_tune(cfg: &Config, format: OutputFormat) -> Result<RunOutput, CliError> {
    let target_name = need(cfg.task.target.as_ref(), "target", "tune")?;
    let direction = match cfg.task.direction.as_deref() {
        None | Some("forward") => Direction::Forward,
        Some("reverse") => Direction::Reverse,
        Some(other) => {
            return Err(CliError::Validation(format!(
                "unknown direction `{other}` (expected forward or reverse)"
            )))
        }
    };
    let target = match target_name.as_str() {
        "converter" => TuneTarget::Converter,
        "circulator" => TuneTarget::Circulator(direction),
        "directional-amplifier" => TuneTarget::DirectionalAmplifier {
            gain_db: need(cfg.task.gain_db.as_ref(), "gain_db", "tune")?,
            direction,
        },
        other => {
            return Err(CliError::Validation(format!(
                "unknown tune target `{other}` (expected converter | circulator | directional-amplifier)"
            )))
        }
    };

    let all_modes: Vec<Mode64> = cfg
        .network
        .modes
        .iter()
        .map(|m| Mode64::from_hz(m.id.clone(), m.f_hz, m.kappa_ext_hz, m.kappa_int_hz))
        .collect();
    let modes: Vec<Mode64> = match &cfg.task.modes {
        None => all_modes,
        Some(ids) => ids
            .iter()
            .map(|id| {
                all_modes
                    .iter()
                    .find(|m| &m.id == id)
                    .cloned()
                    .ok_or_else(|| CliError::Validation(format!("tune references unknown mode `{id}`")))
            })
            .collect::<Result<_, _>>()?,
    };
    let edges = tune(&modes, &target).map_err(|e| CliError::Validation(e.to_string()))?;
    let betas: Vec<f64> = edges
        .iter()
        .map(|e| {
            let from = modes.iter().find(|m| m.id == e.from).unwrap();
            let to = modes.iter().find(|m| m.id == e.to).unwrap();
            e.magnitude / (2.0 * (from.kappa() * to.kappa()).sqrt())
        })
        .collect();
    let contents = match format {
        // the CSV format has no natural shape here; always emit the
        // pasteable TOML edges block unless JSON is asked for
        OutputFormat::Csv => emit::tune_toml(&edges, &betas),
        OutputFormat::Json => emit::tune_json(&edges, &betas),
    };
    Ok(RunOutput {
        contents,
        summary: format!("tune: {} edges for target `{}`", edges.len(), target_name),
    })
}

fn fit_err(e: FitError) -> CliError {
    match e {
        FitError::NonConvergence { .. } | FitError::DegenerateProblem => {
            CliError::Numerical(e.to_string())
        }
        other => CliError::Validation(other.to_string()),
    }
}

fn parse_free_param(token: &str) -> Result<(FitParam, f64), CliError> {
    // returns the parameter and the interface-unit → internal-unit factor
    let parts: Vec<&str> = token.split(':').collect();
    let two_pi = 2.0 * std::f64::consts::PI;
    match parts.as_slice() {
        ["omega", m] => Ok((FitParam::Omega(m.to_string()), two_pi)),
        ["kappa", m] => Ok((FitParam::Kappa(m.to_string()), two_pi)),
        ["eta", m] => Ok((FitParam::Eta(m.to_string()), 1.0)),
        ["beta", a, b] => Ok((FitParam::BetaMag(a.to_string(), b.to_string()), 1.0)),
        ["phase", a, b] => Ok((
            FitParam::Phase(a.to_string(), b.to_string()),
            std::f64::consts::PI / 180.0,
        )),
        _ => Err(CliError::Validation(format!(
            "bad free parameter `{token}` (expected omega:<mode>, kappa:<mode>, eta:<mode>, beta:<a>:<b>, phase:<a>:<b>)"
        ))),
    }
}

fn read_data_file(base_dir: &Path, rel: &str) -> Result<String, CliError> {
    let path = if Path::new(rel).is_absolute() {
        Path::new(rel).to_path_buf()
    } else {
        base_dir.join(rel)
    };
    std::fs::read_to_string(&path)
        .map_err(|e| CliError::Validation(format!("cannot read data file {}: {e}", path.display())))
}

fn run_fit(cfg: &Config, base_dir: &Path, format: OutputFormat) -> Result<RunOutput, CliError> {
    let net = network(cfg)?;
    let probe = need(cfg.task.probe.as_ref(), "probe", "fit")?;
    let data_path = need(cfg.task.data.as_ref(), "data", "fit")?;
    let free_tokens = need(cfg.task.free.as_ref(), "free", "fit")?;
    let bounds_cfg = need(cfg.task.bounds.as_ref(), "bounds", "fit")?;
    if bounds_cfg.len() != free_tokens.len() {
        return Err(CliError::Validation(
            "task.bounds needs one [lo, hi] pair per task.free entry".into(),
        ));
    }
    let text = read_data_file(base_dir, &data_path)?;
    let data = parse_sweep_data(&text).map_err(fit_err)?;
    let mut free = Vec::new();
    let mut bounds = Vec::new();
    for (token, b) in free_tokens.iter().zip(&bounds_cfg) {
        let (param, factor) = parse_free_param(token)?;
        free.push(param);
        bounds.push((b[0] * factor, b[1] * factor));
    }
    let report = fit_sweep(&FitProblem {
        network: net,
        probe,
        data,
        free,
        bounds,
        weights: None,
        options: LeastSquaresOptions::default(),
    })
    .map_err(fit_err)?;
    let summary = format!(
        "fit: converged = {}, residual = {:.4e}, {} iterations",
        report.converged, report.residual_norm, report.iterations
    );
    let contents = match format {
        OutputFormat::Csv => emit::fit_csv(&report),
        OutputFormat::Json => emit::fit_json(&report),
    };
    Ok(RunOutput { contents, summary })
}

fn run_calibrate(cfg: &Config, base_dir: &Path, format: OutputFormat) -> Result<RunOutput, CliError> {
    let data_path = need(cfg.task.data.as_ref(), "data", "calibrate")?;
    let f_hz = need(cfg.task.f_hz.as_ref(), "f_hz", "calibrate")?;
    let text = read_data_file(base_dir, &data_path)?;
    let mut data = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = if line.contains(',') {
            line.split(',').map(str::trim).collect()
        } else {
            line.split_whitespace().collect()
        };
        if toks.len() != 2 {
            return Err(CliError::Validation(format!(
                "calibration rows need two columns (V_volts, N_meas); got `{line}`"
            )));
        }
        match (toks[0].parse::<f64>(), toks[1].parse::<f64>()) {
            (Ok(v), Ok(n)) => data.push((v, n)),
            _ if data.is_empty() => continue, // header row
            _ => {
                return Err(CliError::Validation(format!(
                    "bad calibration row `{line}`"
                )))
            }
        }
    }
    let mean_meas = data.iter().map(|&(_, n)| n).sum::<f64>() / data.len().max(1) as f64;
    let guess = (
        cfg.task.guess_g_sys.unwrap_or(mean_meas.abs().max(1e-12) / 20.0),
        cfg.task.guess_n_add.unwrap_or(10.0),
        cfg.task.guess_t_k.unwrap_or(0.3),
    );
    let omega = 2.0 * std::f64::consts::PI * f_hz;
    let rec = calibrate_system(&data, omega, guess).map_err(|e| {
        use paranet::device::DeviceError;
        match e {
            DeviceError::Fit(fe) => fit_err(fe),
            other => CliError::Validation(other.to_string()),
        }
    })?;
    let summary = format!(
        "calibrate: G_sys = {:.4e}, n_add = {:.3}, T = {:.1} mK",
        rec.g_sys,
        rec.n_add,
        rec.temperature * 1e3
    );
    let contents = match format {
        OutputFormat::Csv => emit::calibrate_csv(&rec),
        OutputFormat::Json => emit::calibrate_json(&rec),
    };
    Ok(RunOutput { contents, summary })
}

fn run_collision_check(cfg: &Config, format: OutputFormat) -> Result<RunOutput, CliError> {
    let guard = cfg.task.guard_factor.unwrap_or(3.0);
    let two_pi = 2.0 * std::f64::consts::PI;
    let modes: Vec<(String, f64)> = cfg
        .network
        .modes
        .iter()
        .map(|m| (m.id.clone(), two_pi * m.f_hz))
        .collect();
    let kappas: Vec<f64> = cfg
        .network
        .modes
        .iter()
        .map(|m| two_pi * (m.kappa_ext_hz + m.kappa_int_hz))
        .collect();
    let collisions =
        collision_check(&modes, &kappas, guard).map_err(|e| CliError::Validation(e.to_string()))?;
    let summary = format!(
        "collision-check: {} collisions at guard factor {guard}",
        collisions.len()
    );
    let contents = match format {
        OutputFormat::Csv => emit::collisions_csv(&collisions),
        OutputFormat::Json => emit::collisions_json(&collisions),
    };
    Ok(RunOutput { contents, summary })
}
