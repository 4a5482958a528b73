//! Result serialization: CSV with fixed column order and 12 significant
//! digits, or schema-versioned JSON with complex values as [re, im] pairs.
//! Files are written atomically (temp file in the target directory, then
//! rename).

use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};

use paranet::device::{CalibrationRecord, Collision};
use paranet::fit::FitReport;
use paranet::network::CouplingKind;
use paranet::noise::NoiseResult;
use paranet::scattering::{ScatteringResult, SweepAxis};
use paranet::stability::StabilityReport;
use paranet::CouplingEdge;

pub const SCHEMA: &str = "paranet/1";

/// 12 significant digits; non-finite values spelled out.
pub fn fmt(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{x:.11e}")
    }
}

/// Write atomically: temp file next to the target, then rename over it.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), String> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name()
            .map(|n| n.to_string_lossy().to_string())
            .unwrap_or_else(|| "out".to_string())
    ));
    let mut f = std::fs::File::create(&tmp)
        .map_err(|e| format!("cannot create {}: {e}", tmp.display()))?;
    f.write_all(contents.as_bytes())
        .map_err(|e| format!("cannot write {}: {e}", tmp.display()))?;
    f.sync_all().ok();
    drop(f);
    std::fs::rename(&tmp, path)
        .map_err(|e| format!("cannot move output into place at {}: {e}", path.display()))
}

fn json_compact(v: &Value) -> String {
    let mut s = serde_json::to_string(v).expect("json serialization");
    s.push('\n');
    s
}

pub fn sweep_csv(result: &ScatteringResult<f64>) -> String {
    let n = result.port_labels.len();
    let axis_name = match result.axis {
        SweepAxis::DetuningHz => "delta_Hz",
        SweepAxis::LoopPhaseRad => "phi_loop_deg",
    };
    let mut head = vec![axis_name.to_string()];
    for o in 0..n {
        for i in 0..n {
            head.push(format!("S_{}_{}_dB", result.port_labels[o], result.port_labels[i]));
            head.push(format!("S_{}_{}_deg", result.port_labels[o], result.port_labels[i]));
        }
    }
    let mut out = head.join(",");
    out.push('\n');
    for (k, s) in result.matrices.iter().enumerate() {
        let axis = match result.axis {
            SweepAxis::DetuningHz => result.axis_values[k],
            SweepAxis::LoopPhaseRad => result.axis_values[k].to_degrees(),
        };
        let mut row = vec![fmt(axis)];
        for o in 0..n {
            for i in 0..n {
                if result.stable[k] {
                    let z = s[(o, i)];
                    row.push(fmt(20.0 * z.norm().max(1e-300).log10()));
                    row.push(fmt(z.arg().to_degrees()));
                } else {
                    row.push("nan".to_string());
                    row.push("nan".to_string());
                }
            }
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn sweep_json(result: &ScatteringResult<f64>) -> String {
    let n = result.port_labels.len();
    let s: Vec<Value> = result
        .matrices
        .iter()
        .map(|m| {
            let rows: Vec<Value> = (0..n)
                .map(|o| {
                    let cols: Vec<Value> =
                        (0..n).map(|i| json!([m[(o, i)].re, m[(o, i)].im])).collect();
                    Value::Array(cols)
                })
                .collect();
            Value::Array(rows)
        })
        .collect();
    json_compact(&json!({
        "schema": SCHEMA,
        "task": match result.axis {
            SweepAxis::DetuningHz => "sweep",
            SweepAxis::LoopPhaseRad => "phase-sweep",
        },
        "axis": match result.axis {
            SweepAxis::DetuningHz => "delta_Hz",
            SweepAxis::LoopPhaseRad => "phi_loop_rad",
        },
        "axis_values": result.axis_values,
        "ports": result.port_labels,
        "conjugated": result.conjugated,
        "stable": result.stable,
        "s": s,
    }))
}

pub fn noise_csv(result: &NoiseResult<f64>) -> String {
    let n = result.port_labels.len();
    let mut head = vec!["delta_Hz".to_string()];
    for p in &result.port_labels {
        head.push(format!("Nbar_{p}"));
    }
    for o in 0..n {
        for i in 0..n {
            head.push(format!(
                "nadd_{}_from_{}",
                result.port_labels[o], result.port_labels[i]
            ));
        }
    }
    let mut out = head.join(",");
    out.push('\n');
    for k in 0..result.axis_hz.len() {
        let mut row = vec![fmt(result.axis_hz[k])];
        for p in 0..n {
            row.push(fmt(result.nbar[k][p]));
        }
        for o in 0..n {
            for i in 0..n {
                row.push(fmt(result.nadd[k][(o, i)]));
            }
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn noise_json(result: &NoiseResult<f64>) -> String {
    let n = result.port_labels.len();
    let nadd: Vec<Value> = result
        .nadd
        .iter()
        .map(|m| {
            let rows: Vec<Value> = (0..n)
                .map(|o| Value::Array((0..n).map(|i| json!(m[(o, i)])).collect()))
                .collect();
            Value::Array(rows)
        })
        .collect();
    json_compact(&json!({
        "schema": SCHEMA,
        "task": "noise",
        "axis": "delta_Hz",
        "axis_values": result.axis_hz,
        "ports": result.port_labels,
        "nbar": result.nbar,
        "nadd": nadd,
        "stable": result.stable,
    }))
}

pub fn stability_csv(report: &StabilityReport<f64>) -> String {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut out = String::from("root,re_Hz,im_Hz,stable,margin\n");
    for (k, r) in report.roots.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            k,
            fmt(r.re / two_pi),
            fmt(r.im / two_pi),
            u8::from(report.stable),
            fmt(report.margin)
        ));
    }
    out
}

pub fn stability_json(report: &StabilityReport<f64>) -> String {
    let two_pi = 2.0 * std::f64::consts::PI;
    let roots: Vec<Value> = report
        .roots
        .iter()
        .map(|r| json!([r.re / two_pi, r.im / two_pi]))
        .collect();
    json_compact(&json!({
        "schema": SCHEMA,
        "task": "stability",
        "roots_hz": roots,
        "stable": report.stable,
        "margin": report.margin,
    }))
}

/// Edges block pasteable back into a run configuration.
pub fn tune_toml(edges: &[CouplingEdge<f64>], betas: &[f64]) -> String {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut out = String::new();
    for (e, beta) in edges.iter().zip(betas) {
        out.push_str("[[network.edges]]\n");
        out.push_str(&format!("from = \"{}\"\n", e.from));
        out.push_str(&format!("to = \"{}\"\n", e.to));
        out.push_str(&format!(
            "kind = \"{}\"\n",
            match e.kind {
                CouplingKind::Conversion => "conversion",
                CouplingKind::Amplification => "amplification",
            }
        ));
        out.push_str(&format!("beta = {}\n", fmt(*beta)));
        out.push_str(&format!("phase_deg = {}\n", fmt(e.phase.to_degrees())));
        out.push_str(&format!("pump_f_hz = {}\n\n", fmt(e.pump_freq / two_pi)));
    }
    out
}

pub fn tune_json(edges: &[CouplingEdge<f64>], betas: &[f64]) -> String {
    let two_pi = 2.0 * std::f64::consts::PI;
    let list: Vec<Value> = edges
        .iter()
        .zip(betas)
        .map(|(e, beta)| {
            json!({
                "from": e.from,
                "to": e.to,
                "kind": match e.kind {
                    CouplingKind::Conversion => "conversion",
                    CouplingKind::Amplification => "amplification",
                },
                "beta": beta,
                "phase_deg": e.phase.to_degrees(),
                "pump_f_hz": e.pump_freq / two_pi,
                "g_hz": e.magnitude / two_pi,
            })
        })
        .collect();
    json_compact(&json!({
        "schema": SCHEMA,
        "task": "tune",
        "edges": list,
    }))
}

/// Fit parameters in interface units, with the same naming as `task.free`.
pub fn fit_rows(report: &FitReport<f64>) -> Vec<(String, f64, f64)> {
    let two_pi = 2.0 * std::f64::consts::PI;
    report
        .params
        .iter()
        .zip(&report.param_stderr)
        .map(|((p, v), err)| {
            use paranet::fit::FitParam::*;
            match p {
                Omega(m) => (format!("omega:{m}"), v / two_pi, err / two_pi),
                Kappa(m) => (format!("kappa:{m}"), v / two_pi, err / two_pi),
                Eta(m) => (format!("eta:{m}"), *v, *err),
                BetaMag(a, b) => (format!("beta:{a}:{b}"), *v, *err),
                Phase(a, b) => (format!("phase:{a}:{b}"), v.to_degrees(), err.to_degrees()),
            }
        })
        .collect()
}

pub fn fit_csv(report: &FitReport<f64>) -> String {
    let mut out = String::from("param,value,stderr\n");
    for (name, value, err) in fit_rows(report) {
        out.push_str(&format!("{name},{},{}\n", fmt(value), fmt(err)));
    }
    out.push_str(&format!("residual_norm,{},nan\n", fmt(report.residual_norm)));
    out.push_str(&format!("iterations,{},nan\n", fmt(report.iterations as f64)));
    out
}

pub fn fit_json(report: &FitReport<f64>) -> String {
    let params: Vec<Value> = fit_rows(report)
        .into_iter()
        .map(|(name, value, err)| json!({"param": name, "value": value, "stderr": err}))
        .collect();
    json_compact(&json!({
        "schema": SCHEMA,
        "task": "fit",
        "params": params,
        "residual_norm": report.residual_norm,
        "iterations": report.iterations,
        "converged": report.converged,
    }))
}

pub fn calibrate_csv(rec: &CalibrationRecord<f64>) -> String {
    let mut out = String::from("g_sys,n_add,temperature_K,residual_norm\n");
    out.push_str(&format!(
        "{},{},{},{}\n",
        fmt(rec.g_sys),
        fmt(rec.n_add),
        fmt(rec.temperature),
        fmt(rec.residual_norm)
    ));
    out
}

pub fn calibrate_json(rec: &CalibrationRecord<f64>) -> String {
    json_compact(&json!({
        "schema": SCHEMA,
        "task": "calibrate",
        "f_hz": rec.omega / (2.0 * std::f64::consts::PI),
        "g_sys": rec.g_sys,
        "n_add": rec.n_add,
        "temperature_k": rec.temperature,
        "residual_norm": rec.residual_norm,
    }))
}

pub fn collisions_csv(collisions: &[Collision<f64>]) -> String {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut out = String::from("label_1,label_2,f1_Hz,f2_Hz,spacing_Hz\n");
    for c in collisions {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            c.label_1,
            c.label_2,
            fmt(c.freq_1 / two_pi),
            fmt(c.freq_2 / two_pi),
            fmt(c.spacing / two_pi)
        ));
    }
    out
}

pub fn collisions_json(collisions: &[Collision<f64>]) -> String {
    let two_pi = 2.0 * std::f64::consts::PI;
    let list: Vec<Value> = collisions
        .iter()
        .map(|c| {
            json!({
                "label_1": c.label_1,
                "label_2": c.label_2,
                "f1_hz": c.freq_1 / two_pi,
                "f2_hz": c.freq_2 / two_pi,
                "spacing_hz": c.spacing / two_pi,
            })
        })
        .collect();
    json_compact(&json!({
        "schema": SCHEMA,
        "task": "collision-check",
        "collisions": list,
    }))
}
