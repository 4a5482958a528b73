//! Run configuration: TOML with `[network]`, `[task]`, and `[output]`
//! sections. Frequencies are Hz, phases degrees; conversion to angular
//! units happens here.

use serde::Deserialize;

use paranet::network::{build_network, Bath, CouplingEdge, CouplingKind, Mode, Port};
use paranet::Network64;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub network: NetworkSection,
    pub task: TaskSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub modes: Vec<ModeSpec>,
    #[serde(default)]
    pub edges: Vec<EdgeSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub id: String,
    pub f_hz: f64,
    pub kappa_ext_hz: f64,
    #[serde(default)]
    pub kappa_int_hz: f64,
    /// Thermal occupancy of the bath feeding this mode's external port.
    #[serde(default)]
    pub bath_n_th: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub from: String,
    pub to: String,
    /// "conversion" or "amplification".
    pub kind: String,
    /// Normalized coupling, exclusive with `g_hz`.
    pub beta: Option<f64>,
    /// Bare coupling |g|/2π in Hz, exclusive with `beta`.
    pub g_hz: Option<f64>,
    #[serde(default)]
    pub phase_deg: f64,
    /// Pump frequency in Hz; defaults to the resonant process frequency.
    pub pump_f_hz: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSection {
    /// sweep | phase-sweep | noise | stability | tune | fit | calibrate | collision-check
    pub kind: String,

    // sweep / phase-sweep / noise / stability / fit
    pub probe: Option<String>,
    /// Symmetric detuning span (sweep runs ±span/2), Hz.
    pub span_hz: Option<f64>,
    pub f_min_hz: Option<f64>,
    pub f_max_hz: Option<f64>,
    pub points: Option<usize>,

    // phase-sweep
    pub edge: Option<Vec<String>>,
    pub phi_min_deg: Option<f64>,
    pub phi_max_deg: Option<f64>,

    // tune
    /// converter | circulator | directional-amplifier
    pub target: Option<String>,
    /// forward | reverse
    pub direction: Option<String>,
    pub gain_db: Option<f64>,
    /// Mode assignment for the target; defaults to all modes in order.
    pub modes: Option<Vec<String>>,

    // fit / calibrate
    pub data: Option<String>,
    /// Free parameters: "omega:a", "kappa:a", "eta:a", "beta:a:b", "phase:a:b".
    pub free: Option<Vec<String>>,
    /// One [lo, hi] pair per free parameter, in the parameter's interface
    /// unit (Hz for omega/kappa, degrees for phase).
    pub bounds: Option<Vec<[f64; 2]>>,

    // calibrate
    pub f_hz: Option<f64>,
    pub guess_g_sys: Option<f64>,
    pub guess_n_add: Option<f64>,
    pub guess_t_k: Option<f64>,

    // collision-check
    pub guard_factor: Option<f64>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<String>,
    /// "csv" or "json" (the tune task always writes a TOML edges block).
    pub format: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown output format `{other}` (expected csv or json)")),
        }
    }
}

/// Parse config text, after applying `--override key=value` entries to the
/// raw TOML tree (dotted paths, e.g. `task.points=801`).
pub fn parse_config(text: &str, overrides: &[(String, String)]) -> Result<Config, String> {
    let mut value: toml::Value = text
        .parse()
        .map_err(|e| format!("config parse error: {e}"))?;
    for (key, raw) in overrides {
        apply_override(&mut value, key, raw)?;
    }
    Config::deserialize(value).map_err(|e| format!("config error: {e}"))
}

fn apply_override(root: &mut toml::Value, key: &str, raw: &str) -> Result<(), String> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.is_empty() {
        return Err("empty override key".into());
    }
    let mut node = root;
    for part in &parts[..parts.len() - 1] {
        node = node
            .as_table_mut()
            .ok_or_else(|| format!("override `{key}`: `{part}` is not a table"))?
            .entry(part.to_string())
            .or_insert(toml::Value::Table(Default::default()));
    }
    let leaf: toml::Value = raw
        .parse()
        .unwrap_or_else(|_| toml::Value::String(raw.to_string()));
    node.as_table_mut()
        .ok_or_else(|| format!("override `{key}` does not address a table entry"))?
        .insert(parts[parts.len() - 1].to_string(), leaf);
    Ok(())
}

/// Build the validated mode network from the `[network]` section.
pub fn build_from_config(section: &NetworkSection) -> Result<Network64, String> {
    let mut modes = Vec::new();
    for spec in &section.modes {
        modes.push(Mode::from_hz(
            spec.id.clone(),
            spec.f_hz,
            spec.kappa_ext_hz,
            spec.kappa_int_hz,
        ));
    }
    let mut ports = Vec::new();
    for spec in &section.modes {
        if spec.bath_n_th > 0.0 {
            let m = modes.iter().find(|m| m.id == spec.id).unwrap();
            ports.push(Port::new(
                spec.id.clone(),
                spec.id.clone(),
                m.kappa_ext,
                Bath::Thermal(spec.bath_n_th),
            ));
        }
    }
    // if any port was declared explicitly, declare them all
    if !ports.is_empty() {
        for spec in &section.modes {
            if spec.bath_n_th <= 0.0 {
                let m = modes.iter().find(|m| m.id == spec.id).unwrap();
                if m.kappa_ext > 0.0 {
                    ports.push(Port::new(spec.id.clone(), spec.id.clone(), m.kappa_ext, Bath::Vacuum));
                }
            }
        }
    }

    let mut edges = Vec::new();
    for spec in &section.edges {
        let kind = match spec.kind.as_str() {
            "conversion" => CouplingKind::Conversion,
            "amplification" => CouplingKind::Amplification,
            other => {
                return Err(format!(
                    "edge {}-{}: unknown kind `{other}` (expected conversion or amplification)",
                    spec.from, spec.to
                ))
            }
        };
        let from = modes
            .iter()
            .find(|m| m.id == spec.from)
            .ok_or_else(|| format!("edge references unknown mode `{}`", spec.from))?;
        let to = modes
            .iter()
            .find(|m| m.id == spec.to)
            .ok_or_else(|| format!("edge references unknown mode `{}`", spec.to))?;
        let pump = match spec.pump_f_hz {
            Some(f) => 2.0 * std::f64::consts::PI * f,
            None => CouplingEdge::resonant_pump(from, to, kind),
        };
        let phase = spec.phase_deg.to_radians();
        let edge = match (spec.beta, spec.g_hz) {
            (Some(beta), None) => CouplingEdge::from_beta(from, to, kind, beta, phase, pump),
            (None, Some(g_hz)) => CouplingEdge::new(
                spec.from.clone(),
                spec.to.clone(),
                kind,
                2.0 * std::f64::consts::PI * g_hz,
                phase,
                pump,
            ),
            _ => {
                return Err(format!(
                    "edge {}-{}: specify exactly one of `beta` or `g_hz`",
                    spec.from, spec.to
                ))
            }
        };
        edges.push(edge);
    }

    build_network(modes, edges, ports).map_err(|e| format!("network: {e}"))
}
