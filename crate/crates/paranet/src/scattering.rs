//! Multi-port scattering from the mode-coupling matrix, S = iHᵀM⁻¹H − 𝟙.
//!
//! `scattering_matrix` computes S over the full port set (external plus
//! internal-loss ports) so that downstream noise propagation conserves
//! commutators; reporting helpers sub-select the external ports. The
//! closed-form two- and three-mode solutions are provided as independent
//! oracles for the general path.

use ndarray::Array2;
use num_complex::Complex;

use crate::frame::{assign_frame_by_index, coupling_matrix, loop_phase, loop_phase_slope, FrameAssignment};
use crate::linalg::{cond_1, lu_factor};
use crate::network::ModeNetwork;
use crate::scalar::{hz_to_rad, i, lit, Scalar, C};

/// Condition-number cutoff defining "at a gain divergence".
pub const CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub enum ScatteringError {
    /// M is singular or beyond the condition cutoff: the operating point sits
    /// at a gain divergence / free-oscillation threshold.
    SingularMatrix { condition: f64 },
    UnknownMode(String),
    UnknownEdge(String, String),
    EdgeNotInLoop(String, String),
    InvalidSweep(String),
}

impl std::fmt::Display for ScatteringError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScatteringError::SingularMatrix { condition } => write!(
                f,
                "mode-coupling matrix is singular or ill-conditioned (cond ~ {condition:.3e})"
            ),
            ScatteringError::UnknownMode(id) => write!(f, "unknown mode id `{id}`"),
            ScatteringError::UnknownEdge(a, b) => write!(f, "no edge between `{a}` and `{b}`"),
            ScatteringError::EdgeNotInLoop(a, b) => {
                write!(f, "edge `{a}`-`{b}` is not part of any coupling loop")
            }
            ScatteringError::InvalidSweep(msg) => write!(f, "invalid sweep: {msg}"),
        }
    }
}

impl std::error::Error for ScatteringError {}

/// The n×m port matrix H with H_jk = √(η_j^k).
#[derive(Debug, Clone)]
pub struct PortMatrix<T: Scalar> {
    pub h: Array2<T>,
    pub port_labels: Vec<String>,
    pub mode_of_port: Vec<usize>,
}

/// Build H from the network's resolved ports. Each row's squared entries sum
/// to one, which is what keeps every noise input accounted for.
pub fn port_matrix<T: Scalar>(network: &ModeNetwork<T>) -> PortMatrix<T> {
    let n = network.n_modes();
    let m = network.n_ports();
    let mut h = Array2::zeros((n, m));
    let mut port_labels = Vec::with_capacity(m);
    let mut mode_of_port = Vec::with_capacity(m);
    for (k, p) in network.ports().iter().enumerate() {
        h[(p.mode, k)] = p.eta(network).sqrt();
        port_labels.push(p.label.clone());
        mode_of_port.push(p.mode);
    }
    PortMatrix {
        h,
        port_labels,
        mode_of_port,
    }
}

/// Scattering matrix over the full port set at one frame point.
#[derive(Debug, Clone)]
pub struct FullScattering<T: Scalar> {
    /// m×m scattering matrix, ports ordered as in the network.
    pub s: Array2<C<T>>,
    pub port_labels: Vec<String>,
    /// Conjugation flag per port (that of the mode it couples to).
    pub conjugated: Vec<bool>,
    /// Internal-loss port marker.
    pub internal: Vec<bool>,
    /// 1-norm condition estimate of M at this point.
    pub condition: T,
}

impl<T: Scalar> FullScattering<T> {
    /// Sub-matrix over external ports only, with matching labels and flags.
    pub fn external(&self) -> (Array2<C<T>>, Vec<String>, Vec<bool>) {
        let keep: Vec<usize> = (0..self.port_labels.len())
            .filter(|&k| !self.internal[k])
            .collect();
        let mut s = Array2::zeros((keep.len(), keep.len()));
        for (r, &kr) in keep.iter().enumerate() {
            for (c, &kc) in keep.iter().enumerate() {
                s[(r, c)] = self.s[(kr, kc)];
            }
        }
        let labels = keep.iter().map(|&k| self.port_labels[k].clone()).collect();
        let conj = keep.iter().map(|&k| self.conjugated[k]).collect();
        (s, labels, conj)
    }

    pub fn port_index(&self, label: &str) -> Option<usize> {
        self.port_labels.iter().position(|l| l == label)
    }
}

/// S = iHᵀM⁻¹H − 𝟙 over all ports of the network.
pub fn scattering_matrix<T: Scalar>(
    network: &ModeNetwork<T>,
    frame: &FrameAssignment<T>,
) -> Result<FullScattering<T>, ScatteringError> {
    let m_mat = coupling_matrix(network, frame);
    let lu = lu_factor(&m_mat);
    if lu.is_singular() {
        return Err(ScatteringError::SingularMatrix {
            condition: f64::INFINITY,
        });
    }
    let m_inv = lu.inverse();
    let condition = cond_1(&m_mat, &m_inv);
    if condition > lit::<T>(CONDITION_LIMIT) {
        return Err(ScatteringError::SingularMatrix {
            condition: condition.to_f64().unwrap_or(f64::INFINITY),
        });
    }

    let pm = port_matrix(network);
    let (n, m) = (network.n_modes(), network.n_ports());
    let mut hc: Array2<C<T>> = Array2::zeros((n, m));
    for r in 0..n {
        for c in 0..m {
            hc[(r, c)] = Complex::new(pm.h[(r, c)], T::zero());
        }
    }
    let x = m_inv.dot(&hc); // n×m
    let mut s: Array2<C<T>> = Array2::zeros((m, m));
    let iunit = i::<T>();
    for r in 0..m {
        for c in 0..m {
            let mut acc: C<T> = Complex::new(T::zero(), T::zero());
            for j in 0..n {
                acc = acc + hc[(j, r)] * x[(j, c)];
            }
            s[(r, c)] = iunit * acc;
        }
        s[(r, r)] = s[(r, r)] - Complex::new(T::one(), T::zero());
    }

    let conjugated = network
        .ports()
        .iter()
        .map(|p| frame.conjugated[p.mode])
        .collect();
    let internal = network.ports().iter().map(|p| p.internal).collect();
    Ok(FullScattering {
        s,
        port_labels: pm.port_labels,
        conjugated,
        internal,
        condition,
    })
}

fn check_denominator<T: Scalar>(den: C<T>) -> Result<(), ScatteringError> {
    if den.norm_sqr() == T::zero() || !den.re.is_finite() || !den.im.is_finite() {
        return Err(ScatteringError::SingularMatrix {
            condition: f64::INFINITY,
        });
    }
    Ok(())
}

/// Closed-form two-mode frequency-conversion scattering matrix.
pub fn closed_form_conversion<T: Scalar>(
    delta_a: C<T>,
    delta_b: C<T>,
    beta: C<T>,
    eta_a: T,
    eta_b: T,
) -> Result<Array2<C<T>>, ScatteringError> {
    let den = delta_a * delta_b - Complex::new(beta.norm_sqr(), T::zero());
    check_denominator(den)?;
    let iunit = i::<T>();
    let one = Complex::new(T::one(), T::zero());
    let root = Complex::new((eta_a * eta_b).sqrt(), T::zero());
    let s_aa = iunit * Complex::new(eta_a, T::zero()) * delta_b / den - one;
    let s_ab = -(iunit * root * beta) / den;
    let s_ba = -(iunit * root * beta.conj()) / den;
    let s_bb = iunit * Complex::new(eta_b, T::zero()) * delta_a / den - one;
    Ok(ndarray::arr2(&[[s_aa, s_ab], [s_ba, s_bb]]))
}

/// Closed-form two-mode parametric-amplifier scattering matrix
/// (basis (a, b*); diverges at |β| = 1/2 on resonance).
pub fn closed_form_amplifier<T: Scalar>(
    delta_a: C<T>,
    delta_b: C<T>,
    beta: C<T>,
    eta_a: T,
    eta_b: T,
) -> Result<Array2<C<T>>, ScatteringError> {
    let dbc = delta_b.conj();
    let den = delta_a * dbc - Complex::new(beta.norm_sqr(), T::zero());
    check_denominator(den)?;
    let iunit = i::<T>();
    let one = Complex::new(T::one(), T::zero());
    let root = Complex::new((eta_a * eta_b).sqrt(), T::zero());
    let s_aa = iunit * Complex::new(eta_a, T::zero()) * dbc / den - one;
    let s_ab = iunit * root * beta / den;
    let s_ba = -(iunit * root * beta.conj()) / den;
    let s_bb = -(iunit * Complex::new(eta_b, T::zero()) * delta_a) / den - one;
    Ok(ndarray::arr2(&[[s_aa, s_ab], [s_ba, s_bb]]))
}

/// Determinant of the three-mode conversion-loop coupling matrix,
/// |M| = ΔaΔbΔc − |β_bc|²Δa − |β_ac|²Δb − |β_ab|²Δc + 2|β_ab||β_bc||β_ac|cos φ_loop.
pub fn circulator_determinant<T: Scalar>(deltas: [C<T>; 3], betas: [C<T>; 3]) -> C<T> {
    let [da, db, dc] = deltas;
    let [b_ab, b_bc, b_ac] = betas;
    let sq = |z: C<T>| Complex::new(z.norm_sqr(), T::zero());
    da * db * dc - sq(b_bc) * da - sq(b_ac) * db - sq(b_ab) * dc
        + b_ab * b_bc * b_ac.conj()
        + b_ab.conj() * b_bc.conj() * b_ac
}

/// Closed-form three-mode circulator scattering matrix.
///
/// `betas` = (β_ab, β_bc, β_ac) with the conversion phase convention
/// β = |β|e^{iφ}; `etas` = (η_a, η_b, η_c).
pub fn closed_form_circulator<T: Scalar>(
    deltas: [C<T>; 3],
    betas: [C<T>; 3],
    etas: [T; 3],
) -> Result<Array2<C<T>>, ScatteringError> {
    let [da, db, dc] = deltas;
    let [b_ab, b_bc, b_ac] = betas;
    let [ea, eb, ec] = etas;
    let det = circulator_determinant(deltas, betas);
    check_denominator(det)?;
    let iunit = i::<T>();
    let one = Complex::new(T::one(), T::zero());
    let sq = |z: C<T>| Complex::new(z.norm_sqr(), T::zero());
    let e = |x: T, y: T| Complex::new((x * y).sqrt(), T::zero());

    let s00 = iunit * Complex::new(ea, T::zero()) * (db * dc - sq(b_bc)) / det - one;
    let s01 = iunit * e(ea, eb) * (b_ac * b_bc.conj() - b_ab * dc) / det;
    let s02 = iunit * e(ea, ec) * (b_ab * b_bc - b_ac * db) / det;
    let s10 = iunit * e(ea, eb) * (b_ac.conj() * b_bc - b_ab.conj() * dc) / det;
    let s11 = iunit * Complex::new(eb, T::zero()) * (da * dc - sq(b_ac)) / det - one;
    let s12 = iunit * e(eb, ec) * (b_ab.conj() * b_ac - b_bc * da) / det;
    let s20 = iunit * e(ea, ec) * (b_ab.conj() * b_bc.conj() - b_ac.conj() * db) / det;
    let s21 = iunit * e(eb, ec) * (b_ab * b_ac.conj() - b_bc.conj() * da) / det;
    let s22 = iunit * Complex::new(ec, T::zero()) * (da * db - sq(b_ab)) / det - one;
    Ok(ndarray::arr2(&[[s00, s01, s02], [s10, s11, s12], [s20, s21, s22]]))
}

/// Determinant of the directional-amplifier coupling matrix (basis (a, b*, c)),
/// |M| = −ΔaΔb*Δc + |β_bc|²Δa + |β_ac|²Δb* + |β_ab|²Δc + 2|β_ab||β_bc||β_ac|cos φ_loop.
pub fn directional_amplifier_determinant<T: Scalar>(deltas: [C<T>; 3], betas: [C<T>; 3]) -> C<T> {
    let [da, db, dc] = deltas;
    let dbc = db.conj();
    let [b_ab, b_bc, b_ac] = betas;
    let sq = |z: C<T>| Complex::new(z.norm_sqr(), T::zero());
    -(da * dbc * dc) + sq(b_bc) * da + sq(b_ac) * dbc + sq(b_ab) * dc
        + b_ab * b_bc * b_ac.conj()
        + b_ab.conj() * b_bc.conj() * b_ac
}

/// Closed-form directional phase-preserving amplifier scattering matrix.
///
/// `betas` = (β_ab, β_bc, β_ac): the a-b and b-c links are amplification
/// (β = |β|e^{−iφ}), the a-c link conversion (β = |β|e^{iφ}).
pub fn closed_form_directional_amplifier<T: Scalar>(
    deltas: [C<T>; 3],
    betas: [C<T>; 3],
    etas: [T; 3],
) -> Result<Array2<C<T>>, ScatteringError> {
    let [da, db, dc] = deltas;
    let dbc = db.conj();
    let [b_ab, b_bc, b_ac] = betas;
    let [ea, eb, ec] = etas;
    let det = directional_amplifier_determinant(deltas, betas);
    check_denominator(det)?;
    let iunit = i::<T>();
    let one = Complex::new(T::one(), T::zero());
    let sq = |z: C<T>| Complex::new(z.norm_sqr(), T::zero());
    let e = |x: T, y: T| Complex::new((x * y).sqrt(), T::zero());

    let s00 = iunit * Complex::new(ea, T::zero()) * (sq(b_bc) - dbc * dc) / det - one;
    let s01 = iunit * e(ea, eb) * (-(b_ab * dc) - b_ac * b_bc.conj()) / det;
    let s02 = iunit * e(ea, ec) * (b_ac * dbc + b_ab * b_bc) / det;
    let s10 = iunit * e(ea, eb) * (b_ab.conj() * dc + b_ac.conj() * b_bc) / det;
    let s11 = iunit * Complex::new(eb, T::zero()) * (da * dc - sq(b_ac)) / det - one;
    let s12 = iunit * e(eb, ec) * (-(b_bc * da) - b_ab.conj() * b_ac) / det;
    let s20 = iunit * e(ea, ec) * (b_ac.conj() * dbc + b_ab.conj() * b_bc.conj()) / det;
    let s21 = iunit * e(eb, ec) * (b_bc.conj() * da + b_ab * b_ac.conj()) / det;
    let s22 = iunit * Complex::new(ec, T::zero()) * (sq(b_ab) - da * dbc) / det - one;
    Ok(ndarray::arr2(&[[s00, s01, s02], [s10, s11, s12], [s20, s21, s22]]))
}

/// Sweep variable of a [`ScatteringResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Probe detuning in Hz.
    DetuningHz,
    /// Loop phase in radians.
    LoopPhaseRad,
}

/// Scattering matrices over a sweep, reported on the external ports.
#[derive(Debug, Clone)]
pub struct ScatteringResult<T: Scalar> {
    pub axis: SweepAxis,
    pub axis_values: Vec<T>,
    pub port_labels: Vec<String>,
    pub conjugated: Vec<bool>,
    /// One external-port S-matrix per axis point. At points flagged unstable
    /// the matrix is zero-filled.
    pub matrices: Vec<Array2<C<T>>>,
    pub stable: Vec<bool>,
}

impl<T: Scalar> ScatteringResult<T> {
    pub fn port_index(&self, label: &str) -> Option<usize> {
        self.port_labels.iter().position(|l| l == label)
    }

    /// |S[out,in]| over the sweep.
    pub fn magnitude_trace(&self, out_port: &str, in_port: &str) -> Option<Vec<T>> {
        let r = self.port_index(out_port)?;
        let c = self.port_index(in_port)?;
        Some(self.matrices.iter().map(|s| s[(r, c)].norm()).collect())
    }
}

fn linspace<T: Scalar>(lo: T, hi: T, n: usize) -> Vec<T> {
    if n == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / lit::<T>((n - 1) as f64);
    (0..n).map(|k| lo + step * lit::<T>(k as f64)).collect()
}

fn all_finite<T: Scalar>(s: &Array2<C<T>>) -> bool {
    s.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Sweep the probe detuning (Hz). Points where M is singular or beyond the
/// condition cutoff are flagged unstable rather than aborting the sweep.
pub fn sweep_detuning<T: Scalar>(
    network: &ModeNetwork<T>,
    probe: &str,
    f_min_hz: T,
    f_max_hz: T,
    n_points: usize,
) -> Result<ScatteringResult<T>, ScatteringError> {
    if n_points < 2 {
        return Err(ScatteringError::InvalidSweep(
            "detuning sweep needs at least 2 points".into(),
        ));
    }
    let probe_idx = network
        .mode_index(probe)
        .ok_or_else(|| ScatteringError::UnknownMode(probe.to_string()))?;
    let axis_values = linspace(f_min_hz, f_max_hz, n_points);

    let mut port_labels = Vec::new();
    let mut conjugated = Vec::new();
    let mut matrices = Vec::with_capacity(n_points);
    let mut stable = Vec::with_capacity(n_points);
    for &f in &axis_values {
        let frame = assign_frame_by_index(network, probe_idx, hz_to_rad(f));
        match scattering_matrix(network, &frame) {
            Ok(full) => {
                let (s, labels, conj) = full.external();
                if port_labels.is_empty() {
                    port_labels = labels;
                    conjugated = conj;
                }
                if all_finite(&s) {
                    matrices.push(s);
                    stable.push(true);
                } else {
                    matrices.push(Array2::zeros((port_labels.len(), port_labels.len())));
                    stable.push(false);
                }
            }
            Err(ScatteringError::SingularMatrix { .. }) => {
                if port_labels.is_empty() {
                    let ext = network.external_port_indices();
                    port_labels = ext
                        .iter()
                        .map(|&k| network.ports()[k].label.clone())
                        .collect();
                    conjugated = ext
                        .iter()
                        .map(|&k| frame.conjugated[network.ports()[k].mode])
                        .collect();
                }
                matrices.push(Array2::zeros((port_labels.len(), port_labels.len())));
                stable.push(false);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(ScatteringResult {
        axis: SweepAxis::DetuningHz,
        axis_values,
        port_labels,
        conjugated,
        matrices,
        stable,
    })
}

/// Sweep the loop phase by retuning one edge's pump phase so the loop phase
/// of the cycle containing that edge covers [φ_min, φ_max] (radians). The
/// scattering matrix is evaluated on resonance (δ = 0) at each point.
pub fn sweep_loop_phase<T: Scalar>(
    network: &ModeNetwork<T>,
    probe: &str,
    edge: (&str, &str),
    phi_min: T,
    phi_max: T,
    n_points: usize,
) -> Result<ScatteringResult<T>, ScatteringError> {
    if n_points < 2 {
        return Err(ScatteringError::InvalidSweep(
            "loop-phase sweep needs at least 2 points".into(),
        ));
    }
    let probe_idx = network
        .mode_index(probe)
        .ok_or_else(|| ScatteringError::UnknownMode(probe.to_string()))?;
    let edge_idx = network
        .edge_index(edge.0, edge.1)
        .ok_or_else(|| ScatteringError::UnknownEdge(edge.0.to_string(), edge.1.to_string()))?;
    let cycle = network
        .cycles()
        .iter()
        .find(|c| loop_phase_slope(network, c, edge_idx).is_some())
        .cloned()
        .ok_or_else(|| ScatteringError::EdgeNotInLoop(edge.0.to_string(), edge.1.to_string()))?;
    let slope = loop_phase_slope(network, &cycle, edge_idx).unwrap();
    let phi0 = loop_phase(network, &cycle);
    let base_phase = network.edges()[edge_idx].phase;

    let axis_values = linspace(phi_min, phi_max, n_points);
    let mut port_labels = Vec::new();
    let mut conjugated = Vec::new();
    let mut matrices = Vec::with_capacity(n_points);
    let mut stable = Vec::with_capacity(n_points);
    for &target in &axis_values {
        let phase = base_phase + (target - phi0) / slope;
        let tuned = network
            .with_edge_phase(edge_idx, phase)
            .map_err(|e| ScatteringError::InvalidSweep(e.to_string()))?;
        let frame = assign_frame_by_index(&tuned, probe_idx, T::zero());
        match scattering_matrix(&tuned, &frame) {
            Ok(full) => {
                let (s, labels, conj) = full.external();
                if port_labels.is_empty() {
                    port_labels = labels;
                    conjugated = conj;
                }
                if all_finite(&s) {
                    matrices.push(s);
                    stable.push(true);
                } else {
                    matrices.push(Array2::zeros((port_labels.len(), port_labels.len())));
                    stable.push(false);
                }
            }
            Err(ScatteringError::SingularMatrix { .. }) => {
                let ext = tuned.external_port_indices();
                if port_labels.is_empty() {
                    port_labels = ext
                        .iter()
                        .map(|&k| tuned.ports()[k].label.clone())
                        .collect();
                    conjugated = ext
                        .iter()
                        .map(|&k| frame.conjugated[tuned.ports()[k].mode])
                        .collect();
                }
                matrices.push(Array2::zeros((port_labels.len(), port_labels.len())));
                stable.push(false);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(ScatteringResult {
        axis: SweepAxis::LoopPhaseRad,
        axis_values,
        port_labels,
        conjugated,
        matrices,
        stable,
    })
}
