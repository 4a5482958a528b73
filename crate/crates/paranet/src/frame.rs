//! Rotating-frame assignment and the mode-coupling matrix M.
//!
//! For a chosen probe mode and detuning, signal frequencies are propagated
//! breadth-first along the coupling edges: conversion shifts by the pump
//! frequency, amplification mirrors through the pump and flips the mode into
//! the conjugated sector. The matrix M collects the normalized complex
//! detunings on the diagonal and the normalized couplings off it.

use ndarray::Array2;
use num_complex::Complex;

use crate::network::{CouplingKind, ModeNetwork, NetworkError};
use crate::scalar::{clit, Scalar, C};

/// Per-mode frame data for a given probe detuning.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameAssignment<T: Scalar> {
    pub probe: usize,
    /// Probe detuning in rad/s.
    pub delta: T,
    /// Signal frequency ω_j^s per mode (rad/s).
    pub signal_freq: Vec<T>,
    /// Normalized complex detuning Δ_j = (ω_j^s − ω_j)/κ_j + i/2.
    pub detuning: Vec<C<T>>,
    /// Conjugation flag per mode (true: the mode enters M through −Δ*).
    pub conjugated: Vec<bool>,
}

impl<T: Scalar> FrameAssignment<T> {
    /// Diagonal entry of M for mode `j`: Δ_j, or −Δ_j* when conjugated.
    pub fn diagonal(&self, j: usize) -> C<T> {
        if self.conjugated[j] {
            -self.detuning[j].conj()
        } else {
            self.detuning[j]
        }
    }

    /// Conjugation sign s_j ∈ {+1, −1} as a scalar.
    pub fn sign(&self, j: usize) -> T {
        if self.conjugated[j] {
            -T::one()
        } else {
            T::one()
        }
    }
}

/// Propagate signal frequencies from `probe` at detuning `delta` (rad/s).
///
/// Consistency around cycles is guaranteed by the loop-closure validation
/// performed at build time, so this cannot fail for a valid network.
pub fn assign_frame<T: Scalar>(
    network: &ModeNetwork<T>,
    probe: &str,
    delta: T,
) -> Result<FrameAssignment<T>, NetworkError> {
    let probe_idx = network
        .mode_index(probe)
        .ok_or_else(|| NetworkError::UnknownMode(probe.to_string()))?;
    Ok(assign_frame_by_index(network, probe_idx, delta))
}

pub(crate) fn assign_frame_by_index<T: Scalar>(
    network: &ModeNetwork<T>,
    probe: usize,
    delta: T,
) -> FrameAssignment<T> {
    let n = network.n_modes();
    let modes = network.modes();
    let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (k, &(a, b)) in network.edge_endpoints().iter().enumerate() {
        adjacency[a].push((k, b));
        adjacency[b].push((k, a));
    }

    let mut visited = vec![false; n];
    let mut signal_freq = vec![T::zero(); n];
    let mut conjugated = vec![false; n];

    // main component from the probe, then any disconnected remainder rooted
    // on-resonance at its own modes
    let mut roots = vec![(probe, modes[probe].omega + delta)];
    for j in 0..n {
        roots.push((j, modes[j].omega + delta));
    }
    for (root, omega_root) in roots {
        if visited[root] {
            continue;
        }
        visited[root] = true;
        signal_freq[root] = omega_root;
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            for &(eidx, v) in &adjacency[u] {
                if visited[v] {
                    continue;
                }
                let (w, s) = crate::network::propagate_edge(
                    &network.edges()[eidx],
                    signal_freq[u],
                    !conjugated[u],
                    modes[v].omega,
                );
                visited[v] = true;
                signal_freq[v] = w;
                conjugated[v] = !s;
                queue.push_back(v);
            }
        }
    }

    let half = clit::<T>(0.0, 0.5);
    let detuning = (0..n)
        .map(|j| {
            Complex::new((signal_freq[j] - modes[j].omega) / modes[j].kappa(), T::zero()) + half
        })
        .collect();

    FrameAssignment {
        probe,
        delta,
        signal_freq,
        detuning,
        conjugated,
    }
}

/// Build the n×n mode-coupling matrix M for a frame.
///
/// Diagonal: Δ_j (or −Δ_j* for conjugated modes). Off-diagonal, with
/// β = |g|/(2√(κ_j κ_k)) and the edge's stored from→to orientation:
/// conversion carries M[from,to] = βe^{iφ}, M[to,from] = βe^{−iφ};
/// amplification carries M[from,to] = βe^{−iφ}, M[to,from] = −βe^{iφ}.
pub fn coupling_matrix<T: Scalar>(
    network: &ModeNetwork<T>,
    frame: &FrameAssignment<T>,
) -> Array2<C<T>> {
    let n = network.n_modes();
    let modes = network.modes();
    let mut m: Array2<C<T>> = Array2::zeros((n, n));
    for j in 0..n {
        m[(j, j)] = frame.diagonal(j);
    }
    let two = T::one() + T::one();
    for (k, e) in network.edges().iter().enumerate() {
        let (a, b) = network.edge_endpoints()[k];
        let beta = e.magnitude / (two * (modes[a].kappa() * modes[b].kappa()).sqrt());
        let (cos_p, sin_p) = (e.phase.cos(), e.phase.sin());
        match e.kind {
            CouplingKind::Conversion => {
                let fwd = Complex::new(beta * cos_p, beta * sin_p);
                m[(a, b)] = fwd;
                m[(b, a)] = fwd.conj();
            }
            CouplingKind::Amplification => {
                let fwd = Complex::new(beta * cos_p, -(beta * sin_p));
                m[(a, b)] = fwd;
                m[(b, a)] = -fwd.conj();
            }
        }
    }
    m
}

/// Gauge-invariant interference phase of a stored cycle: the argument of the
/// product of M entries traversed around the canonical mode sequence. For a
/// conversion-only loop this is φ_ab + φ_bc − φ_ac, the quantity controlling
/// the circulation direction.
pub fn loop_phase<T: Scalar>(network: &ModeNetwork<T>, cycle: &crate::network::Cycle) -> T {
    let k = cycle.modes.len();
    let mut total = T::zero();
    for step in 0..k {
        let u = cycle.modes[step];
        let v = cycle.modes[(step + 1) % k];
        let eidx = network
            .edge_endpoints()
            .iter()
            .position(|&(a, b)| (a, b) == (u, v) || (a, b) == (v, u))
            .expect("cycle edge missing from network");
        let e = &network.edges()[eidx];
        let forward = network.edge_endpoints()[eidx] == (u, v);
        let contrib = match (e.kind, forward) {
            (CouplingKind::Conversion, true) => e.phase,
            (CouplingKind::Conversion, false) => -e.phase,
            (CouplingKind::Amplification, true) => -e.phase,
            (CouplingKind::Amplification, false) => e.phase + T::PI(),
        };
        total = total + contrib;
    }
    wrap_angle(total)
}

/// Sensitivity dφ_loop/dφ_edge for an edge inside a cycle (±1).
pub(crate) fn loop_phase_slope<T: Scalar>(
    network: &ModeNetwork<T>,
    cycle: &crate::network::Cycle,
    edge: usize,
) -> Option<T> {
    let k = cycle.modes.len();
    for step in 0..k {
        let u = cycle.modes[step];
        let v = cycle.modes[(step + 1) % k];
        let (a, b) = network.edge_endpoints()[edge];
        if (a, b) == (u, v) || (a, b) == (v, u) {
            let forward = (a, b) == (u, v);
            let e = &network.edges()[edge];
            let slope = match (e.kind, forward) {
                (CouplingKind::Conversion, true) => T::one(),
                (CouplingKind::Conversion, false) => -T::one(),
                (CouplingKind::Amplification, true) => -T::one(),
                (CouplingKind::Amplification, false) => T::one(),
            };
            return Some(slope);
        }
    }
    None
}

/// Wrap an angle into (−π, π].
pub fn wrap_angle<T: Scalar>(mut phi: T) -> T {
    let two_pi = crate::scalar::two_pi::<T>();
    while phi > T::PI() {
        phi = phi - two_pi;
    }
    while phi <= -T::PI() {
        phi = phi + two_pi;
    }
    phi
}
