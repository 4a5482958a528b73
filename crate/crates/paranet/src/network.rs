//! Domain types for networks of parametrically coupled modes, plus build-time
//! validation: pump loop closure, conjugation-parity consistency, and port
//! bookkeeping (the internal-loss port of each mode is auto-generated so all
//! noise inputs are accounted for).

use std::fmt;

use crate::scalar::{hz_to_rad, lit, Scalar};

/// A resonant mode: frequency and loss rates, all in rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct Mode<T: Scalar> {
    pub id: String,
    pub omega: T,
    pub kappa_ext: T,
    pub kappa_int: T,
}

impl<T: Scalar> Mode<T> {
    pub fn new(id: impl Into<String>, omega: T, kappa_ext: T, kappa_int: T) -> Self {
        Self {
            id: id.into(),
            omega,
            kappa_ext,
            kappa_int,
        }
    }

    /// Build from Hz quantities (resonance frequency and κ/2π linewidths).
    pub fn from_hz(id: impl Into<String>, f: T, kappa_ext: T, kappa_int: T) -> Self {
        Self::new(id, hz_to_rad(f), hz_to_rad(kappa_ext), hz_to_rad(kappa_int))
    }

    /// Total linewidth κ = κ_ext + κ_int.
    pub fn kappa(&self) -> T {
        self.kappa_ext + self.kappa_int
    }

    /// External coupling efficiency η = κ_ext/κ.
    pub fn eta_ext(&self) -> T {
        self.kappa_ext / self.kappa()
    }

    pub fn eta_int(&self) -> T {
        self.kappa_int / self.kappa()
    }
}

/// Kind of pump-mediated process on an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingKind {
    /// Pump near the mode-frequency difference: coherent photon exchange.
    Conversion,
    /// Pump near the mode-frequency sum: correlated pair creation, coupling
    /// one mode to the other's conjugate.
    Amplification,
}

/// A pump-mediated link between two modes.
///
/// `magnitude` is the bare coupling |g| in rad/s; the normalized coupling is
/// β = |g| / (2√(κ_from κ_to)). The pump phase enters the coupling matrix as
/// e^{+iφ} for conversion and e^{−iφ} for amplification, tied to the stored
/// from → to orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingEdge<T: Scalar> {
    pub from: String,
    pub to: String,
    pub kind: CouplingKind,
    pub magnitude: T,
    pub phase: T,
    pub pump_freq: T,
}

impl<T: Scalar> CouplingEdge<T> {
    pub fn new(
        from: impl Into<String>,
        to: impl Into<String>,
        kind: CouplingKind,
        magnitude: T,
        phase: T,
        pump_freq: T,
    ) -> Self {
        Self {
            from: from.into(),
            to: to.into(),
            kind,
            magnitude,
            phase,
            pump_freq,
        }
    }

    /// Edge with magnitude specified through the normalized coupling β,
    /// un-normalized via |g| = 2β√(κ_from κ_to).
    pub fn from_beta(
        from: &Mode<T>,
        to: &Mode<T>,
        kind: CouplingKind,
        beta: T,
        phase: T,
        pump_freq: T,
    ) -> Self {
        let g = (T::one() + T::one()) * beta * (from.kappa() * to.kappa()).sqrt();
        Self::new(from.id.clone(), to.id.clone(), kind, g, phase, pump_freq)
    }

    /// Pump frequency exactly on process resonance for the given modes:
    /// |ω_to − ω_from| for conversion, ω_to + ω_from for amplification.
    pub fn resonant_pump(from: &Mode<T>, to: &Mode<T>, kind: CouplingKind) -> T {
        match kind {
            CouplingKind::Conversion => (to.omega - from.omega).abs(),
            CouplingKind::Amplification => to.omega + from.omega,
        }
    }
}

/// Input bath attached to a port.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bath<T: Scalar> {
    Vacuum,
    /// Thermal state with mean occupation n_th.
    Thermal(T),
}

impl<T: Scalar> Bath<T> {
    /// Mean occupation of the bath.
    pub fn occupation(&self) -> T {
        match self {
            Bath::Vacuum => T::zero(),
            Bath::Thermal(n) => *n,
        }
    }
}

/// An external coupling port declared on a mode. Per mode, the declared port
/// rates must sum to κ_ext; the κ_int loss port is generated automatically.
#[derive(Debug, Clone, PartialEq)]
pub struct Port<T: Scalar> {
    pub id: String,
    pub mode: String,
    pub rate: T,
    pub bath: Bath<T>,
}

impl<T: Scalar> Port<T> {
    pub fn new(id: impl Into<String>, mode: impl Into<String>, rate: T, bath: Bath<T>) -> Self {
        Self {
            id: id.into(),
            mode: mode.into(),
            rate,
            bath,
        }
    }
}

/// A port after resolution against the mode table.
#[derive(Debug, Clone)]
pub struct ResolvedPort<T: Scalar> {
    pub label: String,
    pub mode: usize,
    pub rate: T,
    pub bath: Bath<T>,
    pub internal: bool,
}

impl<T: Scalar> ResolvedPort<T> {
    /// Fraction of the mode linewidth carried by this port, η_j^k = κ_j^k/κ_j.
    pub fn eta(&self, network: &ModeNetwork<T>) -> T {
        self.rate / network.modes[self.mode].kappa()
    }
}

/// A closed loop of coupling edges, stored as the canonical mode sequence
/// (lowest mode index first, oriented toward its lower-indexed neighbor).
#[derive(Debug, Clone)]
pub struct Cycle {
    pub modes: Vec<usize>,
}

/// Validated, immutable network of modes, coupling edges and ports.
#[derive(Debug, Clone)]
pub struct ModeNetwork<T: Scalar> {
    modes: Vec<Mode<T>>,
    edges: Vec<CouplingEdge<T>>,
    edge_endpoints: Vec<(usize, usize)>,
    ports: Vec<ResolvedPort<T>>,
    cycles: Vec<Cycle>,
}

/// Validation failures raised by [`build_network`].
#[derive(Debug, Clone, PartialEq)]
pub enum NetworkError {
    EmptyNetwork,
    DuplicateMode(String),
    UnknownMode(String),
    InvalidMode { id: String, reason: String },
    InvalidEdge { from: String, to: String, reason: String },
    DuplicateEdge(String, String),
    PortRateMismatch { mode: String, expected: f64, got: f64 },
    InvalidPort { id: String, reason: String },
    LoopClosureViolation { cycle: Vec<String>, residual_over_kappa: f64 },
    OddAmplificationCycle(Vec<String>),
}

impl fmt::Display for NetworkError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetworkError::EmptyNetwork => write!(f, "network has no modes"),
            NetworkError::DuplicateMode(id) => write!(f, "duplicate mode id `{id}`"),
            NetworkError::UnknownMode(id) => write!(f, "unknown mode id `{id}`"),
            NetworkError::InvalidMode { id, reason } => {
                write!(f, "invalid mode `{id}`: {reason}")
            }
            NetworkError::InvalidEdge { from, to, reason } => {
                write!(f, "invalid edge `{from}`-`{to}`: {reason}")
            }
            NetworkError::DuplicateEdge(a, b) => {
                write!(f, "more than one edge between modes `{a}` and `{b}`")
            }
            NetworkError::PortRateMismatch {
                mode,
                expected,
                got,
            } => write!(
                f,
                "ports of mode `{mode}` sum to {got:.6e} rad/s, expected kappa_ext = {expected:.6e}"
            ),
            NetworkError::InvalidPort { id, reason } => write!(f, "invalid port `{id}`: {reason}"),
            NetworkError::LoopClosureViolation {
                cycle,
                residual_over_kappa,
            } => write!(
                f,
                "pump frequencies do not close around cycle {} (residual {:.3e} x max kappa)",
                cycle.join("-"),
                residual_over_kappa
            ),
            NetworkError::OddAmplificationCycle(cycle) => write!(
                f,
                "cycle {} contains an odd number of amplification edges; no consistent rotating frame exists",
                cycle.join("-")
            ),
        }
    }
}

impl std::error::Error for NetworkError {}

/// Signal-frequency and conjugation propagation across one edge.
///
/// Conversion keeps the conjugation sign and shifts the signal frequency by
/// ±pump (branch chosen nearest the destination mode); amplification flips
/// the sign and mirrors the signal frequency through the pump.
pub(crate) fn propagate_edge<T: Scalar>(
    edge: &CouplingEdge<T>,
    omega_s_from: T,
    sign_from: bool,
    omega_to: T,
) -> (T, bool) {
    match edge.kind {
        CouplingKind::Conversion => {
            let up = omega_s_from + edge.pump_freq;
            let down = omega_s_from - edge.pump_freq;
            let pick = if (up - omega_to).abs() <= (down - omega_to).abs() {
                up
            } else {
                down
            };
            (pick, sign_from)
        }
        CouplingKind::Amplification => (edge.pump_freq - omega_s_from, !sign_from),
    }
}

impl<T: Scalar> ModeNetwork<T> {
    pub fn modes(&self) -> &[Mode<T>] {
        &self.modes
    }

    pub fn edges(&self) -> &[CouplingEdge<T>] {
        &self.edges
    }

    pub fn edge_endpoints(&self) -> &[(usize, usize)] {
        &self.edge_endpoints
    }

    pub fn ports(&self) -> &[ResolvedPort<T>] {
        &self.ports
    }

    pub fn cycles(&self) -> &[Cycle] {
        &self.cycles
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn n_ports(&self) -> usize {
        self.ports.len()
    }

    pub fn mode_index(&self, id: &str) -> Option<usize> {
        self.modes.iter().position(|m| m.id == id)
    }

    pub fn edge_index(&self, a: &str, b: &str) -> Option<usize> {
        self.edges
            .iter()
            .position(|e| (e.from == a && e.to == b) || (e.from == b && e.to == a))
    }

    /// Indices of the externally measurable ports (internal-loss ports excluded).
    pub fn external_port_indices(&self) -> Vec<usize> {
        self.ports
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.internal)
            .map(|(k, _)| k)
            .collect()
    }

    pub fn port_index(&self, label: &str) -> Option<usize> {
        self.ports.iter().position(|p| p.label == label)
    }

    pub fn max_kappa(&self) -> T {
        self.modes
            .iter()
            .fold(T::zero(), |acc, m| acc.max(m.kappa()))
    }

    /// Copy of this network with one edge's pump phase replaced. Revalidates.
    pub fn with_edge_phase(&self, edge: usize, phase: T) -> Result<Self, NetworkError> {
        let mut edges = self.edges.clone();
        edges[edge].phase = phase;
        let user_ports: Vec<Port<T>> = self
            .ports
            .iter()
            .filter(|p| !p.internal)
            .map(|p| Port::new(p.label.clone(), self.modes[p.mode].id.clone(), p.rate, p.bath))
            .collect();
        build_network(self.modes.clone(), edges, user_ports)
    }

    /// Copy with the magnitudes of the selected edges multiplied by `scale`.
    pub fn with_scaled_magnitudes(
        &self,
        selection: impl Fn(usize, &CouplingEdge<T>) -> bool,
        scale: T,
    ) -> Result<Self, NetworkError> {
        let mut edges = self.edges.clone();
        for (k, e) in edges.iter_mut().enumerate() {
            if selection(k, e) {
                e.magnitude = e.magnitude * scale;
            }
        }
        let user_ports: Vec<Port<T>> = self
            .ports
            .iter()
            .filter(|p| !p.internal)
            .map(|p| Port::new(p.label.clone(), self.modes[p.mode].id.clone(), p.rate, p.bath))
            .collect();
        build_network(self.modes.clone(), edges, user_ports)
    }
}

/// Validate and freeze a network.
///
/// If `ports` is empty, one external port per mode (labelled by the mode id,
/// vacuum bath, rate κ_ext) is generated. The internal-loss port of each mode
/// with κ_int > 0 is always appended, labelled `<mode>.int`.
pub fn build_network<T: Scalar>(
    modes: Vec<Mode<T>>,
    edges: Vec<CouplingEdge<T>>,
    ports: Vec<Port<T>>,
) -> Result<ModeNetwork<T>, NetworkError> {
    if modes.is_empty() {
        return Err(NetworkError::EmptyNetwork);
    }
    for (k, m) in modes.iter().enumerate() {
        if modes[..k].iter().any(|o| o.id == m.id) {
            return Err(NetworkError::DuplicateMode(m.id.clone()));
        }
        if !(m.omega > T::zero()) {
            return Err(NetworkError::InvalidMode {
                id: m.id.clone(),
                reason: "omega must be > 0".into(),
            });
        }
        if m.kappa_ext < T::zero() || m.kappa_int < T::zero() {
            return Err(NetworkError::InvalidMode {
                id: m.id.clone(),
                reason: "loss rates must be >= 0".into(),
            });
        }
        if !(m.kappa() > T::zero()) {
            return Err(NetworkError::InvalidMode {
                id: m.id.clone(),
                reason: "total kappa must be > 0".into(),
            });
        }
    }

    let idx_of = |id: &str| modes.iter().position(|m| m.id == id);

    let mut edge_endpoints = Vec::with_capacity(edges.len());
    for (k, e) in edges.iter().enumerate() {
        let a = idx_of(&e.from).ok_or_else(|| NetworkError::UnknownMode(e.from.clone()))?;
        let b = idx_of(&e.to).ok_or_else(|| NetworkError::UnknownMode(e.to.clone()))?;
        if a == b {
            return Err(NetworkError::InvalidEdge {
                from: e.from.clone(),
                to: e.to.clone(),
                reason: "edge endpoints must differ".into(),
            });
        }
        if e.magnitude < T::zero() {
            return Err(NetworkError::InvalidEdge {
                from: e.from.clone(),
                to: e.to.clone(),
                reason: "magnitude must be >= 0".into(),
            });
        }
        if !(e.pump_freq > T::zero()) {
            return Err(NetworkError::InvalidEdge {
                from: e.from.clone(),
                to: e.to.clone(),
                reason: "pump frequency must be > 0".into(),
            });
        }
        for (j, _) in edges[..k].iter().enumerate() {
            let (pa, pb) = edge_endpoints[j];
            if (pa, pb) == (a, b) || (pa, pb) == (b, a) {
                return Err(NetworkError::DuplicateEdge(e.from.clone(), e.to.clone()));
            }
        }
        edge_endpoints.push((a, b));
    }

    // ports: user-declared external ports, then auto-generated ones
    let mut resolved: Vec<ResolvedPort<T>> = Vec::new();
    for p in &ports {
        let m = idx_of(&p.mode).ok_or_else(|| NetworkError::UnknownMode(p.mode.clone()))?;
        if !(p.rate > T::zero()) {
            return Err(NetworkError::InvalidPort {
                id: p.id.clone(),
                reason: "rate must be > 0".into(),
            });
        }
        if resolved.iter().any(|r| r.label == p.id) {
            return Err(NetworkError::InvalidPort {
                id: p.id.clone(),
                reason: "duplicate port id".into(),
            });
        }
        resolved.push(ResolvedPort {
            label: p.id.clone(),
            mode: m,
            rate: p.rate,
            bath: p.bath,
            internal: false,
        });
    }
    let mut all_ports: Vec<ResolvedPort<T>> = Vec::new();
    for (j, m) in modes.iter().enumerate() {
        let declared: Vec<&ResolvedPort<T>> = resolved.iter().filter(|p| p.mode == j).collect();
        if declared.is_empty() {
            if m.kappa_ext > T::zero() {
                all_ports.push(ResolvedPort {
                    label: m.id.clone(),
                    mode: j,
                    rate: m.kappa_ext,
                    bath: Bath::Vacuum,
                    internal: false,
                });
            }
        } else {
            let sum = declared
                .iter()
                .fold(T::zero(), |acc, p| acc + p.rate);
            let tol = m.kappa() * lit::<T>(1e-9);
            if (sum - m.kappa_ext).abs() > tol {
                return Err(NetworkError::PortRateMismatch {
                    mode: m.id.clone(),
                    expected: m.kappa_ext.to_f64().unwrap_or(f64::NAN),
                    got: sum.to_f64().unwrap_or(f64::NAN),
                });
            }
            for p in declared {
                all_ports.push(p.clone());
            }
        }
        if m.kappa_int > T::zero() {
            all_ports.push(ResolvedPort {
                label: format!("{}.int", m.id),
                mode: j,
                rate: m.kappa_int,
                bath: Bath::Vacuum,
                internal: true,
            });
        }
    }

    // frame propagation at zero detuning: parity + pump loop closure, cycle list
    let n = modes.len();
    let max_kappa = modes
        .iter()
        .fold(T::zero(), |acc, m| acc.max(m.kappa()));
    let closure_tol = lit::<T>(1e-6) * max_kappa;

    let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n]; // (edge, other mode)
    for (k, &(a, b)) in edge_endpoints.iter().enumerate() {
        adjacency[a].push((k, b));
        adjacency[b].push((k, a));
    }

    let mut visited = vec![false; n];
    let mut sign = vec![true; n]; // true = non-conjugated
    let mut omega_s = vec![T::zero(); n];
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; n]; // (parent mode, via edge)
    let mut cycles: Vec<Cycle> = Vec::new();

    for root in 0..n {
        if visited[root] {
            continue;
        }
        visited[root] = true;
        omega_s[root] = modes[root].omega;
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            for &(eidx, v) in &adjacency[u] {
                let e = &edges[eidx];
                let (w, s) = propagate_edge(e, omega_s[u], sign[u], modes[v].omega);
                if !visited[v] {
                    visited[v] = true;
                    omega_s[v] = w;
                    sign[v] = s;
                    parent[v] = Some((u, eidx));
                    queue.push_back(v);
                } else if parent[u].map(|(p, _)| p) != Some(v) || parent[u].map(|(_, pe)| pe) != Some(eidx)
                {
                    // non-tree edge: build the cycle u ... v through it
                    let cycle_modes = cycle_through(u, v, &parent);
                    if cycle_modes.is_empty() {
                        continue; // already handled from the other endpoint
                    }
                    let names: Vec<String> =
                        cycle_modes.iter().map(|&j| modes[j].id.clone()).collect();
                    if s != sign[v] {
                        return Err(NetworkError::OddAmplificationCycle(names));
                    }
                    let residual = (w - omega_s[v]).abs();
                    if residual > closure_tol {
                        return Err(NetworkError::LoopClosureViolation {
                            cycle: names,
                            residual_over_kappa: (residual / max_kappa)
                                .to_f64()
                                .unwrap_or(f64::NAN),
                        });
                    }
                    let canon = canonical_cycle(cycle_modes);
                    if !cycles
                        .iter()
                        .any(|c| c.modes == canon)
                    {
                        cycles.push(Cycle { modes: canon });
                    }
                }
            }
        }
    }

    Ok(ModeNetwork {
        modes,
        edges,
        edge_endpoints,
        ports: all_ports,
        cycles,
    })
}

/// Cycle through the non-tree edge (u, v): u, tree path u→anchor, reversed to
/// v. Returns mode sequence starting at u and ending at v (edge u-v implied).
fn cycle_through(u: usize, v: usize, parent: &[Option<(usize, usize)>]) -> Vec<usize> {
    let path_to_root = |mut x: usize| {
        let mut p = vec![x];
        while let Some((px, _)) = parent[x] {
            p.push(px);
            x = px;
        }
        p
    };
    let pu = path_to_root(u);
    let pv = path_to_root(v);
    // lowest common ancestor
    let mut anchor = None;
    for &a in &pu {
        if pv.contains(&a) {
            anchor = Some(a);
            break;
        }
    }
    let anchor = match anchor {
        Some(a) => a,
        None => return Vec::new(),
    };
    let mut seq: Vec<usize> = pu.iter().take_while(|&&x| x != anchor).copied().collect();
    seq.push(anchor);
    let tail: Vec<usize> = pv.iter().take_while(|&&x| x != anchor).copied().collect();
    seq.extend(tail.iter().rev());
    // seq runs u ... anchor ... v; closing edge v-u is implicit
    if seq.len() < 3 {
        return Vec::new();
    }
    seq
}

/// Rotate/orient a cycle: lowest mode index first, second element the smaller
/// of its two neighbors.
fn canonical_cycle(mut modes: Vec<usize>) -> Vec<usize> {
    let min_pos = modes
        .iter()
        .enumerate()
        .min_by_key(|(_, &m)| m)
        .map(|(k, _)| k)
        .unwrap();
    modes.rotate_left(min_pos);
    if modes.len() > 2 && modes[1] > modes[modes.len() - 1] {
        modes[1..].reverse();
    }
    modes
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_modes() -> Vec<Mode<f64>> {
        vec![
            Mode::from_hz("a", 4.155e9, 13.0e6, 1.0e6),
            Mode::from_hz("b", 5.756e9, 60.0e6, 4.3e6),
            Mode::from_hz("c", 7.915e9, 56.0e6, 4.0e6),
        ]
    }

    fn conv(modes: &[Mode<f64>], i: usize, j: usize, beta: f64, phase: f64) -> CouplingEdge<f64> {
        let pump = CouplingEdge::resonant_pump(&modes[i], &modes[j], CouplingKind::Conversion);
        CouplingEdge::from_beta(&modes[i], &modes[j], CouplingKind::Conversion, beta, phase, pump)
    }

    fn amp(modes: &[Mode<f64>], i: usize, j: usize, beta: f64, phase: f64) -> CouplingEdge<f64> {
        let pump = CouplingEdge::resonant_pump(&modes[i], &modes[j], CouplingKind::Amplification);
        CouplingEdge::from_beta(
            &modes[i],
            &modes[j],
            CouplingKind::Amplification,
            beta,
            phase,
            pump,
        )
    }

    #[test]
    fn circulator_topology_is_valid() {
        let m = three_modes();
        let edges = vec![
            conv(&m, 0, 1, 0.5, 0.0),
            conv(&m, 1, 2, 0.5, 0.0),
            conv(&m, 0, 2, 0.5, 0.0),
        ];
        let net = build_network(m, edges, vec![]).unwrap();
        assert_eq!(net.n_modes(), 3);
        assert_eq!(net.cycles().len(), 1);
        // external + internal port per mode
        assert_eq!(net.n_ports(), 6);
        assert_eq!(net.external_port_indices().len(), 3);
    }

    #[test]
    fn single_mode_network_is_valid() {
        let m = vec![Mode::from_hz("a", 4.0e9, 10.0e6, 0.0)];
        let net = build_network(m, vec![], vec![]).unwrap();
        assert_eq!(net.n_ports(), 1);
        assert!(net.cycles().is_empty());
    }

    #[test]
    fn odd_amplification_cycle_rejected() {
        let m = three_modes();
        let edges = vec![
            amp(&m, 0, 1, 0.1, 0.0),
            amp(&m, 1, 2, 0.1, 0.0),
            amp(&m, 0, 2, 0.1, 0.0),
        ];
        match build_network(m, edges, vec![]) {
            Err(NetworkError::OddAmplificationCycle(cycle)) => {
                assert_eq!(cycle.len(), 3);
            }
            other => panic!("expected OddAmplificationCycle, got {other:?}"),
        }
    }

    #[test]
    fn pump_loop_closure_enforced() {
        let m = three_modes();
        let mut bad = conv(&m, 0, 2, 0.5, 0.0);
        bad.pump_freq += 2.0 * std::f64::consts::PI * 5.0e6; // 5 MHz off closure
        let edges = vec![conv(&m, 0, 1, 0.5, 0.0), conv(&m, 1, 2, 0.5, 0.0), bad];
        match build_network(m, edges, vec![]) {
            Err(NetworkError::LoopClosureViolation { .. }) => {}
            other => panic!("expected LoopClosureViolation, got {other:?}"),
        }
    }

    #[test]
    fn closure_within_tolerance_accepted() {
        let m = three_modes();
        let max_kappa = m.iter().map(|x| x.kappa()).fold(0.0, f64::max);
        let mut nudged = conv(&m, 0, 2, 0.5, 0.0);
        nudged.pump_freq += 1e-7 * max_kappa;
        let edges = vec![conv(&m, 0, 1, 0.5, 0.0), conv(&m, 1, 2, 0.5, 0.0), nudged];
        assert!(build_network(m, edges, vec![]).is_ok());
    }

    #[test]
    fn duplicate_edge_rejected() {
        let m = three_modes();
        let edges = vec![conv(&m, 0, 1, 0.5, 0.0), conv(&m, 1, 0, 0.3, 0.1)];
        match build_network(m, edges, vec![]) {
            Err(NetworkError::DuplicateEdge(_, _)) => {}
            other => panic!("expected DuplicateEdge, got {other:?}"),
        }
    }

    #[test]
    fn unknown_mode_rejected() {
        let m = three_modes();
        let edges = vec![CouplingEdge::new(
            "a",
            "z",
            CouplingKind::Conversion,
            1.0e6,
            0.0,
            1.0e9,
        )];
        match build_network(m, edges, vec![]) {
            Err(NetworkError::UnknownMode(id)) => assert_eq!(id, "z"),
            other => panic!("expected UnknownMode, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn port_rates_must_sum_to_kappa_ext() {
        let m = three_modes();
        let half = m[0].kappa_ext / 2.0;
        let ports = vec![Port::new("a1", "a", half, Bath::Vacuum)];
        match build_network(m, vec![], ports) {
            Err(NetworkError::PortRateMismatch { mode, .. }) => assert_eq!(mode, "a"),
            other => panic!("expected PortRateMismatch, got {other:?}"),
        }
    }

    #[test]
    fn split_ports_accepted_and_eta_sums_to_one() {
        let m = three_modes();
        let half = m[0].kappa_ext / 2.0;
        let ports = vec![
            Port::new("a1", "a", half, Bath::Vacuum),
            Port::new("a2", "a", half, Bath::Thermal(0.5)),
        ];
        let net = build_network(m, vec![], ports).unwrap();
        for j in 0..net.n_modes() {
            let sum: f64 = net
                .ports()
                .iter()
                .filter(|p| p.mode == j)
                .map(|p| p.eta(&net))
                .sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn directional_amplifier_topology_valid() {
        let m = three_modes();
        let edges = vec![
            amp(&m, 0, 1, 0.4, 0.0),
            amp(&m, 1, 2, 0.4, 0.0),
            conv(&m, 0, 2, 0.5, 0.0),
        ];
        let net = build_network(m, edges, vec![]).unwrap();
        assert_eq!(net.cycles().len(), 1);
        assert_eq!(net.cycles()[0].modes, vec![0, 1, 2]);
    }
}
