//! Quantum-noise propagation: input covariances through S to output spectral
//! densities, symmetrization, and input-referred added noise.
//!
//! Covariances are ⟨A_in†A_inᵀ⟩ densities in quanta. A vacuum port carries 0
//! on the diagonal in the normal-ordered convention; ports of conjugated
//! modes enter through the conjugate field, so their correlator picks up the
//! ordering (+1) term. Symmetrization adds the mirrored-frequency branch,
//! landing vacuum at the half-photon level.

use ndarray::Array2;
use num_complex::Complex;

use crate::frame::{assign_frame_by_index, FrameAssignment};
use crate::linalg::hermitian_eigenvalues;
use crate::network::ModeNetwork;
use crate::scalar::{hz_to_rad, lit, Scalar, C};
use crate::scattering::{scattering_matrix, FullScattering, ScatteringError};

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseError {
    /// Input covariance is not Hermitian positive semidefinite.
    NonPSDInput,
    /// Added-noise referral needs power gain above unity.
    GainTooSmall,
    DimensionMismatch { expected: usize, got: usize },
    UnknownPort(String),
    UnknownMode(String),
    Scattering(ScatteringError),
}

impl std::fmt::Display for NoiseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NoiseError::NonPSDInput => {
                write!(f, "input covariance is not Hermitian positive semidefinite")
            }
            NoiseError::GainTooSmall => {
                write!(f, "added-noise referral requires power gain G > 1")
            }
            NoiseError::DimensionMismatch { expected, got } => {
                write!(f, "covariance size {got} does not match port count {expected}")
            }
            NoiseError::UnknownPort(p) => write!(f, "unknown port `{p}`"),
            NoiseError::UnknownMode(m) => write!(f, "unknown mode `{m}`"),
            NoiseError::Scattering(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for NoiseError {}

impl From<ScatteringError> for NoiseError {
    fn from(e: ScatteringError) -> Self {
        NoiseError::Scattering(e)
    }
}

/// Input covariance ⟨A_in†A_inᵀ⟩ over the full port set, in quanta.
#[derive(Debug, Clone)]
pub struct InputCovariance<T: Scalar> {
    pub matrix: Array2<C<T>>,
}

impl<T: Scalar> InputCovariance<T> {
    /// Uncorrelated baths from the network's port declarations: diagonal
    /// n_th per port, plus the ordering term on conjugated-mode ports.
    pub fn from_network(network: &ModeNetwork<T>, frame: &FrameAssignment<T>) -> Self {
        let m = network.n_ports();
        let mut matrix = Array2::zeros((m, m));
        for (k, p) in network.ports().iter().enumerate() {
            let n = p.bath.occupation();
            let diag = if frame.conjugated[p.mode] { n + T::one() } else { n };
            matrix[(k, k)] = Complex::new(diag, T::zero());
        }
        Self { matrix }
    }

    /// Wrap a caller-supplied covariance, rejecting non-Hermitian or
    /// indefinite input.
    pub fn validated(matrix: Array2<C<T>>) -> Result<Self, NoiseError> {
        let m = matrix.nrows();
        if matrix.ncols() != m {
            return Err(NoiseError::DimensionMismatch {
                expected: m,
                got: matrix.ncols(),
            });
        }
        let mut scale = T::zero();
        for r in 0..m {
            for c in 0..m {
                scale = scale.max(matrix[(r, c)].norm());
            }
        }
        let tol = lit::<T>(1e-10) * scale.max(T::one());
        for r in 0..m {
            for c in 0..m {
                if (matrix[(r, c)] - matrix[(c, r)].conj()).norm() > tol {
                    return Err(NoiseError::NonPSDInput);
                }
            }
        }
        let eig = hermitian_eigenvalues(&matrix);
        if let Some(min) = eig.first() {
            if *min < -tol {
                return Err(NoiseError::NonPSDInput);
            }
        }
        Ok(Self { matrix })
    }
}

/// Propagate an input covariance through S: ⟨A_out†A_outᵀ⟩ = S*⟨A_in†A_inᵀ⟩Sᵀ.
pub fn propagate_covariance<T: Scalar>(
    s: &FullScattering<T>,
    input: &InputCovariance<T>,
) -> Result<Array2<C<T>>, NoiseError> {
    let m = s.s.nrows();
    if input.matrix.nrows() != m {
        return Err(NoiseError::DimensionMismatch {
            expected: m,
            got: input.matrix.nrows(),
        });
    }
    let s_conj = s.s.mapv(|z| z.conj());
    let s_t = s.s.t().to_owned();
    Ok(s_conj.dot(&input.matrix).dot(&s_t))
}

/// Per-port output spectral density: the diagonal of the propagated
/// covariance, in quanta (normal-ordered convention).
pub fn output_spectral_density<T: Scalar>(
    s: &FullScattering<T>,
    input: &InputCovariance<T>,
) -> Result<Vec<T>, NoiseError> {
    InputCovariance::validated(input.matrix.clone())?;
    let out = propagate_covariance(s, input)?;
    Ok((0..out.nrows()).map(|k| out[(k, k)].re).collect())
}

/// Symmetrized output density N̄ per port at one frame point, vacuum level ½.
///
/// The frequency-mirrored branch differs from the propagated diagonal by the
/// field commutator, so N̄ = N + ½ on ports of unconjugated modes and N − ½
/// on conjugated-mode ports (whose correlator already carries the +1 term).
pub fn symmetrized_from_scattering<T: Scalar>(
    s: &FullScattering<T>,
    input: &InputCovariance<T>,
) -> Result<Vec<T>, NoiseError> {
    let d = output_spectral_density(s, input)?;
    let half = lit::<T>(0.5);
    Ok(d
        .iter()
        .enumerate()
        .map(|(k, &v)| if s.conjugated[k] { v - half } else { v + half })
        .collect())
}

/// Symmetrized output density per port for a network probed at `delta`
/// (rad/s), with baths taken from the port declarations.
pub fn symmetrized_density<T: Scalar>(
    network: &ModeNetwork<T>,
    probe: &str,
    delta: T,
) -> Result<(Vec<T>, Vec<String>), NoiseError> {
    let probe_idx = network
        .mode_index(probe)
        .ok_or_else(|| NoiseError::UnknownMode(probe.to_string()))?;
    let frame = assign_frame_by_index(network, probe_idx, delta);
    let s = scattering_matrix(network, &frame)?;
    let cov = InputCovariance::from_network(network, &frame);
    let nbar = symmetrized_from_scattering(&s, &cov)?;
    Ok((nbar, s.port_labels.clone()))
}

/// System added noise referred to the input: n_add = N̄_out/G − ½.
pub fn added_noise_input_referred<T: Scalar>(nbar_out: T, gain: T) -> Result<T, NoiseError> {
    if !(gain > T::one()) {
        return Err(NoiseError::GainTooSmall);
    }
    Ok(nbar_out / gain - lit::<T>(0.5))
}

/// Ratio of symmetrized output noise at one port between two operating
/// points (pumps on vs pumps off), probed on the port's own mode.
pub fn return_noise_ratio<T: Scalar>(
    network_on: &ModeNetwork<T>,
    network_off: &ModeNetwork<T>,
    port: &str,
) -> Result<T, NoiseError> {
    let k_on = network_on
        .port_index(port)
        .ok_or_else(|| NoiseError::UnknownPort(port.to_string()))?;
    let k_off = network_off
        .port_index(port)
        .ok_or_else(|| NoiseError::UnknownPort(port.to_string()))?;
    let mode_on = network_on.modes()[network_on.ports()[k_on].mode].id.clone();
    let mode_off = network_off.modes()[network_off.ports()[k_off].mode].id.clone();
    let (on, _) = symmetrized_density(network_on, &mode_on, T::zero())?;
    let (off, _) = symmetrized_density(network_off, &mode_off, T::zero())?;
    Ok(on[k_on] / off[k_off])
}

/// Noise spectra over a detuning sweep, reported on external ports.
#[derive(Debug, Clone)]
pub struct NoiseResult<T: Scalar> {
    /// Probe detuning in Hz.
    pub axis_hz: Vec<T>,
    pub port_labels: Vec<String>,
    /// Symmetrized density N̄ per point per external port.
    pub nbar: Vec<Vec<T>>,
    /// Added noise referred to the input, per point, indexed (out, in) over
    /// external ports. NaN where the forward power gain is ≤ 1.
    pub nadd: Vec<Array2<T>>,
    pub stable: Vec<bool>,
}

/// Sweep the probe detuning (Hz) and record output noise per external port.
pub fn sweep_noise<T: Scalar>(
    network: &ModeNetwork<T>,
    probe: &str,
    f_min_hz: T,
    f_max_hz: T,
    n_points: usize,
) -> Result<NoiseResult<T>, NoiseError> {
    if n_points < 2 {
        return Err(NoiseError::Scattering(ScatteringError::InvalidSweep(
            "noise sweep needs at least 2 points".into(),
        )));
    }
    let probe_idx = network
        .mode_index(probe)
        .ok_or_else(|| NoiseError::UnknownMode(probe.to_string()))?;
    let ext = network.external_port_indices();
    let port_labels: Vec<String> = ext
        .iter()
        .map(|&k| network.ports()[k].label.clone())
        .collect();
    let n_ext = ext.len();

    let step = (f_max_hz - f_min_hz) / lit::<T>((n_points - 1) as f64);
    let mut axis_hz = Vec::with_capacity(n_points);
    let mut nbar_all = Vec::with_capacity(n_points);
    let mut nadd_all = Vec::with_capacity(n_points);
    let mut stable = Vec::with_capacity(n_points);
    for k in 0..n_points {
        let f = f_min_hz + step * lit::<T>(k as f64);
        axis_hz.push(f);
        let frame = assign_frame_by_index(network, probe_idx, hz_to_rad(f));
        match scattering_matrix(network, &frame) {
            Ok(s) => {
                let cov = InputCovariance::from_network(network, &frame);
                let full_nbar = symmetrized_from_scattering(&s, &cov)?;
                let nbar: Vec<T> = ext.iter().map(|&j| full_nbar[j]).collect();
                let mut nadd = Array2::from_elem((n_ext, n_ext), T::nan());
                for (r, &kr) in ext.iter().enumerate() {
                    for (c, &kc) in ext.iter().enumerate() {
                        let gain = s.s[(kr, kc)].norm_sqr();
                        if gain > T::one() {
                            nadd[(r, c)] = nbar[r] / gain - lit::<T>(0.5);
                        }
                    }
                }
                nbar_all.push(nbar);
                nadd_all.push(nadd);
                stable.push(true);
            }
            Err(ScatteringError::SingularMatrix { .. }) => {
                nbar_all.push(vec![T::nan(); n_ext]);
                nadd_all.push(Array2::from_elem((n_ext, n_ext), T::nan()));
                stable.push(false);
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(NoiseResult {
        axis_hz,
        port_labels,
        nbar: nbar_all,
        nadd: nadd_all,
        stable,
    })
}
