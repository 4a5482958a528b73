//! Free-oscillation detection: zeros of det M(δ) in the complex detuning
//! plane.
//!
//! Every diagonal entry of M is affine in the probe detuning with slope
//! 1/κ_j, so det M(δ) is a degree-n polynomial in δ. Working in the
//! dimensionless variable x = δ/κ_max, the polynomial coefficients are
//! recovered exactly from determinant samples on a circle (inverse DFT) and
//! the roots found by Aberth iteration. A root with positive imaginary part
//! is a growing solution: the network free-oscillates.

use ndarray::Array2;
use num_complex::Complex;

use crate::frame::{assign_frame_by_index, coupling_matrix};
use crate::linalg::{lu_factor, norm_1, poly_from_samples, poly_roots};
use crate::network::{CouplingEdge, CouplingKind, ModeNetwork, NetworkError};
use crate::scalar::{lit, Scalar, C};

/// Imaginary-part threshold (relative to max κ) above which a determinant
/// root is declared growing.
pub const GROWTH_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum StabilityError {
    UnknownMode(String),
    /// The network never oscillates up to the scale cap.
    NoThresholdFound { cap: f64 },
    UnstableAtZeroScale,
    Network(NetworkError),
}

impl std::fmt::Display for StabilityError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StabilityError::UnknownMode(id) => write!(f, "unknown mode id `{id}`"),
            StabilityError::NoThresholdFound { cap } => {
                write!(f, "no oscillation threshold found scaling couplings up to x{cap}")
            }
            StabilityError::UnstableAtZeroScale => {
                write!(f, "network is unstable with couplings scaled to zero")
            }
            StabilityError::Network(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for StabilityError {}

impl From<NetworkError> for StabilityError {
    fn from(e: NetworkError) -> Self {
        StabilityError::Network(e)
    }
}

/// Roots of det M(δ) and the stability verdict.
#[derive(Debug, Clone)]
pub struct StabilityReport<T: Scalar> {
    /// Complex detuning roots in rad/s; one per mode.
    pub roots: Vec<C<T>>,
    pub stable: bool,
    /// min over roots of −Im(δ)/max κ; negative means a growing root.
    pub margin: T,
}

/// Locate all n zeros of det M(δ) for the frame rooted at `probe`.
pub fn determinant_roots<T: Scalar>(
    network: &ModeNetwork<T>,
    probe: &str,
) -> Result<StabilityReport<T>, StabilityError> {
    let probe_idx = network
        .mode_index(probe)
        .ok_or_else(|| StabilityError::UnknownMode(probe.to_string()))?;
    Ok(determinant_roots_by_index(network, probe_idx))
}

pub(crate) fn determinant_roots_by_index<T: Scalar>(
    network: &ModeNetwork<T>,
    probe: usize,
) -> StabilityReport<T> {
    let n = network.n_modes();
    let max_kappa = network.max_kappa();
    let frame0 = assign_frame_by_index(network, probe, T::zero());
    let m0 = coupling_matrix(network, &frame0);

    // diagonal slope in the dimensionless detuning x = δ/max κ
    let slopes: Vec<T> = network
        .modes()
        .iter()
        .map(|m| max_kappa / m.kappa())
        .collect();
    let det_at = |x: C<T>| {
        let mut m: Array2<C<T>> = m0.clone();
        for j in 0..n {
            m[(j, j)] = m[(j, j)] + x * Complex::new(slopes[j], T::zero());
        }
        lu_factor(&m).det()
    };

    let radius = (T::one() + T::one()) * norm_1(&m0).max(T::one());
    let coeffs = poly_from_samples(det_at, n, radius);
    let roots_x = poly_roots(&coeffs);

    let threshold = lit::<T>(GROWTH_THRESHOLD);
    let mut margin = T::infinity();
    for r in &roots_x {
        margin = margin.min(-r.im);
    }
    let stable = roots_x.iter().all(|r| r.im <= threshold);
    let roots = roots_x
        .iter()
        .map(|r| r * Complex::new(max_kappa, T::zero()))
        .collect();
    StabilityReport {
        roots,
        stable,
        margin,
    }
}

/// Which edge magnitudes an [`oscillation_threshold`] scan scales.
#[derive(Debug, Clone)]
pub enum EdgeSelection {
    All,
    AmplificationOnly,
    /// Specific mode pairs, unordered.
    Pairs(Vec<(String, String)>),
}

impl EdgeSelection {
    pub fn matches<T: Scalar>(&self, edge: &CouplingEdge<T>) -> bool {
        match self {
            EdgeSelection::All => true,
            EdgeSelection::AmplificationOnly => edge.kind == CouplingKind::Amplification,
            EdgeSelection::Pairs(pairs) => pairs.iter().any(|(a, b)| {
                (edge.from == *a && edge.to == *b) || (edge.from == *b && edge.to == *a)
            }),
        }
    }
}

/// Critical multiplier on the selected coupling magnitudes at which free
/// oscillation sets in, found by bisection to 1e-6 relative precision.
/// Scans up to the scale cap of 10.
pub fn oscillation_threshold<T: Scalar>(
    network: &ModeNetwork<T>,
    probe: &str,
    selection: &EdgeSelection,
) -> Result<T, StabilityError> {
    let probe_idx = network
        .mode_index(probe)
        .ok_or_else(|| StabilityError::UnknownMode(probe.to_string()))?;
    let cap = lit::<T>(10.0);
    let select = |_k: usize, e: &CouplingEdge<T>| selection.matches(e);

    let stable_at = |scale: T| -> Result<bool, StabilityError> {
        let scaled = network.with_scaled_magnitudes(select, scale)?;
        Ok(determinant_roots_by_index(&scaled, probe_idx).stable)
    };

    if !stable_at(T::zero())? {
        return Err(StabilityError::UnstableAtZeroScale);
    }

    // march to the cap to bracket the first instability
    let steps = 200;
    let mut lo = T::zero();
    let mut hi = None;
    for k in 1..=steps {
        let s = cap * lit::<T>(k as f64 / steps as f64);
        if stable_at(s)? {
            lo = s;
        } else {
            hi = Some(s);
            break;
        }
    }
    let mut hi = match hi {
        Some(h) => h,
        None => {
            return Err(StabilityError::NoThresholdFound {
                cap: cap.to_f64().unwrap_or(10.0),
            })
        }
    };

    let tol = lit::<T>(1e-6);
    while hi - lo > tol * hi {
        let mid = (lo + hi) * lit::<T>(0.5);
        if stable_at(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) * lit::<T>(0.5))
}
