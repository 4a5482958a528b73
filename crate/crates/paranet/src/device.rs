//! Physical-layer helpers: flux-tuning curves and pump-amplitude-to-coupling
//! conversion, pump-frequency collision checking, and shot-noise system
//! calibration against a biased tunnel junction.

use crate::fit::{least_squares, FitError, LeastSquaresOptions};
use crate::scalar::{hz_to_rad, lit, Scalar};

/// Reduced Planck constant (J·s).
pub const HBAR: f64 = 1.054571817e-34;
/// Boltzmann constant (J/K).
pub const K_B: f64 = 1.380649e-23;
/// Elementary charge (C).
pub const E_CHARGE: f64 = 1.602176634e-19;

#[derive(Debug, Clone, PartialEq)]
pub enum DeviceError {
    /// Query point outside the tabulated flux range.
    OutOfRange { phi: f64, lo: f64, hi: f64 },
    InvalidInput(String),
    Fit(FitError),
}

impl std::fmt::Display for DeviceError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DeviceError::OutOfRange { phi, lo, hi } => {
                write!(f, "flux bias {phi} outside tabulated range [{lo}, {hi}]")
            }
            DeviceError::InvalidInput(msg) => write!(f, "{msg}"),
            DeviceError::Fit(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for DeviceError {}

impl From<FitError> for DeviceError {
    fn from(e: FitError) -> Self {
        DeviceError::Fit(e)
    }
}

/// Tabulated mode frequencies versus flux bias Φ/Φ₀, one column per mode.
/// Frequencies in rad/s; flux samples strictly increasing, at least 4.
#[derive(Debug, Clone)]
pub struct FluxCurve<T: Scalar> {
    pub phi: Vec<T>,
    pub mode_ids: Vec<String>,
    /// omega[mode][sample]
    pub omega: Vec<Vec<T>>,
}

impl<T: Scalar> FluxCurve<T> {
    pub fn new(phi: Vec<T>, mode_ids: Vec<String>, omega: Vec<Vec<T>>) -> Result<Self, DeviceError> {
        if phi.len() < 4 {
            return Err(DeviceError::InvalidInput(
                "flux curve needs at least 4 samples".into(),
            ));
        }
        if !phi.windows(2).all(|w| w[1] > w[0]) {
            return Err(DeviceError::InvalidInput(
                "flux samples must be strictly increasing".into(),
            ));
        }
        if omega.len() != mode_ids.len() || omega.iter().any(|col| col.len() != phi.len()) {
            return Err(DeviceError::InvalidInput(
                "frequency table shape does not match flux samples".into(),
            ));
        }
        Ok(Self {
            phi,
            mode_ids,
            omega,
        })
    }

    /// Parse delimited text: columns Φ/Φ₀ then one frequency column per mode
    /// in Hz. The header row names the modes.
    pub fn parse(text: &str) -> Result<Self, DeviceError> {
        let mut rows = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        let header = rows
            .next()
            .ok_or_else(|| DeviceError::InvalidInput("empty flux-curve input".into()))?;
        let split = |l: &str| -> Vec<String> {
            if l.contains(',') {
                l.split(',').map(|t| t.trim().to_string()).collect()
            } else {
                l.split_whitespace().map(|t| t.to_string()).collect()
            }
        };
        let head = split(header);
        if head.len() < 2 {
            return Err(DeviceError::InvalidInput(
                "flux-curve input needs a flux column and at least one mode column".into(),
            ));
        }
        let mode_ids: Vec<String> = head[1..].to_vec();
        let mut phi = Vec::new();
        let mut omega = vec![Vec::new(); mode_ids.len()];
        for line in rows {
            let toks = split(line);
            if toks.len() != head.len() {
                return Err(DeviceError::InvalidInput(format!(
                    "flux-curve row has {} fields, expected {}",
                    toks.len(),
                    head.len()
                )));
            }
            let parse = |t: &str| {
                t.parse::<f64>()
                    .map(lit::<T>)
                    .map_err(|_| DeviceError::InvalidInput(format!("bad number `{t}`")))
            };
            phi.push(parse(&toks[0])?);
            for (k, col) in omega.iter_mut().enumerate() {
                col.push(hz_to_rad(parse(&toks[k + 1])?));
            }
        }
        Self::new(phi, mode_ids, omega)
    }
}

/// Monotone-cubic (Fritsch–Carlson) endpoint and interior slopes.
fn pchip_slopes<T: Scalar>(x: &[T], y: &[T]) -> Vec<T> {
    let n = x.len();
    let h: Vec<T> = (0..n - 1).map(|i| x[i + 1] - x[i]).collect();
    let sec: Vec<T> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut d = vec![T::zero(); n];
    let three = lit::<T>(3.0);
    for i in 1..n - 1 {
        if sec[i - 1] * sec[i] <= T::zero() {
            d[i] = T::zero();
        } else {
            let w1 = h[i] + h[i] + h[i - 1];
            let w2 = h[i] + h[i - 1] + h[i - 1];
            d[i] = (w1 + w2) / (w1 / sec[i - 1] + w2 / sec[i]);
        }
    }
    let endpoint = |h0: T, h1: T, s0: T, s1: T| {
        let mut d0 = ((h0 + h0 + h1) * s0 - h0 * s1) / (h0 + h1);
        if d0 * s0 <= T::zero() {
            d0 = T::zero();
        } else if s0 * s1 <= T::zero() && d0.abs() > three * s0.abs() {
            d0 = three * s0;
        }
        d0
    };
    d[0] = endpoint(h[0], h[1], sec[0], sec[1]);
    d[n - 1] = endpoint(h[n - 2], h[n - 3], sec[n - 2], sec[n - 3]);
    d
}

/// Derivative ∂ω/∂Φ of the monotone cubic interpolant at `phi_bias`, one
/// value per mode.
pub fn flux_slopes<T: Scalar>(curve: &FluxCurve<T>, phi_bias: T) -> Result<Vec<T>, DeviceError> {
    let lo = curve.phi[0];
    let hi = curve.phi[curve.phi.len() - 1];
    if phi_bias < lo || phi_bias > hi {
        return Err(DeviceError::OutOfRange {
            phi: phi_bias.to_f64().unwrap_or(f64::NAN),
            lo: lo.to_f64().unwrap_or(f64::NAN),
            hi: hi.to_f64().unwrap_or(f64::NAN),
        });
    }
    let seg = match curve.phi.iter().rposition(|&p| p <= phi_bias) {
        Some(k) if k + 1 < curve.phi.len() => k,
        _ => curve.phi.len() - 2,
    };
    let h = curve.phi[seg + 1] - curve.phi[seg];
    let s = (phi_bias - curve.phi[seg]) / h;
    let six = lit::<T>(6.0);
    let three = lit::<T>(3.0);
    let four = lit::<T>(4.0);
    let two = lit::<T>(2.0);
    let mut out = Vec::with_capacity(curve.omega.len());
    for col in &curve.omega {
        let d = pchip_slopes(&curve.phi, col);
        let (y0, y1) = (col[seg], col[seg + 1]);
        let (d0, d1) = (d[seg], d[seg + 1]);
        // derivative of the cubic Hermite segment
        let dy = (six * s * s - six * s) * (y0 - y1) / h
            + d0 * (three * s * s - four * s + T::one())
            + d1 * (three * s * s - two * s);
        out.push(dy);
    }
    Ok(out)
}

/// Pump-amplitude-to-coupling conversion, with a flag raised when the two
/// flux slopes have opposite signs (the magnitude is used regardless).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxCoupling<T: Scalar> {
    /// |g| in rad/s.
    pub g: T,
    pub opposite_slopes: bool,
}

/// g = (δΦ/4)·√(∂ω_j/∂Φ · ∂ω_k/∂Φ), linear in the modulation amplitude δΦ.
pub fn coupling_from_flux<T: Scalar>(
    dphi_amplitude: T,
    slope_j: T,
    slope_k: T,
) -> Result<FluxCoupling<T>, DeviceError> {
    if dphi_amplitude < T::zero() {
        return Err(DeviceError::InvalidInput(
            "flux-modulation amplitude must be >= 0".into(),
        ));
    }
    let product = slope_j * slope_k;
    let opposite_slopes = product < T::zero();
    let g = dphi_amplitude / lit::<T>(4.0) * product.abs().sqrt();
    Ok(FluxCoupling { g, opposite_slopes })
}

/// A pair of first-order process frequencies closer than the guard band.
#[derive(Debug, Clone, PartialEq)]
pub struct Collision<T: Scalar> {
    pub label_1: String,
    pub label_2: String,
    pub freq_1: T,
    pub freq_2: T,
    pub spacing: T,
}

/// Check spectral separation of all mode frequencies and first-order pump
/// processes {ω_j} ∪ {ω_j+ω_k} ∪ {|ω_j−ω_k|} (including 2ω_j). Pairs closer
/// than guard_factor·max κ are reported; an empty list means every process
/// is resolvable within the rotating-wave picture.
pub fn collision_check<T: Scalar>(
    modes: &[(String, T)],
    kappas: &[T],
    guard_factor: T,
) -> Result<Vec<Collision<T>>, DeviceError> {
    if !(guard_factor > T::zero()) {
        return Err(DeviceError::InvalidInput("guard factor must be > 0".into()));
    }
    let max_kappa = kappas.iter().fold(T::zero(), |a, &k| a.max(k));
    let guard = guard_factor * max_kappa;

    let mut entries: Vec<(String, T)> = Vec::new();
    for (id, w) in modes {
        entries.push((id.clone(), *w));
    }
    for (j, (id_j, wj)) in modes.iter().enumerate() {
        for (k, (id_k, wk)) in modes.iter().enumerate().skip(j) {
            let label = if j == k {
                format!("2{id_j}")
            } else {
                format!("{id_j}+{id_k}")
            };
            entries.push((label, *wj + *wk));
            if j != k {
                entries.push((format!("|{id_j}-{id_k}|"), (*wj - *wk).abs()));
            }
        }
    }

    let mut collisions = Vec::new();
    for a in 0..entries.len() {
        for b in a + 1..entries.len() {
            let spacing = (entries[a].1 - entries[b].1).abs();
            if spacing < guard {
                collisions.push(Collision {
                    label_1: entries[a].0.clone(),
                    label_2: entries[b].0.clone(),
                    freq_1: entries[a].1,
                    freq_2: entries[b].1,
                    spacing,
                });
            }
        }
    }
    collisions.sort_by(|x, y| {
        x.spacing
            .partial_cmp(&y.spacing)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| x.label_1.cmp(&y.label_1))
            .then_with(|| x.label_2.cmp(&y.label_2))
    });
    Ok(collisions)
}

fn xcoth<T: Scalar>(x: T) -> T {
    if x.abs() < lit::<T>(1e-4) {
        T::one() + x * x / lit::<T>(3.0)
    } else {
        x / x.tanh()
    }
}

/// Spectral density (quanta) of the noise emitted by a biased tunnel
/// junction at voltage `v` (V), temperature `t` (K), frequency `omega`
/// (rad/s): N = N₊ + N₋, N± = (k_BT/2ħω)·u±·coth(u±), u± = (eV±ħω)/(2k_BT).
/// Vacuum floor ½ at V = 0, T → 0; slope e/(2ħω) in the high-voltage limit.
pub fn shot_noise_psd<T: Scalar>(v: T, t: T, omega: T) -> T {
    let hbar_w = lit::<T>(HBAR) * omega;
    let ev = lit::<T>(E_CHARGE) * v;
    if t <= T::zero() {
        // zero-temperature limit: N± → |eV ± ħω|/(4ħω)
        return ((ev + hbar_w).abs() + (ev - hbar_w).abs()) / (lit::<T>(4.0) * hbar_w);
    }
    let kt = lit::<T>(K_B) * t;
    let two = lit::<T>(2.0);
    let pref = kt / (two * hbar_w);
    let up = (ev + hbar_w) / (two * kt);
    let um = (ev - hbar_w) / (two * kt);
    pref * (xcoth(up) + xcoth(um))
}

/// Result of a shot-noise system calibration at one frequency.
#[derive(Debug, Clone)]
pub struct CalibrationRecord<T: Scalar> {
    /// Measurement frequency (rad/s).
    pub omega: T,
    /// Power gain of the full measurement chain (linear units per quanta).
    pub g_sys: T,
    /// System added noise referred to the calibration plane (quanta).
    pub n_add: T,
    /// Electron temperature of the junction (K).
    pub temperature: T,
    pub residual_norm: T,
}

/// Fit N_meas = G_sys·(N(V, T, ω) + n_add) over (V, N_meas) samples for
/// (G_sys, n_add, T). Needs at least 10 points spanning the sub-gap and
/// linear regimes.
pub fn calibrate_system<T: Scalar>(
    data: &[(T, T)],
    omega: T,
    guess: (T, T, T),
) -> Result<CalibrationRecord<T>, DeviceError> {
    if data.len() < 10 {
        return Err(DeviceError::InvalidInput(format!(
            "calibration needs at least 10 points, got {}",
            data.len()
        )));
    }
    let (g0, n0, t0) = guess;
    if !(g0 > T::zero()) || n0 < T::zero() || !(t0 > T::zero()) {
        return Err(DeviceError::InvalidInput(
            "calibration guess must have G_sys > 0, n_add >= 0, T > 0".into(),
        ));
    }
    let theta0 = [g0, n0, t0];
    let big = lit::<T>(1e6);
    // the temperature floor stays a factor 50 under the guess: far below
    // that the coth saturates and the model loses all T sensitivity
    let fifty = lit::<T>(50.0);
    let bounds = [
        (g0 / big, g0 * big),
        (T::zero(), lit::<T>(1e9)),
        (t0 / fifty, t0 * fifty),
    ];
    let residual = |theta: &[T]| -> Option<Vec<T>> {
        let (g, n_add, t) = (theta[0], theta[1], theta[2]);
        Some(
            data.iter()
                .map(|&(v, n_meas)| g * (shot_noise_psd(v, t, omega) + n_add) - n_meas)
                .collect(),
        )
    };
    let out = least_squares(residual, &theta0, &bounds, &LeastSquaresOptions::default())?;
    Ok(CalibrationRecord {
        omega,
        g_sys: out.params[0],
        n_add: out.params[1],
        temperature: out.params[2],
        residual_norm: out.residual_norm,
    })
}
