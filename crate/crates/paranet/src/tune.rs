//! Pump-tuning conditions for the canonical behaviors: matched conversion,
//! circulation, and directional phase-preserving amplification.

use crate::network::{CouplingEdge, CouplingKind, Mode};
use crate::scalar::{lit, Scalar, C};


#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Circulation a→b→c (loop phase −π/2), or amplification a→(b,c).
    Forward,
    /// Reversed signal flow (all pump phases sign-flipped).
    Reverse,
}

/// Target behavior for [`tune`].
#[derive(Debug, Clone, PartialEq)]
pub enum TuneTarget<T: Scalar> {
    /// Matched two-mode frequency conversion (|β| = 1/2).
    Converter,
    Circulator(Direction),
    DirectionalAmplifier { gain_db: T, direction: Direction },
}

#[derive(Debug, Clone, PartialEq)]
pub enum TuneError {
    /// Converter needs 2 modes; circulator and directional amplifier need 3.
    WrongModeCount { expected: usize, got: usize },
    NegativeGain,
}

impl std::fmt::Display for TuneError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TuneError::WrongModeCount { expected, got } => {
                write!(f, "target needs {expected} modes, got {got}")
            }
            TuneError::NegativeGain => write!(f, "amplifier gain must be >= 0 dB"),
        }
    }
}

impl std::error::Error for TuneError {}

/// Amplification-branch coupling for a directional amplifier of power gain G:
/// |β| = ½√((√G−1)/(√G+1)), inverted from √G = (1+4β²)/(1−4β²).
pub fn amplifier_beta_for_gain_db<T: Scalar>(gain_db: T) -> Result<T, TuneError> {
    if gain_db < T::zero() {
        return Err(TuneError::NegativeGain);
    }
    let sqrt_g = lit::<T>(10.0).powf(gain_db / lit::<T>(20.0));
    Ok(lit::<T>(0.5) * ((sqrt_g - T::one()) / (sqrt_g + T::one())).sqrt())
}

/// Solve the pump conditions for a target behavior on the given modes
/// (ordered (a, b) or (a, b, c)). Returns ready-to-build edges with resonant
/// pump frequencies and magnitudes un-normalized via |g| = 2β√(κ_j κ_k).
pub fn tune<T: Scalar>(
    modes: &[Mode<T>],
    target: &TuneTarget<T>,
) -> Result<Vec<CouplingEdge<T>>, TuneError> {
    let half = lit::<T>(0.5);
    let half_pi = T::PI() * half;
    let edge = |i: usize, j: usize, kind: CouplingKind, beta: T, phase: T| {
        let pump = CouplingEdge::resonant_pump(&modes[i], &modes[j], kind);
        CouplingEdge::from_beta(&modes[i], &modes[j], kind, beta, phase, pump)
    };
    match target {
        TuneTarget::Converter => {
            if modes.len() != 2 {
                return Err(TuneError::WrongModeCount {
                    expected: 2,
                    got: modes.len(),
                });
            }
            Ok(vec![edge(0, 1, CouplingKind::Conversion, half, T::zero())])
        }
        TuneTarget::Circulator(direction) => {
            if modes.len() != 3 {
                return Err(TuneError::WrongModeCount {
                    expected: 3,
                    got: modes.len(),
                });
            }
            // φ_ab = φ_bc = −φ_ac = π/2 gives loop phase −π/2: circulation a→b→c
            let sgn = match direction {
                Direction::Forward => T::one(),
                Direction::Reverse => -T::one(),
            };
            Ok(vec![
                edge(0, 1, CouplingKind::Conversion, half, sgn * half_pi),
                edge(1, 2, CouplingKind::Conversion, half, sgn * half_pi),
                edge(0, 2, CouplingKind::Conversion, half, -sgn * half_pi),
            ])
        }
        TuneTarget::DirectionalAmplifier { gain_db, direction } => {
            if modes.len() != 3 {
                return Err(TuneError::WrongModeCount {
                    expected: 3,
                    got: modes.len(),
                });
            }
            let x = amplifier_beta_for_gain_db(*gain_db)?;
            // φ_ab = φ_ac = −φ_bc = −π/2: input match on a, amplification toward b, c
            let sgn = match direction {
                Direction::Forward => T::one(),
                Direction::Reverse => -T::one(),
            };
            Ok(vec![
                edge(0, 1, CouplingKind::Amplification, x, -sgn * half_pi),
                edge(1, 2, CouplingKind::Amplification, x, sgn * half_pi),
                edge(0, 2, CouplingKind::Conversion, half, -sgn * half_pi),
            ])
        }
    }
}

/// Loop topology for [`isolation_condition`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopKind {
    /// Conversion loop: isolation S_ab = 0 at β_ac β_bc* = +β_ab Δ_c.
    Circulator,
    /// Amplification loop: isolation S_ab = 0 at β_ac β_bc* = −β_ab Δ_c.
    DirectionalAmplifier,
}

/// The complex product β_ac·β_bc* required for maximum isolation from port b
/// to port a, given the a-b coupling and the complex detuning of mode c.
pub fn isolation_condition<T: Scalar>(
    beta_ab: C<T>,
    delta_c: C<T>,
    kind: LoopKind,
) -> C<T> {
    match kind {
        LoopKind::Circulator => beta_ab * delta_c,
        LoopKind::DirectionalAmplifier => -(beta_ab * delta_c),
    }
}
