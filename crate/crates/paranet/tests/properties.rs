//! Randomized invariants of the scattering and noise engines: commutator
//! (symplectic) preservation on the full port set, unitarity of lossless
//! conversion networks, two-mode reciprocity, passivity bounds, covariance
//! positivity, and determinant-root counting.

use ndarray::Array2;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use paranet::frame::assign_frame;
use paranet::linalg::hermitian_eigenvalues;
use paranet::network::{build_network, Bath, CouplingEdge, CouplingKind, Mode, ModeNetwork, Port};
use paranet::noise::{propagate_covariance, InputCovariance};
use paranet::scattering::{scattering_matrix, FullScattering};
use paranet::stability::determinant_roots;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

struct Draw {
    rng: ChaCha8Rng,
}

impl Draw {
    fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Random tree-coupled network of 1..=4 modes. Trees impose no loop
    /// constraint, so kinds, phases, and pump offsets are unconstrained.
    fn tree_network(&mut self, lossless: bool, conversion_only: bool) -> ModeNetwork<f64> {
        let n = self.rng.gen_range(1..=4usize);
        let mut modes = Vec::new();
        for k in 0..n {
            let f = 4.0e9 + 1.7e9 * k as f64 + self.rng.gen_range(-2.0e8..2.0e8);
            let kext = self.rng.gen_range(8.0e6..70.0e6);
            let kint = if lossless {
                0.0
            } else {
                self.rng.gen_range(0.5e6..8.0e6)
            };
            modes.push(Mode::from_hz(format!("m{k}"), f, kext, kint));
        }
        let mut edges = Vec::new();
        for k in 1..n {
            let parent = self.rng.gen_range(0..k);
            let kind = if conversion_only || self.rng.gen_bool(0.5) {
                CouplingKind::Conversion
            } else {
                CouplingKind::Amplification
            };
            let beta = match kind {
                CouplingKind::Conversion => self.rng.gen_range(0.05..0.6),
                CouplingKind::Amplification => self.rng.gen_range(0.05..0.38),
            };
            let phase = self.rng.gen_range(-3.1..3.1);
            let pump = CouplingEdge::resonant_pump(&modes[parent], &modes[k], kind)
                + TWO_PI * self.rng.gen_range(-3.0e6..3.0e6);
            edges.push(CouplingEdge::from_beta(
                &modes[parent],
                &modes[k],
                kind,
                beta,
                phase,
                pump,
            ));
        }
        build_network(modes, edges, vec![]).unwrap()
    }

    /// Random three-mode loop (circulator- or directional-amplifier-shaped).
    fn loop_network(&mut self, lossless: bool, conversion_only: bool) -> ModeNetwork<f64> {
        let mut modes = Vec::new();
        for k in 0..3 {
            let f = 4.0e9 + 1.8e9 * k as f64 + self.rng.gen_range(-1.0e8..1.0e8);
            let kext = self.rng.gen_range(10.0e6..65.0e6);
            let kint = if lossless {
                0.0
            } else {
                self.rng.gen_range(0.5e6..6.0e6)
            };
            modes.push(Mode::from_hz(format!("m{k}"), f, kext, kint));
        }
        let amp_loop = !conversion_only && self.rng.gen_bool(0.5);
        let kinds = if amp_loop {
            [
                CouplingKind::Amplification,
                CouplingKind::Amplification,
                CouplingKind::Conversion,
            ]
        } else {
            [
                CouplingKind::Conversion,
                CouplingKind::Conversion,
                CouplingKind::Conversion,
            ]
        };
        let pairs = [(0usize, 1usize), (1, 2), (0, 2)];
        // pump offsets on two edges; the third closes the loop exactly
        let o01 = TWO_PI * self.rng.gen_range(-3.0e6..3.0e6);
        let o12 = TWO_PI * self.rng.gen_range(-3.0e6..3.0e6);
        let p01 = CouplingEdge::resonant_pump(&modes[0], &modes[1], kinds[0]) + o01;
        let p12 = CouplingEdge::resonant_pump(&modes[1], &modes[2], kinds[1]) + o12;
        let p02 = if amp_loop {
            p12 - p01 // ω_ac = ω_bc − ω_ab
        } else {
            p01 + p12
        };
        let pumps = [p01, p12, p02];
        let mut edges = Vec::new();
        for (k, &(i, j)) in pairs.iter().enumerate() {
            let beta = match kinds[k] {
                CouplingKind::Conversion => self.rng.gen_range(0.05..0.55),
                CouplingKind::Amplification => self.rng.gen_range(0.05..0.35),
            };
            let phase = self.rng.gen_range(-3.1..3.1);
            edges.push(CouplingEdge::from_beta(
                &modes[i], &modes[j], kinds[k], beta, phase, pumps[k],
            ));
        }
        build_network(modes, edges, vec![]).unwrap()
    }
}

fn stable_scattering(net: &ModeNetwork<f64>, delta: f64) -> Option<FullScattering<f64>> {
    let frame = assign_frame(net, &net.modes()[0].id, delta).ok()?;
    let s = scattering_matrix(net, &frame).ok()?;
    if s.condition > 1.0e4 {
        return None; // too close to a divergence for 1e-10 checks
    }
    Some(s)
}

fn signature_error(s: &FullScattering<f64>) -> f64 {
    let m = s.s.nrows();
    let mut sigma: Array2<Complex<f64>> = Array2::zeros((m, m));
    for k in 0..m {
        sigma[(k, k)] = Complex::new(if s.conjugated[k] { -1.0 } else { 1.0 }, 0.0);
    }
    let sh = {
        let mut out: Array2<Complex<f64>> = Array2::zeros((m, m));
        for r in 0..m {
            for c in 0..m {
                out[(c, r)] = s.s[(r, c)].conj();
            }
        }
        out
    };
    let lhs = s.s.dot(&sigma).dot(&sh);
    let mut err: f64 = 0.0;
    for r in 0..m {
        for c in 0..m {
            err = err.max((lhs[(r, c)] - sigma[(r, c)]).norm());
        }
    }
    err
}

#[test]
fn full_port_scattering_preserves_commutators() {
    // S Σ S† = Σ over the complete port set, lossy or not, any topology
    let mut draw = Draw::new(2024);
    let mut checked = 0;
    while checked < 300 {
        let lossless = checked % 2 == 0;
        let net = if checked % 3 == 0 {
            draw.loop_network(lossless, false)
        } else {
            draw.tree_network(lossless, false)
        };
        let delta = TWO_PI * draw.rng.gen_range(-3.0e7..3.0e7);
        if let Some(s) = stable_scattering(&net, delta) {
            let err = signature_error(&s);
            assert!(err < 1e-10, "symplectic error {err:.3e}");
            checked += 1;
        }
    }
}

#[test]
fn lossless_conversion_networks_are_unitary() {
    let mut draw = Draw::new(7);
    let mut checked = 0;
    while checked < 200 {
        let net = if checked % 3 == 0 {
            draw.loop_network(true, true)
        } else {
            draw.tree_network(true, true)
        };
        let delta = TWO_PI * draw.rng.gen_range(-4.0e7..4.0e7);
        if let Some(s) = stable_scattering(&net, delta) {
            let m = s.s.nrows();
            let sh = {
                let mut out: Array2<Complex<f64>> = Array2::zeros((m, m));
                for r in 0..m {
                    for c in 0..m {
                        out[(c, r)] = s.s[(r, c)].conj();
                    }
                }
                out
            };
            let prod = sh.dot(&s.s);
            for r in 0..m {
                for c in 0..m {
                    let want = if r == c { 1.0 } else { 0.0 };
                    assert!(
                        (prod[(r, c)] - Complex::new(want, 0.0)).norm() < 1e-10,
                        "S†S deviates at ({r},{c})"
                    );
                }
            }
            checked += 1;
        }
    }
}

#[test]
fn two_mode_magnitude_reciprocity() {
    // |S_ab| = |S_ba| for every two-mode network, either process, any loss
    let mut draw = Draw::new(99);
    for k in 0..400 {
        let kind = if k % 2 == 0 {
            CouplingKind::Conversion
        } else {
            CouplingKind::Amplification
        };
        let modes = vec![
            Mode::from_hz("a", 4.2e9, draw.rng.gen_range(8.0e6..40.0e6), draw.rng.gen_range(0.0..5.0e6)),
            Mode::from_hz("b", 6.1e9, draw.rng.gen_range(8.0e6..70.0e6), draw.rng.gen_range(0.0..5.0e6)),
        ];
        let beta = match kind {
            CouplingKind::Conversion => draw.rng.gen_range(0.0..0.8),
            CouplingKind::Amplification => draw.rng.gen_range(0.0..0.42),
        };
        let phase = draw.rng.gen_range(-3.1..3.1);
        let pump = CouplingEdge::resonant_pump(&modes[0], &modes[1], kind)
            + TWO_PI * draw.rng.gen_range(-4.0e6..4.0e6);
        let edges = vec![CouplingEdge::from_beta(
            &modes[0], &modes[1], kind, beta, phase, pump,
        )];
        let net = build_network(modes, edges, vec![]).unwrap();
        let delta = TWO_PI * draw.rng.gen_range(-5.0e7..5.0e7);
        if let Some(s) = stable_scattering(&net, delta) {
            let (ext, _, _) = s.external();
            let d = (ext[(0, 1)].norm() - ext[(1, 0)].norm()).abs();
            assert!(d < 1e-10 * (1.0 + ext[(0, 1)].norm()), "asymmetry {d:.3e}");
        }
    }
}

#[test]
fn passive_conversion_networks_never_exceed_unit_magnitude() {
    let mut draw = Draw::new(31);
    let mut checked = 0;
    while checked < 200 {
        let net = if checked % 3 == 0 {
            draw.loop_network(false, true)
        } else {
            draw.tree_network(false, true)
        };
        let delta = TWO_PI * draw.rng.gen_range(-6.0e7..6.0e7);
        if let Some(s) = stable_scattering(&net, delta) {
            for z in s.s.iter() {
                assert!(z.norm() <= 1.0 + 1e-10, "|S| = {} > 1", z.norm());
            }
            checked += 1;
        }
    }
}

#[test]
fn propagated_covariance_stays_hermitian_psd() {
    let mut draw = Draw::new(404);
    let mut checked = 0;
    while checked < 150 {
        let mut net = if checked % 2 == 0 {
            draw.loop_network(false, false)
        } else {
            draw.tree_network(false, false)
        };
        // rebuild with a thermal bath on a random external port
        let n_th = draw.rng.gen_range(0.0..3.0);
        let ports: Vec<Port<f64>> = net
            .ports()
            .iter()
            .filter(|p| !p.internal)
            .enumerate()
            .map(|(k, p)| {
                let bath = if k == 0 { Bath::Thermal(n_th) } else { Bath::Vacuum };
                Port::new(p.label.clone(), net.modes()[p.mode].id.clone(), p.rate, bath)
            })
            .collect();
        net = build_network(net.modes().to_vec(), net.edges().to_vec(), ports).unwrap();

        let delta = TWO_PI * draw.rng.gen_range(-3.0e7..3.0e7);
        let frame = assign_frame(&net, &net.modes()[0].id, delta).unwrap();
        if let Ok(s) = scattering_matrix(&net, &frame) {
            if s.condition > 1.0e6 {
                continue;
            }
            let cov = InputCovariance::from_network(&net, &frame);
            let out = propagate_covariance(&s, &cov).unwrap();
            let m = out.nrows();
            let mut scale: f64 = 1.0;
            for r in 0..m {
                for c in 0..m {
                    scale = scale.max(out[(r, c)].norm());
                    assert!(
                        (out[(r, c)] - out[(c, r)].conj()).norm() < 1e-9 * scale,
                        "covariance not Hermitian"
                    );
                }
            }
            let eig = hermitian_eigenvalues(&out);
            assert!(
                eig[0] > -1e-12 * scale.max(1.0),
                "covariance not PSD: min eig {:.3e}",
                eig[0]
            );
            checked += 1;
        }
    }
}

#[test]
fn determinant_root_count_matches_mode_count() {
    let mut draw = Draw::new(55);
    for k in 0..150 {
        let net = if k % 3 == 0 {
            draw.loop_network(false, false)
        } else {
            draw.tree_network(false, false)
        };
        let report = determinant_roots(&net, &net.modes()[0].id).unwrap();
        assert_eq!(report.roots.len(), net.n_modes());
    }
}

#[test]
fn f32_engine_agrees_with_f64_on_a_circulator() {
    // the whole pipeline is generic over the scalar; spot-check parity
    let hp = std::f64::consts::FRAC_PI_2;
    let m64 = vec![
        Mode::<f64>::from_hz("a", 4.155e9, 14.0e6, 0.0),
        Mode::from_hz("b", 5.756e9, 60.0e6, 0.0),
        Mode::from_hz("c", 7.915e9, 56.0e6, 0.0),
    ];
    let e64 = |i: usize, j: usize, phase: f64| {
        let pump = CouplingEdge::resonant_pump(&m64[i], &m64[j], CouplingKind::Conversion);
        CouplingEdge::from_beta(&m64[i], &m64[j], CouplingKind::Conversion, 0.5, phase, pump)
    };
    let net64 = build_network(m64.clone(), vec![e64(0, 1, hp), e64(1, 2, hp), e64(0, 2, -hp)], vec![]).unwrap();
    let f64_frame = assign_frame(&net64, "a", 0.0).unwrap();
    let (s64, _, _) = scattering_matrix(&net64, &f64_frame).unwrap().external();

    let hp32 = std::f32::consts::FRAC_PI_2;
    let m32 = vec![
        Mode::<f32>::from_hz("a", 4.155e9, 14.0e6, 0.0),
        Mode::from_hz("b", 5.756e9, 60.0e6, 0.0),
        Mode::from_hz("c", 7.915e9, 56.0e6, 0.0),
    ];
    let e32 = |i: usize, j: usize, phase: f32| {
        let pump = CouplingEdge::resonant_pump(&m32[i], &m32[j], CouplingKind::Conversion);
        CouplingEdge::from_beta(&m32[i], &m32[j], CouplingKind::Conversion, 0.5, phase, pump)
    };
    let net32 = build_network(m32.clone(), vec![e32(0, 1, hp32), e32(1, 2, hp32), e32(0, 2, -hp32)], vec![]).unwrap();
    let f32_frame = assign_frame(&net32, "a", 0.0).unwrap();
    let (s32, _, _) = scattering_matrix(&net32, &f32_frame).unwrap().external();

    for r in 0..3 {
        for c in 0..3 {
            let want = s64[(r, c)];
            let got = Complex::new(s32[(r, c)].re as f64, s32[(r, c)].im as f64);
            assert!((want - got).norm() < 1e-4, "f32 drift at ({r},{c})");
        }
    }
}
