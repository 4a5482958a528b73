//! Small dense complex-matrix routines.
//!
//! The mode-coupling matrices handled here are tiny (n ≲ 10), so everything
//! uses direct methods: LU with partial pivoting for solves, determinants and
//! condition estimates, cyclic Jacobi for Hermitian eigenvalues, and an
//! Aberth–Ehrlich iteration for polynomial roots.

use ndarray::Array2;
use num_complex::Complex;
use num_traits::Zero;

use crate::scalar::{lit, Scalar, C};

/// LU factorization (partial pivoting) of a square complex matrix.
pub struct Lu<T: Scalar> {
    lu: Array2<C<T>>,
    piv: Vec<usize>,
    det: C<T>,
    singular: bool,
}

/// Factor `a` with partial pivoting. Never fails; singularity is recorded.
pub fn lu_factor<T: Scalar>(a: &Array2<C<T>>) -> Lu<T> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix must be square");
    let mut lu = a.clone();
    let mut piv = Vec::with_capacity(n);
    let mut det = Complex::new(T::one(), T::zero());
    let mut singular = false;

    for k in 0..n {
        let mut p = k;
        let mut best = lu[(k, k)].norm_sqr();
        for r in k + 1..n {
            let v = lu[(r, k)].norm_sqr();
            if v > best {
                best = v;
                p = r;
            }
        }
        piv.push(p);
        if p != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = tmp;
            }
            det = -det;
        }
        let pivot = lu[(k, k)];
        if pivot.norm_sqr() == T::zero() {
            singular = true;
            det = Complex::zero();
            continue;
        }
        det = det * pivot;
        for r in k + 1..n {
            let m = lu[(r, k)] / pivot;
            lu[(r, k)] = m;
            for j in k + 1..n {
                let s = lu[(k, j)];
                lu[(r, j)] = lu[(r, j)] - m * s;
            }
        }
    }
    Lu {
        lu,
        piv,
        det,
        singular,
    }
}

impl<T: Scalar> Lu<T> {
    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn det(&self) -> C<T> {
        self.det
    }

    /// Solve `A x = b` for each column of `b`.
    pub fn solve(&self, b: &Array2<C<T>>) -> Array2<C<T>> {
        let n = self.lu.nrows();
        assert_eq!(b.nrows(), n);
        let m = b.ncols();
        let mut x = b.clone();
        // apply row permutation
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                for j in 0..m {
                    let tmp = x[(k, j)];
                    x[(k, j)] = x[(p, j)];
                    x[(p, j)] = tmp;
                }
            }
        }
        // forward substitution (unit lower)
        for k in 0..n {
            for r in k + 1..n {
                let m_rk = self.lu[(r, k)];
                for j in 0..m {
                    let s = x[(k, j)];
                    x[(r, j)] = x[(r, j)] - m_rk * s;
                }
            }
        }
        // back substitution
        for k in (0..n).rev() {
            let d = self.lu[(k, k)];
            for j in 0..m {
                x[(k, j)] = x[(k, j)] / d;
            }
            for r in 0..k {
                let m_rk = self.lu[(r, k)];
                for j in 0..m {
                    let s = x[(k, j)];
                    x[(r, j)] = x[(r, j)] - m_rk * s;
                }
            }
        }
        x
    }

    /// Full inverse (solve against the identity).
    pub fn inverse(&self) -> Array2<C<T>> {
        let n = self.lu.nrows();
        let mut eye = Array2::zeros((n, n));
        for k in 0..n {
            eye[(k, k)] = Complex::new(T::one(), T::zero());
        }
        self.solve(&eye)
    }
}

/// Max column absolute sum (induced 1-norm).
pub fn norm_1<T: Scalar>(a: &Array2<C<T>>) -> T {
    let mut best = T::zero();
    for j in 0..a.ncols() {
        let mut s = T::zero();
        for k in 0..a.nrows() {
            s = s + a[(k, j)].norm();
        }
        if s > best {
            best = s;
        }
    }
    best
}

/// 1-norm condition number `‖A‖₁ ‖A⁻¹‖₁` given the inverse.
pub fn cond_1<T: Scalar>(a: &Array2<C<T>>, a_inv: &Array2<C<T>>) -> T {
    norm_1(a) * norm_1(a_inv)
}

/// Conjugate transpose.
pub fn adjoint<T: Scalar>(a: &Array2<C<T>>) -> Array2<C<T>> {
    let mut out = Array2::zeros((a.ncols(), a.nrows()));
    for r in 0..a.nrows() {
        for c in 0..a.ncols() {
            out[(c, r)] = a[(r, c)].conj();
        }
    }
    out
}

/// Eigenvalues of a Hermitian matrix by cyclic Jacobi sweeps, ascending order.
pub fn hermitian_eigenvalues<T: Scalar>(a: &Array2<C<T>>) -> Vec<T> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let mut m = a.clone();
    let scale = norm_1(&m).max(T::one());
    let tol = T::epsilon() * scale * lit::<T>(1e2);

    for _sweep in 0..60 {
        let mut off = T::zero();
        for p in 0..n {
            for q in p + 1..n {
                off = off + m[(p, q)].norm();
            }
        }
        if off < tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let b = m[(p, q)];
                let babs = b.norm();
                if babs <= tol * lit::<T>(1e-3) {
                    continue;
                }
                let u = b / Complex::new(babs, T::zero());
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let tau = (aqq - app) / (babs + babs);
                let t = if tau >= T::zero() {
                    T::one() / (tau + (T::one() + tau * tau).sqrt())
                } else {
                    -T::one() / (-tau + (T::one() + tau * tau).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                let cc = Complex::new(c, T::zero());
                let ss = Complex::new(s, T::zero());
                // left: rows p,q of G†·M
                for k in 0..n {
                    let mp = m[(p, k)];
                    let mq = m[(q, k)];
                    m[(p, k)] = cc * mp - ss * u * mq;
                    m[(q, k)] = ss * u.conj() * mp + cc * mq;
                }
                // right: columns p,q of M·G
                for k in 0..n {
                    let mp = m[(k, p)];
                    let mq = m[(k, q)];
                    m[(k, p)] = cc * mp - ss * u.conj() * mq;
                    m[(k, q)] = ss * u * mp + cc * mq;
                }
            }
        }
    }
    let mut eig: Vec<T> = (0..n).map(|k| m[(k, k)].re).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eig
}

/// Coefficients `c_0..c_n` of a degree-`n` polynomial recovered from samples
/// of `f` on the circle of radius `radius` (inverse DFT on n+1 roots of unity).
pub fn poly_from_samples<T: Scalar>(
    f: impl Fn(C<T>) -> C<T>,
    degree: usize,
    radius: T,
) -> Vec<C<T>> {
    let m = degree + 1;
    let samples: Vec<C<T>> = (0..m)
        .map(|k| {
            let theta = crate::scalar::two_pi::<T>() * lit::<T>(k as f64 / m as f64);
            let z = Complex::new(radius * theta.cos(), radius * theta.sin());
            f(z)
        })
        .collect();
    let mut coeffs = Vec::with_capacity(m);
    let inv_m = T::one() / lit::<T>(m as f64);
    for j in 0..m {
        let mut acc: C<T> = Complex::zero();
        for (k, s) in samples.iter().enumerate() {
            let theta = -crate::scalar::two_pi::<T>() * lit::<T>((j * k % m) as f64 / m as f64);
            acc = acc + s * Complex::new(theta.cos(), theta.sin());
        }
        let rj = radius.powi(j as i32);
        coeffs.push(acc * inv_m / Complex::new(rj, T::zero()));
    }
    coeffs
}

fn horner<T: Scalar>(coeffs: &[C<T>], z: C<T>) -> C<T> {
    let mut acc: C<T> = Complex::zero();
    for &c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

fn horner_deriv<T: Scalar>(coeffs: &[C<T>], z: C<T>) -> C<T> {
    let mut acc: C<T> = Complex::zero();
    for (j, &c) in coeffs.iter().enumerate().skip(1).rev() {
        acc = acc * z + c * Complex::new(lit::<T>(j as f64), T::zero());
    }
    acc
}

/// All roots of the polynomial `Σ coeffs[j] z^j` via Aberth–Ehrlich iteration.
///
/// Trailing coefficients negligible relative to the largest are dropped, so
/// the returned vector has length equal to the effective degree.
pub fn poly_roots<T: Scalar>(coeffs: &[C<T>]) -> Vec<C<T>> {
    let max_mag = coeffs.iter().fold(T::zero(), |m, c| m.max(c.norm()));
    if max_mag == T::zero() {
        return Vec::new();
    }
    let cutoff = max_mag * T::epsilon() * lit::<T>(1e3);
    let mut deg = coeffs.len() - 1;
    while deg > 0 && coeffs[deg].norm() <= cutoff {
        deg -= 1;
    }
    if deg == 0 {
        return Vec::new();
    }
    let c: Vec<C<T>> = coeffs[..=deg].to_vec();
    let lead = c[deg];

    // Cauchy bound for initial circle
    let mut bound = T::zero();
    for j in 0..deg {
        bound = bound.max((c[j] / lead).norm());
    }
    let r0 = T::one() + bound;

    let mut z: Vec<C<T>> = (0..deg)
        .map(|k| {
            let theta = crate::scalar::two_pi::<T>() * lit::<T>(k as f64 / deg as f64)
                + lit::<T>(0.3964);
            Complex::new(r0 * theta.cos(), r0 * theta.sin())
        })
        .collect();

    let tol = T::epsilon() * lit::<T>(64.0);
    for _iter in 0..400 {
        let mut max_step = T::zero();
        for k in 0..deg {
            let zk = z[k];
            let p = horner(&c, zk);
            let dp = horner_deriv(&c, zk);
            if p.norm() == T::zero() {
                continue;
            }
            let w = if dp.norm_sqr() > T::zero() {
                p / dp
            } else {
                Complex::new(tol, tol)
            };
            let mut sum: C<T> = Complex::zero();
            for j in 0..deg {
                if j != k {
                    let d = zk - z[j];
                    if d.norm_sqr() > T::zero() {
                        sum = sum + Complex::new(T::one(), T::zero()) / d;
                    }
                }
            }
            let denom = Complex::new(T::one(), T::zero()) - w * sum;
            let step = if denom.norm_sqr() > T::zero() { w / denom } else { w };
            z[k] = zk - step;
            let rel = step.norm() / (T::one() + z[k].norm());
            max_step = max_step.max(rel);
        }
        if max_step < tol {
            break;
        }
    }
    z
}
