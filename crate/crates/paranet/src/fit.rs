//! Weighted least squares for model fitting.
//!
//! A damped Gauss–Newton iteration (Levenberg-style λ adaptation on the
//! Marquardt-scaled normal equations) with forward finite-difference
//! Jacobians drives both scattering-sweep fits and the shot-noise system
//! calibration. Deterministic: no randomness, fixed iteration order.

use crate::frame::{assign_frame_by_index, wrap_angle};
use crate::network::{build_network, ModeNetwork, Port};
use crate::scalar::{hz_to_rad, lit, Scalar};
use crate::scattering::scattering_matrix;

#[derive(Debug, Clone, PartialEq)]
pub enum FitError {
    NonConvergence { iterations: usize, residual_norm: f64 },
    /// Singular normal equations: some parameter has no influence on the
    /// residuals, or parameters are fully degenerate.
    DegenerateProblem,
    InvalidProblem(String),
    Parse(String),
}

impl std::fmt::Display for FitError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FitError::NonConvergence {
                iterations,
                residual_norm,
            } => write!(
                f,
                "no convergence after {iterations} iterations (residual norm {residual_norm:.3e})"
            ),
            FitError::DegenerateProblem => write!(f, "singular normal equations"),
            FitError::InvalidProblem(msg) => write!(f, "invalid fit problem: {msg}"),
            FitError::Parse(msg) => write!(f, "cannot parse sweep data: {msg}"),
        }
    }
}

impl std::error::Error for FitError {}

#[derive(Debug, Clone)]
pub struct LeastSquaresOptions<T: Scalar> {
    pub max_iterations: usize,
    /// Relative finite-difference step for the Jacobian.
    pub relative_step: T,
    pub initial_lambda: T,
    /// Relative step size below which the iteration is converged.
    pub step_tolerance: T,
    /// Relative cost reduction below which the iteration is converged.
    pub cost_tolerance: T,
}

impl<T: Scalar> Default for LeastSquaresOptions<T> {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            relative_step: lit(1e-7),
            initial_lambda: lit(1e-3),
            step_tolerance: lit(1e-10),
            cost_tolerance: lit(1e-14),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitOutcome<T: Scalar> {
    pub params: Vec<T>,
    /// √(Σ r²) at the solution.
    pub residual_norm: T,
    pub iterations: usize,
    pub converged: bool,
    /// Per-parameter standard error from the diagonal of (JᵀJ)⁻¹·s².
    pub param_stderr: Vec<T>,
}

fn solve_spd<T: Scalar>(a: &[Vec<T>], b: &[T]) -> Option<Vec<T>> {
    let p = b.len();
    let mut m: Vec<Vec<T>> = a.to_vec();
    let mut rhs = b.to_vec();
    for k in 0..p {
        let mut piv = k;
        let mut best = m[k][k].abs();
        for r in k + 1..p {
            if m[r][k].abs() > best {
                best = m[r][k].abs();
                piv = r;
            }
        }
        if best == T::zero() || !best.is_finite() {
            return None;
        }
        m.swap(k, piv);
        rhs.swap(k, piv);
        for r in k + 1..p {
            let f = m[r][k] / m[k][k];
            for c in k..p {
                m[r][c] = m[r][c] - f * m[k][c];
            }
            rhs[r] = rhs[r] - f * rhs[k];
        }
    }
    let mut x = vec![T::zero(); p];
    for k in (0..p).rev() {
        let mut acc = rhs[k];
        for c in k + 1..p {
            acc = acc - m[k][c] * x[c];
        }
        x[k] = acc / m[k][k];
    }
    Some(x)
}

fn clamp_to<T: Scalar>(theta: &mut [T], bounds: &[(T, T)]) {
    for (t, &(lo, hi)) in theta.iter_mut().zip(bounds) {
        *t = t.max(lo).min(hi);
    }
}

/// Minimize Σ r(θ)² subject to box bounds. The residual closure may return
/// `None` for parameter values where the model is undefined; such steps are
/// rejected.
///
/// Parameters are rescaled internally by max(|θ₀ᵢ|, 1), so wildly different
/// magnitudes (a chain gain of 1e7 next to a temperature of 0.1 K) are fine.
pub fn least_squares<T: Scalar, F>(
    residual_fn: F,
    theta0: &[T],
    bounds: &[(T, T)],
    opts: &LeastSquaresOptions<T>,
) -> Result<FitOutcome<T>, FitError>
where
    F: Fn(&[T]) -> Option<Vec<T>>,
{
    let p = theta0.len();
    if p == 0 {
        return Err(FitError::InvalidProblem("no free parameters".into()));
    }
    if bounds.len() != p {
        return Err(FitError::InvalidProblem(
            "bounds length does not match parameter count".into(),
        ));
    }
    for &(lo, hi) in bounds {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(FitError::InvalidProblem("bounds must be finite with lo <= hi".into()));
        }
    }

    let scale: Vec<T> = theta0.iter().map(|t| t.abs().max(T::one())).collect();
    let sbounds: Vec<(T, T)> = bounds
        .iter()
        .zip(&scale)
        .map(|(&(lo, hi), &s)| (lo / s, hi / s))
        .collect();
    let physical = |s: &[T]| -> Vec<T> { s.iter().zip(&scale).map(|(&x, &sc)| x * sc).collect() };
    let eval = |s: &[T]| -> Option<Vec<T>> { residual_fn(&physical(s)) };

    let mut theta: Vec<T> = theta0.iter().zip(&scale).map(|(&t, &s)| t / s).collect();
    clamp_to(&mut theta, &sbounds);
    let mut resid = eval(&theta).ok_or_else(|| {
        FitError::InvalidProblem("residuals undefined at the initial guess".into())
    })?;
    let m = resid.len();
    if m < p {
        return Err(FitError::InvalidProblem(format!(
            "{m} residuals cannot determine {p} parameters"
        )));
    }
    let dot = |a: &[T], b: &[T]| a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y);
    let mut cost = dot(&resid, &resid);
    let mut lambda = opts.initial_lambda;
    let lambda_cap = lit::<T>(1e12);
    let mut converged = false;
    let mut iterations = 0;

    let jacobian = |theta: &[T], r0: &[T]| -> Result<Vec<Vec<T>>, FitError> {
        let mut jac = vec![vec![T::zero(); p]; r0.len()];
        for pi in 0..p {
            let base = theta[pi];
            let mut h = opts.relative_step * base.abs().max(T::one());
            let (lo, hi) = sbounds[pi];
            if base + h > hi {
                h = -h;
            }
            let mut trial = theta.to_vec();
            trial[pi] = (base + h).max(lo).min(hi);
            let mut dh = trial[pi] - base;
            let mut perturbed = eval(&trial);
            if perturbed.is_none() || dh == T::zero() {
                trial[pi] = (base - h).max(lo).min(hi);
                dh = trial[pi] - base;
                perturbed = eval(&trial);
            }
            let perturbed = perturbed.ok_or_else(|| {
                FitError::InvalidProblem(format!(
                    "residuals undefined near the working point (parameter {pi})"
                ))
            })?;
            if dh == T::zero() {
                continue; // pinned by equal bounds: zero column, frozen below
            }
            for (row, (&rp, &r)) in perturbed.iter().zip(r0).enumerate() {
                jac[row][pi] = (rp - r) / dh;
            }
        }
        Ok(jac)
    };

    while iterations < opts.max_iterations && !converged {
        iterations += 1;
        let jac = jacobian(&theta, &resid)?;
        let mut jtj = vec![vec![T::zero(); p]; p];
        let mut jtr = vec![T::zero(); p];
        for row in 0..m {
            for a in 0..p {
                jtr[a] = jtr[a] + jac[row][a] * resid[row];
                for b in a..p {
                    jtj[a][b] = jtj[a][b] + jac[row][a] * jac[row][b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                jtj[a][b] = jtj[b][a];
            }
        }
        for k in 0..p {
            if jtj[k][k] <= T::zero() {
                let (lo, hi) = sbounds[k];
                let at_bound = (theta[k] - lo).abs() <= opts.relative_step
                    || (hi - theta[k]).abs() <= opts.relative_step;
                if at_bound {
                    // insensitive because it is pinned at a bound: freeze it
                    jtj[k][k] = T::one();
                    jtr[k] = T::zero();
                } else {
                    return Err(FitError::DegenerateProblem);
                }
            }
        }

        loop {
            let mut damped = jtj.clone();
            for k in 0..p {
                damped[k][k] = damped[k][k] * (T::one() + lambda);
            }
            let neg_grad: Vec<T> = jtr.iter().map(|&g| -g).collect();
            let step = match solve_spd(&damped, &neg_grad) {
                Some(s) => s,
                None => {
                    lambda = lambda * lit(10.0);
                    if lambda > lambda_cap {
                        return Err(FitError::DegenerateProblem);
                    }
                    continue;
                }
            };
            // cap the scaled step so one iteration cannot throw a parameter
            // far outside its working range
            let overshoot = step
                .iter()
                .zip(&theta)
                .map(|(&s, &t)| s.abs() / (T::one() + t.abs()))
                .fold(T::zero(), T::max);
            let shrink = if overshoot > lit(2.0) {
                lit::<T>(2.0) / overshoot
            } else {
                T::one()
            };
            let mut trial: Vec<T> = theta
                .iter()
                .zip(&step)
                .map(|(&t, &s)| t + s * shrink)
                .collect();
            clamp_to(&mut trial, &sbounds);
            let rel_step = trial
                .iter()
                .zip(&theta)
                .map(|(&t1, &t0)| (t1 - t0).abs() / (t0.abs() + opts.relative_step))
                .fold(T::zero(), T::max);

            match eval(&trial) {
                Some(rn) => {
                    let cn = dot(&rn, &rn);
                    if cn < cost && cn.is_finite() {
                        let reduction = (cost - cn) / cost.max(lit(1e-300));
                        theta = trial;
                        resid = rn;
                        cost = cn;
                        lambda = (lambda * lit(0.3)).max(lit(1e-14));
                        // a vanishing reduction only signals convergence when
                        // the step was essentially undamped Gauss-Newton
                        if rel_step < opts.step_tolerance
                            || (reduction < opts.cost_tolerance && lambda < lit(1e-8))
                        {
                            converged = true;
                        }
                        break;
                    }
                    if rel_step < opts.step_tolerance {
                        converged = true;
                        break;
                    }
                    lambda = lambda * lit(10.0);
                    if lambda > lambda_cap {
                        break; // stalled; retry with a fresh Jacobian
                    }
                }
                None => {
                    lambda = lambda * lit(10.0);
                    if lambda > lambda_cap {
                        break;
                    }
                }
            }
        }
    }

    if !converged {
        return Err(FitError::NonConvergence {
            iterations,
            residual_norm: cost.sqrt().to_f64().unwrap_or(f64::NAN),
        });
    }

    // diagnostics at the solution
    let jac = jacobian(&theta, &resid)?;
    let mut jtj = vec![vec![T::zero(); p]; p];
    for row in 0..m {
        for a in 0..p {
            for b in 0..p {
                jtj[a][b] = jtj[a][b] + jac[row][a] * jac[row][b];
            }
        }
    }
    let s2 = if m > p {
        cost / lit::<T>((m - p) as f64)
    } else {
        T::zero()
    };
    let mut param_stderr = vec![T::nan(); p];
    for k in 0..p {
        let mut e = vec![T::zero(); p];
        e[k] = T::one();
        if let Some(col) = solve_spd(&jtj, &e) {
            if col[k] >= T::zero() {
                param_stderr[k] = (col[k] * s2).sqrt() * scale[k];
            }
        }
    }

    Ok(FitOutcome {
        params: physical(&theta),
        residual_norm: cost.sqrt(),
        iterations,
        converged,
        param_stderr,
    })
}

/// A free parameter of a scattering-sweep fit.
#[derive(Debug, Clone, PartialEq)]
pub enum FitParam {
    /// Mode resonance frequency (rad/s).
    Omega(String),
    /// Mode total linewidth κ (rad/s), at fixed coupling efficiency.
    Kappa(String),
    /// Mode coupling efficiency η = κ_ext/κ, at fixed total κ.
    Eta(String),
    /// Normalized coupling magnitude |β| of an edge.
    BetaMag(String, String),
    /// Pump phase of an edge (rad).
    Phase(String, String),
}

impl std::fmt::Display for FitParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FitParam::Omega(m) => write!(f, "omega({m})"),
            FitParam::Kappa(m) => write!(f, "kappa({m})"),
            FitParam::Eta(m) => write!(f, "eta({m})"),
            FitParam::BetaMag(a, b) => write!(f, "beta({a},{b})"),
            FitParam::Phase(a, b) => write!(f, "phase({a},{b})"),
        }
    }
}

/// What a measured sweep column records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    /// 20·log10|S|.
    MagnitudeDb,
    /// arg S in degrees.
    PhaseDeg,
    Real,
    Imag,
}

#[derive(Debug, Clone)]
pub struct SweepColumn<T: Scalar> {
    pub out_port: String,
    pub in_port: String,
    pub kind: ColumnKind,
    pub values: Vec<T>,
}

/// Measured sweep: a detuning axis plus one column per recorded quantity.
#[derive(Debug, Clone)]
pub struct SweepData<T: Scalar> {
    pub axis_hz: Vec<T>,
    pub columns: Vec<SweepColumn<T>>,
}

/// Parse delimited text: header row `axis_Hz` then `S_<out>_<in>_<kind>`
/// column names (compact `S_ba_dB` works for single-character ports), with
/// kind one of `dB`, `re`, `im`. Comma or whitespace delimited; `#` comments.
pub fn parse_sweep_data<T: Scalar>(text: &str) -> Result<SweepData<T>, FitError> {
    let mut lines = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty());
    let header = lines
        .next()
        .ok_or_else(|| FitError::Parse("empty input".into()))?;
    let split = |l: &str| -> Vec<String> {
        if l.contains(',') {
            l.split(',').map(|t| t.trim().to_string()).collect()
        } else {
            l.split_whitespace().map(|t| t.to_string()).collect()
        }
    };
    let head = split(header);
    if head.len() < 2 {
        return Err(FitError::Parse("need an axis column and at least one S column".into()));
    }
    let mut columns: Vec<SweepColumn<T>> = Vec::new();
    for name in &head[1..] {
        let parts: Vec<&str> = name.split('_').collect();
        if parts.len() < 3 || parts[0] != "S" {
            return Err(FitError::Parse(format!(
                "column `{name}` is not of the form S_<out>_<in>_<kind>"
            )));
        }
        let kind = match *parts.last().unwrap() {
            "dB" | "db" => ColumnKind::MagnitudeDb,
            "deg" => ColumnKind::PhaseDeg,
            "re" => ColumnKind::Real,
            "im" => ColumnKind::Imag,
            other => {
                return Err(FitError::Parse(format!(
                    "unknown column kind `{other}` in `{name}`"
                )))
            }
        };
        let middle = &parts[1..parts.len() - 1];
        let (out_port, in_port) = match middle.len() {
            1 if middle[0].chars().count() == 2 => {
                let mut ch = middle[0].chars();
                (ch.next().unwrap().to_string(), ch.next().unwrap().to_string())
            }
            2 => (middle[0].to_string(), middle[1].to_string()),
            _ => {
                return Err(FitError::Parse(format!(
                    "cannot split `{name}` into out/in ports"
                )))
            }
        };
        columns.push(SweepColumn {
            out_port,
            in_port,
            kind,
            values: Vec::new(),
        });
    }
    let mut axis_hz = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let toks = split(line);
        if toks.len() != head.len() {
            return Err(FitError::Parse(format!(
                "row {} has {} fields, expected {}",
                lineno + 2,
                toks.len(),
                head.len()
            )));
        }
        let parse = |t: &str| -> Result<T, FitError> {
            t.parse::<f64>()
                .map(lit::<T>)
                .map_err(|_| FitError::Parse(format!("bad number `{t}` on row {}", lineno + 2)))
        };
        axis_hz.push(parse(&toks[0])?);
        for (c, col) in columns.iter_mut().enumerate() {
            col.values.push(parse(&toks[c + 1])?);
        }
    }
    if axis_hz.is_empty() {
        return Err(FitError::Parse("no data rows".into()));
    }
    Ok(SweepData { axis_hz, columns })
}

/// A sweep-fitting problem: model network (initial guess), measured data,
/// free parameters with bounds.
#[derive(Debug, Clone)]
pub struct FitProblem<T: Scalar> {
    pub network: ModeNetwork<T>,
    pub probe: String,
    pub data: SweepData<T>,
    pub free: Vec<FitParam>,
    pub bounds: Vec<(T, T)>,
    /// Per-column weights; uniform when absent.
    pub weights: Option<Vec<T>>,
    pub options: LeastSquaresOptions<T>,
}

#[derive(Debug, Clone)]
pub struct FitReport<T: Scalar> {
    pub params: Vec<(FitParam, T)>,
    pub param_stderr: Vec<T>,
    pub residual_norm: T,
    pub iterations: usize,
    pub converged: bool,
    /// The network at the fitted parameter values.
    pub network: ModeNetwork<T>,
}

fn param_value<T: Scalar>(network: &ModeNetwork<T>, p: &FitParam) -> Result<T, FitError> {
    let mode = |id: &str| {
        network
            .mode_index(id)
            .map(|k| &network.modes()[k])
            .ok_or_else(|| FitError::InvalidProblem(format!("unknown mode `{id}`")))
    };
    let edge = |a: &str, b: &str| {
        network
            .edge_index(a, b)
            .ok_or_else(|| FitError::InvalidProblem(format!("no edge between `{a}` and `{b}`")))
    };
    Ok(match p {
        FitParam::Omega(id) => mode(id)?.omega,
        FitParam::Kappa(id) => mode(id)?.kappa(),
        FitParam::Eta(id) => mode(id)?.eta_ext(),
        FitParam::BetaMag(a, b) => {
            let k = edge(a, b)?;
            let (i, j) = network.edge_endpoints()[k];
            let two = T::one() + T::one();
            network.edges()[k].magnitude
                / (two * (network.modes()[i].kappa() * network.modes()[j].kappa()).sqrt())
        }
        FitParam::Phase(a, b) => network.edges()[edge(a, b)?].phase,
    })
}

fn apply_params<T: Scalar>(
    base: &ModeNetwork<T>,
    free: &[FitParam],
    theta: &[T],
) -> Option<ModeNetwork<T>> {
    let mut modes = base.modes().to_vec();
    let old_kext: Vec<T> = modes.iter().map(|m| m.kappa_ext).collect();

    // mode parameters first, then edge parameters (β needs the final κs)
    for (p, &v) in free.iter().zip(theta) {
        match p {
            FitParam::Omega(id) => {
                let k = base.mode_index(id)?;
                modes[k].omega = v;
            }
            FitParam::Kappa(id) => {
                let k = base.mode_index(id)?;
                let eta = modes[k].eta_ext();
                modes[k].kappa_ext = v * eta;
                modes[k].kappa_int = v * (T::one() - eta);
            }
            FitParam::Eta(id) => {
                let k = base.mode_index(id)?;
                let kappa = modes[k].kappa();
                modes[k].kappa_ext = v * kappa;
                modes[k].kappa_int = (T::one() - v) * kappa;
            }
            _ => {}
        }
    }
    let mut edges = base.edges().to_vec();
    for (p, &v) in free.iter().zip(theta) {
        match p {
            FitParam::BetaMag(a, b) => {
                let k = base.edge_index(a, b)?;
                let (i, j) = base.edge_endpoints()[k];
                let two = T::one() + T::one();
                edges[k].magnitude = two * v * (modes[i].kappa() * modes[j].kappa()).sqrt();
            }
            FitParam::Phase(a, b) => {
                let k = base.edge_index(a, b)?;
                edges[k].phase = v;
            }
            _ => {}
        }
    }
    // rescale declared external ports with any κ_ext change
    let ports: Vec<Port<T>> = base
        .ports()
        .iter()
        .filter(|p| !p.internal)
        .map(|p| {
            let factor = if old_kext[p.mode] > T::zero() {
                modes[p.mode].kappa_ext / old_kext[p.mode]
            } else {
                T::one()
            };
            Port::new(
                p.label.clone(),
                base.modes()[p.mode].id.clone(),
                p.rate * factor,
                p.bath,
            )
        })
        .collect();
    build_network(modes, edges, ports).ok()
}

/// Fit the model to measured sweep data. Residuals are linear |S| for
/// magnitude columns and Re/Im parts for complex columns, weighted per
/// column when weights are given.
pub fn fit_sweep<T: Scalar>(problem: &FitProblem<T>) -> Result<FitReport<T>, FitError> {
    if problem.free.is_empty() {
        return Err(FitError::InvalidProblem("no free parameters".into()));
    }
    if problem.bounds.len() != problem.free.len() {
        return Err(FitError::InvalidProblem(
            "bounds length does not match the free-parameter list".into(),
        ));
    }
    let n_pts = problem.data.axis_hz.len();
    let n_cols = problem.data.columns.len();
    if n_pts * n_cols < problem.free.len() {
        return Err(FitError::InvalidProblem(
            "fewer data values than free parameters".into(),
        ));
    }
    if let Some(w) = &problem.weights {
        if w.len() != n_cols {
            return Err(FitError::InvalidProblem(
                "need one weight per data column".into(),
            ));
        }
    }
    let probe_idx = problem
        .network
        .mode_index(&problem.probe)
        .ok_or_else(|| FitError::InvalidProblem(format!("unknown probe `{}`", problem.probe)))?;

    // resolve column ports against the external port labels once
    let ext = problem.network.external_port_indices();
    let ext_labels: Vec<String> = ext
        .iter()
        .map(|&k| problem.network.ports()[k].label.clone())
        .collect();
    let mut col_ports = Vec::with_capacity(n_cols);
    for col in &problem.data.columns {
        let o = ext_labels
            .iter()
            .position(|l| *l == col.out_port)
            .ok_or_else(|| FitError::InvalidProblem(format!("unknown port `{}`", col.out_port)))?;
        let i = ext_labels
            .iter()
            .position(|l| *l == col.in_port)
            .ok_or_else(|| FitError::InvalidProblem(format!("unknown port `{}`", col.in_port)))?;
        col_ports.push((o, i));
    }
    // observed values in residual space
    let twenty = lit::<T>(20.0);
    let observed: Vec<Vec<T>> = problem
        .data
        .columns
        .iter()
        .map(|col| match col.kind {
            ColumnKind::MagnitudeDb => col
                .values
                .iter()
                .map(|&v| lit::<T>(10.0).powf(v / twenty))
                .collect(),
            ColumnKind::PhaseDeg => col.values.iter().map(|&v| v.to_radians()).collect(),
            _ => col.values.clone(),
        })
        .collect();

    let theta0: Vec<T> = problem
        .free
        .iter()
        .map(|p| param_value(&problem.network, p))
        .collect::<Result<_, _>>()?;

    let residual_fn = |theta: &[T]| -> Option<Vec<T>> {
        let net = apply_params(&problem.network, &problem.free, theta)?;
        let mut out = Vec::with_capacity(n_pts * n_cols);
        for (k, &f) in problem.data.axis_hz.iter().enumerate() {
            let frame = assign_frame_by_index(&net, probe_idx, hz_to_rad(f));
            let full = scattering_matrix(&net, &frame).ok()?;
            let (s, _, _) = full.external();
            for (c, col) in problem.data.columns.iter().enumerate() {
                let (o, i) = col_ports[c];
                let w = problem
                    .weights
                    .as_ref()
                    .map(|w| w[c])
                    .unwrap_or_else(T::one);
                let resid = match col.kind {
                    ColumnKind::MagnitudeDb => s[(o, i)].norm() - observed[c][k],
                    ColumnKind::PhaseDeg => wrap_angle(s[(o, i)].arg() - observed[c][k]),
                    ColumnKind::Real => s[(o, i)].re - observed[c][k],
                    ColumnKind::Imag => s[(o, i)].im - observed[c][k],
                };
                out.push(w * resid);
            }
        }
        Some(out)
    };

    let outcome = least_squares(residual_fn, &theta0, &problem.bounds, &problem.options)?;

    let mut params = Vec::with_capacity(problem.free.len());
    for (p, &v) in problem.free.iter().zip(&outcome.params) {
        let v = match p {
            FitParam::Phase(_, _) => wrap_angle(v),
            _ => v,
        };
        params.push((p.clone(), v));
    }
    let network = apply_params(&problem.network, &problem.free, &outcome.params)
        .ok_or(FitError::DegenerateProblem)?;
    Ok(FitReport {
        params,
        param_stderr: outcome.param_stderr,
        residual_norm: outcome.residual_norm,
        iterations: outcome.iterations,
        converged: outcome.converged,
        network,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{CouplingEdge, CouplingKind, Mode};
    use crate::scattering::sweep_detuning;
    use rand::{Rng, SeedableRng};

    #[test]
    fn rosenbrock_valley_minimized() {
        // residuals (1−x, 10(y−x²)) → minimum at (1, 1)
        let f = |t: &[f64]| Some(vec![1.0 - t[0], 10.0 * (t[1] - t[0] * t[0])]);
        let out = least_squares(
            f,
            &[-1.2, 1.0],
            &[(-10.0, 10.0), (-10.0, 10.0)],
            &LeastSquaresOptions::default(),
        )
        .unwrap();
        assert!(out.converged);
        assert!((out.params[0] - 1.0).abs() < 1e-7);
        assert!((out.params[1] - 1.0).abs() < 1e-7);
        assert!(out.residual_norm < 1e-7);
    }

    #[test]
    fn degenerate_parameter_detected() {
        // second parameter has no influence
        let f = |t: &[f64]| Some(vec![t[0] - 3.0, 2.0 * t[0] - 6.0]);
        let r = least_squares(
            f,
            &[0.0, 0.0],
            &[(-10.0, 10.0), (-10.0, 10.0)],
            &LeastSquaresOptions::default(),
        );
        assert!(matches!(r, Err(FitError::DegenerateProblem)));
    }

    fn converter_net(beta: f64, eta_a: f64) -> ModeNetwork<f64> {
        let kappa_a = 2.0 * std::f64::consts::PI * 14.0e6;
        let kappa_b = 2.0 * std::f64::consts::PI * 64.0e6;
        let modes = vec![
            Mode::new("a", 2.0 * std::f64::consts::PI * 4.155e9, kappa_a * eta_a, kappa_a * (1.0 - eta_a)),
            Mode::new("b", 2.0 * std::f64::consts::PI * 5.756e9, kappa_b * 0.95, kappa_b * 0.05),
        ];
        let pump = CouplingEdge::resonant_pump(&modes[0], &modes[1], CouplingKind::Conversion);
        let edges = vec![CouplingEdge::from_beta(
            &modes[0],
            &modes[1],
            CouplingKind::Conversion,
            beta,
            0.0,
            pump,
        )];
        build_network(modes, edges, vec![]).unwrap()
    }

    fn synth_data(net: &ModeNetwork<f64>, noise: f64, seed: u64) -> SweepData<f64> {
        let sweep = sweep_detuning(net, "a", -4.0e7, 4.0e7, 81).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut columns = Vec::new();
        for (o, i, name) in [(0usize, 0usize, ("a", "a")), (1, 0, ("b", "a"))] {
            let values: Vec<f64> = sweep
                .matrices
                .iter()
                .map(|s| {
                    let mag = s[(o, i)].norm() * (1.0 + noise * rng.gen_range(-1.0..1.0));
                    20.0 * mag.max(1e-12).log10()
                })
                .collect();
            columns.push(SweepColumn {
                out_port: name.0.to_string(),
                in_port: name.1.to_string(),
                kind: ColumnKind::MagnitudeDb,
                values,
            });
        }
        SweepData {
            axis_hz: sweep.axis_values.clone(),
            columns,
        }
    }

    #[test]
    fn noiseless_fit_recovers_exactly() {
        let truth = converter_net(0.37, 0.95);
        let data = synth_data(&truth, 0.0, 0);
        let guess = converter_net(0.30, 0.85);
        let report = fit_sweep(&FitProblem {
            network: guess,
            probe: "a".into(),
            data,
            free: vec![FitParam::BetaMag("a".into(), "b".into()), FitParam::Eta("a".into())],
            bounds: vec![(0.01, 0.49), (0.5, 1.0)],
            weights: None,
            options: LeastSquaresOptions::default(),
        })
        .unwrap();
        assert!(report.converged);
        assert!(report.residual_norm < 1e-8, "residual {}", report.residual_norm);
        assert!((report.params[0].1 - 0.37).abs() < 1e-6);
        assert!((report.params[1].1 - 0.95).abs() < 1e-6);
    }

    #[test]
    fn noisy_fit_recovers_within_two_percent() {
        let truth = converter_net(0.37, 0.95);
        let data = synth_data(&truth, 0.005, 42);
        let guess = converter_net(0.30, 0.88);
        let report = fit_sweep(&FitProblem {
            network: guess,
            probe: "a".into(),
            data,
            free: vec![FitParam::BetaMag("a".into(), "b".into()), FitParam::Eta("a".into())],
            bounds: vec![(0.01, 0.49), (0.5, 1.0)],
            weights: None,
            options: LeastSquaresOptions::default(),
        })
        .unwrap();
        assert!((report.params[0].1 - 0.37).abs() / 0.37 < 0.02);
        assert!((report.params[1].1 - 0.95).abs() / 0.95 < 0.02);
    }

    #[test]
    fn fit_invariant_under_row_reordering() {
        let truth = converter_net(0.37, 0.95);
        let mut data = synth_data(&truth, 0.005, 7);
        let guess = converter_net(0.32, 0.9);
        let problem = FitProblem {
            network: guess.clone(),
            probe: "a".into(),
            data: data.clone(),
            free: vec![FitParam::BetaMag("a".into(), "b".into())],
            bounds: vec![(0.01, 0.49)],
            weights: None,
            options: LeastSquaresOptions::default(),
        };
        let r1 = fit_sweep(&problem).unwrap();

        // reverse the rows
        data.axis_hz.reverse();
        for c in &mut data.columns {
            c.values.reverse();
        }
        let r2 = fit_sweep(&FitProblem { data, ..problem }).unwrap();
        assert!((r1.params[0].1 - r2.params[0].1).abs() < 1e-6);
    }

    #[test]
    fn parse_round_trip_and_errors() {
        let text = "delta_Hz,S_aa_dB,S_ba_dB\n-1e6,-10.0,-0.5\n0,-30.0,-0.1\n1e6,-10.0,-0.5\n";
        let data = parse_sweep_data::<f64>(text).unwrap();
        assert_eq!(data.axis_hz.len(), 3);
        assert_eq!(data.columns.len(), 2);
        assert_eq!(data.columns[1].out_port, "b");
        assert_eq!(data.columns[1].in_port, "a");
        assert_eq!(data.columns[1].kind, ColumnKind::MagnitudeDb);

        let ws = "delta_Hz S_out1_in2_re\n0 0.5\n1e6 0.4\n";
        let data = parse_sweep_data::<f64>(ws).unwrap();
        assert_eq!(data.columns[0].out_port, "out1");
        assert_eq!(data.columns[0].in_port, "in2");
        assert_eq!(data.columns[0].kind, ColumnKind::Real);

        assert!(parse_sweep_data::<f64>("").is_err());
        assert!(parse_sweep_data::<f64>("x,S_aa_dB\n1,2\n1").is_err());
        assert!(parse_sweep_data::<f64>("x,T_aa_dB\n1,2\n").is_err());
    }

    #[test]
    fn matched_converter_fit_reproduces_return_loss() {
        // data generated at β = 1/2: fittedβ ≈ 0.5 and deep on-resonance match
        let truth = converter_net(0.5, 0.97);
        let data = synth_data(&truth, 0.002, 3);
        let guess = converter_net(0.42, 0.9);
        let report = fit_sweep(&FitProblem {
            network: guess,
            probe: "a".into(),
            data,
            free: vec![FitParam::BetaMag("a".into(), "b".into()), FitParam::Eta("a".into())],
            bounds: vec![(0.01, 0.6), (0.5, 1.0)],
            weights: None,
            options: LeastSquaresOptions::default(),
        })
        .unwrap();
        assert!((report.params[0].1 - 0.5).abs() < 0.01);
        // fitted network: return loss at resonance ≥ 30 dB
        let frame = crate::frame::assign_frame(&report.network, "a", 0.0).unwrap();
        let (s, _, _) = scattering_matrix(&report.network, &frame).unwrap().external();
        let return_loss_db = -20.0 * s[(0, 0)].norm().log10();
        assert!(return_loss_db > 25.0, "return loss {return_loss_db} dB");
    }
}
