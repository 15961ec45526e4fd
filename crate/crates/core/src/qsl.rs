//! Scalar functionals of a trajectory: fidelity, Bures angle, the operator
//! norm of the generator, the averaged action Λ, the QSL time and ratio,
//! and the amplitude-damping specializations (BLP measure, closed-form
//! ratios).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::Tolerances;
use crate::propagator::{generator_from_rates, propagate_ode, TimeGrid, Trajectory};
use crate::rates::RateModel;
use crate::state::{hermitian_eigenvalues, pure_state_from_a, ComplexMatrix2, DensityMatrix, PureStateParam};

/// `det ρ` below which a state is treated as pure.
pub const PURITY_DET_TOL: f64 = 1e-10;
/// Relative accuracy target for [`lambda_op`].
pub const LAMBDA_REL_TOL: f64 = 1e-10;
const LAMBDA_MAX_DEPTH: u32 = 30;
/// Fidelity loss below which a zero-action evolution counts as stationary.
pub const STATIONARY_TOL: f64 = 1e-12;

/// Uhlmann fidelity `(Tr √(√ρt ρ0 √ρt))²`.
///
/// Pure `ρ0` reduces to `⟨Φ0|ρt|Φ0⟩ = Tr(ρ0 ρt)`; otherwise the qubit
/// closed form `Tr(ρ0 ρt) + 2√(det ρ0 det ρt)` is used.
pub fn fidelity(rho0: &DensityMatrix, rhot: &DensityMatrix) -> f64 {
    let overlap = (*rho0.matrix() * *rhot.matrix()).trace().re;
    let f = if rho0.det() <= PURITY_DET_TOL {
        overlap
    } else {
        overlap + 2.0 * (rho0.det().max(0.0) * rhot.det().max(0.0)).sqrt()
    };
    f.clamp(0.0, 1.0)
}

/// `arccos √⟨Φ0|ρt|Φ0⟩` for a pure `ρ0`, in `[0, π/2]`.
pub fn bures_angle(rho0: &DensityMatrix, rhot: &DensityMatrix) -> Result<f64> {
    if rho0.det() > PURITY_DET_TOL {
        return Err(Error::Domain(format!(
            "Bures angle needs a pure initial state (det = {:e})",
            rho0.det()
        )));
    }
    Ok(fidelity(rho0, rhot).sqrt().acos())
}

/// Largest singular value.
pub fn operator_norm(m: &ComplexMatrix2) -> f64 {
    if let Ok((hi, lo)) = hermitian_eigenvalues(m) {
        if m.hermiticity_defect() <= 1e-12 * m.max_abs() {
            return hi.abs().max(lo.abs());
        }
    }
    let (hi, _) = hermitian_eigenvalues(&(m.adjoint() * *m)).unwrap_or((0.0, 0.0));
    hi.max(0.0).sqrt()
}

/// QSL quantities for one initial state, model and horizon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QslReport {
    pub tau: f64,
    pub bures_angle: f64,
    pub lambda_op: f64,
    pub tau_qsl: f64,
    pub ratio: f64,
}

impl QslReport {
    /// Builds the report from `F(ρ0, ρτ)` and the action `∫₀^τ ‖L‖_op`.
    ///
    /// A stationary evolution (zero action, zero angle) has ratio 1.
    pub fn from_action(tau: f64, fidelity: f64, action: f64) -> Result<Self> {
        let sin2 = (1.0 - fidelity).max(0.0);
        let angle = fidelity.sqrt().acos();
        let lambda = if tau > 0.0 { action / tau } else { 0.0 };
        if action <= 0.0 {
            if sin2 > STATIONARY_TOL {
                return Err(Error::Numerical(format!(
                    "state moved (sin²L = {sin2:e}) with zero action at tau = {tau}"
                )));
            }
            return Ok(Self { tau, bures_angle: 0.0, lambda_op: lambda, tau_qsl: tau, ratio: 1.0 });
        }
        let tau_qsl = sin2 / lambda;
        Ok(Self { tau, bures_angle: angle, lambda_op: lambda, tau_qsl, ratio: sin2 / action })
    }
}

/// `Λ = (1/τ) ∫₀^τ ‖L_t(ρ(t))‖_op dt` by adaptive Simpson quadrature with
/// Richardson extrapolation over each grid interval, sampling states from
/// the trajectory's interpolant.
pub fn lambda_op(model: &RateModel, traj: &Trajectory) -> Result<f64> {
    let tau = traj.tau();
    let integrand = |t: f64| -> Result<f64> {
        let m = traj.state_at(t)?;
        Ok(operator_norm(&generator_from_rates(&model.rates_at(t)?, &m)))
    };
    let nodes = traj.times();
    let values = nodes.iter().map(|&t| integrand(t)).collect::<Result<Vec<_>>>()?;
    let rough: f64 = nodes
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, f)| 0.5 * (t[1] - t[0]) * (f[0] + f[1]))
        .sum();
    if rough == 0.0 && values.iter().all(|&v| v == 0.0) {
        // Check interior points too before declaring a zero integral.
        let mid = nodes.windows(2).map(|w| integrand(0.5 * (w[0] + w[1]))).collect::<Result<Vec<_>>>()?;
        if mid.iter().all(|&v| v == 0.0) {
            return Ok(0.0);
        }
    }
    let scale = rough.abs().max(f64::MIN_POSITIVE);
    let mut total = 0.0;
    for (i, w) in nodes.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        let tol = LAMBDA_REL_TOL * scale * (b - a) / tau;
        let m = 0.5 * (a + b);
        let fm = integrand(m)?;
        let whole = (b - a) / 6.0 * (values[i] + 4.0 * fm + values[i + 1]);
        total += simpson(&integrand, a, b, values[i], fm, values[i + 1], whole, tol, 0)?;
    }
    Ok(total / tau)
}

#[allow(clippy::too_many_arguments)]
fn simpson<F>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm)?, f(rm)?);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth >= LAMBDA_MAX_DEPTH {
        return Err(Error::Numerical(format!(
            "grid too coarse: Λ quadrature did not converge on [{a}, {b}]"
        )));
    }
    Ok(simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)?
        + simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)?)
}

/// QSL report at every node of an ODE trajectory (node 0 is the trivial
/// zero-horizon report).
pub fn qsl_reports(traj: &Trajectory) -> Result<Vec<QslReport>> {
    let action = match traj.action() {
        Some(a) => a.to_vec(),
        None => {
            return Err(Error::Domain("QSL reports need a trajectory with co-integrated action".into()))
        }
    };
    if traj.initial().det() > PURITY_DET_TOL {
        return Err(Error::Domain("QSL needs a pure initial state".into()));
    }
    traj.times()
        .iter()
        .zip(traj.fidelities())
        .zip(action)
        .map(|((&t, &f), a)| QslReport::from_action(t, f, a))
        .collect()
}

/// QSL ratio for the pure state `a` evolved under `model` up to `tau`.
pub fn qsl_ratio(model: &RateModel, a: PureStateParam, tau: f64) -> Result<QslReport> {
    qsl_ratio_with(model, a, tau, Tolerances::default())
}

pub fn qsl_ratio_with(model: &RateModel, a: PureStateParam, tau: f64, tol: Tolerances) -> Result<QslReport> {
    let grid = TimeGrid::uniform(tau, 2)?.with_tolerances(tol.rtol, tol.atol)?;
    let traj = propagate_ode(model, &pure_state_from_a(a), &grid)?;
    Ok(qsl_reports(&traj)?[1])
}

/// QSL reports for many horizons from a single propagation. `taus` must be
/// strictly increasing and positive.
pub fn qsl_profile(model: &RateModel, a: PureStateParam, taus: &[f64], tol: Tolerances) -> Result<Vec<QslReport>> {
    let mut nodes = Vec::with_capacity(taus.len() + 1);
    nodes.push(0.0);
    nodes.extend_from_slice(taus);
    let grid = TimeGrid::from_nodes(nodes)?.with_tolerances(tol.rtol, tol.atol)?;
    let traj = propagate_ode(model, &pure_state_from_a(a), &grid)?;
    let mut reports = qsl_reports(&traj)?;
    reports.remove(0);
    Ok(reports)
}

/// BLP measure from an amplitude-damping population trace.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlpReport {
    pub n: f64,
    /// Time intervals on which the population increases.
    pub intervals: Vec<(f64, f64)>,
}

const INCREMENT_FLOOR: f64 = 1e-14;
const BISECT_TOL: f64 = 1e-10;

fn check_population(pop: &[(f64, f64)]) -> Result<()> {
    if pop.len() < 2 {
        return Err(Error::Domain("population trace needs at least 2 samples".into()));
    }
    if pop.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::Domain("population trace times must be strictly increasing".into()));
    }
    let p0 = pop[0].1;
    if (p0 - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("population trace must start at p = 1, got {p0}")));
    }
    Ok(())
}

/// Node derivatives by central differences (one-sided at the ends).
fn node_derivatives(pop: &[(f64, f64)]) -> Vec<f64> {
    let n = pop.len();
    (0..n)
        .map(|i| {
            let (l, r) = (i.saturating_sub(1), (i + 1).min(n - 1));
            if l == r {
                return 0.0;
            }
            if l == i || r == i {
                return (pop[r].1 - pop[l].1) / (pop[r].0 - pop[l].0);
            }
            // Three-point formula for non-uniform spacing.
            let (h0, h1) = (pop[i].0 - pop[l].0, pop[r].0 - pop[i].0);
            (-h1 / (h0 * (h0 + h1))) * pop[l].1
                + ((h1 - h0) / (h0 * h1)) * pop[i].1
                + (h0 / (h1 * (h0 + h1))) * pop[r].1
        })
        .collect()
}

/// Zero of the linear interpolant of `d` on `[t0, t1]`, by bisection.
fn bisect_sign_change(t0: f64, d0: f64, t1: f64, d1: f64) -> f64 {
    let d = |t: f64| d0 + (d1 - d0) * (t - t0) / (t1 - t0);
    let (mut lo, mut hi) = (t0, t1);
    let positive_lo = d0 > 0.0;
    while hi - lo > BISECT_TOL {
        let m = 0.5 * (lo + hi);
        if (d(m) > 0.0) == positive_lo {
            lo = m;
        } else {
            hi = m;
        }
    }
    0.5 * (lo + hi)
}

/// `N = ∫_{ṗ>0} ṗ dt` as the total positive variation of `p` over the
/// sign-partitioned intervals.
pub fn blp_measure_ad(pop: &[(f64, f64)]) -> Result<BlpReport> {
    check_population(pop)?;
    let n: f64 = pop
        .windows(2)
        .map(|w| w[1].1 - w[0].1)
        .filter(|&d| d > INCREMENT_FLOOR)
        .fold(0.0, |acc, d| acc + d);

    let deriv = node_derivatives(pop);
    let mut intervals = Vec::new();
    let mut start: Option<f64> = None;
    for i in 0..pop.len() {
        let rising = deriv[i] > 0.0;
        match (start, rising) {
            (None, true) => {
                start = Some(if i == 0 {
                    pop[0].0
                } else {
                    bisect_sign_change(pop[i - 1].0, deriv[i - 1], pop[i].0, deriv[i])
                });
            }
            (Some(s), false) => {
                intervals.push((s, bisect_sign_change(pop[i - 1].0, deriv[i - 1], pop[i].0, deriv[i])));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        intervals.push((s, pop.last().unwrap().0));
    }
    if n == 0.0 {
        intervals.clear();
    }
    Ok(BlpReport { n, intervals })
}

/// Population of the excited level with a check that `model` is pure
/// amplitude damping on the trajectory's grid.
pub fn blp_measure_for(model: &RateModel, traj: &Trajectory) -> Result<BlpReport> {
    for &t in traj.times() {
        let r = model.rates_at(t)?;
        if r.gamma1 != 0.0 || r.gamma3 != 0.0 {
            return Err(Error::Domain(format!(
                "BLP measure via |b(t)|² needs amplitude damping; γ1 = {}, γ3 = {} at t = {t}",
                r.gamma1, r.gamma3
            )));
        }
    }
    blp_measure_ad(&crate::propagator::excited_population_trace(traj))
}

/// Closed-form amplitude-damping QSL ratios.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DlRatio {
    /// `(1 − |b|²)/(1 − |b| + N)`
    pub printed: f64,
    /// `(1 − |b|²)/((1 − |b|²) + 2N)`
    pub total_variation: f64,
    /// The printed form violates `τ_QSL ≤ τ`.
    pub printed_exceeds_bound: bool,
}

impl DlRatio {
    /// Name of the form closer to `ratio`.
    pub fn closest_to(&self, ratio: f64) -> &'static str {
        if (self.total_variation - ratio).abs() <= (self.printed - ratio).abs() {
            "total_variation"
        } else {
            "printed"
        }
    }
}

fn ratio_or_one(num: f64, den: f64) -> f64 {
    if den == 0.0 && num == 0.0 {
        1.0
    } else {
        num / den
    }
}

/// Evaluates both closed forms at the final sample of `pop`.
pub fn dl_ratio_ad(pop: &[(f64, f64)], n: f64) -> Result<DlRatio> {
    check_population(pop)?;
    if !(n >= 0.0) {
        return Err(Error::Domain(format!("BLP measure must be non-negative, got {n}")));
    }
    let p = pop.last().unwrap().1.clamp(0.0, 1.0);
    let b = p.sqrt();
    let printed = ratio_or_one(1.0 - p, 1.0 - b + n);
    let total_variation = ratio_or_one(1.0 - p, (1.0 - p) + 2.0 * n);
    Ok(DlRatio { printed, total_variation, printed_exceeds_bound: printed > 1.0 + 1e-9 })
}
