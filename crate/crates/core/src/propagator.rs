//! The phase-covariant generator and two independent propagation engines.
//!
//! [`propagate_ode`] integrates the full complex 2×2 master equation with an
//! adaptive Dormand–Prince scheme. Alongside the state it integrates the
//! action `A(t) = ∫₀ᵗ ‖L_s(ρ(s))‖_op ds`, so the QSL functional shares the
//! integrator's error control.
//!
//! [`propagate_analytic`] evaluates the closed-form solution of the Bloch
//! equations, with all time integrals done by adaptive quadrature:
//!
//! ```text
//! ż  = (γ1 − γ2)/2 − (γ1 + γ2)/2 · z
//! ρ̇01 = −[(γ1 + γ2)/4 + γ3 + 2iω_H] ρ01
//! ```

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::ode::{dopri5, DenseOutput, Tolerances};
use crate::qsl::{fidelity, operator_norm};
use crate::quad::integrate;
use crate::rates::{RateModel, Rates};
use crate::state::{pauli, validate_density, ComplexMatrix2, DensityMatrix};

/// Output nodes per trajectory unless the caller chooses otherwise.
pub const DEFAULT_NODES: usize = 2001;
/// Largest hermiticity or trace defect the ODE engine may repair.
pub const REPAIR_BOUND: f64 = 1e-8;

const QUAD_ABS_TOL: f64 = 1e-14;
const QUAD_REL_TOL: f64 = 1e-13;

/// `L_t(ρ)` for given instantaneous rates.
pub fn generator_from_rates(r: &Rates, rho: &ComplexMatrix2) -> ComplexMatrix2 {
    use pauli::{SIGMA3, SIGMA_MINUS, SIGMA_PLUS};

    let dissipator = |a: &ComplexMatrix2| {
        let ad = a.adjoint();
        *a * *rho * ad - (ad * *a).anticommutator(rho) * 0.5
    };
    let mut out = rho.commutator(&SIGMA3).scale(C64::new(0.0, r.omega_h));
    if r.gamma1 != 0.0 {
        out += dissipator(&SIGMA_PLUS) * (0.5 * r.gamma1);
    }
    if r.gamma2 != 0.0 {
        out += dissipator(&SIGMA_MINUS) * (0.5 * r.gamma2);
    }
    if r.gamma3 != 0.0 {
        out += (SIGMA3 * *rho * SIGMA3 - *rho) * (0.5 * r.gamma3);
    }
    out
}

/// Applies the phase-covariant generator of `model` at time `t`.
pub fn generator_apply(model: &RateModel, t: f64, rho: &DensityMatrix) -> Result<ComplexMatrix2> {
    Ok(generator_from_rates(&model.rates_at(t)?, rho.matrix()))
}

/// Output nodes `0 = t_0 < t_1 < … < t_n = τ` plus integrator tolerances.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid {
    nodes: Vec<f64>,
    pub tol: Tolerances,
}

impl TimeGrid {
    /// `n` uniformly spaced nodes on `[0, τ]`.
    pub fn uniform(tau: f64, n: usize) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Domain(format!("horizon must be positive, got {tau}")));
        }
        if n < 2 {
            return Err(Error::Domain(format!("time grid needs at least 2 nodes, got {n}")));
        }
        let nodes = (0..n)
            .map(|i| if i == n - 1 { tau } else { tau * i as f64 / (n - 1) as f64 })
            .collect();
        Ok(Self { nodes, tol: Tolerances::default() })
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 || nodes[0] != 0.0 {
            return Err(Error::Domain("time grid must start at 0 and have at least 2 nodes".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) || !nodes.last().unwrap().is_finite() {
            return Err(Error::Domain("time grid must be strictly increasing and finite".into()));
        }
        Ok(Self { nodes, tol: Tolerances::default() })
    }

    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Result<Self> {
        if !(rtol > 0.0 && atol > 0.0) {
            return Err(Error::Domain(format!("tolerances must be positive, got ({rtol}, {atol})")));
        }
        self.tol = Tolerances { rtol, atol };
        Ok(self)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn tau(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// Uniform grid with `2n − 1` nodes interleaving midpoints.
    pub fn refined(&self) -> Self {
        let mut nodes = Vec::with_capacity(2 * self.nodes.len() - 1);
        for w in self.nodes.windows(2) {
            nodes.push(w[0]);
            nodes.push(0.5 * (w[0] + w[1]));
        }
        nodes.push(self.tau());
        Self { nodes, tol: self.tol }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Engine {
    Ode,
    Analytic,
}

#[derive(Clone, Debug)]
enum Interpolant {
    Ode(Arc<DenseOutput<9>>),
    Analytic(Arc<AnalyticSolution>),
}

/// A propagated state history on a [`TimeGrid`].
#[derive(Clone, Debug)]
pub struct Trajectory {
    grid: TimeGrid,
    model: RateModel,
    states: Vec<DensityMatrix>,
    generator: Vec<ComplexMatrix2>,
    gen_norm: Vec<f64>,
    fidelity: Vec<f64>,
    action: Option<Vec<f64>>,
    raw_defect: RawDefect,
    interp: Interpolant,
}

/// Largest hermiticity and trace defects of the engine's states before
/// the repair step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RawDefect {
    pub hermiticity: f64,
    pub trace: f64,
}

impl Trajectory {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        self.grid.nodes()
    }

    pub fn tau(&self) -> f64 {
        self.grid.tau()
    }

    pub fn model(&self) -> &RateModel {
        &self.model
    }

    pub fn initial(&self) -> &DensityMatrix {
        &self.states[0]
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn generator_outputs(&self) -> &[ComplexMatrix2] {
        &self.generator
    }

    pub fn gen_norms(&self) -> &[f64] {
        &self.gen_norm
    }

    pub fn fidelities(&self) -> &[f64] {
        &self.fidelity
    }

    /// Co-integrated `∫₀ᵗ ‖L‖_op` at the nodes (ODE engine only).
    pub fn action(&self) -> Option<&[f64]> {
        self.action.as_deref()
    }

    pub fn raw_defect(&self) -> RawDefect {
        self.raw_defect
    }

    pub fn engine(&self) -> Engine {
        match self.interp {
            Interpolant::Ode(_) => Engine::Ode,
            Interpolant::Analytic(_) => Engine::Analytic,
        }
    }

    /// State at any `t ∈ [0, τ]`, from the engine's own interpolant.
    pub fn state_at(&self, t: f64) -> Result<ComplexMatrix2> {
        match &self.interp {
            Interpolant::Ode(d) => {
                let y = d
                    .eval(t)
                    .ok_or(Error::OutOfRange { t, lo: 0.0, hi: self.tau() })?;
                let m = ComplexMatrix2::from_reals(&y[..8]).hermitian_part();
                Ok(m * (1.0 / m.trace().re))
            }
            Interpolant::Analytic(a) => a.state_at(t),
        }
    }

    /// Writes `t,rho00,rho01_re,rho01_im,rho11,fidelity,gen_norm` rows.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "t,rho00,rho01_re,rho01_im,rho11,fidelity,gen_norm")?;
        for i in 0..self.states.len() {
            let m = self.states[i].matrix();
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                self.times()[i],
                m.m00.re,
                m.m01.re,
                m.m01.im,
                m.m11.re,
                self.fidelity[i],
                self.gen_norm[i]
            )?;
        }
        Ok(())
    }
}

fn check_domain(model: &RateModel, tau: f64) -> Result<()> {
    let (lo, hi) = model.domain();
    if lo > 0.0 || hi < tau {
        return Err(Error::OutOfRange { t: tau, lo, hi });
    }
    Ok(())
}

/// Re-Hermitizes and trace-normalizes an integrator state.
fn defects(m: &ComplexMatrix2) -> RawDefect {
    RawDefect {
        hermiticity: m.hermiticity_defect().max(m.m00.im.abs()).max(m.m11.im.abs()),
        trace: (m.trace() - C64::new(1.0, 0.0)).norm(),
    }
}

fn repair(t: f64, m: &ComplexMatrix2) -> Result<DensityMatrix> {
    let RawDefect { hermiticity: herm, trace } = defects(m);
    if !(herm <= REPAIR_BOUND && trace <= REPAIR_BOUND) {
        return Err(Error::RepairBound { t, herm, trace });
    }
    let h = m.hermitian_part();
    let mut fixed = h * (1.0 / h.trace().re);
    fixed.m00.im = 0.0;
    fixed.m11.im = 0.0;
    validate_density(&fixed).map_err(Error::InvalidState)
}

fn assemble(
    model: &RateModel,
    grid: TimeGrid,
    states: Vec<DensityMatrix>,
    action: Option<Vec<f64>>,
    raw_defect: RawDefect,
    interp: Interpolant,
) -> Result<Trajectory> {
    let rho0 = states[0];
    let mut generator = Vec::with_capacity(states.len());
    let mut gen_norm = Vec::with_capacity(states.len());
    let mut fid = Vec::with_capacity(states.len());
    for (t, rho) in grid.nodes().iter().zip(&states) {
        let l = generator_apply(model, *t, rho)?;
        gen_norm.push(operator_norm(&l));
        generator.push(l);
        fid.push(fidelity(&rho0, rho));
    }
    Ok(Trajectory {
        grid,
        model: model.clone(),
        states,
        generator,
        gen_norm,
        fidelity: fid,
        action,
        raw_defect,
        interp,
    })
}

/// Integrates `dρ/dt = L_t(ρ)` with adaptive Dormand–Prince 5(4).
pub fn propagate_ode(model: &RateModel, rho0: &DensityMatrix, grid: &TimeGrid) -> Result<Trajectory> {
    check_domain(model, grid.tau())?;
    let mut y0 = [0.0; 9];
    y0[..8].copy_from_slice(&rho0.matrix().to_reals());
    let rhs = |t: f64, y: &[f64; 9]| -> Result<[f64; 9]> {
        let m = ComplexMatrix2::from_reals(&y[..8]);
        let l = generator_from_rates(&model.rates_at(t)?, &m);
        let mut dy = [0.0; 9];
        dy[..8].copy_from_slice(&l.to_reals());
        dy[8] = operator_norm(&l);
        Ok(dy)
    };
    let dense = dopri5(rhs, 0.0, y0, grid.tau(), grid.tol)?;

    let mut states = Vec::with_capacity(grid.nodes().len());
    let mut action = Vec::with_capacity(grid.nodes().len());
    let mut raw_defect = RawDefect::default();
    for &t in grid.nodes() {
        let y = if t == 0.0 { y0 } else { dense.eval(t).expect("node inside integration span") };
        let raw = ComplexMatrix2::from_reals(&y[..8]);
        let d = defects(&raw);
        raw_defect.hermiticity = raw_defect.hermiticity.max(d.hermiticity);
        raw_defect.trace = raw_defect.trace.max(d.trace);
        states.push(if t == 0.0 { *rho0 } else { repair(t, &raw)? });
        action.push(y[8]);
    }
    assemble(model, grid.clone(), states, Some(action), raw_defect, Interpolant::Ode(Arc::new(dense)))
}

/// Closed-form Bloch solution with quadrature, valid for any phase-covariant
/// model.
pub fn propagate_analytic(
    model: &RateModel,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    check_domain(model, grid.tau())?;
    let m0 = rho0.matrix();
    let mut z = m0.m00.re - m0.m11.re;
    let mut c = m0.m01;
    let nodes = grid.nodes();
    let mut zs = vec![z];
    let mut cs = vec![c];
    for w in nodes.windows(2) {
        (z, c) = analytic_step(model, w[0], w[1], z, c)?;
        zs.push(z);
        cs.push(c);
    }
    let states = zs
        .iter()
        .zip(&cs)
        .map(|(&z, &c)| bloch_state(z, c))
        .collect::<Result<Vec<_>>>()?;
    let sol = AnalyticSolution { model: model.clone(), nodes: nodes.to_vec(), z: zs, c: cs };
    let raw_defect = states.iter().map(|s| defects(s.matrix())).fold(RawDefect::default(), |a, d| RawDefect {
        hermiticity: a.hermiticity.max(d.hermiticity),
        trace: a.trace.max(d.trace),
    });
    assemble(model, grid.clone(), states, None, raw_defect, Interpolant::Analytic(Arc::new(sol)))
}

fn bloch_state(z: f64, c: C64) -> Result<DensityMatrix> {
    let m = ComplexMatrix2::new(C64::new(0.5 * (1.0 + z), 0.0), c, c.conj(), C64::new(0.5 * (1.0 - z), 0.0));
    validate_density(&m).map_err(Error::InvalidState)
}

/// Propagates `(z, ρ01)` from `t0` to `t1` in closed form.
fn analytic_step(model: &RateModel, t0: f64, t1: f64, z: f64, c: C64) -> Result<(f64, C64)> {
    let lam_par = |s: f64| -> Result<f64> {
        let r = model.rates_at(s)?;
        Ok(0.5 * (r.gamma1 + r.gamma2))
    };
    let decay = integrate(lam_par, t0, t1, QUAD_ABS_TOL, QUAD_REL_TOL)?;
    let source = integrate(
        |s| {
            let r = model.rates_at(s)?;
            let g = integrate(lam_par, s, t1, QUAD_ABS_TOL, QUAD_REL_TOL)?;
            Ok((-g).exp() * 0.5 * (r.gamma1 - r.gamma2))
        },
        t0,
        t1,
        QUAD_ABS_TOL,
        QUAD_REL_TOL,
    )?;
    let z1 = (-decay).exp() * z + source;

    let lam_perp = integrate(
        |s| {
            let r = model.rates_at(s)?;
            Ok(0.25 * (r.gamma1 + r.gamma2) + r.gamma3)
        },
        t0,
        t1,
        QUAD_ABS_TOL,
        QUAD_REL_TOL,
    )?;
    let phase = if model.omega_h.is_zero() {
        0.0
    } else {
        integrate(|s| Ok(model.rates_at(s)?.omega_h), t0, t1, QUAD_ABS_TOL, QUAD_REL_TOL)?
    };
    let c1 = c * C64::new(-lam_perp, -2.0 * phase).exp();
    Ok((z1, c1))
}

#[derive(Debug)]
struct AnalyticSolution {
    model: RateModel,
    nodes: Vec<f64>,
    z: Vec<f64>,
    c: Vec<C64>,
}

impl AnalyticSolution {
    fn state_at(&self, t: f64) -> Result<ComplexMatrix2> {
        let hi = *self.nodes.last().unwrap();
        if !(t >= 0.0 && t <= hi) {
            return Err(Error::OutOfRange { t, lo: 0.0, hi });
        }
        let i = self.nodes.partition_point(|&s| s <= t).max(1) - 1;
        let (z, c) = analytic_step(&self.model, self.nodes[i], t, self.z[i], self.c[i])?;
        Ok(*bloch_state(z, c)?.matrix())
    }
}

/// `(t, ρ00)` at each node: the population of the level depleted by the
/// dissipation channel.
pub fn excited_population_trace(traj: &Trajectory) -> Vec<(f64, f64)> {
    traj.times().iter().zip(traj.states()).map(|(&t, s)| (t, s.p0())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::{amplitude_damping_model, cp_oscillating_model, pure_dephasing_model, RateFn};
    use crate::state::{pure_state_from_a, PureStateParam};
    use approx::assert_abs_diff_eq;

    fn pure(a: f64) -> DensityMatrix {
        pure_state_from_a(PureStateParam::new(a).unwrap())
    }

    #[test]
    fn dephasing_on_plus_state() {
        let m = pure_dephasing_model(RateFn::Constant(1.0));
        let l = generator_apply(&m, 0.0, &pure(0.5)).unwrap();
        let expect = ComplexMatrix2::from_real([[0.0, -0.5], [-0.5, 0.0]]);
        assert_abs_diff_eq!((l - expect).max_abs(), 0.0, epsilon = 1e-16);
    }

    #[test]
    fn amplitude_damping_on_excited_state() {
        let m = amplitude_damping_model(RateFn::Constant(1.0));
        let l = generator_apply(&m, 0.0, &pure(1.0)).unwrap();
        assert_eq!(l, ComplexMatrix2::from_real([[-0.5, 0.0], [0.0, 0.5]]));
        assert_eq!(l.trace(), C64::new(0.0, 0.0));
    }

    #[test]
    fn balanced_cp_rates_fix_maximally_mixed_state() {
        let m = cp_oscillating_model(8.0, 5.0).unwrap();
        // γ1 = γ2 where 2ν sin ωt + ω cos ωt = 0: tan ωt = −ω/(2ν).
        let t = (std::f64::consts::PI - (5.0f64 / 16.0).atan()) / 5.0;
        let r = m.rates_at(t).unwrap();
        assert_abs_diff_eq!(r.gamma1, r.gamma2, epsilon = 1e-13);
        let l = generator_apply(&m, t, &DensityMatrix::maximally_mixed()).unwrap();
        assert!(l.max_abs() <= 1e-13);
    }

    #[test]
    fn hamiltonian_term_rotates_coherence() {
        let m = RateModel::new("rot", RateFn::Constant(1.5), RateFn::Zero, RateFn::Zero, RateFn::Zero);
        let l = generator_apply(&m, 0.0, &pure(0.5)).unwrap();
        // ρ̇01 = −2iω ρ01
        assert_abs_diff_eq!((l.m01 - C64::new(0.0, -1.5)).norm(), 0.0, epsilon = 1e-15);
        assert_eq!(l.m00, C64::new(0.0, 0.0));
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::uniform(0.0, 10).is_err());
        assert!(TimeGrid::uniform(1.0, 1).is_err());
        assert!(TimeGrid::from_nodes(vec![0.1, 0.2]).is_err());
        assert!(TimeGrid::from_nodes(vec![0.0, 0.2, 0.2]).is_err());
        let g = TimeGrid::uniform(2.0, 5).unwrap();
        assert_eq!(g.nodes(), &[0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(g.refined().nodes().len(), 9);
        assert!(g.with_tolerances(0.0, 1e-12).is_err());
    }

    #[test]
    fn zero_rates_leave_state_unchanged() {
        let grid = TimeGrid::uniform(5.0, 51).unwrap();
        let rho0 = pure(0.3);
        for traj in [
            propagate_ode(&RateModel::zero(), &rho0, &grid).unwrap(),
            propagate_analytic(&RateModel::zero(), &rho0, &grid).unwrap(),
        ] {
            for s in traj.states() {
                assert!((*s.matrix() - *rho0.matrix()).max_abs() <= 1e-15);
            }
            assert!(traj.fidelities().iter().all(|&f| (f - 1.0).abs() <= 1e-12));
        }
    }

    #[test]
    fn amplitude_damping_decay_law() {
        let gamma = 0.8;
        let m = amplitude_damping_model(RateFn::Constant(gamma));
        let grid = TimeGrid::uniform(2.0 / gamma, 101).unwrap();
        let traj = propagate_ode(&m, &pure(1.0), &grid).unwrap();
        let p = excited_population_trace(&traj);
        for (t, p) in &p {
            assert_abs_diff_eq!(*p, (-gamma * t / 2.0).exp(), epsilon = 1e-10);
        }
        assert_abs_diff_eq!(p.last().unwrap().1, (-1.0f64).exp(), epsilon = 1e-10);
    }

    #[test]
    fn analytic_coherence_decay_cp_model() {
        let m = cp_oscillating_model(8.0, 5.0).unwrap();
        let grid = TimeGrid::uniform(2.0, 201).unwrap();
        let traj = propagate_analytic(&m, &pure(0.5), &grid).unwrap();
        for (t, s) in traj.times().iter().zip(traj.states()) {
            assert_abs_diff_eq!(s.coherence().norm(), 0.5 * (-4.0 * t).exp(), epsilon = 1e-13);
        }
    }

    #[test]
    fn state_at_matches_nodes() {
        let m = cp_oscillating_model(8.0, 5.0).unwrap();
        let grid = TimeGrid::uniform(1.0, 11).unwrap();
        let ode = propagate_ode(&m, &pure(0.25), &grid).unwrap();
        let ana = propagate_analytic(&m, &pure(0.25), &grid).unwrap();
        for (i, &t) in grid.nodes().iter().enumerate() {
            assert!((ode.state_at(t).unwrap() - *ode.states()[i].matrix()).max_abs() <= 1e-14);
            assert!((ana.state_at(t).unwrap() - *ana.states()[i].matrix()).max_abs() <= 1e-14);
        }
        let a = ode.state_at(0.537).unwrap();
        let b = ana.state_at(0.537).unwrap();
        assert!((a - b).max_abs() <= 1e-8);
        assert!(ode.state_at(1.5).is_err());
    }

    #[test]
    fn table_domain_must_cover_horizon() {
        use crate::rates::{rates_from_table, TabulatedRates};
        let tab = TabulatedRates::new(vec![0.0, 1.0], vec![0.0; 2], vec![1.0; 2], vec![0.0; 2], None).unwrap();
        let m = rates_from_table(tab);
        let grid = TimeGrid::uniform(2.0, 11).unwrap();
        assert!(matches!(propagate_ode(&m, &pure(1.0), &grid), Err(Error::OutOfRange { .. })));
        let grid = TimeGrid::uniform(1.0, 11).unwrap();
        let traj = propagate_ode(&m, &pure(1.0), &grid).unwrap();
        assert_abs_diff_eq!(traj.states().last().unwrap().p0(), (-0.5f64).exp(), epsilon = 1e-10);
    }

    #[test]
    fn csv_export_layout() {
        let grid = TimeGrid::uniform(1.0, 3).unwrap();
        let traj = propagate_ode(&RateModel::zero(), &pure(1.0), &grid).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "t,rho00,rho01_re,rho01_im,rho11,fidelity,gen_norm");
        assert_eq!(lines[1], "0,1,0,0,0,1,0");
        assert_eq!(lines.len(), 4);
    }
}
