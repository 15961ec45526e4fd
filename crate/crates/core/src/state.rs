//! Qubit state algebra: 2×2 complex matrices, density matrices, Bloch
//! vectors and the one-parameter pure-state family used as initial states.
//!
//! Basis convention: index 0 is the σ3 = +1 eigenstate, σ3 = diag(1, -1),
//! σ± = (σ1 ± iσ2)/2. The dissipation channel (σ-) depletes index 0, so the
//! population `m00` is the "excited" population throughout the crate.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Hermiticity and trace tolerance for a valid [`DensityMatrix`].
pub const TOL_HERM: f64 = 1e-12;
/// Trace tolerance for a valid [`DensityMatrix`].
pub const TOL_TRACE: f64 = 1e-12;
/// Smallest eigenvalue tolerated in a valid [`DensityMatrix`].
pub const TOL_POS: f64 = 1e-10;
/// Hermiticity tolerance accepted by [`hermitian_eigenvalues`].
pub const TOL_EIG_HERM: f64 = 1e-10;
/// Bloch vectors may exceed the unit ball by this much.
pub const TOL_BLOCH: f64 = 1e-10;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ComplexMatrix2 {
    pub m00: C64,
    pub m01: C64,
    pub m10: C64,
    pub m11: C64,
}

impl ComplexMatrix2 {
    pub const fn new(m00: C64, m01: C64, m10: C64, m11: C64) -> Self {
        Self { m00, m01, m10, m11 }
    }

    pub fn from_real(m: [[f64; 2]; 2]) -> Self {
        Self::new(
            C64::new(m[0][0], 0.0),
            C64::new(m[0][1], 0.0),
            C64::new(m[1][0], 0.0),
            C64::new(m[1][1], 0.0),
        )
    }

    pub const fn zero() -> Self {
        Self::new(ZERO, ZERO, ZERO, ZERO)
    }

    pub const fn identity() -> Self {
        Self::new(ONE, ZERO, ZERO, ONE)
    }

    pub fn adjoint(&self) -> Self {
        Self::new(self.m00.conj(), self.m10.conj(), self.m01.conj(), self.m11.conj())
    }

    pub fn trace(&self) -> C64 {
        self.m00 + self.m11
    }

    pub fn det(&self) -> C64 {
        self.m00 * self.m11 - self.m01 * self.m10
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(self.m00 * s, self.m01 * s, self.m10 * s, self.m11 * s)
    }

    /// `[A, B] = AB - BA`
    pub fn commutator(&self, other: &Self) -> Self {
        *self * *other - *other * *self
    }

    /// `{A, B} = AB + BA`
    pub fn anticommutator(&self, other: &Self) -> Self {
        *self * *other + *other * *self
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        [self.m00, self.m01, self.m10, self.m11]
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// `max |M - M†|` entrywise.
    pub fn hermiticity_defect(&self) -> f64 {
        (*self - self.adjoint()).max_abs()
    }

    /// `(M + M†) / 2`
    pub fn hermitian_part(&self) -> Self {
        (*self + self.adjoint()).scale(C64::new(0.5, 0.0))
    }

    pub fn is_finite(&self) -> bool {
        [self.m00, self.m01, self.m10, self.m11]
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Entries as `[re00, im00, re01, im01, re10, im10, re11, im11]`.
    pub fn to_reals(&self) -> [f64; 8] {
        [
            self.m00.re, self.m00.im, self.m01.re, self.m01.im,
            self.m10.re, self.m10.im, self.m11.re, self.m11.im,
        ]
    }

    pub fn from_reals(v: &[f64]) -> Self {
        Self::new(
            C64::new(v[0], v[1]),
            C64::new(v[2], v[3]),
            C64::new(v[4], v[5]),
            C64::new(v[6], v[7]),
        )
    }
}

impl Add for ComplexMatrix2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.m00 + o.m00, self.m01 + o.m01, self.m10 + o.m10, self.m11 + o.m11)
    }
}

impl AddAssign for ComplexMatrix2 {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl Sub for ComplexMatrix2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.m00 - o.m00, self.m01 - o.m01, self.m10 - o.m10, self.m11 - o.m11)
    }
}

impl Neg for ComplexMatrix2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.m00, -self.m01, -self.m10, -self.m11)
    }
}

impl Mul for ComplexMatrix2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.m00 * o.m00 + self.m01 * o.m10,
            self.m00 * o.m01 + self.m01 * o.m11,
            self.m10 * o.m00 + self.m11 * o.m10,
            self.m10 * o.m01 + self.m11 * o.m11,
        )
    }
}

impl Mul<f64> for ComplexMatrix2 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }
}

/// Pauli matrices and ladder operators.
pub mod pauli {
    use super::*;

    pub const SIGMA1: ComplexMatrix2 = ComplexMatrix2::new(ZERO, ONE, ONE, ZERO);
    pub const SIGMA2: ComplexMatrix2 = ComplexMatrix2::new(ZERO, C64::new(0.0, -1.0), I, ZERO);
    pub const SIGMA3: ComplexMatrix2 = ComplexMatrix2::new(ONE, ZERO, ZERO, C64::new(-1.0, 0.0));
    /// σ+ = (σ1 + iσ2)/2 = |0⟩⟨1|
    pub const SIGMA_PLUS: ComplexMatrix2 = ComplexMatrix2::new(ZERO, ONE, ZERO, ZERO);
    /// σ- = (σ1 - iσ2)/2 = |1⟩⟨0|
    pub const SIGMA_MINUS: ComplexMatrix2 = ComplexMatrix2::new(ZERO, ZERO, ONE, ZERO);
}

/// Invariant violations found by [`validate_density`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StateDiagnostics {
    pub hermiticity_defect: f64,
    pub trace_defect: f64,
    pub min_eigenvalue: f64,
    pub violations: Vec<StateViolation>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StateViolation {
    NotHermitian,
    TraceNotOne,
    NegativeEigenvalue,
    NonFinite,
}

impl fmt::Display for StateDiagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:?} (hermiticity defect {:e}, trace defect {:e}, min eigenvalue {:e})",
            self.violations, self.hermiticity_defect, self.trace_defect, self.min_eigenvalue
        )
    }
}

/// A validated qubit state: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix(ComplexMatrix2);

impl DensityMatrix {
    pub fn new(m: ComplexMatrix2) -> Result<Self> {
        validate_density(&m).map_err(Error::InvalidState)
    }

    pub fn maximally_mixed() -> Self {
        Self(ComplexMatrix2::identity() * 0.5)
    }

    pub fn matrix(&self) -> &ComplexMatrix2 {
        &self.0
    }

    /// Population of index 0 (the σ3 = +1, "excited" level).
    pub fn p0(&self) -> f64 {
        self.0.m00.re
    }

    pub fn p1(&self) -> f64 {
        self.0.m11.re
    }

    pub fn coherence(&self) -> C64 {
        self.0.m01
    }

    /// Real determinant; zero for pure states.
    pub fn det(&self) -> f64 {
        self.0.det().re
    }

    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }

    pub fn eigenvalues(&self) -> (f64, f64) {
        eigen_hermitian_part(&self.0)
    }
}

impl From<DensityMatrix> for ComplexMatrix2 {
    fn from(d: DensityMatrix) -> Self {
        d.0
    }
}

/// Checks all density-matrix invariants, reporting every violated one.
pub fn validate_density(m: &ComplexMatrix2) -> std::result::Result<DensityMatrix, StateDiagnostics> {
    if !m.is_finite() {
        return Err(StateDiagnostics {
            hermiticity_defect: f64::NAN,
            trace_defect: f64::NAN,
            min_eigenvalue: f64::NAN,
            violations: vec![StateViolation::NonFinite],
        });
    }
    let herm = m
        .hermiticity_defect()
        .max(m.m00.im.abs())
        .max(m.m11.im.abs());
    let trace = (m.trace() - ONE).norm();
    let (_, lmin) = eigen_hermitian_part(m);
    let mut violations = Vec::new();
    if herm > TOL_HERM {
        violations.push(StateViolation::NotHermitian);
    }
    if trace > TOL_TRACE {
        violations.push(StateViolation::TraceNotOne);
    }
    if lmin < -TOL_POS {
        violations.push(StateViolation::NegativeEigenvalue);
    }
    if violations.is_empty() {
        Ok(DensityMatrix(*m))
    } else {
        Err(StateDiagnostics {
            hermiticity_defect: herm,
            trace_defect: trace,
            min_eigenvalue: lmin,
            violations,
        })
    }
}

/// Eigenvalues of `(M + M†)/2`, descending.
fn eigen_hermitian_part(m: &ComplexMatrix2) -> (f64, f64) {
    let h = m.hermitian_part();
    let mean = 0.5 * (h.m00.re + h.m11.re);
    let half_diff = 0.5 * (h.m00.re - h.m11.re);
    let r = half_diff.hypot(h.m01.norm());
    (mean + r, mean - r)
}

/// Closed-form eigenvalues of a Hermitian 2×2 matrix, descending.
///
/// Uses `λ± = tr/2 ± sqrt(((m00 - m11)/2)² + |m01|²)`, which equals
/// `(tr ± sqrt(tr² - 4 det))/2` without the cancellation.
pub fn hermitian_eigenvalues(m: &ComplexMatrix2) -> Result<(f64, f64)> {
    let defect = m
        .hermiticity_defect()
        .max(m.m00.im.abs())
        .max(m.m11.im.abs());
    if !(defect <= TOL_EIG_HERM) {
        return Err(Error::NotHermitian(defect));
    }
    Ok(eigen_hermitian_part(m))
}

/// Bloch coordinates with `ρ = (I + x σ1 + y σ2 + z σ3)/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

pub fn bloch_from_density(rho: &DensityMatrix) -> BlochVector {
    let m = rho.matrix();
    BlochVector {
        x: 2.0 * m.m01.re,
        y: -2.0 * m.m01.im,
        z: m.m00.re - m.m11.re,
    }
}

pub fn density_from_bloch(r: &BlochVector) -> Result<DensityMatrix> {
    let n = r.norm();
    if !(n <= 1.0 + TOL_BLOCH) {
        return Err(Error::Domain(format!("Bloch vector norm {n} exceeds 1")));
    }
    let off = C64::new(0.5 * r.x, -0.5 * r.y);
    Ok(DensityMatrix(ComplexMatrix2::new(
        C64::new(0.5 * (1.0 + r.z), 0.0),
        off,
        off.conj(),
        C64::new(0.5 * (1.0 - r.z), 0.0),
    )))
}

/// Initial-state parameter `a ∈ [0, 1]`: the weight of index 0.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize)]
pub struct PureStateParam(f64);

impl PureStateParam {
    pub fn new(a: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&a) {
            Ok(Self(a))
        } else {
            Err(Error::Domain(format!("pure-state parameter a = {a} not in [0, 1]")))
        }
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

/// `[[a, √(a(1-a))], [√(a(1-a)), 1-a]]`, the real pure state with weight `a`
/// on index 0.
pub fn pure_state_from_a(a: PureStateParam) -> DensityMatrix {
    let a = a.value();
    let off = (a * (1.0 - a)).sqrt();
    DensityMatrix(ComplexMatrix2::from_real([[a, off], [off, 1.0 - a]]))
}
