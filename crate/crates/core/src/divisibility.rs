//! CP / P divisibility of phase-covariant dynamics from the rate
//! conditions, evaluated on a sampled window `[0, T]` with bisection
//! refinement of violation boundaries.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rates::{RateModel, Rates};

/// Samples per window.
pub const DEFAULT_SAMPLES: usize = 10_000;
/// Absolute slack on sign conditions.
pub const SIGN_EPS: f64 = 1e-12;
/// Bisection accuracy for interval endpoints, in time units.
pub const BISECT_TOL: f64 = 1e-10;
/// Resolution of [`critical_k_scan`].
pub const CRITICAL_K_TOL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DivisibilityClass {
    CpDivisible,
    PDivisibleOnly,
    NonPDivisible,
}

impl fmt::Display for DivisibilityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::CpDivisible => "CP_DIVISIBLE",
            Self::PDivisibleOnly => "P_DIVISIBLE_ONLY",
            Self::NonPDivisible => "NON_P_DIVISIBLE",
        })
    }
}

/// Which rate condition a violation record refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Condition {
    /// A rate is negative.
    RateSign,
    /// `√(γ1γ2) + 2γ3 < 0`.
    Dissipativity,
    /// `√(γ1γ2) + 2γ3 = 0` at an isolated time and `γ3' ≤ γ3(γ1 + γ2)`.
    Borderline,
}

impl Condition {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::RateSign => "RATE_SIGN",
            Self::Dissipativity => "DISSIPATIVITY",
            Self::Borderline => "BORDERLINE",
        }
    }
}

/// Rate (or combination) whose sign is tested.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Gamma1,
    Gamma2,
    Gamma3,
    Combined,
}

impl Channel {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Gamma1 => "gamma1",
            Self::Gamma2 => "gamma2",
            Self::Gamma3 => "gamma3",
            Self::Combined => "combined",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub condition: Condition,
    pub t_lo: f64,
    pub t_hi: f64,
    /// Most negative value of the violated expression.
    pub worst: f64,
    pub channel: Channel,
}

/// An isolated zero of `√(γ1γ2) + 2γ3` and the derivative test there.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BorderlinePoint {
    pub t: f64,
    pub value: f64,
    pub d_gamma3: f64,
    pub threshold: f64,
}

impl BorderlinePoint {
    pub fn satisfied(&self) -> bool {
        self.d_gamma3 > self.threshold
    }
}

/// Outcome of one divisibility test.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Check {
    pub violations: Vec<Violation>,
    pub borderline: Vec<BorderlinePoint>,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DivisibilityVerdict {
    pub class: DivisibilityClass,
    #[serde(serialize_with = "window_pair")]
    pub window: f64,
    pub violations: Vec<Violation>,
    #[serde(skip)]
    pub samples_per_unit_time: f64,
    #[serde(skip)]
    pub borderline: Vec<BorderlinePoint>,
}

fn window_pair<S: Serializer>(t: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    [0.0, *t].serialize(s)
}

impl DivisibilityVerdict {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verdict serializes")
    }
}

fn check_window(t_end: f64, samples: usize) -> Result<()> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::Domain(format!("window end must be positive, got {t_end}")));
    }
    if samples < 3 {
        return Err(Error::Domain(format!("need at least 3 samples, got {samples}")));
    }
    Ok(())
}

/// A scalar function of time sampled on a uniform grid over `[0, T]`.
struct Sampled<'a> {
    f: &'a dyn Fn(f64) -> Result<f64>,
    ts: Vec<f64>,
    vs: Vec<f64>,
}

impl<'a> Sampled<'a> {
    fn new(f: &'a dyn Fn(f64) -> Result<f64>, t_end: f64, n: usize) -> Result<Self> {
        let ts: Vec<f64> = (0..n)
            .map(|i| if i == n - 1 { t_end } else { t_end * i as f64 / (n - 1) as f64 })
            .collect();
        let vs = ts.iter().map(|&t| f(t)).collect::<Result<Vec<_>>>()?;
        Ok(Self { f, ts, vs })
    }

    /// Boundary of `{f < −ε}` between `inside` (violating) and `outside`.
    fn boundary(&self, outside: f64, inside: f64) -> Result<f64> {
        let (mut o, mut i) = (outside, inside);
        while (i - o).abs() > BISECT_TOL {
            let m = 0.5 * (o + i);
            if (self.f)(m)? < -SIGN_EPS {
                i = m;
            } else {
                o = m;
            }
        }
        Ok(0.5 * (o + i))
    }

    /// Golden-section minimum on `[a, b]`.
    fn minimize(&self, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
        const R: f64 = 0.618_033_988_749_894_8;
        let mut c = b - R * (b - a);
        let mut d = a + R * (b - a);
        let (mut fc, mut fd) = ((self.f)(c)?, (self.f)(d)?);
        for _ in 0..200 {
            if b - a <= 1e-13 * a.abs().max(1.0) {
                break;
            }
            if fc <= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - R * (b - a);
                fc = (self.f)(c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + R * (b - a);
                fd = (self.f)(d)?;
            }
        }
        let t = 0.5 * (a + b);
        Ok((t, (self.f)(t)?))
    }

    /// Strict interior local minima of the samples, refined.
    fn refined_minima(&self) -> Result<Vec<(f64, f64)>> {
        let n = self.ts.len();
        let mut out = Vec::new();
        for i in 1..n - 1 {
            let v = self.vs[i];
            if v < self.vs[i - 1] && v <= self.vs[i + 1] {
                let (t, fm) = self.minimize(self.ts[i - 1], self.ts[i + 1])?;
                out.push(if fm <= v { (t, fm) } else { (self.ts[i], v) });
            }
        }
        Ok(out)
    }

    /// Intervals where `f < −ε`, as `(t_lo, t_hi, worst)`.
    fn negative_intervals(&self, minima: &[(f64, f64)]) -> Result<Vec<(f64, f64, f64)>> {
        let n = self.ts.len();
        let neg = |i: usize| self.vs[i] < -SIGN_EPS;
        let mut out: Vec<(f64, f64, f64)> = Vec::new();
        let mut i = 0;
        while i < n {
            if !neg(i) {
                i += 1;
                continue;
            }
            let start = i;
            while i + 1 < n && neg(i + 1) {
                i += 1;
            }
            let lo = if start == 0 { self.ts[0] } else { self.boundary(self.ts[start - 1], self.ts[start])? };
            let hi = if i == n - 1 { self.ts[n - 1] } else { self.boundary(self.ts[i + 1], self.ts[i])? };
            let mut worst = self.vs[start..=i].iter().copied().fold(f64::INFINITY, f64::min);
            for &(t, v) in minima {
                if t >= lo && t <= hi {
                    worst = worst.min(v);
                }
            }
            out.push((lo, hi, worst));
            i += 1;
        }
        // Dips between samples that never show up as a negative sample.
        let h = self.ts[1] - self.ts[0];
        for &(t, v) in minima {
            if v < -SIGN_EPS && !out.iter().any(|&(lo, hi, _)| t >= lo && t <= hi) {
                let lo = self.boundary((t - h).max(0.0), t)?;
                let hi = self.boundary((t + h).min(self.ts[n - 1]), t)?;
                out.push((lo, hi, v));
            }
        }
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(out)
    }
}

fn rates(model: &RateModel, t: f64) -> Result<Rates> {
    model.rates_at(t)
}

fn sign_violations(
    model: &RateModel,
    t_end: f64,
    samples: usize,
    channels: &[Channel],
) -> Result<Vec<Violation>> {
    let mut out = Vec::new();
    for &ch in channels {
        let f = move |t: f64| -> Result<f64> {
            let r = rates(model, t)?;
            Ok(match ch {
                Channel::Gamma1 => r.gamma1,
                Channel::Gamma2 => r.gamma2,
                Channel::Gamma3 => r.gamma3,
                Channel::Combined => unreachable!(),
            })
        };
        let s = Sampled::new(&f, t_end, samples)?;
        let minima = s.refined_minima()?;
        for (t_lo, t_hi, worst) in s.negative_intervals(&minima)? {
            out.push(Violation { condition: Condition::RateSign, t_lo, t_hi, worst, channel: ch });
        }
    }
    Ok(out)
}

/// All rates non-negative (within [`SIGN_EPS`]) on `[0, T]`.
pub fn check_cp_divisible(model: &RateModel, t_end: f64, samples: usize) -> Result<Check> {
    check_window(t_end, samples)?;
    let violations = sign_violations(model, t_end, samples, &[Channel::Gamma1, Channel::Gamma2, Channel::Gamma3])?;
    Ok(Check { violations, borderline: Vec::new() })
}

/// `√(max(γ1γ2, 0)) + 2γ3`.
fn dissipativity(r: &Rates) -> f64 {
    (r.gamma1 * r.gamma2).max(0.0).sqrt() + 2.0 * r.gamma3
}

fn gamma3_derivative(model: &RateModel, t: f64, t_end: f64) -> Result<f64> {
    let h = 1e-6 * t_end.max(1.0);
    let (lo, hi) = model.domain();
    let (a, b) = ((t - h).max(lo), (t + h).min(hi));
    Ok((model.gamma3.eval(b)? - model.gamma3.eval(a)?) / (b - a))
}

/// Non-negative `γ1, γ2` and `√(γ1γ2) + 2γ3 > 0` on `[0, T]`. Isolated
/// zeros of the second expression pass when `γ3' > γ3(γ1 + γ2)` there;
/// stretches where it vanishes identically are accepted.
pub fn check_p_divisible(model: &RateModel, t_end: f64, samples: usize) -> Result<Check> {
    check_window(t_end, samples)?;
    let mut violations = sign_violations(model, t_end, samples, &[Channel::Gamma1, Channel::Gamma2])?;

    let g = |t: f64| -> Result<f64> { Ok(dissipativity(&rates(model, t)?)) };
    let s = Sampled::new(&g, t_end, samples)?;
    let minima = s.refined_minima()?;
    for (t_lo, t_hi, worst) in s.negative_intervals(&minima)? {
        violations.push(Violation { condition: Condition::Dissipativity, t_lo, t_hi, worst, channel: Channel::Combined });
    }

    // Isolated zeros: single near-zero samples and refined minima that
    // touch zero. Runs of two or more near-zero samples are not isolated.
    let n = s.ts.len();
    let near = |i: usize| s.vs[i].abs() <= SIGN_EPS;
    let mut flat: Vec<(f64, f64)> = Vec::new();
    let mut candidates: Vec<f64> = Vec::new();
    let mut i = 0;
    while i < n {
        if !near(i) {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < n && near(i + 1) {
            i += 1;
        }
        if i == start {
            candidates.push(s.ts[i]);
        } else {
            flat.push((s.ts[start], s.ts[i]));
        }
        i += 1;
    }
    let h = s.ts[1] - s.ts[0];
    for &(t, v) in &minima {
        if v.abs() <= SIGN_EPS && !flat.iter().any(|&(a, b)| t >= a - h && t <= b + h) {
            candidates.retain(|&c| (c - t).abs() > h);
            candidates.push(t);
        }
    }
    candidates.sort_by(f64::total_cmp);

    let mut borderline = Vec::new();
    for t in candidates {
        let r = rates(model, t)?;
        let point = BorderlinePoint {
            t,
            value: dissipativity(&r),
            d_gamma3: gamma3_derivative(model, t, t_end)?,
            threshold: r.gamma3 * (r.gamma1 + r.gamma2),
        };
        if !point.satisfied() {
            violations.push(Violation {
                condition: Condition::Borderline,
                t_lo: t,
                t_hi: t,
                worst: point.d_gamma3 - point.threshold,
                channel: Channel::Combined,
            });
        }
        borderline.push(point);
    }
    Ok(Check { violations, borderline })
}

pub fn classify(model: &RateModel, t_end: f64) -> Result<DivisibilityVerdict> {
    classify_with(model, t_end, DEFAULT_SAMPLES)
}

pub fn classify_with(model: &RateModel, t_end: f64, samples: usize) -> Result<DivisibilityVerdict> {
    let cp = check_cp_divisible(model, t_end, samples)?;
    let p = check_p_divisible(model, t_end, samples)?;
    let class = if cp.passed() {
        DivisibilityClass::CpDivisible
    } else if p.passed() {
        DivisibilityClass::PDivisibleOnly
    } else {
        DivisibilityClass::NonPDivisible
    };
    let mut violations = Vec::new();
    if class != DivisibilityClass::CpDivisible {
        for v in cp.violations.into_iter().chain(p.violations) {
            if !violations.contains(&v) {
                violations.push(v);
            }
        }
        violations.sort_by(|a: &Violation, b| a.t_lo.total_cmp(&b.t_lo));
    }
    Ok(DivisibilityVerdict {
        class,
        window: t_end,
        violations,
        samples_per_unit_time: (samples - 1) as f64 / t_end,
        borderline: p.borderline,
    })
}

/// Locates the parameter where a one-parameter family switches between
/// P-divisible and non-P-divisible on `[0, T]`, by bisection.
pub fn critical_k_scan<F>(family: F, k_lo: f64, k_hi: f64, t_end: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<RateModel>,
{
    if !(k_lo < k_hi) {
        return Err(Error::Domain(format!("need k_lo < k_hi, got [{k_lo}, {k_hi}]")));
    }
    let p_div = |k: f64| -> Result<bool> { Ok(classify(&family(k)?, t_end)?.class != DivisibilityClass::NonPDivisible) };
    let (mut lo, mut hi) = (k_lo, k_hi);
    let at_lo = p_div(lo)?;
    if at_lo == p_div(hi)? {
        return Err(Error::Domain(format!(
            "both endpoints k = {k_lo} and k = {k_hi} are {}P-divisible",
            if at_lo { "" } else { "non-" }
        )));
    }
    while hi - lo > CRITICAL_K_TOL {
        let m = 0.5 * (lo + hi);
        if p_div(m)? == at_lo {
            lo = m;
        } else {
            hi = m;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::{
        amplitude_damping_model, cp_oscillating_model, pdiv_crossover_model, pure_dephasing_model,
        sign_violation_model, RateFn,
    };
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn cp_examples() {
        assert!(check_cp_divisible(&cp_oscillating_model(8.0, 5.0).unwrap(), 20.0, DEFAULT_SAMPLES).unwrap().passed());
        assert!(check_cp_divisible(&RateModel::zero(), 20.0, DEFAULT_SAMPLES).unwrap().passed());
        let c = check_cp_divisible(&sign_violation_model(0.5).unwrap(), 5.0, DEFAULT_SAMPLES).unwrap();
        assert!(!c.passed());
        let first = &c.violations[0];
        assert_eq!(first.channel, Channel::Gamma1);
        assert!(first.t_lo < FRAC_PI_2 && FRAC_PI_2 < first.t_hi);
        // k + cos 2t < 0 for |t − π/2| < arccos(k)/2 · … : endpoints at (π − arccos(−k))/2.
        let edge = 0.5 * (-0.5f64).acos();
        assert_abs_diff_eq!(first.t_lo, edge, epsilon = 1e-9);
        assert_abs_diff_eq!(first.t_hi, std::f64::consts::PI - edge, epsilon = 1e-9);
    }

    #[test]
    fn p_examples() {
        assert!(check_p_divisible(&pdiv_crossover_model(0.5).unwrap(), 20.0, DEFAULT_SAMPLES).unwrap().passed());
        let sv1 = check_p_divisible(&sign_violation_model(1.0).unwrap(), 20.0, DEFAULT_SAMPLES).unwrap();
        assert!(sv1.passed());
        let p = check_p_divisible(&pdiv_crossover_model(1.1).unwrap(), 20.0, DEFAULT_SAMPLES).unwrap();
        assert!(p.violations.iter().any(|v| v.condition == Condition::Dissipativity));
    }

    #[test]
    fn pdiv_k1_borderline_points_follow_derivative_rule() {
        // √(γ1γ2) + 2γ3 = e^{−3t/8}(1 + cos 2t) touches zero at t = π/2 + nπ.
        // There γ3 = −e^{−3t/8}/2 and γ3' = (3/16)e^{−3t/8} > 0 > γ3(γ1 + γ2).
        let c = check_p_divisible(&pdiv_crossover_model(1.0).unwrap(), 20.0, DEFAULT_SAMPLES).unwrap();
        let zeros: Vec<f64> = (0..6).map(|n| FRAC_PI_2 + n as f64 * std::f64::consts::PI).collect();
        assert_eq!(c.borderline.len(), zeros.len());
        for (b, z) in c.borderline.iter().zip(&zeros) {
            assert!((b.t - z).abs() < 1e-6, "{} vs {z}", b.t);
            let expect = 3.0 / 16.0 * (-3.0 * z / 8.0).exp();
            assert!((b.d_gamma3 - expect).abs() < 1e-6);
            assert!(b.satisfied());
        }
        assert!(c.passed());
    }

    #[test]
    fn borderline_rule_decides_isolated_zeros() {
        // γ1 = γ2 = 1, γ3 = (t − 1)² − 1/2: √(γ1γ2) + 2γ3 = 2(t − 1)², an
        // isolated zero at t = 1 where γ3' = 0 > γ3(γ1 + γ2) = −1.
        let m = RateModel::new(
            "touch",
            RateFn::Zero,
            RateFn::Constant(1.0),
            RateFn::Constant(1.0),
            RateFn::closure(|t| (t - 1.0).powi(2) - 0.5),
        );
        let c = check_p_divisible(&m, 3.0, 1000).unwrap();
        assert_eq!(c.borderline.len(), 1);
        assert!((c.borderline[0].t - 1.0).abs() < 1e-6);
        assert!(c.passed());

        // γ1 = γ2 = e^{4s}, γ3 = s² − e^{4s}/2 with s = t − 1: the same zero,
        // but γ3' = −2 ≤ γ3(γ1 + γ2) = −1.
        let m = RateModel::new(
            "touch-fail",
            RateFn::Zero,
            RateFn::closure(|t| (4.0 * (t - 1.0)).exp()),
            RateFn::closure(|t| (4.0 * (t - 1.0)).exp()),
            RateFn::closure(|t| (t - 1.0).powi(2) - 0.5 * (4.0 * (t - 1.0)).exp()),
        );
        let c = check_p_divisible(&m, 3.0, 1000).unwrap();
        assert_eq!(c.violations.len(), 1);
        let v = &c.violations[0];
        assert_eq!(v.condition, Condition::Borderline);
        assert!((v.t_lo - 1.0).abs() < 1e-6);
        assert_abs_diff_eq!(v.worst, -1.0, epsilon = 1e-5);
        assert_eq!(classify_with(&m, 3.0, 1000).unwrap().class, DivisibilityClass::NonPDivisible);
    }

    #[test]
    fn flat_zero_is_accepted() {
        let v = classify(&amplitude_damping_model(RateFn::Constant(1.0)), 10.0).unwrap();
        assert_eq!(v.class, DivisibilityClass::CpDivisible);
        assert!(v.borderline.is_empty());
        let v = classify(&RateModel::zero(), 10.0).unwrap();
        assert_eq!(v.class, DivisibilityClass::CpDivisible);
    }

    #[test]
    fn classify_examples() {
        let c = |m: RateModel| classify(&m, 20.0).unwrap();
        assert_eq!(c(cp_oscillating_model(8.0, 5.0).unwrap()).class, DivisibilityClass::CpDivisible);
        let v = c(pdiv_crossover_model(0.5).unwrap());
        assert_eq!(v.class, DivisibilityClass::PDivisibleOnly);
        assert!(v.violations.iter().all(|v| v.channel == Channel::Gamma3));
        let v = c(sign_violation_model(0.5).unwrap());
        assert_eq!(v.class, DivisibilityClass::NonPDivisible);
        assert!(!v.violations.is_empty());
        assert_eq!(c(pure_dephasing_model(RateFn::Constant(1.0))).class, DivisibilityClass::CpDivisible);
        for (nu, om) in [(8.0, 5.0), (1.0, 0.0), (2.0, 10.0)] {
            assert_eq!(c(cp_oscillating_model(nu, om).unwrap()).class, DivisibilityClass::CpDivisible);
        }
    }

    #[test]
    fn cp_class_has_no_records_and_non_p_has_witness() {
        for k in [0.3, 0.5, 0.9] {
            let v = classify(&sign_violation_model(k).unwrap(), 20.0).unwrap();
            assert_eq!(v.class, DivisibilityClass::NonPDivisible);
            for viol in &v.violations {
                assert!(viol.t_lo <= viol.t_hi);
                assert!(viol.worst < -1e-10, "{viol:?}");
            }
        }
        for k in [1.05, 1.5] {
            let v = classify(&pdiv_crossover_model(k).unwrap(), 20.0).unwrap();
            assert_eq!(v.class, DivisibilityClass::NonPDivisible);
            assert!(v.violations.iter().any(|x| x.condition == Condition::Dissipativity && x.worst < -1e-10));
        }
    }

    #[test]
    fn window_monotonicity() {
        let m = sign_violation_model(0.9).unwrap();
        let mut seen_non_p = false;
        for t in [1.0, 2.0, 5.0, 10.0, 20.0] {
            let non_p = classify(&m, t).unwrap().class == DivisibilityClass::NonPDivisible;
            assert!(!(seen_non_p && !non_p), "window {t}");
            seen_non_p |= non_p;
        }
        assert!(seen_non_p);
    }

    #[test]
    fn unital_family_matches_rate_sign() {
        for k in [0.5, 0.9, 1.0, 1.1] {
            let m = sign_violation_model(k).unwrap();
            let dips = check_cp_divisible(&m, 20.0, DEFAULT_SAMPLES)
                .unwrap()
                .violations
                .iter()
                .any(|v| v.channel == Channel::Gamma1);
            let non_p = classify(&m, 20.0).unwrap().class == DivisibilityClass::NonPDivisible;
            assert_eq!(dips, non_p, "k = {k}");
            assert_eq!(non_p, k < 1.0);
        }
    }

    #[test]
    fn critical_k() {
        let k = critical_k_scan(pdiv_crossover_model, 0.5, 1.5, 20.0).unwrap();
        assert!((k - 1.0).abs() <= 1e-3, "{k}");
        let k = critical_k_scan(sign_violation_model, 0.5, 1.5, 20.0).unwrap();
        assert!((k - 1.0).abs() <= 1e-3, "{k}");
        assert!(critical_k_scan(pdiv_crossover_model, 0.2, 0.5, 20.0).is_err());
        assert!(critical_k_scan(pdiv_crossover_model, 1.5, 0.5, 20.0).is_err());
    }

    #[test]
    fn json_shape() {
        let v = classify(&pdiv_crossover_model(0.5).unwrap(), 20.0).unwrap();
        let j: serde_json::Value = serde_json::from_str(&v.to_json()).unwrap();
        assert_eq!(j["class"], "P_DIVISIBLE_ONLY");
        assert_eq!(j["window"], serde_json::json!([0.0, 20.0]));
        let first = &j["violations"][0];
        assert_eq!(first["condition"], "RATE_SIGN");
        for key in ["t_lo", "t_hi", "worst"] {
            assert!(first[key].is_number());
        }
        assert_eq!(first["channel"], "gamma3");
        assert_eq!(j.as_object().unwrap().len(), 3);
    }

    #[test]
    fn bad_window() {
        assert!(classify(&RateModel::zero(), 0.0).is_err());
        assert!(classify_with(&RateModel::zero(), 1.0, 2).is_err());
    }
}
