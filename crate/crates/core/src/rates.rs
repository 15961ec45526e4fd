//! Rate functions `(ω_H(t), γ1(t), γ2(t), γ3(t))` of the phase-covariant
//! generator, the built-in model catalogue, and tabulated rates read from CSV.
//!
//! Rates are stored exactly as the models define them; the `γ/2` prefactors
//! of the dissipators are applied by the generator.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};

type Closure = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// One time-dependent rate.
#[derive(Clone)]
pub enum RateFn {
    Zero,
    Constant(f64),
    Closure(Closure),
    Table(Arc<TabulatedRates>, Column),
}

impl RateFn {
    pub fn closure(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        RateFn::Closure(Arc::new(f))
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        let v = match self {
            RateFn::Zero => 0.0,
            RateFn::Constant(c) => *c,
            RateFn::Closure(f) => f(t),
            RateFn::Table(tab, col) => tab.interpolate(*col, t)?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!("rate evaluates to {v} at t = {t}")))
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, RateFn::Zero) || matches!(self, RateFn::Constant(c) if *c == 0.0)
    }
}

impl fmt::Debug for RateFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateFn::Zero => write!(f, "Zero"),
            RateFn::Constant(c) => write!(f, "Constant({c})"),
            RateFn::Closure(_) => write!(f, "Closure(..)"),
            RateFn::Table(_, col) => write!(f, "Table({col:?})"),
        }
    }
}

/// Instantaneous rate values at one time.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Rates {
    pub omega_h: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
}

/// A phase-covariant generator specification.
#[derive(Clone, Debug)]
pub struct RateModel {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    pub omega_h: RateFn,
    pub gamma1: RateFn,
    pub gamma2: RateFn,
    pub gamma3: RateFn,
}

impl RateModel {
    pub fn new(
        name: impl Into<String>,
        omega_h: RateFn,
        gamma1: RateFn,
        gamma2: RateFn,
        gamma3: RateFn,
    ) -> Self {
        Self {
            name: name.into(),
            params: BTreeMap::new(),
            omega_h,
            gamma1,
            gamma2,
            gamma3,
        }
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    /// All rates identically zero; the generator vanishes.
    pub fn zero() -> Self {
        Self::new("zero", RateFn::Zero, RateFn::Zero, RateFn::Zero, RateFn::Zero)
    }

    pub fn rates_at(&self, t: f64) -> Result<Rates> {
        Ok(Rates {
            omega_h: self.omega_h.eval(t)?,
            gamma1: self.gamma1.eval(t)?,
            gamma2: self.gamma2.eval(t)?,
            gamma3: self.gamma3.eval(t)?,
        })
    }

    /// Time interval on which the rates are defined.
    pub fn domain(&self) -> (f64, f64) {
        let mut lo = 0.0f64;
        let mut hi = f64::INFINITY;
        for r in [&self.omega_h, &self.gamma1, &self.gamma2, &self.gamma3] {
            if let RateFn::Table(tab, _) = r {
                lo = lo.max(tab.t[0]);
                hi = hi.min(*tab.t.last().unwrap());
            }
        }
        (lo, hi)
    }
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Domain(msg()))
    }
}

/// Always-CP-divisible model with oscillating populations:
/// `γ1,2(t) = ν ± ν(2ν sin ωt + ω cos ωt)/√(4ν² + ω²)`, `γ3 = 0`.
pub fn cp_oscillating_model(nu: f64, omega: f64) -> Result<RateModel> {
    require(nu > 0.0 && nu.is_finite(), || format!("cp-osc requires nu > 0, got {nu}"))?;
    require(omega >= 0.0 && omega.is_finite(), || {
        format!("cp-osc requires omega >= 0, got {omega}")
    })?;
    let norm = (4.0 * nu * nu + omega * omega).sqrt();
    let osc = move |t: f64| nu * (2.0 * nu * (omega * t).sin() + omega * (omega * t).cos()) / norm;
    Ok(RateModel::new(
        "cp-osc",
        RateFn::Zero,
        RateFn::closure(move |t| nu + osc(t)),
        RateFn::closure(move |t| nu - osc(t)),
        RateFn::Zero,
    )
    .with_param("nu", nu)
    .with_param("omega", omega))
}

/// P-divisibility crossover model: `γ1 = e^{-t/2}`, `γ2 = e^{-t/4}`,
/// `γ3 = (k/2) e^{-3t/8} cos 2t`.
pub fn pdiv_crossover_model(k: f64) -> Result<RateModel> {
    require(k >= 0.0 && k.is_finite(), || format!("pdiv-crossover requires k >= 0, got {k}"))?;
    Ok(RateModel::new(
        "pdiv-crossover",
        RateFn::Zero,
        RateFn::closure(|t| (-t / 2.0).exp()),
        RateFn::closure(|t| (-t / 4.0).exp()),
        RateFn::closure(move |t| 0.5 * k * (-3.0 * t / 8.0).exp() * (2.0 * t).cos()),
    )
    .with_param("k", k))
}

/// Unital model whose rates turn negative for `k < 1`:
/// `γ1 = γ2 = e^{-t/2}(k + cos 2t)`, `γ3 = e^{-3t/8}`.
pub fn sign_violation_model(k: f64) -> Result<RateModel> {
    require(k >= 0.0 && k.is_finite(), || format!("sign-violation requires k >= 0, got {k}"))?;
    let g = move |t: f64| (-t / 2.0).exp() * (k + (2.0 * t).cos());
    Ok(RateModel::new(
        "sign-violation",
        RateFn::Zero,
        RateFn::closure(g),
        RateFn::closure(g),
        RateFn::closure(|t| (-3.0 * t / 8.0).exp()),
    )
    .with_param("k", k))
}

/// Amplitude damping: only the dissipation channel `γ2 = γ` is active.
pub fn amplitude_damping_model(gamma: RateFn) -> RateModel {
    let mut m = RateModel::new("amp-damp", RateFn::Zero, RateFn::Zero, gamma, RateFn::Zero);
    if let RateFn::Constant(g) = m.gamma2 {
        m.params.insert("gamma".into(), g);
    }
    m
}

/// Pure dephasing: only `γ3 = γ` is active.
pub fn pure_dephasing_model(gamma: RateFn) -> RateModel {
    let mut m = RateModel::new("dephasing", RateFn::Zero, RateFn::Zero, RateFn::Zero, gamma);
    if let RateFn::Constant(g) = m.gamma3 {
        m.params.insert("gamma".into(), g);
    }
    m
}

/// Column of a [`TabulatedRates`] table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Column {
    Omega,
    Gamma1,
    Gamma2,
    Gamma3,
}

/// Rates sampled on strictly increasing knots, linearly interpolated.
#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedRates {
    t: Vec<f64>,
    gamma1: Vec<f64>,
    gamma2: Vec<f64>,
    gamma3: Vec<f64>,
    omega: Option<Vec<f64>>,
}

impl TabulatedRates {
    pub fn new(
        t: Vec<f64>,
        gamma1: Vec<f64>,
        gamma2: Vec<f64>,
        gamma3: Vec<f64>,
        omega: Option<Vec<f64>>,
    ) -> Result<Self> {
        if t.len() < 2 {
            return Err(Error::Table(format!("need at least 2 knots, got {}", t.len())));
        }
        let n = t.len();
        let cols = [Some(&gamma1), Some(&gamma2), Some(&gamma3), omega.as_ref()];
        for col in cols.into_iter().flatten() {
            if col.len() != n {
                return Err(Error::Table(format!("column length {} != {n} knots", col.len())));
            }
        }
        for col in [Some(&t), Some(&gamma1), Some(&gamma2), Some(&gamma3), omega.as_ref()]
            .into_iter()
            .flatten()
        {
            if let Some(bad) = col.iter().find(|v| !v.is_finite()) {
                return Err(Error::Table(format!("non-finite value {bad}")));
            }
        }
        if let Some(w) = t.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::Table(format!(
                "knots not strictly increasing at row {} ({} -> {})",
                w + 1,
                t[w],
                t[w + 1]
            )));
        }
        Ok(Self { t, gamma1, gamma2, gamma3, omega })
    }

    /// Reads `t,gamma1,gamma2,gamma3[,omega]` CSV with a header row.
    pub fn from_csv_reader(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::Table(e.to_string()))?.clone();
        let idx = |name: &str| headers.iter().position(|h| h == name);
        let (it, i1, i2, i3) = match (idx("t"), idx("gamma1"), idx("gamma2"), idx("gamma3")) {
            (Some(a), Some(b), Some(c), Some(d)) => (a, b, c, d),
            _ => {
                return Err(Error::Table(format!(
                    "header must contain t,gamma1,gamma2,gamma3; got {:?}",
                    headers.iter().collect::<Vec<_>>()
                )))
            }
        };
        let iw = idx("omega");
        let (mut t, mut g1, mut g2, mut g3) = (vec![], vec![], vec![], vec![]);
        let mut om = iw.map(|_| vec![]);
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Table(e.to_string()))?;
            let field = |i: usize| -> Result<f64> {
                let s = rec.get(i).unwrap_or("");
                s.parse::<f64>()
                    .map_err(|_| Error::Table(format!("row {}: cannot parse {s:?}", row + 1)))
            };
            t.push(field(it)?);
            g1.push(field(i1)?);
            g2.push(field(i2)?);
            g3.push(field(i3)?);
            if let (Some(i), Some(v)) = (iw, om.as_mut()) {
                v.push(field(i)?);
            }
        }
        Self::new(t, g1, g2, g3, om)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::from_csv_reader(f)
    }

    pub fn knots(&self) -> &[f64] {
        &self.t
    }

    pub fn interpolate(&self, col: Column, t: f64) -> Result<f64> {
        let lo = self.t[0];
        let hi = *self.t.last().unwrap();
        if !(t >= lo && t <= hi) {
            return Err(Error::OutOfRange { t, lo, hi });
        }
        let values = match col {
            Column::Gamma1 => &self.gamma1,
            Column::Gamma2 => &self.gamma2,
            Column::Gamma3 => &self.gamma3,
            Column::Omega => match &self.omega {
                Some(w) => w,
                None => return Ok(0.0),
            },
        };
        let j = self.t.partition_point(|&k| k <= t).clamp(1, self.t.len() - 1);
        let (t0, t1) = (self.t[j - 1], self.t[j]);
        let s = (t - t0) / (t1 - t0);
        Ok(values[j - 1] + s * (values[j] - values[j - 1]))
    }
}

/// Model whose four rates interpolate the table.
pub fn rates_from_table(table: TabulatedRates) -> RateModel {
    let tab = Arc::new(table);
    let omega = if tab.omega.is_some() {
        RateFn::Table(tab.clone(), Column::Omega)
    } else {
        RateFn::Zero
    };
    RateModel::new(
        "table",
        omega,
        RateFn::Table(tab.clone(), Column::Gamma1),
        RateFn::Table(tab.clone(), Column::Gamma2),
        RateFn::Table(tab, Column::Gamma3),
    )
}

/// Built-in model names with their parameters, as listed by the CLI.
pub const BUILTIN_MODELS: &[(&str, &str)] = &[
    ("cp-osc", "--nu > 0, --omega >= 0: γ1,2 = ν ± ν(2ν sin ωt + ω cos ωt)/√(4ν²+ω²), γ3 = 0"),
    ("pdiv-crossover", "--k >= 0: γ1 = e^{-t/2}, γ2 = e^{-t/4}, γ3 = (k/2) e^{-3t/8} cos 2t"),
    ("sign-violation", "--k >= 0: γ1 = γ2 = e^{-t/2}(k + cos 2t), γ3 = e^{-3t/8}"),
    ("amp-damp", "--gamma (constant): γ2 = γ, others 0"),
    ("dephasing", "--gamma (constant): γ3 = γ, others 0"),
    ("zero", "no parameters: all rates 0"),
    ("table", "--rates PATH: CSV with header t,gamma1,gamma2,gamma3[,omega], linear interpolation"),
];

/// Builds a built-in model from its name and a parameter map.
///
/// Missing parameters fall back to the values used for the reference
/// figures (`ν = 8`, `ω = 5`, `k = 0.5`, `γ = 1`).
pub fn builtin_model(name: &str, params: &BTreeMap<String, f64>) -> Result<RateModel> {
    let get = |k: &str, default: f64| params.get(k).copied().unwrap_or(default);
    match name {
        "cp-osc" => cp_oscillating_model(get("nu", 8.0), get("omega", 5.0)),
        "pdiv-crossover" => pdiv_crossover_model(get("k", 0.5)),
        "sign-violation" => sign_violation_model(get("k", 0.5)),
        "amp-damp" => Ok(amplitude_damping_model(RateFn::Constant(get("gamma", 1.0)))),
        "dephasing" => Ok(pure_dephasing_model(RateFn::Constant(get("gamma", 1.0)))),
        "zero" => Ok(RateModel::zero()),
        _ => Err(Error::Domain(format!(
            "unknown model {name:?}; available: {}",
            BUILTIN_MODELS.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn dense_grid(t_max: f64, n: usize) -> impl Iterator<Item = f64> {
        (0..=n).map(move |i| t_max * i as f64 / n as f64)
    }

    #[test]
    fn cp_osc_at_zero() {
        let m = cp_oscillating_model(8.0, 5.0).unwrap();
        let r = m.rates_at(0.0).unwrap();
        // 8 ± 40/√281
        assert_abs_diff_eq!(r.gamma1, 8.0 + 40.0 / 281f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(r.gamma1, 10.3862, epsilon = 1e-4);
        assert_abs_diff_eq!(r.gamma2, 5.6138, epsilon = 1e-4);
        assert_eq!(r.gamma3, 0.0);
        assert_eq!(r.omega_h, 0.0);
    }

    #[test]
    fn cp_osc_sum_and_omega_zero() {
        let m = cp_oscillating_model(3.0, 7.0).unwrap();
        for t in dense_grid(10.0, 500) {
            let r = m.rates_at(t).unwrap();
            assert_abs_diff_eq!(r.gamma1 + r.gamma2, 6.0, epsilon = 1e-13);
        }
        let m = cp_oscillating_model(2.5, 0.0).unwrap();
        for t in dense_grid(10.0, 100) {
            let r = m.rates_at(t).unwrap();
            assert_abs_diff_eq!(r.gamma1, 2.5, epsilon = 1e-15);
            assert_abs_diff_eq!(r.gamma2, 2.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn cp_osc_rates_bounded() {
        for (nu, om) in [(8.0, 5.0), (1.0, 0.0), (2.0, 10.0)] {
            let m = cp_oscillating_model(nu, om).unwrap();
            for t in dense_grid(20.0, 20_000) {
                let r = m.rates_at(t).unwrap();
                for g in [r.gamma1, r.gamma2] {
                    assert!(g >= -1e-12 && g <= 2.0 * nu + 1e-12, "{g} at t={t}");
                }
            }
        }
    }

    #[test]
    fn domain_errors() {
        assert!(cp_oscillating_model(0.0, 1.0).is_err());
        assert!(cp_oscillating_model(1.0, -1.0).is_err());
        assert!(pdiv_crossover_model(-0.1).is_err());
        assert!(sign_violation_model(-1.0).is_err());
        assert!(matches!(builtin_model("nosuch", &BTreeMap::new()), Err(Error::Domain(m)) if m.contains("cp-osc")));
    }

    #[test]
    fn pdiv_crossover_values() {
        let m = pdiv_crossover_model(0.5).unwrap();
        let r = m.rates_at(0.0).unwrap();
        assert_eq!((r.gamma1, r.gamma2, r.gamma3), (1.0, 1.0, 0.25));

        let m = pdiv_crossover_model(1.0).unwrap();
        let t = PI / 2.0;
        let r = m.rates_at(t).unwrap();
        assert_abs_diff_eq!(r.gamma3, -0.5 * (-3.0 * PI / 16.0).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!((r.gamma1 * r.gamma2).sqrt() + 2.0 * r.gamma3, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn pdiv_crossover_dissipativity_closed_form() {
        for k in [0.0, 0.5, 1.0, 1.7] {
            let m = pdiv_crossover_model(k).unwrap();
            for t in dense_grid(20.0, 4000) {
                let r = m.rates_at(t).unwrap();
                assert_abs_diff_eq!((r.gamma1 * r.gamma2).sqrt(), (-3.0 * t / 8.0).exp(), epsilon = 1e-14);
                let generic = (r.gamma1 * r.gamma2).sqrt() + 2.0 * r.gamma3;
                let closed = (-3.0 * t / 8.0).exp() * (1.0 + k * (2.0 * t).cos());
                assert_abs_diff_eq!(generic, closed, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn sign_violation_values() {
        let m = sign_violation_model(0.5).unwrap();
        let r = m.rates_at(PI / 2.0).unwrap();
        assert_abs_diff_eq!(r.gamma1, -0.5 * (-PI / 4.0).exp(), epsilon = 1e-15);
        assert!(r.gamma1 < 0.0);
        assert_eq!(r.gamma1, r.gamma2);

        let m = sign_violation_model(1.0).unwrap();
        let r = m.rates_at(0.0).unwrap();
        assert_eq!((r.gamma1, r.gamma3), (2.0, 1.0));
        for t in dense_grid(20.0, 10_000) {
            assert!(m.rates_at(t).unwrap().gamma1 >= -1e-15);
        }
    }

    #[test]
    fn amplitude_damping_and_dephasing() {
        let m = amplitude_damping_model(RateFn::Constant(1.0));
        assert_eq!(m.rates_at(3.0).unwrap(), Rates { gamma2: 1.0, ..Default::default() });

        let m = amplitude_damping_model(RateFn::closure(|t| (-t).exp()));
        assert_abs_diff_eq!(m.rates_at(2f64.ln()).unwrap().gamma2, 0.5, epsilon = 1e-15);

        let tab = TabulatedRates::new(vec![0.0, 1.0], vec![0.0; 2], vec![1.0, 0.0], vec![0.0; 2], None).unwrap();
        let m = amplitude_damping_model(RateFn::Table(Arc::new(tab), Column::Gamma2));
        assert_eq!(m.rates_at(0.5).unwrap().gamma2, 0.5);

        let m = pure_dephasing_model(RateFn::Constant(1.0));
        assert_eq!(m.rates_at(0.7).unwrap(), Rates { gamma3: 1.0, ..Default::default() });
    }

    #[test]
    fn table_interpolation_and_errors() {
        let csv = "t,gamma1,gamma2,gamma3\n0,1,0,0\n2,3,0,0\n";
        let m = rates_from_table(TabulatedRates::from_csv_reader(csv.as_bytes()).unwrap());
        assert_eq!(m.rates_at(1.0).unwrap().gamma1, 2.0);
        assert_eq!(m.rates_at(2.0).unwrap().gamma1, 3.0);
        assert!(matches!(m.rates_at(3.0), Err(Error::OutOfRange { .. })));
        assert!(matches!(m.rates_at(-0.5), Err(Error::OutOfRange { .. })));
        assert_eq!(m.domain(), (0.0, 2.0));

        let single = "t,gamma1,gamma2,gamma3\n0,1,0,0\n";
        assert!(matches!(TabulatedRates::from_csv_reader(single.as_bytes()), Err(Error::Table(_))));
        let unsorted = "t,gamma1,gamma2,gamma3\n0,1,0,0\n2,1,0,0\n1,1,0,0\n";
        assert!(matches!(TabulatedRates::from_csv_reader(unsorted.as_bytes()), Err(Error::Table(_))));
        let nan = "t,gamma1,gamma2,gamma3\n0,1,0,0\n1,NaN,0,0\n";
        assert!(matches!(TabulatedRates::from_csv_reader(nan.as_bytes()), Err(Error::Table(_))));
        let bad_header = "time,g1\n0,1\n";
        assert!(TabulatedRates::from_csv_reader(bad_header.as_bytes()).is_err());
    }

    #[test]
    fn table_optional_omega_column() {
        let csv = "t,gamma1,gamma2,gamma3,omega\n0,0,0,0,1\n1,0,0,0,3\n";
        let m = rates_from_table(TabulatedRates::from_csv_reader(csv.as_bytes()).unwrap());
        assert_eq!(m.rates_at(0.5).unwrap().omega_h, 2.0);
    }

    #[test]
    fn builtins_finite_on_long_horizon() {
        let models = [
            cp_oscillating_model(8.0, 5.0).unwrap(),
            pdiv_crossover_model(0.5).unwrap(),
            pdiv_crossover_model(1.0).unwrap(),
            sign_violation_model(0.5).unwrap(),
            sign_violation_model(1.0).unwrap(),
        ];
        for m in &models {
            for t in dense_grid(100.0, 10_000) {
                m.rates_at(t).unwrap();
            }
        }
    }
}
