//! Grid scans over initial state and horizon, trajectory panels, scan
//! comparison, and the configuration they share with the CLI.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::divisibility::{classify, DivisibilityVerdict};
use crate::error::{Error, Result};
use crate::ode::Tolerances;
use crate::propagator::{propagate_ode, TimeGrid, Trajectory};
use crate::qsl::{qsl_profile, qsl_reports};
use crate::rates::{builtin_model, rates_from_table, RateModel, TabulatedRates};
use crate::state::{pure_state_from_a, PureStateParam};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "QSL_LAB_THREADS";
/// Tolerance for "ratio equals 1".
pub const UNIT_RATIO_TOL: f64 = 1e-6;
/// Default classification window.
pub const DEFAULT_HORIZON: f64 = 20.0;

/// Model name plus parameters, resolved lazily into a [`RateModel`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelSpec {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    pub rates: Option<PathBuf>,
}

impl ModelSpec {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), params: BTreeMap::new(), rates: None }
    }

    pub fn param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.into(), value);
        self
    }

    pub fn build(&self) -> Result<RateModel> {
        if self.name == "table" {
            let path = self
                .rates
                .as_ref()
                .ok_or_else(|| Error::Domain("model \"table\" needs a rates file (--rates PATH)".into()))?;
            return Ok(rates_from_table(TabulatedRates::from_csv_path(path)?));
        }
        builtin_model(&self.name, &self.params)
    }

    /// Horizon used for figures of this model when none is given.
    pub fn default_tau_max(&self) -> f64 {
        if self.name == "cp-osc" {
            3.0
        } else {
            10.0
        }
    }
}

/// Everything that determines a surface scan.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanConfig {
    pub model: ModelSpec,
    pub a_count: usize,
    pub a_min: f64,
    pub a_max: f64,
    pub tau_count: usize,
    pub tau_max: f64,
    pub tol: Tolerances,
    pub horizon: f64,
    pub output: Option<PathBuf>,
    /// Worker count; `None` reads [`THREADS_ENV`], then falls back to the
    /// number of CPUs.
    pub threads: Option<usize>,
}

impl ScanConfig {
    pub fn new(model: ModelSpec) -> Self {
        let tau_max = model.default_tau_max();
        Self {
            model,
            a_count: 101,
            a_min: 0.0,
            a_max: 1.0,
            tau_count: 200,
            tau_max,
            tol: Tolerances::default(),
            horizon: DEFAULT_HORIZON,
            output: None,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.a_count == 0 || self.tau_count == 0 {
            return Err(Error::Domain("scan grids must be non-empty".into()));
        }
        if !(0.0..=1.0).contains(&self.a_min) || !(0.0..=1.0).contains(&self.a_max) || self.a_min > self.a_max {
            return Err(Error::Domain(format!("a range [{}, {}] must lie in [0, 1]", self.a_min, self.a_max)));
        }
        if !(self.tau_max > 0.0 && self.tau_max.is_finite()) {
            return Err(Error::Domain(format!("tau_max must be positive, got {}", self.tau_max)));
        }
        if !(self.tol.rtol > 0.0 && self.tol.atol > 0.0) {
            return Err(Error::Domain("tolerances must be positive".into()));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::Domain(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.threads == Some(0) {
            return Err(Error::Domain("threads must be at least 1".into()));
        }
        Ok(())
    }

    pub fn a_values(&self) -> Vec<f64> {
        if self.a_count == 1 {
            return vec![self.a_min];
        }
        let n = (self.a_count - 1) as f64;
        (0..self.a_count)
            .map(|i| {
                if i == self.a_count - 1 {
                    self.a_max
                } else {
                    self.a_min + (self.a_max - self.a_min) * i as f64 / n
                }
            })
            .collect()
    }

    /// `τ_max · j / n` for `j = 1..=n`.
    pub fn tau_values(&self) -> Vec<f64> {
        let n = self.tau_count;
        (1..=n).map(|j| if j == n { self.tau_max } else { self.tau_max * j as f64 / n as f64 }).collect()
    }

    pub fn effective_threads(&self) -> Result<usize> {
        if let Some(n) = self.threads {
            return Ok(n);
        }
        match std::env::var(THREADS_ENV) {
            Ok(v) => match v.trim().parse::<usize>() {
                Ok(n) if n > 0 => Ok(n),
                _ => Err(Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
            },
            Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
        }
    }

    /// Applies the grid, tolerance and output keys of a config file; model
    /// keys are resolved separately through [`ConfigFile::apply_model`].
    pub fn apply_file(&mut self, file: &ConfigFile) {
        set(&mut self.a_count, file.a_count);
        set(&mut self.a_min, file.a_min);
        set(&mut self.a_max, file.a_max);
        set(&mut self.tau_count, file.tau_count);
        set(&mut self.tau_max, file.tau_max);
        set(&mut self.tol.rtol, file.rtol);
        set(&mut self.tol.atol, file.atol);
        set(&mut self.horizon, file.horizon);
        if file.output.is_some() {
            self.output = file.output.clone();
        }
        if file.threads.is_some() {
            self.threads = file.threads;
        }
    }
}

fn set<T: Copy>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

/// Flat key-value config file, mirroring [`ScanConfig`].
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub model: Option<String>,
    pub nu: Option<f64>,
    pub omega: Option<f64>,
    pub k: Option<f64>,
    pub gamma: Option<f64>,
    pub rates: Option<PathBuf>,
    pub a: Option<f64>,
    pub tau: Option<f64>,
    pub nodes: Option<usize>,
    pub a_count: Option<usize>,
    pub a_min: Option<f64>,
    pub a_max: Option<f64>,
    pub tau_count: Option<usize>,
    pub tau_max: Option<f64>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub horizon: Option<f64>,
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn apply_model(&self, spec: &mut ModelSpec) {
        if let Some(name) = &self.model {
            spec.name = name.clone();
        }
        for (key, v) in [("nu", self.nu), ("omega", self.omega), ("k", self.k), ("gamma", self.gamma)] {
            if let Some(v) = v {
                spec.params.insert(key.into(), v);
            }
        }
        if self.rates.is_some() {
            spec.rates = self.rates.clone();
        }
    }
}

/// One grid point of a surface scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub a: f64,
    pub tau: f64,
    pub ratio: f64,
    pub bures_angle: f64,
    pub lambda_op: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub version: &'static str,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl Provenance {
    pub fn now() -> Self {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        Self { version: env!("CARGO_PKG_VERSION"), timestamp }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanResult {
    pub config: ScanConfig,
    pub rows: Vec<ScanRow>,
    pub verdict: DivisibilityVerdict,
    pub provenance: Provenance,
}

pub const SCAN_HEADER: &str = "a,tau,ratio,bures_angle,lambda_op";

impl ScanResult {
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "{SCAN_HEADER}")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{},{}", r.a, r.tau, r.ratio, r.bures_angle, r.lambda_op)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ASCII output")
    }

    /// Config echo, verdict and provenance as JSON.
    pub fn metadata_json(&self) -> String {
        #[derive(Serialize)]
        struct Meta<'a> {
            config: &'a ScanConfig,
            rows: usize,
            verdict: &'a DivisibilityVerdict,
            provenance: &'a Provenance,
        }
        serde_json::to_string_pretty(&Meta {
            config: &self.config,
            rows: self.rows.len(),
            verdict: &self.verdict,
            provenance: &self.provenance,
        })
        .expect("metadata serializes")
    }

    pub fn min_ratio(&self) -> Option<&ScanRow> {
        self.rows.iter().min_by(|x, y| x.ratio.total_cmp(&y.ratio))
    }
}

/// QSL ratio on the full `(a, τ)` grid. Each `a` is one propagation over
/// all horizons; rows come out `a`-major regardless of scheduling.
pub fn qsl_surface_scan(cfg: &ScanConfig) -> Result<ScanResult> {
    cfg.validate()?;
    let model = cfg.model.build()?;
    let (_, domain_hi) = model.domain();
    let verdict = classify(&model, cfg.horizon.min(domain_hi))?;
    let taus = cfg.tau_values();
    let a_values = cfg.a_values();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.effective_threads()?)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let columns: Vec<Result<Vec<ScanRow>>> = pool.install(|| {
        a_values
            .par_iter()
            .map(|&a| {
                let tag = |source| Error::AtPoint { a, source: Box::new(source) };
                let reports = qsl_profile(&model, PureStateParam::new(a)?, &taus, cfg.tol).map_err(tag)?;
                Ok(reports
                    .into_iter()
                    .map(|r| ScanRow { a, tau: r.tau, ratio: r.ratio, bures_angle: r.bures_angle, lambda_op: r.lambda_op })
                    .collect())
            })
            .collect()
    });
    let mut rows = Vec::with_capacity(a_values.len() * taus.len());
    for c in columns {
        rows.extend(c?);
    }
    Ok(ScanResult { config: cfg.clone(), rows, verdict, provenance: Provenance::now() })
}

/// Per-node populations, coherence, fidelity and the QSL ratio on `[0, t]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PanelRow {
    pub t: f64,
    pub p0: f64,
    pub p1: f64,
    pub coh_abs: f64,
    pub fidelity: f64,
    pub qsl_ratio_running: f64,
}

pub const PANEL_HEADER: &str = "t,p0,p1,coh_abs,fidelity,qsl_ratio_running";

pub fn trajectory_panel(model: &RateModel, a: PureStateParam, grid: &TimeGrid) -> Result<Vec<PanelRow>> {
    let traj = propagate_ode(model, &pure_state_from_a(a), grid)?;
    panel_rows(&traj)
}

pub fn panel_rows(traj: &Trajectory) -> Result<Vec<PanelRow>> {
    let reports = qsl_reports(traj)?;
    Ok(traj
        .times()
        .iter()
        .zip(traj.states())
        .zip(traj.fidelities())
        .zip(reports)
        .map(|(((&t, s), &f), r)| PanelRow {
            t,
            p0: s.p0(),
            p1: s.p1(),
            coh_abs: s.coherence().norm(),
            fidelity: f,
            qsl_ratio_running: r.ratio,
        })
        .collect())
}

pub fn write_panel_csv(rows: &[PanelRow], mut w: impl Write) -> Result<()> {
    writeln!(w, "{PANEL_HEADER}")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{},{}", r.t, r.p0, r.p1, r.coh_abs, r.fidelity, r.qsl_ratio_running)?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiffRow {
    pub a: f64,
    pub tau: f64,
    pub ratio_a: f64,
    pub ratio_b: f64,
    pub diff: f64,
}

/// Point-wise comparison of two scans on the same grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanDiff {
    pub rows: Vec<DiffRow>,
    /// Points where only the first scan has ratio 1.
    pub unit_only_a: Vec<(f64, f64)>,
    /// Points where only the second scan has ratio 1.
    pub unit_only_b: Vec<(f64, f64)>,
    pub max_abs_diff: f64,
}

impl ScanDiff {
    pub fn unit_regions_coincide(&self) -> bool {
        self.unit_only_a.is_empty() && self.unit_only_b.is_empty()
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "a,tau,ratio_a,ratio_b,diff")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{},{}", r.a, r.tau, r.ratio_a, r.ratio_b, r.diff)?;
        }
        Ok(())
    }
}

fn is_unit(r: f64) -> bool {
    (r - 1.0).abs() <= UNIT_RATIO_TOL
}

pub fn compare_scans(x: &ScanResult, y: &ScanResult) -> Result<ScanDiff> {
    compare_rows(&x.rows, &y.rows)
}

pub fn compare_rows(x: &[ScanRow], y: &[ScanRow]) -> Result<ScanDiff> {
    if x.len() != y.len() || x.iter().zip(y).any(|(p, q)| p.a != q.a || p.tau != q.tau) {
        return Err(Error::Domain("scans are on different grids".into()));
    }
    let mut diff = ScanDiff { rows: Vec::with_capacity(x.len()), unit_only_a: vec![], unit_only_b: vec![], max_abs_diff: 0.0 };
    for (p, q) in x.iter().zip(y) {
        let d = q.ratio - p.ratio;
        diff.max_abs_diff = diff.max_abs_diff.max(d.abs());
        diff.rows.push(DiffRow { a: p.a, tau: p.tau, ratio_a: p.ratio, ratio_b: q.ratio, diff: d });
        match (is_unit(p.ratio), is_unit(q.ratio)) {
            (true, false) => diff.unit_only_a.push((p.a, p.tau)),
            (false, true) => diff.unit_only_b.push((p.a, p.tau)),
            _ => {}
        }
    }
    Ok(diff)
}
