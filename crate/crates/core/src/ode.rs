//! Dormand–Prince 5(4) with the standard fourth-order continuous extension.
//!
//! The step sequence depends only on the tolerances and the right-hand side;
//! output nodes are served from the dense interpolant.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFE: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;
const MAX_STEPS: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12 }
    }
}

/// Interpolant over one accepted step.
#[derive(Clone, Debug)]
pub struct Segment<const N: usize> {
    pub t0: f64,
    pub h: f64,
    rcont: [[f64; N]; 5],
}

impl<const N: usize> Segment<N> {
    pub fn eval(&self, t: f64) -> [f64; N] {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let r = &self.rcont;
        std::array::from_fn(|i| {
            r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])))
        })
    }
}

/// Piecewise interpolant covering `[t_start, t_end]`.
#[derive(Clone, Debug)]
pub struct DenseOutput<const N: usize> {
    segments: Vec<Segment<N>>,
    y0: [f64; N],
    t_start: f64,
    t_end: f64,
}

impl<const N: usize> DenseOutput<N> {
    pub fn span(&self) -> (f64, f64) {
        (self.t_start, self.t_end)
    }

    pub fn steps(&self) -> usize {
        self.segments.len()
    }

    /// Accepted step boundaries, including both ends.
    pub fn step_times(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.segments.iter().map(|s| s.t0).collect();
        v.push(self.t_end);
        v
    }

    pub fn eval(&self, t: f64) -> Option<[f64; N]> {
        if !(t >= self.t_start && t <= self.t_end) {
            return None;
        }
        if self.segments.is_empty() {
            return Some(self.y0);
        }
        let j = self.segments.partition_point(|s| s.t0 <= t).max(1) - 1;
        Some(self.segments[j].eval(t))
    }
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

fn scaled_norm<const N: usize>(v: &[f64; N], sc: &[f64; N]) -> f64 {
    (v.iter().zip(sc).map(|(x, s)| (x / s).powi(2)).sum::<f64>() / N as f64).sqrt()
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end`, returning the dense
/// interpolant.
pub fn dopri5<const N: usize, F>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    tol: Tolerances,
) -> Result<DenseOutput<N>>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    if !(t_end >= t0) {
        return Err(Error::Domain(format!("integration end {t_end} precedes start {t0}")));
    }
    let mut out = DenseOutput { segments: Vec::new(), y0, t_start: t0, t_end };
    if t_end == t0 {
        return Ok(out);
    }

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y)?;
    let mut h = initial_step(&mut f, t, &y, &k1, t_end - t0, tol)?;
    let mut facold: f64 = 1e-4;
    let mut reject = false;

    for _ in 0..MAX_STEPS {
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        if h <= 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t, h });
        }

        let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]))?;
        let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]))?;
        let k4 = f(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
        let k5 = f(
            t + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        )?;
        let k6 = f(
            t + h,
            &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        )?;
        let y1 = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let t1 = if last { t_end } else { t + h };
        let k7 = f(t1, &y1)?;

        let e: [f64; N] = std::array::from_fn(|i| {
            h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
        });
        let sc: [f64; N] =
            std::array::from_fn(|i| tol.atol + tol.rtol * y[i].abs().max(y1[i].abs()));
        let err = scaled_norm(&e, &sc);
        if !err.is_finite() {
            return Err(Error::Numerical(format!("non-finite error estimate at t = {t}")));
        }

        let fac11 = err.powf(0.2 - BETA * 0.75);
        if err <= 1.0 {
            let mut fac = fac11 / facold.powf(BETA);
            fac = (1.0 / FAC_MAX).max((1.0 / FAC_MIN).min(fac / SAFE));
            let mut hnew = h / fac;

            let dy: [f64; N] = std::array::from_fn(|i| y1[i] - y[i]);
            let bspl: [f64; N] = std::array::from_fn(|i| h * k1[i] - dy[i]);
            let rcont = [
                y,
                dy,
                bspl,
                std::array::from_fn(|i| dy[i] - h * k7[i] - bspl[i]),
                std::array::from_fn(|i| {
                    h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
                }),
            ];
            out.segments.push(Segment { t0: t, h, rcont });

            facold = err.max(1e-4);
            k1 = k7;
            y = y1;
            t = t1;
            if last {
                return Ok(out);
            }
            if reject {
                hnew = hnew.min(h);
            }
            reject = false;
            h = hnew;
        } else {
            h /= (1.0 / FAC_MIN).min(fac11 / SAFE);
            reject = true;
        }
    }
    Err(Error::Numerical(format!("exceeded {MAX_STEPS} steps before t = {t_end}")))
}

fn initial_step<const N: usize, F>(
    f: &mut F,
    t: f64,
    y: &[f64; N],
    f0: &[f64; N],
    span: f64,
    tol: Tolerances,
) -> Result<f64>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let sc: [f64; N] = std::array::from_fn(|i| tol.atol + tol.rtol * y[i].abs());
    let d0 = scaled_norm(y, &sc);
    let d1 = scaled_norm(f0, &sc);
    let mut h0 = if d0 < 1e-10 || d1 < 1e-10 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(span);
    let y1 = axpy(y, h0, &[(1.0, f0)]);
    let f1 = f(t + h0, &y1)?;
    let diff: [f64; N] = std::array::from_fn(|i| f1[i] - f0[i]);
    let d2 = scaled_norm(&diff, &sc) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (1e-6f64).max(h0 * 1e-3)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1).min(span))
}
