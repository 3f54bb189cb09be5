//! Dormand–Prince 5(4) with Hairer's continuous extension, for small fixed-size systems.
//!
//! Integrates forward or backward in time. The right-hand side may fail
//! (e.g. at a node of `Ψ`); a failed evaluation rejects the step and halves it.

use std::ops::ControlFlow;

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

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Steps below this magnitude abort the integration.
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-12, h_min: 1e-12, h_max: f64::INFINITY, max_steps: 50_000_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OdeStats {
    pub steps: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// One accepted step with its interpolant.
#[derive(Debug, Clone, Copy)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    rcont: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    /// State at `t` between `t0` and `t1` (fifth-order accurate dense output).
    pub fn eval(&self, t: f64) -> [f64; N] {
        let h = self.t1 - self.t0;
        let th = if h == 0.0 { 0.0 } else { (t - self.t0) / h };
        let th1 = 1.0 - th;
        let r = &self.rcont;
        std::array::from_fn(|i| r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i]))))
    }
}

/// Why an integration ended early.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OdeFailure<const N: usize> {
    /// The step size fell below `h_min`; carries the last accepted state.
    StepUnderflow { t: f64, y: [f64; N] },
    TooManySteps { t: f64, y: [f64; N] },
    /// The right-hand side failed at the initial state.
    BadStart,
}

#[derive(Debug, Clone, Copy)]
pub struct OdeEnd<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub stats: OdeStats,
    /// The observer asked to stop before `t_end`.
    pub stopped: bool,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end`.
///
/// `cap(t, y)` bounds the magnitude of the next step; `observer` sees every
/// accepted step and may break to stop early.
pub fn integrate<const N: usize, E>(
    mut f: impl FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &OdeOptions,
    mut cap: impl FnMut(f64, &[f64; N]) -> f64,
    mut observer: impl FnMut(&DenseStep<N>) -> ControlFlow<()>,
) -> Result<OdeEnd<N>, (OdeFailure<N>, OdeStats)> {
    let mut stats = OdeStats::default();
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let span = (t_end - t0).abs();
    let mut t = t0;
    let mut y = y0;
    if span == 0.0 {
        return Ok(OdeEnd { t, y, stats, stopped: false });
    }
    let mut k1 = match f(t, &y) {
        Ok(k) => k,
        Err(_) => return Err((OdeFailure::BadStart, stats)),
    };
    stats.evaluations += 1;
    let scale = |a: &[f64; N], b: &[f64; N], i: usize| opts.abs_tol + opts.rel_tol * a[i].abs().max(b[i].abs());
    let rms = |v: &[f64; N], s: &dyn Fn(usize) -> f64| {
        (v.iter().enumerate().map(|(i, x)| (x / s(i)).powi(2)).sum::<f64>() / N as f64).sqrt()
    };
    let d0 = rms(&y, &|i| scale(&y, &y, i));
    let d1 = rms(&k1, &|i| scale(&y, &y, i));
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h = h.min(span).min(opts.h_max);
    let mut last_rejected = false;

    loop {
        if stats.steps >= opts.max_steps {
            return Err((OdeFailure::TooManySteps { t, y }, stats));
        }
        let remaining = (t_end - t).abs();
        if remaining <= 1e-14 * t_end.abs().max(1.0) {
            return Ok(OdeEnd { t: t_end, y, stats, stopped: false });
        }
        h = h.min(cap(t, &y)).min(opts.h_max);
        if !(h >= opts.h_min) {
            return Err((OdeFailure::StepUnderflow { t, y }, stats));
        }
        let last = h >= remaining;
        let hs = if last { remaining * dir } else { h * dir };

        let trial = (|| -> Option<([f64; N], [f64; N], [[f64; N]; 7])> {
            let k2 = f(t + C2 * hs, &axpy(&y, hs, &[(A21, &k1)])).ok()?;
            let k3 = f(t + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)])).ok()?;
            let k4 = f(t + C4 * hs, &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)])).ok()?;
            let k5 = f(t + C5 * hs, &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)])).ok()?;
            let k6 = f(
                t + hs,
                &axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            )
            .ok()?;
            let y1 = axpy(&y, hs, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            let k7 = f(t + hs, &y1).ok()?;
            let err: [f64; N] = std::array::from_fn(|i| {
                hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
            });
            Some((y1, err, [k1, k2, k3, k4, k5, k6, k7]))
        })();
        stats.evaluations += 6;

        let Some((y1, err, k)) = trial else {
            stats.rejected += 1;
            h *= 0.5;
            last_rejected = true;
            continue;
        };
        let en = rms(&err, &|i| scale(&y, &y1, i));
        if !en.is_finite() || en > 1.0 {
            stats.rejected += 1;
            let fac = if en.is_finite() { (0.9 * en.powf(-0.2)).max(0.2) } else { 0.5 };
            h *= fac;
            last_rejected = true;
            continue;
        }

        let ydiff: [f64; N] = std::array::from_fn(|i| y1[i] - y[i]);
        let bspl: [f64; N] = std::array::from_fn(|i| hs * k[0][i] - ydiff[i]);
        let rcont = [
            y,
            ydiff,
            bspl,
            std::array::from_fn(|i| ydiff[i] - hs * k[6][i] - bspl[i]),
            std::array::from_fn(|i| {
                hs * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i] + D7 * k[6][i])
            }),
        ];
        let t1 = if last { t_end } else { t + hs };
        let step = DenseStep { t0: t, t1, y0: y, y1, rcont };
        stats.steps += 1;
        t = t1;
        y = y1;
        k1 = k[6];
        if observer(&step).is_break() {
            return Ok(OdeEnd { t, y, stats, stopped: true });
        }
        if last {
            return Ok(OdeEnd { t: t_end, y, stats, stopped: false });
        }
        let mut fac = (0.9 * en.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
        if last_rejected {
            fac = fac.min(1.0);
        }
        last_rejected = false;
        h *= fac;
    }
}
