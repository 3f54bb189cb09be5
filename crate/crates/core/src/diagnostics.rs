//! Chaos indicators, periodicity checks, and the closed-form oracle for the
//! equal-weight state `Ψ₀₀ + Ψ₁₀ + Ψ₁₁` with `ω₁ = ω₂ = 1`.

use std::ops::ControlFlow;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{integrate, InitialCondition, IntegrateOptions};
use crate::eigenbasis::Mode;
use crate::error::{Error, Result};
use crate::nodes::{grid_scan_nodes, refine_node};
use crate::ode::{self, OdeOptions};
use crate::wavefield::{eval_field, Region, SuperpositionSpec, DEFAULT_PSI_FLOOR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Classification {
    Ordered,
    Chaotic,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChaosOptions {
    pub threshold: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub bootstrap_samples: usize,
    pub seed: u64,
}

impl Default for ChaosOptions {
    fn default() -> Self {
        Self { threshold: 0.05, rel_tol: 1e-9, abs_tol: 1e-11, bootstrap_samples: 1000, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChaosReport {
    pub ic: InitialCondition,
    pub horizon: f64,
    /// Mean logarithmic growth of a tangent vector per unit time.
    pub stretching_number: f64,
    pub classification: Classification,
    /// 5 % and 95 % quantiles of the growth rate fitted over randomly placed
    /// half-horizon windows of the cumulative log growth.
    pub confidence: [f64; 2],
    /// Time actually integrated; shorter than `horizon` after a step failure.
    pub reached: f64,
}

fn tangent_rhs(spec: &SuperpositionSpec, t: f64, s: &[f64; 4]) -> std::result::Result<[f64; 4], ()> {
    let (v, j) = eval_field(spec, s[0], s[1], t).velocity_jacobian(DEFAULT_PSI_FLOOR).ok_or(())?;
    Ok([v[0], v[1], j[0][0] * s[2] + j[0][1] * s[3], j[1][0] * s[2] + j[1][1] * s[3]])
}

fn node_step_cap(spec: &SuperpositionSpec, t: f64, x: f64, y: f64, factor: f64) -> f64 {
    let s = eval_field(spec, x, y, t);
    let g = s.grad[0].norm().hypot(s.grad[1].norm());
    let Some(v) = s.velocity(0.0) else { return 0.0 };
    let speed = v[0].hypot(v[1]);
    if g == 0.0 || speed == 0.0 {
        return f64::INFINITY;
    }
    factor * (s.psi.norm() / g) / speed
}

/// Per-unit-time log growth of a tangent vector carried along the trajectory.
///
/// Returns the logs and the time reached (less than `horizon` after a failure).
pub fn tangent_growth_logs(
    spec: &SuperpositionSpec,
    ic: InitialCondition,
    horizon: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<(Vec<f64>, f64)> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Argument(format!("horizon must be positive, got {horizon}")));
    }
    let mut state = [ic.x, ic.y, 1.0, 0.0];
    let mut t = ic.t0;
    let t_end = ic.t0 + horizon;
    let mut logs = Vec::with_capacity(horizon.ceil() as usize);
    let opts = OdeOptions { rel_tol, abs_tol, ..OdeOptions::default() };
    while t < t_end - 1e-12 {
        let t1 = (t + 1.0).min(t_end);
        let r = ode::integrate(
            |tt, s: &[f64; 4]| tangent_rhs(spec, tt, s),
            t,
            state,
            t1,
            &opts,
            |tt, s| node_step_cap(spec, tt, s[0], s[1], 0.05),
            |_| ControlFlow::Continue(()),
        );
        let Ok(end) = r else { return Ok((logs, t)) };
        let n = end.y[2].hypot(end.y[3]);
        logs.push(n.ln() / (t1 - t));
        state = [end.y[0], end.y[1], end.y[2] / n, end.y[3] / n];
        t = t1;
    }
    Ok((logs, t))
}

fn ls_slope(c: &[f64]) -> f64 {
    let n = c.len() as f64;
    let mt = (n - 1.0) / 2.0;
    let mc = c.iter().sum::<f64>() / n;
    let (mut num, mut den) = (0.0, 0.0);
    for (i, v) in c.iter().enumerate() {
        let d = i as f64 - mt;
        num += d * (v - mc);
        den += d * d;
    }
    num / den
}

/// Stretching number over `horizon` with a bootstrap classification against `opts.threshold`.
pub fn stretching_number(
    spec: &SuperpositionSpec,
    ic: InitialCondition,
    horizon: f64,
    opts: &ChaosOptions,
) -> Result<ChaosReport> {
    let (logs, reached) = tangent_growth_logs(spec, ic, horizon, opts.rel_tol, opts.abs_tol)?;
    let failed = reached < ic.t0 + horizon - 1e-9;
    if logs.is_empty() {
        return Ok(ChaosReport {
            ic,
            horizon,
            stretching_number: f64::NAN,
            classification: Classification::Undetermined,
            confidence: [f64::NAN; 2],
            reached: reached - ic.t0,
        });
    }
    let mean = logs.iter().sum::<f64>() / logs.len() as f64;
    let mut cumulative = Vec::with_capacity(logs.len() + 1);
    cumulative.push(0.0);
    for l in &logs {
        cumulative.push(cumulative.last().unwrap() + l);
    }
    let w = (cumulative.len() / 2).max(2);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut slopes: Vec<f64> = (0..opts.bootstrap_samples.max(1))
        .map(|_| {
            let a = rng.gen_range(0..=cumulative.len() - w);
            ls_slope(&cumulative[a..a + w])
        })
        .collect();
    slopes.sort_by(f64::total_cmp);
    let q = |p: f64| slopes[((p * (slopes.len() - 1) as f64).round() as usize).min(slopes.len() - 1)];
    let confidence = [q(0.05), q(0.95)];
    let classification = if failed {
        Classification::Undetermined
    } else if confidence[0] > opts.threshold {
        Classification::Chaotic
    } else if confidence[1] < opts.threshold {
        Classification::Ordered
    } else {
        Classification::Undetermined
    };
    Ok(ChaosReport { ic, horizon, stretching_number: mean, classification, confidence, reached: reached - ic.t0 })
}

/// [`stretching_number`] for many initial conditions in parallel, in input order.
pub fn chaos_ensemble(
    spec: &SuperpositionSpec,
    ics: &[InitialCondition],
    horizon: f64,
    opts: &ChaosOptions,
) -> Result<Vec<ChaosReport>> {
    ics.par_iter().map(|ic| stretching_number(spec, *ic, horizon, opts)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeriodicityReport {
    pub is_periodic: bool,
    pub return_error: f64,
}

/// Integrates one period and compares the end point with the start.
pub fn periodicity_check(
    spec: &SuperpositionSpec,
    ic: InitialCondition,
    period: f64,
    tol: f64,
) -> Result<PeriodicityReport> {
    let tr = integrate(spec, ic, ic.t0 + period, &IntegrateOptions::default(), &[])?;
    let end = tr.last();
    let return_error = (end.x - ic.x).hypot(end.y - ic.y);
    Ok(PeriodicityReport { is_periodic: return_error < tol, return_error })
}

/// Closed forms for `Ψ₀₀ + Ψ₁₀ + Ψ₁₁` (equal weights, `ω₁ = ω₂ = 1`).
///
/// With `G = 1 + 2x²(1 + 2y²) + 4xy cos 2t + 2√2 x(1 + 2xy) cos t` the
/// display-form velocity is `ẋ = (√2 sin t + 2y sin 2t)/G`,
/// `ẏ = (2x sin 2t + 2√2 x² sin t)/G`, and the node runs along
/// `x_N = −√2 cos t`, `y_N = −1/(2√2 cos t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecialCaseOracle {
    /// Factor mapping the display-form velocity onto the velocity of the state.
    pub convention: f64,
}

impl SpecialCaseOracle {
    /// Checks that `spec` is the equal-weight state and measures the convention
    /// constant from one evaluation at `probe = (x, y, t)`.
    pub fn calibrate(spec: &SuperpositionSpec, probe: [f64; 3]) -> Result<Self> {
        let expected = [Mode { m: 0, n: 0 }, Mode { m: 1, n: 0 }, Mode { m: 1, n: 1 }];
        let p = spec.params();
        let c = spec.coefficients();
        let same_modes = spec.modes().len() == 3 && expected.iter().all(|m| spec.modes().contains(m));
        let equal = c.iter().all(|z| (z - c[0]).norm() <= 1e-12 * c[0].norm()) && c[0].norm() > 0.0;
        if !(same_modes && equal && p.omega1 == 1.0 && p.omega2 == 1.0) {
            return Err(Error::Argument(
                "the closed forms need modes (0,0), (1,0), (1,1) with equal coefficients and unit frequencies".into(),
            ));
        }
        let [x, y, t] = probe;
        let display = Self::display_velocity(x, y, t);
        let actual = crate::wavefield::velocity(spec, x, y, t)?;
        let k = if display[0].abs() >= display[1].abs() { 0 } else { 1 };
        if display[k] == 0.0 {
            return Err(Error::DegenerateState("probe point has zero display-form velocity".into()));
        }
        Ok(Self { convention: actual[k] / display[k] })
    }

    /// `G(x, y, t)`, the squared modulus of the polynomial part of the state.
    pub fn g(x: f64, y: f64, t: f64) -> f64 {
        Self::g_from_cos(x, y, t.cos())
    }

    fn g_from_cos(x: f64, y: f64, c: f64) -> f64 {
        let s2 = std::f64::consts::SQRT_2;
        1.0 + 2.0 * x * x * (1.0 + 2.0 * y * y) + 4.0 * x * y * (2.0 * c * c - 1.0) + 2.0 * s2 * x * (1.0 + 2.0 * x * y) * c
    }

    /// Display-form velocity, before applying the convention constant.
    pub fn display_velocity(x: f64, y: f64, t: f64) -> [f64; 2] {
        let s2 = std::f64::consts::SQRT_2;
        let g = Self::g(x, y, t);
        let (s, s2t) = (t.sin(), (2.0 * t).sin());
        [(s2 * s + 2.0 * y * s2t) / g, (2.0 * x * s2t + 2.0 * s2 * x * x * s) / g]
    }

    pub fn velocity(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let v = Self::display_velocity(x, y, t);
        [self.convention * v[0], self.convention * v[1]]
    }

    /// Node position at `t`.
    pub fn node_path(t: f64) -> Result<[f64; 2]> {
        let c = t.cos();
        if c.abs() < 1e-12 || t.sin().abs() < 1e-12 {
            return Err(Error::DegenerateTime { t });
        }
        let x = -std::f64::consts::SQRT_2 * c;
        Ok([x, 1.0 / (2.0 * x)])
    }

    /// Reconstructs `(cos t, sin t)` from a state `(x, y, ẋ, ẏ)` of the display-form flow.
    pub fn reconstruct(x: f64, y: f64, vx: f64, vy: f64) -> Result<(f64, f64)> {
        let s2 = std::f64::consts::SQRT_2;
        let d1 = y * vy - x * vx;
        let d2 = 2.0 * x * x * y - x;
        if d1.abs() < 1e-10 || d2.abs() < 1e-10 {
            return Err(Error::DegenerateState(format!(
                "reconstruction singular at ({x}, {y}): denominators {d1:e}, {d2:e}"
            )));
        }
        let c = (2.0 * x * x * vx - vy) / (2.0 * s2 * d1);
        let s = d1 * Self::g_from_cos(x, y, c) / (s2 * d2);
        Ok((c, s))
    }

    /// `sin² t + cos² t − 1` with both reconstructed from the state; zero along any trajectory.
    pub fn integral_residual(&self, x: f64, y: f64, vx: f64, vy: f64) -> Result<f64> {
        let (c, s) = Self::reconstruct(x, y, vx / self.convention, vy / self.convention)?;
        Ok(s * s + c * c - 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HyperbolaCheck {
    pub node: [f64; 2],
    /// `x_N y_N − ½`.
    pub residual: f64,
}

/// Locates the single node of the equal-weight state at `t` and measures its
/// distance from the hyperbola `x y = ½`.
///
/// Uses a grid scan of `[−5, 5]²`; if the node lies outside it, the analytic
/// solver with a widening window.
pub fn node_hyperbola_residual(spec: &SuperpositionSpec, t: f64) -> Result<HyperbolaCheck> {
    SpecialCaseOracle::calibrate(spec, [0.3, -0.4, 0.7])?;
    if t.sin().abs() < 1e-12 || t.cos().abs() < 1e-12 {
        return Err(Error::DegenerateTime { t });
    }
    let mut nodes = grid_scan_nodes(spec, t, &Region::square(5.0), 200)?;
    if nodes.is_empty() {
        for window in [1e2, 1e4, 1e6] {
            let opts = crate::nodes::AnalyticOptions { row_window: window, col_window: window, ..Default::default() };
            nodes = crate::nodes::solve_moving_nodes_with(spec, t, opts)?.into_iter().map(|r| r.position).collect();
            if !nodes.is_empty() {
                break;
            }
        }
    }
    let node = match nodes.as_slice() {
        [p] => refine_node(spec, t, *p).unwrap_or(*p),
        _ => {
            return Err(Error::DegenerateState(format!("expected one node at t = {t}, found {}", nodes.len())));
        }
    };
    Ok(HyperbolaCheck { node, residual: node[0] * node[1] - 0.5 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn convention_constant_is_minus_one() {
        let o = SpecialCaseOracle::calibrate(&presets::equal_weight(), [0.37, -0.21, 0.9]).unwrap();
        assert!((o.convention + 1.0).abs() < 1e-12, "{}", o.convention);
    }

    #[test]
    fn rejects_other_states() {
        assert!(SpecialCaseOracle::calibrate(&presets::single_node(), [0.1, 0.2, 0.3]).is_err());
        assert!(SpecialCaseOracle::calibrate(&presets::typical(), [0.1, 0.2, 0.3]).is_err());
    }

    #[test]
    fn node_path_lies_on_hyperbola() {
        for t in [0.3, 1.0, 2.0, 4.0] {
            let p = SpecialCaseOracle::node_path(t).unwrap();
            assert!((p[0] * p[1] - 0.5).abs() < 1e-15);
        }
        assert!(SpecialCaseOracle::node_path(std::f64::consts::FRAC_PI_2).is_err());
    }

    #[test]
    fn reconstruction_recovers_time() {
        let t = 0.8;
        let (x, y) = (0.6, -0.4);
        let v = SpecialCaseOracle::display_velocity(x, y, t);
        let (c, s) = SpecialCaseOracle::reconstruct(x, y, v[0], v[1]).unwrap();
        assert!((c - t.cos()).abs() < 1e-12);
        assert!((s - t.sin()).abs() < 1e-12);
    }

    #[test]
    fn singular_state_is_reported() {
        let o = SpecialCaseOracle { convention: -1.0 };
        assert!(matches!(o.integral_residual(0.0, 0.7, 0.3, 0.0), Err(Error::DegenerateState(_))));
    }

    #[test]
    fn single_mode_is_ordered() {
        let spec = SuperpositionSpec::from_real(&[(1, 1)], &[1.0], 1.0, 0.7).unwrap();
        let r = stretching_number(&spec, InitialCondition::new(0.5, 0.4, 0.0), 20.0, &ChaosOptions::default()).unwrap();
        assert!(r.stretching_number.abs() < 1e-12);
        assert_eq!(r.classification, Classification::Ordered);
    }
}
