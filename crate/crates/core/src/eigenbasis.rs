//! Hermite polynomials and the normalized eigenfunctions of the 1-d oscillator.
//!
//! Units are ħ = m = 1. A 1-d eigenfunction is
//! `ψ_l(x) = (ω/π)^{1/4} / √(2^l l!) · e^{-ωx²/2} · H_l(√ω x)` with the
//! physicists' Hermite polynomials `H_0 = 1, H_1 = 2ξ`. All derivatives are
//! assembled from the three-term recurrence, never from finite differences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported quantum number. Keeps `2^l l!` and `H_l` comfortably inside `f64`.
pub const MAX_QUANTUM_NUMBER: u32 = 30;

/// Quantum numbers `(m, n)` of a 2-d product eigenstate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Mode {
    pub m: u32,
    pub n: u32,
}

impl Mode {
    pub fn new(m: u32, n: u32) -> Result<Self> {
        if m > MAX_QUANTUM_NUMBER || n > MAX_QUANTUM_NUMBER {
            return Err(Error::Argument(format!(
                "mode ({m}, {n}) exceeds the maximum quantum number {MAX_QUANTUM_NUMBER}"
            )));
        }
        Ok(Self { m, n })
    }

    /// Energy `(m + ½)ω₁ + (n + ½)ω₂`.
    pub fn energy(&self, params: &OscillatorParams) -> f64 {
        (0.5 + self.m as f64) * params.omega1 + (0.5 + self.n as f64) * params.omega2
    }
}

/// Angular frequencies of the anisotropic oscillator `V = ½(ω₁²x² + ω₂²y²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorParams {
    pub omega1: f64,
    pub omega2: f64,
}

impl OscillatorParams {
    pub fn new(omega1: f64, omega2: f64) -> Result<Self> {
        if !(omega1.is_finite() && omega1 > 0.0 && omega2.is_finite() && omega2 > 0.0) {
            return Err(Error::Argument(format!(
                "frequencies must be positive and finite, got ({omega1}, {omega2})"
            )));
        }
        Ok(Self { omega1, omega2 })
    }

    /// Classical potential at `(x, y)`.
    pub fn potential(&self, x: f64, y: f64) -> f64 {
        0.5 * (self.omega1 * self.omega1 * x * x + self.omega2 * self.omega2 * y * y)
    }
}

/// Returns `(H_n, H_{n-1}, H_{n-2})` at `xi`; missing lower orders are zero.
pub(crate) fn hermite_triple(n: u32, xi: f64) -> (f64, f64, f64) {
    let mut h_prev2 = 0.0;
    let mut h_prev = 0.0;
    let mut h = 1.0;
    for k in 0..n {
        let next = 2.0 * xi * h - 2.0 * k as f64 * h_prev;
        h_prev2 = h_prev;
        h_prev = h;
        h = next;
    }
    (h, h_prev, h_prev2)
}

/// Physicists' Hermite polynomial `H_n(ξ)` and its derivative `H'_n = 2n H_{n-1}`.
pub fn hermite(n: i32, xi: f64) -> Result<(f64, f64)> {
    if n < 0 {
        return Err(Error::Argument(format!("Hermite degree must be non-negative, got {n}")));
    }
    if !xi.is_finite() {
        return Err(Error::Argument(format!("Hermite argument must be finite, got {xi}")));
    }
    let (h, h1, _) = hermite_triple(n as u32, xi);
    Ok((h, 2.0 * n as f64 * h1))
}

/// Value and first two derivatives of a 1-d function.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Eigen1d {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Normalization `(ω/π)^{1/4} / √(2^l l!)`.
pub fn normalization(l: u32, omega: f64) -> f64 {
    let mut denom = 1.0f64;
    for k in 1..=l {
        denom *= 2.0 * k as f64;
    }
    (omega / std::f64::consts::PI).powf(0.25) / denom.sqrt()
}

/// Polynomial part `N_l H_l(√ω x)` of the eigenfunction (no Gaussian), with derivatives in `x`.
///
/// Every mode in the same coordinate shares the Gaussian, so node finding
/// works on these polynomials directly and never underflows.
pub(crate) fn reduced_unchecked(l: u32, omega: f64, x: f64) -> Eigen1d {
    let s = omega.sqrt();
    let norm = normalization(l, omega);
    let (h, h1, h2) = hermite_triple(l, s * x);
    let lf = l as f64;
    Eigen1d {
        value: norm * h,
        d1: norm * s * 2.0 * lf * h1,
        d2: norm * omega * 4.0 * lf * (lf - 1.0) * h2,
    }
}

pub(crate) fn eigen1d_unchecked(l: u32, omega: f64, x: f64) -> Eigen1d {
    let p = reduced_unchecked(l, omega, x);
    let g = (-0.5 * omega * x * x).exp();
    let wx = omega * x;
    Eigen1d {
        value: p.value * g,
        d1: (p.d1 - wx * p.value) * g,
        d2: (p.d2 - 2.0 * wx * p.d1 + (wx * wx - omega) * p.value) * g,
    }
}

fn check_args(l: u32, omega: f64, x: f64) -> Result<()> {
    if l > MAX_QUANTUM_NUMBER {
        return Err(Error::Argument(format!("quantum number {l} exceeds {MAX_QUANTUM_NUMBER}")));
    }
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::Argument(format!("omega must be positive, got {omega}")));
    }
    if !x.is_finite() {
        return Err(Error::Argument(format!("x must be finite, got {x}")));
    }
    Ok(())
}

/// Normalized 1-d oscillator eigenfunction with first and second derivatives.
pub fn eigen1d(l: u32, omega: f64, x: f64) -> Result<Eigen1d> {
    check_args(l, omega, x)?;
    Ok(eigen1d_unchecked(l, omega, x))
}

/// Gaussian-free polynomial part of [`eigen1d`].
pub fn eigen1d_reduced(l: u32, omega: f64, x: f64) -> Result<Eigen1d> {
    check_args(l, omega, x)?;
    Ok(reduced_unchecked(l, omega, x))
}

/// Phase angle `[(½+m)ω₁ + (½+n)ω₂] t` of a product eigenstate.
pub fn mode_phase(mode: Mode, params: &OscillatorParams, t: f64) -> f64 {
    mode.energy(params) * t
}

/// Real roots of `H_n(ξ)` in increasing order.
pub fn hermite_roots(n: u32) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    // All zeros lie inside |ξ| < √(2n+1).
    let bound = (2.0 * n as f64 + 1.0).sqrt() + 0.5;
    let f = |xi: f64| hermite_triple(n, xi).0;
    let cells = 200 * n as usize;
    let step = bound / cells as f64;
    let mut positive = Vec::new();
    let mut a = 0.5 * step;
    let mut fa = f(a);
    for i in 1..=cells {
        let b = (i as f64 + 0.5) * step;
        let fb = f(b);
        if fa * fb < 0.0 {
            positive.push(bisect(&f, a, b, fa));
        }
        a = b;
        fa = fb;
    }
    let mut roots: Vec<f64> = positive.iter().rev().map(|r| -r).collect();
    if n % 2 == 1 {
        roots.push(0.0);
    }
    roots.extend(positive);
    roots
}

/// Roots of `ψ_l` in the physical coordinate, `x = ξ / √ω`.
pub fn eigen_roots(l: u32, omega: f64) -> Vec<f64> {
    let s = omega.sqrt();
    hermite_roots(l).into_iter().map(|r| r / s).collect()
}

/// Bisection to machine precision on a bracketing interval.
pub(crate) fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    0.5 * (a + b)
}
