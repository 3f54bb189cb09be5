//! The superposition `Ψ = Σ cⱼ e^{-iφⱼ(t)} ψ_{mⱼ}(x) ψ_{nⱼ}(y)` and the fields derived from it:
//! the Bohmian velocity `v = Im(∇Ψ/Ψ)`, the quantum potential and the total potential.

use num_complex::Complex64;
use serde::Serialize;

use crate::eigenbasis::{eigen1d_unchecked, mode_phase, reduced_unchecked, Mode, OscillatorParams};
use crate::error::{Error, Result};

/// Below this `|Ψ|` the ratio `∇Ψ/Ψ` is not trusted.
pub const DEFAULT_PSI_FLOOR: f64 = 1e-13;

/// A finite superposition of 2-d oscillator eigenstates.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperpositionSpec {
    modes: Vec<Mode>,
    coefficients: Vec<Complex64>,
    params: OscillatorParams,
}

impl SuperpositionSpec {
    pub fn new(modes: Vec<Mode>, coefficients: Vec<Complex64>, params: OscillatorParams) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::Argument("a superposition needs at least one mode".into()));
        }
        if modes.len() != coefficients.len() {
            return Err(Error::Argument(format!(
                "{} modes but {} coefficients",
                modes.len(),
                coefficients.len()
            )));
        }
        for (i, a) in modes.iter().enumerate() {
            if modes[..i].contains(a) {
                return Err(Error::Argument(format!("duplicate mode ({}, {})", a.m, a.n)));
            }
        }
        if coefficients.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::Argument("coefficients must be finite".into()));
        }
        if coefficients.iter().all(|c| c.norm() == 0.0) {
            return Err(Error::Argument("at least one coefficient must be nonzero".into()));
        }
        // Re-validate in case the params were built by struct literal.
        let params = OscillatorParams::new(params.omega1, params.omega2)?;
        Ok(Self { modes, coefficients, params })
    }

    /// Convenience constructor for real coefficients.
    pub fn from_real(modes: &[(u32, u32)], coefficients: &[f64], omega1: f64, omega2: f64) -> Result<Self> {
        let modes = modes
            .iter()
            .map(|&(m, n)| Mode::new(m, n))
            .collect::<Result<Vec<_>>>()?;
        let coefficients = coefficients.iter().map(|&c| Complex64::new(c, 0.0)).collect();
        Self::new(modes, coefficients, OscillatorParams::new(omega1, omega2)?)
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn params(&self) -> &OscillatorParams {
        &self.params
    }

    /// The same state with every coefficient multiplied by `factor`.
    pub fn scaled(&self, factor: Complex64) -> Result<Self> {
        Self::new(
            self.modes.clone(),
            self.coefficients.iter().map(|c| c * factor).collect(),
            self.params,
        )
    }

    /// The state with `x` and `y` exchanged.
    pub fn transposed(&self) -> Self {
        Self {
            modes: self.modes.iter().map(|m| Mode { m: m.n, n: m.m }).collect(),
            coefficients: self.coefficients.clone(),
            params: OscillatorParams { omega1: self.params.omega2, omega2: self.params.omega1 },
        }
    }

    /// `cⱼ e^{-iφⱼ(t)}` for every mode.
    pub fn phased_coefficients(&self, t: f64) -> Vec<Complex64> {
        self.modes
            .iter()
            .zip(&self.coefficients)
            .map(|(mode, c)| c * Complex64::from_polar(1.0, -mode_phase(*mode, &self.params, t)))
            .collect()
    }

    /// Largest mode energy; the far-field limit of the total potential along generic directions.
    pub fn max_energy(&self) -> f64 {
        self.modes
            .iter()
            .map(|m| m.energy(&self.params))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `Ψ`, its gradient, Laplacian and Hessian at one spacetime point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub psi: Complex64,
    pub grad: [Complex64; 2],
    pub lap: Complex64,
    /// `(∂ₓₓΨ, ∂ₓᵧΨ, ∂ᵧᵧΨ)`.
    pub hess: [Complex64; 3],
}

impl FieldSample {
    /// `Im(∇Ψ/Ψ)`, failing when `|Ψ| < psi_floor`.
    pub fn velocity(&self, psi_floor: f64) -> Option<[f64; 2]> {
        if self.psi.norm() < psi_floor {
            return None;
        }
        let inv = self.psi.inv();
        Some([(self.grad[0] * inv).im, (self.grad[1] * inv).im])
    }

    /// Velocity and its Jacobian `J[i][j] = ∂ⱼ vᵢ`.
    pub fn velocity_jacobian(&self, psi_floor: f64) -> Option<([f64; 2], [[f64; 2]; 2])> {
        if self.psi.norm() < psi_floor {
            return None;
        }
        let inv = self.psi.inv();
        let q = [self.grad[0] * inv, self.grad[1] * inv];
        let h = [[self.hess[0], self.hess[1]], [self.hess[1], self.hess[2]]];
        let mut jac = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                jac[i][j] = (h[i][j] * inv - q[i] * q[j]).im;
            }
        }
        Some(([q[0].im, q[1].im], jac))
    }
}

/// Evaluates `Ψ` and its spatial derivatives up to second order.
pub fn eval_field(spec: &SuperpositionSpec, x: f64, y: f64, t: f64) -> FieldSample {
    let p = spec.params;
    let mut s = FieldSample {
        psi: Complex64::new(0.0, 0.0),
        grad: [Complex64::new(0.0, 0.0); 2],
        lap: Complex64::new(0.0, 0.0),
        hess: [Complex64::new(0.0, 0.0); 3],
    };
    for (mode, c) in spec.modes.iter().zip(spec.phased_coefficients(t)) {
        let fx = eigen1d_unchecked(mode.m, p.omega1, x);
        let fy = eigen1d_unchecked(mode.n, p.omega2, y);
        s.psi += c * (fx.value * fy.value);
        s.grad[0] += c * (fx.d1 * fy.value);
        s.grad[1] += c * (fx.value * fy.d1);
        s.hess[0] += c * (fx.d2 * fy.value);
        s.hess[1] += c * (fx.d1 * fy.d1);
        s.hess[2] += c * (fx.value * fy.d2);
    }
    s.lap = s.hess[0] + s.hess[2];
    s
}

/// `∂Ψ/∂t = -i Σ Eⱼ cⱼ e^{-iφⱼ} ψⱼ`.
pub fn time_derivative(spec: &SuperpositionSpec, x: f64, y: f64, t: f64) -> Complex64 {
    let p = spec.params;
    spec.modes
        .iter()
        .zip(spec.phased_coefficients(t))
        .map(|(mode, c)| {
            let v = eigen1d_unchecked(mode.m, p.omega1, x).value * eigen1d_unchecked(mode.n, p.omega2, y).value;
            Complex64::new(0.0, -mode.energy(&p)) * c * v
        })
        .sum()
}

/// `Ψ` with the common Gaussian `e^{-(ω₁x²+ω₂y²)/2}` divided out, and its gradient.
///
/// Same zero set as `Ψ`, polynomial growth instead of Gaussian decay.
pub fn reduced_field(spec: &SuperpositionSpec, x: f64, y: f64, t: f64) -> (Complex64, [Complex64; 2]) {
    let p = spec.params;
    let mut v = Complex64::new(0.0, 0.0);
    let mut g = [Complex64::new(0.0, 0.0); 2];
    for (mode, c) in spec.modes.iter().zip(spec.phased_coefficients(t)) {
        let fx = reduced_unchecked(mode.m, p.omega1, x);
        let fy = reduced_unchecked(mode.n, p.omega2, y);
        v += c * (fx.value * fy.value);
        g[0] += c * (fx.d1 * fy.value);
        g[1] += c * (fx.value * fy.d1);
    }
    (v, g)
}

/// Bohmian velocity `Im(∇Ψ/Ψ)` with the default floor.
pub fn velocity(spec: &SuperpositionSpec, x: f64, y: f64, t: f64) -> Result<[f64; 2]> {
    velocity_with_floor(spec, x, y, t, DEFAULT_PSI_FLOOR)
}

pub fn velocity_with_floor(spec: &SuperpositionSpec, x: f64, y: f64, t: f64, psi_floor: f64) -> Result<[f64; 2]> {
    let s = eval_field(spec, x, y, t);
    s.velocity(psi_floor).ok_or(Error::NodeSingularity { x, y, t, psi_abs: s.psi.norm() })
}

/// Velocity and its Jacobian, from the analytic Hessian of `Ψ`.
pub fn velocity_jacobian(spec: &SuperpositionSpec, x: f64, y: f64, t: f64) -> Result<([f64; 2], [[f64; 2]; 2])> {
    let s = eval_field(spec, x, y, t);
    s.velocity_jacobian(DEFAULT_PSI_FLOOR)
        .ok_or(Error::NodeSingularity { x, y, t, psi_abs: s.psi.norm() })
}

/// Which expression is used for the quantum potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantumPotentialForm {
    /// `Q = -½ ∇²R / R` with `R = |Ψ|`.
    #[default]
    Amplitude,
    /// `Q = -½ Re(∇²Ψ / Ψ)`.
    RealPart,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Potentials {
    pub v: f64,
    pub q: f64,
    pub vtot: f64,
}

/// Classical, quantum and total potential in the default amplitude form.
pub fn potentials(spec: &SuperpositionSpec, x: f64, y: f64, t: f64) -> Result<Potentials> {
    potentials_with(spec, x, y, t, QuantumPotentialForm::Amplitude)
}

pub fn potentials_with(
    spec: &SuperpositionSpec,
    x: f64,
    y: f64,
    t: f64,
    form: QuantumPotentialForm,
) -> Result<Potentials> {
    let s = eval_field(spec, x, y, t);
    potentials_from_sample(spec, &s, x, y, t, form)
}

pub(crate) fn potentials_from_sample(
    spec: &SuperpositionSpec,
    s: &FieldSample,
    x: f64,
    y: f64,
    t: f64,
    form: QuantumPotentialForm,
) -> Result<Potentials> {
    if s.psi.norm() < DEFAULT_PSI_FLOOR {
        return Err(Error::NodeSingularity { x, y, t, psi_abs: s.psi.norm() });
    }
    let inv = s.psi.inv();
    let re_lap = (s.lap * inv).re;
    // With Ψ = R e^{iS}: ∇²R/R = Re(∇²Ψ/Ψ) + |∇S|², and ∇S = Im(∇Ψ/Ψ).
    let q = match form {
        QuantumPotentialForm::Amplitude => {
            let vx = (s.grad[0] * inv).im;
            let vy = (s.grad[1] * inv).im;
            -0.5 * (re_lap + vx * vx + vy * vy)
        }
        QuantumPotentialForm::RealPart => -0.5 * re_lap,
    };
    let v = spec.params.potential(x, y);
    Ok(Potentials { v, q, vtot: v + q })
}

/// Axis-aligned rectangle in the configuration plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct Region {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Region {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        if !(x_min < x_max && y_min < y_max) || ![x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite()) {
            return Err(Error::Argument(format!(
                "degenerate region [{x_min}, {x_max}] x [{y_min}, {y_max}]"
            )));
        }
        Ok(Self { x_min, x_max, y_min, y_max })
    }

    pub fn square(half_width: f64) -> Self {
        Self { x_min: -half_width, x_max: half_width, y_min: -half_width, y_max: half_width }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x_min && p[0] <= self.x_max && p[1] >= self.y_min && p[1] <= self.y_max
    }
}

/// One row of the `field-grid` export.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldGridRow {
    pub x: f64,
    pub y: f64,
    pub re_psi: f64,
    pub im_psi: f64,
    pub vx: f64,
    pub vy: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "Vtot")]
    pub vtot: f64,
}

/// Samples the field on an `nx × ny` lattice spanning `region` (inclusive of its edges).
///
/// Points within the psi floor of a node get `NaN` velocity and potentials.
pub fn field_grid(
    spec: &SuperpositionSpec,
    t: f64,
    region: &Region,
    nx: usize,
    ny: usize,
    form: QuantumPotentialForm,
) -> Result<Vec<FieldGridRow>> {
    if nx < 2 || ny < 2 {
        return Err(Error::Argument("field grid needs at least 2 points per axis".into()));
    }
    use rayon::prelude::*;
    let rows = (0..ny)
        .into_par_iter()
        .flat_map_iter(|j| {
            let y = region.y_min + (region.y_max - region.y_min) * j as f64 / (ny - 1) as f64;
            (0..nx).map(move |i| {
                let x = region.x_min + (region.x_max - region.x_min) * i as f64 / (nx - 1) as f64;
                let s = eval_field(spec, x, y, t);
                let v = s.velocity(DEFAULT_PSI_FLOOR).unwrap_or([f64::NAN; 2]);
                let pot = potentials_from_sample(spec, &s, x, y, t, form)
                    .unwrap_or(Potentials { v: f64::NAN, q: f64::NAN, vtot: f64::NAN });
                FieldGridRow {
                    x,
                    y,
                    re_psi: s.psi.re,
                    im_psi: s.psi.im,
                    vx: v[0],
                    vy: v[1],
                    q: pot.q,
                    vtot: pot.vtot,
                }
            })
        })
        .collect();
    Ok(rows)
}
