use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::wavefield::{eval_field, reduced_field, Region, SuperpositionSpec};
use crate::Complex64;

/// Newton iteration for a zero of the Gaussian-free field, starting at `guess`.
///
/// Steps are clipped to `max_step`. Returns `None` if the iteration does not settle.
pub(crate) fn newton_node(
    spec: &SuperpositionSpec,
    t: f64,
    guess: [f64; 2],
    max_step: f64,
    max_iter: usize,
) -> Option<[f64; 2]> {
    let mut p = guess;
    for _ in 0..max_iter {
        let (v, g) = reduced_field(spec, p[0], p[1], t);
        if v.norm() == 0.0 {
            return Some(p);
        }
        let (a, b, c, d) = (g[0].re, g[1].re, g[0].im, g[1].im);
        let det = a * d - b * c;
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let mut dx = -(d * v.re - b * v.im) / det;
        let mut dy = -(-c * v.re + a * v.im) / det;
        let len = dx.hypot(dy);
        if len > max_step {
            dx *= max_step / len;
            dy *= max_step / len;
        }
        p = [p[0] + dx, p[1] + dy];
        if len <= 1e-14 * (1.0 + super::norm(p)) {
            let (v, g) = reduced_field(spec, p[0], p[1], t);
            let scale = g[0].norm() + g[1].norm();
            return (v.norm() <= 1e-9 * scale).then_some(p);
        }
    }
    None
}

/// Newton iteration on the gradient of a field that is real up to a constant phase.
///
/// Such fields vanish on whole lines; the isolated nodes are the line crossings,
/// where `Ψ` and `∇Ψ` both vanish.
fn newton_crossing(spec: &SuperpositionSpec, t: f64, guess: [f64; 2], max_step: f64) -> Option<[f64; 2]> {
    let s = eval_field(spec, guess[0], guess[1], t);
    let lead = if s.grad[0].norm() >= s.grad[1].norm() { s.grad[0] } else { s.grad[1] };
    if lead.norm() == 0.0 {
        return None;
    }
    let rot = lead.conj() / lead.norm();
    let scale = lead.norm();
    let mut p = guess;
    for _ in 0..60 {
        let s = eval_field(spec, p[0], p[1], t);
        let g: [Complex64; 2] = s.grad.map(|z| z * rot);
        if g[0].im.abs() + g[1].im.abs() > 1e-6 * scale {
            return None;
        }
        let h = s.hess.map(|z| (z * rot).re);
        let det = h[0] * h[2] - h[1] * h[1];
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let mut dx = -(h[2] * g[0].re - h[1] * g[1].re) / det;
        let mut dy = -(-h[1] * g[0].re + h[0] * g[1].re) / det;
        let len = dx.hypot(dy);
        if len > max_step {
            dx *= max_step / len;
            dy *= max_step / len;
        }
        p = [p[0] + dx, p[1] + dy];
        if len <= 1e-14 * (1.0 + super::norm(p)) {
            let s = eval_field(spec, p[0], p[1], t);
            return (s.psi.norm() <= 1e-10 * scale && s.grad[0].norm() + s.grad[1].norm() <= 1e-8 * scale).then_some(p);
        }
    }
    None
}

/// Polishes an approximate node position.
pub fn refine_node(spec: &SuperpositionSpec, t: f64, guess: [f64; 2]) -> Option<[f64; 2]> {
    newton_node(spec, t, guess, 0.25, 60)
}

/// Finds every node in `region` by testing each lattice cell for a sign change
/// of both `Re Ψ` and `Im Ψ` and polishing candidates with Newton's method.
///
/// Works for any superposition. `resolution` is the cell count per axis.
pub fn grid_scan_nodes(
    spec: &SuperpositionSpec,
    t: f64,
    region: &Region,
    resolution: usize,
) -> Result<Vec<[f64; 2]>> {
    if resolution < 100 {
        return Err(Error::Argument(format!("grid scan resolution must be at least 100, got {resolution}")));
    }
    let n = resolution;
    let hx = (region.x_max - region.x_min) / n as f64;
    let hy = (region.y_max - region.y_min) / n as f64;
    let lattice: Vec<Vec<(f64, f64)>> = (0..=n)
        .into_par_iter()
        .map(|j| {
            let y = region.y_min + j as f64 * hy;
            (0..=n)
                .map(|i| {
                    let v = reduced_field(spec, region.x_min + i as f64 * hx, y, t).0;
                    (v.re, v.im)
                })
                .collect()
        })
        .collect();
    let straddles = |vals: [f64; 4]| {
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        lo <= 0.0 && hi >= 0.0
    };
    let cells: Vec<(usize, usize)> = (0..n)
        .flat_map(|j| (0..n).map(move |i| (i, j)))
        .filter(|&(i, j)| {
            let c = [lattice[j][i], lattice[j][i + 1], lattice[j + 1][i], lattice[j + 1][i + 1]];
            straddles(c.map(|v| v.0)) && straddles(c.map(|v| v.1))
        })
        .collect();
    let diag = hx.hypot(hy);
    let mut found: Vec<[f64; 2]> = cells
        .par_iter()
        .filter_map(|&(i, j)| {
            let centre = [region.x_min + (i as f64 + 0.5) * hx, region.y_min + (j as f64 + 0.5) * hy];
            let p = newton_node(spec, t, centre, diag, 60).or_else(|| newton_crossing(spec, t, centre, diag))?;
            (super::dist(p, centre) <= 2.0 * diag && region.contains(p)).then_some(p)
        })
        .collect();
    found.sort_by(|a, b| b[1].total_cmp(&a[1]).then(a[0].total_cmp(&b[0])));
    let mut unique: Vec<[f64; 2]> = Vec::with_capacity(found.len());
    for p in found {
        if !unique.iter().any(|q| super::dist(*q, p) < 1e-6) {
            unique.push(p);
        }
    }
    Ok(unique)
}
