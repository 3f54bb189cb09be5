//! X-points: saddle points of the frozen-time flow seen from a node's rest frame,
//! their asymptotic curves, and their position relative to maxima of the potentials.

use std::ops::ControlFlow;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::nodes::{dist, refine_node, NodeKind, NodeRecord};
use crate::ode::{self, OdeOptions};
use crate::wavefield::{
    eval_field, potentials_from_sample, QuantumPotentialForm, SuperpositionSpec, DEFAULT_PSI_FLOOR,
};

/// Default distance from the node within which X-points are searched.
pub const DEFAULT_SEARCH_RADIUS: f64 = 0.5;

/// Step for the centered difference of a moving node's position.
pub const NODE_VELOCITY_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XPointRecord {
    pub frame_node_id: usize,
    pub node_position: [f64; 2],
    pub node_velocity: [f64; 2],
    /// Absolute position.
    pub position: [f64; 2],
    /// Position relative to the node.
    pub uv: [f64; 2],
    pub t: f64,
    /// `J[i][j] = ∂ⱼ vᵢ` at the X-point (the node velocity is constant in space).
    pub jacobian: [[f64; 2]; 2],
    /// Unstable (positive) eigenvalue first.
    pub eigenvalues: [f64; 2],
    pub eigvecs: [[f64; 2]; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Branch {
    StablePlus,
    StableMinus,
    UnstablePlus,
    UnstableMinus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveSample {
    pub s: f64,
    pub u: f64,
    pub v: f64,
}

/// A stable or unstable manifold branch of an X-point in frozen time, in node-relative coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticCurve {
    pub branch: Branch,
    pub samples: Vec<CurveSample>,
    /// Stopped early because the field became singular.
    pub truncated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialCheck {
    pub value_at_xpoint: f64,
    pub is_near_local_max: bool,
    /// Distance from the X-point to the nearest local maximum on the scan grid.
    pub offset: f64,
    pub nearest_max: Option<[f64; 2]>,
}

/// Which potential a check scans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum PotentialKind {
    Quantum,
    Total,
}

/// Velocity of a node: zero for fixed nodes, otherwise a centered difference
/// of its position relocated by Newton's method at `t ± h`.
pub fn node_velocity(spec: &SuperpositionSpec, node: &NodeRecord) -> Result<[f64; 2]> {
    if node.kind == NodeKind::Fixed {
        return Ok([0.0, 0.0]);
    }
    let h = NODE_VELOCITY_STEP;
    let lost = || Error::LostNode { id: node.id, t: node.t };
    let plus = refine_node(spec, node.t + h, node.position).ok_or_else(lost)?;
    let minus = refine_node(spec, node.t - h, node.position).ok_or_else(lost)?;
    if dist(plus, node.position) > 1e3 * h || dist(minus, node.position) > 1e3 * h {
        return Err(lost());
    }
    Ok([(plus[0] - minus[0]) / (2.0 * h), (plus[1] - minus[1]) / (2.0 * h)])
}

/// Flow velocity relative to a node moving with `node_velocity`.
pub fn comoving_velocity(
    spec: &SuperpositionSpec,
    node_velocity: [f64; 2],
    x: f64,
    y: f64,
    t: f64,
) -> Result<[f64; 2]> {
    let v = crate::wavefield::velocity(spec, x, y, t)?;
    Ok([v[0] - node_velocity[0], v[1] - node_velocity[1]])
}

fn eigen_split(j: [[f64; 2]; 2]) -> Option<([f64; 2], [[f64; 2]; 2])> {
    let tr = j[0][0] + j[1][1];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let disc = 0.25 * tr * tr - det;
    if disc < 0.0 {
        return None;
    }
    let r = disc.sqrt();
    let lams = [0.5 * tr + r, 0.5 * tr - r];
    let vec = |l: f64| {
        let a = [j[0][1], l - j[0][0]];
        let b = [l - j[1][1], j[1][0]];
        let v = if a[0].hypot(a[1]) >= b[0].hypot(b[1]) { a } else { b };
        let n = v[0].hypot(v[1]);
        if n == 0.0 {
            [1.0, 0.0]
        } else {
            [v[0] / n, v[1] / n]
        }
    };
    Some((lams, [vec(lams[0]), vec(lams[1])]))
}

fn newton_stationary(
    spec: &SuperpositionSpec,
    vn: [f64; 2],
    t: f64,
    start: [f64; 2],
    max_step: f64,
) -> Option<([f64; 2], [[f64; 2]; 2])> {
    let mut p = start;
    for _ in 0..100 {
        let (v, j) = eval_field(spec, p[0], p[1], t).velocity_jacobian(DEFAULT_PSI_FLOOR)?;
        let f = [v[0] - vn[0], v[1] - vn[1]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let mut d = [-(j[1][1] * f[0] - j[0][1] * f[1]) / det, -(-j[1][0] * f[0] + j[0][0] * f[1]) / det];
        let len = d[0].hypot(d[1]);
        if len > max_step {
            d = [d[0] * max_step / len, d[1] * max_step / len];
        }
        p = [p[0] + d[0], p[1] + d[1]];
        if len < 1e-14 * (1.0 + p[0].hypot(p[1])) {
            break;
        }
    }
    let (v, j) = eval_field(spec, p[0], p[1], t).velocity_jacobian(DEFAULT_PSI_FLOOR)?;
    let res = (v[0] - vn[0]).hypot(v[1] - vn[1]);
    (res < 1e-10).then_some((p, j))
}

/// Saddle points of the frozen-time relative flow around `node`.
///
/// Newton's method starts from 24 seeds on each of four rings around the
/// node. Converged saddles within `search_radius` are kept.
pub fn find_xpoints(
    spec: &SuperpositionSpec,
    node: &NodeRecord,
    t: f64,
    search_radius: f64,
) -> Result<Vec<XPointRecord>> {
    if !(search_radius > 0.0 && search_radius.is_finite()) {
        return Err(Error::Argument(format!("search radius must be positive, got {search_radius}")));
    }
    let node = NodeRecord { t, ..*node };
    let vn = node_velocity(spec, &node)?;
    let c = node.position;
    let mut found: Vec<XPointRecord> = Vec::new();
    for frac in [0.05, 0.1, 0.2, 0.4] {
        let r = frac * search_radius;
        for k in 0..24 {
            let a = std::f64::consts::TAU * k as f64 / 24.0;
            let seed = [c[0] + r * a.cos(), c[1] + r * a.sin()];
            let Some((p, j)) = newton_stationary(spec, vn, t, seed, 0.1 * search_radius) else { continue };
            let d = dist(p, c);
            if d > search_radius || d < 1e-6 {
                continue;
            }
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det >= 0.0 {
                continue;
            }
            if found.iter().any(|x| dist(x.position, p) < 1e-6) {
                continue;
            }
            let (eigenvalues, eigvecs) = eigen_split(j).expect("real eigenvalues when det < 0");
            found.push(XPointRecord {
                frame_node_id: node.id,
                node_position: c,
                node_velocity: vn,
                position: p,
                uv: [p[0] - c[0], p[1] - c[1]],
                t,
                jacobian: j,
                eigenvalues,
                eigvecs,
            });
        }
    }
    if found.is_empty() {
        return Err(Error::NoXPointFound { node_id: node.id, t });
    }
    found.sort_by(|a, b| a.position[1].total_cmp(&b.position[1]).then(a.position[0].total_cmp(&b.position[0])));
    Ok(found)
}

/// The four asymptotic curves of an X-point with time frozen at `xp.t`.
///
/// Unstable branches are integrated forward in the fictitious time `s` from
/// `±ε` along the unstable eigenvector; stable branches backward from `±ε`
/// along the stable one. A branch stops at `|s| = s_span` or once it is
/// farther than `2·search_radius` from the node.
pub fn asymptotic_curves(
    spec: &SuperpositionSpec,
    xp: &XPointRecord,
    s_span: f64,
    eps: f64,
    search_radius: f64,
) -> Result<[AsymptoticCurve; 4]> {
    if !(s_span > 0.0 && eps > 0.0 && search_radius > 0.0) {
        return Err(Error::Argument("s_span, eps and search_radius must be positive".into()));
    }
    let t = xp.t;
    let vn = xp.node_velocity;
    let c = xp.node_position;
    let rhs = |_s: f64, uv: &[f64; 2]| -> std::result::Result<[f64; 2], ()> {
        let v = eval_field(spec, c[0] + uv[0], c[1] + uv[1], t).velocity(DEFAULT_PSI_FLOOR).ok_or(())?;
        Ok([v[0] - vn[0], v[1] - vn[1]])
    };
    let branch = |which: Branch| {
        let (e, sign, dir) = match which {
            Branch::UnstablePlus => (xp.eigvecs[0], 1.0, 1.0),
            Branch::UnstableMinus => (xp.eigvecs[0], -1.0, 1.0),
            Branch::StablePlus => (xp.eigvecs[1], 1.0, -1.0),
            Branch::StableMinus => (xp.eigvecs[1], -1.0, -1.0),
        };
        let start = [xp.uv[0] + sign * eps * e[0], xp.uv[1] + sign * eps * e[1]];
        let mut samples = vec![CurveSample { s: 0.0, u: start[0], v: start[1] }];
        let limit = 2.0 * search_radius;
        let opts = OdeOptions { rel_tol: 1e-10, abs_tol: 1e-12, h_max: 0.05, ..OdeOptions::default() };
        let result = ode::integrate(rhs, 0.0, start, dir * s_span, &opts, |_, _| f64::INFINITY, |step| {
            samples.push(CurveSample { s: step.t1, u: step.y1[0], v: step.y1[1] });
            if step.y1[0].hypot(step.y1[1]) > limit {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        });
        AsymptoticCurve { branch: which, samples, truncated: result.is_err() }
    };
    Ok([
        branch(Branch::StablePlus),
        branch(Branch::StableMinus),
        branch(Branch::UnstablePlus),
        branch(Branch::UnstableMinus),
    ])
}

/// Scans `Q` or `V_tot` on a 41×41 grid of half-width 0.3 around the X-point,
/// skipping a disc of radius 0.05 around the node, and reports the nearest
/// strict local maximum of the grid.
pub fn xpoint_potential_check(
    spec: &SuperpositionSpec,
    xp: &XPointRecord,
    kind: PotentialKind,
    form: QuantumPotentialForm,
) -> PotentialCheck {
    const N: usize = 41;
    const HALF: f64 = 0.3;
    const NODE_DISC: f64 = 0.05;
    let h = 2.0 * HALF / (N - 1) as f64;
    let value = |x: f64, y: f64| -> Option<f64> {
        let s = eval_field(spec, x, y, xp.t);
        let p = potentials_from_sample(spec, &s, x, y, xp.t, form).ok()?;
        Some(match kind {
            PotentialKind::Quantum => p.q,
            PotentialKind::Total => p.vtot,
        })
    };
    let at = |i: usize, j: usize| [xp.position[0] - HALF + i as f64 * h, xp.position[1] - HALF + j as f64 * h];
    let grid: Vec<Vec<Option<f64>>> = (0..N)
        .map(|j| {
            (0..N)
                .map(|i| {
                    let p = at(i, j);
                    if dist(p, xp.node_position) < NODE_DISC {
                        None
                    } else {
                        value(p[0], p[1])
                    }
                })
                .collect()
        })
        .collect();
    let mut best: Option<([f64; 2], f64)> = None;
    for j in 1..N - 1 {
        for i in 1..N - 1 {
            let Some(v) = grid[j][i] else { continue };
            let is_max = (-1i32..=1).all(|dj| {
                (-1i32..=1).all(|di| {
                    if di == 0 && dj == 0 {
                        return true;
                    }
                    match grid[(j as i32 + dj) as usize][(i as i32 + di) as usize] {
                        Some(w) => v > w,
                        None => false,
                    }
                })
            });
            if is_max {
                let p = at(i, j);
                let d = dist(p, xp.position);
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((p, d));
                }
            }
        }
    }
    let value_at_xpoint = value(xp.position[0], xp.position[1]).unwrap_or(f64::NAN);
    match best {
        Some((p, d)) => PotentialCheck { value_at_xpoint, is_near_local_max: d < 0.15, offset: d, nearest_max: Some(p) },
        None => PotentialCheck { value_at_xpoint, is_near_local_max: false, offset: f64::INFINITY, nearest_max: None },
    }
}
