//! Bohmian trajectories `ẋ = v(x, t)` with node-aware step control, and winding counts around nodes.

use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nodes::{NodeKind, NodeTrack};
use crate::ode::{self, OdeFailure, OdeOptions};
use crate::wavefield::{eval_field, SuperpositionSpec, DEFAULT_PSI_FLOOR};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialCondition {
    pub x: f64,
    pub y: f64,
    pub t0: f64,
}

impl InitialCondition {
    pub fn new(x: f64, y: f64, t0: f64) -> Self {
        Self { x, y, t0 }
    }
}

/// Radius of the disc around a node inside which turns are counted.
pub const DEFAULT_LOOP_RADIUS: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrateOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Sampling interval for the stored path; `None` stores every accepted step.
    pub sample_dt: Option<f64>,
    /// Each step is at most this fraction of the time needed to reach the nearest node.
    pub node_cap_factor: f64,
    pub psi_floor: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            sample_dt: None,
            node_cap_factor: 0.05,
            psi_floor: DEFAULT_PSI_FLOOR,
            h_min: 1e-12,
            max_steps: 50_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryStats {
    pub steps: usize,
    pub rejected_steps: usize,
    /// Smallest estimated distance to a node seen at any accepted step.
    pub min_node_distance: f64,
}

/// Signed number of turns around a node during one visit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoopInterval {
    pub node_id: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub winding: f64,
}

impl LoopInterval {
    /// Completed loops.
    pub fn loops(&self) -> u64 {
        self.winding.abs().floor() as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub ic: InitialCondition,
    pub samples: Vec<TrajSample>,
    pub stats: TrajectoryStats,
    pub loop_annotations: Vec<LoopInterval>,
}

impl Trajectory {
    pub fn last(&self) -> TrajSample {
        *self.samples.last().expect("a trajectory has at least its initial sample")
    }

    /// Linear interpolation of the stored samples.
    pub fn position_at(&self, t: f64) -> Option<[f64; 2]> {
        let s = &self.samples;
        if t < s[0].t || t > s[s.len() - 1].t {
            return None;
        }
        let k = s.partition_point(|p| p.t <= t).clamp(1, s.len() - 1);
        let (a, b) = (s[k - 1], s[k]);
        let w = if b.t > a.t { (t - a.t) / (b.t - a.t) } else { 0.0 };
        Some([a.x + w * (b.x - a.x), a.y + w * (b.y - a.y)])
    }
}

/// Estimated distance to the nearest node, `|Ψ| / |∇Ψ|`, and the local speed.
fn node_distance_and_speed(spec: &SuperpositionSpec, x: f64, y: f64, t: f64) -> (f64, f64) {
    let s = eval_field(spec, x, y, t);
    let g = s.grad[0].norm().hypot(s.grad[1].norm());
    let d = if g > 0.0 { s.psi.norm() / g } else { f64::INFINITY };
    let speed = s.velocity(0.0).map_or(f64::INFINITY, |v| v[0].hypot(v[1]));
    (d, speed)
}

fn tracked_distance(tracks: &[NodeTrack], x: f64, y: f64, t: f64) -> f64 {
    tracks
        .iter()
        .filter_map(|k| k.position_at(t))
        .map(|p| (p[0] - x).hypot(p[1] - y))
        .fold(f64::INFINITY, f64::min)
}

/// Integrates a trajectory, returning whatever was computed before a failure
/// together with the failure.
pub fn integrate_partial(
    spec: &SuperpositionSpec,
    ic: InitialCondition,
    t_end: f64,
    opts: &IntegrateOptions,
    node_tracks: &[NodeTrack],
) -> (Trajectory, Option<Error>) {
    let mut traj = Trajectory {
        ic,
        samples: vec![TrajSample { t: ic.t0, x: ic.x, y: ic.y }],
        stats: TrajectoryStats { steps: 0, rejected_steps: 0, min_node_distance: f64::INFINITY },
        loop_annotations: Vec::new(),
    };
    if !(t_end.is_finite() && ic.t0.is_finite() && t_end > ic.t0 && ic.x.is_finite() && ic.y.is_finite()) {
        let e = Error::Argument(format!("need finite initial condition and t_end > t0, got t0 = {}, t_end = {t_end}", ic.t0));
        return (traj, Some(e));
    }
    if let Some(dt) = opts.sample_dt {
        if !(dt > 0.0 && dt.is_finite()) {
            return (traj, Some(Error::Argument(format!("sample_dt must be positive, got {dt}"))));
        }
    }
    let s0 = eval_field(spec, ic.x, ic.y, ic.t0);
    if s0.psi.norm() <= opts.psi_floor {
        let e = Error::NodeSingularity { x: ic.x, y: ic.y, t: ic.t0, psi_abs: s0.psi.norm() };
        return (traj, Some(e));
    }
    let moving: Vec<NodeTrack> = node_tracks.iter().filter(|k| k.kind == NodeKind::Moving).cloned().collect();
    let fixed: Vec<NodeTrack> = node_tracks.iter().filter(|k| k.kind == NodeKind::Fixed).cloned().collect();
    let floor = opts.psi_floor;
    let rhs = |t: f64, p: &[f64; 2]| -> std::result::Result<[f64; 2], ()> {
        eval_field(spec, p[0], p[1], t).velocity(floor).ok_or(())
    };
    let mut min_dist = f64::INFINITY;
    let factor = opts.node_cap_factor;
    let cap = |t: f64, p: &[f64; 2]| {
        let (mut d, speed) = node_distance_and_speed(spec, p[0], p[1], t);
        if !node_tracks.is_empty() {
            d = d.min(tracked_distance(&moving, p[0], p[1], t)).min(tracked_distance(&fixed, p[0], p[1], t));
        }
        min_dist = min_dist.min(d);
        if speed == 0.0 {
            f64::INFINITY
        } else {
            factor * d / speed
        }
    };
    let mut next_sample = opts.sample_dt.map(|dt| (1usize, dt));
    let samples = &mut traj.samples;
    let mut path = vec![TrajSample { t: ic.t0, x: ic.x, y: ic.y }];
    let keep_path = !node_tracks.is_empty();
    let observer = |step: &ode::DenseStep<2>| {
        if keep_path {
            path.push(TrajSample { t: step.t1, x: step.y1[0], y: step.y1[1] });
        }
        match &mut next_sample {
            Some((k, dt)) => {
                loop {
                    let ts = ic.t0 + *k as f64 * *dt;
                    if ts > step.t1 || ts > t_end {
                        break;
                    }
                    let p = step.eval(ts);
                    samples.push(TrajSample { t: ts, x: p[0], y: p[1] });
                    *k += 1;
                }
            }
            None => samples.push(TrajSample { t: step.t1, x: step.y1[0], y: step.y1[1] }),
        }
        ControlFlow::Continue(())
    };
    let ode_opts = OdeOptions {
        rel_tol: opts.rel_tol,
        abs_tol: opts.abs_tol,
        h_min: opts.h_min,
        max_steps: opts.max_steps,
        ..OdeOptions::default()
    };
    let result = ode::integrate(rhs, ic.t0, [ic.x, ic.y], t_end, &ode_opts, cap, observer);
    let failure = match result {
        Ok(end) => {
            traj.stats.steps = end.stats.steps;
            traj.stats.rejected_steps = end.stats.rejected;
            let last = traj.samples.last().copied().expect("initial sample");
            if last.t < t_end {
                traj.samples.push(TrajSample { t: t_end, x: end.y[0], y: end.y[1] });
            }
            None
        }
        Err((f, stats)) => {
            traj.stats.steps = stats.steps;
            traj.stats.rejected_steps = stats.rejected;
            Some(match f {
                OdeFailure::StepUnderflow { t, y } | OdeFailure::TooManySteps { t, y } => {
                    Error::StepFailure { t, x: y[0], y: y[1] }
                }
                OdeFailure::BadStart => Error::NodeSingularity { x: ic.x, y: ic.y, t: ic.t0, psi_abs: 0.0 },
            })
        }
    };
    traj.stats.min_node_distance = min_dist;
    if keep_path {
        let dense = Trajectory { ic, samples: path, stats: traj.stats, loop_annotations: Vec::new() };
        traj.loop_annotations = node_tracks
            .iter()
            .flat_map(|k| count_loops(&dense, k, DEFAULT_LOOP_RADIUS))
            .filter(|l| l.winding.abs() >= 1.0)
            .collect();
        traj.loop_annotations.sort_by(|a, b| a.t_start.total_cmp(&b.t_start).then(a.node_id.cmp(&b.node_id)));
    }
    (traj, failure)
}

/// Integrates a Bohmian trajectory from `ic` to `t_end`.
///
/// Steps are capped so that a particle cannot cross more than a small
/// fraction of its distance to the nearest node; the distance comes from
/// `|Ψ|/|∇Ψ|` and, when given, from the tracked node positions. With tracks,
/// every visit of at least one full turn around a node is annotated.
pub fn integrate(
    spec: &SuperpositionSpec,
    ic: InitialCondition,
    t_end: f64,
    opts: &IntegrateOptions,
    node_tracks: &[NodeTrack],
) -> Result<Trajectory> {
    match integrate_partial(spec, ic, t_end, opts, node_tracks) {
        (traj, None) => Ok(traj),
        (_, Some(e)) => Err(e),
    }
}

/// Signed turns of the particle around a node over each maximal time interval
/// in which it stays within `loop_radius` of the node. `t_end` is the time the
/// last complete turn closed, or the end of the visit if none did.
///
/// The node position is interpolated from its track; samples outside the
/// track's time range are ignored.
pub fn count_loops(traj: &Trajectory, track: &NodeTrack, loop_radius: f64) -> Vec<LoopInterval> {
    struct Visit {
        t_start: f64,
        t_last: f64,
        t_turn: Option<f64>,
        winding: f64,
        angle: f64,
    }
    let close = |v: Visit| LoopInterval {
        node_id: track.id,
        t_start: v.t_start,
        t_end: v.t_turn.unwrap_or(v.t_last),
        winding: v.winding,
    };
    let mut out = Vec::new();
    let mut current: Option<Visit> = None;
    for s in &traj.samples {
        let inside = track.position_at(s.t).and_then(|n| {
            let (dx, dy) = (s.x - n[0], s.y - n[1]);
            (dx.hypot(dy) < loop_radius).then(|| dy.atan2(dx))
        });
        match (inside, current.as_mut()) {
            (Some(angle), None) => {
                current = Some(Visit { t_start: s.t, t_last: s.t, t_turn: None, winding: 0.0, angle })
            }
            (Some(angle), Some(v)) => {
                let mut d = angle - v.angle;
                d -= std::f64::consts::TAU * (d / std::f64::consts::TAU).round();
                let w = v.winding + d / std::f64::consts::TAU;
                if w.abs().floor() > v.winding.abs().floor() {
                    v.t_turn = Some(s.t);
                }
                v.winding = w;
                v.angle = angle;
                v.t_last = s.t;
            }
            (None, Some(_)) => out.push(close(current.take().expect("open visit"))),
            (None, None) => {}
        }
    }
    if let Some(v) = current {
        out.push(close(v));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nodes::{NodeStatus, TrackSample};
    use crate::presets;

    #[test]
    fn single_mode_particle_is_at_rest() {
        let spec = SuperpositionSpec::from_real(&[(1, 2)], &[1.0], 1.0, 0.8).unwrap();
        let tr = integrate(&spec, InitialCondition::new(0.4, 0.3, 0.0), 5.0, &IntegrateOptions::default(), &[]).unwrap();
        let last = tr.last();
        assert!((last.x - 0.4).abs() < 1e-12 && (last.y - 0.3).abs() < 1e-12);
    }

    #[test]
    fn sampling_grid() {
        let spec = presets::equal_weight();
        let opts = IntegrateOptions { sample_dt: Some(0.25), ..Default::default() };
        let tr = integrate(&spec, InitialCondition::new(1.0707, 1.8137, 0.0), 2.0, &opts, &[]).unwrap();
        assert_eq!(tr.samples.len(), 9);
        assert!((tr.samples[4].t - 1.0).abs() < 1e-12);
        assert!(tr.samples.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn start_on_node_is_rejected() {
        let spec = presets::typical();
        let r = integrate(&spec, InitialCondition::new(0.0, 0.0, 0.3), 1.0, &IntegrateOptions::default(), &[]);
        assert!(matches!(r, Err(Error::NodeSingularity { .. })));
    }

    #[test]
    fn synthetic_circle_winds_once() {
        let samples: Vec<TrajSample> = (0..=100)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / 100.0;
                TrajSample { t: k as f64 / 100.0, x: 1.0 + 0.3 * a.cos(), y: 0.3 * a.sin() }
            })
            .collect();
        let traj = Trajectory {
            ic: InitialCondition::new(1.3, 0.0, 0.0),
            samples,
            stats: TrajectoryStats { steps: 0, rejected_steps: 0, min_node_distance: 0.3 },
            loop_annotations: vec![],
        };
        let track = NodeTrack {
            id: 7,
            kind: NodeKind::Fixed,
            samples: vec![
                TrackSample { t: 0.0, position: [1.0, 0.0], status: NodeStatus::Active },
                TrackSample { t: 1.0, position: [1.0, 0.0], status: NodeStatus::Active },
            ],
            events: vec![],
        };
        let loops = count_loops(&traj, &track, 0.6);
        assert_eq!(loops.len(), 1);
        assert!((loops[0].winding - 1.0).abs() < 1e-12);
        assert_eq!(loops[0].loops(), 1);
    }
}
