//! Nodal points of `Ψ`: structural classification, the analytic solver for
//! states with a repeated quantum number, a grid-scan oracle that works for
//! any state, and a time-continuation tracker with escape and collision events.

mod analytic;
mod classify;
mod scan;
mod track;

use serde::Serialize;

pub use analytic::{
    census, fixed_nodes, moving_node_y_equation, moving_node_y_equation_with, solve_moving_nodes,
    solve_moving_nodes_with, AnalyticOptions,
};
pub use classify::{classify, StructureClass, StructureTag};
pub use scan::{grid_scan_nodes, refine_node};
pub use track::{track_nodes, track_nodes_with, TrackOptions, TrackReport};

use crate::wavefield::Region;

/// Default bound on `|Ψ|` for a point to count as a node.
pub const DEFAULT_NODE_TOL: f64 = 1e-8;

/// Beyond this distance from the origin a node counts as escaped.
pub const DEFAULT_ESCAPE_RADIUS: f64 = 12.0;

/// Viewing frame used for labeling nodes.
pub const DEFAULT_FRAME: Region = Region { x_min: -5.0, x_max: 5.0, y_min: -5.0, y_max: 5.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum NodeKind {
    Fixed,
    Moving,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum NodeStatus {
    Active,
    /// Outside the escape radius, on its way to or from infinity.
    Escaped,
    Collided,
}

/// A nodal point at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeRecord {
    pub id: usize,
    pub kind: NodeKind,
    pub position: [f64; 2],
    pub t: f64,
    pub status: NodeStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum EventKind {
    EscapeToInfinity,
    CollisionWithFixed,
    Reappearance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeEvent {
    pub t: f64,
    pub kind: EventKind,
    pub partner_fixed_id: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrackSample {
    pub t: f64,
    pub position: [f64; 2],
    pub status: NodeStatus,
}

/// The time history of one nodal point.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeTrack {
    pub id: usize,
    pub kind: NodeKind,
    pub samples: Vec<TrackSample>,
    pub events: Vec<NodeEvent>,
}

impl NodeTrack {
    /// Linear interpolation of the sampled path; `None` outside the sampled range
    /// or across a gap where the node was beyond the scan window.
    pub fn position_at(&self, t: f64) -> Option<[f64; 2]> {
        let s = &self.samples;
        if s.is_empty() || t < s[0].t || t > s[s.len() - 1].t {
            return None;
        }
        let k = s.partition_point(|p| p.t <= t);
        if k == 0 {
            return Some(s[0].position);
        }
        if k == s.len() {
            return Some(s[k - 1].position);
        }
        let (a, b) = (&s[k - 1], &s[k]);
        if self
            .events
            .iter()
            .any(|e| e.kind != EventKind::CollisionWithFixed && e.t > a.t && e.t < b.t)
            && a.status != b.status
        {
            return None;
        }
        let w = if b.t > a.t { (t - a.t) / (b.t - a.t) } else { 0.0 };
        Some([
            a.position[0] + w * (b.position[0] - a.position[0]),
            a.position[1] + w * (b.position[1] - a.position[1]),
        ])
    }

    /// The record at sample index `i`.
    pub fn record(&self, i: usize) -> NodeRecord {
        let s = self.samples[i];
        NodeRecord { id: self.id, kind: self.kind, position: s.position, t: s.t, status: s.status }
    }

    /// The sample closest in time to `t`, as a record.
    pub fn record_near(&self, t: f64) -> Option<NodeRecord> {
        let i = self
            .samples
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1.t - t).abs().total_cmp(&(b.1.t - t).abs()))?
            .0;
        Some(self.record(i))
    }
}

/// Assigns 1-based labels in reading order: rows of equal `y` from top to
/// bottom, and inside a row nodes within `frame` left to right followed by
/// the nodes outside it.
///
/// Returns, for each input position, its label.
pub fn reading_order_labels(positions: &[[f64; 2]], frame: &Region) -> Vec<usize> {
    let mut order: Vec<usize> = (0..positions.len()).collect();
    let row_tol = 1e-9;
    order.sort_by(|&a, &b| {
        let (pa, pb) = (positions[a], positions[b]);
        let same_row = (pa[1] - pb[1]).abs() <= row_tol * (1.0 + pa[1].abs());
        if !same_row {
            return pb[1].total_cmp(&pa[1]);
        }
        let (ia, ib) = (frame.contains(pa), frame.contains(pb));
        ib.cmp(&ia).then(pa[0].total_cmp(&pb[0]))
    });
    let mut labels = vec![0; positions.len()];
    for (rank, &i) in order.iter().enumerate() {
        labels[i] = rank + 1;
    }
    labels
}

pub(crate) fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub(crate) fn norm(a: [f64; 2]) -> f64 {
    a[0].hypot(a[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reading_order_rows_then_columns() {
        let frame = Region::square(5.0);
        let pts = [[1.0, 0.0], [-1.0, 0.0], [0.0, 2.0], [-9.0, -1.0], [0.5, -1.0], [-0.5, -1.0]];
        let labels = reading_order_labels(&pts, &frame);
        assert_eq!(labels, vec![3, 2, 1, 6, 5, 4]);
    }

    #[test]
    fn interpolation_between_samples() {
        let track = NodeTrack {
            id: 1,
            kind: NodeKind::Moving,
            samples: vec![
                TrackSample { t: 0.0, position: [0.0, 0.0], status: NodeStatus::Active },
                TrackSample { t: 1.0, position: [1.0, 2.0], status: NodeStatus::Active },
            ],
            events: vec![],
        };
        assert_eq!(track.position_at(0.5), Some([0.5, 1.0]));
        assert_eq!(track.position_at(1.5), None);
    }
}
