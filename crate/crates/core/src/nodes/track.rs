use super::analytic::{AnalyticOptions, Row, Solver};
use super::classify::{classify, StructureTag};
use super::scan::grid_scan_nodes;
use super::{
    dist, fixed_nodes, norm, reading_order_labels, EventKind, NodeEvent, NodeKind, NodeStatus, NodeTrack,
    TrackSample, DEFAULT_ESCAPE_RADIUS, DEFAULT_FRAME,
};
use crate::error::{Error, Result};
use crate::wavefield::{Region, SuperpositionSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackOptions {
    pub dt_max: f64,
    /// Below this step the tracker stops refining and reports lost nodes.
    pub dt_min: f64,
    /// Largest accepted jump per step, measured in a metric that shrinks near infinity.
    pub jump_max: f64,
    /// Largest step across which a node may leave or enter the scan window.
    pub edge_dt: f64,
    pub escape_radius: f64,
    pub collision_tol: f64,
    /// Frame used to label the nodes at the start time.
    pub frame: Region,
    pub analytic: AnalyticOptions,
    /// Region and resolution for states without an analytic solver.
    pub scan_region: Region,
    pub scan_resolution: usize,
}

impl Default for TrackOptions {
    fn default() -> Self {
        Self {
            dt_max: 0.01,
            dt_min: 1e-9,
            jump_max: 0.2,
            edge_dt: 1e-4,
            escape_radius: DEFAULT_ESCAPE_RADIUS,
            collision_tol: 1e-3,
            frame: DEFAULT_FRAME,
            analytic: AnalyticOptions::default(),
            scan_region: Region::square(6.0),
            scan_resolution: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrackReport {
    /// Sorted by id. Fixed nodes are included and never move.
    pub tracks: Vec<NodeTrack>,
    /// Nodes the continuation could not follow; tracking went on without them.
    pub lost: Vec<Error>,
    pub structure: StructureTag,
    pub steps: usize,
}

impl TrackReport {
    pub fn track(&self, id: usize) -> Option<&NodeTrack> {
        self.tracks.iter().find(|t| t.id == id)
    }

    pub fn events(&self) -> impl Iterator<Item = (usize, &NodeEvent)> {
        self.tracks.iter().flat_map(|t| t.events.iter().map(move |e| (t.id, e)))
    }
}

/// Tracks every node over `[t0, t1]` with default options and step `dt_max`.
pub fn track_nodes(spec: &SuperpositionSpec, t0: f64, t1: f64, dt_max: f64) -> Result<TrackReport> {
    track_nodes_with(spec, t0, t1, &TrackOptions { dt_max, ..TrackOptions::default() })
}

enum Source {
    Analytic { solver: Solver, key_axis: usize },
    Scan { region: Region, resolution: usize },
}

impl Source {
    fn rows(&self, spec: &SuperpositionSpec, t: f64) -> Result<Vec<Row>> {
        match self {
            Source::Analytic { solver, .. } => solver.rows(t),
            Source::Scan { region, resolution } => {
                Ok(vec![Row { key: 0.0, nodes: grid_scan_nodes(spec, t, region, *resolution)? }])
            }
        }
    }
}

struct Group {
    key: f64,
    active: bool,
    last_active: f64,
}

struct Slot {
    track: usize,
    group: usize,
    pos: [f64; 2],
    active: bool,
    last_active: f64,
    /// Index of the first sample after arriving from infinity, until the
    /// reappearance time has been extrapolated from two samples.
    incoming: Option<usize>,
}

#[derive(Clone, Copy)]
enum Target {
    Existing(usize),
    New,
}

struct Plan {
    row_groups: Vec<Target>,
    row_slots: Vec<Vec<Target>>,
    dropped_groups: Vec<usize>,
    dropped_slots: Vec<usize>,
    lost_slots: Vec<usize>,
}

fn greedy(n_old: usize, n_new: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<(usize, usize, f64)> {
    let mut all: Vec<(usize, usize, f64)> = (0..n_old)
        .flat_map(|a| (0..n_new).map(move |b| (a, b)))
        .map(|(a, b)| (a, b, cost(a, b)))
        .collect();
    all.sort_by(|x, y| x.2.total_cmp(&y.2));
    let (mut used_old, mut used_new) = (vec![false; n_old], vec![false; n_new]);
    let mut out = Vec::new();
    for (a, b, d) in all {
        if !used_old[a] && !used_new[b] {
            used_old[a] = true;
            used_new[b] = true;
            out.push((a, b, d));
        }
    }
    out
}

struct Tracker<'a> {
    spec: &'a SuperpositionSpec,
    opts: &'a TrackOptions,
    source: Source,
    groups: Vec<Group>,
    slots: Vec<Slot>,
    tracks: Vec<NodeTrack>,
    lost: Vec<Error>,
    next_id: usize,
}

impl<'a> Tracker<'a> {
    fn jump(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        let r2 = self.opts.escape_radius.powi(2);
        let far = (a[0] * a[0] + a[1] * a[1]).max(b[0] * b[0] + b[1] * b[1]);
        dist(a, b) * (r2 / far).min(1.0)
    }

    fn jump1(&self, a: f64, b: f64) -> f64 {
        let r2 = self.opts.escape_radius.powi(2);
        (a - b).abs() * (r2 / (a * a).max(b * b)).min(1.0)
    }

    fn is_edge(&self, p: [f64; 2]) -> bool {
        match &self.source {
            Source::Analytic { .. } => norm(p) > self.opts.escape_radius,
            Source::Scan { region, .. } => {
                let m = 2.0 * self.opts.jump_max;
                p[0] - region.x_min < m || region.x_max - p[0] < m || p[1] - region.y_min < m || region.y_max - p[1] < m
            }
        }
    }

    fn key_is_edge(&self, key: f64) -> bool {
        match &self.source {
            Source::Analytic { .. } => key.abs() > self.opts.escape_radius,
            Source::Scan { .. } => false,
        }
    }

    fn cross_distance(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        match &self.source {
            Source::Analytic { key_axis, .. } => (a[1 - key_axis] - b[1 - key_axis]).abs(),
            Source::Scan { .. } => dist(a, b),
        }
    }

    fn status_of(&self, p: [f64; 2]) -> NodeStatus {
        if norm(p) > self.opts.escape_radius {
            NodeStatus::Escaped
        } else {
            NodeStatus::Active
        }
    }

    fn new_track(&mut self, id: usize, kind: NodeKind) -> usize {
        self.tracks.push(NodeTrack { id, kind, samples: Vec::new(), events: Vec::new() });
        self.tracks.len() - 1
    }

    fn init(&mut self, t0: f64, rows: Vec<Row>, fixed: &[[f64; 2]]) {
        let mut positions: Vec<[f64; 2]> = fixed.to_vec();
        for row in &rows {
            positions.extend(&row.nodes);
        }
        let labels = reading_order_labels(&positions, &self.opts.frame);
        self.next_id = positions.len() + 1;
        for (p, &id) in fixed.iter().zip(&labels) {
            let k = self.new_track(id, NodeKind::Fixed);
            self.tracks[k].samples.push(TrackSample { t: t0, position: *p, status: NodeStatus::Active });
        }
        let mut label = labels[fixed.len()..].iter();
        for row in rows {
            self.groups.push(Group { key: row.key, active: true, last_active: t0 });
            let g = self.groups.len() - 1;
            for p in row.nodes {
                let id = *label.next().expect("one label per node");
                let k = self.new_track(id, NodeKind::Moving);
                let status = self.status_of(p);
                self.tracks[k].samples.push(TrackSample { t: t0, position: p, status });
                self.slots.push(Slot { track: k, group: g, pos: p, active: true, last_active: t0, incoming: None });
            }
        }
    }

    fn plan(&self, rows: &[Row], h: f64, forced: bool) -> Option<Plan> {
        let j = self.opts.jump_max;
        let coarse = h > self.opts.edge_dt && !forced;
        let active_groups: Vec<usize> = (0..self.groups.len()).filter(|&g| self.groups[g].active).collect();
        let mut row_groups: Vec<Option<Target>> = vec![None; rows.len()];
        let mut matched_groups = vec![false; self.groups.len()];
        for (a, b, d) in greedy(active_groups.len(), rows.len(), |a, b| {
            self.jump1(self.groups[active_groups[a]].key, rows[b].key)
        }) {
            if d > j && !forced {
                return None;
            }
            row_groups[b] = Some(Target::Existing(active_groups[a]));
            matched_groups[active_groups[a]] = true;
        }
        let mut dropped_groups = Vec::new();
        let mut lost_slots = Vec::new();
        for &g in &active_groups {
            if !matched_groups[g] {
                if coarse || (!self.key_is_edge(self.groups[g].key) && !forced) {
                    return None;
                }
                dropped_groups.push(g);
            }
        }
        let mut dormant: Vec<usize> = (0..self.groups.len()).filter(|&g| !self.groups[g].active).collect();
        dormant.sort_by(|&a, &b| self.groups[b].last_active.total_cmp(&self.groups[a].last_active));
        let mut dormant = dormant.into_iter();
        let mut relinked = vec![false; rows.len()];
        for b in 0..rows.len() {
            if row_groups[b].is_some() {
                continue;
            }
            if coarse || (!self.key_is_edge(rows[b].key) && !forced) {
                return None;
            }
            relinked[b] = true;
            row_groups[b] = Some(dormant.next().map_or(Target::New, Target::Existing));
        }
        let row_groups: Vec<Target> = row_groups.into_iter().map(|g| g.expect("assigned")).collect();

        let mut dropped_slots = Vec::new();
        let mut row_slots = Vec::with_capacity(rows.len());
        for (b, row) in rows.iter().enumerate() {
            let g = match row_groups[b] {
                Target::Existing(g) => Some(g),
                Target::New => None,
            };
            let old: Vec<usize> = match g {
                Some(g) if !relinked[b] => {
                    (0..self.slots.len()).filter(|&s| self.slots[s].active && self.slots[s].group == g).collect()
                }
                _ => Vec::new(),
            };
            let mut targets: Vec<Option<Target>> = vec![None; row.nodes.len()];
            let mut matched = vec![false; old.len()];
            for (a, n, d) in greedy(old.len(), row.nodes.len(), |a, n| self.jump(self.slots[old[a]].pos, row.nodes[n])) {
                if d > j {
                    if !forced {
                        return None;
                    }
                    lost_slots.push(old[a]);
                }
                targets[n] = Some(Target::Existing(old[a]));
                matched[a] = true;
            }
            for (a, &s) in old.iter().enumerate() {
                if !matched[a] {
                    if coarse {
                        return None;
                    }
                    if !self.is_edge(self.slots[s].pos) {
                        if !forced {
                            return None;
                        }
                        lost_slots.push(s);
                    }
                    dropped_slots.push(s);
                }
            }
            let mut sleeping: Vec<usize> = match g {
                Some(g) => (0..self.slots.len())
                    .filter(|&s| !self.slots[s].active && self.slots[s].group == g)
                    .collect(),
                None => Vec::new(),
            };
            for n in 0..row.nodes.len() {
                if targets[n].is_some() {
                    continue;
                }
                if coarse || (!relinked[b] && !self.is_edge(row.nodes[n]) && !forced) {
                    return None;
                }
                let best = sleeping
                    .iter()
                    .enumerate()
                    .min_by(|x, y| {
                        self.cross_distance(self.slots[*x.1].pos, row.nodes[n])
                            .total_cmp(&self.cross_distance(self.slots[*y.1].pos, row.nodes[n]))
                    })
                    .map(|(i, _)| i);
                targets[n] = Some(match best {
                    Some(i) => Target::Existing(sleeping.swap_remove(i)),
                    None => Target::New,
                });
            }
            row_slots.push(targets.into_iter().map(|x| x.expect("assigned")).collect());
        }
        for &g in &dropped_groups {
            for s in 0..self.slots.len() {
                if self.slots[s].active && self.slots[s].group == g {
                    if !self.is_edge(self.slots[s].pos) {
                        lost_slots.push(s);
                    }
                    dropped_slots.push(s);
                }
            }
        }
        Some(Plan { row_groups, row_slots, dropped_groups, dropped_slots, lost_slots })
    }

    fn apply(&mut self, plan: Plan, rows: Vec<Row>, t_old: f64, t: f64) {
        let r = self.opts.escape_radius;
        for s in plan.lost_slots {
            let id = self.tracks[self.slots[s].track].id;
            self.lost.push(Error::LostNode { id, t });
        }
        for g in plan.dropped_groups {
            self.groups[g].active = false;
            self.groups[g].last_active = t_old;
        }
        for s in plan.dropped_slots {
            let slot = &mut self.slots[s];
            slot.active = false;
            slot.last_active = t_old;
            slot.incoming = None;
            let track = &mut self.tracks[slot.track];
            if norm(slot.pos) > r {
                if let Some(tp) = pole_time(&track.samples, true) {
                    track.events.push(NodeEvent { t: tp, kind: EventKind::EscapeToInfinity, partner_fixed_id: None });
                }
            }
        }
        for ((row, target), slot_targets) in rows.into_iter().zip(plan.row_groups).zip(plan.row_slots) {
            let g = match target {
                Target::Existing(g) => g,
                Target::New => {
                    self.groups.push(Group { key: row.key, active: true, last_active: t });
                    self.groups.len() - 1
                }
            };
            self.groups[g].key = row.key;
            self.groups[g].active = true;
            self.groups[g].last_active = t;
            for (p, st) in row.nodes.into_iter().zip(slot_targets) {
                let s = match st {
                    Target::Existing(s) => s,
                    Target::New => {
                        let id = self.next_id;
                        self.next_id += 1;
                        let k = self.new_track(id, NodeKind::Moving);
                        self.slots.push(Slot { track: k, group: g, pos: p, active: false, last_active: t, incoming: None });
                        self.slots.len() - 1
                    }
                };
                let slot = &mut self.slots[s];
                let track = &mut self.tracks[slot.track];
                if !slot.active && norm(p) > r {
                    slot.incoming = Some(track.samples.len());
                }
                slot.group = g;
                slot.pos = p;
                slot.active = true;
                slot.last_active = t;
                let status = if norm(p) > r { NodeStatus::Escaped } else { NodeStatus::Active };
                track.samples.push(TrackSample { t, position: p, status });
                if let Some(i) = slot.incoming.filter(|&i| track.samples.len() >= i + 3) {
                    slot.incoming = None;
                    if let Some(tp) = pole_time(&track.samples[i..i + 3], false) {
                        track.events.push(NodeEvent { t: tp, kind: EventKind::Reappearance, partner_fixed_id: None });
                    }
                }
            }
        }
        for track in self.tracks.iter_mut().filter(|k| k.kind == NodeKind::Fixed) {
            let p = track.samples[0].position;
            track.samples.push(TrackSample { t, position: p, status: NodeStatus::Active });
        }
    }

    /// Refines close approaches to fixed nodes and records collisions.
    fn collisions(&mut self) {
        let Source::Analytic { solver, .. } = &self.source else { return };
        let fixed: Vec<(usize, [f64; 2])> = self
            .tracks
            .iter()
            .filter(|k| k.kind == NodeKind::Fixed)
            .map(|k| (k.id, k.samples[0].position))
            .collect();
        if fixed.is_empty() {
            return;
        }
        let coarse = 2.0 * self.opts.jump_max;
        let tol = self.opts.collision_tol;
        for track in self.tracks.iter_mut().filter(|k| k.kind == NodeKind::Moving) {
            let mut found: Vec<(NodeEvent, TrackSample)> = Vec::new();
            for &(fid, fp) in &fixed {
                let s = &track.samples;
                for k in 1..s.len().saturating_sub(1) {
                    let d = [dist(s[k - 1].position, fp), dist(s[k].position, fp), dist(s[k + 1].position, fp)];
                    if !(d[1] <= d[0] && d[1] <= d[2] && d[1] < coarse) {
                        continue;
                    }
                    if dist(s[k - 1].position, s[k].position) > coarse || dist(s[k].position, s[k + 1].position) > coarse {
                        continue;
                    }
                    let locate = |tau: f64| -> Option<[f64; 2]> {
                        let w = |a: &TrackSample, b: &TrackSample| {
                            let u = ((tau - a.t) / (b.t - a.t)).clamp(0.0, 1.0);
                            [a.position[0] + u * (b.position[0] - a.position[0]), a.position[1] + u * (b.position[1] - a.position[1])]
                        };
                        let guess = if tau <= s[k].t { w(&s[k - 1], &s[k]) } else { w(&s[k], &s[k + 1]) };
                        let rows = solver.rows(tau).ok()?;
                        rows.iter()
                            .flat_map(|r| r.nodes.iter().copied())
                            .min_by(|a, b| dist(*a, guess).total_cmp(&dist(*b, guess)))
                    };
                    let gap = |tau: f64| locate(tau).map_or(f64::INFINITY, |p| dist(p, fp));
                    let (tau, dmin) = golden_min(&gap, s[k - 1].t, s[k + 1].t, 1e-11);
                    if dmin < tol {
                        if found.iter().any(|(e, _)| e.partner_fixed_id == Some(fid) && (e.t - tau).abs() < 1e-6) {
                            continue;
                        }
                        let p = locate(tau).unwrap_or(fp);
                        found.push((
                            NodeEvent { t: tau, kind: EventKind::CollisionWithFixed, partner_fixed_id: Some(fid) },
                            TrackSample { t: tau, position: p, status: NodeStatus::Collided },
                        ));
                    }
                }
            }
            for (e, sample) in found {
                track.events.push(e);
                let at = track.samples.partition_point(|x| x.t < sample.t);
                track.samples.insert(at, sample);
            }
            track.events.sort_by(|a, b| a.t.total_cmp(&b.t));
        }
    }
}

/// Time at which the reciprocal of the diverging coordinate vanishes,
/// extrapolated from the samples nearest the pole (the last ones for an
/// escape, the first ones for an arrival): linear through two, polished on
/// the quadratic through three spread out in that reciprocal.
fn pole_time(samples: &[TrackSample], forward: bool) -> Option<f64> {
    let n = samples.len();
    if n < 2 {
        return None;
    }
    let ordered: Vec<&TrackSample> =
        if forward { samples.iter().rev().collect() } else { samples.iter().collect() };
    let nearest = ordered[0].position;
    let axis = if nearest[0].abs() >= nearest[1].abs() { 0 } else { 1 };
    let u = |s: &TrackSample| 1.0 / s.position[axis];
    let u0 = u(ordered[0]);
    let pick = |factor: f64, from: usize| {
        (from..ordered.len())
            .take_while(|&i| ordered[i].position[axis].signum() == nearest[axis].signum())
            .find(|&i| u(ordered[i]).abs() >= factor * u0.abs())
    };
    let i1 = pick(2.0, 1).unwrap_or(1);
    let chosen: Vec<usize> = match pick(3.0, i1 + 1) {
        Some(i2) => vec![i2, i1, 0],
        None => vec![i1, 0],
    };
    let mut pts: Vec<(f64, f64)> = chosen.iter().map(|&i| (ordered[i].t, u(ordered[i]))).collect();
    if !forward {
        pts.reverse();
    }
    let (p, q) = if forward { (pts[pts.len() - 2], pts[pts.len() - 1]) } else { (pts[1], pts[0]) };
    if p.1 == q.1 {
        return None;
    }
    let mut tp = q.0 - q.1 * (q.0 - p.0) / (q.1 - p.1);
    if pts.len() == 3 {
        let [(t0, u0), (t1, u1), (t2, u2)] = [pts[0], pts[1], pts[2]];
        let quad = |t: f64| {
            u0 * (t - t1) * (t - t2) / ((t0 - t1) * (t0 - t2))
                + u1 * (t - t0) * (t - t2) / ((t1 - t0) * (t1 - t2))
                + u2 * (t - t0) * (t - t1) / ((t2 - t0) * (t2 - t1))
        };
        let lin = tp;
        for _ in 0..20 {
            let h = 1e-7 * (1.0 + tp.abs());
            let d = (quad(tp + h) - quad(tp - h)) / (2.0 * h);
            if d == 0.0 {
                break;
            }
            let step = quad(tp) / d;
            tp -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        if !tp.is_finite() || (tp - lin).abs() > (q.0 - p.0).abs() {
            tp = lin;
        }
    }
    tp.is_finite().then_some(tp)
}

/// Golden-section minimization of a unimodal function on `[a, b]`.
pub(crate) fn golden_min(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Follows every node from `t0` to `t1`.
///
/// States with two equal `m` (or `n`) use the analytic solver. Other states
/// fall back to grid scans of `opts.scan_region`. Labels come from reading
/// order at `t0`; nodes first seen later get fresh ids.
pub fn track_nodes_with(spec: &SuperpositionSpec, t0: f64, t1: f64, opts: &TrackOptions) -> Result<TrackReport> {
    if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
        return Err(Error::Argument(format!("tracking interval [{t0}, {t1}] is empty or not finite")));
    }
    if !(opts.dt_max > 0.0 && opts.dt_min > 0.0 && opts.dt_min <= opts.dt_max) {
        return Err(Error::Argument("tracking steps must satisfy 0 < dt_min <= dt_max".into()));
    }
    if !(opts.jump_max > 0.0 && opts.edge_dt > 0.0 && opts.escape_radius > 0.0 && opts.collision_tol > 0.0) {
        return Err(Error::Argument("jump, escape radius and collision tolerance must be positive".into()));
    }
    let class = classify(spec)?;
    let (source, fixed) = match class.tag {
        StructureTag::TwoEqualM | StructureTag::TwoEqualN => (
            Source::Analytic {
                solver: Solver::new(spec, opts.analytic)?,
                key_axis: if class.tag == StructureTag::TwoEqualN { 0 } else { 1 },
            },
            fixed_nodes(spec)?,
        ),
        _ => (Source::Scan { region: opts.scan_region, resolution: opts.scan_resolution }, Vec::new()),
    };
    let rows0 = source.rows(spec, t0)?;
    let mut tracker = Tracker {
        spec,
        opts,
        source,
        groups: Vec::new(),
        slots: Vec::new(),
        tracks: Vec::new(),
        lost: Vec::new(),
        next_id: 1,
    };
    tracker.init(t0, rows0, &fixed);

    let mut t = t0;
    let mut dt = opts.dt_max;
    let mut steps = 0;
    while t < t1 {
        let h = dt.min(t1 - t);
        let next = if t1 - (t + h) < 1e-12 * t1.abs().max(1.0) { t1 } else { t + h };
        let can_halve = 0.5 * h >= opts.dt_min;
        let rows = match tracker.source.rows(tracker.spec, next) {
            Ok(rows) => rows,
            Err(Error::DegenerateTime { .. }) if can_halve => {
                dt = 0.5 * h;
                continue;
            }
            Err(e) => return Err(e),
        };
        match tracker.plan(&rows, next - t, !can_halve) {
            Some(plan) => {
                tracker.apply(plan, rows, t, next);
                t = next;
                steps += 1;
                dt = (2.0 * dt).min(opts.dt_max);
            }
            None => dt = 0.5 * h,
        }
    }
    tracker.collisions();
    let mut tracks = tracker.tracks;
    tracks.sort_by_key(|k| k.id);
    Ok(TrackReport { tracks, lost: tracker.lost, structure: class.tag, steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn golden_section_finds_vertex() {
        let (x, f) = golden_min(&|x: f64| (x - 0.3).abs(), 0.0, 1.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-10 && f < 1e-10);
    }

    #[test]
    fn short_run_keeps_all_ids() {
        let spec = presets::typical();
        let rep = track_nodes(&spec, 0.1, 0.3, 0.01).unwrap();
        assert_eq!(rep.tracks.len(), 31);
        assert!(rep.lost.is_empty());
        let n20 = rep.track(20).unwrap();
        assert_eq!(n20.kind, NodeKind::Moving);
        assert!((n20.samples[0].position[0] - 1.2544).abs() < 1e-3);
        for k in &rep.tracks {
            assert!((k.samples.last().unwrap().t - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_mode_follows_single_node() {
        let spec = SuperpositionSpec::from_real(&[(0, 2), (1, 1), (2, 0)], &[1.0, 1.0, 1.0], 1.0, 1.2).unwrap();
        let opts = TrackOptions { scan_region: Region::square(3.0), scan_resolution: 120, dt_max: 0.05, ..Default::default() };
        let rep = track_nodes_with(&spec, 0.2, 0.6, &opts).unwrap();
        assert_eq!(rep.structure, StructureTag::AllDistinctSmall);
        assert!(!rep.tracks.is_empty());
    }
}
