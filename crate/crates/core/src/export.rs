//! CSV tables. Floats use the shortest round-trip representation, so equal
//! inputs give byte-identical files.

use std::io::Write;

use serde::Serialize;

use crate::diagnostics::{ChaosReport, Classification};
use crate::dynamics::Trajectory;
use crate::error::Result;
use crate::nodes::{EventKind, NodeKind, NodeStatus, NodeTrack};
use crate::wavefield::FieldGridRow;
use crate::xpoints::{AsymptoticCurve, Branch, XPointRecord};

fn kind_name(k: NodeKind) -> &'static str {
    match k {
        NodeKind::Fixed => "fixed",
        NodeKind::Moving => "moving",
    }
}

fn status_name(s: NodeStatus) -> &'static str {
    match s {
        NodeStatus::Active => "active",
        NodeStatus::Escaped => "escaped",
        NodeStatus::Collided => "collided",
    }
}

fn event_name(k: EventKind) -> &'static str {
    match k {
        EventKind::EscapeToInfinity => "escape_to_infinity",
        EventKind::CollisionWithFixed => "collision_with_fixed",
        EventKind::Reappearance => "reappearance",
    }
}

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::StablePlus => "stable_plus",
        Branch::StableMinus => "stable_minus",
        Branch::UnstablePlus => "unstable_plus",
        Branch::UnstableMinus => "unstable_minus",
    }
}

fn class_name(c: Classification) -> &'static str {
    match c {
        Classification::Ordered => "ordered",
        Classification::Chaotic => "chaotic",
        Classification::Undetermined => "undetermined",
    }
}

fn write_rows<W: Write, R: Serialize>(w: W, rows: impl IntoIterator<Item = R>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct NodeRow {
    track_id: usize,
    kind: &'static str,
    t: f64,
    x: f64,
    y: f64,
    status: &'static str,
}

/// `track_id,kind,t,x,y,status`; escaped samples carry their last position.
pub fn write_nodes<W: Write>(w: W, tracks: &[NodeTrack]) -> Result<()> {
    write_rows(
        w,
        tracks.iter().flat_map(|tr| {
            tr.samples.iter().map(move |s| NodeRow {
                track_id: tr.id,
                kind: kind_name(tr.kind),
                t: s.t,
                x: s.position[0],
                y: s.position[1],
                status: status_name(s.status),
            })
        }),
    )
}

#[derive(Serialize)]
struct EventRow {
    track_id: usize,
    t: f64,
    event_kind: &'static str,
    partner_fixed_id: Option<usize>,
}

/// `track_id,t,event_kind,partner_fixed_id`, ordered by time then track.
pub fn write_events<W: Write>(w: W, tracks: &[NodeTrack]) -> Result<()> {
    let mut rows: Vec<EventRow> = tracks
        .iter()
        .flat_map(|tr| {
            tr.events.iter().map(move |e| EventRow {
                track_id: tr.id,
                t: e.t,
                event_kind: event_name(e.kind),
                partner_fixed_id: e.partner_fixed_id,
            })
        })
        .collect();
    rows.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.track_id.cmp(&b.track_id)));
    write_rows(w, rows)
}

#[derive(Serialize)]
struct XPointRow {
    node_id: usize,
    t: f64,
    x: f64,
    y: f64,
    eig1: f64,
    eig2: f64,
}

/// `node_id,t,x,y,eig1,eig2` with absolute positions.
pub fn write_xpoints<W: Write>(w: W, xps: &[XPointRecord]) -> Result<()> {
    write_rows(
        w,
        xps.iter().map(|x| XPointRow {
            node_id: x.frame_node_id,
            t: x.t,
            x: x.position[0],
            y: x.position[1],
            eig1: x.eigenvalues[0],
            eig2: x.eigenvalues[1],
        }),
    )
}

#[derive(Serialize)]
struct CurveRow {
    branch: &'static str,
    s: f64,
    u: f64,
    v: f64,
}

/// `branch,s,u,v` in node-relative coordinates.
pub fn write_asymptotic<W: Write>(w: W, curves: &[AsymptoticCurve]) -> Result<()> {
    write_rows(
        w,
        curves.iter().flat_map(|c| {
            c.samples.iter().map(move |p| CurveRow { branch: branch_name(c.branch), s: p.s, u: p.u, v: p.v })
        }),
    )
}

#[derive(Serialize)]
struct TrajRow {
    traj_id: usize,
    t: f64,
    x: f64,
    y: f64,
}

/// `traj_id,t,x,y`; the id is the index in `trajs`.
pub fn write_trajectories<W: Write>(w: W, trajs: &[Trajectory]) -> Result<()> {
    write_rows(
        w,
        trajs
            .iter()
            .enumerate()
            .flat_map(|(i, tr)| tr.samples.iter().map(move |s| TrajRow { traj_id: i, t: s.t, x: s.x, y: s.y })),
    )
}

#[derive(Serialize)]
struct LoopRow {
    traj_id: usize,
    node_id: usize,
    t_start: f64,
    t_end: f64,
    winding: f64,
}

/// `traj_id,node_id,t_start,t_end,winding`.
pub fn write_loops<W: Write>(w: W, trajs: &[Trajectory]) -> Result<()> {
    write_rows(
        w,
        trajs.iter().enumerate().flat_map(|(i, tr)| {
            tr.loop_annotations.iter().map(move |l| LoopRow {
                traj_id: i,
                node_id: l.node_id,
                t_start: l.t_start,
                t_end: l.t_end,
                winding: l.winding,
            })
        }),
    )
}

#[derive(Serialize)]
struct ChaosRow {
    ic_x: f64,
    ic_y: f64,
    t0: f64,
    horizon: f64,
    stretching_number: f64,
    classification: &'static str,
}

/// `ic_x,ic_y,t0,horizon,stretching_number,classification`.
pub fn write_chaos<W: Write>(w: W, reports: &[ChaosReport]) -> Result<()> {
    write_rows(
        w,
        reports.iter().map(|r| ChaosRow {
            ic_x: r.ic.x,
            ic_y: r.ic.y,
            t0: r.ic.t0,
            horizon: r.horizon,
            stretching_number: r.stretching_number,
            classification: class_name(r.classification),
        }),
    )
}

/// `x,y,re_psi,im_psi,vx,vy,Q,Vtot`.
pub fn write_field<W: Write>(w: W, rows: &[FieldGridRow]) -> Result<()> {
    write_rows(w, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nodes::{NodeEvent, TrackSample};

    #[test]
    fn node_and_event_headers() {
        let tr = NodeTrack {
            id: 3,
            kind: NodeKind::Moving,
            samples: vec![TrackSample { t: 0.5, position: [1.0, -2.5], status: NodeStatus::Active }],
            events: vec![NodeEvent { t: 0.75, kind: EventKind::CollisionWithFixed, partner_fixed_id: Some(2) }],
        };
        let mut buf = Vec::new();
        write_nodes(&mut buf, std::slice::from_ref(&tr)).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "track_id,kind,t,x,y,status\n3,moving,0.5,1.0,-2.5,active\n");
        let mut buf = Vec::new();
        write_events(&mut buf, &[tr]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "track_id,t,event_kind,partner_fixed_id\n3,0.75,collision_with_fixed,2\n"
        );
    }
}
