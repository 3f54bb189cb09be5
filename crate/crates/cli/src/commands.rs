use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use bohmlab_core::diagnostics::{
    chaos_ensemble, node_hyperbola_residual, periodicity_check, ChaosOptions, SpecialCaseOracle,
};
use bohmlab_core::dynamics::{integrate_partial, InitialCondition, IntegrateOptions, Trajectory};
use bohmlab_core::export;
use bohmlab_core::nodes::{
    census, classify, grid_scan_nodes, reading_order_labels, track_nodes_with, NodeKind, NodeRecord, NodeStatus,
    NodeTrack, StructureTag, TrackOptions,
};
use bohmlab_core::wavefield::{field_grid, velocity, SuperpositionSpec};
use bohmlab_core::xpoints::{asymptotic_curves, find_xpoints};
use bohmlab_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::scenario::Scenario;

/// Files written by a command and the numerical failure, if any, that cut it short.
pub struct Outcome {
    pub files: Vec<String>,
    pub failure: Option<Error>,
}

struct Out<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl Out<'_> {
    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path: PathBuf = self.dir.join(name);
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(BufWriter::new(f))
    }
}

fn integrate_opts(sc: &Scenario) -> IntegrateOptions {
    IntegrateOptions {
        rel_tol: sc.tolerances.rel_tol,
        abs_tol: sc.tolerances.abs_tol,
        psi_floor: sc.tolerances.psi_floor,
        sample_dt: Some(sc.time.dt),
        ..IntegrateOptions::default()
    }
}

fn track_opts(sc: &Scenario) -> TrackOptions {
    TrackOptions {
        dt_max: sc.time.dt,
        escape_radius: sc.nodes.escape_radius,
        collision_tol: sc.nodes.collision_tol,
        frame: sc.region,
        scan_region: sc.region,
        scan_resolution: sc.nodes.scan_resolution,
        ..TrackOptions::default()
    }
}

fn has_analytic_solver(spec: &SuperpositionSpec) -> Result<bool> {
    Ok(matches!(classify(spec)?.tag, StructureTag::TwoEqualM | StructureTag::TwoEqualN))
}

fn nodes_at(sc: &Scenario, spec: &SuperpositionSpec, t: f64) -> Result<Vec<NodeRecord>> {
    if has_analytic_solver(spec)? {
        return Ok(census(spec, t)?);
    }
    let pts = grid_scan_nodes(spec, t, &sc.region, sc.nodes.scan_resolution.max(100))?;
    let labels = reading_order_labels(&pts, &sc.region);
    let mut out: Vec<NodeRecord> = pts
        .iter()
        .zip(labels)
        .map(|(&position, id)| NodeRecord { id, kind: NodeKind::Moving, position, t, status: NodeStatus::Active })
        .collect();
    out.sort_by_key(|r| r.id);
    Ok(out)
}

pub fn nodes(sc: &Scenario, dir: &Path) -> Result<Outcome> {
    let spec = sc.spec()?;
    let mut out = Out { dir, files: Vec::new() };
    let report = track_nodes_with(&spec, sc.time.t0, sc.time.t1, &track_opts(sc))?;
    export::write_nodes(out.create("nodes.csv")?, &report.tracks)?;
    export::write_events(out.create("events.csv")?, &report.tracks)?;
    Ok(Outcome { files: out.files, failure: report.lost.into_iter().next() })
}

pub fn xpoints(sc: &Scenario, dir: &Path) -> Result<Outcome> {
    let spec = sc.spec()?;
    let t = sc.xpoints.t.unwrap_or(sc.time.t0);
    let mut out = Out { dir, files: Vec::new() };
    let nodes: Vec<NodeRecord> = nodes_at(sc, &spec, t)?
        .into_iter()
        .filter(|n| {
            if sc.xpoints.node_ids.is_empty() {
                sc.region.contains(n.position)
            } else {
                sc.xpoints.node_ids.contains(&n.id)
            }
        })
        .collect();
    let mut failure = None;
    let mut all = Vec::new();
    for n in &nodes {
        match find_xpoints(&spec, n, t, sc.xpoints.search_radius) {
            Ok(xs) => all.extend(xs),
            Err(e @ Error::NoXPointFound { .. }) => {
                failure.get_or_insert(e);
            }
            Err(e) => return Err(e.into()),
        }
    }
    export::write_xpoints(out.create("xpoints.csv")?, &all)?;
    let mut index = std::collections::BTreeMap::<usize, usize>::new();
    for xp in &all {
        let k = index.entry(xp.frame_node_id).or_insert(0);
        let curves = asymptotic_curves(&spec, xp, sc.xpoints.s_span, sc.xpoints.eps, sc.xpoints.search_radius)?;
        export::write_asymptotic(out.create(&format!("asymptotic_{}_{}.csv", xp.frame_node_id, k))?, &curves)?;
        *k += 1;
    }
    Ok(Outcome { files: out.files, failure })
}

fn initial_conditions(sc: &Scenario, extra_random: usize) -> Vec<InitialCondition> {
    let mut ics = sc.initial_conditions.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    let r = &sc.region;
    ics.extend((0..extra_random).map(|_| {
        InitialCondition::new(rng.gen_range(r.x_min..r.x_max), rng.gen_range(r.y_min..r.y_max), sc.time.t0)
    }));
    ics
}

pub fn traj(sc: &Scenario, dir: &Path) -> Result<Outcome> {
    let spec = sc.spec()?;
    let mut out = Out { dir, files: Vec::new() };
    let ics = initial_conditions(sc, 0);
    anyhow::ensure!(!ics.is_empty(), "traj needs at least one [[initial_conditions]] entry");
    let tracks: Vec<NodeTrack> = if sc.traj.loops {
        let t0 = ics.iter().map(|ic| ic.t0).fold(sc.time.t0, f64::min);
        track_nodes_with(&spec, t0, sc.time.t1, &track_opts(sc))?.tracks
    } else {
        Vec::new()
    };
    let opts = integrate_opts(sc);
    let runs: Vec<(Trajectory, Option<Error>)> =
        ics.par_iter().map(|ic| integrate_partial(&spec, *ic, sc.time.t1, &opts, &tracks)).collect();
    let failure = runs.iter().find_map(|r| r.1.clone());
    let trajs: Vec<Trajectory> = runs.into_iter().map(|r| r.0).collect();
    export::write_trajectories(out.create("traj.csv")?, &trajs)?;
    if sc.traj.loops {
        export::write_loops(out.create("loops.csv")?, &trajs)?;
    }
    Ok(Outcome { files: out.files, failure })
}

pub fn field(sc: &Scenario, dir: &Path) -> Result<Outcome> {
    let spec = sc.spec()?;
    let mut out = Out { dir, files: Vec::new() };
    let t = sc.field.t.unwrap_or(sc.time.t0);
    let rows = field_grid(&spec, t, &sc.region, sc.field.nx, sc.field.ny, sc.field.potential_form)?;
    export::write_field(out.create("field.csv")?, &rows)?;
    Ok(Outcome { files: out.files, failure: None })
}

pub fn chaos(sc: &Scenario, dir: &Path) -> Result<Outcome> {
    let spec = sc.spec()?;
    let mut out = Out { dir, files: Vec::new() };
    let ics = initial_conditions(sc, sc.chaos.random_ics);
    anyhow::ensure!(!ics.is_empty(), "chaos needs initial conditions or chaos.random_ics > 0");
    let opts = ChaosOptions {
        threshold: sc.chaos.threshold,
        rel_tol: sc.tolerances.rel_tol,
        abs_tol: sc.tolerances.abs_tol,
        bootstrap_samples: sc.chaos.bootstrap_samples,
        seed: sc.seed,
    };
    let reports = chaos_ensemble(&spec, &ics, sc.chaos.horizon, &opts)?;
    export::write_chaos(out.create("chaos.csv")?, &reports)?;
    Ok(Outcome { files: out.files, failure: None })
}

#[derive(Serialize)]
struct HyperbolaRow {
    t: f64,
    x_n: f64,
    y_n: f64,
    residual: f64,
}

#[derive(Serialize)]
struct IntegralRow {
    traj_id: usize,
    t: f64,
    x: f64,
    y: f64,
    residual: Option<f64>,
}

#[derive(Serialize)]
struct PeriodRow {
    traj_id: usize,
    period: f64,
    return_error: f64,
    is_periodic: bool,
}

fn write_csv<R: Serialize>(w: BufWriter<File>, rows: &[R]) -> Result<()> {
    let mut c = csv::Writer::from_writer(w);
    for r in rows {
        c.serialize(r)?;
    }
    c.flush()?;
    Ok(())
}

pub fn oracle(sc: &Scenario, dir: &Path) -> Result<Outcome> {
    let spec = sc.spec()?;
    let mut out = Out { dir, files: Vec::new() };
    let probe = [0.37, -0.21, 0.9];
    let o = SpecialCaseOracle::calibrate(&spec, probe)?;
    let mut failure = None;

    let steps = ((sc.time.t1 - sc.time.t0) / sc.time.dt).round() as usize;
    let mut hyper = Vec::new();
    for k in 0..=steps {
        let t = sc.time.t0 + k as f64 * sc.time.dt;
        match node_hyperbola_residual(&spec, t) {
            Ok(h) => hyper.push(HyperbolaRow { t, x_n: h.node[0], y_n: h.node[1], residual: h.residual }),
            Err(Error::DegenerateTime { .. }) => {}
            Err(e) => {
                failure.get_or_insert(e);
            }
        }
    }
    write_csv(out.create("hyperbola.csv")?, &hyper)?;

    let ics = initial_conditions(sc, 0);
    let opts = integrate_opts(sc);
    let runs: Vec<(Trajectory, Option<Error>)> =
        ics.par_iter().map(|ic| integrate_partial(&spec, *ic, sc.time.t1, &opts, &[])).collect();
    let mut integral = Vec::new();
    for (i, (tr, err)) in runs.iter().enumerate() {
        if let Some(e) = err {
            failure.get_or_insert(e.clone());
        }
        for s in &tr.samples {
            let residual = velocity(&spec, s.x, s.y, s.t)
                .ok()
                .and_then(|v| o.integral_residual(s.x, s.y, v[0], v[1]).ok());
            integral.push(IntegralRow { traj_id: i, t: s.t, x: s.x, y: s.y, residual });
        }
    }
    write_csv(out.create("integral.csv")?, &integral)?;

    let periods: Vec<PeriodRow> = ics
        .par_iter()
        .enumerate()
        .map(|(i, ic)| {
            periodicity_check(&spec, *ic, sc.oracle.period, sc.oracle.periodicity_tol).map(|p| PeriodRow {
                traj_id: i,
                period: sc.oracle.period,
                return_error: p.return_error,
                is_periodic: p.is_periodic,
            })
        })
        .collect::<Result<_, Error>>()?;
    write_csv(out.create("periodicity.csv")?, &periods)?;
    Ok(Outcome { files: out.files, failure })
}
