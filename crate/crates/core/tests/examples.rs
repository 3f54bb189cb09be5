use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::ops::ControlFlow;

use approx::assert_abs_diff_eq;
use bohmlab_core::diagnostics::{
    node_hyperbola_residual, periodicity_check, stretching_number, ChaosOptions, Classification, SpecialCaseOracle,
};
use bohmlab_core::dynamics::{integrate, InitialCondition, IntegrateOptions};
use bohmlab_core::eigenbasis::{eigen1d, hermite, mode_phase, Mode, OscillatorParams};
use bohmlab_core::nodes::{
    census, classify, grid_scan_nodes, moving_node_y_equation, track_nodes, NodeKind, NodeRecord, NodeStatus,
    StructureTag,
};
use bohmlab_core::ode::{self, OdeOptions};
use bohmlab_core::presets;
use bohmlab_core::wavefield::{eval_field, potentials, velocity, Region, SuperpositionSpec};
use bohmlab_core::xpoints::{asymptotic_curves, comoving_velocity, find_xpoints, node_velocity, Branch};
use bohmlab_core::Error;

fn typical_tracks() -> &'static bohmlab_core::nodes::TrackReport {
    static REPORT: std::sync::OnceLock<bohmlab_core::nodes::TrackReport> = std::sync::OnceLock::new();
    REPORT.get_or_init(|| track_nodes(&presets::typical(), 0.1, 2.5, 0.01).unwrap())
}

#[test]
fn hermite_values() {
    assert_eq!(hermite(0, 1.7).unwrap(), (1.0, 0.0));
    assert_eq!(hermite(5, 0.0).unwrap(), (0.0, 120.0));
    let (h, dh) = hermite(3, 1.5f64.sqrt()).unwrap();
    assert_abs_diff_eq!(h, 0.0, epsilon = 1e-12);
    assert_abs_diff_eq!(dh, 24.0, epsilon = 1e-9);
}

#[test]
fn eigenfunction_values() {
    assert_abs_diff_eq!(eigen1d(0, 1.0, 0.0).unwrap().value, PI.powf(-0.25), epsilon = 1e-15);
    assert_eq!(eigen1d(1, 1.0, 0.0).unwrap().value, 0.0);
    assert!(eigen1d(5, FRAC_1_SQRT_2, 2.4024).unwrap().value.abs() < 1e-4);
}

#[test]
fn phase_values() {
    let p = OscillatorParams::new(1.0, FRAC_1_SQRT_2).unwrap();
    assert_abs_diff_eq!(mode_phase(Mode::new(3, 3).unwrap(), &p, 1.0), 3.5 * (1.0 + FRAC_1_SQRT_2), epsilon = 1e-12);
    assert_abs_diff_eq!(mode_phase(Mode::new(4, 5).unwrap(), &p, 2.0), 9.0 + 11.0 * FRAC_1_SQRT_2, epsilon = 1e-12);
    assert_eq!(mode_phase(Mode::new(0, 0).unwrap(), &OscillatorParams::new(0.3, 2.0).unwrap(), 0.0), 0.0);
}

#[test]
fn field_values() {
    let g = SuperpositionSpec::from_real(&[(0, 0)], &[1.0], 1.0, 1.0).unwrap();
    let s = eval_field(&g, 0.0, 0.0, 0.0);
    assert_abs_diff_eq!(s.psi.re, 1.0 / PI.sqrt(), epsilon = 1e-15);
    assert_eq!(s.grad[0].norm() + s.grad[1].norm(), 0.0);
    let spec = presets::typical();
    for t in [0.0, 0.37, 1.9] {
        assert!(eval_field(&spec, 1.2245, 0.0, t).psi.norm() < 1e-3);
        assert!(eval_field(&spec, 0.0, 2.4024, t).psi.norm() < 1e-3);
    }
    let p = potentials(&g, 0.8, -1.3, 0.4).unwrap();
    assert_abs_diff_eq!(p.vtot, 1.0, epsilon = 1e-12);
}

#[test]
fn closed_form_velocity_at_orbit_start() {
    let spec = presets::equal_weight();
    let o = SpecialCaseOracle::calibrate(&spec, [0.2, 0.9, 0.6]).unwrap();
    let t = 1e-3;
    let v = velocity(&spec, 1.0707, 1.8137, t).unwrap();
    let c = o.velocity(1.0707, 1.8137, t);
    assert_abs_diff_eq!(v[0], c[0], epsilon = 1e-12);
    assert_abs_diff_eq!(v[1], c[1], epsilon = 1e-12);
}

#[test]
fn structure_tags() {
    let c = classify(&presets::typical()).unwrap();
    assert_eq!(c.tag, StructureTag::TwoEqualM);
    assert_eq!(c.fixed_count(), 15);
    for (got, want) in c.fixed_x_roots.iter().zip([-1.224745, 0.0, 1.224745]) {
        assert_abs_diff_eq!(*got, want, epsilon = 1e-6);
    }
    let (outer, inner) = (((5.0 + 10f64.sqrt()) / 2.0).sqrt(), ((5.0 - 10f64.sqrt()) / 2.0).sqrt());
    let scale = FRAC_1_SQRT_2.sqrt();
    for (got, want) in c.fixed_y_roots.iter().zip([-outer, -inner, 0.0, inner, outer]) {
        assert_abs_diff_eq!(*got, want / scale, epsilon = 1e-12);
    }
    assert_abs_diff_eq!(c.fixed_y_roots[4], 2.4024, epsilon = 1e-4);
    let three = SuperpositionSpec::from_real(&[(2, 0), (2, 1), (2, 3)], &[1.0; 3], 1.0, 1.0).unwrap();
    assert_eq!(classify(&three).unwrap().tag, StructureTag::ThreeEqualM);
    let distinct = SuperpositionSpec::from_real(&[(0, 1), (1, 2), (2, 0)], &[1.0; 3], 1.0, 1.0).unwrap();
    assert_eq!(classify(&distinct).unwrap().tag, StructureTag::AllDistinctSmall);
}

#[test]
fn row_equation_examples() {
    let spec = presets::typical();
    assert_eq!(moving_node_y_equation(&spec, 0.1).unwrap().len(), 4);
    let t = PI / (1.0 + FRAC_1_SQRT_2) - 1e-7;
    let ys = moving_node_y_equation(&spec, t).unwrap();
    let target = (3.0 / (2.0 * FRAC_1_SQRT_2)).sqrt();
    for want in [-target, 0.0, target] {
        assert!(ys.iter().any(|y| (y - want).abs() < 1e-5), "{want} not in {ys:?}");
    }
    let single = SuperpositionSpec::from_real(&[(3, 3), (3, 4), (4, 5)], &[0.0, 1.0, 1.0], 1.0, FRAC_1_SQRT_2).unwrap();
    let roots = moving_node_y_equation(&single, 0.3).unwrap();
    let exact = bohmlab_core::eigenbasis::eigen_roots(4, FRAC_1_SQRT_2);
    assert_eq!(roots.len(), exact.len());
    for (a, b) in roots.iter().zip(&exact) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);
    }
}

#[test]
fn moving_nodes_at_a_tenth() {
    let nodes = census(&presets::typical(), 0.1).unwrap();
    let moving: Vec<&NodeRecord> = nodes.iter().filter(|n| n.kind == NodeKind::Moving).collect();
    assert_eq!(moving.len(), 16);
    assert!(nodes[20].position[0] < -4.0);
    assert!((nodes[19].position[0] - 1.2544).hypot(nodes[19].position[1] + 1.1264) < 2e-2);
}

#[test]
fn tracked_collisions_and_node_21() {
    let rep = typical_tracks();
    assert!(rep.lost.is_empty());
    assert_eq!(rep.tracks.len(), 31);
    for (moving, fixed) in [(18, 15), (19, 16), (20, 17)] {
        let e = rep.track(moving).unwrap().events.iter().find(|e| e.partner_fixed_id == Some(fixed)).unwrap();
        assert!((e.t - PI / (1.0 + FRAC_1_SQRT_2)).abs() < 1e-3, "{moving}: {}", e.t);
    }
    let n21 = rep.track(21).unwrap();
    let max_x = n21
        .samples
        .iter()
        .take_while(|s| s.status == NodeStatus::Active || s.position[0] < 0.0)
        .filter(|s| s.status == NodeStatus::Active)
        .map(|s| s.position[0])
        .fold(f64::NEG_INFINITY, f64::max);
    assert!((-4.0..-2.0).contains(&max_x), "node 21 reaches x = {max_x}");
}

#[test]
fn grid_scan_examples() {
    let spec = presets::typical();
    assert_eq!(grid_scan_nodes(&spec, 0.1, &Region::square(5.0), 400).unwrap().len(), 30);
    let f1 = presets::single_node();
    assert_eq!(grid_scan_nodes(&f1, 0.5, &Region::square(4.0), 200).unwrap().len(), 1);
    let single = SuperpositionSpec::from_real(&[(3, 4)], &[1.0], 1.0, FRAC_1_SQRT_2).unwrap();
    let region = Region::square(2.0);
    let xs = bohmlab_core::eigenbasis::eigen_roots(3, 1.0).into_iter().filter(|x| x.abs() <= 2.0).count();
    let ys = bohmlab_core::eigenbasis::eigen_roots(4, FRAC_1_SQRT_2).into_iter().filter(|y| y.abs() <= 2.0).count();
    assert_eq!(grid_scan_nodes(&single, 0.7, &region, 300).unwrap().len(), xs * ys);
}

#[test]
fn node_velocity_follows_the_hyperbola() {
    let spec = presets::equal_weight();
    let t = 0.8;
    let p = SpecialCaseOracle::node_path(t).unwrap();
    let node = NodeRecord { id: 1, kind: NodeKind::Moving, position: p, t, status: NodeStatus::Active };
    let v = node_velocity(&spec, &node).unwrap();
    let exact = [SQRT_2 * t.sin(), -t.sin() / (2.0 * SQRT_2 * t.cos() * t.cos())];
    assert_abs_diff_eq!(v[0], exact[0], epsilon = 1e-6);
    assert_abs_diff_eq!(v[1], exact[1], epsilon = 1e-6);
}

#[test]
fn xpoint_examples() {
    let spec = presets::typical();
    let nodes = census(&spec, 0.1).unwrap();
    let fixed = find_xpoints(&spec, &nodes[16], 0.1, 0.5).unwrap();
    let moving = find_xpoints(&spec, &nodes[13], 0.1, 0.5).unwrap();
    assert_eq!(fixed.len(), 2);
    assert_eq!(moving.len(), 2);
    for a in &moving {
        assert!(fixed.iter().all(|b| (a.position[0] - b.position[0]).hypot(a.position[1] - b.position[1]) > 1e-4));
    }
    for xp in fixed.iter().chain(&moving) {
        let j = xp.jacobian;
        assert!(j[0][0] * j[1][1] - j[0][1] * j[1][0] < 0.0);
        let rel = comoving_velocity(&spec, xp.node_velocity, xp.position[0], xp.position[1], 0.1).unwrap();
        assert!(rel[0].hypot(rel[1]) < 1e-10);
    }
    let v = velocity(&spec, 0.9, 0.4, 0.1).unwrap();
    assert_eq!(comoving_velocity(&spec, [0.0, 0.0], 0.9, 0.4, 0.1).unwrap(), v);
}

#[test]
fn asymptotic_curve_examples() {
    let spec = presets::typical();
    let nodes = census(&spec, 0.1).unwrap();
    let xps = find_xpoints(&spec, &nodes[13], 0.1, 0.5).unwrap();
    let eps = 1e-6;
    for xp in &xps {
        let curves = asymptotic_curves(&spec, xp, 5.0, eps, 0.5).unwrap();
        let up = curves.iter().find(|c| c.branch == Branch::UnstablePlus).unwrap();
        let k = up.samples.iter().position(|p| (p.u - xp.uv[0]).hypot(p.v - xp.uv[1]) > 10.0 * eps).unwrap();
        let p = up.samples[k];
        let d = [p.u - xp.uv[0], p.v - xp.uv[1]];
        let n = d[0].hypot(d[1]);
        let e = xp.eigvecs[0];
        assert!((d[0] * e[1] - d[1] * e[0]).abs() / n < 1e-3, "direction off the unstable eigenvector");

        let c = xp.node_position;
        let vn = xp.node_velocity;
        let rhs = |_s: f64, uv: &[f64; 2]| -> Result<[f64; 2], ()> {
            let v = velocity(&spec, c[0] + uv[0], c[1] + uv[1], 0.1).map_err(|_| ())?;
            Ok([v[0] - vn[0], v[1] - vn[1]])
        };
        let end = ode::integrate(rhs, p.s, [p.u, p.v], 0.0, &OdeOptions::default(), |_, _| f64::INFINITY, |_| {
            ControlFlow::Continue(())
        })
        .unwrap();
        assert!((end.y[0] - xp.uv[0]).hypot(end.y[1] - xp.uv[1]) < 2.0 * eps);
    }
    let (a, b) = (&xps[0], &xps[1]);
    for (from, to) in [(a, b), (b, a)] {
        let curves = asymptotic_curves(&spec, from, 5.0, eps, 0.5).unwrap();
        let closest = curves
            .iter()
            .filter(|c| matches!(c.branch, Branch::StablePlus | Branch::StableMinus))
            .flat_map(|c| &c.samples)
            .map(|p| (p.u - to.uv[0]).hypot(p.v - to.uv[1]))
            .fold(f64::INFINITY, f64::min);
        assert!(closest > 0.0);
    }
}

#[test]
fn equal_weight_orbit_closes_and_retraces() {
    let spec = presets::equal_weight();
    let ic = InitialCondition::new(1.0707, 1.8137, 0.0);
    let tr = integrate(&spec, ic, 2.0 * PI, &IntegrateOptions::default(), &[]).unwrap();
    let end = tr.last();
    assert!((end.x - ic.x).hypot(end.y - ic.y) < 1e-4);
    let opts = IntegrateOptions { sample_dt: Some(0.3), ..Default::default() };
    let before = integrate(&spec, ic, PI - 0.3, &opts, &[]).unwrap().last();
    let after = integrate(&spec, ic, PI + 0.3, &opts, &[]).unwrap().last();
    assert!((before.x - after.x).hypot(before.y - after.y) < 1e-4);
}

#[test]
fn loops_around_node_20() {
    let spec = presets::typical();
    let rep = typical_tracks();
    for (x, y, until) in [(1.25, -1.1195, 1.81), (1.254, -1.121, 1.836)] {
        let tr = integrate(&spec, InitialCondition::new(x, y, 0.1), 2.5, &IntegrateOptions::default(), &rep.tracks)
            .unwrap();
        let visit = tr.loop_annotations.iter().find(|l| l.node_id == 20).unwrap();
        assert!(visit.loops() > 100);
        assert!((visit.t_end - until).abs() < 0.02, "({x}, {y}) leaves node 20 at {}", visit.t_end);
    }
}

#[test]
fn loop_counts_fall_towards_the_axis() {
    let spec = presets::typical();
    let rep = typical_tracks();
    let totals: Vec<u64> = [(1.409, 0.253), (1.45, 0.1), (1.45, 0.01)]
        .iter()
        .map(|&(x, y)| {
            let tr = integrate(&spec, InitialCondition::new(x, y, 0.1), 2.5, &IntegrateOptions::default(), &rep.tracks)
                .unwrap();
            tr.loop_annotations.iter().filter(|l| l.node_id == 14 || l.node_id == 17).map(|l| l.loops()).sum()
        })
        .collect();
    assert!(totals[0] >= totals[1] && totals[1] >= totals[2], "{totals:?}");
    assert!(totals[0] >= 10);
}

#[test]
fn single_node_orbit_makes_no_loops() {
    let spec = presets::single_node();
    let rep = track_nodes(&spec, 0.01, 1.5, 0.01).unwrap();
    let tr = integrate(&spec, InitialCondition::new(-1.6026, -1.2004, 0.01), 1.5, &IntegrateOptions::default(), &rep.tracks)
        .unwrap();
    assert!(tr.loop_annotations.is_empty(), "{:?}", tr.loop_annotations);
}

#[test]
fn stretching_number_examples() {
    let spec = presets::typical();
    let o = ChaosOptions::default();
    let inside = stretching_number(&spec, InitialCondition::new(0.5, 0.5, 0.1), 60.0, &o).unwrap();
    assert_eq!(inside.classification, Classification::Chaotic);
    let outside = stretching_number(&spec, InitialCondition::new(4.5, 5.5, 0.1), 60.0, &o).unwrap();
    assert_ne!(outside.classification, Classification::Chaotic);
    let f = presets::equal_weight();
    let ic = InitialCondition::new(1.0707, 1.8137, 0.0);
    let short = stretching_number(&f, ic, 20.0 * PI, &o).unwrap();
    let long = stretching_number(&f, ic, 80.0 * PI, &o).unwrap();
    assert!(long.stretching_number.abs() < short.stretching_number.abs().max(0.01));
    assert_eq!(long.classification, Classification::Ordered);
}

#[test]
fn periodicity_examples() {
    use rand::{Rng, SeedableRng};
    let f = presets::equal_weight();
    assert!(periodicity_check(&f, InitialCondition::new(1.0707, 1.8137, 0.0), 2.0 * PI, 1e-4).unwrap().is_periodic);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let ic = InitialCondition::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), 0.0);
        let r = periodicity_check(&f, ic, 2.0 * PI, 1e-4).unwrap();
        assert!(r.is_periodic, "{ic:?}: {}", r.return_error);
    }
    let r = periodicity_check(&presets::typical(), InitialCondition::new(0.5, 0.5, 0.1), 2.0 * PI, 1e-4).unwrap();
    assert!(!r.is_periodic && r.return_error > 1e-2);
}

#[test]
fn integral_residual_examples() {
    let spec = presets::equal_weight();
    let o = SpecialCaseOracle::calibrate(&spec, [0.6, 0.3, 1.1]).unwrap();
    let tr = integrate(&spec, InitialCondition::new(1.0707, 1.8137, 0.0), 2.0 * PI, &IntegrateOptions::default(), &[])
        .unwrap();
    let (x, y, t) = (0.7, -0.45, 0.9);
    let v = velocity(&spec, x, y, t).unwrap();
    assert!(o.integral_residual(x, y, v[0], v[1]).unwrap().abs() < 1e-10);
    assert!(o.integral_residual(x, y, 1.01 * v[0], 1.01 * v[1]).unwrap().abs() > 1e-3);
    assert!(matches!(o.integral_residual(0.0, 0.7, 0.3, 0.0), Err(Error::DegenerateState(_))));
    assert!(tr.samples.len() > 10);
}

#[test]
fn hyperbola_examples() {
    let spec = presets::equal_weight();
    for t in [0.7, 1.2] {
        assert!(node_hyperbola_residual(&spec, t).unwrap().residual.abs() < 1e-8);
    }
    let h = node_hyperbola_residual(&spec, PI / 2.0 - 1e-3).unwrap();
    assert!(h.node[0].abs() < 0.01 && h.node[1].abs() > 10.0, "{:?}", h.node);
    assert!(matches!(node_hyperbola_residual(&spec, PI), Err(Error::DegenerateTime { .. })));
    assert!(matches!(node_hyperbola_residual(&spec, PI / 2.0), Err(Error::DegenerateTime { .. })));
}
