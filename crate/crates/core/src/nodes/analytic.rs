use num_complex::Complex64;

use super::classify::{classify, pair_split, PairSplit, StructureTag};
use super::{reading_order_labels, NodeKind, NodeRecord, NodeStatus, DEFAULT_ESCAPE_RADIUS, DEFAULT_FRAME};
use crate::eigenbasis::{bisect, reduced_unchecked};
use crate::error::{Error, Result};
use crate::wavefield::{Region, SuperpositionSpec};

/// Scan settings for the analytic solver. Windows are in units of `1/√ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticOptions {
    pub row_window: f64,
    pub col_window: f64,
    pub cells: usize,
    /// Both weights of the row equation below this means the time is degenerate.
    pub degenerate_tol: f64,
}

impl Default for AnalyticOptions {
    fn default() -> Self {
        Self { row_window: 100.0, col_window: 100.0, cells: 8000, degenerate_tol: 1e-12 }
    }
}

/// Moving nodes sharing one root of the row equation.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Row {
    /// Root of the row equation: `y` for a shared `m`, `x` for a shared `n`.
    pub key: f64,
    /// Node positions in the original coordinates.
    pub nodes: Vec<[f64; 2]>,
}

/// Analytic node solver for a superposition with exactly two equal `m`
/// (or, after transposition, two equal `n`).
#[derive(Debug, Clone)]
pub(crate) struct Solver {
    frame: SuperpositionSpec,
    split: PairSplit,
    opts: AnalyticOptions,
}

impl Solver {
    pub fn new(spec: &SuperpositionSpec, opts: AnalyticOptions) -> Result<Self> {
        let class = classify(spec)?;
        if !matches!(class.tag, StructureTag::TwoEqualM | StructureTag::TwoEqualN) {
            return Err(Error::Argument(format!(
                "analytic node solver needs two modes with equal m or n, got {:?}",
                class.tag
            )));
        }
        let split = pair_split(spec).expect("classified as a pair");
        if spec.coefficients()[split.odd].norm() == 0.0 {
            return Err(Error::Argument("the unpaired mode has a zero coefficient".into()));
        }
        if !(opts.row_window > 0.0 && opts.col_window > 0.0 && opts.cells >= 2) {
            return Err(Error::Argument("analytic scan windows and cell count must be positive".into()));
        }
        let frame = if split.transposed { spec.transposed() } else { spec.clone() };
        Ok(Self { frame, split, opts })
    }

    fn to_original(&self, p: [f64; 2]) -> [f64; 2] {
        if self.split.transposed {
            [p[1], p[0]]
        } else {
            p
        }
    }

    fn poly_y(&self, j: usize, y: f64) -> f64 {
        reduced_unchecked(self.frame.modes()[j].n, self.frame.params().omega2, y).value
    }

    fn poly_x(&self, l: u32, x: f64) -> f64 {
        reduced_unchecked(l, self.frame.params().omega1, x).value
    }

    fn weights(&self, d: &[Complex64]) -> [f64; 2] {
        let r = d[self.split.odd].conj();
        [(d[self.split.pair[0]] * r).im, (d[self.split.pair[1]] * r).im]
    }

    /// Roots of `Σ_pair Im(dⱼ d̄ᵣ) Pⱼ(y) = 0`, the row coordinates of the moving nodes.
    pub fn row_roots(&self, t: f64) -> Result<Vec<f64>> {
        let d = self.frame.phased_coefficients(t);
        let w = self.weights(&d);
        if w[0].abs() < self.opts.degenerate_tol && w[1].abs() < self.opts.degenerate_tol {
            return Err(Error::DegenerateTime { t });
        }
        let [p, q] = self.split.pair;
        let f = |y: f64| w[0] * self.poly_y(p, y) + w[1] * self.poly_y(q, y);
        let half = self.opts.row_window / self.frame.params().omega2.sqrt();
        Ok(scan_roots(&f, -half, half, self.opts.cells))
    }

    fn row_nodes(&self, d: &[Complex64], y: f64) -> Vec<f64> {
        let [p, q] = self.split.pair;
        let r = self.split.odd;
        let shared = self.frame.modes()[p].m;
        let odd_m = self.frame.modes()[r].m;
        let a = d[p] * self.poly_y(p, y) + d[q] * self.poly_y(q, y);
        let alpha = (a * d[r].conj()).re;
        let beta = d[r].norm_sqr() * self.poly_y(r, y);
        if alpha == 0.0 && beta == 0.0 {
            return Vec::new();
        }
        let g = |x: f64| alpha * self.poly_x(shared, x) + beta * self.poly_x(odd_m, x);
        let half = self.opts.col_window / self.frame.params().omega1.sqrt();
        scan_roots(&g, -half, half, self.opts.cells)
    }

    /// All moving nodes at `t`, grouped by row.
    pub fn rows(&self, t: f64) -> Result<Vec<Row>> {
        let d = self.frame.phased_coefficients(t);
        let keys = self.row_roots(t)?;
        Ok(keys
            .into_iter()
            .map(|y| Row {
                key: y,
                nodes: self.row_nodes(&d, y).into_iter().map(|x| self.to_original([x, y])).collect(),
            })
            .collect())
    }
}

/// Sign-change scan over `cells` equal cells, each bracket refined by bisection.
pub(crate) fn scan_roots(f: &impl Fn(f64) -> f64, a: f64, b: f64, cells: usize) -> Vec<f64> {
    let h = (b - a) / cells as f64;
    let mut roots = Vec::new();
    let mut x0 = a;
    let mut f0 = f(x0);
    for i in 1..=cells {
        let x1 = if i == cells { b } else { a + i as f64 * h };
        let f1 = f(x1);
        if f0 == 0.0 {
            roots.push(x0);
        } else if f0 * f1 < 0.0 {
            roots.push(bisect(f, x0, x1, f0));
        }
        x0 = x1;
        f0 = f1;
    }
    if f0 == 0.0 {
        roots.push(x0);
    }
    roots
}

/// Fixed nodes: the product grid of the roots of the paired `x` eigenfunction
/// and of the unpaired `y` eigenfunction (or the transposed grid).
///
/// Ordered top to bottom, then left to right.
pub fn fixed_nodes(spec: &SuperpositionSpec) -> Result<Vec<[f64; 2]>> {
    let class = classify(spec)?;
    let mut out = Vec::with_capacity(class.fixed_count());
    for &y in class.fixed_y_roots.iter().rev() {
        for &x in &class.fixed_x_roots {
            out.push([x, y]);
        }
    }
    Ok(out)
}

/// Roots of the row equation with default options: the `y` of every moving
/// node for two equal `m`, or the `x` of every moving node for two equal `n`.
pub fn moving_node_y_equation(spec: &SuperpositionSpec, t: f64) -> Result<Vec<f64>> {
    moving_node_y_equation_with(spec, t, AnalyticOptions::default())
}

pub fn moving_node_y_equation_with(spec: &SuperpositionSpec, t: f64, opts: AnalyticOptions) -> Result<Vec<f64>> {
    Solver::new(spec, opts)?.row_roots(t)
}

/// Moving nodes at `t`, labeled consistently with [`census`].
pub fn solve_moving_nodes(spec: &SuperpositionSpec, t: f64) -> Result<Vec<NodeRecord>> {
    solve_moving_nodes_with(spec, t, AnalyticOptions::default())
}

pub fn solve_moving_nodes_with(spec: &SuperpositionSpec, t: f64, opts: AnalyticOptions) -> Result<Vec<NodeRecord>> {
    Ok(census_with(spec, t, opts, &DEFAULT_FRAME)?
        .into_iter()
        .filter(|r| r.kind == NodeKind::Moving)
        .collect())
}

/// Every node at `t`, fixed and moving, labeled in reading order.
pub fn census(spec: &SuperpositionSpec, t: f64) -> Result<Vec<NodeRecord>> {
    census_with(spec, t, AnalyticOptions::default(), &DEFAULT_FRAME)
}

pub(crate) fn census_with(
    spec: &SuperpositionSpec,
    t: f64,
    opts: AnalyticOptions,
    frame: &Region,
) -> Result<Vec<NodeRecord>> {
    let solver = Solver::new(spec, opts)?;
    let mut pts: Vec<([f64; 2], NodeKind)> =
        fixed_nodes(spec)?.into_iter().map(|p| (p, NodeKind::Fixed)).collect();
    for row in solver.rows(t)? {
        pts.extend(row.nodes.into_iter().map(|p| (p, NodeKind::Moving)));
    }
    let positions: Vec<[f64; 2]> = pts.iter().map(|p| p.0).collect();
    let labels = reading_order_labels(&positions, frame);
    let mut out: Vec<NodeRecord> = pts
        .iter()
        .zip(labels)
        .map(|(&(position, kind), id)| NodeRecord {
            id,
            kind,
            position,
            t,
            status: if super::norm(position) > DEFAULT_ESCAPE_RADIUS {
                NodeStatus::Escaped
            } else {
                NodeStatus::Active
            },
        })
        .collect();
    out.sort_by_key(|r| r.id);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use crate::wavefield::eval_field;
    use approx::assert_abs_diff_eq;

    #[test]
    fn typical_census_at_a_tenth() {
        let spec = presets::typical();
        let nodes = census(&spec, 0.1).unwrap();
        assert_eq!(nodes.len(), 31);
        assert_eq!(nodes.iter().filter(|n| n.kind == NodeKind::Fixed).count(), 15);
        for n in &nodes {
            let psi = eval_field(&spec, n.position[0], n.position[1], 0.1).psi.norm();
            assert!(psi < 1e-8, "node {} |psi| = {psi}", n.id);
        }
        let n20 = nodes[19].position;
        assert_abs_diff_eq!(n20[0], 1.2544, epsilon = 5e-4);
        assert_abs_diff_eq!(n20[1], -1.1264, epsilon = 5e-4);
        let n14 = nodes[13].position;
        assert_abs_diff_eq!(n14[0], 1.50857, epsilon = 5e-4);
        assert_abs_diff_eq!(n14[1], 0.25309, epsilon = 5e-4);
        assert_eq!(nodes[20].kind, NodeKind::Moving);
        assert!(nodes[20].position[0] < -16.0);
        assert_eq!(nodes[0].kind, NodeKind::Fixed);
        assert_eq!(nodes[3].kind, NodeKind::Moving);
    }

    #[test]
    fn row_roots_count() {
        let ys = moving_node_y_equation(&presets::typical(), 0.1).unwrap();
        assert_eq!(ys.len(), 4);
        assert_abs_diff_eq!(ys[3], 1.6656, epsilon = 5e-4);
    }

    #[test]
    fn fixed_grid_is_time_independent() {
        let spec = presets::typical();
        let f = fixed_nodes(&spec).unwrap();
        assert_eq!(f.len(), 15);
        for t in [0.0, 0.3, 2.5] {
            for p in &f {
                assert!(eval_field(&spec, p[0], p[1], t).psi.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_at_time_zero_for_real_coefficients() {
        assert!(matches!(
            moving_node_y_equation(&presets::typical(), 0.0),
            Err(Error::DegenerateTime { .. })
        ));
    }

    #[test]
    fn transposed_state_gives_transposed_nodes() {
        let spec = presets::typical();
        let a = census(&spec, 0.4).unwrap();
        let b = census(&spec.transposed(), 0.4).unwrap();
        assert_eq!(a.len(), b.len());
        for n in &a {
            let swapped = [n.position[1], n.position[0]];
            assert!(b.iter().any(|m| super::super::dist(m.position, swapped) < 1e-9));
        }
    }

    #[test]
    fn rejects_other_structures() {
        let s = SuperpositionSpec::from_real(&[(0, 3), (1, 1), (2, 0)], &[1.0; 3], 1.0, 1.0).unwrap();
        assert!(matches!(census(&s, 0.2), Err(Error::Argument(_))));
    }
}
