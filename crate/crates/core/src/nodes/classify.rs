use serde::Serialize;

use crate::eigenbasis::eigen_roots;
use crate::error::{Error, Result};
use crate::wavefield::SuperpositionSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum StructureTag {
    TwoEqualM,
    TwoEqualN,
    ThreeEqualM,
    ThreeEqualN,
    AllDistinctSmall,
    GeneralNumeric,
}

/// Structural class of a three-mode superposition and, when it has fixed
/// nodes, the coordinates whose product grid they form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureClass {
    pub tag: StructureTag,
    pub fixed_x_roots: Vec<f64>,
    pub fixed_y_roots: Vec<f64>,
}

impl StructureClass {
    pub fn fixed_count(&self) -> usize {
        self.fixed_x_roots.len() * self.fixed_y_roots.len()
    }
}

/// Indices of the two modes sharing a quantum number and of the odd one out.
/// `transposed` means the shared number is `n`; swap `x ↔ y` to reduce to the shared-`m` case.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct PairSplit {
    pub transposed: bool,
    pub pair: [usize; 2],
    pub odd: usize,
}

fn equal_pair(values: [u32; 3]) -> Option<PairSplit> {
    let [a, b, c] = values;
    let split = |pair: [usize; 2], odd| Some(PairSplit { transposed: false, pair, odd });
    match (a == b, b == c, a == c) {
        (true, true, _) => None,
        (true, false, _) => split([0, 1], 2),
        (false, true, _) => split([1, 2], 0),
        (false, false, true) => split([0, 2], 1),
        _ => None,
    }
}

pub(crate) fn pair_split(spec: &SuperpositionSpec) -> Option<PairSplit> {
    let modes = spec.modes();
    if modes.len() != 3 {
        return None;
    }
    let ms = [modes[0].m, modes[1].m, modes[2].m];
    let ns = [modes[0].n, modes[1].n, modes[2].n];
    equal_pair(ms).or_else(|| equal_pair(ns).map(|s| PairSplit { transposed: true, ..s }))
}

fn is_small_permutation(values: [u32; 3]) -> bool {
    let mut v = values;
    v.sort_unstable();
    v == [0, 1, 2]
}

fn distinct(values: [u32; 3]) -> bool {
    values[0] != values[1] && values[1] != values[2] && values[0] != values[2]
}

/// Classifies a three-mode superposition by its repeated quantum numbers.
pub fn classify(spec: &SuperpositionSpec) -> Result<StructureClass> {
    let modes = spec.modes();
    if modes.len() != 3 {
        return Err(Error::Argument(format!(
            "classification needs exactly 3 modes, got {}",
            modes.len()
        )));
    }
    let ms = [modes[0].m, modes[1].m, modes[2].m];
    let ns = [modes[0].n, modes[1].n, modes[2].n];
    let p = spec.params();
    let none = |tag| StructureClass { tag, fixed_x_roots: Vec::new(), fixed_y_roots: Vec::new() };

    if ms[0] == ms[1] && ms[1] == ms[2] {
        return Ok(none(StructureTag::ThreeEqualM));
    }
    if ns[0] == ns[1] && ns[1] == ns[2] {
        return Ok(none(StructureTag::ThreeEqualN));
    }
    if let Some(split) = pair_split(spec) {
        let shared = if split.transposed { ns[split.pair[0]] } else { ms[split.pair[0]] };
        let odd = modes[split.odd];
        return Ok(if split.transposed {
            StructureClass {
                tag: StructureTag::TwoEqualN,
                fixed_x_roots: eigen_roots(odd.m, p.omega1),
                fixed_y_roots: eigen_roots(shared, p.omega2),
            }
        } else {
            StructureClass {
                tag: StructureTag::TwoEqualM,
                fixed_x_roots: eigen_roots(shared, p.omega1),
                fixed_y_roots: eigen_roots(odd.n, p.omega2),
            }
        });
    }
    if (is_small_permutation(ms) && distinct(ns)) || (is_small_permutation(ns) && distinct(ms)) {
        return Ok(none(StructureTag::AllDistinctSmall));
    }
    Ok(none(StructureTag::GeneralNumeric))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn spec(modes: &[(u32, u32)]) -> SuperpositionSpec {
        SuperpositionSpec::from_real(modes, &[1.0, 1.0, 1.0], 1.0, 0.7).unwrap()
    }

    #[test]
    fn typical_example_has_fifteen_fixed_nodes() {
        let c = classify(&presets::typical()).unwrap();
        assert_eq!(c.tag, StructureTag::TwoEqualM);
        assert_eq!(c.fixed_x_roots.len(), 3);
        assert_eq!(c.fixed_y_roots.len(), 5);
        assert_eq!(c.fixed_count(), 15);
        assert!((c.fixed_x_roots[2] - 1.224745).abs() < 1e-6);
        assert!((c.fixed_y_roots[4] - 2.402413).abs() < 1e-5);
        assert!((c.fixed_y_roots[3] - 1.139934).abs() < 1e-5);
    }

    #[test]
    fn other_tags() {
        assert_eq!(classify(&spec(&[(2, 0), (2, 1), (2, 3)])).unwrap().tag, StructureTag::ThreeEqualM);
        assert_eq!(classify(&spec(&[(0, 4), (1, 4), (3, 4)])).unwrap().tag, StructureTag::ThreeEqualN);
        assert_eq!(classify(&spec(&[(0, 3), (1, 1), (2, 0)])).unwrap().tag, StructureTag::AllDistinctSmall);
        assert_eq!(classify(&spec(&[(0, 3), (2, 1), (5, 0)])).unwrap().tag, StructureTag::GeneralNumeric);
        let c = classify(&spec(&[(1, 2), (3, 2), (4, 5)])).unwrap();
        assert_eq!(c.tag, StructureTag::TwoEqualN);
        assert_eq!(c.fixed_count(), 4 * 2);
    }

    #[test]
    fn no_fixed_nodes_when_odd_degree_is_zero() {
        let c = classify(&presets::equal_weight()).unwrap();
        assert_eq!(c.tag, StructureTag::TwoEqualM);
        assert_eq!(c.fixed_count(), 0);
    }

    #[test]
    fn rejects_wrong_mode_count() {
        let s = SuperpositionSpec::from_real(&[(0, 0), (1, 1)], &[1.0, 1.0], 1.0, 1.0).unwrap();
        assert!(classify(&s).is_err());
    }
}
