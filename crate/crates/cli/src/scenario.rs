use std::path::Path;

use anyhow::{bail, Context, Result};
use bohmlab_core::dynamics::InitialCondition;
use bohmlab_core::eigenbasis::{Mode, OscillatorParams};
use bohmlab_core::wavefield::{QuantumPotentialForm, Region, SuperpositionSpec};
use bohmlab_core::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub state: State,
    pub time: Time,
    #[serde(default = "default_region")]
    pub region: Region,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub nodes: NodesSection,
    #[serde(default)]
    pub xpoints: XPointsSection,
    #[serde(default)]
    pub traj: TrajSection,
    #[serde(default)]
    pub field: FieldSection,
    #[serde(default)]
    pub chaos: ChaosSection,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub initial_conditions: Vec<InitialCondition>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct State {
    pub modes: Vec<[u32; 2]>,
    pub re: Vec<f64>,
    #[serde(default)]
    pub im: Vec<f64>,
    pub omega1: f64,
    pub omega2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Time {
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub psi_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-12, psi_floor: 1e-13 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NodesSection {
    pub escape_radius: f64,
    pub collision_tol: f64,
    pub scan_resolution: usize,
}

impl Default for NodesSection {
    fn default() -> Self {
        Self { escape_radius: 12.0, collision_tol: 1e-3, scan_resolution: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct XPointsSection {
    pub t: Option<f64>,
    /// Empty means every node inside the region.
    pub node_ids: Vec<usize>,
    pub search_radius: f64,
    pub s_span: f64,
    pub eps: f64,
}

impl Default for XPointsSection {
    fn default() -> Self {
        Self { t: None, node_ids: Vec::new(), search_radius: 0.5, s_span: 5.0, eps: 1e-6 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajSection {
    /// Track the nodes over the time window and annotate loops around them.
    pub loops: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldSection {
    pub t: Option<f64>,
    pub nx: usize,
    pub ny: usize,
    pub potential_form: QuantumPotentialForm,
}

impl Default for FieldSection {
    fn default() -> Self {
        Self { t: None, nx: 201, ny: 201, potential_form: QuantumPotentialForm::Amplitude }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChaosSection {
    pub horizon: f64,
    pub threshold: f64,
    pub bootstrap_samples: usize,
    /// Extra initial conditions drawn uniformly in the region at `time.t0`.
    pub random_ics: usize,
}

impl Default for ChaosSection {
    fn default() -> Self {
        Self { horizon: 200.0, threshold: 0.05, bootstrap_samples: 1000, random_ics: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    /// Period checked for every initial condition.
    pub period: f64,
    pub periodicity_tol: f64,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self { period: std::f64::consts::TAU, periodicity_tol: 1e-4 }
    }
}

fn default_region() -> Region {
    Region::square(5.0)
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let sc: Scenario = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        sc.validate()?;
        Ok(sc)
    }

    fn validate(&self) -> Result<()> {
        let t = &self.time;
        if !(t.t0.is_finite() && t.t1.is_finite() && t.t1 > t.t0) {
            bail!("time window [{}, {}] is empty", t.t0, t.t1);
        }
        if !(t.dt > 0.0 && t.dt.is_finite()) {
            bail!("time.dt must be positive");
        }
        Region::new(self.region.x_min, self.region.x_max, self.region.y_min, self.region.y_max)?;
        self.spec()?;
        Ok(())
    }

    pub fn spec(&self) -> Result<SuperpositionSpec> {
        let s = &self.state;
        if s.re.len() != s.modes.len() || !(s.im.is_empty() || s.im.len() == s.modes.len()) {
            bail!("state: {} modes but {} real and {} imaginary parts", s.modes.len(), s.re.len(), s.im.len());
        }
        let modes = s.modes.iter().map(|&[m, n]| Mode::new(m, n)).collect::<Result<Vec<_>, _>>()?;
        let coefficients = s
            .re
            .iter()
            .enumerate()
            .map(|(i, &re)| Complex64::new(re, s.im.get(i).copied().unwrap_or(0.0)))
            .collect();
        Ok(SuperpositionSpec::new(modes, coefficients, OscillatorParams::new(s.omega1, s.omega2)?)?)
    }

    /// The scenario with seed and imaginary parts filled in, as echoed to the output directory.
    pub fn resolved(&self, seed: Option<u64>) -> Self {
        let mut r = self.clone();
        if let Some(s) = seed {
            r.seed = s;
        }
        if r.state.im.is_empty() {
            r.state.im = vec![0.0; r.state.re.len()];
        }
        r.xpoints.t.get_or_insert(r.time.t0);
        r.field.t.get_or_insert(r.time.t0);
        r
    }
}
