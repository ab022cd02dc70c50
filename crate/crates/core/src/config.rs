//! Run configuration for the command-line tool.
//!
//! A TOML file with the keys below; every key except `model` has a default
//! and unknown keys are rejected.
//!
//! ```toml
//! model = "haldane"        # or "kane_mele"
//! t = 1.0
//! t_prime = 0.1
//! lambda_v = 0.0
//! lambda_r = 0.0           # kane_mele only
//! disorder_w = 0.0
//! chirality = "plus"       # haldane only
//! seed = 0
//! size = 20                # L of the L×L box
//! e_f = 0.0
//! delta = 0.5
//! gap_threshold = 0.01
//! grid_n = 24              # k-space grid
//! lcm_side = 8             # side of the local Chern marker square
//! connes_radius = 256
//! connes_triples = [[[0, 0], [1, 0], [0, 1]]]
//! out = "out"
//! threads = 4              # optional cap on worker threads
//!
//! [sweep]                  # sweep subcommand only
//! parameter = "disorder_w" # or "lambda_v", "lambda_r"
//! values = [0.0, 0.1, 0.2]
//! realizations = 5
//! audit_fraction = 0.2
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::{SweepConfig, SweptParameter};
use crate::lattice::Site;
use crate::model::{Chirality, HaldaneParams, KaneMeleParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Haldane,
    KaneMele,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: SweptParameter,
    pub values: Vec<f64>,
    #[serde(default = "one")]
    pub realizations: usize,
    #[serde(default)]
    pub audit_fraction: f64,
}

fn one() -> usize {
    1
}
fn default_t() -> f64 {
    1.0
}
fn default_t_prime() -> f64 {
    0.1
}
fn default_chirality() -> Chirality {
    Chirality::Plus
}
fn default_size() -> usize {
    20
}
fn default_delta() -> f64 {
    crate::ncindex::DEFAULT_DELTA
}
fn default_gap_threshold() -> f64 {
    10.0 * crate::ncindex::WINDOW_EDGE_TOL
}
fn default_grid_n() -> usize {
    24
}
fn default_lcm_side() -> usize {
    8
}
fn default_connes_radius() -> u32 {
    256
}
fn default_triples() -> Vec<[[i64; 2]; 3]> {
    vec![[[0, 0], [1, 0], [0, 1]]]
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelKind,
    #[serde(default = "default_t")]
    pub t: f64,
    #[serde(default = "default_t_prime")]
    pub t_prime: f64,
    #[serde(default)]
    pub lambda_v: f64,
    #[serde(default)]
    pub lambda_r: f64,
    #[serde(default)]
    pub disorder_w: f64,
    #[serde(default = "default_chirality")]
    pub chirality: Chirality,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_size")]
    pub size: usize,
    #[serde(default)]
    pub e_f: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_gap_threshold")]
    pub gap_threshold: f64,
    #[serde(default = "default_grid_n")]
    pub grid_n: usize,
    #[serde(default = "default_lcm_side")]
    pub lcm_side: usize,
    #[serde(default = "default_connes_radius")]
    pub connes_radius: u32,
    #[serde(default = "default_triples")]
    pub connes_triples: Vec<[[i64; 2]; 3]>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
}

/// Command-line values that replace the file's.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub size: Option<usize>,
    pub delta: Option<f64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl RunConfig {
    /// Defaults for `model` with no file.
    pub fn for_model(model: ModelKind) -> Self {
        Self::from_toml(&format!("model = \"{}\"", model.key())).expect("defaults parse")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn apply(mut self, o: &Overrides) -> Self {
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.size {
            self.size = v;
        }
        if let Some(v) = o.delta {
            self.delta = v;
        }
        if let Some(v) = &o.out {
            self.out = v.clone();
        }
        if let Some(v) = o.threads {
            self.threads = Some(v);
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        for (name, v) in [
            ("t", self.t),
            ("t_prime", self.t_prime),
            ("lambda_v", self.lambda_v),
            ("lambda_r", self.lambda_r),
            ("e_f", self.e_f),
        ] {
            if !v.is_finite() {
                return fail(format!("{name} must be finite"));
            }
        }
        if !(self.disorder_w >= 0.0 && self.disorder_w.is_finite()) {
            return fail("disorder_w must be finite and ≥ 0".into());
        }
        if self.model == ModelKind::Haldane && self.lambda_r != 0.0 {
            return fail("lambda_r applies to kane_mele only".into());
        }
        if self.size < 4 {
            return fail(format!("size must be ≥ 4, got {}", self.size));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return fail(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if !(self.gap_threshold >= 0.0) {
            return fail("gap_threshold must be ≥ 0".into());
        }
        if self.grid_n < 6 {
            return fail(format!("grid_n must be ≥ 6, got {}", self.grid_n));
        }
        if self.lcm_side == 0 {
            return fail("lcm_side must be ≥ 1".into());
        }
        if self.threads == Some(0) {
            return fail("threads must be ≥ 1".into());
        }
        if let Some(s) = &self.sweep {
            self.sweep_config_for(s).validate()?;
        }
        Ok(())
    }

    pub fn haldane(&self) -> HaldaneParams {
        HaldaneParams { t: self.t, t_prime: self.t_prime, lambda_v: self.lambda_v }
    }

    pub fn kane_mele(&self) -> KaneMeleParams {
        KaneMeleParams {
            haldane: self.haldane(),
            lambda_r: self.lambda_r,
            disorder_w: self.disorder_w,
            seed: self.seed,
        }
    }

    pub fn triples(&self) -> Vec<(Site, Site, Site)> {
        let s = |p: [i64; 2]| Site(p[0], p[1]);
        self.connes_triples.iter().map(|[u, v, w]| (s(*u), s(*v), s(*w))).collect()
    }

    fn sweep_config_for(&self, s: &SweepSection) -> SweepConfig {
        SweepConfig {
            model: self.kane_mele(),
            parameter: s.parameter,
            values: s.values.clone(),
            realizations: s.realizations,
            base_seed: self.seed,
            size: self.size,
            e_f: self.e_f,
            delta: self.delta,
            gap_threshold: self.gap_threshold,
            audit_fraction: s.audit_fraction,
        }
    }

    pub fn sweep_config(&self) -> Result<SweepConfig> {
        if self.model != ModelKind::KaneMele {
            return Err(Error::Config("sweeps run on model = \"kane_mele\"".into()));
        }
        let s = self.sweep.as_ref().ok_or_else(|| Error::Config("missing [sweep] section".into()))?;
        Ok(self.sweep_config_for(s))
    }
}

impl ModelKind {
    pub fn key(self) -> &'static str {
        match self {
            ModelKind::Haldane => "haldane",
            ModelKind::KaneMele => "kane_mele",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_round_trip() {
        let c = RunConfig::for_model(ModelKind::Haldane);
        assert_eq!((c.t, c.t_prime, c.size, c.delta), (1.0, 0.1, 20, 0.5));
        c.validate().unwrap();
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        assert!(matches!(
            RunConfig::from_toml("model = \"haldane\"\ntprime = 0.1"),
            Err(Error::Config(_))
        ));
        assert!(RunConfig::from_toml("model = \"graphene\"").is_err());
        assert!(RunConfig::from_toml("t = 1.0").is_err());
        let c = RunConfig::from_toml("model = \"haldane\"\ndelta = 1.5").unwrap();
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let c = RunConfig::from_toml("model = \"haldane\"\nlambda_r = 0.1").unwrap();
        assert!(c.validate().is_err());
        let c = RunConfig::from_toml(
            "model = \"kane_mele\"\n[sweep]\nparameter = \"lambda_v\"\nvalues = [0.3, 0.1, 0.2]",
        )
        .unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn overrides_win() {
        let c = RunConfig::from_toml("model = \"kane_mele\"\nseed = 3\nsize = 12").unwrap();
        let o = Overrides { seed: Some(9), size: Some(16), ..Default::default() };
        let c = c.apply(&o);
        assert_eq!((c.seed, c.size, c.delta), (9, 16, 0.5));
    }

    #[test]
    fn sweep_section() {
        let c = RunConfig::from_toml(
            "model = \"kane_mele\"\nseed = 4\nlambda_r = 0.05\n[sweep]\nparameter = \"disorder_w\"\nvalues = [0.0, 0.1]\nrealizations = 2",
        )
        .unwrap();
        c.validate().unwrap();
        let s = c.sweep_config().unwrap();
        assert_eq!((s.base_seed, s.realizations, s.model.lambda_r), (4, 2, 0.05));
        assert!(RunConfig::for_model(ModelKind::KaneMele).sweep_config().is_err());
    }
}
