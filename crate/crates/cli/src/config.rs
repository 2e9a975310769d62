//! Experiment configuration: a TOML file with flat top-level keys and
//! nested `grid`, `shape`, and `evolution` sections. Unknown keys are
//! rejected so typos fail loudly.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use morphca::ca::SimParams;
use morphca::evolution::{EvoParams, Treatment};
use morphca::shapes::{self, ShapeKind, TargetShape};

/// One experiment: repeated runs of a single treatment on one target.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub treatment: Treatment,
    /// Number of repeated runs; run r is seeded with base_seed + r.
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Worker threads for evaluation; 0 means one per core. The run outputs
    /// do not depend on this.
    #[serde(default)]
    pub workers: usize,
    pub grid: SimParams,
    pub shape: ShapeConfig,
    pub evolution: EvolutionConfig,
}

fn default_runs() -> usize {
    1
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Target shape selection: a built-in generator name with an optional size
/// parameter, or `kind = "pgm"` with a mask file path.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeConfig {
    pub kind: String,
    /// Generator size (side, radius, base, or scale); defaults per shape.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<usize>,
    /// Mask file for `kind = "pgm"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl ShapeConfig {
    pub fn build(&self, m: usize) -> Result<TargetShape> {
        if self.kind == "pgm" {
            let path = self
                .path
                .as_ref()
                .context("shape kind \"pgm\" needs a path")?;
            let shape = TargetShape::from_pgm_file(path)
                .with_context(|| format!("reading mask {}", path.display()))?;
            if shape.m() != m {
                bail!("mask {} is {}x{} but the grid side is {m}", path.display(), shape.m(), shape.m());
            }
            Ok(shape)
        } else {
            let kind: ShapeKind = self.kind.parse()?;
            Ok(shapes::make(kind, m, self.param)?)
        }
    }
}

/// Search parameters shared by all runs; the per-run seed is derived from
/// the experiment's base seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    pub population: usize,
    pub generations: usize,
    #[serde(default = "default_mutation_rate")]
    pub mutation_rate: f64,
    #[serde(default = "default_mutation_sigma")]
    pub mutation_sigma: f64,
}

fn default_mutation_rate() -> f64 {
    0.1
}

fn default_mutation_sigma() -> f64 {
    0.25
}

impl EvolutionConfig {
    pub fn evo_params(&self, rng_seed: u64) -> EvoParams {
        EvoParams {
            population: self.population,
            generations: self.generations,
            mutation_rate: self.mutation_rate,
            mutation_sigma: self.mutation_sigma,
            rng_seed,
        }
    }
}

/// Command line overrides applied on top of a loaded config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub treatment: Option<Treatment>,
    pub shape: Option<String>,
    pub param: Option<usize>,
    pub m: Option<usize>,
    pub steps: Option<usize>,
    pub pop: Option<usize>,
    pub gens: Option<usize>,
    pub runs: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: Self = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        Ok(config)
    }

    /// Applies command line overrides. Overriding the shape kind drops a
    /// configured size parameter, since sizes are not portable across kinds.
    pub fn with_overrides(mut self, o: &Overrides) -> Self {
        if let Some(t) = o.treatment {
            self.treatment = t;
        }
        if let Some(kind) = &o.shape {
            self.shape = ShapeConfig { kind: kind.clone(), param: None, path: None };
        }
        if let Some(p) = o.param {
            self.shape.param = Some(p);
        }
        if let Some(m) = o.m {
            self.grid.m = m;
        }
        if let Some(n) = o.steps {
            self.grid.n_steps = n;
        }
        if let Some(p) = o.pop {
            self.evolution.population = p;
        }
        if let Some(g) = o.gens {
            self.evolution.generations = g;
        }
        if let Some(r) = o.runs {
            self.runs = r;
        }
        if let Some(s) = o.seed {
            self.base_seed = s;
        }
        if let Some(out) = &o.out {
            self.out_dir = out.clone();
        }
        if let Some(w) = o.workers {
            self.workers = w;
        }
        self
    }

    /// Checks every section, including that the shape builds on this grid.
    pub fn validate(&self) -> Result<()> {
        if self.runs < 1 {
            bail!("runs must be at least 1");
        }
        self.grid.validate()?;
        self.evo_params(0).validate()?;
        self.shape.build(self.grid.m)?;
        Ok(())
    }

    pub fn sim_params(&self) -> SimParams {
        self.grid.clone()
    }

    pub fn target(&self) -> Result<TargetShape> {
        self.shape.build(self.grid.m)
    }

    pub fn evo_params(&self, rng_seed: u64) -> EvoParams {
        self.evolution.evo_params(rng_seed)
    }

    /// Seed of run `r`.
    pub fn run_seed(&self, run: usize) -> u64 {
        self.base_seed.wrapping_add(run as u64)
    }

    /// Seed of the r-th random-search baseline population, salted away from
    /// the run seeds so the two families never collide.
    pub fn random_baseline_seed(&self, run: usize) -> u64 {
        const SALT: u64 = 0x5241_4e44; // "RAND"
        self.base_seed.wrapping_add(SALT).wrapping_add(run as u64)
    }
}
