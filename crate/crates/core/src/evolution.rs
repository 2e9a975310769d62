//! Age-layered multi-objective evolution with deterministic replay.
//!
//! Selection is Pareto dominance over (age, objectives), all minimized, so
//! young random lineages can coexist with refined old ones. Each generation
//! doubles the population with mutated children plus one fresh random
//! genome, then culls back by repeated non-dominated sorting. All randomness
//! flows through one ChaCha8 stream held by the engine; evaluations are pure
//! and merely parallelized, so a run is fully determined by its parameters
//! no matter how many worker threads execute it.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ca::{develop, Genome, SimParams};
use crate::error::{Error, Result};
use crate::objectives::{empowerment, loss};
use crate::shapes::TargetShape;

/// The four selection treatments: which objectives accompany age.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Treatment {
    /// Age and full-window loss.
    BiError,
    /// Age, full-window loss, and empowerment.
    TriErrorEmpowerment,
    /// Age and the loss split into early and late windows.
    TriError,
    /// Age and empowerment only; loss is still logged.
    BiEmpowerment,
}

impl Treatment {
    pub const ALL: [Treatment; 4] =
        [Self::BiError, Self::TriErrorEmpowerment, Self::TriError, Self::BiEmpowerment];

    pub fn name(self) -> &'static str {
        match self {
            Self::BiError => "bi_error",
            Self::TriErrorEmpowerment => "tri_error_empowerment",
            Self::TriError => "tri_error",
            Self::BiEmpowerment => "bi_empowerment",
        }
    }

    /// Number of objectives next to age.
    pub fn objective_count(self) -> usize {
        match self {
            Self::BiError | Self::BiEmpowerment => 1,
            Self::TriErrorEmpowerment | Self::TriError => 2,
        }
    }
}

impl fmt::Display for Treatment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Treatment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown treatment {s:?}")))
    }
}

/// Objective vector and diagnostics from one genome evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Minimized objective values in treatment order, age excluded.
    pub objectives: Vec<f64>,
    /// Full-window loss, recorded for every treatment.
    pub full_loss: f64,
    /// Empowerment in bits, positive; objectives store its negation.
    pub empowerment_bits: f64,
}

/// Scores a genome. Implementations must be pure: the same genome always
/// yields the same evaluation, which is what makes runs worker-independent.
pub trait Evaluator: Sync {
    fn evaluate(&self, genome: &Genome) -> Result<Evaluation>;
}

/// Standard evaluator: develop the genome and score it per the treatment.
pub struct NcaEvaluator {
    sim: SimParams,
    target: TargetShape,
    treatment: Treatment,
}

impl NcaEvaluator {
    pub fn new(sim: SimParams, target: TargetShape, treatment: Treatment) -> Result<Self> {
        sim.validate()?;
        if target.m() != sim.m {
            return Err(Error::Config(format!(
                "target is {}x{} but the grid side is {}",
                target.m(),
                target.m(),
                sim.m
            )));
        }
        Ok(Self { sim, target, treatment })
    }

    pub fn treatment(&self) -> Treatment {
        self.treatment
    }
}

impl Evaluator for NcaEvaluator {
    fn evaluate(&self, genome: &Genome) -> Result<Evaluation> {
        let trace = develop(genome, &self.sim)?;
        let n = self.sim.n_steps;
        let full_loss = loss(&trace, &self.target, 0, n)?;
        let stored_empowerment = empowerment(&trace)?;
        let objectives = match self.treatment {
            Treatment::BiError => vec![full_loss],
            Treatment::TriErrorEmpowerment => vec![full_loss, stored_empowerment],
            Treatment::TriError => {
                vec![loss(&trace, &self.target, 0, n / 2)?, loss(&trace, &self.target, n / 2, n)?]
            }
            Treatment::BiEmpowerment => vec![stored_empowerment],
        };
        // stored_empowerment <= 0; negate back to bits without minting -0.0.
        let empowerment_bits =
            if stored_empowerment == 0.0 { 0.0 } else { -stored_empowerment };
        Ok(Evaluation { objectives, full_loss, empowerment_bits })
    }
}

/// One member of the population.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub genome: Genome,
    /// Generations since the lineage was seeded; inherited by children.
    pub age: u64,
    pub eval: Evaluation,
}

/// Pareto dominance over (age, objectives), all minimized: `a` is nowhere
/// worse and somewhere strictly better. Panics if the two objective vectors
/// differ in length, which means mixed treatments in one population.
pub fn dominates(a: &Individual, b: &Individual) -> bool {
    assert_eq!(
        a.eval.objectives.len(),
        b.eval.objectives.len(),
        "individuals scored under different treatments"
    );
    let mut strictly_better = false;
    let pairs = std::iter::once((a.age as f64, b.age as f64)).chain(
        a.eval.objectives.iter().zip(&b.eval.objectives).map(|(&x, &y)| (x, y)),
    );
    for (x, y) in pairs {
        if x > y {
            return false;
        }
        if x < y {
            strictly_better = true;
        }
    }
    strictly_better
}

/// Indices of successive non-dominated layers, ascending within each layer.
/// Every individual appears in exactly one layer.
pub fn non_dominated_layers(pop: &[Individual]) -> Vec<Vec<usize>> {
    let n = pop.len();
    let mut dominator_count = vec![0usize; n];
    let mut dominated: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if dominates(&pop[i], &pop[j]) {
                dominated[i].push(j);
                dominator_count[j] += 1;
            } else if dominates(&pop[j], &pop[i]) {
                dominated[j].push(i);
                dominator_count[i] += 1;
            }
        }
    }
    let mut layers = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominator_count[i] == 0).collect();
    while !current.is_empty() {
        current.sort_unstable();
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated[i] {
                dominator_count[j] -= 1;
                if dominator_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        layers.push(std::mem::replace(&mut current, next));
    }
    layers
}

/// Search parameters for one evolutionary run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvoParams {
    /// Population size P; each generation evaluates P new candidates.
    pub population: usize,
    pub generations: usize,
    /// Per-weight probability of a Gaussian perturbation.
    pub mutation_rate: f64,
    /// Standard deviation of each perturbation.
    pub mutation_sigma: f64,
    /// Seed of the engine's ChaCha8 stream.
    pub rng_seed: u64,
}

impl Default for EvoParams {
    fn default() -> Self {
        Self {
            population: 400,
            generations: 2000,
            mutation_rate: 0.1,
            mutation_sigma: 0.25,
            rng_seed: 0,
        }
    }
}

impl EvoParams {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::Config(format!(
                "population must be at least 2, got {}",
                self.population
            )));
        }
        if self.generations < 1 {
            return Err(Error::Config("generations must be at least 1".into()));
        }
        if !(self.mutation_rate > 0.0 && self.mutation_rate <= 1.0) {
            return Err(Error::Config(format!(
                "mutation rate must lie in (0, 1], got {}",
                self.mutation_rate
            )));
        }
        if !(self.mutation_sigma > 0.0 && self.mutation_sigma.is_finite()) {
            return Err(Error::Config(format!(
                "mutation sigma must be positive, got {}",
                self.mutation_sigma
            )));
        }
        Ok(())
    }
}

/// Gaussian point mutation: each weight is perturbed with probability `rate`
/// by a draw from N(0, sigma^2). Resamples until the child differs from the
/// parent. Requires rate in (0, 1] and positive sigma.
pub fn mutate(parent: &Genome, rate: f64, sigma: f64, rng: &mut impl Rng) -> Genome {
    let normal = Normal::new(0.0, sigma).expect("sigma is positive and finite");
    loop {
        let mut weights = parent.weights().to_vec();
        let mut changed = false;
        for w in weights.iter_mut() {
            if rng.random::<f64>() < rate {
                let perturbed = *w + normal.sample(rng);
                changed |= perturbed != *w;
                *w = perturbed;
            }
        }
        if changed {
            return Genome::new(weights).expect("perturbed weights stay finite");
        }
    }
}

fn cull(candidates: Vec<Individual>, target: usize, rng: &mut impl Rng) -> Vec<Individual> {
    debug_assert!(candidates.len() >= target);
    let layers = non_dominated_layers(&candidates);
    let mut selected = Vec::with_capacity(target);
    for mut layer in layers {
        let remaining = target - selected.len();
        if layer.len() > remaining {
            // Random boundary tie-break, the run's only use of culling rng.
            layer.shuffle(rng);
            layer.truncate(remaining);
        }
        selected.extend(layer);
        if selected.len() == target {
            break;
        }
    }
    let mut keep = vec![false; candidates.len()];
    for &i in &selected {
        keep[i] = true;
    }
    candidates
        .into_iter()
        .zip(keep)
        .filter_map(|(ind, keep)| keep.then_some(ind))
        .collect()
}

/// Advances the population one generation: ages the P survivors, adds P - 1
/// mutated children (inheriting their parent's age) and one fresh random
/// age-0 genome, evaluates only the new candidates in parallel, and culls
/// back to P by non-dominated layers with a random boundary tie-break.
/// An evaluator failure aborts the generation with its diagnostic.
pub fn generation_step<E: Evaluator + ?Sized>(
    mut pop: Vec<Individual>,
    params: &EvoParams,
    evaluator: &E,
    rng: &mut impl Rng,
) -> Result<Vec<Individual>> {
    let p = params.population;
    if pop.len() != p {
        return Err(Error::Data(format!("expected population {p}, got {}", pop.len())));
    }
    for ind in &mut pop {
        ind.age += 1;
    }
    let mut offspring: Vec<(Genome, u64)> = Vec::with_capacity(p);
    for _ in 0..p - 1 {
        let parent = &pop[rng.random_range(0..p)];
        let child = mutate(&parent.genome, params.mutation_rate, params.mutation_sigma, rng);
        offspring.push((child, parent.age));
    }
    offspring.push((Genome::random(rng), 0));

    let evals: Vec<Result<Evaluation>> =
        offspring.par_iter().map(|(genome, _)| evaluator.evaluate(genome)).collect();
    for ((genome, age), eval) in offspring.into_iter().zip(evals) {
        pop.push(Individual { genome, age, eval: eval? });
    }
    Ok(cull(pop, p, rng))
}

/// The population member with the lowest full-window loss, first on ties.
pub fn champion_by_loss(pop: &[Individual]) -> Result<&Individual> {
    let mut best: Option<&Individual> = None;
    for ind in pop {
        if best.is_none_or(|b| ind.eval.full_loss < b.eval.full_loss) {
            best = Some(ind);
        }
    }
    best.ok_or_else(|| Error::Data("empty population has no champion".into()))
}

/// Per-generation population summary. Best values track the champion by
/// full-window loss; means are over the whole population.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLogRow {
    pub generation: usize,
    pub best_loss: f64,
    pub best_empowerment_bits: f64,
    pub mean_loss: f64,
    pub mean_empowerment_bits: f64,
}

/// Column order of the run log CSV.
pub const RUN_LOG_HEADER: &str =
    "generation,best_loss,best_empowerment_bits,mean_loss,mean_empowerment_bits";

/// One row per generation, 1 through G.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunLog {
    pub rows: Vec<RunLogRow>,
}

impl RunLog {
    /// CSV rendering; floats use the shortest decimal that round-trips, so
    /// parsing the file back recovers them exactly.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(RUN_LOG_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.generation, r.best_loss, r.best_empowerment_bits, r.mean_loss, r.mean_empowerment_bits
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Data("empty run log".into()))?;
        if header != RUN_LOG_HEADER {
            return Err(Error::Data(format!("unexpected run log header {header:?}")));
        }
        let mut rows = Vec::new();
        for (idx, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(Error::Data(format!(
                    "run log line {} has {} fields, expected 5",
                    idx + 2,
                    fields.len()
                )));
            }
            let bad = |what: &str| Error::Data(format!("run log line {}: bad {what}", idx + 2));
            rows.push(RunLogRow {
                generation: fields[0].parse().map_err(|_| bad("generation"))?,
                best_loss: fields[1].parse().map_err(|_| bad("best_loss"))?,
                best_empowerment_bits: fields[2].parse().map_err(|_| bad("best_empowerment_bits"))?,
                mean_loss: fields[3].parse().map_err(|_| bad("mean_loss"))?,
                mean_empowerment_bits: fields[4]
                    .parse()
                    .map_err(|_| bad("mean_empowerment_bits"))?,
            });
        }
        Ok(Self { rows })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

fn summarize(generation: usize, pop: &[Individual]) -> Result<RunLogRow> {
    let champion = champion_by_loss(pop)?;
    let n = pop.len() as f64;
    Ok(RunLogRow {
        generation,
        best_loss: champion.eval.full_loss,
        best_empowerment_bits: champion.eval.empowerment_bits,
        mean_loss: pop.iter().map(|i| i.eval.full_loss).sum::<f64>() / n,
        mean_empowerment_bits: pop.iter().map(|i| i.eval.empowerment_bits).sum::<f64>() / n,
    })
}

/// Evaluated random population, as at generation zero of a run.
pub fn random_population<E: Evaluator + ?Sized>(
    size: usize,
    seed: u64,
    evaluator: &E,
) -> Result<Vec<Individual>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    init_population(size, &mut rng, evaluator)
}

fn init_population<E: Evaluator + ?Sized>(
    size: usize,
    rng: &mut impl Rng,
    evaluator: &E,
) -> Result<Vec<Individual>> {
    let genomes: Vec<Genome> = (0..size).map(|_| Genome::random(rng)).collect();
    let evals: Vec<Result<Evaluation>> =
        genomes.par_iter().map(|g| evaluator.evaluate(g)).collect();
    let mut pop = Vec::with_capacity(size);
    for (genome, eval) in genomes.into_iter().zip(evals) {
        pop.push(Individual { genome, age: 0, eval: eval? });
    }
    Ok(pop)
}

/// Runs a full evolution: a random age-0 population followed by
/// `generations` steps, logging one row after each. Deterministic in the
/// parameters; worker threads only parallelize pure evaluations.
pub fn evolve<E: Evaluator + ?Sized>(
    params: &EvoParams,
    evaluator: &E,
) -> Result<(Vec<Individual>, RunLog)> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let mut pop = init_population(params.population, &mut rng, evaluator)?;
    let mut rows = Vec::with_capacity(params.generations);
    for generation in 1..=params.generations {
        pop = generation_step(pop, params, evaluator, &mut rng)?;
        rows.push(summarize(generation, &pop)?);
    }
    Ok((pop, RunLog { rows }))
}

/// On-disk champion record; together with the experiment config it replays
/// to the exact logged objective values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChampionFile {
    pub m: usize,
    pub n_steps: usize,
    pub weights: Vec<f64>,
    pub treatment: Treatment,
    pub seed: u64,
}

impl ChampionFile {
    pub fn from_parts(sim: &SimParams, treatment: Treatment, seed: u64, genome: &Genome) -> Self {
        Self {
            m: sim.m,
            n_steps: sim.n_steps,
            weights: genome.weights().to_vec(),
            treatment,
            seed,
        }
    }

    /// Validates and returns the stored genome.
    pub fn genome(&self) -> Result<Genome> {
        Genome::new(self.weights.clone())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}
