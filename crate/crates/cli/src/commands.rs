//! The experiment commands behind the command line: evolve, replay, curve
//! and scatter aggregation, and target rendering.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use morphca::ca::{develop, Genome, SimParams};
use morphca::evolution::{
    champion_by_loss, evolve, random_population, ChampionFile, NcaEvaluator, RunLog, Treatment,
};
use morphca::objectives::{empowerment, local_empowerment, loss};
use morphca::shapes::{self, ShapeKind, TargetShape};

use crate::config::ExperimentConfig;
use crate::stats::{ci95, mean};

/// Where one finished run left its outputs, plus its headline scores.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub treatment: Treatment,
    pub run: usize,
    pub dir: PathBuf,
    pub best_loss: f64,
    pub best_empowerment_bits: f64,
}

fn worker_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .context("building evaluation thread pool")
}

/// Runs every configured repetition, writing per-run artifacts under
/// `out_dir/<treatment>/run_<r>/` and the target mask at the output root.
pub fn run_evolve(config: &ExperimentConfig) -> Result<Vec<RunArtifacts>> {
    config.validate()?;
    let target = config.target()?;
    fs::create_dir_all(&config.out_dir)
        .with_context(|| format!("creating {}", config.out_dir.display()))?;
    target.write_pgm(&config.out_dir.join("target.pgm"))?;
    let pool = worker_pool(config.workers)?;
    let mut artifacts = Vec::with_capacity(config.runs);
    for run in 0..config.runs {
        let art = pool.install(|| run_one(config, &target, run))?;
        println!(
            "{} run {run}: loss={} empowerment_bits={}",
            art.treatment, art.best_loss, art.best_empowerment_bits
        );
        artifacts.push(art);
    }
    Ok(artifacts)
}

fn run_one(config: &ExperimentConfig, target: &TargetShape, run: usize) -> Result<RunArtifacts> {
    let sim = config.sim_params();
    let seed = config.run_seed(run);
    let evaluator = NcaEvaluator::new(sim.clone(), target.clone(), config.treatment)?;
    let (population, log) = evolve(&config.evo_params(seed), &evaluator)?;
    let champion = champion_by_loss(&population)?;

    let dir = config.out_dir.join(config.treatment.name()).join(format!("run_{run}"));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    log.write_csv(&dir.join("runlog.csv"))?;
    ChampionFile::from_parts(&sim, config.treatment, seed, &champion.genome)
        .save(&dir.join("champion.json"))?;
    write_trace_artifacts(&dir, &champion.genome, &sim)?;
    Ok(RunArtifacts {
        treatment: config.treatment,
        run,
        dir,
        best_loss: champion.eval.full_loss,
        best_empowerment_bits: champion.eval.empowerment_bits,
    })
}

/// Develops a genome and writes its frame images and empowerment heat map.
fn write_trace_artifacts(dir: &Path, genome: &Genome, sim: &SimParams) -> Result<()> {
    let trace = develop(genome, sim)?;
    let frames = dir.join("frames");
    fs::create_dir_all(&frames)?;
    for n in 0..=trace.n_steps() {
        let state = trace.state(n);
        fs::write(frames.join(format!("frame_{n:03}_alive.pgm")), state.alive_pgm())?;
        fs::write(frames.join(format!("frame_{n:03}_signal.pgm")), state.signal_pgm())?;
    }
    local_empowerment(&trace)?.write_csv(&dir.join("champion.heat.csv"))?;
    Ok(())
}

/// Replayed champion scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplaySummary {
    pub loss: f64,
    pub empowerment_bits: f64,
}

/// Recomputes a saved champion's full-window loss and empowerment on the
/// configured target; the values match the log written when it was saved.
pub fn run_replay(config: &ExperimentConfig, champion_path: &Path) -> Result<ReplaySummary> {
    let file = ChampionFile::load(champion_path)
        .with_context(|| format!("loading {}", champion_path.display()))?;
    let sim = config.sim_params();
    if file.m != sim.m || file.n_steps != sim.n_steps {
        bail!(
            "champion was grown on a {}x{} grid over {} steps, config says {}x{} over {}",
            file.m,
            file.m,
            file.n_steps,
            sim.m,
            sim.m,
            sim.n_steps
        );
    }
    let genome = file.genome()?;
    let target = config.target()?;
    let trace = develop(&genome, &sim)?;
    let full_loss = loss(&trace, &target, 0, sim.n_steps)?;
    let e = empowerment(&trace)?;
    Ok(ReplaySummary { loss: full_loss, empowerment_bits: if e == 0.0 { 0.0 } else { -e } })
}

/// Column order of the aggregated curves CSV.
pub const CURVES_HEADER: &str =
    "treatment,generation,mean_best_loss,ci_loss,mean_best_emp_bits,ci_emp";

/// Aggregates per-treatment run logs into mean curves with 95% confidence
/// half-widths, written to `curves.csv` under the output directory.
pub fn run_curves(out_dir: &Path) -> Result<PathBuf> {
    let mut out = String::from(CURVES_HEADER);
    out.push('\n');
    let mut found = false;
    for t in Treatment::ALL {
        let Some(logs) = treatment_logs(out_dir, t)? else { continue };
        found = true;
        for g in 0..logs[0].1.rows.len() {
            let losses: Vec<f64> = logs.iter().map(|(_, l)| l.rows[g].best_loss).collect();
            let emps: Vec<f64> =
                logs.iter().map(|(_, l)| l.rows[g].best_empowerment_bits).collect();
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                t,
                logs[0].1.rows[g].generation,
                mean(&losses),
                ci95(&losses),
                mean(&emps),
                ci95(&emps)
            ));
        }
    }
    if !found {
        bail!("no run logs under {}", out_dir.display());
    }
    let path = out_dir.join("curves.csv");
    fs::write(&path, out)?;
    Ok(path)
}

/// Run logs of one treatment as `(run index, log)`, ordered by index, or
/// None when the treatment has no runs on disk. Mixed generation counts are
/// an error: they cannot share one curve.
fn treatment_logs(out_dir: &Path, t: Treatment) -> Result<Option<Vec<(usize, RunLog)>>> {
    let tdir = out_dir.join(t.name());
    if !tdir.is_dir() {
        return Ok(None);
    }
    let mut indexed: Vec<(usize, PathBuf)> = Vec::new();
    for entry in fs::read_dir(&tdir)? {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else { continue };
        if let Some(idx) = name.strip_prefix("run_").and_then(|s| s.parse().ok()) {
            indexed.push((idx, path));
        }
    }
    if indexed.is_empty() {
        return Ok(None);
    }
    indexed.sort_by_key(|(idx, _)| *idx);
    let mut logs: Vec<(usize, RunLog)> = Vec::with_capacity(indexed.len());
    for (idx, dir) in indexed {
        let path = dir.join("runlog.csv");
        let log =
            RunLog::read_csv(&path).with_context(|| format!("reading {}", path.display()))?;
        if let Some((first_idx, first)) = logs.first() {
            if first.rows.len() != log.rows.len() {
                bail!(
                    "{t} run {idx} logged {} generations but run {first_idx} logged {}",
                    log.rows.len(),
                    first.rows.len()
                );
            }
        }
        logs.push((idx, log));
    }
    Ok(Some(logs))
}

/// Column order of the final-generation scatter CSV.
pub const SCATTER_HEADER: &str = "treatment,run,final_best_loss,final_best_emp_bits";

/// Collects each run's final best scores into `scatter.csv`, appending a
/// `random` pseudo-treatment: the champions of fresh unevolved populations
/// at the same population size, one per configured run.
pub fn run_scatter(config: &ExperimentConfig) -> Result<PathBuf> {
    config.validate()?;
    let out_dir = &config.out_dir;
    let mut out = String::from(SCATTER_HEADER);
    out.push('\n');
    let mut found = false;
    for t in Treatment::ALL {
        let Some(logs) = treatment_logs(out_dir, t)? else { continue };
        found = true;
        for (idx, log) in &logs {
            let last = log.rows.last().context("run log has no rows")?;
            out.push_str(&format!(
                "{t},{idx},{},{}\n",
                last.best_loss, last.best_empowerment_bits
            ));
        }
    }
    if !found {
        bail!("no run logs under {}", out_dir.display());
    }

    let evaluator = NcaEvaluator::new(config.sim_params(), config.target()?, config.treatment)?;
    let pool = worker_pool(config.workers)?;
    for run in 0..config.runs {
        let seed = config.random_baseline_seed(run);
        let pop =
            pool.install(|| random_population(config.evolution.population, seed, &evaluator))?;
        let champ = champion_by_loss(&pop)?;
        out.push_str(&format!(
            "random,{run},{},{}\n",
            champ.eval.full_loss, champ.eval.empowerment_bits
        ));
    }

    let path = out_dir.join("scatter.csv");
    fs::write(&path, out)?;
    Ok(path)
}

/// Renders a built-in target shape as PGM text.
pub fn render_shape(kind: &str, m: usize, param: Option<usize>) -> Result<String> {
    let kind: ShapeKind = kind.parse()?;
    Ok(shapes::make(kind, m, param)?.to_pgm())
}
