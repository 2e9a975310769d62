//! Acceptance gate: one test per release criterion, each checking a stated
//! tolerance, bound, or trend and printing a `[PASS]` line with the measured
//! margin. The trend criteria share one desk-scale evolution campaign that is
//! built once on first use.

use std::collections::HashMap;
use std::fs;
use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use morphca::ca::{develop, CaState, DevelopmentTrace, Genome, SimParams};
use morphca::evolution::{
    champion_by_loss, dominates, generation_step, non_dominated_layers, random_population,
    Evaluation, Evaluator, EvoParams, NcaEvaluator, RunLog, Treatment,
};
use morphca::infotheory::JointHistogram;
use morphca::objectives::{empowerment_histogram, local_empowerment, loss};
use morphca::shapes::{self, ShapeKind, TargetShape};
use morphca_cli::commands::{run_evolve, run_replay, RunArtifacts};
use morphca_cli::config::{EvolutionConfig, ExperimentConfig, ShapeConfig};
use morphca_cli::stats::mean;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Numeric tolerances, one per criterion that has one.
const MI_ORACLE_TOL: f64 = 1e-12;
const MI_ANALYTIC_TOL: f64 = 1e-12;
const MI_BOUND_SLACK: f64 = 1e-9;
const LOCAL_DECOMP_TOL: f64 = 1e-9;
const LOSS_PARTITION_TOL: f64 = 1e-12;
const REPLAY_TOL: f64 = 1e-12;

// Runtime budgets.
const MI_ORACLE_BUDGET: Duration = Duration::from_secs(5);
const DETERMINISM_BUDGET: Duration = Duration::from_secs(120);

// Desk-scale campaign shared by the trend and replay criteria.
const CAMPAIGN_M: usize = 11;
const CAMPAIGN_STEPS: usize = 30;
const CAMPAIGN_SQUARE_SIDE: usize = 7;
const CAMPAIGN_POPULATION: usize = 64;
const CAMPAIGN_GENERATIONS: usize = 200;
const CAMPAIGN_RUNS: usize = 10;
const BOOTSTRAP_RESAMPLES: usize = 10_000;

fn pass(criterion: &str, detail: impl std::fmt::Display) {
    println!("[PASS] {criterion}: {detail}");
}

/// Independent plug-in estimate: the textbook double sum over an explicit
/// probability matrix, floored at zero like the library estimator.
fn brute_force_mi(hist: &JointHistogram) -> f64 {
    let k = hist.alphabet_size();
    let n = hist.total() as f64;
    let mut pa = vec![0.0; k];
    let mut ps = vec![0.0; k];
    for a in 0..k {
        for s in 0..k {
            let p = hist.count(a, s) as f64 / n;
            pa[a] += p;
            ps[s] += p;
        }
    }
    let mut mi = 0.0;
    for a in 0..k {
        for s in 0..k {
            let pas = hist.count(a, s) as f64 / n;
            if pas > 0.0 {
                mi += pas * (pas / (pa[a] * ps[s])).log2();
            }
        }
    }
    mi.max(0.0)
}

fn random_histogram(rng: &mut ChaCha8Rng) -> JointHistogram {
    let k = rng.random_range(1..=8);
    let pairs = rng.random_range(1..=200);
    let mut hist = JointHistogram::new(k).unwrap();
    for _ in 0..pairs {
        hist.record(rng.random_range(0..k), rng.random_range(0..k)).unwrap();
    }
    hist
}

/// Valid trace with i.i.d. random states and frames; exercises the
/// estimators on data no genome would produce.
fn synthetic_trace(rng: &mut ChaCha8Rng, m: usize, n_steps: usize) -> DevelopmentTrace {
    let mut states = Vec::with_capacity(n_steps + 1);
    for _ in 0..=n_steps {
        let alive: Vec<u8> = (0..m * m).map(|_| rng.random_range(0..=1)).collect();
        let signal: Vec<u8> =
            alive.iter().map(|&a| if a == 1 { rng.random() } else { 0 }).collect();
        states.push(CaState::from_channels(m, alive, signal).unwrap());
    }
    let mut frames = || -> Vec<Vec<u8>> {
        (0..n_steps).map(|_| (0..m * m).map(|_| rng.random()).collect()).collect()
    };
    let actions = frames();
    let sensors = frames();
    DevelopmentTrace::new(m, n_steps, states, actions, sensors).unwrap()
}

fn random_target(rng: &mut ChaCha8Rng, m: usize) -> TargetShape {
    let mut cells: Vec<u8> = (0..m * m).map(|_| rng.random_range(0..=1)).collect();
    cells[rng.random_range(0..m * m)] = 1;
    TargetShape::new(m, "random", cells).unwrap()
}

#[test]
fn criterion_01_mutual_information_matches_a_brute_force_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0A11CE);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let hist = random_histogram(&mut rng);
        let got = hist.mutual_information().unwrap();
        worst = worst.max((got - brute_force_mi(&hist)).abs());
    }
    let elapsed = start.elapsed();
    assert!(worst <= MI_ORACLE_TOL, "worst |estimate - oracle| = {worst:e}");
    assert!(elapsed < MI_ORACLE_BUDGET, "oracle sweep took {elapsed:?}");
    pass("criterion 1", format!("1000 histograms, worst deviation {worst:.2e}, {elapsed:?}"));
}

#[test]
fn criterion_02_analytic_mutual_information_cases() {
    // Perfectly correlated uniform binary pairs carry exactly one bit.
    let correlated = JointHistogram::from_counts(2, vec![37, 0, 0, 37]).unwrap();
    assert_eq!(correlated.mutual_information().unwrap(), 1.0);

    // Independent uniform binary pairs carry none.
    let independent = JointHistogram::from_counts(2, vec![25, 25, 25, 25]).unwrap();
    let mi = independent.mutual_information().unwrap();
    assert!(mi.abs() <= MI_ANALYTIC_TOL, "independent pairs gave {mi:e}");

    // Information never exceeds either marginal entropy.
    let plug_in_entropy = |marginals: &[u64], n: f64| -> f64 {
        marginals
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.log2()
            })
            .sum()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0xB0DD);
    let mut slack = f64::INFINITY;
    for _ in 0..200 {
        let hist = random_histogram(&mut rng);
        let n = hist.total() as f64;
        let bound = plug_in_entropy(hist.row_marginals(), n)
            .min(plug_in_entropy(hist.col_marginals(), n));
        let mi = hist.mutual_information().unwrap();
        assert!(mi <= bound + MI_BOUND_SLACK, "I = {mi} exceeds min entropy {bound}");
        slack = slack.min(bound - mi);
    }
    pass("criterion 2", format!("exact 1 bit and 0 bits; bound held with min slack {slack:.3}"));
}

#[test]
fn criterion_03_local_map_mean_recovers_global_information() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x10CA1);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let trace = synthetic_trace(&mut rng, 5, 10);
        let global = empowerment_histogram(&trace).unwrap().mutual_information().unwrap();
        let map = local_empowerment(&trace).unwrap();
        worst = worst.max((map.mean() - global).abs());
    }
    assert!(worst <= LOCAL_DECOMP_TOL, "worst |map mean - global| = {worst:e}");
    pass("criterion 3", format!("200 traces, worst decomposition gap {worst:.2e}"));
}

#[test]
fn criterion_04_windowed_loss_partition_identity() {
    let (m, n) = (5, 10);
    let mut rng = ChaCha8Rng::seed_from_u64(0x1055);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let trace = synthetic_trace(&mut rng, m, n);
        let target = random_target(&mut rng, m);
        let first = loss(&trace, &target, 0, n / 2).unwrap();
        let second = loss(&trace, &target, n / 2, n).unwrap();
        let full = loss(&trace, &target, 0, n).unwrap();
        for l in [first, second, full] {
            assert!((0.0..=1.0).contains(&l), "loss {l} left the unit interval");
        }
        let half = (n / 2) as f64;
        worst = worst.max((half * first + half * second - n as f64 * full).abs());
    }
    assert!(worst <= LOSS_PARTITION_TOL, "worst partition residual = {worst:e}");
    pass("criterion 4", format!("200 traces, worst partition residual {worst:.2e}"));
}

#[test]
fn criterion_05_ca_structural_properties() {
    let params = SimParams { m: 11, n_steps: 30, ..SimParams::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(0x5CA1E);
    for _ in 0..500 {
        let trace = develop(&Genome::random(&mut rng), &params).unwrap();
        for n in 0..trace.n_steps() {
            let (prev, next) = (trace.state(n), trace.state(n + 1));
            for i in 0..params.m {
                for j in 0..params.m {
                    if next.alive(i, j) && !prev.alive(i, j) {
                        let grown_from_neighbor = (i > 0 && prev.alive(i - 1, j))
                            || (i + 1 < params.m && prev.alive(i + 1, j))
                            || (j > 0 && prev.alive(i, j - 1))
                            || (j + 1 < params.m && prev.alive(i, j + 1));
                        assert!(
                            grown_from_neighbor,
                            "cell ({i},{j}) came alive at step {} with no live neighbor",
                            n + 1
                        );
                    }
                    if !next.alive(i, j) {
                        assert_eq!(next.signal(i, j), 0, "dead cell kept signal");
                    }
                    assert!(u16::from(next.signal(i, j)) <= 255);
                }
            }
        }
    }
    let still = develop(&Genome::zeros(), &params).unwrap();
    for state in still.states() {
        assert_eq!(state.live_count(), 1, "the zero genome grew");
    }
    pass("criterion 5", "500 random genomes: growth locality, dead-cell silence, signal range; zero genome stayed a single cell");
}

/// Pure two-objective stand-in so optimizer invariants are checked without
/// simulation cost or treatment coupling.
struct StubEval;

impl Evaluator for StubEval {
    fn evaluate(&self, genome: &Genome) -> morphca::Result<Evaluation> {
        let w = genome.weights();
        let (a, b) = (w[0].abs().min(1.0), w[1].abs().min(1.0));
        Ok(Evaluation { objectives: vec![a, b], full_loss: a, empowerment_bits: b })
    }
}

#[test]
fn criterion_06_optimizer_invariants_across_micro_runs() {
    let params = EvoParams {
        population: 8,
        generations: 20,
        mutation_rate: 0.1,
        mutation_sigma: 0.25,
        rng_seed: 0,
    };
    let mut age_zero_survivors = 0usize;
    for run in 0..50u64 {
        let mut pop = random_population(params.population, 7000 + run, &StubEval).unwrap();
        assert!(pop.iter().all(|ind| ind.age == 0), "initial population must be age 0");
        let mut rng = ChaCha8Rng::seed_from_u64(0xAF0 + run);
        for g in 1..=params.generations as u64 {
            pop = generation_step(pop, &params, &StubEval, &mut rng).unwrap();
            assert_eq!(pop.len(), params.population, "population drifted at generation {g}");
            let layers = non_dominated_layers(&pop);
            let front = &layers[0];
            for (x, &i) in front.iter().enumerate() {
                for &j in front.iter().skip(x + 1) {
                    assert!(
                        !dominates(&pop[i], &pop[j]) && !dominates(&pop[j], &pop[i]),
                        "layer 0 held a dominated individual at generation {g}"
                    );
                }
            }
            for a in &pop {
                for b in &pop {
                    if dominates(a, b) && b.age == 0 {
                        assert_eq!(a.age, 0, "age-0 dominated by an older individual");
                    }
                }
            }
            assert!(pop.iter().all(|ind| ind.age <= g), "an age exceeded the generation count");
            age_zero_survivors += pop.iter().filter(|ind| ind.age == 0).count();
        }
    }
    assert!(age_zero_survivors > 0, "no injected individual ever survived at age 0");
    pass(
        "criterion 6",
        format!("50 micro-runs; {age_zero_survivors} age-0 survivors observed across generations"),
    );
}

fn determinism_config(out_dir: PathBuf, workers: usize) -> ExperimentConfig {
    ExperimentConfig {
        treatment: Treatment::TriErrorEmpowerment,
        runs: 1,
        base_seed: 17,
        out_dir,
        workers,
        grid: SimParams {
            m: CAMPAIGN_M,
            n_steps: CAMPAIGN_STEPS,
            decay: 0.9,
            diffusion: 0.5,
            allow_even: false,
        },
        shape: ShapeConfig { kind: "square".into(), param: Some(CAMPAIGN_SQUARE_SIDE), path: None },
        evolution: EvolutionConfig {
            population: 32,
            generations: 50,
            mutation_rate: 0.1,
            mutation_sigma: 0.25,
        },
    }
}

#[test]
fn criterion_07_run_logs_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut elapsed = Vec::new();
    for workers in [1usize, 8] {
        let config = determinism_config(dir.path().join(format!("w{workers}")), workers);
        let start = Instant::now();
        run_evolve(&config).unwrap();
        elapsed.push(start.elapsed());
    }
    let file = |workers: usize, name: &str| {
        fs::read(dir.path().join(format!("w{workers}/tri_error_empowerment/run_0/{name}")))
            .unwrap()
    };
    assert_eq!(file(1, "runlog.csv"), file(8, "runlog.csv"), "run logs differ by worker count");
    assert_eq!(file(1, "champion.json"), file(8, "champion.json"), "champions differ");
    for (workers, t) in [1, 8].iter().zip(&elapsed) {
        assert!(*t < DETERMINISM_BUDGET, "{workers}-worker run took {t:?}");
    }
    pass(
        "criterion 7",
        format!("byte-identical logs and champions; {:?} vs {:?}", elapsed[0], elapsed[1]),
    );
}

/// Results of the shared campaign: per treatment, final and generation-zero
/// champion scores for each run, plus an unevolved random-search cluster.
struct Campaign {
    final_loss: HashMap<Treatment, Vec<f64>>,
    final_emp: HashMap<Treatment, Vec<f64>>,
    gen0_emp: HashMap<Treatment, Vec<f64>>,
    random_loss: Vec<f64>,
    replays: Vec<(ExperimentConfig, RunArtifacts)>,
    _dir: tempfile::TempDir,
}

fn campaign() -> &'static Campaign {
    static CAMPAIGN: OnceLock<Campaign> = OnceLock::new();
    CAMPAIGN.get_or_init(build_campaign)
}

fn campaign_config(treatment: Treatment, index: u64, out_dir: PathBuf) -> ExperimentConfig {
    ExperimentConfig {
        treatment,
        runs: CAMPAIGN_RUNS,
        // Distinct stream family per treatment.
        base_seed: 4242 + 1000 * index,
        out_dir,
        workers: 0,
        grid: SimParams {
            m: CAMPAIGN_M,
            n_steps: CAMPAIGN_STEPS,
            decay: 0.9,
            diffusion: 0.5,
            allow_even: false,
        },
        shape: ShapeConfig { kind: "square".into(), param: Some(CAMPAIGN_SQUARE_SIDE), path: None },
        evolution: EvolutionConfig {
            population: CAMPAIGN_POPULATION,
            generations: CAMPAIGN_GENERATIONS,
            mutation_rate: 0.1,
            mutation_sigma: 0.25,
        },
    }
}

fn build_campaign() -> Campaign {
    let dir = tempfile::tempdir().expect("campaign tempdir");
    let mut campaign = Campaign {
        final_loss: HashMap::new(),
        final_emp: HashMap::new(),
        gen0_emp: HashMap::new(),
        random_loss: Vec::new(),
        replays: Vec::new(),
        _dir: dir,
    };
    let out = campaign._dir.path().join("campaign");
    let scorer = {
        let config = campaign_config(Treatment::BiError, 0, out.clone());
        NcaEvaluator::new(config.sim_params(), config.target().unwrap(), Treatment::BiError)
            .unwrap()
    };
    for (index, treatment) in Treatment::ALL.into_iter().enumerate() {
        let config = campaign_config(treatment, index as u64, out.clone());
        let artifacts = run_evolve(&config).expect("campaign run");
        assert_eq!(artifacts.len(), CAMPAIGN_RUNS);
        for art in artifacts {
            let log = RunLog::read_csv(&art.dir.join("runlog.csv")).unwrap();
            let last = log.rows.last().unwrap();
            campaign.final_loss.entry(treatment).or_default().push(last.best_loss);
            campaign.final_emp.entry(treatment).or_default().push(last.best_empowerment_bits);
            // The run seed reconstructs the exact population the run evolved
            // from, so this is its true generation-zero reference point.
            let gen0 =
                random_population(CAMPAIGN_POPULATION, config.run_seed(art.run), &scorer).unwrap();
            let champion = champion_by_loss(&gen0).unwrap();
            campaign.gen0_emp.entry(treatment).or_default().push(champion.eval.empowerment_bits);
            campaign.replays.push((config.clone(), art));
        }
    }
    // Unevolved cluster: lowest-loss member of fresh random populations,
    // seeded disjointly from every run stream.
    for run in 0..CAMPAIGN_RUNS as u64 {
        let pop = random_population(CAMPAIGN_POPULATION, 0x5241_4e44 + run, &scorer).unwrap();
        campaign.random_loss.push(champion_by_loss(&pop).unwrap().eval.full_loss);
    }
    campaign
}

fn resampled_mean(xs: &[f64], rng: &mut ChaCha8Rng) -> f64 {
    let n = xs.len();
    (0..n).map(|_| xs[rng.random_range(0..n)]).sum::<f64>() / n as f64
}

#[test]
fn criterion_08a_added_empowerment_objective_does_not_hurt_loss() {
    let c = campaign();
    let with_emp = mean(&c.final_loss[&Treatment::TriErrorEmpowerment]);
    let loss_only = mean(&c.final_loss[&Treatment::BiError]);
    if with_emp <= loss_only {
        pass(
            "criterion 8a",
            format!("mean final loss {with_emp:.4} (with empowerment) <= {loss_only:.4}"),
        );
        return;
    }
    // The means point the other way; fail only if that reversal is solid
    // under a seeded bootstrap of the run-level means.
    let mut rng = ChaCha8Rng::seed_from_u64(0xB007);
    let mut reversed = 0usize;
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let only = resampled_mean(&c.final_loss[&Treatment::BiError], &mut rng);
        let with = resampled_mean(&c.final_loss[&Treatment::TriErrorEmpowerment], &mut rng);
        if only < with {
            reversed += 1;
        }
    }
    let p = reversed as f64 / BOOTSTRAP_RESAMPLES as f64;
    assert!(
        p <= 0.95,
        "loss-only selection significantly better: p = {p:.3}, means {loss_only:.4} vs {with_emp:.4}"
    );
    pass(
        "criterion 8a",
        format!("means {with_emp:.4} vs {loss_only:.4}; reversal not significant (p = {p:.3})"),
    );
}

#[test]
fn criterion_08b_empowerment_selection_yields_the_most_empowered_champions() {
    let c = campaign();
    let emp_only = mean(&c.final_emp[&Treatment::BiEmpowerment]);
    let bi = mean(&c.final_emp[&Treatment::BiError]);
    let tri = mean(&c.final_emp[&Treatment::TriError]);
    assert!(
        emp_only > bi && emp_only > tri,
        "bi_empowerment mean {emp_only:.4} not above loss-only means {bi:.4} and {tri:.4}"
    );
    pass(
        "criterion 8b",
        format!("mean champion empowerment {emp_only:.3} bits > loss-only {bi:.3} and {tri:.3}"),
    );
}

#[test]
fn criterion_08c_empowerment_alone_still_beats_random_search_on_loss() {
    let c = campaign();
    let emp_only = mean(&c.final_loss[&Treatment::BiEmpowerment]);
    let random = mean(&c.random_loss);
    if emp_only >= random {
        // Known red at this scale: over random genomes on an 11x11 grid with a
        // side-7 square target, empowerment correlates positively with loss
        // (big chattering blobs overshoot a target that covers 40% of the
        // grid), so empowerment-only selection drifts the population's best
        // loss above an equal-size random sample instead of below it.
        println!(
            "[FAIL] criterion 8c: mean final loss {emp_only:.4} not below random champions \
             {random:.4}"
        );
        panic!(
            "bi_empowerment mean loss {emp_only:.4} not below random champions {random:.4}; \
             at this grid scale empowerment rewards overgrowth, which raises loss"
        );
    }
    pass("criterion 8c", format!("mean final loss {emp_only:.4} < random champions {random:.4}"));
}

#[test]
fn criterion_08d_loss_selection_raises_empowerment_as_a_side_effect() {
    let c = campaign();
    let mut detail = Vec::new();
    for treatment in [Treatment::BiError, Treatment::TriError] {
        let at_end = mean(&c.final_emp[&treatment]);
        let at_start = mean(&c.gen0_emp[&treatment]);
        assert!(
            at_end > at_start,
            "{treatment}: final mean empowerment {at_end:.4} did not exceed generation-zero {at_start:.4}"
        );
        detail.push(format!("{treatment} {at_start:.3} -> {at_end:.3} bits"));
    }
    pass("criterion 8d", detail.join("; "));
}

#[test]
fn criterion_09_champions_replay_to_their_logged_scores() {
    let c = campaign();
    let mut worst = 0.0f64;
    for (config, art) in &c.replays {
        let log = RunLog::read_csv(&art.dir.join("runlog.csv")).unwrap();
        let last = log.rows.last().unwrap();
        let replayed = run_replay(config, &art.dir.join("champion.json")).unwrap();
        worst = worst
            .max((replayed.loss - last.best_loss).abs())
            .max((replayed.empowerment_bits - last.best_empowerment_bits).abs());
    }
    assert!(worst <= REPLAY_TOL, "worst replay deviation = {worst:e}");
    pass(
        "criterion 9",
        format!("{} champions, worst replay deviation {worst:.2e}", c.replays.len()),
    );
}

#[test]
fn criterion_10_shape_generators_match_checked_in_goldens() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/goldens");
    let mut checked = 0;
    for kind in ShapeKind::ALL {
        for m in [25usize, 50] {
            let golden = root.join(format!("{kind}_{m}.pgm"));
            let want = fs::read_to_string(&golden)
                .unwrap_or_else(|e| panic!("reading {}: {e}", golden.display()));
            let got = shapes::make(kind, m, None).unwrap().to_pgm();
            assert_eq!(got, want, "generator drifted from {}", golden.display());
            checked += 1;
        }
    }
    pass("criterion 10", format!("{checked} golden masks byte-identical"));
}
