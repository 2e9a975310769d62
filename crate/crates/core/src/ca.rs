//! Cellular automaton on an m x m grid driven by a 50-weight network rule.
//!
//! Cells carry two channels: a binary alive flag and an integer signal in
//! 0..=255. Each step runs the network once per cell that was alive at step
//! entry, in raster order and in place, so earlier cells' writes are visible
//! to later ones. A diffusion pass then mixes signal between live cells, and
//! per-cell sensor readings are taken from the diffused field.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pgm;

/// Number of weights in a genome: 5 outputs, each reading 10 inputs.
pub const GENOME_LEN: usize = 50;

const INPUTS: usize = 10;
const OUTPUTS: usize = 5;

/// Von Neumann neighbor offsets in fixed N, E, S, W order, row 0 on top.
pub const NEIGHBOR_OFFSETS: [(isize, isize); 4] = [(-1, 0), (0, 1), (1, 0), (0, -1)];

fn offset_index(m: usize, i: usize, j: usize, di: isize, dj: isize) -> Option<usize> {
    let ni = i as isize + di;
    let nj = j as isize + dj;
    if ni < 0 || nj < 0 || ni >= m as isize || nj >= m as isize {
        None
    } else {
        Some(ni as usize * m + nj as usize)
    }
}

/// Network rule weights, row-major by output: `weights[k * 10 + t]` scales
/// input `t` of output `k`. Inputs are the four neighbor signals in [0, 1]
/// (N, E, S, W), the four neighbor alive flags, the cell's own alive flag,
/// and a constant 1 bias. Outputs are the four neighbor alive writes and the
/// cell's own signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Genome {
    weights: Vec<f64>,
}

impl Genome {
    /// Wraps a weight vector; it must hold exactly 50 finite values.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.len() != GENOME_LEN {
            return Err(Error::Data(format!(
                "genome must have {GENOME_LEN} weights, got {}",
                weights.len()
            )));
        }
        if !weights.iter().all(|w| w.is_finite()) {
            return Err(Error::Data("genome weights must be finite".into()));
        }
        Ok(Self { weights })
    }

    /// All-zero genome; its network outputs 0 on every channel.
    pub fn zeros() -> Self {
        Self { weights: vec![0.0; GENOME_LEN] }
    }

    /// Genome with every weight set to `w`.
    pub fn constant(w: f64) -> Result<Self> {
        Self::new(vec![w; GENOME_LEN])
    }

    /// Genome with i.i.d. weights uniform on [-1, 1).
    pub fn random(rng: &mut impl Rng) -> Self {
        let weights = (0..GENOME_LEN).map(|_| rng.random_range(-1.0..1.0)).collect();
        Self { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Parameters of one development run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimParams {
    /// Grid side length, at least 3 and odd unless `allow_even` is set.
    pub m: usize,
    /// Number of update steps; even so objective windows split cleanly.
    pub n_steps: usize,
    /// Multiplicative signal decay applied after mixing, in [0, 1].
    pub decay: f64,
    /// Fraction of the neighbor average mixed into each signal, in [0, 1].
    pub diffusion: f64,
    /// Permit even grid sides; the seed then sits at (m/2, m/2).
    #[serde(default)]
    pub allow_even: bool,
}

impl Default for SimParams {
    fn default() -> Self {
        Self { m: 25, n_steps: 50, decay: 0.9, diffusion: 0.5, allow_even: false }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        if self.m < 3 {
            return Err(Error::Config(format!("grid side must be at least 3, got {}", self.m)));
        }
        if self.m % 2 == 0 && !self.allow_even {
            return Err(Error::Config(format!(
                "grid side must be odd, got {} (set allow_even to override)",
                self.m
            )));
        }
        if self.n_steps < 2 || self.n_steps % 2 != 0 {
            return Err(Error::Config(format!(
                "step count must be even and at least 2, got {}",
                self.n_steps
            )));
        }
        if !(0.0..=1.0).contains(&self.decay) {
            return Err(Error::Config(format!("decay must lie in [0, 1], got {}", self.decay)));
        }
        if !(0.0..=1.0).contains(&self.diffusion) {
            return Err(Error::Config(format!(
                "diffusion must lie in [0, 1], got {}",
                self.diffusion
            )));
        }
        Ok(())
    }

    /// Initial state for these parameters: the centre cell alive at signal 0.
    pub fn seed(&self) -> Result<CaState> {
        self.validate()?;
        Ok(center_seed(self.m))
    }
}

/// One grid configuration, row-major with row 0 on top.
///
/// Invariants: alive flags are 0 or 1, and dead cells carry signal 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaState {
    m: usize,
    alive: Vec<u8>,
    signal: Vec<u8>,
}

impl CaState {
    /// Builds a state from raw channels, checking the state invariants.
    pub fn from_channels(m: usize, alive: Vec<u8>, signal: Vec<u8>) -> Result<Self> {
        if m < 3 {
            return Err(Error::Config(format!("grid side must be at least 3, got {m}")));
        }
        if alive.len() != m * m || signal.len() != m * m {
            return Err(Error::Data(format!(
                "channels must have {} cells, got {} alive and {} signal",
                m * m,
                alive.len(),
                signal.len()
            )));
        }
        if !alive.iter().all(|&a| a <= 1) {
            return Err(Error::Data("alive flags must be 0 or 1".into()));
        }
        if alive.iter().zip(&signal).any(|(&a, &s)| a == 0 && s != 0) {
            return Err(Error::Data("dead cells must carry signal 0".into()));
        }
        Ok(Self { m, alive, signal })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn alive(&self, i: usize, j: usize) -> bool {
        self.alive[i * self.m + j] == 1
    }

    pub fn signal(&self, i: usize, j: usize) -> u8 {
        self.signal[i * self.m + j]
    }

    /// Row-major alive flags.
    pub fn alive_cells(&self) -> &[u8] {
        &self.alive
    }

    /// Row-major signal values.
    pub fn signals(&self) -> &[u8] {
        &self.signal
    }

    pub fn live_count(&self) -> usize {
        self.alive.iter().filter(|&&a| a == 1).count()
    }

    /// ASCII PGM rendering of the alive channel (maxval 1).
    pub fn alive_pgm(&self) -> String {
        let px: Vec<u16> = self.alive.iter().map(|&a| a as u16).collect();
        pgm::encode(self.m, self.m, 1, &px).expect("state dimensions are valid")
    }

    /// ASCII PGM rendering of the signal channel (maxval 255).
    pub fn signal_pgm(&self) -> String {
        let px: Vec<u16> = self.signal.iter().map(|&s| s as u16).collect();
        pgm::encode(self.m, self.m, 255, &px).expect("state dimensions are valid")
    }
}

fn center_seed(m: usize) -> CaState {
    let mut alive = vec![0u8; m * m];
    alive[(m / 2) * m + m / 2] = 1;
    CaState { m, alive, signal: vec![0; m * m] }
}

/// All-dead grid except a live centre cell with signal 0. Requires odd m >= 3;
/// even grids go through `SimParams::seed` with `allow_even` set.
pub fn seed_state(m: usize) -> Result<CaState> {
    if m < 3 {
        return Err(Error::Config(format!("grid side must be at least 3, got {m}")));
    }
    if m % 2 == 0 {
        return Err(Error::Config(format!("grid side must be odd, got {m}")));
    }
    Ok(center_seed(m))
}

/// Output of one step: the next state plus the action and sensor frames.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub state: CaState,
    /// Row-major pre-diffusion signal field after the update pass. For cells
    /// that did not execute this is their signal at step entry.
    pub actions: Vec<u8>,
    /// Row-major mean of each cell's in-grid neighbor signals after
    /// diffusion, rounded half away from zero.
    pub sensors: Vec<u8>,
}

/// Advances `state` by one step.
///
/// A cell executes only if it was alive at step entry and is still alive when
/// its raster turn comes, so a cell killed and then revived by earlier cells
/// does execute. Alive writes aimed off the grid are discarded. Diffusion
/// reads the whole pre-diffusion field at once: stale signal on freshly
/// killed cells still leaks into live neighbors this step, after which dead
/// cells are cleared to signal 0. The neighbor average always divides by 4,
/// so signal drains at the boundary; sensors instead divide by the in-grid
/// neighbor count.
pub fn step(state: &CaState, genome: &Genome, params: &SimParams) -> StepOutput {
    let m = state.m;
    let entry_alive = &state.alive;
    let mut alive = state.alive.clone();
    let mut signal = state.signal.clone();
    let w = &genome.weights;

    for i in 0..m {
        for j in 0..m {
            let c = i * m + j;
            if entry_alive[c] == 0 || alive[c] == 0 {
                continue;
            }
            let mut x = [0.0f64; INPUTS];
            for (t, (di, dj)) in NEIGHBOR_OFFSETS.iter().enumerate() {
                if let Some(nc) = offset_index(m, i, j, *di, *dj) {
                    x[t] = signal[nc] as f64 / 255.0;
                    x[4 + t] = alive[nc] as f64;
                }
            }
            x[8] = 1.0; // own alive flag; only live cells execute
            x[9] = 1.0; // bias
            let mut y = [0.0f64; OUTPUTS];
            for (k, yk) in y.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (t, xt) in x.iter().enumerate() {
                    acc += w[k * INPUTS + t] * xt;
                }
                *yk = acc.tanh();
            }
            for (t, (di, dj)) in NEIGHBOR_OFFSETS.iter().enumerate() {
                if let Some(nc) = offset_index(m, i, j, *di, *dj) {
                    alive[nc] = (y[t] > 0.0) as u8;
                }
            }
            signal[c] = (255.0 * (y[4] + 1.0) / 2.0).round() as u8;
        }
    }

    let actions = signal.clone();

    let mut diffused = vec![0u8; m * m];
    for i in 0..m {
        for j in 0..m {
            let c = i * m + j;
            if alive[c] == 0 {
                continue;
            }
            let mut sum = 0.0;
            for (di, dj) in NEIGHBOR_OFFSETS {
                if let Some(nc) = offset_index(m, i, j, di, dj) {
                    sum += signal[nc] as f64;
                }
            }
            let mixed = (1.0 - params.diffusion) * signal[c] as f64 + params.diffusion * (sum / 4.0);
            diffused[c] = (params.decay * mixed).round().clamp(0.0, 255.0) as u8;
        }
    }

    let mut sensors = vec![0u8; m * m];
    for i in 0..m {
        for j in 0..m {
            let mut sum = 0.0;
            let mut count = 0.0;
            for (di, dj) in NEIGHBOR_OFFSETS {
                if let Some(nc) = offset_index(m, i, j, di, dj) {
                    sum += diffused[nc] as f64;
                    count += 1.0;
                }
            }
            sensors[i * m + j] = (sum / count).round() as u8;
        }
    }

    StepOutput { state: CaState { m, alive, signal: diffused }, actions, sensors }
}

/// Full record of one development: n_steps + 1 states plus the action and
/// sensor frames that feed the information-theoretic objectives.
#[derive(Debug, Clone, PartialEq)]
pub struct DevelopmentTrace {
    m: usize,
    n_steps: usize,
    states: Vec<CaState>,
    actions: Vec<Vec<u8>>,
    sensors: Vec<Vec<u8>>,
}

impl DevelopmentTrace {
    /// Assembles a trace from parts, checking counts and frame sizes.
    /// Action and sensor values are not otherwise constrained, so synthetic
    /// traces can exercise the estimators directly.
    pub fn new(
        m: usize,
        n_steps: usize,
        states: Vec<CaState>,
        actions: Vec<Vec<u8>>,
        sensors: Vec<Vec<u8>>,
    ) -> Result<Self> {
        if states.len() != n_steps + 1 {
            return Err(Error::Data(format!(
                "trace needs {} states, got {}",
                n_steps + 1,
                states.len()
            )));
        }
        if actions.len() != n_steps || sensors.len() != n_steps {
            return Err(Error::Data(format!(
                "trace needs {n_steps} action and sensor frames, got {} and {}",
                actions.len(),
                sensors.len()
            )));
        }
        if states.iter().any(|s| s.m != m) {
            return Err(Error::Data("trace states disagree on grid side".into()));
        }
        if actions.iter().chain(&sensors).any(|f| f.len() != m * m) {
            return Err(Error::Data("trace frames must have m * m cells".into()));
        }
        Ok(Self { m, n_steps, states, actions, sensors })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// States indexed 0 (seed) through n_steps.
    pub fn states(&self) -> &[CaState] {
        &self.states
    }

    pub fn state(&self, n: usize) -> &CaState {
        &self.states[n]
    }

    /// Action frame of step n, i.e. the pre-diffusion signals after pass n.
    pub fn actions_frame(&self, n: usize) -> &[u8] {
        &self.actions[n]
    }

    /// Sensor frame of step n, taken after diffusion of step n.
    pub fn sensors_frame(&self, n: usize) -> &[u8] {
        &self.sensors[n]
    }

    pub fn action(&self, i: usize, j: usize, n: usize) -> u8 {
        self.actions[n][i * self.m + j]
    }

    pub fn sensor(&self, i: usize, j: usize, n: usize) -> u8 {
        self.sensors[n][i * self.m + j]
    }
}

/// Runs a full development from the seed state.
pub fn develop(genome: &Genome, params: &SimParams) -> Result<DevelopmentTrace> {
    let mut states = Vec::with_capacity(params.n_steps + 1);
    let mut actions = Vec::with_capacity(params.n_steps);
    let mut sensors = Vec::with_capacity(params.n_steps);
    states.push(params.seed()?);
    for _ in 0..params.n_steps {
        let out = step(states.last().expect("seeded above"), genome, params);
        actions.push(out.actions);
        sensors.push(out.sensors);
        states.push(out.state);
    }
    Ok(DevelopmentTrace { m: params.m, n_steps: params.n_steps, states, actions, sensors })
}
