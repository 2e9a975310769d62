//! Shape-matching loss and empowerment objectives over development traces.
//!
//! Both objectives are minimized. The loss is a windowed mean of per-cell
//! squared mismatch against the target mask. Empowerment is the plug-in
//! mutual information between each cell's written signal and the same cell's
//! sensor reading half a development later, stored negated so that lower
//! values mean more empowerment.

use std::path::Path;

use crate::ca::DevelopmentTrace;
use crate::error::{Error, Result};
use crate::infotheory::JointHistogram;
use crate::shapes::TargetShape;

/// Symbol alphabet of the action and sensor channels.
pub const SIGNAL_ALPHABET: usize = 256;

/// Windowed matching loss: the mean over steps n0+1 ..= n1 of the per-cell
/// mean squared difference between the alive channel and the target mask.
/// Binary channels make each squared difference a 0/1 mismatch, so the value
/// lies in [0, 1].
pub fn loss(trace: &DevelopmentTrace, target: &TargetShape, n0: usize, n1: usize) -> Result<f64> {
    if target.m() != trace.m() {
        return Err(Error::Data(format!(
            "target is {}x{} but the trace grid is {}x{}",
            target.m(),
            target.m(),
            trace.m(),
            trace.m()
        )));
    }
    if n0 >= n1 || n1 > trace.n_steps() {
        return Err(Error::Config(format!(
            "loss window must satisfy n0 < n1 <= {}, got ({n0}, {n1})",
            trace.n_steps()
        )));
    }
    let mut mismatches: u64 = 0;
    for n in n0 + 1..=n1 {
        let alive = trace.state(n).alive_cells();
        mismatches += alive
            .iter()
            .zip(target.cells())
            .filter(|(&a, &t)| a != t)
            .count() as u64;
    }
    let m2 = (trace.m() * trace.m()) as f64;
    Ok(mismatches as f64 / ((n1 - n0) as f64 * m2))
}

/// Joint histogram of (action, lagged sensor) pairs: for h = n_steps / 2,
/// every cell contributes the pairs (action at n, sensor at n + h) for
/// n in 0..h, giving m * m * h pairs in total.
pub fn empowerment_histogram(trace: &DevelopmentTrace) -> Result<JointHistogram> {
    if trace.n_steps() < 2 || trace.n_steps() % 2 != 0 {
        return Err(Error::Estimator(format!(
            "empowerment needs an even step count of at least 2, got {}",
            trace.n_steps()
        )));
    }
    let h = trace.n_steps() / 2;
    let mut hist = JointHistogram::new(SIGNAL_ALPHABET)?;
    for n in 0..h {
        let actions = trace.actions_frame(n);
        let sensors = trace.sensors_frame(n + h);
        for (&a, &s) in actions.iter().zip(sensors) {
            hist.record(a as usize, s as usize)?;
        }
    }
    Ok(hist)
}

/// Empowerment objective: the negated plug-in mutual information (bits) of
/// `empowerment_histogram`, so minimizing selects for higher information.
pub fn empowerment(trace: &DevelopmentTrace) -> Result<f64> {
    let mi = empowerment_histogram(trace)?.mutual_information()?;
    Ok(if mi == 0.0 { 0.0 } else { -mi })
}

/// Per-cell decomposition of the global empowerment estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalEmpowermentMap {
    m: usize,
    values: Vec<f64>,
}

impl LocalEmpowermentMap {
    pub fn m(&self) -> usize {
        self.m
    }

    /// Row-major per-cell values in bits.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.m + j]
    }

    /// Mean over cells; equals the global mutual information estimate.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// CSV rendering: m lines of m comma-separated values, row 0 first.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.values.chunks(self.m) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Per-cell mean pointwise information of the cell's own (action, lagged
/// sensor) pairs under the global histogram. Each pair queried was recorded,
/// so every value is finite, and the map mean recovers the global estimate.
pub fn local_empowerment(trace: &DevelopmentTrace) -> Result<LocalEmpowermentMap> {
    let hist = empowerment_histogram(trace)?;
    let h = trace.n_steps() / 2;
    let m = trace.m();
    let mut values = vec![0.0f64; m * m];
    for n in 0..h {
        let actions = trace.actions_frame(n);
        let sensors = trace.sensors_frame(n + h);
        for (c, (&a, &s)) in actions.iter().zip(sensors).enumerate() {
            values[c] += hist.pointwise(a as usize, s as usize)?;
        }
    }
    for v in &mut values {
        *v /= h as f64;
    }
    Ok(LocalEmpowermentMap { m, values })
}
