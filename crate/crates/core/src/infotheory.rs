//! Plug-in information estimates over joint symbol histograms.
//!
//! All quantities are in bits. Probabilities are maximum-likelihood count
//! ratios; zero-count cells contribute nothing. The plug-in mutual
//! information is mathematically nonnegative, so `mutual_information` floors
//! the summed value at zero and `mutual_information_unfloored` exposes the
//! raw sum, which can sit a few ulps below zero.

use crate::error::{Error, Result};

/// Counts of (action, sensor) symbol pairs over a square alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointHistogram {
    k: usize,
    /// Row-major joint counts: `counts[a * k + s]`.
    counts: Vec<u64>,
    /// Marginal counts of the first (action) symbol.
    rows: Vec<u64>,
    /// Marginal counts of the second (sensor) symbol.
    cols: Vec<u64>,
    total: u64,
}

impl JointHistogram {
    /// Empty histogram over the alphabet `0..k` on both sides.
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("alphabet size must be positive".into()));
        }
        Ok(Self { k, counts: vec![0; k * k], rows: vec![0; k], cols: vec![0; k], total: 0 })
    }

    /// Histogram with the given row-major joint counts.
    pub fn from_counts(k: usize, counts: Vec<u64>) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("alphabet size must be positive".into()));
        }
        if counts.len() != k * k {
            return Err(Error::Data(format!(
                "joint counts must have {} entries, got {}",
                k * k,
                counts.len()
            )));
        }
        let mut h = Self::new(k)?;
        for a in 0..k {
            for s in 0..k {
                let c = counts[a * k + s];
                h.rows[a] += c;
                h.cols[s] += c;
                h.total += c;
            }
        }
        h.counts = counts;
        Ok(h)
    }

    pub fn alphabet_size(&self) -> usize {
        self.k
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, a: usize, s: usize) -> u64 {
        self.counts[a * self.k + s]
    }

    /// Marginal counts of the first symbol.
    pub fn row_marginals(&self) -> &[u64] {
        &self.rows
    }

    /// Marginal counts of the second symbol.
    pub fn col_marginals(&self) -> &[u64] {
        &self.cols
    }

    /// Records one pair; both symbols must lie in `0..k`.
    pub fn record(&mut self, a: usize, s: usize) -> Result<()> {
        if a >= self.k || s >= self.k {
            return Err(Error::Data(format!(
                "pair ({a}, {s}) outside alphabet 0..{}",
                self.k
            )));
        }
        self.counts[a * self.k + s] += 1;
        self.rows[a] += 1;
        self.cols[s] += 1;
        self.total += 1;
        Ok(())
    }

    /// Records pairs in order. On an out-of-alphabet pair the error is
    /// returned immediately and earlier pairs stay recorded.
    pub fn accumulate(&mut self, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<()> {
        for (a, s) in pairs {
            self.record(a, s)?;
        }
        Ok(())
    }

    /// Adds another histogram's counts; alphabets must match.
    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if self.k != other.k {
            return Err(Error::Data(format!(
                "cannot merge alphabets of size {} and {}",
                self.k, other.k
            )));
        }
        for (c, o) in self.counts.iter_mut().zip(&other.counts) {
            *c += o;
        }
        for (r, o) in self.rows.iter_mut().zip(&other.rows) {
            *r += o;
        }
        for (c, o) in self.cols.iter_mut().zip(&other.cols) {
            *c += o;
        }
        self.total += other.total;
        Ok(())
    }

    /// Raw plug-in mutual information sum, not floored at zero.
    pub fn mutual_information_unfloored(&self) -> Result<f64> {
        if self.total == 0 {
            return Err(Error::Estimator("mutual information of an empty histogram".into()));
        }
        let n = self.total as f64;
        let mut mi = 0.0;
        for a in 0..self.k {
            if self.rows[a] == 0 {
                continue;
            }
            let row = self.rows[a] as f64;
            for s in 0..self.k {
                let c = self.counts[a * self.k + s];
                if c == 0 {
                    continue;
                }
                let joint = c as f64;
                mi += (joint / n) * ((joint * n) / (row * self.cols[s] as f64)).log2();
            }
        }
        Ok(mi)
    }

    /// Plug-in mutual information in bits, floored at zero.
    pub fn mutual_information(&self) -> Result<f64> {
        let mi = self.mutual_information_unfloored()?;
        Ok(if mi <= 0.0 { 0.0 } else { mi })
    }

    /// Pointwise information log2(p(a,s) / (p(a) p(s))) of one pair.
    ///
    /// Errors if either marginal is zero; returns negative infinity for a
    /// pair with nonzero marginals but zero joint count.
    pub fn pointwise(&self, a: usize, s: usize) -> Result<f64> {
        if a >= self.k || s >= self.k {
            return Err(Error::Data(format!(
                "pair ({a}, {s}) outside alphabet 0..{}",
                self.k
            )));
        }
        if self.rows[a] == 0 || self.cols[s] == 0 {
            return Err(Error::Estimator(format!(
                "pointwise information of unseen symbols ({a}, {s})"
            )));
        }
        let joint = self.counts[a * self.k + s] as f64;
        Ok(((joint * self.total as f64) / (self.rows[a] as f64 * self.cols[s] as f64)).log2())
    }
}

/// Plug-in Shannon entropy (bits) of a marginal count vector.
pub fn entropy(counts: &[u64]) -> Result<f64> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::Estimator("entropy of an empty distribution".into()));
    }
    let n = total as f64;
    let mut h = 0.0;
    for &c in counts {
        if c > 0 {
            let p = c as f64 / n;
            h -= p * p.log2();
        }
    }
    Ok(h)
}
