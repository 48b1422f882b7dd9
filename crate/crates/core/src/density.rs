//! Histogram estimates of matcher score densities.
//!
//! Match (`p_M`) and non-match (`p_N`) densities are piecewise constant on
//! `[0, 1]`. Fitting uses `B = round(C * N^(1/3) / sigma)` equal-width bins
//! with a per-bin pseudocount, so every bin of a fitted histogram has
//! positive density and log-densities stay finite.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};

pub const DEFAULT_BIN_CONSTANT: f64 = 1.0;
pub const DEFAULT_PSEUDOCOUNT: f64 = 0.5;
pub const MAX_BINS: usize = 100_000;

/// Tolerance on total mass when accepting a histogram built from parts.
pub const MASS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScoreLabel {
    Match,
    NonMatch,
}

/// Training scores for one side of the matcher statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSamples {
    values: Vec<f64>,
    label: ScoreLabel,
}

impl ScoreSamples {
    pub fn new(values: Vec<f64>, label: ScoreLabel) -> Result<Self> {
        for &v in &values {
            check_score(v)?;
        }
        Ok(Self { values, label })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> ScoreLabel {
        self.label
    }
}

pub(crate) fn check_score(v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::ScoreOutOfRange { value: v })
    }
}

/// Piecewise-constant probability density on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramDensity {
    edges: Vec<f64>,
    density: Vec<f64>,
    /// Running bin mass, `cumulative[b] = sum of mass over bins 0..=b`.
    cumulative: Vec<f64>,
    n_samples: u64,
    pseudocount: f64,
    bin_constant: f64,
}

/// Bin count for `n` samples with standard deviation `sigma`.
///
/// Degenerate or non-finite inputs fall back to a single bin; the result is
/// clamped to `[1, MAX_BINS]`.
pub fn bin_count(n: usize, sigma: f64, bin_constant: f64) -> usize {
    let raw = bin_constant * libm::cbrt(n as f64) / sigma;
    if !(sigma > 0.0) || !raw.is_finite() {
        return 1;
    }
    let rounded = libm::round(raw);
    if rounded < 1.0 {
        1
    } else if rounded >= MAX_BINS as f64 {
        MAX_BINS
    } else {
        rounded as usize
    }
}

/// Sample standard deviation with the `N - 1` denominator; zero for `N < 2`.
pub fn sample_std_dev(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    // Shifted by the first value so identical samples give exactly zero.
    let shift = values[0];
    let mean = values.iter().map(|v| v - shift).sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - shift - mean) * (v - shift - mean)).sum();
    libm::sqrt(ss / (n - 1) as f64)
}

/// Fit a histogram density to labelled samples.
pub fn build_histogram(
    samples: &ScoreSamples,
    bin_constant: f64,
    pseudocount: f64,
) -> Result<HistogramDensity> {
    HistogramDensity::fit(samples.values(), bin_constant, pseudocount)
}

impl HistogramDensity {
    pub fn fit(values: &[f64], bin_constant: f64, pseudocount: f64) -> Result<Self> {
        if !(bin_constant > 0.0) || !bin_constant.is_finite() {
            return Err(Error::param("bin constant", "must be a positive finite number"));
        }
        if !(pseudocount >= 0.0) || !pseudocount.is_finite() {
            return Err(Error::param("pseudocount", "must be a non-negative finite number"));
        }
        if values.is_empty() {
            return Err(Error::EmptySamples);
        }
        for &v in values {
            check_score(v)?;
        }

        let n = values.len();
        let bins = bin_count(n, sample_std_dev(values), bin_constant);
        let edges = uniform_edges(bins);

        let mut counts = alloc::vec![0u64; bins];
        for &v in values {
            counts[locate(&edges, v)] += 1;
        }
        let total = n as f64 + bins as f64 * pseudocount;
        if !(total > 0.0) {
            return Err(Error::InvalidDensity("no mass after pseudocount"));
        }
        let density = counts
            .iter()
            .zip(edges.windows(2))
            .map(|(&c, w)| (c as f64 + pseudocount) / (total * (w[1] - w[0])))
            .collect();

        Self::assemble(edges, density, n as u64, pseudocount, bin_constant)
    }

    /// Build a histogram from explicit bin edges and densities, as loaded
    /// from a density file.
    pub fn from_parts(
        edges: Vec<f64>,
        density: Vec<f64>,
        n_samples: u64,
        pseudocount: f64,
        bin_constant: f64,
    ) -> Result<Self> {
        if edges.len() < 2 || density.len() + 1 != edges.len() {
            return Err(Error::InvalidDensity("need B + 1 edges for B densities"));
        }
        if edges[0] != 0.0 || edges[edges.len() - 1] != 1.0 {
            return Err(Error::InvalidDensity("edges must run from 0 to 1"));
        }
        if edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidDensity("edges must be strictly increasing"));
        }
        if density.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
            return Err(Error::InvalidDensity("densities must be finite and non-negative"));
        }
        if !(pseudocount >= 0.0) || !(bin_constant > 0.0) {
            return Err(Error::InvalidDensity("pseudocount must be >= 0 and bin constant > 0"));
        }
        let h = Self::assemble(edges, density, n_samples, pseudocount, bin_constant)?;
        if (h.total_mass() - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidDensity("density does not integrate to 1"));
        }
        Ok(h)
    }

    /// Step density from per-bin probability masses (normalized here).
    pub fn from_masses(edges: Vec<f64>, masses: &[f64]) -> Result<Self> {
        if edges.len() != masses.len() + 1 {
            return Err(Error::InvalidDensity("need B + 1 edges for B masses"));
        }
        if masses.iter().any(|m| !(*m >= 0.0) || !m.is_finite()) {
            return Err(Error::InvalidDensity("masses must be finite and non-negative"));
        }
        let total: f64 = masses.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidDensity("masses sum to zero"));
        }
        let density = masses.iter().zip(edges.windows(2)).map(|(m, w)| m / total / (w[1] - w[0])).collect();
        Self::from_parts(edges, density, 0, 0.0, DEFAULT_BIN_CONSTANT)
    }

    /// Single-bin uniform density on `[0, 1]`.
    pub fn uniform() -> Self {
        Self::assemble(alloc::vec![0.0, 1.0], alloc::vec![1.0], 0, 0.0, DEFAULT_BIN_CONSTANT)
            .expect("uniform density is valid")
    }

    fn assemble(
        edges: Vec<f64>,
        density: Vec<f64>,
        n_samples: u64,
        pseudocount: f64,
        bin_constant: f64,
    ) -> Result<Self> {
        let mut cumulative = Vec::with_capacity(density.len());
        let mut acc = 0.0;
        for (d, w) in density.iter().zip(edges.windows(2)) {
            acc += d * (w[1] - w[0]);
            cumulative.push(acc);
        }
        if !(acc > 0.0) {
            return Err(Error::InvalidDensity("histogram has no mass"));
        }
        Ok(Self { edges, density, cumulative, n_samples, pseudocount, bin_constant })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn densities(&self) -> &[f64] {
        &self.density
    }

    pub fn bins(&self) -> usize {
        self.density.len()
    }

    pub fn n_samples(&self) -> u64 {
        self.n_samples
    }

    pub fn pseudocount(&self) -> f64 {
        self.pseudocount
    }

    pub fn bin_constant(&self) -> f64 {
        self.bin_constant
    }

    /// Probability mass of each bin.
    pub fn bin_masses(&self) -> Vec<f64> {
        self.density.iter().zip(self.edges.windows(2)).map(|(d, w)| d * (w[1] - w[0])).collect()
    }

    /// Integral of the density over `[0, 1]`, with compensated summation.
    pub fn total_mass(&self) -> f64 {
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for m in self.bin_masses() {
            let t = sum + m;
            if sum.abs() >= m.abs() {
                comp += (sum - t) + m;
            } else {
                comp += (m - t) + sum;
            }
            sum = t;
        }
        sum + comp
    }

    /// Index of the bin containing `score`; 1.0 falls in the last bin.
    pub fn bin_index(&self, score: f64) -> Result<usize> {
        check_score(score)?;
        Ok(locate(&self.edges, score))
    }

    pub fn density_at(&self, score: f64) -> Result<f64> {
        Ok(self.density[self.bin_index(score)?])
    }

    /// Draw a score: pick a bin by mass, then a uniform point inside it.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let total = self.cumulative[self.cumulative.len() - 1];
        let u: f64 = rng.random::<f64>() * total;
        let bin = self.cumulative.partition_point(|&c| c <= u).min(self.density.len() - 1);
        let lo = self.edges[bin];
        let hi = self.edges[bin + 1];
        let v: f64 = rng.random();
        (lo + v * (hi - lo)).clamp(lo, hi)
    }
}

fn uniform_edges(bins: usize) -> Vec<f64> {
    let mut edges: Vec<f64> = (0..=bins).map(|b| b as f64 / bins as f64).collect();
    edges[bins] = 1.0;
    edges
}

fn locate(edges: &[f64], score: f64) -> usize {
    let bins = edges.len() - 1;
    edges.partition_point(|&e| e <= score).saturating_sub(1).min(bins - 1)
}
