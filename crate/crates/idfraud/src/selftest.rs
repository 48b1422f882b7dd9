//! Built-in verification: the likelihood engine against the brute-force
//! oracle, and the symmetry properties every evaluation must satisfy.

use std::fmt;
use std::time::{Duration, Instant};

use idfraud_core::oracle::ORACLE_MAX_IMAGES;
use idfraud_core::{
    hypothesis_log_likelihoods, oracle_hypothesis_likelihoods, DensityPair, HistogramDensity, Hypothesis,
    HypothesisLogLikelihoods, IdPairGraph,
};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use crate::error::Result;

/// Relative tolerance between engine and oracle log-likelihoods.
pub const ORACLE_TOLERANCE: f64 = 1e-9;
const KEPT_FAILURES: usize = 10;

/// Histogram with random masses on either equal-width bins or randomly
/// placed edges.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R) -> HistogramDensity {
    let bins = rng.random_range(1..=16usize);
    let edges: Vec<f64> = if rng.random_bool(0.5) {
        (0..=bins).map(|k| k as f64 / bins as f64).collect()
    } else {
        let mut cuts: Vec<f64> = (1..bins).map(|_| rng.random_range(0.001..0.999)).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut e = vec![0.0];
        e.extend(cuts);
        e.push(1.0);
        e
    };
    let masses: Vec<f64> = (1..edges.len()).map(|_| rng.random_range(0.01..1.0)).collect();
    HistogramDensity::from_masses(edges, &masses).expect("valid random histogram")
}

pub fn random_density_pair<R: Rng + ?Sized>(rng: &mut R) -> DensityPair {
    DensityPair::new(random_density(rng), random_density(rng))
}

fn random_score<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    match rng.random_range(0..20) {
        0 => 0.0,
        1 => 1.0,
        _ => rng.random_range(0.0..=1.0),
    }
}

/// Graph with uniformly random scores, occasionally exactly 0 or 1.
pub fn random_graph<R: Rng + ?Sized>(rng: &mut R, n_probe: usize, n_gallery: usize) -> IdPairGraph {
    let mut scores = |n: usize| (0..n).map(|_| random_score(rng)).collect::<Vec<_>>();
    let probe = scores(n_probe * (n_probe - 1) / 2);
    let gallery = scores(n_gallery * (n_gallery - 1) / 2);
    let cross = scores(n_probe * n_gallery);
    IdPairGraph::anonymous(n_probe, n_gallery, probe, gallery, cross).expect("valid random graph")
}

/// Equal within `tol` relative error; infinities must coincide exactly.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    if a.is_infinite() || b.is_infinite() || a.is_nan() || b.is_nan() {
        return a == b;
    }
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub cases: usize,
    pub failed: usize,
    /// The first few failure descriptions.
    pub failures: Vec<String>,
    pub elapsed: Duration,
}

impl CheckOutcome {
    fn new(name: &'static str) -> Self {
        Self { name, cases: 0, failed: 0, failures: Vec::new(), elapsed: Duration::ZERO }
    }

    fn record(&mut self, failure: Option<String>) {
        self.cases += 1;
        if let Some(f) = failure {
            self.failed += 1;
            if self.failures.len() < KEPT_FAILURES {
                self.failures.push(f);
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failed == 0
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {}/{} cases in {:.2}s",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.cases - self.failed,
            self.cases,
            self.elapsed.as_secs_f64()
        )?;
        for msg in &self.failures {
            write!(f, "\n    {msg}")?;
        }
        Ok(())
    }
}

fn compare(a: &HypothesisLogLikelihoods, b: &HypothesisLogLikelihoods) -> Option<String> {
    let bad: Vec<String> = (0..7)
        .filter(|&k| !close(a.loglik[k], b.loglik[k], ORACLE_TOLERANCE))
        .map(|k| format!("h={} engine {} oracle {}", k + 1, a.loglik[k], b.loglik[k]))
        .collect();
    (!bad.is_empty()).then(|| bad.join("; "))
}

/// Engine versus oracle on `cases` random graphs with 2 to 4 images per
/// identity, using the largest cap that leaves the sums untruncated.
pub fn oracle_check(cases: usize, seed: u64) -> Result<CheckOutcome> {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(seed);
    let mut out = CheckOutcome::new("oracle equivalence");
    for case in 0..cases {
        let (np, ng) = (rng.random_range(2..=4), rng.random_range(2..=4));
        debug_assert!(np.max(ng) <= ORACLE_MAX_IMAGES);
        let g = random_graph(&mut rng, np, ng);
        let d = random_density_pair(&mut rng);
        let fast = hypothesis_log_likelihoods(&g, &d, np.max(ng) - 1)?;
        let slow = oracle_hypothesis_likelihoods(&g, &d)?;
        out.record(compare(&fast, &slow).map(|m| format!("case {case} ({np},{ng}): {m}")));
    }
    out.elapsed = start.elapsed();
    Ok(out)
}

/// Swap permutation, relabeling invariance and the uniform-density
/// degeneracy on `cases` random graphs of 1 to 6 images per identity.
pub fn symmetry_check(cases: usize, seed: u64) -> Result<CheckOutcome> {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(seed);
    let mut out = CheckOutcome::new("symmetry");
    for case in 0..cases {
        let (np, ng) = (rng.random_range(1..=6), rng.random_range(1..=6));
        let m_cap = rng.random_range(1..=5);
        let g = random_graph(&mut rng, np, ng);
        let d = random_density_pair(&mut rng);
        let mut problems = Vec::new();

        let base = hypothesis_log_likelihoods(&g, &d, m_cap)?;
        let swapped = hypothesis_log_likelihoods(&g.swapped(), &d, m_cap)?;
        for h in Hypothesis::ALL {
            if base.get(h).to_bits() != swapped.get(h.swapped()).to_bits() {
                problems.push(format!("swap h={h}: {} vs {}", base.get(h), swapped.get(h.swapped())));
            }
        }

        let mut p: Vec<usize> = (0..np).collect();
        let mut q: Vec<usize> = (0..ng).collect();
        p.shuffle(&mut rng);
        q.shuffle(&mut rng);
        let relabeled = hypothesis_log_likelihoods(&g.permuted(&p, &q)?, &d, m_cap)?;
        if base.loglik.map(f64::to_bits) != relabeled.loglik.map(f64::to_bits) {
            problems.push(format!("relabel {:?} vs {:?}", base.loglik, relabeled.loglik));
        }

        let uniform = hypothesis_log_likelihoods(&g, &DensityPair::uniform(), m_cap)?;
        for k in 0..7 {
            let expected = if uniform.terms_summed[k] > 0 { 0.0 } else { f64::NEG_INFINITY };
            if uniform.loglik[k] != expected {
                problems.push(format!("uniform h={}: {}", k + 1, uniform.loglik[k]));
            }
        }
        out.record(
            (!problems.is_empty())
                .then(|| format!("case {case} ({np},{ng},M={m_cap}): {}", problems.join("; "))),
        );
    }
    out.elapsed = start.elapsed();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelfTestReport {
    pub checks: Vec<CheckOutcome>,
}

impl SelfTestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckOutcome::passed)
    }
}

impl fmt::Display for SelfTestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Symmetry checks always; the oracle comparison when `oracle` is set.
pub fn run_self_test(oracle: bool, cases: usize, seed: u64) -> Result<SelfTestReport> {
    let mut checks = vec![symmetry_check(cases, seed)?];
    if oracle {
        checks.push(oracle_check(cases, seed.wrapping_add(1))?);
    }
    Ok(SelfTestReport { checks })
}
