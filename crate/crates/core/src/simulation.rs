//! Synthetic identity pairs with known ground truth, and confusion-matrix
//! tabulation of the classifier's decisions on them.

use alloc::vec::Vec;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decision::{decide_among, DecisionRule, PriorVector};
use crate::error::{Error, Result};
use crate::graph::{pair_count, term_match_edges, Hypothesis, IdPairGraph};
use crate::likelihood::{DensityPair, LikelihoodEngine, Normalization};
use crate::subsets::VertexSet;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_probe: usize,
    pub n_gallery: usize,
    pub hypotheses: Vec<Hypothesis>,
    pub trials_per_hypothesis: u32,
    /// Generator densities.
    pub densities: DensityPair,
    /// Fraud-set sizes are drawn uniformly from `1..=min(max_fraud, n - 1)`.
    pub max_fraud: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials_per_hypothesis == 0 {
            return Err(Error::param("trials per hypothesis", "must be at least 1"));
        }
        if self.hypotheses.is_empty() {
            return Err(Error::param("hypotheses", "must not be empty"));
        }
        if self.max_fraud == 0 {
            return Err(Error::param("maximum fraud-set size", "must be at least 1"));
        }
        for &h in &self.hypotheses {
            admissible(h, self.n_probe, self.n_gallery)?;
        }
        Ok(())
    }
}

fn admissible(h: Hypothesis, n_probe: usize, n_gallery: usize) -> Result<()> {
    if n_probe == 0 || n_gallery == 0 {
        return Err(Error::param("identity size", "must contain at least one image"));
    }
    if (h.needs_probe_subset() && n_probe < 2) || (h.needs_gallery_subset() && n_gallery < 2) {
        return Err(Error::param("hypothesis", "impossible for these identity sizes"));
    }
    Ok(())
}

/// What was planted in a generated pair. Fraud sets are the images outside
/// the summation subsets `S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroundTruth {
    pub hypothesis: Hypothesis,
    pub probe_fraud: Option<VertexSet>,
    pub gallery_fraud: Option<VertexSet>,
}

fn fraud_set<R: Rng + ?Sized>(rng: &mut R, n: usize, max_fraud: usize) -> VertexSet {
    let largest = max_fraud.min(n - 1);
    let k = rng.random_range(1..=largest);
    VertexSet::from_indices(index::sample(rng, n, k).iter())
}

/// Draw one pair under hypothesis `h`: match-set edges from `p_M`, all
/// other edges from `p_N`.
pub fn generate_pair<R: Rng + ?Sized>(
    h: Hypothesis,
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<(IdPairGraph, GroundTruth)> {
    let (np, ng) = (cfg.n_probe, cfg.n_gallery);
    admissible(h, np, ng)?;
    if cfg.max_fraud == 0 {
        return Err(Error::param("maximum fraud-set size", "must be at least 1"));
    }
    let probe_fraud = h.needs_probe_subset().then(|| fraud_set(rng, np, cfg.max_fraud));
    let gallery_fraud = h.needs_gallery_subset().then(|| fraud_set(rng, ng, cfg.max_fraud));

    let shape = IdPairGraph::anonymous(
        np,
        ng,
        alloc::vec![0.0; pair_count(np)],
        alloc::vec![0.0; pair_count(ng)],
        alloc::vec![0.0; np * ng],
    )?;
    let matches = term_match_edges(
        &shape,
        h,
        probe_fraud.map(|f| f.complement(np)),
        gallery_fraud.map(|f| f.complement(ng)),
    )?;
    let d = &cfg.densities;
    let mut draw = |members: &[bool]| -> Vec<f64> {
        members
            .iter()
            .map(|&m| if m { d.match_density.sample(rng) } else { d.nonmatch_density.sample(rng) })
            .collect()
    };
    let probe = draw(&matches.probe);
    let gallery = draw(&matches.gallery);
    let cross = draw(&matches.cross);
    let graph = IdPairGraph::anonymous(np, ng, probe, gallery, cross)?;
    Ok((graph, GroundTruth { hypothesis: h, probe_fraud, gallery_fraud }))
}

/// Independent random stream for one trial.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream id of trial `trial` under hypothesis `h`.
pub fn trial_stream(h: Hypothesis, trial: u32) -> u64 {
    (h.number() as u64) << 32 | trial as u64
}

/// Classifier settings shared by simulations and batch runs.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierConfig {
    pub m_cap: usize,
    pub rule: DecisionRule,
    pub priors: PriorVector,
    pub normalization: Normalization,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            m_cap: 3,
            rule: DecisionRule::Map,
            priors: PriorVector::default(),
            normalization: Normalization::TruncatedCount,
        }
    }
}

impl ClassifierConfig {
    pub fn engine(&self, max_images: usize) -> Result<LikelihoodEngine> {
        LikelihoodEngine::new(self.m_cap, max_images, self.normalization)
    }
}

/// Generate and classify one trial; the decision is restricted to the
/// simulated hypotheses.
pub fn run_trial(
    cfg: &SimConfig,
    classifier: &ClassifierConfig,
    engine: &LikelihoodEngine,
    h: Hypothesis,
    trial: u32,
) -> Result<Hypothesis> {
    let mut rng = trial_rng(cfg.seed, trial_stream(h, trial));
    let (graph, _) = generate_pair(h, cfg, &mut rng)?;
    let ll = engine.evaluate(&graph, &cfg.densities)?;
    decide_among(classifier.rule, &ll, &classifier.priors, &cfg.hypotheses)
}

/// Counts indexed by (truth, decision) over a fixed list of hypotheses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    hypotheses: Vec<Hypothesis>,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(hypotheses: Vec<Hypothesis>) -> Self {
        let k = hypotheses.len();
        Self { hypotheses, counts: alloc::vec![0; k * k] }
    }

    fn position(&self, h: Hypothesis) -> Result<usize> {
        self.hypotheses
            .iter()
            .position(|&x| x == h)
            .ok_or(Error::param("hypothesis", "not tracked by this confusion matrix"))
    }

    pub fn record(&mut self, truth: Hypothesis, decision: Hypothesis) -> Result<()> {
        let k = self.hypotheses.len();
        let cell = self.position(truth)? * k + self.position(decision)?;
        self.counts[cell] += 1;
        Ok(())
    }

    pub fn hypotheses(&self) -> &[Hypothesis] {
        &self.hypotheses
    }

    pub fn count(&self, truth: Hypothesis, decision: Hypothesis) -> u64 {
        match (self.position(truth), self.position(decision)) {
            (Ok(t), Ok(d)) => self.counts[t * self.hypotheses.len() + d],
            _ => 0,
        }
    }

    pub fn row(&self, truth: Hypothesis) -> &[u64] {
        let k = self.hypotheses.len();
        match self.position(truth) {
            Ok(t) => &self.counts[t * k..(t + 1) * k],
            Err(_) => &[],
        }
    }

    pub fn row_total(&self, truth: Hypothesis) -> u64 {
        self.row(truth).iter().sum()
    }

    /// Fraction of `truth`'s trials decided correctly.
    pub fn row_accuracy(&self, truth: Hypothesis) -> f64 {
        let total = self.row_total(truth);
        if total == 0 {
            return 0.0;
        }
        self.count(truth, truth) as f64 / total as f64
    }

    pub fn accuracy(&self) -> f64 {
        let total: u64 = self.counts.iter().sum();
        if total == 0 {
            return 0.0;
        }
        let diag: u64 = self.hypotheses.iter().map(|&h| self.count(h, h)).sum();
        diag as f64 / total as f64
    }
}

/// Sequential confusion experiment; trial `t` of hypothesis `h` always uses
/// the same random stream, so results do not depend on evaluation order.
pub fn run_confusion(cfg: &SimConfig, classifier: &ClassifierConfig) -> Result<ConfusionMatrix> {
    cfg.validate()?;
    let engine = classifier.engine(cfg.n_probe.max(cfg.n_gallery))?;
    let mut matrix = ConfusionMatrix::new(cfg.hypotheses.clone());
    for &h in &cfg.hypotheses {
        for t in 0..cfg.trials_per_hypothesis {
            let d = run_trial(cfg, classifier, &engine, h, t)?;
            matrix.record(h, d)?;
        }
    }
    Ok(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn config(hs: &[u8]) -> SimConfig {
        SimConfig {
            n_probe: 3,
            n_gallery: 3,
            hypotheses: hs.iter().map(|&h| Hypothesis::from_number(h).unwrap()).collect(),
            trials_per_hypothesis: 20,
            densities: fixtures::separated(),
            max_fraud: 3,
            seed: 11,
        }
    }

    fn step_generator() -> DensityPair {
        use crate::density::HistogramDensity;
        let edges = alloc::vec![0.0, 0.5, 1.0];
        DensityPair::new(
            HistogramDensity::from_masses(edges.clone(), &[0.0, 1.0]).unwrap(),
            HistogramDensity::from_masses(edges, &[1.0, 0.0]).unwrap(),
        )
    }

    #[test]
    fn generated_structure_follows_hypothesis() {
        // match edges land in [0.5, 1], non-match edges in [0, 0.5)
        let mut cfg = config(&[1, 2, 4]);
        cfg.densities = step_generator();
        let mut rng = trial_rng(3, 0);
        let high = |v: &[f64]| v.iter().filter(|&&s| s >= 0.5).count();

        let (g, truth) = generate_pair(Hypothesis::NoFraud, &cfg, &mut rng).unwrap();
        assert_eq!(truth.probe_fraud, None);
        assert_eq!(high(g.probe_scores()) + high(g.gallery_scores()), 6);
        assert_eq!(high(g.cross_scores()), 0);

        let (g, _) = generate_pair(Hypothesis::MultiId, &cfg, &mut rng).unwrap();
        assert_eq!(high(g.probe_scores()) + high(g.gallery_scores()) + high(g.cross_scores()), 15);

        cfg.max_fraud = 1;
        let (g, truth) = generate_pair(Hypothesis::ProbeMixedId, &cfg, &mut rng).unwrap();
        let fraud = truth.probe_fraud.unwrap();
        assert_eq!(fraud.len(), 1);
        let stray = fraud.iter().next().unwrap();
        for j in 0..3 {
            assert!(g.cross_score(stray, j) >= 0.5);
        }
        assert_eq!(high(g.cross_scores()), 3);
        assert_eq!(high(g.probe_scores()), 1);
    }

    #[test]
    fn inadmissible_hypotheses() {
        let mut cfg = config(&[3]);
        cfg.n_probe = 1;
        assert!(cfg.validate().is_err());
        let mut rng = trial_rng(0, 0);
        assert!(generate_pair(Hypothesis::CrossedId, &cfg, &mut rng).is_err());
        assert!(generate_pair(Hypothesis::GalleryMismatch, &cfg, &mut rng).is_ok());
        let mut cfg = config(&[1]);
        cfg.trials_per_hypothesis = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn confusion_rows_and_determinism() {
        let cfg = config(&[1, 2, 4, 6]);
        let classifier = ClassifierConfig { rule: DecisionRule::Ml, ..Default::default() };
        let a = run_confusion(&cfg, &classifier).unwrap();
        let b = run_confusion(&cfg, &classifier).unwrap();
        assert_eq!(a, b);
        for &h in a.hypotheses() {
            assert_eq!(a.row_total(h), 20);
        }
        assert_eq!(a.row(Hypothesis::ProbeMismatch), &[] as &[u64]);
    }
}
