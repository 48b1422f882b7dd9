//! Log-likelihoods of the seven hypotheses for one pair graph.
//!
//! Under the edge-independence assumption the likelihood of a term is a
//! product over all edges of `p_M(score)` for its match edges and
//! `p_N(score)` for the rest. Everything is evaluated in the log domain.
//!
//! Per-edge log densities are converted once to 80-bit binary fixed point
//! (with a separate count of zero densities) so that every term's
//! log-likelihood is an exact integer sum. Term values therefore do not
//! depend on summation order, and the mixture sums over subsets are
//! accumulated in fixed point as well. As a result the seven values are
//! bit-identical under any relabeling of the images within an identity and
//! under exchanging probe and gallery.

use alloc::vec::Vec;
use core::ops::{Add, AddAssign, Neg, Sub};

use crate::density::HistogramDensity;
use crate::error::{Error, Result};
use crate::graph::{EdgeSet, Hypothesis, IdPairGraph};
use crate::subsets::{reduced_power_set_size, FraudSetTable, TableSet, VertexSet};

/// Match and non-match score densities.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityPair {
    pub match_density: HistogramDensity,
    pub nonmatch_density: HistogramDensity,
}

impl DensityPair {
    pub fn new(match_density: HistogramDensity, nonmatch_density: HistogramDensity) -> Self {
        Self { match_density, nonmatch_density }
    }

    pub fn uniform() -> Self {
        Self::new(HistogramDensity::uniform(), HistogramDensity::uniform())
    }
}

/// How a truncated subset sum is turned into an average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// Divide by the number of terms actually summed.
    #[default]
    TruncatedCount,
    /// Divide by the size of the full reduced power set(s), as if the
    /// omitted terms were zero.
    FullReducedSet,
}

/// `log p(R | H = h)` for `h = 1..=7`, indexed by `Hypothesis::index`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypothesisLogLikelihoods {
    pub loglik: [f64; 7],
    pub terms_summed: [u64; 7],
    pub m_cap_used: u32,
}

impl HypothesisLogLikelihoods {
    pub fn get(&self, h: Hypothesis) -> f64 {
        self.loglik[h.index()]
    }

    pub fn terms(&self, h: Hypothesis) -> u64 {
        self.terms_summed[h.index()]
    }

    /// Build from raw log-likelihoods, one term each.
    pub fn from_logliks(loglik: [f64; 7]) -> Self {
        Self { loglik, terms_summed: [1; 7], m_cap_used: 0 }
    }
}

const FRAC_BITS: i32 = 80;
const SUM_BITS: i32 = 100;
// exp(t) < 2^-SUM_BITS below this, so the term contributes nothing.
const NEGLIGIBLE: f64 = -70.0;

/// Exact log-domain accumulator: a fixed-point finite part plus the number
/// of zero-density factors (each contributing `-inf`).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct LogSum {
    fixed: i128,
    zeros: i64,
}

impl LogSum {
    fn from_ln(x: f64) -> Self {
        if x == f64::NEG_INFINITY {
            LogSum { fixed: 0, zeros: 1 }
        } else {
            LogSum { fixed: (x * libm::ldexp(1.0, FRAC_BITS)) as i128, zeros: 0 }
        }
    }

    fn to_f64(self) -> f64 {
        if self.zeros > 0 {
            f64::NEG_INFINITY
        } else {
            libm::ldexp(self.fixed as f64, -FRAC_BITS)
        }
    }

    fn twice(self) -> Self {
        self + self
    }
}

impl Add for LogSum {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        LogSum { fixed: self.fixed + o.fixed, zeros: self.zeros + o.zeros }
    }
}

impl AddAssign for LogSum {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl Sub for LogSum {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        LogSum { fixed: self.fixed - o.fixed, zeros: self.zeros - o.zeros }
    }
}

impl Neg for LogSum {
    type Output = Self;
    fn neg(self) -> Self {
        LogSum { fixed: -self.fixed, zeros: -self.zeros }
    }
}

fn edge_logs(d: &DensityPair, score: f64) -> Result<(LogSum, LogSum)> {
    let m = d.match_density.density_at(score)?;
    let n = d.nonmatch_density.density_at(score)?;
    Ok((LogSum::from_ln(libm::log(m)), LogSum::from_ln(libm::log(n))))
}

/// `log L(E)`: match density on `match_edges`, non-match density elsewhere.
pub fn log_match_likelihood(g: &IdPairGraph, match_edges: &EdgeSet, d: &DensityPair) -> Result<f64> {
    if !match_edges.fits(g) {
        return Err(Error::param("edge set", "does not belong to this graph"));
    }
    let mut total = LogSum::default();
    let parts = [
        (g.probe_scores(), &match_edges.probe),
        (g.gallery_scores(), &match_edges.gallery),
        (g.cross_scores(), &match_edges.cross),
    ];
    for (scores, members) in parts {
        for (&s, &is_match) in scores.iter().zip(members) {
            let (m, n) = edge_logs(d, s)?;
            total += if is_match { m } else { n };
        }
    }
    Ok(total.to_f64())
}

/// Order-independent log of the average of `exp(values)`.
struct MixtureSum {
    values: Vec<f64>,
}

impl MixtureSum {
    fn with_capacity(n: usize) -> Self {
        Self { values: Vec::with_capacity(n) }
    }

    fn push(&mut self, v: LogSum) {
        self.values.push(v.to_f64());
    }

    /// Returns `log(sum_i exp(v_i) / divisor)`, `-inf` for an empty or
    /// all-zero sum.
    fn log_mean(&self, divisor: f64) -> f64 {
        let max = self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let scale = libm::ldexp(1.0, SUM_BITS);
        let mut acc: u128 = 0;
        for &v in &self.values {
            let t = v - max;
            if t >= NEGLIGIBLE {
                acc += (libm::exp(t) * scale) as u128;
            }
        }
        max + (libm::log(libm::ldexp(acc as f64, -SUM_BITS)) - libm::log(divisor))
    }

    fn len(&self) -> usize {
        self.values.len()
    }
}

/// Per-graph sums of `delta = log p_M - log p_N` used to assemble terms.
struct SideStats {
    n: usize,
    /// Symmetric `n x n` matrix of within-identity deltas.
    delta: Vec<LogSum>,
    /// Sum of each vertex's within-identity deltas.
    row: Vec<LogSum>,
    /// Sum of each vertex's cross deltas.
    cross_row: Vec<LogSum>,
    total: LogSum,
}

impl SideStats {
    fn new(n: usize) -> Self {
        Self {
            n,
            delta: alloc::vec![LogSum::default(); n * n],
            row: alloc::vec![LogSum::default(); n],
            cross_row: alloc::vec![LogSum::default(); n],
            total: LogSum::default(),
        }
    }

    fn set(&mut self, i: usize, j: usize, v: LogSum) {
        self.delta[i * self.n + j] = v;
        self.delta[j * self.n + i] = v;
        self.row[i] += v;
        self.row[j] += v;
        self.total += v;
    }

    /// Delta over edges inside `f`.
    fn inside(&self, f: VertexSet) -> LogSum {
        let mut s = LogSum::default();
        let mut rest = f.0;
        while rest != 0 {
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let mut later = rest;
            while later != 0 {
                let j = later.trailing_zeros() as usize;
                later &= later - 1;
                s += self.delta[i * self.n + j];
            }
        }
        s
    }

    /// Returns (delta inside the complement of `f`, delta inside `f`).
    fn split(&self, f: VertexSet) -> (LogSum, LogSum) {
        let inner = self.inside(f);
        let touching: LogSum = f.iter().fold(LogSum::default(), |a, i| a + self.row[i]) - inner;
        (self.total - touching, inner)
    }

    fn cross_of(&self, f: VertexSet) -> LogSum {
        f.iter().fold(LogSum::default(), |a, i| a + self.cross_row[i])
    }
}

struct PairStats {
    /// `sum of log p_N` over every edge.
    base: LogSum,
    probe: SideStats,
    gallery: SideStats,
    /// Row-major `n_probe x n_gallery` cross deltas.
    cross: Vec<LogSum>,
}

impl PairStats {
    fn new(g: &IdPairGraph, d: &DensityPair) -> Result<Self> {
        let (np, ng) = (g.n_probe(), g.n_gallery());
        let mut base = LogSum::default();
        let mut probe = SideStats::new(np);
        let mut gallery = SideStats::new(ng);
        for i in 0..np {
            for j in i + 1..np {
                let (m, n) = edge_logs(d, g.probe_score(i, j))?;
                base += n;
                probe.set(i, j, m - n);
            }
        }
        for i in 0..ng {
            for j in i + 1..ng {
                let (m, n) = edge_logs(d, g.gallery_score(i, j))?;
                base += n;
                gallery.set(i, j, m - n);
            }
        }
        let mut cross = Vec::with_capacity(np * ng);
        for i in 0..np {
            for j in 0..ng {
                let (m, n) = edge_logs(d, g.cross_score(i, j))?;
                base += n;
                let delta = m - n;
                cross.push(delta);
                probe.cross_row[i] += delta;
                gallery.cross_row[j] += delta;
            }
        }
        Ok(Self { base, probe, gallery, cross })
    }
}

/// Evaluates the seven hypothesis log-likelihoods against shared fraud-set
/// tables.
#[derive(Debug, Clone)]
pub struct LikelihoodEngine {
    tables: TableSet,
    normalization: Normalization,
}

impl LikelihoodEngine {
    /// Engine for identities of up to `max_images` images with at most
    /// `m_cap` fraudulent images per identity.
    pub fn new(m_cap: usize, max_images: usize, normalization: Normalization) -> Result<Self> {
        Ok(Self { tables: TableSet::new(m_cap, max_images)?, normalization })
    }

    pub fn m_cap(&self) -> usize {
        self.tables.m_cap()
    }

    pub fn max_images(&self) -> usize {
        self.tables.max_n()
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn evaluate(&self, g: &IdPairGraph, d: &DensityPair) -> Result<HypothesisLogLikelihoods> {
        let (np, ng) = (g.n_probe(), g.n_gallery());
        let max = self.tables.max_n();
        let t1 = self.tables.get(np).ok_or(Error::IdTooLarge { images: np, max })?;
        let t2 = self.tables.get(ng).ok_or(Error::IdTooLarge { images: ng, max })?;
        let stats = PairStats::new(g, d)?;
        Ok(self.assemble(&stats, t1, t2))
    }

    fn divisor(&self, summed: usize, full: u128) -> f64 {
        match self.normalization {
            Normalization::TruncatedCount => summed as f64,
            Normalization::FullReducedSet => full as f64,
        }
    }

    fn assemble(&self, s: &PairStats, t1: &FraudSetTable, t2: &FraudSetTable) -> HypothesisLogLikelihoods {
        let (p, q) = (&s.probe, &s.gallery);
        let (np, ng) = (p.n, q.n);
        let full1 = reduced_power_set_size(np as u32);
        let full2 = reduced_power_set_size(ng as u32);
        let mut loglik = [f64::NEG_INFINITY; 7];
        let mut terms = [0u64; 7];

        loglik[0] = (s.base + p.total + q.total).to_f64();
        loglik[1] =
            (s.base + p.total + q.total + p.cross_row.iter().fold(LogSum::default(), |a, &b| a + b)).to_f64();
        terms[0] = 1;
        terms[1] = 1;

        // Per fraud set: (delta over E(S) and E(F) combined, delta over E(S)).
        let side_terms = |side: &SideStats, table: &FraudSetTable| -> Vec<(LogSum, LogSum)> {
            table
                .subsets()
                .iter()
                .map(|&f| {
                    let (kept, inner) = side.split(f);
                    (kept + inner, kept)
                })
                .collect()
        };
        let probe_terms = side_terms(p, t1);
        let gallery_terms = side_terms(q, t2);

        // h = 3, 4 over probe fraud sets F = V1 \ S.
        let mut mismatch = MixtureSum::with_capacity(probe_terms.len());
        let mut mixed = MixtureSum::with_capacity(probe_terms.len());
        for (&f, &(both, kept)) in t1.subsets().iter().zip(&probe_terms) {
            mismatch.push(s.base + kept + q.total);
            mixed.push(s.base + both + q.total + p.cross_of(f));
        }
        if mismatch.len() > 0 {
            let div = self.divisor(mismatch.len(), full1);
            loglik[2] = mismatch.log_mean(div);
            loglik[3] = mixed.log_mean(div);
            terms[2] = mismatch.len() as u64;
            terms[3] = mixed.len() as u64;
        }

        // h = 5, 6 mirrored over gallery fraud sets.
        let mut mismatch = MixtureSum::with_capacity(gallery_terms.len());
        let mut mixed = MixtureSum::with_capacity(gallery_terms.len());
        for (&f, &(both, kept)) in t2.subsets().iter().zip(&gallery_terms) {
            mismatch.push(s.base + kept + p.total);
            mixed.push(s.base + both + p.total + q.cross_of(f));
        }
        if mismatch.len() > 0 {
            let div = self.divisor(mismatch.len(), full2);
            loglik[4] = mismatch.log_mean(div);
            loglik[5] = mixed.log_mean(div);
            terms[4] = mismatch.len() as u64;
            terms[5] = mixed.len() as u64;
        }

        // h = 7: clusters S1 + F2 and S2 + F1. Their match edges are
        // E(S1), E(F1), E(S2), E(F2), cross(F1, S2) and cross(S1, F2).
        if !t1.is_empty() && !t2.is_empty() {
            let count = t1.term_count() * t2.term_count();
            let mut crossed = MixtureSum::with_capacity(count);
            let mut linked = alloc::vec![LogSum::default(); ng];
            for (&f1, &(both1, _)) in t1.subsets().iter().zip(&probe_terms) {
                // linked[j] = cross delta between F1 and gallery vertex j
                for (j, l) in linked.iter_mut().enumerate() {
                    *l = f1.iter().fold(LogSum::default(), |a, i| a + s.cross[i * ng + j]);
                }
                let left = s.base + both1 + p.cross_of(f1);
                for (&f2, &(both2, _)) in t2.subsets().iter().zip(&gallery_terms) {
                    let between = f2.iter().fold(LogSum::default(), |a, j| a + linked[j]);
                    crossed.push(left + both2 + q.cross_of(f2) - between.twice());
                }
            }
            loglik[6] = crossed.log_mean(self.divisor(count, full1 * full2));
            terms[6] = count as u64;
        }

        HypothesisLogLikelihoods { loglik, terms_summed: terms, m_cap_used: t1.m_cap() as u32 }
    }
}

/// One-shot evaluation that builds the fraud-set tables it needs.
pub fn hypothesis_log_likelihoods(
    g: &IdPairGraph,
    d: &DensityPair,
    m_cap: usize,
) -> Result<HypothesisLogLikelihoods> {
    let engine = LikelihoodEngine::new(m_cap, g.n_probe().max(g.n_gallery()), Normalization::TruncatedCount)?;
    engine.evaluate(g, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::term_match_edges;
    use alloc::vec;

    fn step_pair() -> DensityPair {
        // all match mass on [0.5, 1], all non-match mass on [0, 0.5), pseudocount 0.5 over 100 samples
        let edges = vec![0.0, 0.5, 1.0];
        let m = HistogramDensity::from_masses(edges.clone(), &[0.5, 100.5]).unwrap();
        let n = HistogramDensity::from_masses(edges, &[100.5, 0.5]).unwrap();
        DensityPair::new(m, n)
    }

    #[test]
    fn fixed_point_round_trip() {
        for x in [0.0, 1.0, -1.5, 3.25, -0.1, 11.5, -690.0] {
            let back = LogSum::from_ln(x).to_f64();
            assert!((back - x).abs() < 1e-20 + x.abs() * 1e-15, "{x} -> {back}");
        }
        assert_eq!(LogSum::from_ln(f64::NEG_INFINITY).to_f64(), f64::NEG_INFINITY);
    }

    #[test]
    fn uniform_densities_give_zero() {
        let g = IdPairGraph::anonymous(2, 2, vec![0.3], vec![0.8], vec![0.1, 0.2, 0.9, 0.5]).unwrap();
        let d = DensityPair::uniform();
        let set = term_match_edges(&g, Hypothesis::NoFraud, None, None).unwrap();
        assert_eq!(log_match_likelihood(&g, &set, &d).unwrap(), 0.0);
        let ll = hypothesis_log_likelihoods(&g, &d, 3).unwrap();
        assert_eq!(ll.loglik, [0.0; 7]);
    }

    #[test]
    fn single_cross_edge() {
        let g = IdPairGraph::anonymous(1, 1, vec![], vec![], vec![0.3]).unwrap();
        let d = step_pair();
        let none = EdgeSet::empty(&g);
        let expected = libm::log(d.nonmatch_density.density_at(0.3).unwrap());
        assert!((log_match_likelihood(&g, &none, &d).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn singleton_sides_are_impossible() {
        let g = IdPairGraph::anonymous(1, 2, vec![], vec![0.7], vec![0.2, 0.6]).unwrap();
        let ll = hypothesis_log_likelihoods(&g, &step_pair(), 3).unwrap();
        for h in [2, 3, 6] {
            assert_eq!(ll.loglik[h], f64::NEG_INFINITY);
            assert_eq!(ll.terms_summed[h], 0);
        }
        for h in [0, 1, 4, 5] {
            assert!(ll.loglik[h].is_finite());
        }
    }

    #[test]
    fn all_high_scores_favor_multi_id() {
        let g = IdPairGraph::anonymous(2, 2, vec![0.9], vec![0.9], vec![0.9; 4]).unwrap();
        let ll = hypothesis_log_likelihoods(&g, &step_pair(), 1).unwrap();
        let best = (0..7).max_by(|&a, &b| ll.loglik[a].total_cmp(&ll.loglik[b])).unwrap();
        assert_eq!(best, 1);
    }

    #[test]
    fn zero_density_edges_are_negative_infinity() {
        let edges = vec![0.0, 0.5, 1.0];
        let m = HistogramDensity::from_masses(edges.clone(), &[0.0, 1.0]).unwrap();
        let n = HistogramDensity::from_masses(edges, &[1.0, 0.0]).unwrap();
        let d = DensityPair::new(m, n);
        let g = IdPairGraph::anonymous(2, 2, vec![0.9], vec![0.9], vec![0.1; 4]).unwrap();
        let ll = hypothesis_log_likelihoods(&g, &d, 1).unwrap();
        assert!(ll.loglik[0].is_finite());
        assert_eq!(ll.loglik[1], f64::NEG_INFINITY);
        assert_eq!(ll.loglik[2], f64::NEG_INFINITY);
    }

    #[test]
    fn oversized_identity_is_rejected() {
        let engine = LikelihoodEngine::new(3, 2, Normalization::TruncatedCount).unwrap();
        let g = IdPairGraph::anonymous(3, 1, vec![0.5; 3], vec![], vec![0.5; 3]).unwrap();
        assert!(matches!(engine.evaluate(&g, &step_pair()), Err(Error::IdTooLarge { .. })));
    }
}
