//! Brute-force reference for the seven likelihoods on small graphs.
//!
//! Enumerates every proper non-empty subset directly, multiplies densities
//! in the linear domain, sums with compensated summation and applies the
//! exact `1 / (2^n - 2)` prefactors. It shares nothing with the likelihood
//! engine beyond the graph and density types, and is deliberately slow.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::IdPairGraph;
use crate::likelihood::{DensityPair, HypothesisLogLikelihoods};

pub const ORACLE_MAX_IMAGES: usize = 6;

/// Neumaier-compensated running sum.
#[derive(Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

struct Densities {
    np: usize,
    ng: usize,
    // (p_M, p_N) per edge
    probe: Vec<(usize, usize, f64, f64)>,
    gallery: Vec<(usize, usize, f64, f64)>,
    cross: Vec<(usize, usize, f64, f64)>,
}

fn lookup(d: &DensityPair, s: f64) -> Result<(f64, f64)> {
    Ok((d.match_density.density_at(s)?, d.nonmatch_density.density_at(s)?))
}

impl Densities {
    fn new(g: &IdPairGraph, d: &DensityPair) -> Result<Self> {
        let (np, ng) = (g.n_probe(), g.n_gallery());
        let mut probe = Vec::new();
        for i in 0..np {
            for j in i + 1..np {
                let (m, n) = lookup(d, g.probe_score(i, j))?;
                probe.push((i, j, m, n));
            }
        }
        let mut gallery = Vec::new();
        for i in 0..ng {
            for j in i + 1..ng {
                let (m, n) = lookup(d, g.gallery_score(i, j))?;
                gallery.push((i, j, m, n));
            }
        }
        let mut cross = Vec::new();
        for i in 0..np {
            for j in 0..ng {
                let (m, n) = lookup(d, g.cross_score(i, j))?;
                cross.push((i, j, m, n));
            }
        }
        Ok(Self { np, ng, probe, gallery, cross })
    }

    /// L(E) where the closures decide which edges are in E.
    fn likelihood(
        &self,
        probe_match: impl Fn(usize, usize) -> bool,
        gallery_match: impl Fn(usize, usize) -> bool,
        cross_match: impl Fn(usize, usize) -> bool,
    ) -> f64 {
        let mut l = 1.0;
        for &(i, j, m, n) in &self.probe {
            l *= if probe_match(i, j) { m } else { n };
        }
        for &(i, j, m, n) in &self.gallery {
            l *= if gallery_match(i, j) { m } else { n };
        }
        for &(i, j, m, n) in &self.cross {
            l *= if cross_match(i, j) { m } else { n };
        }
        l
    }
}

fn has(mask: u32, i: usize) -> bool {
    mask >> i & 1 == 1
}

fn proper_subsets(n: usize) -> core::ops::Range<u32> {
    if n < 2 {
        0..0
    } else {
        1..(1u32 << n) - 1
    }
}

fn log_average(sum: &CompensatedSum, count: u32) -> f64 {
    if count == 0 {
        f64::NEG_INFINITY
    } else {
        libm::log(sum.value() / count as f64)
    }
}

/// Exhaustive, untruncated likelihoods of the seven hypotheses.
pub fn oracle_hypothesis_likelihoods(g: &IdPairGraph, d: &DensityPair) -> Result<HypothesisLogLikelihoods> {
    let (np, ng) = (g.n_probe(), g.n_gallery());
    if np > ORACLE_MAX_IMAGES || ng > ORACLE_MAX_IMAGES {
        return Err(Error::OracleTooLarge { n_probe: np, n_gallery: ng });
    }
    let e = Densities::new(g, d)?;
    let all = |_: usize, _: usize| true;
    let none = |_: usize, _: usize| false;

    // H=1: E1 and E2 match, E12 does not.  H=2: everything matches.
    let h1 = e.likelihood(all, all, none);
    let h2 = e.likelihood(all, all, all);

    let mut h3 = CompensatedSum::default();
    let mut h4 = CompensatedSum::default();
    let mut c1 = 0u32;
    for s in proper_subsets(e.np) {
        // L(E(S) u E2)
        h3.add(e.likelihood(|i, j| has(s, i) && has(s, j), all, none));
        // L(E(S) u E(V1\S u V2))
        h4.add(e.likelihood(|i, j| has(s, i) == has(s, j), all, |i, _| !has(s, i)));
        c1 += 1;
    }

    let mut h5 = CompensatedSum::default();
    let mut h6 = CompensatedSum::default();
    let mut c2 = 0u32;
    for s in proper_subsets(e.ng) {
        h5.add(e.likelihood(all, |i, j| has(s, i) && has(s, j), none));
        h6.add(e.likelihood(all, |i, j| has(s, i) == has(s, j), |_, j| !has(s, j)));
        c2 += 1;
    }

    // L(E(S1 u V2\S2) u E(S2 u V1\S1))
    let mut h7 = CompensatedSum::default();
    let mut c7 = 0u32;
    for s1 in proper_subsets(e.np) {
        for s2 in proper_subsets(e.ng) {
            h7.add(e.likelihood(
                |i, j| has(s1, i) == has(s1, j),
                |i, j| has(s2, i) == has(s2, j),
                |i, j| has(s1, i) != has(s2, j),
            ));
            c7 += 1;
        }
    }

    Ok(HypothesisLogLikelihoods {
        loglik: [
            libm::log(h1),
            libm::log(h2),
            log_average(&h3, c1),
            log_average(&h4, c1),
            log_average(&h5, c2),
            log_average(&h6, c2),
            log_average(&h7, c7),
        ],
        terms_summed: [1, 1, c1 as u64, c1 as u64, c2 as u64, c2 as u64, c7 as u64],
        m_cap_used: np.max(ng).saturating_sub(1) as u32,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::HistogramDensity;
    use alloc::vec;

    fn step_pair() -> DensityPair {
        let edges = vec![0.0, 0.5, 1.0];
        DensityPair::new(
            HistogramDensity::from_masses(edges.clone(), &[0.5, 100.5]).unwrap(),
            HistogramDensity::from_masses(edges, &[100.5, 0.5]).unwrap(),
        )
    }

    #[test]
    fn uniform_gives_zero() {
        let g = IdPairGraph::anonymous(2, 2, vec![0.3], vec![0.8], vec![0.1, 0.2, 0.9, 0.5]).unwrap();
        let o = oracle_hypothesis_likelihoods(&g, &DensityPair::uniform()).unwrap();
        assert_eq!(o.loglik, [0.0; 7]);
    }

    #[test]
    fn empty_families() {
        let g = IdPairGraph::anonymous(1, 2, vec![], vec![0.8], vec![0.1, 0.2]).unwrap();
        let o = oracle_hypothesis_likelihoods(&g, &step_pair()).unwrap();
        for h in [2, 3, 6] {
            assert_eq!(o.loglik[h], f64::NEG_INFINITY);
        }
    }

    #[test]
    fn refuses_large_graphs() {
        let g = IdPairGraph::anonymous(7, 1, vec![0.5; 21], vec![], vec![0.5; 7]).unwrap();
        assert!(matches!(oracle_hypothesis_likelihoods(&g, &step_pair()), Err(Error::OracleTooLarge { .. })));
    }

    #[test]
    fn hand_computed_probe_mismatch() {
        // (2,2), every score 0.9. Densities at 0.9: p_M = 100.5/101/0.5, p_N = 0.5/101/0.5.
        let g = IdPairGraph::anonymous(2, 2, vec![0.9], vec![0.9], vec![0.9; 4]).unwrap();
        let o = oracle_hypothesis_likelihoods(&g, &step_pair()).unwrap();
        let m = 100.5 / 101.0 / 0.5;
        let n = 0.5 / 101.0 / 0.5;
        // S = {a1} or {a2}: E(S) is empty, so the probe edge is a non-match;
        // the gallery edge matches, the four cross edges do not. Both terms are equal.
        let term = n * m * n * n * n * n;
        assert!((o.loglik[2] - libm::log((term + term) / 2.0)).abs() < 1e-12);
        let h2 = libm::log(libm::pow(m, 6.0));
        assert!((o.loglik[1] - h2).abs() < 1e-12);
        let best = (0..7).max_by(|&a, &b| o.loglik[a].total_cmp(&o.loglik[b])).unwrap();
        assert_eq!(best, 1);
    }
}
