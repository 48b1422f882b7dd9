use idfraud_core::graph::Hypothesis;
use idfraud_core::subsets::reduced_power_set_size;
use idfraud_core::{
    hypothesis_log_likelihoods, log_match_likelihood, oracle_hypothesis_likelihoods, term_match_edges,
    DensityPair, HistogramDensity, IdPairGraph, LikelihoodEngine, Normalization, VertexSet,
};
use proptest::prelude::*;

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

prop_compose! {
    fn ragged_density()(cuts in proptest::collection::btree_set(1u32..999, 0..6),
                        masses in proptest::collection::vec(0.01f64..1.0, 7)) -> HistogramDensity {
        let mut edges = vec![0.0];
        edges.extend(cuts.iter().map(|&c| c as f64 / 1000.0));
        edges.push(1.0);
        let masses = &masses[..edges.len() - 1];
        HistogramDensity::from_masses(edges, masses).unwrap()
    }
}

prop_compose! {
    fn density_pair()(m in ragged_density(), n in ragged_density()) -> DensityPair {
        DensityPair::new(m, n)
    }
}

prop_compose! {
    fn pair_graph(max: usize)(np in 1..=max, ng in 1..=max)
        (probe in proptest::collection::vec(0.0f64..=1.0, np * (np - 1) / 2),
         gallery in proptest::collection::vec(0.0f64..=1.0, ng * (ng - 1) / 2),
         cross in proptest::collection::vec(0.0f64..=1.0, np * ng),
         np in Just(np), ng in Just(ng)) -> IdPairGraph {
        IdPairGraph::anonymous(np, ng, probe, gallery, cross).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn engine_agrees_with_oracle(g in pair_graph(5), d in density_pair()) {
        let m_cap = g.n_probe().max(g.n_gallery()).saturating_sub(1).max(1);
        let fast = hypothesis_log_likelihoods(&g, &d, m_cap).unwrap();
        let slow = oracle_hypothesis_likelihoods(&g, &d).unwrap();
        for k in 0..7 {
            prop_assert!(rel_close(fast.loglik[k], slow.loglik[k], 1e-9),
                "h={} engine {} oracle {}", k + 1, fast.loglik[k], slow.loglik[k]);
        }
        prop_assert_eq!(fast.terms_summed, slow.terms_summed);
    }

    #[test]
    fn swap_permutes_hypotheses(g in pair_graph(5), d in density_pair(), m_cap in 1usize..5) {
        let a = hypothesis_log_likelihoods(&g, &d, m_cap).unwrap();
        let b = hypothesis_log_likelihoods(&g.swapped(), &d, m_cap).unwrap();
        for h in Hypothesis::ALL {
            prop_assert_eq!(a.get(h).to_bits(), b.get(h.swapped()).to_bits());
        }
    }

    #[test]
    fn relabeling_is_bit_identical(
        g in pair_graph(6),
        d in density_pair(),
        seed in any::<u64>(),
        m_cap in 1usize..6,
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let mut p: Vec<usize> = (0..g.n_probe()).collect();
        let mut q: Vec<usize> = (0..g.n_gallery()).collect();
        p.shuffle(&mut rng);
        q.shuffle(&mut rng);
        let a = hypothesis_log_likelihoods(&g, &d, m_cap).unwrap();
        let b = hypothesis_log_likelihoods(&g.permuted(&p, &q).unwrap(), &d, m_cap).unwrap();
        prop_assert_eq!(a.loglik.map(f64::to_bits), b.loglik.map(f64::to_bits));
    }

    #[test]
    fn truncation_counts_grow_to_full(g in pair_graph(7), d in density_pair()) {
        let (np, ng) = (g.n_probe(), g.n_gallery());
        let mut previous = [0u64; 7];
        for m_cap in 1..=7 {
            let ll = hypothesis_log_likelihoods(&g, &d, m_cap).unwrap();
            for (now, before) in ll.terms_summed.iter().zip(&previous) {
                prop_assert!(now >= before);
            }
            if m_cap + 1 >= np {
                prop_assert_eq!(ll.terms_summed[2] as u128, reduced_power_set_size(np as u32));
            }
            if m_cap + 1 >= ng {
                prop_assert_eq!(ll.terms_summed[4] as u128, reduced_power_set_size(ng as u32));
            }
            previous = ll.terms_summed;
        }
    }

    #[test]
    fn uniform_densities_are_all_zero(g in pair_graph(6), m_cap in 1usize..6) {
        let ll = hypothesis_log_likelihoods(&g, &DensityPair::uniform(), m_cap).unwrap();
        for k in 0..7 {
            let finite = ll.terms_summed[k] > 0;
            prop_assert_eq!(ll.loglik[k], if finite { 0.0 } else { f64::NEG_INFINITY });
        }
    }

    #[test]
    fn fixed_terms_match_edge_sets(g in pair_graph(4), d in density_pair()) {
        let ll = hypothesis_log_likelihoods(&g, &d, 3).unwrap();
        for h in [Hypothesis::NoFraud, Hypothesis::MultiId] {
            let set = term_match_edges(&g, h, None, None).unwrap();
            prop_assert_eq!(ll.get(h), log_match_likelihood(&g, &set, &d).unwrap());
        }
    }
}

#[test]
fn step_density_linear_product() {
    let edges = vec![0.0, 0.5, 1.0];
    let d = DensityPair::new(
        HistogramDensity::from_masses(edges.clone(), &[0.2, 0.8]).unwrap(),
        HistogramDensity::from_masses(edges, &[0.7, 0.3]).unwrap(),
    );
    let g = IdPairGraph::anonymous(2, 2, vec![0.9], vec![0.2], vec![0.1, 0.6, 0.7, 0.3]).unwrap();
    let set = term_match_edges(&g, Hypothesis::NoFraud, None, None).unwrap();
    // probe edge 0.9 and gallery edge 0.2 match, the cross edges do not
    let product = 1.6 * 0.4 * (1.4 * 0.6 * 0.6 * 1.4);
    let got = log_match_likelihood(&g, &set, &d).unwrap();
    assert!((got - f64::ln(product)).abs() < 1e-12, "{got} vs {}", f64::ln(product));
}

#[test]
fn crossed_term_is_two_linkages() {
    let edges = vec![0.0, 0.5, 1.0];
    let d = DensityPair::new(
        HistogramDensity::from_masses(edges.clone(), &[0.1, 0.9]).unwrap(),
        HistogramDensity::from_masses(edges, &[0.9, 0.1]).unwrap(),
    );
    // a1-b2 and a2-b1 are linked, nothing else
    let g = IdPairGraph::anonymous(2, 2, vec![0.1], vec![0.1], vec![0.1, 0.9, 0.9, 0.1]).unwrap();
    let ll = hypothesis_log_likelihoods(&g, &d, 1).unwrap();
    let best = Hypothesis::ALL.into_iter().max_by(|a, b| ll.get(*a).total_cmp(&ll.get(*b))).unwrap();
    assert_eq!(best, Hypothesis::CrossedId);
    let set = term_match_edges(
        &g,
        Hypothesis::CrossedId,
        Some(VertexSet::from_indices([0])),
        Some(VertexSet::from_indices([0])),
    )
    .unwrap();
    assert_eq!(set.cross, [false, true, true, false]);
}

#[test]
fn full_reduced_set_normalization() {
    let d = idfraud_core::fixtures::separated();
    let g = IdPairGraph::anonymous(
        4,
        3,
        vec![0.9, 0.8, 0.1, 0.95, 0.2, 0.15],
        vec![0.7, 0.9, 0.85],
        vec![0.1; 12],
    )
    .unwrap();
    let truncated = LikelihoodEngine::new(1, 4, Normalization::TruncatedCount).unwrap();
    let full = LikelihoodEngine::new(1, 4, Normalization::FullReducedSet).unwrap();
    let a = truncated.evaluate(&g, &d).unwrap();
    let b = full.evaluate(&g, &d).unwrap();
    // probe: 4 of 14 subsets summed; gallery: 3 of 6
    let shift3 = f64::ln(4.0) - f64::ln(14.0);
    assert!((b.loglik[2] - (a.loglik[2] + shift3)).abs() < 1e-12);
    let shift5 = f64::ln(3.0) - f64::ln(6.0);
    assert!((b.loglik[4] - (a.loglik[4] + shift5)).abs() < 1e-12);
    let shift7 = f64::ln(12.0) - f64::ln(84.0);
    assert!((b.loglik[6] - (a.loglik[6] + shift7)).abs() < 1e-12);
    assert_eq!(a.loglik[0], b.loglik[0]);

    // untruncated, the two normalizations coincide
    let t = LikelihoodEngine::new(3, 4, Normalization::TruncatedCount).unwrap();
    let f = LikelihoodEngine::new(3, 4, Normalization::FullReducedSet).unwrap();
    assert_eq!(t.evaluate(&g, &d).unwrap(), f.evaluate(&g, &d).unwrap());
}

#[test]
fn large_graphs_stay_finite() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand::rngs::StdRng::seed_from_u64(5);
    let d = idfraud_core::fixtures::separated();
    let n = 24;
    let tri = n * (n - 1) / 2;
    let g = IdPairGraph::anonymous(
        n,
        n,
        (0..tri).map(|_| rng.random()).collect(),
        (0..tri).map(|_| rng.random()).collect(),
        (0..n * n).map(|_| rng.random()).collect(),
    )
    .unwrap();
    let ll = hypothesis_log_likelihoods(&g, &d, 2).unwrap();
    assert!(ll.loglik.iter().all(|v| v.is_finite()), "{:?}", ll.loglik);
}
