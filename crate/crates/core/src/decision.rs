//! Decision rules over the seven log-likelihoods, fraud scores and ranking.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::Hypothesis;
use crate::likelihood::HypothesisLogLikelihoods;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DecisionRule {
    /// Maximum likelihood.
    Ml,
    /// Maximum a posteriori.
    #[default]
    Map,
    /// Rounded posterior mean of the hypothesis number.
    Mms,
}

impl fmt::Display for DecisionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecisionRule::Ml => "ml",
            DecisionRule::Map => "map",
            DecisionRule::Mms => "mms",
        })
    }
}

impl FromStr for DecisionRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ml" => Ok(DecisionRule::Ml),
            "map" => Ok(DecisionRule::Map),
            "mms" => Ok(DecisionRule::Mms),
            _ => Err(Error::param("decision rule", "expected one of ml, map, mms")),
        }
    }
}

pub const PRIOR_TOLERANCE: f64 = 1e-12;

/// Prior probabilities `p(H = h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorVector([f64; 7]);

impl PriorVector {
    pub fn new(p: [f64; 7]) -> Result<Self> {
        if p.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(Error::param("priors", "must be finite and non-negative"));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > PRIOR_TOLERANCE {
            return Err(Error::param("priors", "must sum to 1"));
        }
        Ok(Self(p))
    }

    pub fn uniform() -> Self {
        Self([1.0 / 7.0; 7])
    }

    pub fn get(&self, h: Hypothesis) -> f64 {
        self.0[h.index()]
    }

    pub fn as_array(&self) -> &[f64; 7] {
        &self.0
    }
}

impl Default for PriorVector {
    /// No-fraud dominant: 0.94 for `h = 1`, 0.01 for each fraud type.
    fn default() -> Self {
        Self([0.94, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01])
    }
}

fn argmax(values: impl Iterator<Item = f64>) -> Result<Hypothesis> {
    let mut best: Option<(usize, f64)> = None;
    for (k, v) in values.enumerate() {
        if v == f64::NEG_INFINITY || v.is_nan() {
            continue;
        }
        // strict comparison keeps the smallest h on ties
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((k, v));
        }
    }
    best.map(|(k, _)| Hypothesis::ALL[k]).ok_or(Error::NoFiniteLikelihood)
}

fn log_posterior(ll: &HypothesisLogLikelihoods, priors: &PriorVector) -> [f64; 7] {
    core::array::from_fn(|k| {
        let p = priors.0[k];
        if p == 0.0 {
            f64::NEG_INFINITY
        } else {
            ll.loglik[k] + libm::log(p)
        }
    })
}

pub fn decide_ml(ll: &HypothesisLogLikelihoods) -> Result<Hypothesis> {
    argmax(ll.loglik.iter().copied())
}

pub fn decide_map(ll: &HypothesisLogLikelihoods, priors: &PriorVector) -> Result<Hypothesis> {
    argmax(log_posterior(ll, priors).into_iter())
}

pub fn decide_mms(ll: &HypothesisLogLikelihoods, priors: &PriorVector) -> Result<Hypothesis> {
    let post = log_posterior(ll, priors);
    let max = post.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return Err(Error::NoFiniteLikelihood);
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (k, &lp) in post.iter().enumerate() {
        let w = libm::exp(lp - max);
        num += (k + 1) as f64 * w;
        den += w;
    }
    let mean = libm::round(num / den).clamp(1.0, 7.0);
    Hypothesis::from_number(mean as u8)
}

pub fn decide(rule: DecisionRule, ll: &HypothesisLogLikelihoods, priors: &PriorVector) -> Result<Hypothesis> {
    match rule {
        DecisionRule::Ml => decide_ml(ll),
        DecisionRule::Map => decide_map(ll, priors),
        DecisionRule::Mms => decide_mms(ll, priors),
    }
}

/// Decide among a subset of hypotheses only; the others are treated as
/// having zero likelihood. An MMS mean that lands on an excluded hypothesis
/// moves to the nearest allowed one (the smaller on ties).
pub fn decide_among(
    rule: DecisionRule,
    ll: &HypothesisLogLikelihoods,
    priors: &PriorVector,
    allowed: &[Hypothesis],
) -> Result<Hypothesis> {
    let mut masked = *ll;
    for h in Hypothesis::ALL {
        if !allowed.contains(&h) {
            masked.loglik[h.index()] = f64::NEG_INFINITY;
        }
    }
    let d = decide(rule, &masked, priors)?;
    if allowed.contains(&d) {
        return Ok(d);
    }
    allowed
        .iter()
        .copied()
        .min_by_key(|a| ((a.number() as i16 - d.number() as i16).abs(), a.number()))
        .ok_or(Error::param("allowed hypotheses", "must not be empty"))
}

/// The decided hypothesis's log-likelihood divided by the edge count.
pub fn fraud_score(ll: &HypothesisLogLikelihoods, d: Hypothesis, edge_count: usize) -> Result<f64> {
    if edge_count == 0 {
        return Err(Error::param("edge count", "must be at least 1"));
    }
    let v = ll.get(d);
    if !v.is_finite() {
        return Err(Error::InfiniteLikelihood { hypothesis: d });
    }
    Ok(v / edge_count as f64)
}

/// Outcome for one probe/gallery pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairDecision {
    pub decision: Hypothesis,
    pub rule: DecisionRule,
    pub loglik: HypothesisLogLikelihoods,
    pub fraud_score: f64,
    pub edge_count: usize,
}

impl PairDecision {
    pub fn new(
        rule: DecisionRule,
        loglik: HypothesisLogLikelihoods,
        priors: &PriorVector,
        edge_count: usize,
    ) -> Result<Self> {
        // MMS can land on a hypothesis that is impossible for this graph
        let possible: Vec<Hypothesis> =
            Hypothesis::ALL.into_iter().filter(|&h| loglik.get(h).is_finite()).collect();
        let decision = decide_among(rule, &loglik, priors, &possible)?;
        Ok(Self {
            decision,
            rule,
            loglik,
            fraud_score: fraud_score(&loglik, decision, edge_count)?,
            edge_count,
        })
    }
}

/// Pairs sorted by descending fraud score, keeping those decided as
/// `filter` (or every fraud decision, `h != 1`, when no filter is given).
/// Ties are ordered by probe id, then gallery id.
pub fn rank_pairs<P: Ord, G: Ord>(
    decisions: &[(P, G, PairDecision)],
    filter: Option<Hypothesis>,
) -> Vec<&(P, G, PairDecision)> {
    let mut out: Vec<_> = decisions
        .iter()
        .filter(|(_, _, d)| match filter {
            Some(h) => d.decision == h,
            None => d.decision != Hypothesis::NoFraud,
        })
        .collect();
    out.sort_by(|a, b| {
        b.2.fraud_score
            .total_cmp(&a.2.fraud_score)
            .then_with(|| a.0.cmp(&b.0))
            .then_with(|| a.1.cmp(&b.1))
            .then(Ordering::Equal)
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::String;
    use alloc::vec;
    use proptest::prelude::*;

    const NEG: f64 = f64::NEG_INFINITY;

    fn ll(v: [f64; 7]) -> HypothesisLogLikelihoods {
        HypothesisLogLikelihoods::from_logliks(v)
    }

    #[test]
    fn ml_examples() {
        assert_eq!(decide_ml(&ll([-5.0, -1.0, -9.0, -9.0, -9.0, -9.0, -9.0])).unwrap().number(), 2);
        assert_eq!(decide_ml(&ll([-3.0, -3.0, -9.0, -9.0, -9.0, -9.0, -9.0])).unwrap().number(), 1);
        assert_eq!(decide_ml(&ll([NEG; 7])), Err(Error::NoFiniteLikelihood));
    }

    #[test]
    fn map_examples() {
        let v = ll([-2.0, -1.0, NEG, NEG, NEG, NEG, NEG]);
        let r = 0.01 / 6.0;
        let priors = PriorVector::new([0.99, r, r, r, r, r, r]).unwrap();
        // log 0.99 - log(0.01/6) ~= 6.39 > 1
        assert!(libm::log(0.99) - libm::log(r) > 1.0);
        assert_eq!(decide_map(&v, &priors).unwrap(), Hypothesis::NoFraud);
        assert_eq!(decide_map(&v, &PriorVector::uniform()).unwrap(), Hypothesis::MultiId);

        let no_multi = PriorVector::new([0.5, 0.0, 0.1, 0.1, 0.1, 0.1, 0.1]).unwrap();
        let v = ll([-9.0, -1.0, -5.0, -5.0, -5.0, -5.0, -5.0]);
        assert_ne!(decide_map(&v, &no_multi).unwrap(), Hypothesis::MultiId);
    }

    #[test]
    fn mms_examples() {
        let u = PriorVector::uniform();
        assert_eq!(decide_mms(&ll([NEG, NEG, NEG, 0.0, NEG, NEG, NEG]), &u).unwrap().number(), 4);
        assert_eq!(decide_mms(&ll([0.0, 0.0, NEG, NEG, NEG, NEG, NEG]), &u).unwrap().number(), 2);
        assert_eq!(decide_mms(&ll([0.0, NEG, NEG, NEG, NEG, NEG, 0.0]), &u).unwrap().number(), 4);
    }

    #[test]
    fn priors_validation() {
        assert!(PriorVector::new([0.5; 7]).is_err());
        assert!(PriorVector::new([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, -0.0]).is_ok());
        assert!(PriorVector::new([1.1, -0.1, 0.0, 0.0, 0.0, 0.0, 0.0]).is_err());
        let d = PriorVector::default();
        assert!((d.as_array().iter().sum::<f64>() - 1.0).abs() <= PRIOR_TOLERANCE);
    }

    #[test]
    fn fraud_score_examples() {
        let mut v = [0.0; 7];
        v[1] = -30.0;
        assert_eq!(fraud_score(&ll(v), Hypothesis::MultiId, 15).unwrap(), -2.0);
        assert_eq!(fraud_score(&ll([0.0; 7]), Hypothesis::CrossedId, 6).unwrap(), 0.0);
        v[2] = NEG;
        assert!(fraud_score(&ll(v), Hypothesis::ProbeMismatch, 15).is_err());
        assert!(fraud_score(&ll(v), Hypothesis::MultiId, 0).is_err());
    }

    #[test]
    fn restricted_decisions() {
        let v = ll([-3.0, -4.0, -1.0, -5.0, -6.0, -7.0, -8.0]);
        let allowed = [1, 2, 4, 6].map(|h| Hypothesis::from_number(h).unwrap());
        let u = PriorVector::uniform();
        assert_eq!(decide_among(DecisionRule::Ml, &v, &u, &allowed).unwrap().number(), 1);
        // 1 and 6 equally likely: mean 3.5 rounds to 4, which is allowed
        let v = ll([0.0, NEG, NEG, NEG, NEG, 0.0, NEG]);
        assert_eq!(decide_among(DecisionRule::Mms, &v, &u, &allowed).unwrap().number(), 4);
        let allowed = [1, 6].map(|h| Hypothesis::from_number(h).unwrap());
        assert_eq!(decide_among(DecisionRule::Mms, &v, &u, &allowed).unwrap().number(), 6);
    }

    fn pair(score: f64, h: u8) -> PairDecision {
        PairDecision {
            decision: Hypothesis::from_number(h).unwrap(),
            rule: DecisionRule::Ml,
            loglik: ll([0.0; 7]),
            fraud_score: score,
            edge_count: 1,
        }
    }

    #[test]
    fn ranking_examples() {
        let empty: Vec<(String, String, PairDecision)> = vec![];
        assert!(rank_pairs(&empty, None).is_empty());

        let d = vec![("a", "x", pair(-1.0, 2)), ("b", "x", pair(-0.5, 2)), ("c", "x", pair(-2.0, 2))];
        let order: Vec<_> = rank_pairs(&d, None).iter().map(|r| r.2.fraud_score).collect();
        assert_eq!(order, [-0.5, -1.0, -2.0]);

        let d = vec![
            ("a", "x", pair(-1.0, 2)),
            ("a", "y", pair(-0.1, 4)),
            ("b", "x", pair(-0.3, 1)),
            ("b", "y", pair(-3.0, 2)),
        ];
        let only2: Vec<_> = rank_pairs(&d, Some(Hypothesis::MultiId)).iter().map(|r| (r.0, r.1)).collect();
        assert_eq!(only2, [("a", "x"), ("b", "y")]);
        let fraud: Vec<_> = rank_pairs(&d, None).iter().map(|r| (r.0, r.1)).collect();
        assert_eq!(fraud, [("a", "y"), ("a", "x"), ("b", "y")]);

        let tied = vec![("b", "y", pair(-1.0, 3)), ("a", "z", pair(-1.0, 3)), ("a", "y", pair(-1.0, 3))];
        let order: Vec<_> = rank_pairs(&tied, None).iter().map(|r| (r.0, r.1)).collect();
        assert_eq!(order, [("a", "y"), ("a", "z"), ("b", "y")]);
    }

    fn loglik_vector() -> impl Strategy<Value = [f64; 7]> {
        proptest::array::uniform7(prop_oneof![9 => -200.0f64..0.0, 1 => Just(NEG)])
            .prop_filter("one finite entry", |v| v.iter().any(|x| x.is_finite()))
    }

    proptest! {
        #[test]
        fn map_equals_ml_under_uniform_priors(v in loglik_vector()) {
            let v = ll(v);
            prop_assert_eq!(decide_map(&v, &PriorVector::uniform()).unwrap(), decide_ml(&v).unwrap());
        }

        #[test]
        fn mms_stays_in_range(v in loglik_vector(), w in proptest::array::uniform7(0.0f64..1.0)) {
            let total: f64 = w.iter().sum();
            prop_assume!(total > 0.0);
            let mut p = w.map(|x| x / total);
            let drift: f64 = p.iter().sum::<f64>() - 1.0;
            p[0] -= drift;
            prop_assume!(p[0] >= 0.0);
            let Ok(priors) = PriorVector::new(p) else { return Ok(()) };
            match decide_mms(&ll(v), &priors) {
                Ok(h) => prop_assert!((1..=7).contains(&h.number())),
                Err(e) => prop_assert_eq!(e, Error::NoFiniteLikelihood),
            }
        }
    }
}
