//! Simulation experiments: confusion matrices over planted hypotheses and
//! the false-positive sweep over the fraud-set cap `M`.

use std::io::Write;
use std::time::{Duration, Instant};

use idfraud_core::simulation::{
    generate_pair, run_trial, trial_rng, trial_stream, ClassifierConfig, ConfusionMatrix, SimConfig,
};
use idfraud_core::{decide, Hypothesis, IdPairGraph};
use rayon::prelude::*;

use crate::batch::with_threads;
use crate::error::Result;

/// Parallel confusion experiment. Each trial draws from its own stream, so
/// the matrix is identical to the sequential one for any thread count.
pub fn run_confusion(
    cfg: &SimConfig,
    classifier: &ClassifierConfig,
    threads: usize,
) -> Result<ConfusionMatrix> {
    cfg.validate()?;
    let engine = classifier.engine(cfg.n_probe.max(cfg.n_gallery))?;
    let jobs: Vec<(Hypothesis, u32)> =
        cfg.hypotheses.iter().flat_map(|&h| (0..cfg.trials_per_hypothesis).map(move |t| (h, t))).collect();
    let decisions = with_threads(threads, || {
        jobs.par_iter()
            .map(|&(h, t)| run_trial(cfg, classifier, &engine, h, t))
            .collect::<Result<Vec<_>, _>>()
    })??;
    let mut matrix = ConfusionMatrix::new(cfg.hypotheses.clone());
    for (&(h, _), d) in jobs.iter().zip(decisions) {
        matrix.record(h, d)?;
    }
    Ok(matrix)
}

/// Result of classifying the sweep pairs at one value of `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub m_cap: usize,
    /// Fraud-set terms per identity side (probe side).
    pub terms_per_side: u64,
    pub decision_counts: [u64; 7],
    pub decisions: Vec<Hypothesis>,
    pub elapsed: Duration,
}

/// Draw `pairs` no-fraud pairs with the generator in `cfg`.
pub fn no_fraud_pairs(cfg: &SimConfig, pairs: u32) -> Result<Vec<IdPairGraph>> {
    (0..pairs)
        .map(|t| {
            let mut rng = trial_rng(cfg.seed, trial_stream(Hypothesis::NoFraud, t));
            Ok(generate_pair(Hypothesis::NoFraud, cfg, &mut rng)?.0)
        })
        .collect()
}

/// Classify the same no-fraud pairs at each `M`, over all seven hypotheses,
/// timing each pass.
pub fn m_sweep(
    cfg: &SimConfig,
    pairs: u32,
    m_values: &[usize],
    classifier: &ClassifierConfig,
    threads: usize,
) -> Result<Vec<SweepRow>> {
    if m_values.is_empty() {
        return Err(crate::Error::Config("at least one value of M is required".into()));
    }
    let graphs = no_fraud_pairs(cfg, pairs)?;
    let max_images = cfg.n_probe.max(cfg.n_gallery);
    let mut rows = Vec::with_capacity(m_values.len());
    for &m_cap in m_values {
        let run = ClassifierConfig { m_cap, ..classifier.clone() };
        let start = Instant::now();
        let engine = run.engine(max_images)?;
        let decisions = with_threads(threads, || {
            graphs
                .par_iter()
                .map(|g| {
                    let ll = engine.evaluate(g, &cfg.densities)?;
                    decide(run.rule, &ll, &run.priors)
                })
                .collect::<Result<Vec<_>, _>>()
        })??;
        let elapsed = start.elapsed();
        let mut decision_counts = [0u64; 7];
        for d in &decisions {
            decision_counts[d.index()] += 1;
        }
        let terms_per_side = idfraud_core::build_fraud_set_table(cfg.n_probe, m_cap)?.term_count() as u64;
        rows.push(SweepRow { m_cap, terms_per_side, decision_counts, decisions, elapsed });
    }
    Ok(rows)
}

/// Fraction of pairs given the same decision in two sweep rows.
pub fn agreement(a: &SweepRow, b: &SweepRow) -> f64 {
    if a.decisions.is_empty() {
        return 1.0;
    }
    let same = a.decisions.iter().zip(&b.decisions).filter(|(x, y)| x == y).count();
    same as f64 / a.decisions.len() as f64
}

pub fn write_confusion_csv<W: Write>(m: &ConfusionMatrix, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["truth".to_owned()];
    header.extend(m.hypotheses().iter().map(|h| format!("decided_{}", h.number())));
    header.extend(["trials".to_owned(), "accuracy".to_owned()]);
    w.write_record(&header)?;
    for &h in m.hypotheses() {
        let mut row = vec![h.number().to_string()];
        row.extend(m.row(h).iter().map(u64::to_string));
        row.push(m.row_total(h).to_string());
        row.push(format!("{}", m.row_accuracy(h)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["m".to_owned(), "terms_per_side".to_owned()];
    header.extend((1..=7).map(|k| format!("decided_{k}")));
    header.push("seconds".to_owned());
    w.write_record(&header)?;
    for r in rows {
        let mut row = vec![r.m_cap.to_string(), r.terms_per_side.to_string()];
        row.extend(r.decision_counts.iter().map(u64::to_string));
        row.push(format!("{:.6}", r.elapsed.as_secs_f64()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Human-readable confusion table.
pub fn confusion_summary(m: &ConfusionMatrix) -> String {
    let mut s = format!("{:<22}", "truth \\ decision");
    for h in m.hypotheses() {
        s += &format!("{:>8}", h.number());
    }
    s += "   accuracy\n";
    for &h in m.hypotheses() {
        s += &format!("{:<22}", format!("{} ({})", h.number(), h.name()));
        for c in m.row(h) {
            s += &format!("{c:>8}");
        }
        s += &format!("   {:.4}\n", m.row_accuracy(h));
    }
    s += &format!("overall accuracy {:.4}\n", m.accuracy());
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use idfraud_core::decision::DecisionRule;
    use idfraud_core::fixtures;

    fn cfg(trials: u32) -> SimConfig {
        SimConfig {
            n_probe: 3,
            n_gallery: 3,
            hypotheses: [1, 2, 4, 6].map(|h| Hypothesis::from_number(h).unwrap()).to_vec(),
            trials_per_hypothesis: trials,
            densities: fixtures::separated(),
            max_fraud: 3,
            seed: 5,
        }
    }

    #[test]
    fn parallel_matches_sequential() {
        let c = cfg(25);
        let classifier = ClassifierConfig { rule: DecisionRule::Ml, ..Default::default() };
        let seq = idfraud_core::simulation::run_confusion(&c, &classifier).unwrap();
        for threads in [1, 3] {
            assert_eq!(run_confusion(&c, &classifier, threads).unwrap(), seq);
        }
    }

    #[test]
    fn sweep_histograms_sum_to_pair_count() {
        let mut c = cfg(1);
        c.hypotheses = vec![Hypothesis::NoFraud];
        let classifier = ClassifierConfig { rule: DecisionRule::Ml, ..Default::default() };
        let rows = m_sweep(&c, 1, &[1, 2, 3], &classifier, 1).unwrap();
        for r in &rows {
            assert_eq!(r.decision_counts.iter().sum::<u64>(), 1);
        }
        assert_eq!(rows.iter().map(|r| r.terms_per_side).collect::<Vec<_>>(), [3, 6, 6]);
        assert!(m_sweep(&c, 1, &[], &classifier, 1).is_err());
    }

    #[test]
    fn csv_layouts() {
        let classifier = ClassifierConfig { rule: DecisionRule::Ml, ..Default::default() };
        let m = run_confusion(&cfg(2), &classifier, 1).unwrap();
        let mut buf = Vec::new();
        write_confusion_csv(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "truth,decided_1,decided_2,decided_4,decided_6,trials,accuracy");
        assert_eq!(lines.count(), 4);
        assert!(confusion_summary(&m).contains("overall accuracy"));
    }
}
