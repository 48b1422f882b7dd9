//! Output files for a classification run: the decision table, one ranked
//! list per fraud hypothesis and a metadata JSON.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use idfraud_core::{rank_pairs, Hypothesis, Normalization, PairDecision};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::batch::{DecisionMatrix, RunConfig};
use crate::error::{Error, Result};

pub const DECISIONS_FILE: &str = "decisions.csv";
pub const METADATA_FILE: &str = "run_metadata.json";

pub fn ranked_file_name(h: Hypothesis) -> String {
    format!("ranked_h{}.csv", h.number())
}

/// A density file used by the run, identified by content digest.
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(Self { path: path.display().to_string(), sha256: hex::encode(Sha256::digest(&bytes)) })
    }
}

#[derive(Serialize)]
struct ConfigRecord {
    max_fraud: usize,
    rule: String,
    priors: [f64; 7],
    normalization: &'static str,
    bin_constant: f64,
    pseudocount: f64,
    threads: usize,
    seed: u64,
    max_id_size: usize,
}

#[derive(Serialize)]
struct SkippedRecord<'a> {
    probe_id: &'a str,
    gallery_id: &'a str,
    reason: String,
}

#[derive(Serialize)]
struct Metadata<'a> {
    tool: &'static str,
    version: &'static str,
    created_unix: u64,
    config: ConfigRecord,
    densities: Option<&'a InputDigest>,
    probe_identities: usize,
    gallery_identities: usize,
    pairs_decided: usize,
    decision_counts: [usize; 7],
    skipped: Vec<SkippedRecord<'a>>,
}

pub fn normalization_name(n: Normalization) -> &'static str {
    match n {
        Normalization::TruncatedCount => "truncated-count",
        Normalization::FullReducedSet => "full-reduced-set",
    }
}

fn number(v: f64) -> String {
    format!("{v}")
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Config(format!("{}: {other:?}", path.display())),
    }
}

fn write_csv(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn decisions_header() -> Vec<String> {
    let mut h: Vec<String> = ["probe_id", "gallery_id", "decision", "fraud_score"].map(String::from).to_vec();
    h.extend((1..=7).map(|k| format!("loglik_{k}")));
    h.extend((1..=7).map(|k| format!("terms_{k}")));
    h
}

fn decision_row(probe: &str, gallery: &str, d: &PairDecision) -> Vec<String> {
    let mut row = vec![probe.to_owned(), gallery.to_owned(), d.decision.to_string(), number(d.fraud_score)];
    row.extend(d.loglik.loglik.iter().map(|&v| number(v)));
    row.extend(d.loglik.terms_summed.iter().map(u64::to_string));
    row
}

/// Write the report files into `out_dir`, creating it if needed, and return
/// the paths written.
pub fn emit_report(
    matrix: &DecisionMatrix,
    cfg: &RunConfig,
    densities: Option<&InputDigest>,
    out_dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();

    let path = out_dir.join(DECISIONS_FILE);
    write_csv(&path, &decisions_header(), matrix.decided().map(|(p, g, d)| decision_row(p, g, d)))?;
    written.push(path);

    let decided: Vec<(&str, &str, PairDecision)> = matrix.decided().map(|(p, g, d)| (p, g, *d)).collect();
    let header: Vec<String> =
        ["rank", "probe_id", "gallery_id", "decision", "fraud_score"].map(String::from).to_vec();
    for h in &Hypothesis::ALL[1..] {
        let path = out_dir.join(ranked_file_name(*h));
        let ranked = rank_pairs(&decided, Some(*h));
        let rows = ranked.iter().enumerate().map(|(k, (p, g, d))| {
            vec![
                (k + 1).to_string(),
                p.to_string(),
                g.to_string(),
                d.decision.to_string(),
                number(d.fraud_score),
            ]
        });
        write_csv(&path, &header, rows)?;
        written.push(path);
    }

    let mut decision_counts = [0usize; 7];
    for (_, _, d) in &decided {
        decision_counts[d.decision.index()] += 1;
    }
    let c = &cfg.classifier;
    let meta = Metadata {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        config: ConfigRecord {
            max_fraud: c.m_cap,
            rule: c.rule.to_string(),
            priors: *c.priors.as_array(),
            normalization: normalization_name(c.normalization),
            bin_constant: cfg.bin_constant,
            pseudocount: cfg.pseudocount,
            threads: cfg.threads,
            seed: cfg.seed,
            max_id_size: cfg.max_id_size,
        },
        densities,
        probe_identities: matrix.probe_ids().len(),
        gallery_identities: matrix.gallery_ids().len(),
        pairs_decided: decided.len(),
        decision_counts,
        skipped: matrix
            .skipped()
            .map(|(p, g, r)| SkippedRecord { probe_id: p, gallery_id: g, reason: r.to_string() })
            .collect(),
    };
    let path = out_dir.join(METADATA_FILE);
    let mut f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::to_writer_pretty(&mut f, &meta).map_err(|e| Error::io(&path, e.into()))?;
    writeln!(f).map_err(|e| Error::io(&path, e))?;
    written.push(path);

    Ok(written)
}
