//! JSON density files and fitting from labelled score CSVs.
//!
//! A density file is
//! `{"kind":"histogram","edges":[...],"density":[...],"n_samples":N,"pseudocount":a,"bin_constant":C}`
//! and a density-pair file holds `{"match": <density>, "nonmatch": <density>}`.

use std::fs;
use std::io::Read;
use std::path::Path;

use idfraud_core::{DensityPair, HistogramDensity};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const KIND: &str = "histogram";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityFile {
    pub kind: String,
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
    pub n_samples: u64,
    pub pseudocount: f64,
    pub bin_constant: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityPairFile {
    #[serde(rename = "match")]
    pub match_density: DensityFile,
    pub nonmatch: DensityFile,
}

impl From<&HistogramDensity> for DensityFile {
    fn from(h: &HistogramDensity) -> Self {
        Self {
            kind: KIND.into(),
            edges: h.edges().to_vec(),
            density: h.densities().to_vec(),
            n_samples: h.n_samples(),
            pseudocount: h.pseudocount(),
            bin_constant: h.bin_constant(),
        }
    }
}

impl TryFrom<DensityFile> for HistogramDensity {
    type Error = Error;

    fn try_from(f: DensityFile) -> Result<Self> {
        if f.kind != KIND {
            return Err(Error::Config(format!("unsupported density kind {:?}", f.kind)));
        }
        Ok(HistogramDensity::from_parts(f.edges, f.density, f.n_samples, f.pseudocount, f.bin_constant)?)
    }
}

impl From<&DensityPair> for DensityPairFile {
    fn from(d: &DensityPair) -> Self {
        Self { match_density: (&d.match_density).into(), nonmatch: (&d.nonmatch_density).into() }
    }
}

impl TryFrom<DensityPairFile> for DensityPair {
    type Error = Error;

    fn try_from(f: DensityPairFile) -> Result<Self> {
        Ok(DensityPair::new(f.match_density.try_into()?, f.nonmatch.try_into()?))
    }
}

pub fn density_pair_to_json(d: &DensityPair) -> String {
    serde_json::to_string_pretty(&DensityPairFile::from(d)).expect("densities serialize")
}

pub fn density_pair_from_json(text: &str, path: &Path) -> Result<DensityPair> {
    let file: DensityPairFile =
        serde_json::from_str(text).map_err(|e| Error::parse(path, e.line() as u64, e.to_string()))?;
    file.try_into()
}

pub fn read_density_pair(path: impl AsRef<Path>) -> Result<DensityPair> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    density_pair_from_json(&text, path)
}

pub fn write_density_pair(path: impl AsRef<Path>, d: &DensityPair) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, density_pair_to_json(d) + "\n").map_err(|e| Error::io(path, e))
}

/// Scores read from a `score,label` CSV, split by label.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledScores {
    pub matches: Vec<f64>,
    pub nonmatches: Vec<f64>,
}

/// Parse a two-column `score,label` CSV (label `match` or `nonmatch`). A
/// leading header row is skipped.
pub fn parse_labeled_scores<R: Read>(reader: R, path: &Path) -> Result<LabeledScores> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut out = LabeledScores::default();
    for (k, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::parse(path, line, e.to_string())
        })?;
        let line = record.position().map_or(k as u64 + 1, |p| p.line());
        if record.len() != 2 {
            return Err(Error::parse(path, line, "expected two columns: score,label"));
        }
        let score = match record[0].parse::<f64>() {
            Ok(v) => v,
            Err(_) if k == 0 && record[0].eq_ignore_ascii_case("score") => continue,
            Err(_) => return Err(Error::parse(path, line, format!("invalid score {:?}", &record[0]))),
        };
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::ScoreOutOfRange { path: path.into(), line, value: score });
        }
        match record[1].to_ascii_lowercase().as_str() {
            "match" => out.matches.push(score),
            "nonmatch" | "non-match" => out.nonmatches.push(score),
            other => {
                return Err(Error::parse(
                    path,
                    line,
                    format!("label must be match or nonmatch, got {other:?}"),
                ))
            }
        }
    }
    Ok(out)
}

pub fn read_labeled_scores(path: impl AsRef<Path>) -> Result<LabeledScores> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_labeled_scores(file, path)
}

pub fn fit_density_pair(scores: &LabeledScores, bin_constant: f64, pseudocount: f64) -> Result<DensityPair> {
    Ok(DensityPair::new(
        HistogramDensity::fit(&scores.matches, bin_constant, pseudocount)?,
        HistogramDensity::fit(&scores.nonmatches, bin_constant, pseudocount)?,
    ))
}
