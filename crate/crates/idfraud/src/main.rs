use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use idfraud::density_io::{fit_density_pair, read_density_pair, read_labeled_scores, write_density_pair};
use idfraud::experiments::{self, agreement, confusion_summary, m_sweep};
use idfraud::report::{emit_report, InputDigest};
use idfraud::selftest::run_self_test;
use idfraud::{classify_batch, ingest, Error, Result, RunConfig};
use idfraud_core::decision::DecisionRule;
use idfraud_core::simulation::{ClassifierConfig, SimConfig};
use idfraud_core::{fixtures, DensityPair, Hypothesis, Normalization, PriorVector};

#[derive(Parser)]
#[command(name = "idfraud", version, about = "Detect fraudulent identities from pairwise matcher scores")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit match and non-match histograms from a labelled `score,label` CSV.
    FitDensity {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long, default_value_t = idfraud_core::density::DEFAULT_BIN_CONSTANT)]
        bin_constant: f64,
        #[arg(long, default_value_t = idfraud_core::density::DEFAULT_PSEUDOCOUNT)]
        pseudocount: f64,
        /// Output density-pair JSON.
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify every probe/gallery identity pair and write the reports.
    Classify {
        #[arg(long)]
        probe: PathBuf,
        #[arg(long)]
        gallery: PathBuf,
        /// `image_a,image_b,score` CSV.
        #[arg(long)]
        scores: PathBuf,
        /// Density-pair JSON from `fit-density`.
        #[arg(long)]
        densities: PathBuf,
        #[command(flatten)]
        classifier: ClassifierArgs,
        #[arg(long, default_value_t = idfraud::batch::DEFAULT_MAX_ID_SIZE)]
        max_id_size: usize,
        #[arg(long, default_value_t = 0)]
        threads: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Confusion matrix of simulated identity pairs with planted hypotheses.
    Simulate {
        #[command(flatten)]
        sim: SimArgs,
        /// Hypotheses to plant.
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,6")]
        hypotheses: Vec<u8>,
        #[arg(long, default_value_t = 500)]
        trials: u32,
        #[command(flatten)]
        classifier: ClassifierArgs,
    },
    /// Classify no-fraud pairs at several fraud-set caps and time each pass.
    SweepM {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, default_value_t = 2000)]
        pairs: u32,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
        m_values: Vec<usize>,
        #[command(flatten)]
        classifier: ClassifierArgs,
    },
    /// Check symmetry properties and, with --oracle, agreement with brute force.
    SelfTest {
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value_t = 1000)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum NormalizationArg {
    TruncatedCount,
    FullReducedSet,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fixture {
    Separated,
    Overlapping,
}

#[derive(Args)]
struct ClassifierArgs {
    /// Largest fraud set considered per identity.
    #[arg(long, default_value_t = 3)]
    max_fraud: usize,
    /// Decision rule: ml, map or mms (default map; ml for simulations).
    #[arg(long)]
    rule: Option<DecisionRule>,
    /// Seven comma-separated prior probabilities, or `uniform`.
    #[arg(long)]
    priors: Option<String>,
    #[arg(long, value_enum, default_value = "truncated-count")]
    normalization: NormalizationArg,
}

impl ClassifierArgs {
    fn config(&self, default_rule: DecisionRule) -> Result<ClassifierConfig> {
        let priors = match self.priors.as_deref() {
            None => PriorVector::default(),
            Some("uniform") => PriorVector::uniform(),
            Some(text) => {
                let values: Vec<f64> = text
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::Config(format!("--priors: {e}")))?;
                let values: [f64; 7] = values
                    .try_into()
                    .map_err(|_| Error::Config("--priors needs exactly seven values".into()))?;
                PriorVector::new(values)?
            }
        };
        Ok(ClassifierConfig {
            m_cap: self.max_fraud,
            rule: self.rule.unwrap_or(default_rule),
            priors,
            normalization: match self.normalization {
                NormalizationArg::TruncatedCount => Normalization::TruncatedCount,
                NormalizationArg::FullReducedSet => Normalization::FullReducedSet,
            },
        })
    }
}

#[derive(Args)]
struct SimArgs {
    #[arg(long, default_value_t = 3)]
    n_probe: usize,
    #[arg(long, default_value_t = 3)]
    n_gallery: usize,
    /// Generator density-pair JSON; overrides --fixture.
    #[arg(long)]
    densities: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "separated")]
    fixture: Fixture,
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for the CSV table.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SimArgs {
    fn densities(&self) -> Result<DensityPair> {
        match &self.densities {
            Some(path) => read_density_pair(path),
            None => Ok(match self.fixture {
                Fixture::Separated => fixtures::separated(),
                Fixture::Overlapping => fixtures::overlapping(),
            }),
        }
    }

    fn config(&self, hypotheses: Vec<Hypothesis>, trials: u32, max_fraud: usize) -> Result<SimConfig> {
        let cfg = SimConfig {
            n_probe: self.n_probe,
            n_gallery: self.n_gallery,
            hypotheses,
            trials_per_hypothesis: trials,
            densities: self.densities()?,
            max_fraud,
            seed: self.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn create_out_file(dir: &Path, name: &str) -> Result<(PathBuf, fs::File)> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    Ok((path, file))
}

fn csv_written(path: &Path, r: csv::Result<()>) -> Result<()> {
    r.map_err(|e| Error::io(path, std::io::Error::other(e)))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::FitDensity { scores, bin_constant, pseudocount, out } => {
            let labeled = read_labeled_scores(&scores)?;
            let d = fit_density_pair(&labeled, bin_constant, pseudocount)?;
            write_density_pair(&out, &d)?;
            println!(
                "fitted {} match and {} non-match scores into {} and {} bins",
                labeled.matches.len(),
                labeled.nonmatches.len(),
                d.match_density.bins(),
                d.nonmatch_density.bins()
            );
        }
        Command::Classify {
            probe,
            gallery,
            scores,
            densities,
            classifier,
            max_id_size,
            threads,
            seed,
            out,
        } => {
            let cfg = RunConfig {
                classifier: classifier.config(DecisionRule::Map)?,
                threads,
                seed,
                max_id_size,
                ..RunConfig::default()
            };
            cfg.validate()?;
            let d = read_density_pair(&densities)?;
            let digest = InputDigest::of_file(&densities)?;
            let (p, g, store) = ingest(&probe, &gallery, &scores)?;
            let matrix = classify_batch(&p, &g, &store, &d, &cfg)?;
            emit_report(&matrix, &cfg, Some(&digest), &out)?;
            let skipped = matrix.skipped().count();
            println!(
                "classified {} pairs ({skipped} skipped); reports in {}",
                matrix.decided().count(),
                out.display()
            );
        }
        Command::Simulate { sim, hypotheses, trials, classifier } => {
            let hypotheses = hypotheses
                .into_iter()
                .map(Hypothesis::from_number)
                .collect::<idfraud_core::Result<Vec<_>>>()?;
            let classifier = classifier.config(DecisionRule::Ml)?;
            let cfg = sim.config(hypotheses, trials, classifier.m_cap)?;
            let matrix = experiments::run_confusion(&cfg, &classifier, sim.threads)?;
            print!("{}", confusion_summary(&matrix));
            if let Some(dir) = &sim.out {
                let (path, file) = create_out_file(dir, "confusion.csv")?;
                csv_written(&path, experiments::write_confusion_csv(&matrix, file))?;
            }
        }
        Command::SweepM { sim, pairs, m_values, classifier } => {
            let classifier = classifier.config(DecisionRule::Ml)?;
            let largest = m_values.iter().copied().max().unwrap_or(1);
            let cfg = sim.config(vec![Hypothesis::NoFraud], pairs.max(1), largest)?;
            let rows = m_sweep(&cfg, pairs, &m_values, &classifier, sim.threads)?;
            println!("{:>4} {:>10} {:>10} {:>10}  decisions 1..7", "M", "terms", "seconds", "agree_prev");
            for (k, r) in rows.iter().enumerate() {
                let agree =
                    if k == 0 { "-".to_owned() } else { format!("{:.4}", agreement(&rows[k - 1], r)) };
                println!(
                    "{:>4} {:>10} {:>10.3} {:>10}  {:?}",
                    r.m_cap,
                    r.terms_per_side,
                    r.elapsed.as_secs_f64(),
                    agree,
                    r.decision_counts
                );
            }
            if let Some(dir) = &sim.out {
                let (path, file) = create_out_file(dir, "sweep.csv")?;
                csv_written(&path, experiments::write_sweep_csv(&rows, file))?;
            }
        }
        Command::SelfTest { oracle, cases, seed } => {
            let report = run_self_test(oracle, cases, seed)?;
            print!("{report}");
            return Ok(report.passed());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Completeness { missing } = &e {
                for (a, b) in missing {
                    eprintln!("missing score: {a},{b}");
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
