//! Parallel evaluation of every probe/gallery identity pair.

use idfraud_core::simulation::ClassifierConfig;
use idfraud_core::subsets::MAX_VERTICES;
use idfraud_core::{build_pair_graph, DensityPair, LikelihoodEngine, PairDecision};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::{IdManifest, ScoreStore};

pub const DEFAULT_MAX_ID_SIZE: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub classifier: ClassifierConfig,
    pub bin_constant: f64,
    pub pseudocount: f64,
    /// Worker threads; 0 uses every available core.
    pub threads: usize,
    pub seed: u64,
    pub max_id_size: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            classifier: ClassifierConfig::default(),
            bin_constant: idfraud_core::density::DEFAULT_BIN_CONSTANT,
            pseudocount: idfraud_core::density::DEFAULT_PSEUDOCOUNT,
            threads: 0,
            seed: 0,
            max_id_size: DEFAULT_MAX_ID_SIZE,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.classifier.m_cap == 0 {
            return Err(Error::Config("--max-fraud must be at least 1".into()));
        }
        if self.max_id_size == 0 || self.max_id_size > MAX_VERTICES {
            return Err(Error::Config(format!("--max-id-size must be between 1 and {MAX_VERTICES}")));
        }
        Ok(())
    }
}

/// Run `f` on a pool with `threads` workers (0 = default pool size).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker threads: {e}")))?;
    Ok(pool.install(f))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkipReason {
    ProbeTooLarge { images: usize },
    GalleryTooLarge { images: usize },
    BothTooLarge { probe_images: usize, gallery_images: usize },
}

impl std::fmt::Display for SkipReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SkipReason::ProbeTooLarge { images } => write!(f, "probe identity has {images} images"),
            SkipReason::GalleryTooLarge { images } => write!(f, "gallery identity has {images} images"),
            SkipReason::BothTooLarge { probe_images, gallery_images } => {
                write!(f, "probe and gallery identities have {probe_images} and {gallery_images} images")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PairOutcome {
    Decided(PairDecision),
    Skipped(SkipReason),
}

/// Row-major `P x G` matrix of outcomes in manifest order.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionMatrix {
    probe_ids: Vec<String>,
    gallery_ids: Vec<String>,
    cells: Vec<PairOutcome>,
}

impl DecisionMatrix {
    pub fn probe_ids(&self) -> &[String] {
        &self.probe_ids
    }

    pub fn gallery_ids(&self) -> &[String] {
        &self.gallery_ids
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.probe_ids.len(), self.gallery_ids.len())
    }

    pub fn get(&self, probe: usize, gallery: usize) -> &PairOutcome {
        &self.cells[probe * self.gallery_ids.len() + gallery]
    }

    /// `(probe_id, gallery_id, outcome)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, &PairOutcome)> {
        let g = self.gallery_ids.len();
        self.cells
            .iter()
            .enumerate()
            .map(move |(k, c)| (self.probe_ids[k / g].as_str(), self.gallery_ids[k % g].as_str(), c))
    }

    pub fn decided(&self) -> impl Iterator<Item = (&str, &str, &PairDecision)> {
        self.iter().filter_map(|(p, g, c)| match c {
            PairOutcome::Decided(d) => Some((p, g, d)),
            PairOutcome::Skipped(_) => None,
        })
    }

    pub fn skipped(&self) -> impl Iterator<Item = (&str, &str, SkipReason)> {
        self.iter().filter_map(|(p, g, c)| match c {
            PairOutcome::Skipped(r) => Some((p, g, *r)),
            PairOutcome::Decided(_) => None,
        })
    }
}

fn skip_reason(np: usize, ng: usize, max: usize) -> Option<SkipReason> {
    match (np > max, ng > max) {
        (false, false) => None,
        (true, false) => Some(SkipReason::ProbeTooLarge { images: np }),
        (false, true) => Some(SkipReason::GalleryTooLarge { images: ng }),
        (true, true) => Some(SkipReason::BothTooLarge { probe_images: np, gallery_images: ng }),
    }
}

/// Classify every probe/gallery pair. Pairs involving an identity larger
/// than `max_id_size` are skipped. The result does not depend on the thread
/// count.
pub fn classify_batch(
    probe: &IdManifest,
    gallery: &IdManifest,
    store: &ScoreStore,
    densities: &DensityPair,
    cfg: &RunConfig,
) -> Result<DecisionMatrix> {
    cfg.validate()?;
    let largest = probe
        .identities()
        .iter()
        .chain(gallery.identities())
        .map(|(_, imgs)| imgs.len())
        .filter(|&n| n <= cfg.max_id_size)
        .max()
        .unwrap_or(1);
    let engine: LikelihoodEngine = cfg.classifier.engine(largest)?;
    let classifier = &cfg.classifier;
    let g_count = gallery.len();

    let evaluate = |k: usize| -> Result<PairOutcome> {
        let (_, p_images) = &probe.identities()[k / g_count];
        let (_, g_images) = &gallery.identities()[k % g_count];
        if let Some(reason) = skip_reason(p_images.len(), g_images.len(), cfg.max_id_size) {
            return Ok(PairOutcome::Skipped(reason));
        }
        let graph = build_pair_graph(p_images, g_images, |a, b| store.get(a, b))?;
        let ll = engine.evaluate(&graph, densities)?;
        let decision = PairDecision::new(classifier.rule, ll, &classifier.priors, graph.edge_count())?;
        Ok(PairOutcome::Decided(decision))
    };

    let cells = with_threads(cfg.threads, || {
        (0..probe.len() * g_count).into_par_iter().map(evaluate).collect::<Result<Vec<_>>>()
    })??;

    Ok(DecisionMatrix {
        probe_ids: probe.ids().map(str::to_owned).collect(),
        gallery_ids: gallery.ids().map(str::to_owned).collect(),
        cells,
    })
}
