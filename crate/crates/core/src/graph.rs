//! The pair graph of one probe identity and one gallery identity, and the
//! seven ground-truth hypotheses over it.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::density::check_score;
use crate::error::{Error, Result};
use crate::subsets::{VertexSet, MAX_VERTICES};

/// Ground truth for a probe/gallery identity pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum Hypothesis {
    /// Both identities are complete and disjoint from each other.
    NoFraud = 1,
    /// Both identities are the same person.
    MultiId = 2,
    /// Some probe images belong to nobody in this gallery identity.
    ProbeMismatch = 3,
    /// The stray probe images belong to this gallery identity.
    ProbeMixedId = 4,
    GalleryMismatch = 5,
    GalleryMixedId = 6,
    /// Both identities are split and linked crosswise.
    CrossedId = 7,
}

impl Hypothesis {
    pub const ALL: [Hypothesis; 7] = [
        Hypothesis::NoFraud,
        Hypothesis::MultiId,
        Hypothesis::ProbeMismatch,
        Hypothesis::ProbeMixedId,
        Hypothesis::GalleryMismatch,
        Hypothesis::GalleryMixedId,
        Hypothesis::CrossedId,
    ];

    /// The hypothesis number, 1 through 7.
    pub fn number(self) -> u8 {
        self as u8
    }

    /// Zero-based position, for indexing 7-vectors.
    pub fn index(self) -> usize {
        self as usize - 1
    }

    pub fn from_number(h: u8) -> Result<Self> {
        match h {
            1..=7 => Ok(Self::ALL[h as usize - 1]),
            _ => Err(Error::param("hypothesis", "must be between 1 and 7")),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Hypothesis::NoFraud => "no fraud",
            Hypothesis::MultiId => "multi-ID",
            Hypothesis::ProbeMismatch => "probe mismatch",
            Hypothesis::ProbeMixedId => "probe mixed-ID",
            Hypothesis::GalleryMismatch => "gallery mismatch",
            Hypothesis::GalleryMixedId => "gallery mixed-ID",
            Hypothesis::CrossedId => "crossed ID",
        }
    }

    /// The corresponding hypothesis after exchanging probe and gallery.
    pub fn swapped(self) -> Self {
        match self {
            Hypothesis::ProbeMismatch => Hypothesis::GalleryMismatch,
            Hypothesis::ProbeMixedId => Hypothesis::GalleryMixedId,
            Hypothesis::GalleryMismatch => Hypothesis::ProbeMismatch,
            Hypothesis::GalleryMixedId => Hypothesis::ProbeMixedId,
            h => h,
        }
    }

    pub fn needs_probe_subset(self) -> bool {
        matches!(self, Hypothesis::ProbeMismatch | Hypothesis::ProbeMixedId | Hypothesis::CrossedId)
    }

    pub fn needs_gallery_subset(self) -> bool {
        matches!(self, Hypothesis::GalleryMismatch | Hypothesis::GalleryMixedId | Hypothesis::CrossedId)
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// Total number of edges in the complete graph on `n_p + n_g` vertices.
pub fn total_edge_count(n_p: usize, n_g: usize) -> Result<usize> {
    if n_p == 0 || n_g == 0 {
        return Err(Error::param("identity size", "must contain at least one image"));
    }
    Ok(n_p * (n_p - 1) / 2 + n_g * (n_g - 1) / 2 + n_p * n_g)
}

pub(crate) fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Position of edge `(i, j)`, `i < j`, in a packed upper triangle over `n` vertices.
pub(crate) fn tri_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// One probe identity and one gallery identity with every pairwise score.
#[derive(Debug, Clone, PartialEq)]
pub struct IdPairGraph {
    probe_images: Vec<String>,
    gallery_images: Vec<String>,
    /// E1, packed upper triangle.
    probe_scores: Vec<f64>,
    /// E2, packed upper triangle.
    gallery_scores: Vec<f64>,
    /// E12, row-major `n_probe x n_gallery`.
    cross_scores: Vec<f64>,
}

/// Assemble a pair graph, looking up every score it needs.
///
/// `lookup` is queried once per unordered image pair; a `None` is reported
/// as a missing score.
pub fn build_pair_graph<S, F>(probe: &[S], gallery: &[S], mut lookup: F) -> Result<IdPairGraph>
where
    S: AsRef<str>,
    F: FnMut(&str, &str) -> Option<f64>,
{
    let mut fetch = |a: &S, b: &S| {
        let (a, b) = (a.as_ref(), b.as_ref());
        lookup(a, b).ok_or_else(|| Error::MissingScore { first: a.into(), second: b.into() })
    };
    let mut within = |ids: &[S]| -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(pair_count(ids.len()));
        for i in 0..ids.len() {
            for j in i + 1..ids.len() {
                out.push(fetch(&ids[i], &ids[j])?);
            }
        }
        Ok(out)
    };
    let probe_scores = within(probe)?;
    let gallery_scores = within(gallery)?;
    let mut cross = Vec::with_capacity(probe.len() * gallery.len());
    for p in probe {
        for g in gallery {
            cross.push(fetch(p, g)?);
        }
    }
    IdPairGraph::from_scores(
        probe.iter().map(|s| s.as_ref().into()).collect(),
        gallery.iter().map(|s| s.as_ref().into()).collect(),
        probe_scores,
        gallery_scores,
        cross,
    )
}

impl IdPairGraph {
    /// Build from packed score arrays: upper triangles for the two
    /// identities and a row-major cross matrix.
    pub fn from_scores(
        probe_images: Vec<String>,
        gallery_images: Vec<String>,
        probe_scores: Vec<f64>,
        gallery_scores: Vec<f64>,
        cross_scores: Vec<f64>,
    ) -> Result<Self> {
        let (np, ng) = (probe_images.len(), gallery_images.len());
        if np == 0 || ng == 0 {
            return Err(Error::param("identity size", "must contain at least one image"));
        }
        for n in [np, ng] {
            if n > MAX_VERTICES {
                return Err(Error::IdTooLarge { images: n, max: MAX_VERTICES });
            }
        }
        if probe_scores.len() != pair_count(np)
            || gallery_scores.len() != pair_count(ng)
            || cross_scores.len() != np * ng
        {
            return Err(Error::param("score arrays", "lengths do not match identity sizes"));
        }
        for &s in probe_scores.iter().chain(&gallery_scores).chain(&cross_scores) {
            check_score(s)?;
        }
        Ok(Self { probe_images, gallery_images, probe_scores, gallery_scores, cross_scores })
    }

    /// Graph with generated image names `p0..`, `g0..`.
    pub fn anonymous(
        n_probe: usize,
        n_gallery: usize,
        probe_scores: Vec<f64>,
        gallery_scores: Vec<f64>,
        cross_scores: Vec<f64>,
    ) -> Result<Self> {
        Self::from_scores(
            (0..n_probe).map(|i| format!("p{i}")).collect(),
            (0..n_gallery).map(|j| format!("g{j}")).collect(),
            probe_scores,
            gallery_scores,
            cross_scores,
        )
    }

    pub fn n_probe(&self) -> usize {
        self.probe_images.len()
    }

    pub fn n_gallery(&self) -> usize {
        self.gallery_images.len()
    }

    pub fn probe_images(&self) -> &[String] {
        &self.probe_images
    }

    pub fn gallery_images(&self) -> &[String] {
        &self.gallery_images
    }

    pub fn probe_scores(&self) -> &[f64] {
        &self.probe_scores
    }

    pub fn gallery_scores(&self) -> &[f64] {
        &self.gallery_scores
    }

    pub fn cross_scores(&self) -> &[f64] {
        &self.cross_scores
    }

    pub fn probe_score(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.probe_scores[tri_index(self.n_probe(), a, b)]
    }

    pub fn gallery_score(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.gallery_scores[tri_index(self.n_gallery(), a, b)]
    }

    pub fn cross_score(&self, probe: usize, gallery: usize) -> f64 {
        self.cross_scores[probe * self.n_gallery() + gallery]
    }

    pub fn edge_count(&self) -> usize {
        self.probe_scores.len() + self.gallery_scores.len() + self.cross_scores.len()
    }

    /// The same graph with probe and gallery exchanged.
    pub fn swapped(&self) -> Self {
        let (np, ng) = (self.n_probe(), self.n_gallery());
        let mut cross = Vec::with_capacity(np * ng);
        for j in 0..ng {
            for i in 0..np {
                cross.push(self.cross_score(i, j));
            }
        }
        Self {
            probe_images: self.gallery_images.clone(),
            gallery_images: self.probe_images.clone(),
            probe_scores: self.gallery_scores.clone(),
            gallery_scores: self.probe_scores.clone(),
            cross_scores: cross,
        }
    }

    /// Reorder images: new vertex `k` of each identity is old vertex `perm[k]`.
    pub fn permuted(&self, probe_perm: &[usize], gallery_perm: &[usize]) -> Result<Self> {
        let (np, ng) = (self.n_probe(), self.n_gallery());
        if !is_permutation(probe_perm, np) || !is_permutation(gallery_perm, ng) {
            return Err(Error::param("permutation", "not a permutation of the identity's images"));
        }
        let within = |n: usize, perm: &[usize], score: &dyn Fn(usize, usize) -> f64| {
            let mut out = Vec::with_capacity(pair_count(n));
            for a in 0..n {
                for b in a + 1..n {
                    out.push(score(perm[a], perm[b]));
                }
            }
            out
        };
        let probe_scores = within(np, probe_perm, &|a, b| self.probe_score(a, b));
        let gallery_scores = within(ng, gallery_perm, &|a, b| self.gallery_score(a, b));
        let mut cross = Vec::with_capacity(np * ng);
        for &i in probe_perm {
            for &j in gallery_perm {
                cross.push(self.cross_score(i, j));
            }
        }
        Ok(Self {
            probe_images: probe_perm.iter().map(|&i| self.probe_images[i].clone()).collect(),
            gallery_images: gallery_perm.iter().map(|&j| self.gallery_images[j].clone()).collect(),
            probe_scores,
            gallery_scores,
            cross_scores: cross,
        })
    }
}

fn is_permutation(perm: &[usize], n: usize) -> bool {
    let mut seen = alloc::vec![false; n];
    perm.len() == n && perm.iter().all(|&i| i < n && !core::mem::replace(&mut seen[i], true))
}

/// Membership over the edges of a pair graph, stored per partition in the
/// same layout as the graph's scores.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeSet {
    pub probe: Vec<bool>,
    pub gallery: Vec<bool>,
    pub cross: Vec<bool>,
}

impl EdgeSet {
    pub fn empty(g: &IdPairGraph) -> Self {
        Self {
            probe: alloc::vec![false; g.probe_scores.len()],
            gallery: alloc::vec![false; g.gallery_scores.len()],
            cross: alloc::vec![false; g.cross_scores.len()],
        }
    }

    pub fn len(&self) -> usize {
        [&self.probe, &self.gallery, &self.cross].iter().map(|p| p.iter().filter(|&&b| b).count()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Edges of the graph not in this set.
    pub fn complement(&self) -> Self {
        let flip = |v: &Vec<bool>| v.iter().map(|b| !b).collect();
        Self { probe: flip(&self.probe), gallery: flip(&self.gallery), cross: flip(&self.cross) }
    }

    pub fn fits(&self, g: &IdPairGraph) -> bool {
        self.probe.len() == g.probe_scores.len()
            && self.gallery.len() == g.gallery_scores.len()
            && self.cross.len() == g.cross_scores.len()
    }
}

// Cluster label per vertex; an edge is a match edge when both endpoints carry
// the same non-zero label. Label 0 marks an image that matches nothing.
const ALONE: u8 = 0;

/// Match edges of one likelihood term.
///
/// `s1`/`s2` are the summation subsets `S` of the probe/gallery images (the
/// images that stay with their identity); the images outside them are the
/// fraudulent ones. `h = 1, 2` take no subsets, `h = 3, 4` take `s1`,
/// `h = 5, 6` take `s2` and `h = 7` takes both.
pub fn term_match_edges(
    g: &IdPairGraph,
    h: Hypothesis,
    s1: Option<VertexSet>,
    s2: Option<VertexSet>,
) -> Result<EdgeSet> {
    let (np, ng) = (g.n_probe(), g.n_gallery());
    let arity_ok = s1.is_some() == h.needs_probe_subset()
        && s2.is_some() == h.needs_gallery_subset()
        && s1.is_none_or(|s| s.is_proper_nonempty(np))
        && s2.is_none_or(|s| s.is_proper_nonempty(ng));
    if !arity_ok {
        return Err(Error::SubsetArity { hypothesis: h });
    }
    let in1 = |i: usize| s1.is_some_and(|s| s.contains(i));
    let in2 = |j: usize| s2.is_some_and(|s| s.contains(j));

    let (a, b) = (1u8, 2u8);
    let probe_label = |i: usize| match h {
        Hypothesis::NoFraud | Hypothesis::MultiId => a,
        Hypothesis::GalleryMismatch | Hypothesis::GalleryMixedId => a,
        Hypothesis::ProbeMismatch => {
            if in1(i) {
                a
            } else {
                ALONE
            }
        }
        Hypothesis::ProbeMixedId => {
            if in1(i) {
                a
            } else {
                b
            }
        }
        Hypothesis::CrossedId => {
            if in1(i) {
                a
            } else {
                b
            }
        }
    };
    let gallery_label = |j: usize| match h {
        Hypothesis::NoFraud => b,
        Hypothesis::MultiId => a,
        Hypothesis::ProbeMismatch | Hypothesis::ProbeMixedId => b,
        Hypothesis::GalleryMismatch => {
            if in2(j) {
                b
            } else {
                ALONE
            }
        }
        Hypothesis::GalleryMixedId => {
            if in2(j) {
                b
            } else {
                a
            }
        }
        Hypothesis::CrossedId => {
            if in2(j) {
                b
            } else {
                a
            }
        }
    };
    let joined = |x: u8, y: u8| x != ALONE && x == y;

    let mut set = EdgeSet::empty(g);
    let mut k = 0;
    for i in 0..np {
        for j in i + 1..np {
            set.probe[k] = joined(probe_label(i), probe_label(j));
            k += 1;
        }
    }
    k = 0;
    for i in 0..ng {
        for j in i + 1..ng {
            set.gallery[k] = joined(gallery_label(i), gallery_label(j));
            k += 1;
        }
    }
    for i in 0..np {
        for j in 0..ng {
            set.cross[i * ng + j] = joined(probe_label(i), gallery_label(j));
        }
    }
    Ok(set)
}
