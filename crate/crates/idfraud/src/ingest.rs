//! Identity manifests and matcher score files.
//!
//! Manifests are JSON, `{"identities": {"id1": ["img1", "img2"], ...}}`, and
//! keep the identities in file order. Score files are CSV rows
//! `image_a,image_b,score`; pair order does not matter.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::io::Read;
use std::path::Path;

use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Probe,
    Gallery,
}

/// Identities in manifest order, each with its ordered image ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdManifest {
    role: Role,
    identities: Vec<(String, Vec<String>)>,
}

struct OrderedIdentities(Vec<(String, Vec<String>)>);

impl<'de> Deserialize<'de> for OrderedIdentities {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct Ordered;

        impl<'de> Visitor<'de> for Ordered {
            type Value = OrderedIdentities;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map from identity id to a list of image ids")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<Self::Value, A::Error> {
                let mut seen = BTreeSet::new();
                let mut out = Vec::new();
                while let Some((id, images)) = map.next_entry::<String, Vec<String>>()? {
                    if !seen.insert(id.clone()) {
                        return Err(de::Error::custom(format!("duplicate identity id {id:?}")));
                    }
                    let mut unique = BTreeSet::new();
                    if let Some(dup) = images.iter().find(|i| !unique.insert(i.as_str())) {
                        return Err(de::Error::custom(format!(
                            "image {dup:?} listed twice in identity {id:?}"
                        )));
                    }
                    out.push((id, images));
                }
                Ok(OrderedIdentities(out))
            }
        }

        deserializer.deserialize_map(Ordered)
    }
}

#[derive(Deserialize)]
struct ManifestFile {
    identities: OrderedIdentities,
}

impl IdManifest {
    pub fn new(role: Role, identities: Vec<(String, Vec<String>)>) -> Self {
        Self { role, identities }
    }

    pub fn from_json(text: &str, role: Role, path: &Path) -> Result<Self> {
        let file: ManifestFile =
            serde_json::from_str(text).map_err(|e| Error::parse(path, e.line() as u64, e.to_string()))?;
        if let Some((id, _)) = file.identities.0.iter().find(|(_, imgs)| imgs.is_empty()) {
            return Err(Error::parse(path, 0, format!("identity {id:?} has no images")));
        }
        Ok(Self { role, identities: file.identities.0 })
    }

    pub fn load(path: impl AsRef<Path>, role: Role) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, role, path)
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn len(&self) -> usize {
        self.identities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.identities.is_empty()
    }

    pub fn identities(&self) -> &[(String, Vec<String>)] {
        &self.identities
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.identities.iter().map(|(id, _)| id.as_str())
    }

    /// Manifest without the identity at `index`.
    pub fn without(&self, index: usize) -> Self {
        let mut identities = self.identities.clone();
        identities.remove(index);
        Self { role: self.role, identities }
    }
}

/// Symmetric lookup of matcher scores by image id pair.
#[derive(Debug, Clone, Default)]
pub struct ScoreStore {
    images: HashMap<String, u32>,
    scores: HashMap<(u32, u32), f64>,
}

impl ScoreStore {
    fn intern(&mut self, id: &str) -> u32 {
        if let Some(&k) = self.images.get(id) {
            return k;
        }
        let k = self.images.len() as u32;
        self.images.insert(id.to_owned(), k);
        k
    }

    fn key(a: u32, b: u32) -> (u32, u32) {
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// Insert a score; `false` if the pair already had a different score.
    pub fn insert(&mut self, a: &str, b: &str, score: f64) -> bool {
        let key = Self::key(self.intern(a), self.intern(b));
        match self.scores.insert(key, score) {
            Some(old) if old != score => {
                self.scores.insert(key, old);
                false
            }
            _ => true,
        }
    }

    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let ka = *self.images.get(a)?;
        let kb = *self.images.get(b)?;
        self.scores.get(&Self::key(ka, kb)).copied()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Parse `image_a,image_b,score` rows; a leading header row is skipped.
    pub fn from_csv<R: Read>(reader: R, path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let mut store = ScoreStore::default();
        for (k, record) in rdr.records().enumerate() {
            let record = record
                .map_err(|e| Error::parse(path, e.position().map_or(0, |p| p.line()), e.to_string()))?;
            let line = record.position().map_or(k as u64 + 1, |p| p.line());
            if record.len() != 3 {
                return Err(Error::parse(path, line, "expected three columns: image_a,image_b,score"));
            }
            let score = match record[2].parse::<f64>() {
                Ok(v) if v.is_nan() => return Err(Error::parse(path, line, "score is NaN")),
                Ok(v) => v,
                Err(_) if k == 0 => continue,
                Err(_) => return Err(Error::parse(path, line, format!("invalid score {:?}", &record[2]))),
            };
            if !(0.0..=1.0).contains(&score) {
                return Err(Error::ScoreOutOfRange { path: path.into(), line, value: score });
            }
            if !store.insert(&record[0], &record[1], score) {
                return Err(Error::parse(
                    path,
                    line,
                    format!("conflicting scores for pair ({}, {})", &record[0], &record[1]),
                ));
            }
        }
        Ok(store)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(file, path)
    }
}

/// Every image pair some probe/gallery evaluation needs but the store lacks,
/// in a deterministic order.
pub fn missing_scores(probe: &IdManifest, gallery: &IdManifest, store: &ScoreStore) -> Vec<(String, String)> {
    let mut missing = Vec::new();
    let mut seen = BTreeSet::new();
    let mut need = |a: &str, b: &str, missing: &mut Vec<(String, String)>| {
        let key = if a <= b { (a.to_owned(), b.to_owned()) } else { (b.to_owned(), a.to_owned()) };
        if store.get(a, b).is_none() && seen.insert(key) {
            missing.push((a.to_owned(), b.to_owned()));
        }
    };
    for manifest in [probe, gallery] {
        for (_, images) in manifest.identities() {
            for (i, a) in images.iter().enumerate() {
                for b in &images[i + 1..] {
                    need(a, b, &mut missing);
                }
            }
        }
    }
    for (_, p_images) in probe.identities() {
        for (_, g_images) in gallery.identities() {
            for a in p_images {
                for b in g_images {
                    need(a, b, &mut missing);
                }
            }
        }
    }
    missing
}

/// Load both manifests and the score file, and check that every score
/// needed by some probe/gallery pair is present.
pub fn ingest(
    probe_path: impl AsRef<Path>,
    gallery_path: impl AsRef<Path>,
    scores_path: impl AsRef<Path>,
) -> Result<(IdManifest, IdManifest, ScoreStore)> {
    let probe = IdManifest::load(probe_path, Role::Probe)?;
    let gallery = IdManifest::load(gallery_path, Role::Gallery)?;
    let store = ScoreStore::load(scores_path)?;
    check_complete(&probe, &gallery, &store)?;
    Ok((probe, gallery, store))
}

pub fn check_complete(probe: &IdManifest, gallery: &IdManifest, store: &ScoreStore) -> Result<()> {
    let missing = missing_scores(probe, gallery, store);
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::Completeness { missing })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MANIFEST_P: &str = r#"{"identities": {"p1": ["a1", "a2"]}}"#;
    const MANIFEST_G: &str = r#"{"identities": {"g1": ["b1", "b2"]}}"#;
    const SCORES: &str =
        "image_a,image_b,score\na1,a2,0.9\nb2,b1,0.8\na1,b1,0.1\na1,b2,0.2\nb1,a2,0.3\na2,b2,0.4\n";

    fn manifests() -> (IdManifest, IdManifest) {
        (
            IdManifest::from_json(MANIFEST_P, Role::Probe, Path::new("p.json")).unwrap(),
            IdManifest::from_json(MANIFEST_G, Role::Gallery, Path::new("g.json")).unwrap(),
        )
    }

    #[test]
    fn minimal_complete_input() {
        let (p, g) = manifests();
        let store = ScoreStore::from_csv(SCORES.as_bytes(), Path::new("s.csv")).unwrap();
        assert_eq!(store.len(), 6);
        assert_eq!(store.get("b1", "b2"), Some(0.8));
        assert_eq!(store.get("a2", "b1"), Some(0.3));
        check_complete(&p, &g, &store).unwrap();
    }

    #[test]
    fn missing_pair_is_named() {
        let (p, g) = manifests();
        let text = SCORES.replace("a2,b2,0.4\n", "");
        let store = ScoreStore::from_csv(text.as_bytes(), Path::new("s.csv")).unwrap();
        let err = check_complete(&p, &g, &store).unwrap_err();
        match &err {
            Error::Completeness { missing } => assert_eq!(missing, &[("a2".into(), "b2".into())]),
            other => panic!("{other}"),
        }
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("(a2, b2)"));
    }

    #[test]
    fn out_of_range_score() {
        let text = SCORES.replace("0.4", "1.2");
        let err = ScoreStore::from_csv(text.as_bytes(), Path::new("s.csv")).unwrap_err();
        assert!(matches!(err, Error::ScoreOutOfRange { line: 7, .. }), "{err}");
        assert_eq!(err.exit_code(), 4);
    }

    #[test]
    fn malformed_rows_report_line() {
        let err = ScoreStore::from_csv("a,b,0.5\na,c\n".as_bytes(), Path::new("s.csv")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = ScoreStore::from_csv("a,b,0.5\na,c,x\n".as_bytes(), Path::new("s.csv")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = ScoreStore::from_csv("a,b,0.5\nb,a,0.6\n".as_bytes(), Path::new("s.csv")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        // identical duplicates are fine
        ScoreStore::from_csv("a,b,0.5\nb,a,0.5\n".as_bytes(), Path::new("s.csv")).unwrap();
    }

    #[test]
    fn manifest_order_and_validation() {
        let m = IdManifest::from_json(
            r#"{"identities": {"z": ["1"], "a": ["2", "3"], "m": ["4"]}}"#,
            Role::Gallery,
            Path::new("g.json"),
        )
        .unwrap();
        assert_eq!(m.ids().collect::<Vec<_>>(), ["z", "a", "m"]);
        let p = Path::new("g.json");
        assert!(IdManifest::from_json(r#"{"identities": {"a": ["1"], "a": ["2"]}}"#, Role::Probe, p).is_err());
        assert!(IdManifest::from_json(r#"{"identities": {"a": ["1", "1"]}}"#, Role::Probe, p).is_err());
        assert!(IdManifest::from_json(r#"{"identities": {"a": []}}"#, Role::Probe, p).is_err());
        let err = IdManifest::from_json(r#"{"identities": "#, Role::Probe, p).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
