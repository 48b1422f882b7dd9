#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use idfraud::density_io::write_density_pair;
use idfraud_core::DensityPair;
use rand::rngs::StdRng;
use rand::SeedableRng;

/// Files of a synthetic probe/gallery dataset.
pub struct Dataset {
    pub probe: PathBuf,
    pub gallery: PathBuf,
    pub scores: PathBuf,
    pub densities: PathBuf,
}

pub struct Layout {
    pub probe_ids: usize,
    pub gallery_ids: usize,
    pub images: fn(usize) -> usize,
    /// (probe index, gallery index) pairs that are the same person.
    pub same_person: Vec<(usize, usize)>,
    pub seed: u64,
}

pub fn probe_id(k: usize) -> String {
    format!("P{k:03}")
}

pub fn gallery_id(k: usize) -> String {
    format!("G{k:03}")
}

fn manifest(ids: &[(String, Vec<String>)]) -> String {
    let map: serde_json::Map<String, serde_json::Value> =
        ids.iter().map(|(id, imgs)| (id.clone(), serde_json::json!(imgs))).collect();
    serde_json::to_string_pretty(&serde_json::json!({ "identities": map })).unwrap()
}

/// Write manifests, a complete score file and the density pair into `dir`.
/// Within-identity edges and cross edges of same-person pairs are drawn
/// from the match density, all other cross edges from the non-match one.
pub fn write_dataset(dir: &Path, layout: &Layout, d: &DensityPair) -> Dataset {
    let mut rng = StdRng::seed_from_u64(layout.seed);
    let ids = |n: usize, name: fn(usize) -> String| -> Vec<(String, Vec<String>)> {
        (0..n)
            .map(|k| {
                let id = name(k);
                let imgs = (0..(layout.images)(k)).map(|i| format!("{id}_{i}")).collect();
                (id, imgs)
            })
            .collect()
    };
    let probe = ids(layout.probe_ids, probe_id);
    let gallery = ids(layout.gallery_ids, gallery_id);

    let mut csv = String::from("image_a,image_b,score\n");
    let mut emit = |a: &str, b: &str, s: f64| writeln!(csv, "{a},{b},{s}").unwrap();
    for (_, imgs) in probe.iter().chain(&gallery) {
        for i in 0..imgs.len() {
            for j in i + 1..imgs.len() {
                emit(&imgs[i], &imgs[j], d.match_density.sample(&mut rng));
            }
        }
    }
    for (p, (_, p_imgs)) in probe.iter().enumerate() {
        for (g, (_, g_imgs)) in gallery.iter().enumerate() {
            let density =
                if layout.same_person.contains(&(p, g)) { &d.match_density } else { &d.nonmatch_density };
            for a in p_imgs {
                for b in g_imgs {
                    emit(a, b, density.sample(&mut rng));
                }
            }
        }
    }

    let out = Dataset {
        probe: dir.join("probe.json"),
        gallery: dir.join("gallery.json"),
        scores: dir.join("scores.csv"),
        densities: dir.join("densities.json"),
    };
    fs::write(&out.probe, manifest(&probe)).unwrap();
    fs::write(&out.gallery, manifest(&gallery)).unwrap();
    fs::write(&out.scores, csv).unwrap();
    write_density_pair(&out.densities, d).unwrap();
    out
}
