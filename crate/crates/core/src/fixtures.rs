//! Synthetic step densities used by the simulations and tests in place of
//! densities fitted to a real matcher.

use alloc::vec::Vec;

use crate::density::HistogramDensity;
use crate::likelihood::DensityPair;

// Match mass per tenth of the score range; 0.97 of it lies above 0.5.
const SEPARATED: [f64; 10] = [0.002, 0.003, 0.005, 0.01, 0.01, 0.03, 0.07, 0.17, 0.30, 0.40];
// 0.60 above 0.5.
const OVERLAPPING: [f64; 10] = [0.06, 0.07, 0.08, 0.09, 0.10, 0.10, 0.11, 0.12, 0.13, 0.14];

fn tenths() -> Vec<f64> {
    let mut e: Vec<f64> = (0..=10).map(|b| b as f64 / 10.0).collect();
    e[10] = 1.0;
    e
}

fn mirrored(masses: &[f64; 10]) -> DensityPair {
    let mut reversed = *masses;
    reversed.reverse();
    DensityPair::new(
        HistogramDensity::from_masses(tenths(), masses).expect("fixture masses are valid"),
        HistogramDensity::from_masses(tenths(), &reversed).expect("fixture masses are valid"),
    )
}

/// Match scores concentrated near 1, non-match scores near 0.
pub fn separated() -> DensityPair {
    mirrored(&SEPARATED)
}

/// Match and non-match scores that overlap heavily.
pub fn overlapping() -> DensityPair {
    mirrored(&OVERLAPPING)
}

/// Fraction of `h`'s probability mass at or above `threshold`.
pub fn mass_above(h: &HistogramDensity, threshold: f64) -> f64 {
    h.bin_masses()
        .iter()
        .zip(h.edges().windows(2))
        .map(|(m, w)| {
            if w[0] >= threshold {
                *m
            } else if w[1] <= threshold {
                0.0
            } else {
                m * (w[1] - threshold) / (w[1] - w[0])
            }
        })
        .sum()
}
