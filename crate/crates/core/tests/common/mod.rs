#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use supraseg::emissions::EmissionMatrix;
use supraseg::vocab::LabelSequence;

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Random normalized `T × V` matrix; some entries are pushed towards zero so rows are peaky.
pub fn random_normalized(rng: &mut StdRng, frames: usize, vocab: usize) -> EmissionMatrix {
    let rows: Vec<Vec<f64>> = (0..frames)
        .map(|_| {
            (0..vocab)
                .map(|_| {
                    let x: f64 = rng.random_range(0.01..1.0);
                    if rng.random_bool(0.2) {
                        x * 1e-3
                    } else {
                        x
                    }
                })
                .collect()
        })
        .collect();
    let rows: Vec<Vec<f64>> = rows
        .into_iter()
        .map(|r| {
            let s: f64 = r.iter().sum();
            r.into_iter().map(|x| x / s).collect()
        })
        .collect();
    EmissionMatrix::from_probabilities(&rows).unwrap()
}

/// Random unnormalized log-scores.
pub fn random_scores(rng: &mut StdRng, frames: usize, vocab: usize) -> EmissionMatrix {
    let values = (0..frames * vocab)
        .map(|_| rng.random_range(-4.0..1.0))
        .collect();
    EmissionMatrix::new(frames, vocab, values).unwrap()
}

/// Random non-blank target of length `len` over ids `1..vocab`.
pub fn random_target(rng: &mut StdRng, len: usize, vocab: usize) -> LabelSequence {
    LabelSequence::new((0..len).map(|_| rng.random_range(1..vocab)).collect())
}
