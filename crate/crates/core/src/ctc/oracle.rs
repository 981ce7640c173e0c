use std::collections::BTreeMap;

use super::{collapse, CtcError};
use crate::emissions::EmissionMatrix;
use crate::vocab::LabelSequence;

pub const BRUTE_FORCE_MAX_VOCAB: usize = 5;
pub const BRUTE_FORCE_MAX_FRAMES: usize = 8;

/// Enumerates all `V^T` frame paths and sums their probabilities per collapsed output.
///
/// Intended as a reference for the dynamic-programming routines; outputs reachable
/// only through zero-probability paths are omitted.
pub fn brute_force_posterior(
    emissions: &EmissionMatrix,
) -> Result<BTreeMap<LabelSequence, f64>, CtcError> {
    let (frames, vocab_size) = (emissions.frames(), emissions.vocab_size());
    if vocab_size > BRUTE_FORCE_MAX_VOCAB || frames > BRUTE_FORCE_MAX_FRAMES {
        return Err(CtcError::InstanceTooLarge { frames, vocab_size });
    }
    let mut posterior = BTreeMap::new();
    if frames == 0 {
        posterior.insert(LabelSequence::empty(), 1.0);
        return Ok(posterior);
    }
    let mut path = vec![0usize; frames];
    loop {
        let log_p: f64 = path
            .iter()
            .enumerate()
            .map(|(t, &v)| emissions.get(t, v))
            .sum();
        let p = log_p.exp();
        if p > 0.0 {
            *posterior.entry(collapse(&path)).or_insert(0.0) += p;
        }
        // odometer increment, last frame fastest
        let mut t = frames;
        loop {
            if t == 0 {
                return Ok(posterior);
            }
            t -= 1;
            path[t] += 1;
            if path[t] < vocab_size {
                break;
            }
            path[t] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_two_by_two() {
        let m = EmissionMatrix::from_probabilities(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let post = brute_force_posterior(&m).unwrap();
        assert_eq!(post.len(), 2);
        assert!((post[&LabelSequence::empty()] - 0.25).abs() < 1e-15);
        assert!((post[&LabelSequence::new(vec![1])] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn one_hot_path() {
        let m = EmissionMatrix::from_probabilities(&[
            vec![0.0, 1.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let post = brute_force_posterior(&m).unwrap();
        assert_eq!(post.len(), 1);
        assert_eq!(post[&LabelSequence::new(vec![1, 2])], 1.0);
    }

    #[test]
    fn too_large() {
        let m = EmissionMatrix::from_probabilities(&vec![vec![0.5, 0.5]; 9]).unwrap();
        assert!(matches!(
            brute_force_posterior(&m),
            Err(CtcError::InstanceTooLarge { frames: 9, .. })
        ));
    }
}
