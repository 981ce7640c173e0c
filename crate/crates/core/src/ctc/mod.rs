//! CTC alignment semantics: collapse, exact loss and gradient, greedy decoding.
//!
//! All recursions run in natural-log space. Gradients are taken with respect to the
//! raw emission scores, with no softmax coupling: a caller that produced the scores
//! with a log-softmax applies its own Jacobian.

mod oracle;

pub use oracle::{brute_force_posterior, BRUTE_FORCE_MAX_FRAMES, BRUTE_FORCE_MAX_VOCAB};

use thiserror::Error;

use crate::emissions::EmissionMatrix;
use crate::logmath::log_add;
use crate::vocab::{LabelSequence, TokenId, BLANK_ID};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CtcError {
    #[error("target needs at least {required} frames, emissions have {frames}")]
    TargetTooLong { frames: usize, required: usize },
    #[error("target position {position} is the blank")]
    BlankInTarget { position: usize },
    #[error("target token {token} at position {position} is outside a vocabulary of {vocab_size}")]
    TokenOutOfRange {
        position: usize,
        token: TokenId,
        vocab_size: usize,
    },
    #[error("enumeration over {vocab_size}^{frames} paths exceeds the oracle limit")]
    InstanceTooLarge { frames: usize, vocab_size: usize },
}

/// Removes adjacent repeats, then blanks.
pub fn collapse(path: &[TokenId]) -> LabelSequence {
    let mut out = Vec::new();
    let mut prev = None;
    for &id in path {
        if Some(id) != prev && id != BLANK_ID {
            out.push(id);
        }
        prev = Some(id);
    }
    LabelSequence::new(out)
}

/// Blank-interleaved state sequence `blank, y1, blank, y2, …, blank`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtendedTarget {
    states: Vec<TokenId>,
}

impl ExtendedTarget {
    pub fn new(target: &LabelSequence) -> Self {
        let mut states = Vec::with_capacity(2 * target.len() + 1);
        states.push(BLANK_ID);
        for &id in target.ids() {
            states.push(id);
            states.push(BLANK_ID);
        }
        ExtendedTarget { states }
    }

    pub fn states(&self) -> &[TokenId] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Whether state `s` may be entered directly from `s - 2`, skipping a blank.
    #[inline]
    fn can_skip(&self, s: usize) -> bool {
        s >= 2 && self.states[s] != BLANK_ID && self.states[s] != self.states[s - 2]
    }
}

/// Output of [`ctc_loss`].
#[derive(Debug, Clone, PartialEq)]
pub struct CtcResult {
    /// `ln P(target | emissions)`.
    pub log_prob: f64,
    /// Row-major `T × V` matrix of `∂(−ln P)/∂ emission[t][v]`, when requested.
    ///
    /// When `log_prob` is `-inf` no path survives and every entry is zero.
    pub grad: Option<Vec<f64>>,
}

impl CtcResult {
    /// `−ln P`, the quantity minimized in training.
    pub fn loss(&self) -> f64 {
        -self.log_prob
    }
}

/// Minimum number of frames that can emit `target`.
pub fn required_frames(target: &LabelSequence) -> usize {
    target.len() + target.adjacent_repeats()
}

fn validate_target(emissions: &EmissionMatrix, target: &LabelSequence) -> Result<(), CtcError> {
    let vocab_size = emissions.vocab_size();
    for (position, &token) in target.ids().iter().enumerate() {
        if token == BLANK_ID {
            return Err(CtcError::BlankInTarget { position });
        }
        if token >= vocab_size {
            return Err(CtcError::TokenOutOfRange {
                position,
                token,
                vocab_size,
            });
        }
    }
    let required = required_frames(target);
    if emissions.frames() < required || emissions.frames() == 0 {
        return Err(CtcError::TargetTooLong {
            frames: emissions.frames(),
            required: required.max(1),
        });
    }
    Ok(())
}

/// Exact CTC log-likelihood by the forward recursion, plus the forward-backward
/// gradient when `want_grad` is set.
pub fn ctc_loss(
    emissions: &EmissionMatrix,
    target: &LabelSequence,
    want_grad: bool,
) -> Result<CtcResult, CtcError> {
    validate_target(emissions, target)?;
    let ext = ExtendedTarget::new(target);
    let frames = emissions.frames();
    let n = ext.len();

    let alpha = forward(emissions, &ext);
    let last = &alpha[(frames - 1) * n..];
    let log_prob = if n > 1 {
        log_add(last[n - 1], last[n - 2])
    } else {
        last[0]
    };

    let grad = want_grad.then(|| {
        let mut grad = vec![0.0; frames * emissions.vocab_size()];
        if log_prob == f64::NEG_INFINITY {
            return grad;
        }
        let beta = backward(emissions, &ext);
        for t in 0..frames {
            let row = &mut grad[t * emissions.vocab_size()..(t + 1) * emissions.vocab_size()];
            for s in 0..n {
                let occupancy = alpha[t * n + s] + beta[t * n + s] - log_prob;
                if occupancy > f64::NEG_INFINITY {
                    row[ext.states[s]] -= occupancy.exp();
                }
            }
        }
        grad
    });

    Ok(CtcResult { log_prob, grad })
}

/// `alpha[t][s]`: log mass of prefixes of length `t + 1` ending in state `s`,
/// including the emission at `t`.
fn forward(emissions: &EmissionMatrix, ext: &ExtendedTarget) -> Vec<f64> {
    let frames = emissions.frames();
    let n = ext.len();
    let mut alpha = vec![f64::NEG_INFINITY; frames * n];
    alpha[0] = emissions.get(0, ext.states[0]);
    if n > 1 {
        alpha[1] = emissions.get(0, ext.states[1]);
    }
    for t in 1..frames {
        let (prev, cur) = alpha.split_at_mut(t * n);
        let prev = &prev[(t - 1) * n..];
        let cur = &mut cur[..n];
        for s in 0..n {
            let mut acc = prev[s];
            if s >= 1 {
                acc = log_add(acc, prev[s - 1]);
            }
            if ext.can_skip(s) {
                acc = log_add(acc, prev[s - 2]);
            }
            cur[s] = acc + emissions.get(t, ext.states[s]);
        }
    }
    alpha
}

/// `beta[t][s]`: log mass of completions from state `s` at `t`, excluding the
/// emission at `t`.
fn backward(emissions: &EmissionMatrix, ext: &ExtendedTarget) -> Vec<f64> {
    let frames = emissions.frames();
    let n = ext.len();
    let mut beta = vec![f64::NEG_INFINITY; frames * n];
    beta[(frames - 1) * n + n - 1] = 0.0;
    if n > 1 {
        beta[(frames - 1) * n + n - 2] = 0.0;
    }
    for t in (0..frames - 1).rev() {
        let (cur, next) = beta.split_at_mut((t + 1) * n);
        let cur = &mut cur[t * n..];
        let next = &next[..n];
        for s in 0..n {
            let mut acc = next[s] + emissions.get(t + 1, ext.states[s]);
            if s + 1 < n {
                acc = log_add(acc, next[s + 1] + emissions.get(t + 1, ext.states[s + 1]));
            }
            if s + 2 < n && ext.can_skip(s + 2) {
                acc = log_add(acc, next[s + 2] + emissions.get(t + 1, ext.states[s + 2]));
            }
            cur[s] = acc;
        }
    }
    beta
}

/// Result of best-path decoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GreedyOutput {
    pub labels: LabelSequence,
    /// Per-frame argmax token ids.
    pub frame_path: Vec<TokenId>,
}

/// Index of the row maximum; ties go to the lowest id.
pub fn argmax(row: &[f64]) -> TokenId {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

pub fn greedy_decode(emissions: &EmissionMatrix) -> GreedyOutput {
    let frame_path: Vec<TokenId> = emissions
        .rows()
        .take(emissions.frames())
        .map(argmax)
        .collect();
    GreedyOutput {
        labels: collapse(&frame_path),
        frame_path,
    }
}
