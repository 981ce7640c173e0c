//! Seeded synthetic emissions and the end-to-end experiment harness built on them.
//!
//! A target is laid out on a canonical alignment: `blank_gap` blank frames, then for
//! every token `frames_per_token` token frames followed by `blank_gap` blanks (at least
//! one blank separates repeated tokens). Each frame gives `1 - noise_eps - m` to the
//! aligned token, `m` to its confusion partner and spreads `noise_eps` over every other
//! token with random weights.
//!
//! `m` is the pair's `mix`, moved per token occurrence by up to `mix_jitter` in either
//! direction. With jitter the partner sometimes outweighs the true token, which is what
//! gives a language model something to fix.

pub mod corpus;
pub mod experiment;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use thiserror::Error;

use crate::emissions::{EmissionError, EmissionMatrix};
use crate::vocab::{LabelSequence, TokenId, Vocabulary, BLANK_ID};

pub use corpus::generate_corpus;
pub use experiment::{run_experiment, ExperimentConfig, ExperimentError};

/// Most mass that noise plus confusion may take from the true token.
pub const MAX_DIVERTED_MASS: f64 = 0.9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("token {0:?} is not in the vocabulary")]
    TokenNotInVocab(String),
    #[error("token id {0} is outside the vocabulary")]
    TokenIdOutOfRange(TokenId),
    #[error("frames_per_token must be at least 1")]
    NoTokenFrames,
    #[error("noise_eps must lie in [0, 1), got {0}")]
    BadNoise(f64),
    #[error("confusion {0:?}: mix must lie in [0, 0.5] and the jitter may not push it outside [0, 1 - noise]")]
    BadMix(String),
    #[error("confusion {0:?}: noise plus mix exceeds 0.9")]
    TooMuchMass(String),
    #[error("confusion {0:?} involves the blank or pairs a token with itself")]
    BadPair(String),
    #[error("token {0:?} has more than one confusion partner")]
    DuplicateConfusion(String),
    #[error("malformed confusion {0:?}, expected a:b:mix")]
    MalformedConfusion(String),
    #[error(transparent)]
    Emissions(#[from] EmissionError),
}

/// `from` frames leak `mix` probability to `to`.
#[derive(Debug, Clone, PartialEq)]
pub struct Confusion {
    pub from: String,
    pub to: String,
    pub mix: f64,
}

impl Confusion {
    /// Parses `a:b:mix`.
    pub fn parse(text: &str) -> Result<Self, SynthError> {
        let bad = || SynthError::MalformedConfusion(text.to_string());
        let mut parts = text.rsplitn(3, ':');
        let (Some(mix), Some(to), Some(from)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(bad());
        };
        if from.is_empty() || to.is_empty() {
            return Err(bad());
        }
        Ok(Confusion {
            from: from.to_string(),
            to: to.to_string(),
            mix: mix.parse().map_err(|_| bad())?,
        })
    }
}

impl std::fmt::Display for Confusion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}", self.from, self.to, self.mix)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub frames_per_token: usize,
    pub blank_gap: usize,
    pub noise_eps: f64,
    pub confusions: Vec<Confusion>,
    /// Half-width of the per-occurrence spread around each confusion's mix.
    pub mix_jitter: f64,
    pub seed: u64,
}

impl SynthParams {
    pub fn new(seed: u64) -> Self {
        SynthParams {
            frames_per_token: 4,
            blank_gap: 2,
            noise_eps: 0.0,
            confusions: Vec::new(),
            mix_jitter: 0.0,
            seed,
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        if self.frames_per_token == 0 {
            return Err(SynthError::NoTokenFrames);
        }
        if !(0.0..1.0).contains(&self.noise_eps) {
            return Err(SynthError::BadNoise(self.noise_eps));
        }
        for c in &self.confusions {
            let lo = c.mix - self.mix_jitter;
            let hi = c.mix + self.mix_jitter;
            if !(0.0..=0.5).contains(&c.mix) || lo < 0.0 || hi > 1.0 - self.noise_eps {
                return Err(SynthError::BadMix(c.to_string()));
            }
            if self.noise_eps + c.mix > MAX_DIVERTED_MASS {
                return Err(SynthError::TooMuchMass(c.to_string()));
            }
        }
        Ok(())
    }
}

/// Frame-level token ids of the canonical alignment.
pub fn canonical_alignment(
    target: &LabelSequence,
    frames_per_token: usize,
    blank_gap: usize,
) -> Vec<TokenId> {
    let mut path = vec![BLANK_ID; blank_gap];
    let mut prev = None;
    for &tok in target.ids() {
        if blank_gap == 0 && prev == Some(tok) {
            path.push(BLANK_ID);
        }
        path.extend(std::iter::repeat_n(tok, frames_per_token));
        path.extend(std::iter::repeat_n(BLANK_ID, blank_gap));
        prev = Some(tok);
    }
    path
}

/// Uniform draw in `[0, 1)` with 53 random bits.
pub(crate) fn unit_f64(rng: &mut SplitMix64) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Independent seed for stream `index` of a run seeded with `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut rng = SplitMix64::seed_from_u64(seed ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    rng.next_u64()
}

/// Builds a log-probability matrix whose best path spells `target`.
pub fn synth_emissions(
    target: &LabelSequence,
    vocab: &Vocabulary,
    params: &SynthParams,
) -> Result<EmissionMatrix, SynthError> {
    params.validate()?;
    let v = vocab.len();
    if let Some(&bad) = target.ids().iter().find(|&&id| id >= v) {
        return Err(SynthError::TokenIdOutOfRange(bad));
    }
    // partner[id] = (partner id, mix)
    let mut partner: Vec<Option<(TokenId, f64)>> = vec![None; v];
    for c in &params.confusions {
        let from = vocab
            .id(&c.from)
            .ok_or_else(|| SynthError::TokenNotInVocab(c.from.clone()))?;
        let to = vocab
            .id(&c.to)
            .ok_or_else(|| SynthError::TokenNotInVocab(c.to.clone()))?;
        if from == BLANK_ID || to == BLANK_ID || from == to {
            return Err(SynthError::BadPair(c.to_string()));
        }
        if partner[from].replace((to, c.mix)).is_some() {
            return Err(SynthError::DuplicateConfusion(c.from.clone()));
        }
    }

    let mut rng = SplitMix64::seed_from_u64(params.seed);
    let eps = params.noise_eps;
    let mut values = Vec::new();
    let mut row = vec![0.0; v];
    let mut weights = vec![0.0; v];
    let mut emit = |tok: TokenId, mate: Option<(TokenId, f64)>, rng: &mut SplitMix64| {
        row.iter_mut().for_each(|p| *p = 0.0);
        let mix = mate.map_or(0.0, |m| m.1);
        row[tok] = 1.0 - eps - mix;
        if let Some((to, _)) = mate {
            row[to] = mix;
        }
        let skip = |i: usize| i == tok || mate.is_some_and(|m| m.0 == i);
        if eps > 0.0 {
            let mut total = 0.0;
            for (i, w) in weights.iter_mut().enumerate() {
                *w = if skip(i) { 0.0 } else { unit_f64(rng) };
                total += *w;
            }
            if total > 0.0 {
                for i in 0..v {
                    row[i] += eps * weights[i] / total;
                }
            } else {
                row[tok] += eps;
            }
        }
        values.extend(row.iter().map(|p| p.ln()));
    };

    let mut prev = None;
    for _ in 0..params.blank_gap {
        emit(BLANK_ID, None, &mut rng);
    }
    for &tok in target.ids() {
        if params.blank_gap == 0 && prev == Some(tok) {
            emit(BLANK_ID, None, &mut rng);
        }
        let mate = partner[tok].map(|(to, mix)| {
            let m = if params.mix_jitter > 0.0 {
                mix + params.mix_jitter * (2.0 * unit_f64(&mut rng) - 1.0)
            } else {
                mix
            };
            (to, m)
        });
        for _ in 0..params.frames_per_token {
            emit(tok, mate, &mut rng);
        }
        for _ in 0..params.blank_gap {
            emit(BLANK_ID, None, &mut rng);
        }
        prev = Some(tok);
    }
    let frames = values.len() / v;
    Ok(EmissionMatrix::new(frames, v, values)?)
}

/// [`synth_emissions`] on token texts.
pub fn synth_from_texts<S: AsRef<str>>(
    target: &[S],
    vocab: &Vocabulary,
    params: &SynthParams,
) -> Result<EmissionMatrix, SynthError> {
    let mut ids = Vec::with_capacity(target.len());
    for t in target {
        let t = t.as_ref();
        match vocab.id(t) {
            Some(id) if id != BLANK_ID => ids.push(id),
            _ => return Err(SynthError::TokenNotInVocab(t.to_string())),
        }
    }
    synth_emissions(&LabelSequence::new(ids), vocab, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctc::{brute_force_posterior, collapse, greedy_decode};
    use crate::emissions::EmissionFormat;
    use crate::vocab::SchemeTag;

    fn tones() -> Vocabulary {
        Vocabulary::from_tokens(["T1", "T2", "T3", "T4", "T5"], SchemeTag::Tone).unwrap()
    }

    #[test]
    fn noiseless_greedy_recovers_target() {
        let v = tones();
        let target = v.encode(&["T1", "T1", "T3", "T5"]).unwrap();
        for (fpt, gap) in [(4, 2), (2, 0), (1, 1)] {
            let p = SynthParams {
                frames_per_token: fpt,
                blank_gap: gap,
                ..SynthParams::new(1)
            };
            let m = synth_emissions(&target, &v, &p).unwrap();
            assert!(m.is_normalized());
            assert_eq!(greedy_decode(&m).labels, target, "fpt={fpt} gap={gap}");
            assert_eq!(m.frames(), canonical_alignment(&target, fpt, gap).len());
        }
    }

    #[test]
    fn alignment_layout() {
        let target = LabelSequence::new(vec![1, 1, 2]);
        assert_eq!(
            canonical_alignment(&target, 2, 1),
            [0, 1, 1, 0, 1, 1, 0, 2, 2, 0]
        );
        assert_eq!(canonical_alignment(&target, 2, 0), [1, 1, 0, 1, 1, 2, 2]);
        assert_eq!(collapse(&canonical_alignment(&target, 3, 0)), target);
    }

    #[test]
    fn same_seed_same_bytes() {
        let v = tones();
        let target = v.encode(&["T2", "T3", "T4"]).unwrap();
        let mut p = SynthParams::new(42);
        p.noise_eps = 0.2;
        p.confusions = vec![Confusion::parse("T3:T2:0.3").unwrap()];
        p.mix_jitter = 0.2;
        let a = synth_emissions(&target, &v, &p)
            .unwrap()
            .write(EmissionFormat::Binary)
            .unwrap();
        let b = synth_emissions(&target, &v, &p)
            .unwrap()
            .write(EmissionFormat::Binary)
            .unwrap();
        assert_eq!(a, b);
        p.seed = 43;
        let c = synth_emissions(&target, &v, &p)
            .unwrap()
            .write(EmissionFormat::Binary)
            .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rows_are_normalized_with_noise() {
        let v = tones();
        let target = v.encode(&["T2", "T3"]).unwrap();
        let mut p = SynthParams::new(7);
        p.noise_eps = 0.4;
        p.confusions = vec![Confusion::parse("T3:T2:0.45").unwrap()];
        let m = synth_emissions(&target, &v, &p).unwrap();
        for row in m.rows() {
            let s: f64 = row.iter().map(|x| x.exp()).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        // T3 frames keep 1 - 0.4 - 0.45 on T3 and exactly 0.45 on T2
        let t3 = 2 + 4 + 2;
        assert!((m.get(t3, 3).exp() - 0.15).abs() < 1e-12);
        assert!((m.get(t3, 2).exp() - 0.45).abs() < 1e-12);
    }

    #[test]
    fn confusable_frames_leak_mass_to_partner() {
        // four columns keep the brute-force oracle in range
        let v = Vocabulary::from_tokens(["T1", "T2", "T3"], SchemeTag::Tone).unwrap();
        let target = v.encode(&["T2", "T3"]).unwrap();
        let p = SynthParams {
            frames_per_token: 2,
            blank_gap: 1,
            confusions: vec![Confusion::parse("T3:T2:0.45").unwrap()],
            ..SynthParams::new(3)
        };
        let m = synth_emissions(&target, &v, &p).unwrap();
        let post = brute_force_posterior(&m).unwrap();
        let total: f64 = post.values().sum();
        assert!((total - 1.0).abs() < 1e-12);
        // every labeling except the target touches T2 at a T3 frame: 1 - 0.55^2
        let off = 1.0 - post[&target];
        assert!((off - (1.0 - 0.55f64.powi(2))).abs() < 1e-12);
        assert!(off >= 0.45);
        let t2t2 = v.encode(&["T2", "T2"]).unwrap();
        assert!((post[&t2t2] - 0.45f64.powi(2)).abs() < 1e-12);
    }

    #[test]
    fn validation_errors() {
        let v = tones();
        let t = v.encode(&["T1"]).unwrap();
        let with = |f: &dyn Fn(&mut SynthParams)| {
            let mut p = SynthParams::new(0);
            f(&mut p);
            synth_emissions(&t, &v, &p)
        };
        assert!(matches!(
            with(&|p| p.noise_eps = 1.0),
            Err(SynthError::BadNoise(_))
        ));
        assert!(matches!(
            with(&|p| p.frames_per_token = 0),
            Err(SynthError::NoTokenFrames)
        ));
        assert!(matches!(
            with(&|p| p.confusions = vec![Confusion::parse("T1:T2:0.6").unwrap()]),
            Err(SynthError::BadMix(_))
        ));
        assert!(matches!(
            with(&|p| {
                p.noise_eps = 0.5;
                p.confusions = vec![Confusion::parse("T1:T2:0.45").unwrap()];
            }),
            Err(SynthError::TooMuchMass(_))
        ));
        assert!(matches!(
            with(&|p| p.confusions = vec![Confusion::parse("T1:T9:0.1").unwrap()]),
            Err(SynthError::TokenNotInVocab(_))
        ));
        assert!(matches!(
            with(&|p| p.confusions = vec![Confusion::parse("T1:T1:0.1").unwrap()]),
            Err(SynthError::BadPair(_))
        ));
        assert!(matches!(
            synth_from_texts(&["T7"], &v, &SynthParams::new(0)),
            Err(SynthError::TokenNotInVocab(_))
        ));
        assert!(matches!(
            Confusion::parse("T1:0.3"),
            Err(SynthError::MalformedConfusion(_))
        ));
    }
}
