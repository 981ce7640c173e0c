//! CTC prefix beam search with optional n-gram shallow fusion.
//!
//! Each hypothesis tracks the log mass of its prefix split by whether the last frame
//! was a blank. With an LM attached the ranking score is
//!
//! ```text
//! fused = ln(P_blank + P_nonblank) + α · ln(10) · Σ log10 P_lm + β · |prefix|
//! ```
//!
//! and the LM term is updated exactly when a token is appended. Without an LM the
//! ranking score is the acoustic prefix log-probability alone.
//!
//! Per-frame pruning only drops candidate *new tokens* whose emission score is below
//! `prune_log_floor`; blank and repeat extensions of surviving hypotheses are always
//! kept, and no accumulated score is ever thresholded. With the floor at `-inf` and a
//! beam at least as wide as the number of distinct prefixes the search is exact.

use std::cmp::Ordering;
use std::collections::HashMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::emissions::EmissionMatrix;
use crate::lm::{LmState, NGramModel, EOS};
use crate::logmath::{log_add, LN_10};
use crate::vocab::{LabelSequence, TokenId, Vocabulary, BLANK_ID};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("emissions have {emissions} columns but the vocabulary has {vocab} tokens")]
    VocabularyMismatch { emissions: usize, vocab: usize },
    #[error("beam width must be at least 1")]
    ZeroBeam,
    #[error("batch item {index}: {source}")]
    Batch {
        index: usize,
        #[source]
        source: Box<DecodeError>,
    },
    #[error("could not start worker pool: {0}")]
    Pool(String),
}

/// Search settings. Defaults: width 32, α 1.2, β 0.5, floor `ln 1e-4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamParams {
    pub beam_width: usize,
    pub lm_weight: f64,
    pub token_bonus: f64,
    pub prune_log_floor: f64,
    /// Add the `</s>` LM term to finished hypotheses.
    pub lm_eos: bool,
}

impl Default for BeamParams {
    fn default() -> Self {
        BeamParams {
            beam_width: 32,
            lm_weight: 1.2,
            token_bonus: 0.5,
            prune_log_floor: -9.21,
            lm_eos: false,
        }
    }
}

impl BeamParams {
    /// Unpruned search of the given width.
    pub fn exhaustive(beam_width: usize) -> Self {
        BeamParams {
            beam_width,
            prune_log_floor: f64::NEG_INFINITY,
            ..Default::default()
        }
    }
}

/// A finished hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub labels: LabelSequence,
    /// Ranking score (equals `log_prob` when no LM is attached).
    pub score: f64,
    /// Acoustic prefix log-probability, `logsumexp(logp_blank, logp_nonblank)`.
    pub log_prob: f64,
    pub logp_blank: f64,
    pub logp_nonblank: f64,
    /// Accumulated LM log10 score (zero without an LM).
    pub lm_log10: f64,
}

const ROOT: u32 = 0;

/// Canonical prefix trie: each distinct prefix has exactly one node.
struct PrefixTrie {
    parent: Vec<u32>,
    token: Vec<TokenId>,
    len: Vec<u32>,
    children: HashMap<(u32, TokenId), u32>,
}

impl PrefixTrie {
    fn new() -> Self {
        PrefixTrie {
            parent: vec![ROOT],
            token: vec![BLANK_ID],
            len: vec![0],
            children: HashMap::new(),
        }
    }

    fn child(&mut self, node: u32, token: TokenId) -> u32 {
        let next = self.parent.len() as u32;
        let id = *self.children.entry((node, token)).or_insert(next);
        if id == next {
            self.parent.push(node);
            self.token.push(token);
            self.len.push(self.len[node as usize] + 1);
        }
        id
    }

    fn last(&self, node: u32) -> Option<TokenId> {
        (node != ROOT).then(|| self.token[node as usize])
    }

    fn prefix(&self, mut node: u32) -> Vec<TokenId> {
        let mut out = Vec::with_capacity(self.len[node as usize] as usize);
        while node != ROOT {
            out.push(self.token[node as usize]);
            node = self.parent[node as usize];
        }
        out.reverse();
        out
    }
}

#[derive(Clone)]
struct Beam {
    node: u32,
    pb: f64,
    pnb: f64,
    lm_state: LmState,
    lm_total: f64,
    score: f64,
}

/// A ranked item: an existing beam entry or a new extension `(parent, token)`.
#[derive(Clone)]
struct Candidate {
    score: f64,
    len: u32,
    parent: u32,
    token: Option<TokenId>,
    /// Index into `next` for existing entries, into `fresh` for extensions.
    slot: usize,
}

/// Score descending, then shorter prefix, then lexicographic token ids.
fn rank(trie: &PrefixTrie, a: &Candidate, b: &Candidate) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.len.cmp(&b.len))
        .then_with(|| {
            let materialize = |c: &Candidate| {
                let mut p = trie.prefix(c.parent);
                p.extend(c.token);
                p
            };
            materialize(a).cmp(&materialize(b))
        })
}

struct Fresh {
    beam: usize,
    token: TokenId,
    contrib: f64,
    lm: Option<(f64, LmState)>,
}

/// Prefix beam search over one vocabulary, optionally fused with an n-gram LM.
pub struct BeamDecoder<'a> {
    vocab_size: usize,
    params: BeamParams,
    lm: Option<&'a NGramModel>,
    lm_ids: Vec<u32>,
    lm_bound: f64,
}

impl<'a> BeamDecoder<'a> {
    pub fn new(
        vocab: &Vocabulary,
        params: BeamParams,
        lm: Option<&'a NGramModel>,
    ) -> Result<Self, DecodeError> {
        if params.beam_width == 0 {
            return Err(DecodeError::ZeroBeam);
        }
        let lm_ids = match lm {
            Some(model) => vocab.tokens().map(|t| model.lookup(t.text)).collect(),
            None => Vec::new(),
        };
        Ok(BeamDecoder {
            vocab_size: vocab.len(),
            params,
            lm,
            lm_ids,
            lm_bound: lm.map_or(0.0, NGramModel::max_step_score),
        })
    }

    pub fn params(&self) -> &BeamParams {
        &self.params
    }

    fn lm_factor(&self) -> f64 {
        self.params.lm_weight * LN_10
    }

    fn fused(&self, log_prob: f64, lm_total: f64, len: u32) -> f64 {
        if self.lm.is_none() {
            return log_prob;
        }
        let mut score = log_prob;
        if self.params.lm_weight != 0.0 {
            score += self.lm_factor() * lm_total;
        }
        if self.params.token_bonus != 0.0 {
            score += self.params.token_bonus * len as f64;
        }
        score
    }

    /// Decodes one utterance, returning up to `beam_width` hypotheses, best first.
    pub fn decode(&self, emissions: &EmissionMatrix) -> Result<Vec<Hypothesis>, DecodeError> {
        if emissions.vocab_size() != self.vocab_size {
            return Err(DecodeError::VocabularyMismatch {
                emissions: emissions.vocab_size(),
                vocab: self.vocab_size,
            });
        }
        let width = self.params.beam_width;
        let mut trie = PrefixTrie::new();
        let start_state = self.lm.map(|m| m.begin_sentence()).unwrap_or_default();
        let mut beam = vec![Beam {
            node: ROOT,
            pb: 0.0,
            pnb: f64::NEG_INFINITY,
            lm_state: start_state,
            lm_total: 0.0,
            score: 0.0,
        }];

        let mut active: Vec<TokenId> = Vec::with_capacity(self.vocab_size);
        let mut fresh: Vec<Fresh> = Vec::new();
        let mut ranked: Vec<Candidate> = Vec::new();

        for t in 0..emissions.frames() {
            let row = emissions.row(t);
            let blank = row[BLANK_ID];
            active.clear();
            active.extend(
                (1..self.vocab_size).filter(|&c| {
                    row[c] > f64::NEG_INFINITY && row[c] >= self.params.prune_log_floor
                }),
            );

            // blank and repeat extensions keep the prefix
            let mut next: Vec<Beam> = beam
                .iter()
                .map(|h| {
                    let total = log_add(h.pb, h.pnb);
                    let pnb = match trie.last(h.node) {
                        Some(last) => h.pnb + row[last],
                        None => f64::NEG_INFINITY,
                    };
                    Beam {
                        pb: total + blank,
                        pnb,
                        ..h.clone()
                    }
                })
                .collect();

            // beam entries whose prefix is another entry's prefix plus one token
            let index_of: HashMap<u32, usize> =
                beam.iter().enumerate().map(|(i, h)| (h.node, i)).collect();
            let mut extends: Vec<Vec<(TokenId, usize)>> = vec![Vec::new(); beam.len()];
            for (j, h) in beam.iter().enumerate() {
                if h.node != ROOT {
                    if let Some(&i) = index_of.get(&trie.parent[h.node as usize]) {
                        extends[i].push((trie.token[h.node as usize], j));
                    }
                }
            }

            fresh.clear();
            for (i, h) in beam.iter().enumerate() {
                let last = trie.last(h.node);
                let total = log_add(h.pb, h.pnb);
                for &c in &active {
                    let base = if Some(c) == last { h.pb } else { total };
                    let contrib = base + row[c];
                    if contrib == f64::NEG_INFINITY {
                        continue;
                    }
                    match extends[i].iter().find(|&&(tok, _)| tok == c) {
                        Some(&(_, j)) => next[j].pnb = log_add(next[j].pnb, contrib),
                        None => fresh.push(Fresh {
                            beam: i,
                            token: c,
                            contrib,
                            lm: None,
                        }),
                    }
                }
            }

            ranked.clear();
            for (slot, h) in next.iter_mut().enumerate() {
                if h.pb == f64::NEG_INFINITY && h.pnb == f64::NEG_INFINITY {
                    continue;
                }
                h.score = self.fused(log_add(h.pb, h.pnb), h.lm_total, trie.len[h.node as usize]);
                ranked.push(Candidate {
                    score: h.score,
                    len: trie.len[h.node as usize],
                    parent: h.node,
                    token: None,
                    slot,
                });
            }
            self.rank_fresh(&trie, &beam, &mut fresh, &mut ranked, width);

            let keep = width.min(ranked.len());
            if ranked.len() > keep {
                ranked.select_nth_unstable_by(keep - 1, |a, b| rank(&trie, a, b));
                ranked.truncate(keep);
            }
            ranked.sort_by(|a, b| rank(&trie, a, b));

            beam = ranked
                .iter()
                .map(|c| match c.token {
                    None => next[c.slot].clone(),
                    Some(token) => {
                        let f = &mut fresh[c.slot];
                        let parent = &beam[f.beam];
                        let node = trie.child(parent.node, token);
                        let (lm_total, lm_state) = match f.lm.take() {
                            Some((step, state)) => (parent.lm_total + step, state),
                            None => (parent.lm_total, parent.lm_state.clone()),
                        };
                        Beam {
                            node,
                            pb: f64::NEG_INFINITY,
                            pnb: f.contrib,
                            lm_state,
                            lm_total,
                            score: c.score,
                        }
                    }
                })
                .collect();
        }

        let mut out: Vec<(Hypothesis, u32)> = beam
            .into_iter()
            .map(|h| {
                let len = trie.len[h.node as usize];
                let mut lm_log10 = h.lm_total;
                let mut score = h.score;
                if let (Some(model), true) = (self.lm, self.params.lm_eos) {
                    let (eos, _) = model.score_next(&h.lm_state, EOS);
                    lm_log10 += eos;
                    score = self.fused(log_add(h.pb, h.pnb), lm_log10, len);
                }
                let hyp = Hypothesis {
                    labels: LabelSequence::new(trie.prefix(h.node)),
                    score,
                    log_prob: log_add(h.pb, h.pnb),
                    logp_blank: h.pb,
                    logp_nonblank: h.pnb,
                    lm_log10,
                };
                (hyp, len)
            })
            .collect();
        out.sort_by(|(a, la), (b, lb)| {
            b.score
                .total_cmp(&a.score)
                .then(la.cmp(lb))
                .then_with(|| a.labels.cmp(&b.labels))
        });
        Ok(out.into_iter().map(|(h, _)| h).collect())
    }

    /// Scores new extensions and appends the ones that can reach the top `width`.
    fn rank_fresh(
        &self,
        trie: &PrefixTrie,
        beam: &[Beam],
        fresh: &mut [Fresh],
        ranked: &mut Vec<Candidate>,
        width: usize,
    ) {
        let candidate = |slot: usize, f: &Fresh, score: f64| Candidate {
            score,
            len: trie.len[beam[f.beam].node as usize] + 1,
            parent: beam[f.beam].node,
            token: Some(f.token),
            slot,
        };
        let Some(model) = self.lm else {
            ranked.extend(
                fresh
                    .iter()
                    .enumerate()
                    .map(|(i, f)| candidate(i, f, f.contrib)),
            );
            return;
        };

        // exact score without the LM step, and an upper bound including it
        let partial = |f: &Fresh| {
            let parent = &beam[f.beam];
            self.fused(
                f.contrib,
                parent.lm_total,
                trie.len[parent.node as usize] + 1,
            )
        };
        let step_bound = if self.params.lm_weight != 0.0 {
            self.lm_factor() * self.lm_bound
        } else {
            0.0
        };

        // min-heap of the best `width` exact scores seen so far
        let mut best: std::collections::BinaryHeap<std::cmp::Reverse<OrdF64>> = ranked
            .iter()
            .map(|c| std::cmp::Reverse(OrdF64(c.score)))
            .collect();
        while best.len() > width {
            best.pop();
        }
        let threshold = |best: &std::collections::BinaryHeap<std::cmp::Reverse<OrdF64>>| {
            if best.len() < width {
                f64::NEG_INFINITY
            } else {
                best.peek().map_or(f64::NEG_INFINITY, |r| r.0 .0)
            }
        };

        let floor = threshold(&best);
        let mut order: Vec<(f64, usize)> = fresh
            .iter()
            .enumerate()
            .map(|(i, f)| (partial(f) + step_bound, i))
            .filter(|&(bound, _)| bound >= floor)
            .collect();
        order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

        for (bound, i) in order {
            if bound < threshold(&best) {
                break;
            }
            let f = &mut fresh[i];
            let parent = &beam[f.beam];
            let (step, state) = model.score_id(&parent.lm_state, self.lm_ids[f.token]);
            let score = self.fused(
                f.contrib,
                parent.lm_total + step,
                trie.len[parent.node as usize] + 1,
            );
            f.lm = Some((step, state));
            best.push(std::cmp::Reverse(OrdF64(score)));
            if best.len() > width {
                best.pop();
            }
            ranked.push(candidate(i, f, score));
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Convenience wrapper around [`BeamDecoder`].
pub fn beam_decode(
    emissions: &EmissionMatrix,
    vocab: &Vocabulary,
    params: BeamParams,
    lm: Option<&NGramModel>,
) -> Result<Vec<Hypothesis>, DecodeError> {
    BeamDecoder::new(vocab, params, lm)?.decode(emissions)
}

/// Decodes every matrix with `parallelism` workers. Output order matches input order
/// and results do not depend on the worker count. The first failing item (by index)
/// is reported.
pub fn decode_batch(
    batch: &[EmissionMatrix],
    vocab: &Vocabulary,
    params: BeamParams,
    lm: Option<&NGramModel>,
    parallelism: usize,
) -> Result<Vec<Vec<Hypothesis>>, DecodeError> {
    let decoder = BeamDecoder::new(vocab, params, lm)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| DecodeError::Pool(e.to_string()))?;
    let results: Vec<Result<Vec<Hypothesis>, DecodeError>> =
        pool.install(|| batch.par_iter().map(|m| decoder.decode(m)).collect());
    results
        .into_iter()
        .enumerate()
        .map(|(index, r)| {
            r.map_err(|e| DecodeError::Batch {
                index,
                source: Box::new(e),
            })
        })
        .collect()
}
