//! Interpolated Kneser-Ney estimation with one fixed discount for every order.
//!
//! Lower orders use continuation counts (number of distinct left extensions), except
//! for n-grams that start with `<s>`, which have no left context and keep raw counts.
//! The unigram distribution is interpolated with a uniform distribution over the
//! predictable vocabulary (`</s>` and `<unk>` included), so `<unk>` always receives
//! some mass.
//!
//! The interpolated model is stored exactly in ARPA form: every observed n-gram holds
//! its fully interpolated probability and every observed context holds the
//! interpolation weight `γ(h)` as its backoff, so backoff scoring of unseen events
//! reproduces `γ(h) · P(w | h')`.

use std::collections::HashMap;

use super::{LmError, NGramEntry, NGramModel, BOS, EOS, UNK};

pub const DEFAULT_DISCOUNT: f64 = 0.75;
/// Minimum probability given to `<unk>`.
pub const UNK_PROB_FLOOR: f64 = 1e-7;
/// Log10 probability stored for `<s>`, which is never predicted.
const BOS_LOG10: f64 = -99.0;

type Counts = HashMap<Box<[u32]>, u64>;

/// Trainer configuration.
#[derive(Debug, Clone, Copy)]
pub struct KneserNey {
    pub order: usize,
    pub discount: f64,
}

impl KneserNey {
    pub fn new(order: usize) -> Self {
        KneserNey {
            order,
            discount: DEFAULT_DISCOUNT,
        }
    }

    /// Trains on whitespace-free token sentences; each is padded with `<s>`/`</s>`.
    pub fn train<S: AsRef<str>>(&self, corpus: &[Vec<S>]) -> Result<NGramModel, LmError> {
        let order = self.order;
        if order == 0 {
            return Err(LmError::ZeroOrder);
        }
        if corpus.is_empty() {
            return Err(LmError::EmptyCorpus);
        }
        let d = self.discount;
        let mut model = NGramModel::empty(order);
        let unk = model.intern(UNK);
        let bos = model.intern(BOS);
        let eos = model.intern(EOS);

        let sentences: Vec<Vec<u32>> = corpus
            .iter()
            .map(|s| {
                let mut ids = Vec::with_capacity(s.len() + 2);
                ids.push(bos);
                ids.extend(s.iter().map(|w| model.intern(w.as_ref())));
                ids.push(eos);
                ids
            })
            .collect();

        // raw[k - 1]: occurrence counts of k-grams, never predicting <s>
        let mut raw: Vec<Counts> = vec![HashMap::new(); order];
        for s in &sentences {
            for end in 1..s.len() {
                for k in 1..=order.min(end + 1) {
                    *raw[k - 1].entry(s[end + 1 - k..=end].into()).or_insert(0) += 1;
                }
            }
        }

        // adjusted counts used for estimation at each order
        let mut adjusted: Vec<Counts> = Vec::with_capacity(order);
        for k in 1..=order {
            if k == order {
                adjusted.push(raw[k - 1].clone());
                continue;
            }
            let mut continuation: Counts = HashMap::new();
            for key in raw[k].keys() {
                *continuation.entry(key[1..].into()).or_insert(0) += 1;
            }
            let adj = raw[k - 1]
                .iter()
                .map(|(g, &c)| {
                    let a = if g[0] == bos { c } else { continuation[g] };
                    (g.clone(), a)
                })
                .collect();
            adjusted.push(adj);
        }

        // linear interpolated probabilities per order
        let mut probs: Vec<HashMap<Box<[u32]>, f64>> = Vec::with_capacity(order);
        // interpolation weight of each context, keyed by the context itself
        let mut gammas: Vec<HashMap<Box<[u32]>, f64>> = vec![HashMap::new(); order];

        // unigrams
        let total: u64 = adjusted[0].values().sum();
        let types = adjusted[0].len();
        let mut vocab: Vec<u32> = adjusted[0].keys().map(|k| k[0]).collect();
        for special in [eos, unk] {
            if !vocab.contains(&special) {
                vocab.push(special);
            }
        }
        vocab.sort_unstable();
        let gamma0 = d * types as f64 / total as f64;
        let uniform = 1.0 / vocab.len() as f64;
        let mut uni: HashMap<Box<[u32]>, f64> = vocab
            .iter()
            .map(|&w| {
                let a = adjusted[0].get([w].as_slice()).copied().unwrap_or(0) as f64;
                let p = (a - d).max(0.0) / total as f64 + gamma0 * uniform;
                (Box::from([w]), p)
            })
            .collect();
        let unk_key: Box<[u32]> = Box::from([unk]);
        if uni[&unk_key] < UNK_PROB_FLOOR {
            let old = uni[&unk_key];
            let scale = (1.0 - UNK_PROB_FLOOR) / (1.0 - old);
            for p in uni.values_mut() {
                *p *= scale;
            }
            uni.insert(unk_key, UNK_PROB_FLOOR);
        }
        probs.push(uni);

        for k in 2..=order {
            let mut stats: HashMap<&[u32], (u64, u64)> = HashMap::new();
            for (g, &a) in &adjusted[k - 1] {
                let s = stats.entry(&g[..k - 1]).or_insert((0, 0));
                s.0 += a;
                s.1 += 1;
            }
            let lower = &probs[k - 2];
            let level: HashMap<Box<[u32]>, f64> = adjusted[k - 1]
                .iter()
                .map(|(g, &a)| {
                    let (ctx_total, ctx_types) = stats[&g[..k - 1]];
                    let gamma = d * ctx_types as f64 / ctx_total as f64;
                    let p = (a as f64 - d).max(0.0) / ctx_total as f64 + gamma * lower[&g[1..]];
                    (g.clone(), p)
                })
                .collect();
            gammas[k - 2] = stats
                .iter()
                .map(|(&ctx, &(ctx_total, ctx_types))| {
                    (Box::from(ctx), d * ctx_types as f64 / ctx_total as f64)
                })
                .collect();
            probs.push(level);
        }

        for k in 1..=order {
            for (g, &p) in &probs[k - 1] {
                let log10_backoff = gammas[k - 1].get(g).map(|&gamma| gamma.log10());
                model.insert(
                    g,
                    NGramEntry {
                        log10_prob: p.log10(),
                        log10_backoff,
                    },
                );
            }
        }
        model.insert(
            &[bos],
            NGramEntry {
                log10_prob: BOS_LOG10,
                log10_backoff: gammas[0].get([bos].as_slice()).map(|g| g.log10()),
            },
        );
        Ok(model)
    }
}

/// Trains an interpolated Kneser-Ney model with the default discount.
pub fn train_ngram<S: AsRef<str>>(corpus: &[Vec<S>], order: usize) -> Result<NGramModel, LmError> {
    KneserNey::new(order).train(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sentences(lines: &[&str]) -> Vec<Vec<String>> {
        lines
            .iter()
            .map(|l| l.split_whitespace().map(String::from).collect())
            .collect()
    }

    fn p(m: &NGramModel, ctx: &[&str], w: &str) -> f64 {
        let mut state = m.null_context();
        for c in ctx {
            state = m.score_next(&state, c).1;
        }
        10f64.powf(m.score_next(&state, w).0)
    }

    #[test]
    fn unigram_normalizes_and_orders_by_count() {
        let m = train_ngram(&sentences(&["a a b"]), 1).unwrap();
        let vocab = m.predictable_vocab();
        assert_eq!(vocab, ["</s>", "<unk>", "a", "b"]);
        let sum: f64 = vocab.iter().map(|w| p(&m, &[], w)).sum();
        assert!((sum - 1.0).abs() < 1e-6);
        assert!(p(&m, &[], "a") > p(&m, &[], "b"));
        // counts a:2 b:1 </s>:1, total 4, three types, four predictable words
        let gamma = 0.75 * 3.0 / 4.0;
        assert!((p(&m, &[], "a") - (1.25 / 4.0 + gamma / 4.0)).abs() < 1e-12);
        assert!((p(&m, &[], "<unk>") - gamma / 4.0).abs() < 1e-12);
    }

    #[test]
    fn two_type_bigram_closed_form() {
        // N copies of "T1 T2": every continuation count is 1, so
        // P1(T2) = (1 - D)/3 + D/4 and P(T2|T1) = (N - D)/N + (D/N) P1(T2).
        for n in [1usize, 10, 1000] {
            let corpus = sentences(&vec!["T1 T2"; n]);
            let m = train_ngram(&corpus, 2).unwrap();
            let d = 0.75;
            let p1 = (1.0 - d) / 3.0 + d / 4.0;
            let nf = n as f64;
            let expected = (nf - d) / nf + d / nf * p1;
            assert!((p(&m, &["T1"], "T2") - expected).abs() < 1e-12, "N={n}");
            assert!(
                m.score_sentence(&["T1", "T2"], true, true)
                    > m.score_sentence(&["T2", "T1"], true, true)
            );
        }
    }

    #[test]
    fn bigram_probability_approaches_one() {
        let small = train_ngram(&sentences(&["T1 T2"; 10]), 2).unwrap();
        let large = train_ngram(&sentences(&vec!["T1 T2"; 1000]), 2).unwrap();
        assert!(p(&large, &["T1"], "T2") > p(&small, &["T1"], "T2"));
        assert!(p(&large, &["T1"], "T2") > 0.999);
    }

    #[test]
    fn every_context_has_a_backoff() {
        let m = train_ngram(&sentences(&["a b c a b", "b c d", "a a"]), 3).unwrap();
        for (k, table) in m.tables.iter().enumerate().take(2) {
            for key in m.tables[k + 1].keys() {
                let prefix = &key[..k + 1];
                assert!(table[prefix].log10_backoff.is_some());
            }
        }
    }

    #[test]
    fn errors() {
        assert_eq!(
            train_ngram::<String>(&[], 3).unwrap_err(),
            LmError::EmptyCorpus
        );
        assert_eq!(
            train_ngram(&sentences(&["a"]), 0).unwrap_err(),
            LmError::ZeroOrder
        );
    }

    #[test]
    fn unk_floor_keeps_normalization() {
        // a tiny discount leaves almost no mass for the uniform share
        let words: Vec<String> = (0..200).map(|i| format!("w{i}")).collect();
        let corpus = vec![words; 10];
        let m = KneserNey {
            order: 1,
            discount: 1e-4,
        }
        .train(&corpus)
        .unwrap();
        let unk = p(&m, &[], "<unk>");
        assert!(unk >= UNK_PROB_FLOOR * (1.0 - 1e-9));
        let sum: f64 = m.predictable_vocab().iter().map(|w| p(&m, &[], w)).sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }
}
