//! Backoff n-gram language models over recognition units.
//!
//! Scores are log10, as in the ARPA format. Unknown tokens are scored as `<unk>`;
//! a model without an `<unk>` unigram scores them at [`UNK_LOG10_FLOOR`].

mod arpa;
mod train;

use std::collections::HashMap;

use thiserror::Error;

pub use train::{train_ngram, KneserNey, DEFAULT_DISCOUNT, UNK_PROB_FLOOR};

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

/// Log10 score used for out-of-vocabulary tokens when a model has no `<unk>` entry.
pub const UNK_LOG10_FLOOR: f64 = -100.0;

/// Symbol id used for unknown words in a model without `<unk>`. Never stored.
const NO_SYMBOL: u32 = u32::MAX;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LmError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("n-gram order must be at least 1")]
    ZeroOrder,
    #[error("line {line}: malformed ARPA header: {reason}")]
    MalformedHeader { line: usize, reason: String },
    #[error("{order}-grams: header declares {declared} entries, found {found}")]
    CountMismatch {
        order: usize,
        declared: usize,
        found: usize,
    },
    #[error("line {line}: cannot parse {text:?} as a number")]
    BadNumber { line: usize, text: String },
    #[error("line {line}: expected {order} words with optional backoff")]
    MalformedEntry { line: usize, order: usize },
    #[error("line {line}: duplicate n-gram")]
    DuplicateNgram { line: usize },
    #[error("missing section: {0}")]
    MissingSection(String),
}

/// Stored score of one n-gram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NGramEntry {
    pub log10_prob: f64,
    pub log10_backoff: Option<f64>,
}

/// Scoring history: the last `order - 1` tokens at most.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct LmState {
    history: Vec<u32>,
}

impl LmState {
    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    pub fn history_texts<'m>(&self, model: &'m NGramModel) -> Vec<&'m str> {
        self.history
            .iter()
            .map(|&id| model.symbol_text(id).unwrap_or(UNK))
            .collect()
    }
}

/// Backoff n-gram model.
#[derive(Debug, Clone)]
pub struct NGramModel {
    order: usize,
    symbols: Vec<String>,
    symbol_ids: HashMap<String, u32>,
    /// `tables[k - 1]` holds the k-grams.
    tables: Vec<HashMap<Box<[u32]>, NGramEntry>>,
}

impl NGramModel {
    fn empty(order: usize) -> Self {
        NGramModel {
            order,
            symbols: Vec::new(),
            symbol_ids: HashMap::new(),
            tables: vec![HashMap::new(); order],
        }
    }

    fn intern(&mut self, text: &str) -> u32 {
        if let Some(&id) = self.symbol_ids.get(text) {
            return id;
        }
        let id = self.symbols.len() as u32;
        self.symbols.push(text.to_string());
        self.symbol_ids.insert(text.to_string(), id);
        id
    }

    /// Inserts an entry, returning false if the n-gram already existed.
    fn insert(&mut self, words: &[u32], entry: NGramEntry) -> bool {
        self.tables[words.len() - 1]
            .insert(words.into(), entry)
            .is_none()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of stored k-grams.
    pub fn count(&self, k: usize) -> usize {
        self.tables.get(k.wrapping_sub(1)).map_or(0, HashMap::len)
    }

    pub fn total_ngrams(&self) -> usize {
        self.tables.iter().map(HashMap::len).sum()
    }

    pub fn symbol_id(&self, text: &str) -> Option<u32> {
        self.symbol_ids.get(text).copied()
    }

    pub fn symbol_text(&self, id: u32) -> Option<&str> {
        self.symbols.get(id as usize).map(String::as_str)
    }

    /// Id used to score `text`: its own id, else `<unk>`'s.
    pub fn lookup(&self, text: &str) -> u32 {
        self.symbol_id(text)
            .or_else(|| self.symbol_id(UNK))
            .unwrap_or(NO_SYMBOL)
    }

    /// Direct table access by token texts.
    pub fn entry(&self, words: &[&str]) -> Option<NGramEntry> {
        if words.is_empty() || words.len() > self.order {
            return None;
        }
        let ids: Option<Vec<u32>> = words.iter().map(|w| self.symbol_id(w)).collect();
        self.tables[words.len() - 1].get(ids?.as_slice()).copied()
    }

    /// Unigram tokens that can be predicted: everything except `<s>`.
    pub fn predictable_vocab(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self.tables[0]
            .keys()
            .map(|k| self.symbols[k[0] as usize].as_str())
            .filter(|&t| t != BOS)
            .collect();
        out.sort_unstable();
        out
    }

    /// Empty history.
    pub fn null_context(&self) -> LmState {
        LmState::default()
    }

    /// History holding `<s>` (empty for unigram models).
    pub fn begin_sentence(&self) -> LmState {
        let mut state = LmState::default();
        if self.order > 1 {
            state.history.push(self.lookup(BOS));
        }
        state
    }

    /// Scores `token` after `state`, returning the log10 probability and next state.
    pub fn score_next(&self, state: &LmState, token: &str) -> (f64, LmState) {
        self.score_id(state, self.lookup(token))
    }

    /// Like [`score_next`](Self::score_next) for a pre-resolved symbol id.
    pub fn score_id(&self, state: &LmState, word: u32) -> (f64, LmState) {
        let mut full = Vec::with_capacity(state.history.len() + 1);
        full.extend_from_slice(&state.history);
        full.push(word);
        let score = self.backoff_score(&full);

        let keep = self.order - 1;
        let start = full.len().saturating_sub(keep);
        full.drain(..start);
        (score, LmState { history: full })
    }

    /// `full` is the history followed by the predicted word.
    fn backoff_score(&self, full: &[u32]) -> f64 {
        let n = full.len();
        let mut backoff = 0.0;
        for start in 0..n {
            let gram = &full[start..];
            if let Some(e) = self.tables[gram.len() - 1].get(gram) {
                return backoff + e.log10_prob;
            }
            let context = &full[start..n - 1];
            if context.is_empty() {
                break;
            }
            if let Some(e) = self.tables[context.len() - 1].get(context) {
                backoff += e.log10_backoff.unwrap_or(0.0);
            }
        }
        backoff + UNK_LOG10_FLOOR
    }

    /// Sum of log10 scores of `tokens`, optionally from `<s>` and including `</s>`.
    pub fn score_sentence<S: AsRef<str>>(&self, tokens: &[S], bos: bool, eos: bool) -> f64 {
        let mut state = if bos {
            self.begin_sentence()
        } else {
            self.null_context()
        };
        let mut total = 0.0;
        for tok in tokens {
            let (s, next) = self.score_next(&state, tok.as_ref());
            total += s;
            state = next;
        }
        if eos {
            total += self.score_next(&state, EOS).0;
        }
        total
    }

    /// Per-token perplexity over sentences scored with `<s>`/`</s>`.
    pub fn perplexity<S: AsRef<str>>(&self, sentences: &[Vec<S>]) -> f64 {
        let mut total = 0.0;
        let mut count = 0usize;
        for s in sentences {
            total += self.score_sentence(s, true, true);
            count += s.len() + 1;
        }
        10f64.powf(-total / count.max(1) as f64)
    }

    /// Upper bound on any value [`score_next`](Self::score_next) can return.
    pub fn max_step_score(&self) -> f64 {
        let max_prob = self
            .tables
            .iter()
            .flat_map(|t| t.values())
            .map(|e| e.log10_prob)
            .fold(UNK_LOG10_FLOOR, f64::max);
        let max_backoff = self
            .tables
            .iter()
            .flat_map(|t| t.values())
            .filter_map(|e| e.log10_backoff)
            .fold(0.0, f64::max);
        max_prob + (self.order - 1) as f64 * max_backoff
    }

    pub fn parse_arpa(text: &str) -> Result<Self, LmError> {
        arpa::parse(text)
    }

    pub fn to_arpa(&self) -> String {
        arpa::write(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const TOY: &str = "\\data\\
ngram 1=5
ngram 2=2

\\1-grams:
-1.0\t<unk>
-99\t<s>\t-0.5
-0.69897\t</s>
-0.52288\tT1\t-0.3
-0.60206\tT2\t-0.2

\\2-grams:
-0.30103\tT1 T2
-0.1\t<s> T1

\\end\\
";

    fn toy() -> NGramModel {
        NGramModel::parse_arpa(TOY).unwrap()
    }

    #[test]
    #[allow(clippy::approx_constant)] // stored ARPA literal
    fn bigram_hit_returns_stored_value() {
        let m = toy();
        let (_, s) = m.score_next(&m.null_context(), "T1");
        let (score, next) = m.score_next(&s, "T2");
        assert_eq!(score, -0.30103);
        assert_eq!(next.history_texts(&m), ["T2"]);
    }

    #[test]
    fn unknown_token_backs_off_to_unk() {
        let m = toy();
        let (_, after_t1) = m.score_next(&m.null_context(), "T1");
        // bo(T1) + P(<unk>)
        let (score, next) = m.score_next(&after_t1, "T9");
        assert!((score - (-0.3 + -1.0)).abs() < 1e-12);
        assert_eq!(next.history_texts(&m), ["<unk>"]);
        // <unk> has no backoff, so <unk> -> T2 is just the unigram
        assert!((m.score_next(&next, "T2").0 - -0.60206).abs() < 1e-12);
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn sentence_is_sum_of_steps() {
        let m = toy();
        let total = m.score_sentence(&["T1", "T2"], true, true);
        // <s> T1: -0.1 ; T1 T2: -0.30103 ; T2 </s>: bo(T2) + P(</s>)
        let expected = -0.1 + -0.30103 + (-0.2 + -0.69897);
        assert!((total - expected).abs() < 1e-12);
    }

    #[test]
    fn missing_unk_uses_floor() {
        let m = NGramModel::parse_arpa(
            "\\data\\\nngram 1=2\n\n\\1-grams:\n-0.3\ta\n-0.3\t</s>\n\n\\end\\\n",
        )
        .unwrap();
        assert_eq!(m.score_next(&m.null_context(), "zzz").0, UNK_LOG10_FLOOR);
    }

    #[test]
    fn state_is_truncated_to_order_minus_one() {
        let m = toy();
        let mut state = m.begin_sentence();
        for tok in ["T1", "T2", "T1", "T1"] {
            state = m.score_next(&state, tok).1;
            assert!(state.len() <= 1);
        }
        let uni = NGramModel::parse_arpa(
            "\\data\\\nngram 1=2\n\n\\1-grams:\n-0.3\ta\n-0.3\t</s>\n\n\\end\\\n",
        )
        .unwrap();
        assert!(uni.begin_sentence().is_empty());
        assert!(uni.score_next(&uni.begin_sentence(), "a").1.is_empty());
    }

    #[test]
    fn predictable_vocab_excludes_bos() {
        assert_eq!(toy().predictable_vocab(), ["</s>", "<unk>", "T1", "T2"]);
    }
}
