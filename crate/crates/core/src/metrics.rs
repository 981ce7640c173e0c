//! Edit-distance error rates, syllable-count correlation and pitch-accent accuracy.

use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("utterance {index} has an empty reference")]
    EmptyReference { index: usize },
    #[error("no utterances to evaluate")]
    NoUtterances,
    #[error("correlation needs at least two pairs, got {0}")]
    TooFewPairs(usize),
    #[error("one side of the correlation is constant")]
    DegenerateVariance,
    #[error("reference has {reference} items but hypothesis has {hypothesis}")]
    LengthMismatch { reference: usize, hypothesis: usize },
}

/// Error counts of one aligned reference/hypothesis pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EditCounts {
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
    pub ref_len: usize,
}

impl EditCounts {
    pub fn errors(&self) -> usize {
        self.substitutions + self.insertions + self.deletions
    }

    /// `(S + I + D) / ref_len`, or `None` for an empty reference.
    pub fn error_rate(&self) -> Option<f64> {
        (self.ref_len > 0).then(|| self.errors() as f64 / self.ref_len as f64)
    }

    /// `(I + D) / ref_len`, the per-utterance syllable recognition error.
    pub fn sr_rate(&self) -> Option<f64> {
        (self.ref_len > 0).then(|| (self.insertions + self.deletions) as f64 / self.ref_len as f64)
    }
}

impl std::ops::Add for EditCounts {
    type Output = EditCounts;

    fn add(self, o: EditCounts) -> EditCounts {
        EditCounts {
            substitutions: self.substitutions + o.substitutions,
            insertions: self.insertions + o.insertions,
            deletions: self.deletions + o.deletions,
            ref_len: self.ref_len + o.ref_len,
        }
    }
}

impl std::iter::Sum for EditCounts {
    fn sum<I: Iterator<Item = EditCounts>>(iter: I) -> Self {
        iter.fold(EditCounts::default(), |a, b| a + b)
    }
}

/// Unit-cost Levenshtein alignment. Among minimum-cost alignments the one with the
/// fewest substitutions wins, then the fewest insertions.
pub fn align_edit<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> EditCounts {
    // (cost, substitutions, insertions) compared lexicographically
    type Cell = (usize, usize, usize);
    let n = hypothesis.len();
    let mut prev: Vec<Cell> = (0..=n).map(|j| (j, 0, j)).collect();
    let mut cur: Vec<Cell> = vec![(0, 0, 0); n + 1];
    for (i, r) in reference.iter().enumerate() {
        cur[0] = (i + 1, 0, 0);
        for (j, h) in hypothesis.iter().enumerate() {
            let diag = prev[j];
            let diag = if r == h {
                diag
            } else {
                (diag.0 + 1, diag.1 + 1, diag.2)
            };
            let del = (prev[j + 1].0 + 1, prev[j + 1].1, prev[j + 1].2);
            let ins = (cur[j].0 + 1, cur[j].1, cur[j].2 + 1);
            cur[j + 1] = diag.min(del).min(ins);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let (cost, substitutions, insertions) = prev[n];
    EditCounts {
        substitutions,
        insertions,
        deletions: cost - substitutions - insertions,
        ref_len: reference.len(),
    }
}

/// Mean over utterances of `(I + D) / ref_len`.
pub fn sr_error_rate(counts: &[EditCounts]) -> Result<f64, MetricError> {
    macro_mean(counts, EditCounts::sr_rate)
}

/// Mean over utterances of `(S + I + D) / ref_len`.
pub fn macro_error_rate(counts: &[EditCounts]) -> Result<f64, MetricError> {
    macro_mean(counts, EditCounts::error_rate)
}

fn macro_mean(
    counts: &[EditCounts],
    rate: impl Fn(&EditCounts) -> Option<f64>,
) -> Result<f64, MetricError> {
    if counts.is_empty() {
        return Err(MetricError::NoUtterances);
    }
    let mut sum = 0.0;
    for (index, c) in counts.iter().enumerate() {
        sum += rate(c).ok_or(MetricError::EmptyReference { index })?;
    }
    Ok(sum / counts.len() as f64)
}

/// Corpus-level `Σ(S + I + D) / Σ ref_len`; the tone error rate.
pub fn micro_error_rate(counts: &[EditCounts]) -> Result<f64, MetricError> {
    if counts.is_empty() {
        return Err(MetricError::NoUtterances);
    }
    let total: EditCounts = counts.iter().copied().sum();
    total
        .error_rate()
        .ok_or(MetricError::EmptyReference { index: 0 })
}

/// Pearson correlation of `(actual, estimated)` pairs.
pub fn count_correlation(pairs: &[(f64, f64)]) -> Result<f64, MetricError> {
    if pairs.len() < 2 {
        return Err(MetricError::TooFewPairs(pairs.len()));
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in pairs {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(MetricError::DegenerateVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Share of words whose accent flag agrees with the reference.
pub fn pitch_accent_accuracy(reference: &[bool], hypothesis: &[bool]) -> Result<f64, MetricError> {
    if reference.len() != hypothesis.len() {
        return Err(MetricError::LengthMismatch {
            reference: reference.len(),
            hypothesis: hypothesis.len(),
        });
    }
    if reference.is_empty() {
        return Err(MetricError::NoUtterances);
    }
    let agree = reference
        .iter()
        .zip(hypothesis)
        .filter(|(r, h)| r == h)
        .count();
    Ok(agree as f64 / reference.len() as f64)
}

/// Aggregate evaluation of one system over a set of utterances.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub name: String,
    pub utterances: Vec<EditCounts>,
    pub micro_rate: f64,
    pub macro_rate: f64,
    pub sr_rate: f64,
    pub correlation: Option<f64>,
    pub accuracy: Option<f64>,
}

impl EvalReport {
    /// Aligns every pair and aggregates. References must be non-empty.
    pub fn from_pairs<T: PartialEq>(
        name: impl Into<String>,
        pairs: &[(Vec<T>, Vec<T>)],
    ) -> Result<Self, MetricError> {
        let counts: Vec<EditCounts> = pairs.iter().map(|(r, h)| align_edit(r, h)).collect();
        Self::from_counts(name, counts)
    }

    pub fn from_counts(
        name: impl Into<String>,
        utterances: Vec<EditCounts>,
    ) -> Result<Self, MetricError> {
        Ok(EvalReport {
            name: name.into(),
            micro_rate: micro_error_rate(&utterances)?,
            macro_rate: macro_error_rate(&utterances)?,
            sr_rate: sr_error_rate(&utterances)?,
            utterances,
            correlation: None,
            accuracy: None,
        })
    }

    pub fn totals(&self) -> EditCounts {
        self.utterances.iter().copied().sum()
    }

    /// Human-readable summary.
    pub fn to_text(&self) -> String {
        let t = self.totals();
        let mut out = String::new();
        let _ = writeln!(out, "== {} ==", self.name);
        let _ = writeln!(
            out,
            "utterances {}  ref {}  sub {}  ins {}  del {}",
            self.utterances.len(),
            t.ref_len,
            t.substitutions,
            t.insertions,
            t.deletions
        );
        let _ = writeln!(out, "error rate (micro) {:.2}%", 100.0 * self.micro_rate);
        let _ = writeln!(out, "error rate (macro) {:.2}%", 100.0 * self.macro_rate);
        let _ = writeln!(out, "SR error rate      {:.2}%", 100.0 * self.sr_rate);
        if let Some(r) = self.correlation {
            let _ = writeln!(out, "count correlation  {r:.4}");
        }
        if let Some(a) = self.accuracy {
            let _ = writeln!(out, "accent accuracy    {:.2}%", 100.0 * a);
        }
        out
    }

    /// `key=value` block, one pair per line, terminated by an empty line.
    pub fn to_records(&self) -> String {
        let t = self.totals();
        let mut out = String::new();
        let _ = writeln!(out, "report={}", self.name);
        let _ = writeln!(out, "utterances={}", self.utterances.len());
        let _ = writeln!(out, "ref_len={}", t.ref_len);
        let _ = writeln!(out, "substitutions={}", t.substitutions);
        let _ = writeln!(out, "insertions={}", t.insertions);
        let _ = writeln!(out, "deletions={}", t.deletions);
        let _ = writeln!(out, "micro_rate={}", self.micro_rate);
        let _ = writeln!(out, "macro_rate={}", self.macro_rate);
        let _ = writeln!(out, "sr_rate={}", self.sr_rate);
        if let Some(r) = self.correlation {
            let _ = writeln!(out, "correlation={r}");
        }
        if let Some(a) = self.accuracy {
            let _ = writeln!(out, "accuracy={a}");
        }
        out.push('\n');
        out
    }
}
