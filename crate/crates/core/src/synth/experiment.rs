//! Unit-scheme × LM-size sweeps over synthetic emissions, scored as tone error rate.
//!
//! Config is TOML:
//!
//! ```toml
//! corpus = "sentences.txt"       # one pinyin sentence per line, or:
//! generate_sentences = 200       # a seeded corpus from `generate_corpus`
//! schemes = ["tone", "if_tone", "syl_tone"]
//! lm_sizes = [0, 50, 200]        # sentences used to train each LM, 0 = no LM
//! lm_order = 6
//! decoder = "beam"               # or "greedy"
//!
//! [synth]
//! frames_per_token = 4
//! blank_gap = 2
//! noise_eps = 0.05
//! mix_jitter = 0.45
//! tone_confusions = ["3:2:0.45"] # every tone-3 unit leaks to its tone-2 twin
//!
//! [beam]
//! beam_width = 32
//! lm_weight = 1.2
//! token_bonus = 0.5
//! prune_log_floor = -9.21
//! lm_eos = false
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use super::{derive_seed, generate_corpus, synth_emissions, Confusion, SynthError, SynthParams};
use crate::beam::{decode_batch, BeamParams, DecodeError};
use crate::ctc::greedy_decode;
use crate::lm::{train_ngram, LmError};
use crate::metrics::{EvalReport, MetricError};
use crate::units::{
    project_to_tones, to_unit_scheme, PinyinSyllable, PinyinTable, UnitError, UnitScheme,
};
use crate::vocab::{Vocabulary, BLANK_ID};

const CORPUS_STREAM: u64 = u64::MAX;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config: {0}")]
    Config(String),
    #[error("corpus line {line}: {source}")]
    Corpus {
        line: usize,
        #[source]
        source: UnitError,
    },
    #[error("cell {cell}: {source}")]
    Synth {
        cell: String,
        #[source]
        source: SynthError,
    },
    #[error("cell {cell}: {source}")]
    Lm {
        cell: String,
        #[source]
        source: LmError,
    },
    #[error("cell {cell}: {source}")]
    Decode {
        cell: String,
        #[source]
        source: DecodeError,
    },
    #[error("cell {cell}: {source}")]
    Metric {
        cell: String,
        #[source]
        source: MetricError,
    },
    /// A result the pipeline guarantees never to produce.
    #[error("cell {cell}: internal invariant violated: {detail}")]
    Invariant { cell: String, detail: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DecoderKind {
    #[default]
    Beam,
    Greedy,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSection {
    pub frames_per_token: usize,
    pub blank_gap: usize,
    pub noise_eps: f64,
    pub mix_jitter: f64,
    pub tone_confusions: Vec<String>,
}

impl Default for SynthSection {
    fn default() -> Self {
        let p = SynthParams::new(0);
        SynthSection {
            frames_per_token: p.frames_per_token,
            blank_gap: p.blank_gap,
            noise_eps: p.noise_eps,
            mix_jitter: p.mix_jitter,
            tone_confusions: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BeamSection {
    pub beam_width: usize,
    pub lm_weight: f64,
    pub token_bonus: f64,
    pub prune_log_floor: f64,
    pub lm_eos: bool,
}

impl Default for BeamSection {
    fn default() -> Self {
        let p = BeamParams::default();
        BeamSection {
            beam_width: p.beam_width,
            lm_weight: p.lm_weight,
            token_bonus: p.token_bonus,
            prune_log_floor: p.prune_log_floor,
            lm_eos: p.lm_eos,
        }
    }
}

impl From<&BeamSection> for BeamParams {
    fn from(b: &BeamSection) -> Self {
        BeamParams {
            beam_width: b.beam_width,
            lm_weight: b.lm_weight,
            token_bonus: b.token_bonus,
            prune_log_floor: b.prune_log_floor,
            lm_eos: b.lm_eos,
        }
    }
}

fn default_lm_order() -> usize {
    6
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub corpus: Option<PathBuf>,
    pub generate_sentences: Option<usize>,
    pub schemes: Vec<String>,
    #[serde(default)]
    pub lm_sizes: Vec<usize>,
    #[serde(default = "default_lm_order")]
    pub lm_order: usize,
    #[serde(default)]
    pub decoder: DecoderKind,
    #[serde(default)]
    pub synth: SynthSection,
    #[serde(default)]
    pub beam: BeamSection,
}

/// A tone-level confusion such as `3:2:0.45`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToneConfusion {
    pub from: u8,
    pub to: u8,
    pub mix: f64,
}

impl ToneConfusion {
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        let bad =
            || ExperimentError::Config(format!("bad tone confusion {text:?}, expected a:b:mix"));
        let c = Confusion::parse(text).map_err(|_| bad())?;
        let tone = |s: &str| s.parse::<u8>().ok().filter(|t| (1..=5).contains(t));
        Ok(ToneConfusion {
            from: tone(&c.from).ok_or_else(bad)?,
            to: tone(&c.to).ok_or_else(bad)?,
            mix: c.mix,
        })
    }

    /// Token pairs of `vocab` that differ only in their final tone digit.
    pub fn expand(&self, vocab: &Vocabulary) -> Vec<Confusion> {
        let from = char::from(b'0' + self.from);
        let to = char::from(b'0' + self.to);
        vocab
            .unit_texts()
            .iter()
            .filter_map(|text| {
                let stem = text.strip_suffix(from)?;
                let twin = format!("{stem}{to}");
                (!stem.is_empty() && vocab.contains(&twin)).then(|| Confusion {
                    from: text.clone(),
                    to: twin,
                    mix: self.mix,
                })
            })
            .collect()
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), ExperimentError> {
        let fail = |m: &str| Err(ExperimentError::Config(m.to_string()));
        if self.corpus.is_some() == self.generate_sentences.is_some() {
            return fail("set exactly one of `corpus` and `generate_sentences`");
        }
        if self.schemes.is_empty() {
            return fail("`schemes` is empty");
        }
        self.unit_schemes()?;
        if self.lm_order == 0 {
            return fail("`lm_order` must be positive");
        }
        if self.beam.beam_width == 0 {
            return fail("`beam.beam_width` must be positive");
        }
        for c in &self.synth.tone_confusions {
            ToneConfusion::parse(c)?;
        }
        Ok(())
    }

    pub fn unit_schemes(&self) -> Result<Vec<UnitScheme>, ExperimentError> {
        self.schemes
            .iter()
            .map(|s| {
                s.parse()
                    .map_err(|e| ExperimentError::Config(format!("{e}")))
            })
            .collect()
    }

    /// LM sizes to sweep; a config without any means a single no-LM cell.
    pub fn lm_sweep(&self) -> Vec<usize> {
        if self.lm_sizes.is_empty() {
            vec![0]
        } else {
            self.lm_sizes.clone()
        }
    }

    /// Reads or generates the sentence corpus. Relative paths resolve against `base`.
    pub fn load_corpus(&self, base: &Path, seed: u64) -> Result<Vec<String>, ExperimentError> {
        if let Some(n) = self.generate_sentences {
            return Ok(generate_corpus(n, derive_seed(seed, CORPUS_STREAM)));
        }
        let path = base.join(self.corpus.as_ref().expect("validated"));
        let text = std::fs::read_to_string(&path)
            .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        Ok(text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(String::from)
            .collect())
    }
}

/// Name of the report for one cell.
pub fn cell_name(scheme: UnitScheme, lm_sentences: usize) -> String {
    if lm_sentences == 0 {
        format!("{scheme}/no-lm")
    } else {
        format!("{scheme}/lm{lm_sentences}")
    }
}

/// Runs every (scheme, LM size) cell and returns their reports in config order.
pub fn run_experiment(
    config: &ExperimentConfig,
    sentences: &[String],
    seed: u64,
    jobs: usize,
) -> Result<Vec<EvalReport>, ExperimentError> {
    config.validate()?;
    let table = PinyinTable::builtin();
    let parsed: Vec<Vec<PinyinSyllable>> = sentences
        .iter()
        .enumerate()
        .map(|(i, s)| {
            table
                .parse_sentence(s)
                .map_err(|source| ExperimentError::Corpus {
                    line: i + 1,
                    source,
                })
        })
        .collect::<Result<_, _>>()?;
    if parsed.is_empty() {
        return Err(ExperimentError::Config("corpus has no sentences".into()));
    }
    for &n in &config.lm_sweep() {
        if n > parsed.len() {
            return Err(ExperimentError::Config(format!(
                "lm size {n} exceeds the {} corpus sentences",
                parsed.len()
            )));
        }
    }
    let tone_confusions: Vec<ToneConfusion> = config
        .synth
        .tone_confusions
        .iter()
        .map(|c| ToneConfusion::parse(c))
        .collect::<Result<_, _>>()?;
    let references: Vec<Vec<String>> = parsed
        .iter()
        .map(|s| to_unit_scheme(s, UnitScheme::Tone))
        .collect();

    let mut reports = Vec::new();
    for (scheme_index, scheme) in config.unit_schemes()?.into_iter().enumerate() {
        let scheme_cell = scheme.to_string();
        let vocab = scheme.vocabulary(table);
        let units: Vec<Vec<String>> = parsed.iter().map(|s| to_unit_scheme(s, scheme)).collect();
        for (i, u) in units.iter().enumerate() {
            let projected =
                project_to_tones(u, scheme).map_err(|e| ExperimentError::Invariant {
                    cell: scheme_cell.clone(),
                    detail: format!("sentence {}: {e}", i + 1),
                })?;
            if projected != references[i] {
                return Err(ExperimentError::Invariant {
                    cell: scheme_cell,
                    detail: format!("sentence {} does not project to its tone reference", i + 1),
                });
            }
        }

        let params = SynthParams {
            frames_per_token: config.synth.frames_per_token,
            blank_gap: config.synth.blank_gap,
            noise_eps: config.synth.noise_eps,
            confusions: tone_confusions
                .iter()
                .flat_map(|c| c.expand(&vocab))
                .collect(),
            mix_jitter: config.synth.mix_jitter,
            seed: 0,
        };
        let scheme_seed = derive_seed(seed, scheme_index as u64);
        let emissions = units
            .iter()
            .enumerate()
            .map(|(i, u)| {
                let target = vocab.encode(u).map_err(|e| ExperimentError::Invariant {
                    cell: scheme_cell.clone(),
                    detail: format!("sentence {}: {e}", i + 1),
                })?;
                let p = SynthParams {
                    seed: derive_seed(scheme_seed, i as u64),
                    ..params.clone()
                };
                synth_emissions(&target, &vocab, &p).map_err(|source| ExperimentError::Synth {
                    cell: scheme_cell.clone(),
                    source,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;

        for lm_sentences in config.lm_sweep() {
            let cell = cell_name(scheme, lm_sentences);
            let lm = if lm_sentences == 0 {
                None
            } else {
                Some(
                    train_ngram(&units[..lm_sentences], config.lm_order).map_err(|source| {
                        ExperimentError::Lm {
                            cell: cell.clone(),
                            source,
                        }
                    })?,
                )
            };
            let hyps: Vec<Vec<usize>> = match config.decoder {
                DecoderKind::Greedy if lm.is_none() => emissions
                    .iter()
                    .map(|m| greedy_decode(m).labels.into_inner())
                    .collect(),
                _ => decode_batch(&emissions, &vocab, (&config.beam).into(), lm.as_ref(), jobs)
                    .map_err(|source| ExperimentError::Decode {
                        cell: cell.clone(),
                        source,
                    })?
                    .into_iter()
                    .map(|h| {
                        h.into_iter()
                            .next()
                            .map_or_else(Vec::new, |h| h.labels.into_inner())
                    })
                    .collect(),
            };
            let mut pairs = Vec::with_capacity(hyps.len());
            for (i, ids) in hyps.iter().enumerate() {
                let texts: Vec<&str> = ids
                    .iter()
                    .map(|&id| vocab.text(id).filter(|_| id != BLANK_ID).unwrap_or("<?>"))
                    .collect();
                let tones =
                    project_to_tones(&texts, scheme).map_err(|e| ExperimentError::Invariant {
                        cell: cell.clone(),
                        detail: format!("hypothesis {}: {e}", i + 1),
                    })?;
                pairs.push((references[i].clone(), tones));
            }
            let report = EvalReport::from_pairs(cell.clone(), &pairs)
                .map_err(|source| ExperimentError::Metric { cell, source })?;
            reports.push(report);
        }
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::SchemeTag;

    const MICRO: [&str; 3] = [
        "wo3 xiang3 mai3 shou3 biao3",
        "ni3 hao3",
        "lao3 shi1 hen3 hao3",
    ];

    fn config(body: &str) -> ExperimentConfig {
        ExperimentConfig::parse(&format!("generate_sentences = 1\n{body}")).unwrap()
    }

    fn corpus() -> Vec<String> {
        MICRO.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn noiseless_every_scheme_is_perfect() {
        let c = config(r#"schemes = ["tone", "if_tone", "syl_tone"]"#);
        let reports = run_experiment(&c, &corpus(), 1, 1).unwrap();
        assert_eq!(reports.len(), 3);
        for r in &reports {
            assert_eq!(r.micro_rate, 0.0, "{}", r.name);
        }
        assert_eq!(reports[2].name, "syllable_tone/no-lm");
    }

    #[test]
    fn one_report_per_cell() {
        let c = config("schemes = [\"tone\", \"syl_tone\"]\nlm_sizes = [0, 2, 3]\nlm_order = 3");
        let reports = run_experiment(&c, &corpus(), 1, 2).unwrap();
        let names: Vec<&str> = reports.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(
            names,
            [
                "tone/no-lm",
                "tone/lm2",
                "tone/lm3",
                "syllable_tone/no-lm",
                "syllable_tone/lm2",
                "syllable_tone/lm3"
            ]
        );
    }

    #[test]
    fn lm_fixes_confusable_micro_corpus() {
        // jitter wide enough that tone-3 syllables often look like tone 2
        let c = config(
            "schemes = [\"syl_tone\"]\nlm_sizes = [0, 3]\n\
             [synth]\nnoise_eps = 0.05\nmix_jitter = 0.45\ntone_confusions = [\"3:2:0.45\"]",
        );
        let corpus: Vec<String> = (0..10).flat_map(|_| corpus()).collect();
        let reports = run_experiment(&c, &corpus, 9, 1).unwrap();
        assert!(reports[0].micro_rate > 0.0);
        assert!(reports[1].micro_rate < reports[0].micro_rate);
    }

    #[test]
    fn deterministic_across_jobs() {
        let c = config(
            "schemes = [\"tone\", \"if_tone\"]\nlm_sizes = [0, 3]\n\
             [synth]\nnoise_eps = 0.3\nmix_jitter = 0.3\ntone_confusions = [\"3:2:0.4\"]",
        );
        let a = run_experiment(&c, &corpus(), 4, 1).unwrap();
        let b = run_experiment(&c, &corpus(), 4, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tone_confusion_expansion() {
        let v = Vocabulary::from_tokens(
            ["T2", "T3", "ma2", "ma3", "hao3", "m", "a3"],
            SchemeTag::Merged,
        )
        .unwrap();
        let pairs: Vec<String> = ToneConfusion::parse("3:2:0.45")
            .unwrap()
            .expand(&v)
            .iter()
            .map(|c| c.to_string())
            .collect();
        assert_eq!(pairs, ["T3:T2:0.45", "ma3:ma2:0.45"]);
        assert!(ToneConfusion::parse("3:7:0.1").is_err());
    }

    #[test]
    fn config_errors() {
        let bad = |s: &str| ExperimentConfig::parse(s).unwrap_err().to_string();
        assert!(bad("schemes = [\"tone\"]").contains("exactly one"));
        assert!(bad("generate_sentences = 2\nschemes = []").contains("empty"));
        assert!(bad("generate_sentences = 2\nschemes = [\"phoneme\"]").contains("phoneme"));
        assert!(bad("generate_sentences = 2\nschemes = [\"tone\"]\ncolour = 1").contains("colour"));
        let c = config("schemes = [\"tone\"]\nlm_sizes = [5]");
        assert!(matches!(
            run_experiment(&c, &corpus(), 0, 1),
            Err(ExperimentError::Config(_))
        ));
        let c = config("schemes = [\"tone\"]");
        assert!(matches!(
            run_experiment(&c, &["ni3 xyz2".to_string()], 0, 1),
            Err(ExperimentError::Corpus { line: 1, .. })
        ));
    }
}
