use std::fmt::Write as _;

use anyhow::{bail, ensure, Context, Result};
use supraseg::beam::{decode_batch, BeamParams, Hypothesis};
use supraseg::ctc::{ctc_loss, greedy_decode};
use supraseg::lm::{train_ngram, NGramModel, EOS};
use supraseg::metrics::{count_correlation, pitch_accent_accuracy, EvalReport};
use supraseg::synth::experiment::{run_experiment, ExperimentConfig};
use supraseg::synth::{synth_from_texts, Confusion, SynthParams};
use supraseg::units::{
    accent::{ACCENTED, UNACCENTED},
    merge_vocabularies, project_to_tones, to_unit_scheme, PinyinTable, UnitScheme, VowelSet,
};

use crate::io::{
    content_lines, emission_format_for, read_emissions, read_text, read_vocab, tokens, write_file,
};
use crate::{
    DecodeArgs, EvalArgs, ExperimentArgs, Format, LmScoreArgs, LmTrainArgs, LossArgs, MergeArgs,
    Metric, SchemeArgs, SynthArgs, TimitArgs,
};

pub fn decode(a: &DecodeArgs, format: Format) -> Result<String> {
    let vocab = read_vocab(&a.vocab, a.strip_fairseq_specials)?;
    let batch = a
        .emissions
        .iter()
        .map(|p| read_emissions(p))
        .collect::<Result<Vec<_>>>()?;
    for (m, p) in batch.iter().zip(&a.emissions) {
        ensure!(
            m.vocab_size() == vocab.len(),
            "{}: {} columns but the vocabulary has {} tokens including the blank",
            p.display(),
            m.vocab_size(),
            vocab.len()
        );
    }
    let best: Vec<(Vec<&str>, Option<&Hypothesis>)>;
    let hyps;
    if a.greedy {
        best = batch
            .iter()
            .map(|m| (vocab.decode(&greedy_decode(m).labels), None))
            .collect();
    } else {
        let lm = match &a.lm {
            Some(path) => Some(
                NGramModel::parse_arpa(&read_text(path)?)
                    .with_context(|| format!("{}", path.display()))?,
            ),
            None => None,
        };
        let params = BeamParams {
            beam_width: a.beam,
            lm_weight: a.lm_weight,
            token_bonus: a.token_bonus,
            prune_log_floor: a.prune_floor,
            lm_eos: a.lm_eos,
        };
        hyps = decode_batch(&batch, &vocab, params, lm.as_ref(), a.jobs).map_err(|e| {
            let path = match &e {
                supraseg::DecodeError::Batch { index, .. } => {
                    a.emissions[*index].display().to_string()
                }
                _ => String::new(),
            };
            anyhow::Error::new(e).context(path)
        })?;
        best = hyps
            .iter()
            .map(|h| match h.first() {
                Some(top) => (vocab.decode(&top.labels), Some(top)),
                None => (Vec::new(), None),
            })
            .collect();
    }
    let mut out = String::new();
    for ((units, hyp), path) in best.iter().zip(&a.emissions) {
        match format {
            Format::Text => {
                let _ = writeln!(out, "{}", units.join(" "));
            }
            Format::Records => {
                let _ = writeln!(out, "utterance={}", path.display());
                let _ = writeln!(out, "hypothesis={}", units.join(" "));
                if let Some(h) = hyp {
                    let _ = writeln!(out, "score={}", h.score);
                    let _ = writeln!(out, "log_prob={}", h.log_prob);
                }
                out.push('\n');
            }
        }
    }
    Ok(out)
}

pub fn loss(a: &LossArgs, format: Format) -> Result<String> {
    let vocab = read_vocab(&a.vocab, false)?;
    let m = read_emissions(&a.emissions)?;
    let target = vocab.encode(&tokens(&a.target)).context("--target")?;
    let r = ctc_loss(&m, &target, a.grad).with_context(|| format!("{}", a.emissions.display()))?;
    let mut out = String::new();
    match format {
        Format::Text => {
            let _ = writeln!(out, "loss {}", r.loss());
            let _ = writeln!(out, "log_prob {}", r.log_prob);
        }
        Format::Records => {
            let _ = writeln!(out, "loss={}", r.loss());
            let _ = writeln!(out, "log_prob={}", r.log_prob);
        }
    }
    if let Some(grad) = &r.grad {
        for (t, row) in grad.chunks(m.vocab_size()).enumerate() {
            let cells: Vec<String> = row.iter().map(|g| g.to_string()).collect();
            match format {
                Format::Text => {
                    let _ = writeln!(out, "{}", cells.join("\t"));
                }
                Format::Records => {
                    let _ = writeln!(out, "grad[{t}]={}", cells.join(" "));
                }
            }
        }
    }
    Ok(out)
}

pub fn lm_train(a: &LmTrainArgs, format: Format) -> Result<String> {
    let text = read_text(&a.corpus)?;
    let corpus: Vec<Vec<&str>> = content_lines(&text).map(|(_, l)| tokens(l)).collect();
    let model = train_ngram(&corpus, a.order).with_context(|| format!("{}", a.corpus.display()))?;
    write_file(&a.out, model.to_arpa().as_bytes())?;
    let mut out = String::new();
    for k in 1..=model.order() {
        match format {
            Format::Text => {
                let _ = writeln!(out, "ngram {k}={}", model.count(k));
            }
            Format::Records => {
                let _ = writeln!(out, "ngrams[{k}]={}", model.count(k));
            }
        }
    }
    Ok(out)
}

pub fn lm_score(a: &LmScoreArgs, format: Format) -> Result<String> {
    let model = NGramModel::parse_arpa(&read_text(&a.arpa)?)
        .with_context(|| format!("{}", a.arpa.display()))?;
    let words = tokens(&a.text);
    let mut state = if a.no_bos {
        model.null_context()
    } else {
        model.begin_sentence()
    };
    let mut steps = Vec::new();
    for w in words.iter().copied().chain((!a.no_eos).then_some(EOS)) {
        let (s, next) = model.score_next(&state, w);
        steps.push((w, s));
        state = next;
    }
    let total: f64 = steps.iter().map(|(_, s)| s).sum();
    let oov = words
        .iter()
        .filter(|w| model.symbol_id(w).is_none())
        .count();
    let mut out = String::new();
    match format {
        Format::Text => {
            let _ = writeln!(out, "{total}");
        }
        Format::Records => {
            for (i, (w, s)) in steps.iter().enumerate() {
                let _ = writeln!(out, "token[{i}]={w} {s}");
            }
            let _ = writeln!(out, "total={total}");
            let _ = writeln!(out, "oov={oov}");
            if !steps.is_empty() {
                let _ = writeln!(
                    out,
                    "perplexity={}",
                    10f64.powf(-total / steps.len() as f64)
                );
            }
        }
    }
    Ok(out)
}

fn load_table(a: &SchemeArgs) -> Result<PinyinTable> {
    match &a.table {
        Some(p) => PinyinTable::parse(&read_text(p)?).with_context(|| format!("{}", p.display())),
        None => Ok(PinyinTable::builtin().clone()),
    }
}

fn line_output(lines: &[(usize, Vec<String>)], format: Format) -> String {
    let mut out = String::new();
    for (n, units) in lines {
        match format {
            Format::Text => {
                let _ = writeln!(out, "{}", units.join(" "));
            }
            Format::Records => {
                let _ = writeln!(out, "line[{n}]={}", units.join(" "));
            }
        }
    }
    out
}

fn scheme(a: &SchemeArgs) -> Result<UnitScheme> {
    a.scheme.parse::<UnitScheme>().context("--scheme")
}

pub fn units_convert(a: &SchemeArgs, format: Format) -> Result<String> {
    let scheme = scheme(a)?;
    let table = load_table(a)?;
    let text = read_text(&a.input)?;
    let lines = content_lines(&text)
        .map(|(n, l)| {
            let syls = table
                .parse_sentence(l)
                .with_context(|| format!("{}:{n}", a.input.display()))?;
            Ok((n, to_unit_scheme(&syls, scheme)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(line_output(&lines, format))
}

pub fn units_project(a: &SchemeArgs, format: Format) -> Result<String> {
    let scheme = scheme(a)?;
    let text = read_text(&a.input)?;
    let lines = content_lines(&text)
        .map(|(n, l)| {
            let tones = project_to_tones(&tokens(l), scheme)
                .with_context(|| format!("{}:{n}", a.input.display()))?;
            Ok((n, tones))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(line_output(&lines, format))
}

pub fn timit_syllables(a: &TimitArgs, format: Format) -> Result<String> {
    let vowels = match &a.vowel_set {
        Some(p) => VowelSet::parse(&read_text(p)?).with_context(|| format!("{}", p.display()))?,
        None => VowelSet::default(),
    };
    let text = read_text(&a.input)?;
    let lines = content_lines(&text)
        .map(|(n, l)| {
            let s = vowels
                .syllable_targets(&tokens(l))
                .with_context(|| format!("{}:{n}", a.input.display()))?;
            Ok((n, s))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(line_output(&lines, format))
}

pub fn merge_vocab(a: &MergeArgs, format: Format) -> Result<String> {
    let va = read_vocab(&a.a, false)?;
    let vb = read_vocab(&a.b, false)?;
    let merged = merge_vocabularies(&va, &vb, a.allow_shared)
        .with_context(|| format!("merging {} and {}", a.a.display(), a.b.display()))?;
    write_file(&a.out, merged.to_file_string().as_bytes())?;
    Ok(match format {
        Format::Text => format!("{} units\n", merged.len() - 1),
        Format::Records => format!("units={}\n", merged.len() - 1),
    })
}

pub fn eval(a: &EvalArgs, format: Format) -> Result<String> {
    let ref_text = read_text(&a.reference)?;
    let hyp_text = read_text(&a.hyp)?;
    let refs = utterance_lines(&ref_text, true);
    let mut hyps: Vec<Vec<&str>> = utterance_lines(&hyp_text, false)
        .into_iter()
        .map(|(_, h)| h)
        .collect();
    while hyps.len() > refs.len() && hyps.last().is_some_and(Vec::is_empty) {
        hyps.pop();
    }
    ensure!(
        refs.len() == hyps.len(),
        "{} has {} utterances but {} has {}",
        a.reference.display(),
        refs.len(),
        a.hyp.display(),
        hyps.len()
    );
    if let Some((n, _)) = refs.iter().find(|(_, r)| r.is_empty()) {
        bail!("{}:{n}: empty reference", a.reference.display());
    }
    let pairs: Vec<(Vec<&str>, Vec<&str>)> = refs
        .iter()
        .map(|(_, r)| r.clone())
        .zip(hyps.iter().cloned())
        .collect();
    let name = match a.metric {
        Metric::Ter => "ter",
        Metric::Sr => "sr",
        Metric::Corr => "corr",
        Metric::Accent => "accent",
    };
    let mut report = EvalReport::from_pairs(name, &pairs)?;
    match a.metric {
        Metric::Ter | Metric::Sr => {}
        Metric::Corr => {
            let counts: Vec<(f64, f64)> = pairs
                .iter()
                .map(|(r, h)| (r.len() as f64, h.len() as f64))
                .collect();
            report.correlation = Some(count_correlation(&counts)?);
        }
        Metric::Accent => {
            let mut r_flags = Vec::new();
            let mut h_flags = Vec::new();
            for (i, ((n, r), h)) in refs.iter().zip(&hyps).enumerate() {
                ensure!(
                    r.len() == h.len(),
                    "{}:{n}: {} reference words but {} hypothesis words in utterance {}",
                    a.reference.display(),
                    r.len(),
                    h.len(),
                    i + 1
                );
                r_flags.extend(
                    accent_flags(r).with_context(|| format!("{}:{n}", a.reference.display()))?,
                );
                h_flags.extend(
                    accent_flags(h)
                        .with_context(|| format!("{} utterance {}", a.hyp.display(), i + 1))?,
                );
            }
            report.accuracy = Some(pitch_accent_accuracy(&r_flags, &h_flags)?);
        }
    }
    Ok(match format {
        Format::Text => report.to_text(),
        Format::Records => report.to_records(),
    })
}

/// One utterance per line with its line number. Empty lines are empty utterances
/// (a decoder may output nothing). `#` lines are dropped, and so are trailing empty
/// lines when `trim_end` is set.
fn utterance_lines(text: &str, trim_end: bool) -> Vec<(usize, Vec<&str>)> {
    let mut lines: Vec<(usize, Vec<&str>)> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim_start().starts_with('#'))
        .map(|(i, l)| (i + 1, tokens(l)))
        .collect();
    while trim_end && lines.last().is_some_and(|(_, t)| t.is_empty()) {
        lines.pop();
    }
    lines
}

fn accent_flags(words: &[&str]) -> Result<Vec<bool>> {
    words
        .iter()
        .map(|w| match *w {
            ACCENTED => Ok(true),
            UNACCENTED => Ok(false),
            other => bail!("accent label {other:?} is neither {ACCENTED} nor {UNACCENTED}"),
        })
        .collect()
}

pub fn synth(a: &SynthArgs, format: Format) -> Result<String> {
    let vocab = read_vocab(&a.vocab, false)?;
    let text = read_text(&a.target)?;
    let target = tokens(&text);
    let confusions = a
        .confuse
        .iter()
        .map(|c| Confusion::parse(c))
        .collect::<Result<Vec<_>, _>>()
        .context("--confuse")?;
    let params = SynthParams {
        frames_per_token: a.frames_per_token,
        blank_gap: a.blank_gap,
        noise_eps: a.noise,
        confusions,
        mix_jitter: a.mix_jitter,
        seed: a.seed,
    };
    let m = synth_from_texts(&target, &vocab, &params)
        .with_context(|| format!("{}", a.target.display()))?;
    write_file(&a.out, &m.write(emission_format_for(&a.out))?)?;
    Ok(match format {
        Format::Text => format!("{} frames x {} columns\n", m.frames(), m.vocab_size()),
        Format::Records => format!("frames={}\ncolumns={}\n", m.frames(), m.vocab_size()),
    })
}

pub fn experiment(a: &ExperimentArgs, format: Format) -> Result<String> {
    let config = ExperimentConfig::parse(&read_text(&a.config)?)
        .with_context(|| format!("{}", a.config.display()))?;
    let base = a.config.parent().unwrap_or(std::path::Path::new("."));
    let corpus = config.load_corpus(base, a.seed)?;
    let reports = run_experiment(&config, &corpus, a.seed, a.jobs)?;
    let blocks: Vec<String> = reports
        .iter()
        .map(|r| match format {
            Format::Text => r.to_text(),
            Format::Records => r.to_records(),
        })
        .collect();
    Ok(match format {
        Format::Text => blocks.join("\n"),
        Format::Records => blocks.concat(),
    })
}
