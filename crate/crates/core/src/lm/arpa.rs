//! ARPA text format. Fields may be separated by tabs or runs of spaces on input;
//! output always uses tabs.

use std::fmt::Write as _;

use super::{LmError, NGramEntry, NGramModel};

fn header_error(line: usize, reason: impl Into<String>) -> LmError {
    LmError::MalformedHeader {
        line,
        reason: reason.into(),
    }
}

pub(super) fn parse(text: &str) -> Result<NGramModel, LmError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r').trim()));

    // preamble before \data\ is ignored
    loop {
        match lines.next() {
            Some((_, "\\data\\")) => break,
            Some(_) => {}
            None => return Err(LmError::MissingSection("\\data\\".into())),
        }
    }

    let mut declared: Vec<usize> = Vec::new();
    let mut pending = None;
    for (lineno, line) in lines.by_ref() {
        if line.is_empty() {
            if declared.is_empty() {
                continue;
            }
            break;
        }
        if line.starts_with('\\') {
            pending = Some((lineno, line));
            break;
        }
        let rest = line
            .strip_prefix("ngram")
            .ok_or_else(|| header_error(lineno, "expected `ngram k=count`"))?;
        let (k, count) = rest
            .trim()
            .split_once('=')
            .ok_or_else(|| header_error(lineno, "expected `ngram k=count`"))?;
        let k: usize = k
            .trim()
            .parse()
            .map_err(|_| header_error(lineno, "bad order"))?;
        let count: usize = count
            .trim()
            .parse()
            .map_err(|_| header_error(lineno, "bad count"))?;
        if k != declared.len() + 1 {
            return Err(header_error(lineno, format!("order {k} out of sequence")));
        }
        declared.push(count);
    }
    if declared.is_empty() {
        return Err(header_error(0, "no ngram counts"));
    }

    let order = declared.len();
    let mut model = NGramModel::empty(order);
    let mut section: Option<usize> = None;
    let mut found = 0usize;
    let mut ended = false;

    let finish = |section: Option<usize>, found: usize| -> Result<(), LmError> {
        if let Some(k) = section {
            if found != declared[k - 1] {
                return Err(LmError::CountMismatch {
                    order: k,
                    declared: declared[k - 1],
                    found,
                });
            }
        }
        Ok(())
    };

    let mut seen_sections = 0;
    for (lineno, line) in pending.into_iter().chain(lines) {
        if line.is_empty() {
            continue;
        }
        if line == "\\end\\" {
            finish(section, found)?;
            ended = true;
            break;
        }
        if let Some(k) = line
            .strip_prefix('\\')
            .and_then(|l| l.strip_suffix("-grams:"))
        {
            finish(section, found)?;
            let k: usize = k
                .parse()
                .map_err(|_| header_error(lineno, "bad section header"))?;
            if k != seen_sections + 1 || k > order {
                return Err(header_error(
                    lineno,
                    format!("unexpected section {k}-grams"),
                ));
            }
            seen_sections = k;
            section = Some(k);
            found = 0;
            continue;
        }
        let k = section.ok_or_else(|| header_error(lineno, "entry outside a section"))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != k + 1 && fields.len() != k + 2 {
            return Err(LmError::MalformedEntry {
                line: lineno,
                order: k,
            });
        }
        let number = |s: &str| {
            s.parse::<f64>().map_err(|_| LmError::BadNumber {
                line: lineno,
                text: s.to_string(),
            })
        };
        let log10_prob = number(fields[0])?;
        let log10_backoff = fields.get(k + 1).map(|s| number(s)).transpose()?;
        let words: Vec<u32> = fields[1..=k].iter().map(|w| model.intern(w)).collect();
        if !model.insert(
            &words,
            NGramEntry {
                log10_prob,
                log10_backoff,
            },
        ) {
            return Err(LmError::DuplicateNgram { line: lineno });
        }
        found += 1;
    }
    if !ended {
        return Err(LmError::MissingSection("\\end\\".into()));
    }
    if seen_sections != order {
        return Err(LmError::MissingSection(format!(
            "\\{}-grams:",
            seen_sections + 1
        )));
    }
    Ok(model)
}

pub(super) fn write(model: &NGramModel) -> String {
    let mut out = String::from("\\data\\\n");
    for k in 1..=model.order {
        writeln!(out, "ngram {k}={}", model.count(k)).unwrap();
    }
    for k in 1..=model.order {
        write!(out, "\n\\{k}-grams:\n").unwrap();
        let mut rows: Vec<(Vec<&str>, &NGramEntry)> = model.tables[k - 1]
            .iter()
            .map(|(key, e)| {
                let words = key
                    .iter()
                    .map(|&id| model.symbols[id as usize].as_str())
                    .collect();
                (words, e)
            })
            .collect();
        rows.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        for (words, e) in rows {
            write!(out, "{}\t{}", e.log10_prob, words.join(" ")).unwrap();
            if let Some(bo) = e.log10_backoff {
                write!(out, "\t{bo}").unwrap();
            }
            out.push('\n');
        }
    }
    out.push_str("\n\\end\\\n");
    out
}
