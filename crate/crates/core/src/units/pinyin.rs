//! Tone-numbered pinyin split into initial, final and tone.
//!
//! The built-in table follows lexicon conventions where zero-initial syllables take
//! the placeholder initial `ii` (`ye` → `ii ie`, `wu` → `ii u`, `yu` → `ii v`) and
//! ü is written `v`, including after j/q/x (`quan` → `q van`).

use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use super::UnitError;

pub const ZERO_INITIAL: &str = "ii";

const BUILTIN_TABLE: &str = include_str!("../../data/pinyin.tsv");

/// A parsed syllable.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PinyinSyllable {
    /// Toneless pinyin spelling, e.g. `quan`.
    pub syllable: String,
    /// Consonant onset, or `ii` for zero-initial syllables.
    pub initial: String,
    /// Rhyme in lexicon spelling, e.g. `van`.
    pub final_: String,
    /// 1–4 for the lexical tones, 5 for the neutral tone.
    pub tone: u8,
}

impl PinyinSyllable {
    pub fn has_zero_initial(&self) -> bool {
        self.initial == ZERO_INITIAL
    }
}

impl fmt::Display for PinyinSyllable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.syllable, self.tone)
    }
}

/// Syllable decomposition table with its inverse.
#[derive(Debug, Clone)]
pub struct PinyinTable {
    split: HashMap<String, (String, String)>,
    join: HashMap<(String, String), String>,
    order: Vec<String>,
}

impl PinyinTable {
    /// Parses TSV rows `syllable<TAB>initial<TAB>final`; `#` lines are comments.
    pub fn parse(text: &str) -> Result<Self, UnitError> {
        let mut table = PinyinTable {
            split: HashMap::new(),
            join: HashMap::new(),
            order: Vec::new(),
        };
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || UnitError::BadTableRow {
                line: i + 1,
                text: line.to_string(),
            };
            let mut fields = line.split('\t');
            let (Some(syl), Some(ini), Some(fin), None) =
                (fields.next(), fields.next(), fields.next(), fields.next())
            else {
                return Err(bad());
            };
            let (syl, ini, fin) = (syl.trim(), ini.trim(), fin.trim());
            if syl.is_empty() || ini.is_empty() || fin.is_empty() {
                return Err(bad());
            }
            let key = (ini.to_string(), fin.to_string());
            if table.split.contains_key(syl) || table.join.contains_key(&key) {
                return Err(UnitError::AmbiguousTableRow {
                    line: i + 1,
                    text: line.to_string(),
                });
            }
            table.split.insert(syl.to_string(), key.clone());
            table.join.insert(key, syl.to_string());
            table.order.push(syl.to_string());
        }
        if table.order.is_empty() {
            return Err(UnitError::EmptyTable);
        }
        Ok(table)
    }

    /// The shipped table (412 syllables).
    pub fn builtin() -> &'static PinyinTable {
        static TABLE: OnceLock<PinyinTable> = OnceLock::new();
        TABLE.get_or_init(|| PinyinTable::parse(BUILTIN_TABLE).expect("built-in pinyin table"))
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Toneless syllables in table order.
    pub fn syllables(&self) -> &[String] {
        &self.order
    }

    /// `(initial, final)` of a toneless syllable.
    pub fn decompose(&self, syllable: &str) -> Option<(&str, &str)> {
        self.split
            .get(syllable)
            .map(|(i, f)| (i.as_str(), f.as_str()))
    }

    /// Inverse of [`decompose`](Self::decompose).
    pub fn compose(&self, initial: &str, final_: &str) -> Option<&str> {
        self.join
            .get(&(initial.to_string(), final_.to_string()))
            .map(String::as_str)
    }

    /// Distinct initials in first-seen order.
    pub fn initials(&self) -> Vec<&str> {
        self.unique(|(i, _)| i.as_str())
    }

    /// Distinct finals in first-seen order.
    pub fn finals(&self) -> Vec<&str> {
        self.unique(|(_, f)| f.as_str())
    }

    fn unique<'a>(&'a self, pick: impl Fn(&'a (String, String)) -> &'a str) -> Vec<&'a str> {
        let mut seen = Vec::new();
        for syl in &self.order {
            let item = pick(&self.split[syl]);
            if !seen.contains(&item) {
                seen.push(item);
            }
        }
        seen
    }

    /// Parses `quan2`-style text. The trailing digit must be 1–5.
    pub fn parse_syllable(&self, text: &str) -> Result<PinyinSyllable, UnitError> {
        let Some(last) = text.chars().last().filter(char::is_ascii_digit) else {
            return Err(UnitError::NoToneDigit(text.to_string()));
        };
        let tone = last.to_digit(10).unwrap() as u8;
        if !(1..=5).contains(&tone) {
            return Err(UnitError::BadTone(text.to_string()));
        }
        let base = &text[..text.len() - 1];
        let (initial, final_) = self
            .decompose(base)
            .ok_or_else(|| UnitError::UnknownSyllable(text.to_string()))?;
        Ok(PinyinSyllable {
            syllable: base.to_string(),
            initial: initial.to_string(),
            final_: final_.to_string(),
            tone,
        })
    }

    /// Parses a whitespace-separated pinyin sentence.
    pub fn parse_sentence(&self, text: &str) -> Result<Vec<PinyinSyllable>, UnitError> {
        text.split_whitespace()
            .map(|s| self.parse_syllable(s))
            .collect()
    }
}

/// [`PinyinTable::parse_syllable`] against the built-in table.
pub fn parse_pinyin(text: &str) -> Result<PinyinSyllable, UnitError> {
    PinyinTable::builtin().parse_syllable(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn split(text: &str) -> (String, String, u8) {
        let s = parse_pinyin(text).unwrap();
        (s.initial, s.final_, s.tone)
    }

    #[test]
    fn sentence_examples() {
        assert_eq!(split("quan2"), ("q".into(), "van".into(), 2));
        assert_eq!(split("ye3"), ("ii".into(), "ie".into(), 3));
        assert_eq!(split("biao3"), ("b".into(), "iao".into(), 3));
        assert_eq!(split("de5"), ("d".into(), "e".into(), 5));
    }

    #[test]
    fn zero_initial_conventions() {
        assert_eq!(split("wu3"), ("ii".into(), "u".into(), 3));
        assert_eq!(split("yu2"), ("ii".into(), "v".into(), 2));
        assert_eq!(split("yuan2"), ("ii".into(), "van".into(), 2));
        assert_eq!(split("you3"), ("ii".into(), "iu".into(), 3));
        assert_eq!(split("wei4"), ("ii".into(), "ui".into(), 4));
        assert_eq!(split("er2"), ("ii".into(), "er".into(), 2));
        assert_eq!(split("lv4"), ("l".into(), "v".into(), 4));
        assert_eq!(split("xue2"), ("x".into(), "ve".into(), 2));
        assert_eq!(split("zhi1"), ("zh".into(), "i".into(), 1));
    }

    #[test]
    fn errors() {
        assert_eq!(parse_pinyin("ta"), Err(UnitError::NoToneDigit("ta".into())));
        assert_eq!(parse_pinyin(""), Err(UnitError::NoToneDigit("".into())));
        assert_eq!(parse_pinyin("ta7"), Err(UnitError::BadTone("ta7".into())));
        assert_eq!(parse_pinyin("ta0"), Err(UnitError::BadTone("ta0".into())));
        assert_eq!(
            parse_pinyin("xyz1"),
            Err(UnitError::UnknownSyllable("xyz1".into()))
        );
    }

    #[test]
    fn builtin_table_shape() {
        let t = PinyinTable::builtin();
        assert_eq!(t.len(), 412);
        assert_eq!(t.initials().len(), 22);
        assert_eq!(t.finals().len(), 37);
        assert_eq!(t.initials()[0], ZERO_INITIAL);
    }

    #[test]
    fn every_entry_recombines() {
        let t = PinyinTable::builtin();
        for syl in t.syllables() {
            for tone in 1..=5 {
                let text = format!("{syl}{tone}");
                let parsed = t.parse_syllable(&text).unwrap();
                let back = t.compose(&parsed.initial, &parsed.final_).unwrap();
                assert_eq!(format!("{back}{}", parsed.tone), text);
                assert_eq!(parsed.to_string(), text);
            }
        }
    }

    #[test]
    fn custom_table_rows() {
        let t = PinyinTable::parse("# custom\nma\tm\ta\nan\tii\tan\n").unwrap();
        assert_eq!(t.len(), 2);
        assert!(matches!(
            PinyinTable::parse("ma\tm\n"),
            Err(UnitError::BadTableRow { line: 1, .. })
        ));
        assert!(matches!(
            PinyinTable::parse("ma\tm\ta\nmaa\tm\ta\n"),
            Err(UnitError::AmbiguousTableRow { line: 2, .. })
        ));
        assert_eq!(
            PinyinTable::parse("# empty\n").unwrap_err(),
            UnitError::EmptyTable
        );
    }
}
