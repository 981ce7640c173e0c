//! Recognition-unit pipelines: syllable targets from TIMIT phones, the three Mandarin
//! unit schemes and their projection to tones, merged vocabularies and word-level
//! pitch accents.

pub mod accent;
pub mod pinyin;
pub mod timit;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use accent::{parse_word_spans, word_pitch_accents, WordSpan};
pub use pinyin::{parse_pinyin, PinyinSyllable, PinyinTable, ZERO_INITIAL};
pub use timit::{timit_to_syllable_targets, VowelSet, SYLLABLE_TOKEN};

use crate::vocab::{SchemeTag, VocabError, Vocabulary};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum UnitError {
    #[error("unknown TIMIT phone {0:?}")]
    UnknownPhone(String),
    #[error("vowel set is empty")]
    EmptyVowelSet,
    #[error("pinyin {0:?} has no trailing tone digit")]
    NoToneDigit(String),
    #[error("pinyin {0:?} has a tone outside 1-5")]
    BadTone(String),
    #[error("unknown pinyin syllable {0:?}")]
    UnknownSyllable(String),
    #[error("token {0:?} is neither an initial nor ends in a tone digit")]
    MalformedToken(String),
    #[error("line {line}: expected syllable, initial and final: {text:?}")]
    BadTableRow { line: usize, text: String },
    #[error("line {line}: syllable or initial+final already listed: {text:?}")]
    AmbiguousTableRow { line: usize, text: String },
    #[error("decomposition table is empty")]
    EmptyTable,
    #[error("line {line}: expected word, start, end and optional 0/1: {text:?}")]
    BadSpanRow { line: usize, text: String },
    #[error("span {index} [{start}, {end}) lies outside {frames} frames")]
    SpanOutOfRange {
        index: usize,
        start: usize,
        end: usize,
        frames: usize,
    },
    #[error("span {index} overlaps or precedes the previous span")]
    OverlappingSpans { index: usize },
}

/// The three Mandarin recognition-unit schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnitScheme {
    Tone,
    InitialFinalTone,
    SyllableTone,
}

impl UnitScheme {
    pub const ALL: [UnitScheme; 3] = [
        UnitScheme::Tone,
        UnitScheme::InitialFinalTone,
        UnitScheme::SyllableTone,
    ];

    pub fn as_str(self) -> &'static str {
        self.tag().as_str()
    }

    pub fn tag(self) -> SchemeTag {
        match self {
            UnitScheme::Tone => SchemeTag::Tone,
            UnitScheme::InitialFinalTone => SchemeTag::InitialFinalTone,
            UnitScheme::SyllableTone => SchemeTag::SyllableTone,
        }
    }

    /// Every unit the scheme can emit over `table`, in a fixed order.
    pub fn vocabulary(self, table: &PinyinTable) -> Vocabulary {
        let mut units: Vec<String> = Vec::new();
        match self {
            UnitScheme::Tone => units.extend((1..=5).map(tone_token)),
            UnitScheme::InitialFinalTone => {
                units.extend(table.initials().into_iter().map(String::from));
                for fin in table.finals() {
                    units.extend((1..=5).map(|t| format!("{fin}{t}")));
                }
            }
            UnitScheme::SyllableTone => {
                for syl in table.syllables() {
                    units.extend((1..=5).map(|t| format!("{syl}{t}")));
                }
            }
        }
        Vocabulary::from_tokens(units, self.tag()).expect("scheme units are distinct")
    }
}

impl fmt::Display for UnitScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for UnitScheme {
    type Err = VocabError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.parse::<SchemeTag>()? {
            SchemeTag::Tone => Ok(UnitScheme::Tone),
            SchemeTag::InitialFinalTone => Ok(UnitScheme::InitialFinalTone),
            SchemeTag::SyllableTone => Ok(UnitScheme::SyllableTone),
            _ => Err(VocabError::UnknownScheme(s.to_string())),
        }
    }
}

fn tone_token(tone: u8) -> String {
    format!("T{tone}")
}

/// Renders parsed syllables as unit texts of `scheme`.
pub fn to_unit_scheme(syllables: &[PinyinSyllable], scheme: UnitScheme) -> Vec<String> {
    let mut out = Vec::with_capacity(syllables.len() * 2);
    for s in syllables {
        match scheme {
            UnitScheme::Tone => out.push(tone_token(s.tone)),
            UnitScheme::InitialFinalTone => {
                out.push(s.initial.clone());
                out.push(format!("{}{}", s.final_, s.tone));
            }
            UnitScheme::SyllableTone => out.push(s.to_string()),
        }
    }
    out
}

/// Initials dropped by [`project_to_tones`].
pub const INITIALS: [&str; 22] = [
    "b",
    "p",
    "m",
    "f",
    "d",
    "t",
    "n",
    "l",
    "g",
    "k",
    "h",
    "j",
    "q",
    "x",
    "zh",
    "ch",
    "sh",
    "r",
    "z",
    "c",
    "s",
    ZERO_INITIAL,
];

/// Maps unit texts of `scheme` to tone texts: initials vanish and every tonal
/// unit becomes `T<digit>`.
pub fn project_to_tones<S: AsRef<str>>(
    tokens: &[S],
    scheme: UnitScheme,
) -> Result<Vec<String>, UnitError> {
    let mut out = Vec::with_capacity(tokens.len());
    for tok in tokens {
        let tok = tok.as_ref();
        if scheme == UnitScheme::Tone {
            match tok.strip_prefix('T').and_then(tone_digit) {
                Some(_) => out.push(tok.to_string()),
                None => return Err(UnitError::MalformedToken(tok.to_string())),
            }
            continue;
        }
        if scheme == UnitScheme::InitialFinalTone && INITIALS.contains(&tok) {
            continue;
        }
        let digit = tok
            .char_indices()
            .last()
            .filter(|&(i, _)| i > 0)
            .and_then(|(i, _)| tone_digit(&tok[i..]));
        match digit {
            Some(t) => out.push(tone_token(t)),
            None => return Err(UnitError::MalformedToken(tok.to_string())),
        }
    }
    Ok(out)
}

fn tone_digit(s: &str) -> Option<u8> {
    match s {
        "1" | "2" | "3" | "4" | "5" => s.parse().ok(),
        _ => None,
    }
}

/// Union of two vocabularies: `a`'s tokens, then `b`'s new ones. See [`Vocabulary::merge`].
pub fn merge_vocabularies(
    a: &Vocabulary,
    b: &Vocabulary,
    allow_shared: bool,
) -> Result<Vocabulary, VocabError> {
    a.merge(b, allow_shared)
}

/// Shipped vocabulary files.
pub mod fixtures {
    use crate::vocab::{SchemeTag, Vocabulary};

    pub const TONES: &str = include_str!("../../data/vocab/tones.txt");
    pub const TIMIT39: &str = include_str!("../../data/vocab/timit39.txt");
    pub const PITCH_ACCENT: &str = include_str!("../../data/vocab/pitch_accent.txt");
    pub const SYLLABLE: &str = include_str!("../../data/vocab/syllable.txt");

    pub fn tones() -> Vocabulary {
        Vocabulary::parse(TONES, SchemeTag::Tone).unwrap()
    }

    pub fn timit39() -> Vocabulary {
        Vocabulary::parse(TIMIT39, SchemeTag::Phoneme).unwrap()
    }

    pub fn pitch_accent() -> Vocabulary {
        Vocabulary::parse(PITCH_ACCENT, SchemeTag::PitchAccent).unwrap()
    }

    pub fn syllable() -> Vocabulary {
        Vocabulary::parse(SYLLABLE, SchemeTag::SyllableMarker).unwrap()
    }
}
