//! Token inventories and the label sequences that live in their id space.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Index of a token inside a [`Vocabulary`].
pub type TokenId = usize;

/// The CTC blank always occupies id 0.
pub const BLANK_ID: TokenId = 0;
/// Reserved text of the blank token. Never listed in vocabulary files.
pub const BLANK_TEXT: &str = "<blank>";

/// Training-framework tokens that are not recognition units.
pub const FAIRSEQ_SPECIALS: [&str; 4] = ["<s>", "</s>", "<pad>", "<unk>"];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VocabError {
    #[error("vocabulary is empty")]
    EmptyVocabulary,
    #[error("line {line}: duplicate token {text:?}")]
    DuplicateToken { line: usize, text: String },
    #[error("line {line}: token {text:?} contains whitespace")]
    WhitespaceInToken { line: usize, text: String },
    #[error("token text may not be empty")]
    EmptyToken,
    #[error("token collision between vocabularies: {}", .0.join(" "))]
    TokenCollision(Vec<String>),
    #[error("unknown scheme tag {0:?}")]
    UnknownScheme(String),
    #[error("unknown token {0:?}")]
    UnknownToken(String),
}

/// Which family of recognition units a vocabulary holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeTag {
    Tone,
    InitialFinalTone,
    SyllableTone,
    SyllableMarker,
    PitchAccent,
    Phoneme,
    Merged,
}

impl SchemeTag {
    pub fn as_str(self) -> &'static str {
        match self {
            SchemeTag::Tone => "tone",
            SchemeTag::InitialFinalTone => "initial_final_tone",
            SchemeTag::SyllableTone => "syllable_tone",
            SchemeTag::SyllableMarker => "syllable_marker",
            SchemeTag::PitchAccent => "pitch_accent",
            SchemeTag::Phoneme => "phoneme",
            SchemeTag::Merged => "merged",
        }
    }
}

impl fmt::Display for SchemeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeTag {
    type Err = VocabError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "tone" => SchemeTag::Tone,
            "initial_final_tone" | "if_tone" => SchemeTag::InitialFinalTone,
            "syllable_tone" | "syl_tone" => SchemeTag::SyllableTone,
            "syllable_marker" => SchemeTag::SyllableMarker,
            "pitch_accent" => SchemeTag::PitchAccent,
            "phoneme" => SchemeTag::Phoneme,
            "merged" => SchemeTag::Merged,
            other => return Err(VocabError::UnknownScheme(other.to_string())),
        })
    }
}

/// A token and its id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub text: &'a str,
    pub id: TokenId,
}

/// Options for [`Vocabulary::parse_with`].
#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Drop `<s>`, `</s>`, `<pad>` and `<unk>` lines instead of treating them as units.
    pub strip_fairseq_specials: bool,
}

/// Ordered token inventory with the blank at id 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    texts: Vec<String>,
    index: HashMap<String, TokenId>,
    scheme: SchemeTag,
}

impl Vocabulary {
    /// Builds a vocabulary from non-blank token texts; the blank is prepended.
    pub fn from_tokens<I, S>(tokens: I, scheme: SchemeTag) -> Result<Self, VocabError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Vocabulary::blank_only(scheme);
        for (i, text) in tokens.into_iter().enumerate() {
            vocab.push(text.into(), i + 1)?;
        }
        if vocab.len() == 1 {
            return Err(VocabError::EmptyVocabulary);
        }
        Ok(vocab)
    }

    /// A vocabulary holding only the blank. Useful as a merge identity.
    pub fn blank_only(scheme: SchemeTag) -> Self {
        let mut index = HashMap::new();
        index.insert(BLANK_TEXT.to_string(), BLANK_ID);
        Vocabulary {
            texts: vec![BLANK_TEXT.to_string()],
            index,
            scheme,
        }
    }

    fn push(&mut self, text: String, line: usize) -> Result<(), VocabError> {
        if text.is_empty() {
            return Err(VocabError::EmptyToken);
        }
        if text.chars().any(char::is_whitespace) {
            return Err(VocabError::WhitespaceInToken { line, text });
        }
        if self.index.contains_key(&text) {
            return Err(VocabError::DuplicateToken { line, text });
        }
        self.index.insert(text.clone(), self.texts.len());
        self.texts.push(text);
        Ok(())
    }

    /// Parses a vocabulary file: one token per line, `#` comment lines, blank lines ignored.
    pub fn parse(text: &str, scheme: SchemeTag) -> Result<Self, VocabError> {
        Self::parse_with(text, scheme, LoadOptions::default())
    }

    pub fn parse_with(
        text: &str,
        scheme: SchemeTag,
        opts: LoadOptions,
    ) -> Result<Self, VocabError> {
        let mut vocab = Vocabulary::blank_only(scheme);
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if opts.strip_fairseq_specials && FAIRSEQ_SPECIALS.contains(&trimmed) {
                continue;
            }
            vocab.push(trimmed.to_string(), lineno + 1)?;
        }
        if vocab.len() == 1 {
            return Err(VocabError::EmptyVocabulary);
        }
        Ok(vocab)
    }

    /// Serializes the non-blank tokens in id order, one per line.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        for text in &self.texts[1..] {
            out.push_str(text);
            out.push('\n');
        }
        out
    }

    /// Number of tokens including the blank.
    pub fn len(&self) -> usize {
        self.texts.len()
    }

    /// Always false: a vocabulary holds at least the blank.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn blank_id(&self) -> TokenId {
        BLANK_ID
    }

    pub fn scheme(&self) -> SchemeTag {
        self.scheme
    }

    pub fn with_scheme(mut self, scheme: SchemeTag) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn id(&self, text: &str) -> Option<TokenId> {
        self.index.get(text).copied()
    }

    pub fn text(&self, id: TokenId) -> Option<&str> {
        self.texts.get(id).map(String::as_str)
    }

    pub fn contains(&self, text: &str) -> bool {
        self.index.contains_key(text)
    }

    /// Iterates over all tokens, blank first.
    pub fn tokens(&self) -> impl Iterator<Item = Token<'_>> {
        self.texts
            .iter()
            .enumerate()
            .map(|(id, text)| Token { text, id })
    }

    /// Non-blank token texts in id order.
    pub fn unit_texts(&self) -> &[String] {
        &self.texts[1..]
    }

    /// Maps whitespace-separated token texts to a label sequence.
    pub fn encode<S: AsRef<str>>(&self, texts: &[S]) -> Result<LabelSequence, VocabError> {
        texts
            .iter()
            .map(|t| {
                let t = t.as_ref();
                match self.id(t) {
                    Some(BLANK_ID) | None => Err(VocabError::UnknownToken(t.to_string())),
                    Some(id) => Ok(id),
                }
            })
            .collect::<Result<Vec<_>, _>>()
            .map(LabelSequence::new)
    }

    /// Renders ids as texts. Out-of-range ids render as `<?>`.
    pub fn decode(&self, labels: &LabelSequence) -> Vec<&str> {
        labels
            .ids()
            .iter()
            .map(|&id| self.text(id).unwrap_or("<?>"))
            .collect()
    }

    /// Appends `other`'s tokens after this vocabulary's. Shared texts are an
    /// error unless `allow_shared`, in which case they keep their existing id.
    pub fn merge(&self, other: &Vocabulary, allow_shared: bool) -> Result<Vocabulary, VocabError> {
        let shared: Vec<String> = other
            .unit_texts()
            .iter()
            .filter(|t| self.contains(t))
            .cloned()
            .collect();
        if !shared.is_empty() && !allow_shared {
            return Err(VocabError::TokenCollision(shared));
        }
        let mut merged = self.clone().with_scheme(SchemeTag::Merged);
        for text in other.unit_texts() {
            if !merged.contains(text) {
                let line = merged.len();
                merged.push(text.clone(), line)?;
            }
        }
        Ok(merged)
    }
}

/// Collapsed output sequence of token ids. Never contains the blank.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct LabelSequence(Vec<TokenId>);

impl LabelSequence {
    /// # Panics
    /// If `ids` contains the blank.
    pub fn new(ids: Vec<TokenId>) -> Self {
        assert!(
            !ids.contains(&BLANK_ID),
            "label sequences cannot contain the blank"
        );
        LabelSequence(ids)
    }

    pub fn empty() -> Self {
        LabelSequence(Vec::new())
    }

    pub fn ids(&self) -> &[TokenId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<TokenId> {
        self.0
    }

    /// Number of adjacent equal pairs; each needs a separating blank frame.
    pub fn adjacent_repeats(&self) -> usize {
        self.0.windows(2).filter(|w| w[0] == w[1]).count()
    }
}

impl From<LabelSequence> for Vec<TokenId> {
    fn from(seq: LabelSequence) -> Self {
        seq.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_tone_vocabulary() {
        let v = Vocabulary::parse("T1\nT2\nT3\nT4\nT5", SchemeTag::Tone).unwrap();
        assert_eq!(v.len(), 6);
        assert_eq!(v.blank_id(), 0);
        assert_eq!(v.text(0), Some(BLANK_TEXT));
        for k in 1..=5 {
            assert_eq!(v.id(&format!("T{k}")), Some(k));
        }
    }

    #[test]
    fn single_syllable_marker() {
        let v = Vocabulary::parse("S\n", SchemeTag::SyllableMarker).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v.text(1), Some("S"));
    }

    #[test]
    fn empty_inputs_are_rejected() {
        assert_eq!(
            Vocabulary::parse("", SchemeTag::Tone),
            Err(VocabError::EmptyVocabulary)
        );
        assert_eq!(
            Vocabulary::parse("# only a comment\n\n", SchemeTag::Tone),
            Err(VocabError::EmptyVocabulary)
        );
    }

    #[test]
    fn duplicate_and_whitespace_errors() {
        assert!(matches!(
            Vocabulary::parse("T1\nT1", SchemeTag::Tone),
            Err(VocabError::DuplicateToken { line: 2, .. })
        ));
        assert!(matches!(
            Vocabulary::parse("T1\nT 2", SchemeTag::Tone),
            Err(VocabError::WhitespaceInToken { line: 2, .. })
        ));
        // the blank is implicit, listing it collides
        assert!(matches!(
            Vocabulary::parse("<blank>\nT1", SchemeTag::Tone),
            Err(VocabError::DuplicateToken { .. })
        ));
    }

    #[test]
    fn comments_and_fairseq_specials() {
        let text = "# tones\n<s>\n<pad>\n</s>\n<unk>\nT1\nT2\n";
        let kept = Vocabulary::parse(text, SchemeTag::Tone).unwrap();
        assert_eq!(kept.len(), 7);
        let stripped = Vocabulary::parse_with(
            text,
            SchemeTag::Tone,
            LoadOptions {
                strip_fairseq_specials: true,
            },
        )
        .unwrap();
        assert_eq!(stripped.unit_texts(), ["T1", "T2"]);
    }

    #[test]
    fn lookup_round_trips() {
        let v = Vocabulary::parse("a\nb\nsh\nT3", SchemeTag::Merged).unwrap();
        for tok in v.tokens() {
            assert_eq!(v.id(tok.text), Some(tok.id));
            assert_eq!(v.text(tok.id), Some(tok.text));
        }
    }

    #[test]
    fn merge_keeps_order_and_detects_collisions() {
        let a = Vocabulary::parse("t\nsh\naa", SchemeTag::Phoneme).unwrap();
        let b = Vocabulary::parse("T1\nT2", SchemeTag::Tone).unwrap();
        let m = a.merge(&b, false).unwrap();
        assert_eq!(m.unit_texts(), ["t", "sh", "aa", "T1", "T2"]);
        assert_eq!(m.scheme(), SchemeTag::Merged);

        let c = Vocabulary::parse("t\na1", SchemeTag::InitialFinalTone).unwrap();
        assert_eq!(
            a.merge(&c, false),
            Err(VocabError::TokenCollision(vec!["t".into()]))
        );
        let shared = a.merge(&c, true).unwrap();
        assert_eq!(shared.unit_texts(), ["t", "sh", "aa", "a1"]);
    }

    #[test]
    fn encode_rejects_blank_and_unknown() {
        let v = Vocabulary::parse("T1\nT2", SchemeTag::Tone).unwrap();
        assert_eq!(v.encode(&["T2", "T1"]).unwrap().ids(), [2, 1]);
        assert!(v.encode(&["<blank>"]).is_err());
        assert!(v.encode(&["T9"]).is_err());
    }

    #[test]
    fn scheme_tags_parse() {
        for tag in [
            SchemeTag::Tone,
            SchemeTag::InitialFinalTone,
            SchemeTag::SyllableTone,
            SchemeTag::SyllableMarker,
            SchemeTag::PitchAccent,
            SchemeTag::Phoneme,
            SchemeTag::Merged,
        ] {
            assert_eq!(tag.as_str().parse::<SchemeTag>().unwrap(), tag);
        }
        assert_eq!(
            "syl_tone".parse::<SchemeTag>().unwrap(),
            SchemeTag::SyllableTone
        );
    }
}
