//! Frame-level pitch-accent outputs mapped to words.

use super::UnitError;
use crate::vocab::TokenId;

/// Token texts of the two pitch-accent syllable classes.
pub const ACCENTED: &str = "1";
pub const UNACCENTED: &str = "0";

/// A word's frame range `[start_frame, end_frame)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordSpan {
    pub word: String,
    pub start_frame: usize,
    pub end_frame: usize,
    /// Reference label, when known.
    pub accent_ref: Option<bool>,
}

impl WordSpan {
    pub fn new(word: impl Into<String>, start_frame: usize, end_frame: usize) -> Self {
        WordSpan {
            word: word.into(),
            start_frame,
            end_frame,
            accent_ref: None,
        }
    }
}

/// Parses `word<TAB>start<TAB>end[<TAB>0|1]` rows.
pub fn parse_word_spans(text: &str) -> Result<Vec<WordSpan>, UnitError> {
    let mut spans = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || UnitError::BadSpanRow {
            line: i + 1,
            text: line.to_string(),
        };
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() != 3 && fields.len() != 4 {
            return Err(bad());
        }
        let start: usize = fields[1].parse().map_err(|_| bad())?;
        let end: usize = fields[2].parse().map_err(|_| bad())?;
        let accent_ref = match fields.get(3) {
            None => None,
            Some(&"1") => Some(true),
            Some(&"0") => Some(false),
            Some(_) => return Err(bad()),
        };
        spans.push(WordSpan {
            word: fields[0].to_string(),
            start_frame: start,
            end_frame: end,
            accent_ref,
        });
    }
    Ok(spans)
}

/// A word is accented iff any frame inside its span emits `accent_token`.
pub fn word_pitch_accents(
    frame_path: &[TokenId],
    spans: &[WordSpan],
    accent_token: TokenId,
) -> Result<Vec<bool>, UnitError> {
    let mut prev_end = 0;
    for (i, s) in spans.iter().enumerate() {
        if s.start_frame >= s.end_frame || s.end_frame > frame_path.len() {
            return Err(UnitError::SpanOutOfRange {
                index: i,
                start: s.start_frame,
                end: s.end_frame,
                frames: frame_path.len(),
            });
        }
        if s.start_frame < prev_end {
            return Err(UnitError::OverlappingSpans { index: i });
        }
        prev_end = s.end_frame;
    }
    Ok(spans
        .iter()
        .map(|s| frame_path[s.start_frame..s.end_frame].contains(&accent_token))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const BLANK: TokenId = 0;
    // vocabulary <blank>, 0, 1
    const ZERO: TokenId = 1;
    const ONE: TokenId = 2;

    #[test]
    fn single_accent_frame_marks_the_word() {
        let path = [ZERO, BLANK, ONE, ZERO];
        let spans = [WordSpan::new("w", 0, 4)];
        assert_eq!(word_pitch_accents(&path, &spans, ONE).unwrap(), [true]);
    }

    #[test]
    fn all_blank_frames() {
        let spans = [WordSpan::new("a", 0, 2), WordSpan::new("b", 2, 4)];
        assert_eq!(
            word_pitch_accents(&[BLANK; 4], &spans, ONE).unwrap(),
            [false, false]
        );
    }

    #[test]
    fn two_words() {
        let path = [ONE, BLANK, BLANK, ZERO];
        let spans = [WordSpan::new("a", 0, 2), WordSpan::new("b", 2, 4)];
        assert_eq!(
            word_pitch_accents(&path, &spans, ONE).unwrap(),
            [true, false]
        );
    }

    #[test]
    fn range_errors() {
        let path = [BLANK; 4];
        assert!(matches!(
            word_pitch_accents(&path, &[WordSpan::new("a", 2, 5)], ONE),
            Err(UnitError::SpanOutOfRange { index: 0, .. })
        ));
        assert!(matches!(
            word_pitch_accents(&path, &[WordSpan::new("a", 2, 2)], ONE),
            Err(UnitError::SpanOutOfRange { .. })
        ));
        assert!(matches!(
            word_pitch_accents(
                &path,
                &[WordSpan::new("a", 0, 3), WordSpan::new("b", 2, 4)],
                ONE
            ),
            Err(UnitError::OverlappingSpans { index: 1 })
        ));
    }

    #[test]
    fn parses_span_file() {
        let spans = parse_word_spans("the\t0\t3\t0\ncat\t3\t9\t1\nsat\t9\t12\n").unwrap();
        assert_eq!(spans.len(), 3);
        assert_eq!(spans[1].accent_ref, Some(true));
        assert_eq!(spans[2].accent_ref, None);
        assert!(matches!(
            parse_word_spans("x\t1\n"),
            Err(UnitError::BadSpanRow { line: 1, .. })
        ));
        assert!(matches!(
            parse_word_spans("x\t1\t2\tyes\n"),
            Err(UnitError::BadSpanRow { .. })
        ));
    }
}
