mod common;

use rand::Rng;
use supraseg::emissions::{EmissionError, EmissionFormat, EmissionMatrix};
use supraseg::units::fixtures;
use supraseg::units::{PinyinTable, UnitScheme};
use supraseg::vocab::{SchemeTag, Vocabulary, BLANK_ID, BLANK_TEXT};

#[test]
fn binary_round_trip_is_bit_exact_on_1000_matrices() {
    let mut rng = common::rng(11);
    for case in 0..1000 {
        let frames = rng.random_range(1..=64);
        let vocab = if case % 10 == 0 {
            rng.random_range(1..=2048)
        } else {
            rng.random_range(1..=96)
        };
        let values: Vec<f64> = (0..frames * vocab)
            .map(|_| {
                if rng.random_bool(0.05) {
                    f64::NEG_INFINITY
                } else {
                    rng.random_range(-60.0f32..5.0) as f64
                }
            })
            .collect();
        let m = EmissionMatrix::new(frames, vocab, values).unwrap();
        let bytes = m.write(EmissionFormat::Binary).unwrap();
        assert_eq!(bytes.len(), 13 + 4 * frames * vocab);
        let back = EmissionMatrix::read(&bytes).unwrap();
        assert_eq!(back.frames(), frames);
        assert_eq!(back.vocab_size(), vocab);
        let same = m
            .values()
            .iter()
            .zip(back.values())
            .all(|(a, b)| a.to_bits() == b.to_bits());
        assert!(same, "case {case}");
        assert_eq!(back.is_normalized(), m.is_normalized());
    }
}

#[test]
fn tsv_round_trip_keeps_nine_significant_digits() {
    let mut rng = common::rng(12);
    for _ in 0..200 {
        let (frames, vocab) = (rng.random_range(1..=20), rng.random_range(1..=40));
        let m = common::random_normalized(&mut rng, frames, vocab);
        let text = m.write(EmissionFormat::Tsv).unwrap();
        let back = EmissionMatrix::read(&text).unwrap();
        for (a, b) in m.values().iter().zip(back.values()) {
            assert!(a == b || ((a - b) / a).abs() < 1e-9);
        }
        assert_eq!(back.is_normalized(), m.is_normalized());
    }
}

#[test]
fn header_examples() {
    let mut bytes = b"SCE1\x01".to_vec();
    bytes.extend(2u32.to_le_bytes());
    bytes.extend(2u32.to_le_bytes());
    for v in [0.0f32, f32::NEG_INFINITY, f32::NEG_INFINITY, 0.0] {
        bytes.extend(v.to_le_bytes());
    }
    let m = EmissionMatrix::read(&bytes).unwrap();
    assert_eq!((m.frames(), m.vocab_size()), (2, 2));
    assert!(m.is_normalized());

    let mut short = b"SCE1\x00".to_vec();
    short.extend(3u32.to_le_bytes());
    short.extend(2u32.to_le_bytes());
    short.extend([0u8; 16]);
    assert!(matches!(
        EmissionMatrix::read(&short),
        Err(EmissionError::TruncatedPayload {
            expected: 24,
            found: 16
        })
    ));

    let tsv = EmissionMatrix::read(b"0.0\t-inf\n-inf\t0.0").unwrap();
    assert_eq!(tsv.row(0), [0.0, f64::NEG_INFINITY]);
    assert_eq!(tsv.row(1), [f64::NEG_INFINITY, 0.0]);
    assert!(tsv.is_normalized());

    let line = EmissionMatrix::new(1, 2, vec![-0.5, -0.916]).unwrap();
    assert_eq!(line.write(EmissionFormat::Tsv).unwrap(), b"-0.5\t-0.916\n");
    let empty = EmissionMatrix::new(0, 2, vec![]).unwrap();
    assert!(matches!(
        empty.write(EmissionFormat::Binary),
        Err(EmissionError::EmptyMatrix)
    ));
}

fn assert_bijective(v: &Vocabulary) {
    assert_eq!(v.text(BLANK_ID), Some(BLANK_TEXT));
    for tok in v.tokens() {
        assert_eq!(v.id(tok.text), Some(tok.id));
        assert_eq!(v.text(tok.id), Some(tok.text));
    }
}

#[test]
fn fixture_vocabularies_are_bijective_and_sized_by_line_count() {
    for (text, scheme) in [
        (fixtures::TONES, SchemeTag::Tone),
        (fixtures::TIMIT39, SchemeTag::Phoneme),
        (fixtures::PITCH_ACCENT, SchemeTag::PitchAccent),
        (fixtures::SYLLABLE, SchemeTag::SyllableMarker),
    ] {
        let v = Vocabulary::parse(text, scheme).unwrap();
        assert_eq!(v.len(), 1 + text.lines().count());
        assert_bijective(&v);
    }
    let table = PinyinTable::builtin();
    for scheme in UnitScheme::ALL {
        let v = scheme.vocabulary(table);
        assert_bijective(&v);
        let reparsed = Vocabulary::parse(&v.to_file_string(), scheme.tag()).unwrap();
        assert_eq!(reparsed.len(), 1 + v.to_file_string().lines().count());
        assert_eq!(reparsed, v);
    }
}

#[test]
fn vocabulary_examples() {
    let tones = Vocabulary::parse("T1\nT2\nT3\nT4\nT5", SchemeTag::Tone).unwrap();
    assert_eq!(tones.len(), 6);
    assert_eq!(tones.blank_id(), 0);
    assert_eq!(tones.id("T1"), Some(1));
    assert_eq!(tones.id("T5"), Some(5));
    assert!(Vocabulary::parse("", SchemeTag::Tone).is_err());
    let s = Vocabulary::parse("S", SchemeTag::SyllableMarker).unwrap();
    assert_eq!(s.unit_texts(), ["S"]);
    assert_eq!(s.len(), 2);
}
