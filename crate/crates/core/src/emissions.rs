//! Per-frame log-probability matrices and their on-disk formats.
//!
//! Two encodings are supported:
//!
//! * **SCE binary**: `"SCE1"` magic, a flags byte (bit 0 = normalized), `T` and `V` as
//!   little-endian `u32`, then `T·V` little-endian `f32` values in row-major order.
//! * **TSV**: one frame per line, `V` tab-separated decimal values, `-inf` allowed.
//!
//! Values are held as `f64` in memory. The binary format stores `f32`, so a binary
//! round trip is bit-exact for every matrix whose values are representable as `f32`
//! (which includes everything read from an SCE file).

use std::fmt::Write as _;

use thiserror::Error;

use crate::logmath::logsumexp;
use crate::vocab::TokenId;

pub const SCE_MAGIC: &[u8; 4] = b"SCE1";
const SCE_HEADER_LEN: usize = 4 + 1 + 4 + 4;
const FLAG_NORMALIZED: u8 = 1;

/// Row log-sum-exp tolerance for the `normalized` flag.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmissionError {
    #[error("bad magic: expected \"SCE1\"")]
    BadMagic,
    #[error("unsupported SCE version byte {0:#04x}")]
    UnsupportedVersion(u8),
    #[error("header truncated: {0} bytes")]
    TruncatedHeader(usize),
    #[error("payload truncated: header declares {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("payload has {extra} trailing bytes after the declared matrix")]
    TrailingBytes { extra: usize },
    #[error("NaN at frame {frame}, column {column}")]
    NanValue { frame: usize, column: usize },
    #[error("+inf at frame {frame}, column {column}")]
    PositiveInfinity { frame: usize, column: usize },
    #[error("line {line}: cannot parse {text:?} as a number")]
    BadNumber { line: usize, text: String },
    #[error("line {line}: expected {expected} columns, found {found}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("matrix has no frames")]
    EmptyMatrix,
    #[error("matrix has no columns")]
    NoColumns,
    #[error("value buffer has {found} entries, expected {frames}x{vocab_size}")]
    ShapeMismatch {
        frames: usize,
        vocab_size: usize,
        found: usize,
    },
    #[error("emissions are not valid UTF-8 text and do not start with SCE magic")]
    NotText,
}

/// Serialization format for [`EmissionMatrix::write`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmissionFormat {
    Binary,
    Tsv,
}

/// `T × V` grid of natural-log scores, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionMatrix {
    frames: usize,
    vocab_size: usize,
    values: Vec<f64>,
    normalized: bool,
}

impl EmissionMatrix {
    /// Builds a matrix, rejecting NaN and `+inf`. The `normalized` flag is computed.
    pub fn new(frames: usize, vocab_size: usize, values: Vec<f64>) -> Result<Self, EmissionError> {
        if values.len() != frames * vocab_size {
            return Err(EmissionError::ShapeMismatch {
                frames,
                vocab_size,
                found: values.len(),
            });
        }
        if frames > 0 && vocab_size == 0 {
            return Err(EmissionError::NoColumns);
        }
        for (i, &v) in values.iter().enumerate() {
            let (frame, column) = (i / vocab_size, i % vocab_size);
            if v.is_nan() {
                return Err(EmissionError::NanValue { frame, column });
            }
            if v == f64::INFINITY {
                return Err(EmissionError::PositiveInfinity { frame, column });
            }
        }
        let normalized = frames > 0
            && values
                .chunks(vocab_size)
                .all(|row| logsumexp(row).abs() <= NORMALIZATION_TOLERANCE);
        Ok(EmissionMatrix {
            frames,
            vocab_size,
            values,
            normalized,
        })
    }

    /// Builds a matrix from rows of probabilities (not logs).
    pub fn from_probabilities(rows: &[Vec<f64>]) -> Result<Self, EmissionError> {
        let vocab_size = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * vocab_size);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != vocab_size {
                return Err(EmissionError::RaggedRow {
                    line: i + 1,
                    expected: vocab_size,
                    found: row.len(),
                });
            }
            values.extend(row.iter().map(|p| p.ln()));
        }
        Self::new(rows.len(), vocab_size, values)
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, frame: usize) -> &[f64] {
        &self.values[frame * self.vocab_size..(frame + 1) * self.vocab_size]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.vocab_size.max(1))
    }

    #[inline]
    pub fn get(&self, frame: usize, token: TokenId) -> f64 {
        self.values[frame * self.vocab_size + token]
    }

    /// Parses SCE binary or TSV, detected by the leading magic bytes.
    pub fn read(bytes: &[u8]) -> Result<Self, EmissionError> {
        if bytes.starts_with(b"SCE") {
            return Self::read_binary(bytes);
        }
        match std::str::from_utf8(bytes) {
            Ok(text) => Self::read_tsv(text),
            Err(_) => Err(EmissionError::NotText),
        }
    }

    pub fn read_binary(bytes: &[u8]) -> Result<Self, EmissionError> {
        if bytes.len() < 4 || &bytes[..3] != b"SCE" {
            return Err(EmissionError::BadMagic);
        }
        if bytes[3] != SCE_MAGIC[3] {
            return Err(EmissionError::UnsupportedVersion(bytes[3]));
        }
        if bytes.len() < SCE_HEADER_LEN {
            return Err(EmissionError::TruncatedHeader(bytes.len()));
        }
        // the flags byte is advisory; normalization is recomputed from the values
        let _flags = bytes[4];
        let frames = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
        let vocab_size = u32::from_le_bytes(bytes[9..13].try_into().unwrap()) as usize;
        let payload = &bytes[SCE_HEADER_LEN..];
        let expected = frames
            .checked_mul(vocab_size)
            .and_then(|n| n.checked_mul(4))
            .ok_or(EmissionError::TruncatedPayload {
                expected: usize::MAX,
                found: payload.len(),
            })?;
        if payload.len() < expected {
            return Err(EmissionError::TruncatedPayload {
                expected,
                found: payload.len(),
            });
        }
        if payload.len() > expected {
            return Err(EmissionError::TrailingBytes {
                extra: payload.len() - expected,
            });
        }
        let values = payload
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
            .collect();
        Self::new(frames, vocab_size, values)
    }

    pub fn read_tsv(text: &str) -> Result<Self, EmissionError> {
        let mut values = Vec::new();
        let mut vocab_size = None;
        let mut frames = 0;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let mut count = 0;
            for field in line.split('\t') {
                let field = field.trim();
                let v: f64 = field.parse().map_err(|_| EmissionError::BadNumber {
                    line: i + 1,
                    text: field.to_string(),
                })?;
                if v.is_nan() {
                    return Err(EmissionError::NanValue {
                        frame: frames,
                        column: count,
                    });
                }
                values.push(v);
                count += 1;
            }
            match vocab_size {
                None => vocab_size = Some(count),
                Some(expected) if expected != count => {
                    return Err(EmissionError::RaggedRow {
                        line: i + 1,
                        expected,
                        found: count,
                    })
                }
                Some(_) => {}
            }
            frames += 1;
        }
        let vocab_size = vocab_size.ok_or(EmissionError::EmptyMatrix)?;
        Self::new(frames, vocab_size, values)
    }

    /// Serializes the matrix. Zero-frame matrices are rejected.
    pub fn write(&self, format: EmissionFormat) -> Result<Vec<u8>, EmissionError> {
        if self.frames == 0 {
            return Err(EmissionError::EmptyMatrix);
        }
        Ok(match format {
            EmissionFormat::Binary => self.to_binary(),
            EmissionFormat::Tsv => self.to_tsv().into_bytes(),
        })
    }

    fn to_binary(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(SCE_HEADER_LEN + 4 * self.values.len());
        out.extend_from_slice(SCE_MAGIC);
        out.push(if self.normalized { FLAG_NORMALIZED } else { 0 });
        out.extend_from_slice(&(self.frames as u32).to_le_bytes());
        out.extend_from_slice(&(self.vocab_size as u32).to_le_bytes());
        for &v in &self.values {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
        out
    }

    fn to_tsv(&self) -> String {
        let mut out = String::new();
        for row in self.rows() {
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    out.push('\t');
                }
                // shortest representation that parses back to the same f64
                write!(out, "{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}
