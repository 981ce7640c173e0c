//! CTC decoding and evaluation toolkit for suprasegmental recognition units:
//! syllables, tones and pitch accents.

pub mod beam;
pub mod ctc;
pub mod emissions;
pub mod lm;
pub mod logmath;
pub mod metrics;
pub mod synth;
pub mod units;
pub mod vocab;

pub use beam::{beam_decode, decode_batch, BeamDecoder, BeamParams, DecodeError, Hypothesis};
pub use ctc::{collapse, ctc_loss, greedy_decode, CtcError, CtcResult, GreedyOutput};
pub use emissions::{EmissionError, EmissionFormat, EmissionMatrix};
pub use lm::{train_ngram, LmError, LmState, NGramModel};
pub use metrics::{align_edit, EditCounts, EvalReport, MetricError};
pub use synth::{synth_emissions, SynthError, SynthParams};
pub use units::{UnitError, UnitScheme};
pub use vocab::{LabelSequence, SchemeTag, TokenId, VocabError, Vocabulary, BLANK_ID};
