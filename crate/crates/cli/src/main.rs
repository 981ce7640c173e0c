//! `supraseg` command-line tool.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use supraseg::synth::experiment::ExperimentError;

#[derive(Parser)]
#[command(
    name = "supraseg",
    version,
    about = "CTC decoding and evaluation over suprasegmental units"
)]
struct Cli {
    /// Output style for results on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Records,
}

#[derive(Subcommand)]
enum Command {
    /// Decode emission matrices into unit sequences.
    Decode(DecodeArgs),
    /// CTC log-likelihood (and gradient) of a target.
    Loss(LossArgs),
    /// Train a Kneser-Ney n-gram model and write it as ARPA.
    LmTrain(LmTrainArgs),
    /// Score a token sequence with an ARPA model.
    LmScore(LmScoreArgs),
    /// Unit conversions and vocabulary tools.
    #[command(subcommand)]
    Units(UnitsCommand),
    /// Compare hypothesis lines against reference lines.
    Eval(EvalArgs),
    /// Write a synthetic emission matrix for a target.
    Synth(SynthArgs),
    /// Run a seeded synthetic experiment described by a TOML file.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
pub struct DecodeArgs {
    /// SCE or TSV emission files, decoded in the given order.
    #[arg(long, required = true, num_args = 1..)]
    pub emissions: Vec<PathBuf>,
    #[arg(long)]
    pub vocab: PathBuf,
    /// Drop fairseq special tokens from the vocabulary file.
    #[arg(long)]
    pub strip_fairseq_specials: bool,
    #[arg(long, default_value_t = 32)]
    pub beam: usize,
    /// ARPA model for shallow fusion.
    #[arg(long)]
    pub lm: Option<PathBuf>,
    #[arg(long, default_value_t = 1.2)]
    pub lm_weight: f64,
    #[arg(long, default_value_t = 0.5)]
    pub token_bonus: f64,
    /// Natural-log floor below which new tokens are not tried.
    #[arg(long, default_value_t = -9.21, allow_hyphen_values = true)]
    pub prune_floor: f64,
    /// Score the end-of-sentence symbol on finished hypotheses.
    #[arg(long)]
    pub lm_eos: bool,
    /// Best-path decoding instead of beam search.
    #[arg(long, conflicts_with = "lm")]
    pub greedy: bool,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Args)]
pub struct LossArgs {
    #[arg(long)]
    pub emissions: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    /// Space-separated target tokens.
    #[arg(long)]
    pub target: String,
    #[arg(long)]
    pub grad: bool,
}

#[derive(Args)]
pub struct LmTrainArgs {
    #[arg(long)]
    pub order: usize,
    /// One sentence of space-separated tokens per line.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct LmScoreArgs {
    #[arg(long)]
    pub arpa: PathBuf,
    #[arg(long)]
    pub text: String,
    /// Do not condition on the sentence-start symbol.
    #[arg(long)]
    pub no_bos: bool,
    /// Do not score the end-of-sentence symbol.
    #[arg(long)]
    pub no_eos: bool,
}

#[derive(Subcommand)]
pub enum UnitsCommand {
    /// Render tonal pinyin lines in a unit scheme.
    Convert(SchemeArgs),
    /// Project unit lines of a scheme onto tone tokens.
    Project(SchemeArgs),
    /// Map TIMIT phone lines to syllable markers.
    TimitSyllables(TimitArgs),
    /// Merge two vocabulary files.
    MergeVocab(MergeArgs),
}

#[derive(Args)]
pub struct SchemeArgs {
    /// tone, if_tone or syl_tone.
    #[arg(long)]
    pub scheme: String,
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Syllable decomposition table (syllable, initial, final per TSV row).
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Args)]
pub struct TimitArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// File listing vowel phones, one per line.
    #[arg(long)]
    pub vowel_set: Option<PathBuf>,
}

#[derive(Args)]
pub struct MergeArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Keep one copy of tokens present in both instead of failing.
    #[arg(long)]
    pub allow_shared: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Ter,
    Sr,
    Corr,
    Accent,
}

#[derive(Args)]
pub struct EvalArgs {
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long)]
    pub hyp: PathBuf,
    #[arg(long, value_enum)]
    pub metric: Metric,
}

#[derive(Args)]
pub struct SynthArgs {
    /// Space-separated target tokens of one utterance.
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// `a:b:mix`, repeatable.
    #[arg(long)]
    pub confuse: Vec<String>,
    #[arg(long, default_value_t = 0.0)]
    pub mix_jitter: f64,
    #[arg(long, default_value_t = 4)]
    pub frames_per_token: usize,
    #[arg(long, default_value_t = 2)]
    pub blank_gap: usize,
    /// Output path; a `.tsv` extension writes text, anything else SCE.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_INVARIANT: u8 = 3;

fn exit_code(err: &anyhow::Error) -> u8 {
    let invariant = err.chain().any(|e| {
        matches!(
            e.downcast_ref::<ExperimentError>(),
            Some(ExperimentError::Invariant { .. })
        )
    });
    if invariant {
        EXIT_INVARIANT
    } else {
        EXIT_DATA
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let f = cli.format;
    let result = match cli.command {
        Command::Decode(a) => commands::decode(&a, f),
        Command::Loss(a) => commands::loss(&a, f),
        Command::LmTrain(a) => commands::lm_train(&a, f),
        Command::LmScore(a) => commands::lm_score(&a, f),
        Command::Units(UnitsCommand::Convert(a)) => commands::units_convert(&a, f),
        Command::Units(UnitsCommand::Project(a)) => commands::units_project(&a, f),
        Command::Units(UnitsCommand::TimitSyllables(a)) => commands::timit_syllables(&a, f),
        Command::Units(UnitsCommand::MergeVocab(a)) => commands::merge_vocab(&a, f),
        Command::Eval(a) => commands::eval(&a, f),
        Command::Synth(a) => commands::synth(&a, f),
        Command::Experiment(a) => commands::experiment(&a, f),
    };
    match result.and_then(|out| io::emit(&out)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
