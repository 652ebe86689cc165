//! Command-line driver behind the `ecgforge` binary.
//!
//! Every command writes into a staging directory next to `--out` and renames
//! it into place on success, so a failed run never leaves partial output.
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

mod commands;
mod report;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::RunConfig;
use crate::data::SplitName;
use crate::gan::Mode;
use crate::{fsutil, Error, LeadId, Result};

#[derive(Debug, Parser)]
#[command(name = "ecgforge", version, about = "Reconstruct twelve-lead ECG beats from a single lead")]
pub struct Cli {
    /// Run configuration file (`key = value` lines); flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Print the effective configuration (defaults, then --config, then
    /// flags) and exit.
    #[arg(long, global = true)]
    pub dump_config: bool,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,

    /// Replace a non-empty output directory.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CliMode {
    Baseline,
    Advanced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CliSplit {
    Train,
    Val,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BeatFormat {
    /// `t_seconds,amplitude` text.
    Csv,
    /// Binary signal files.
    Ecgs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic raw twelve-lead corpus with ground-truth R peaks.
    SynthData {
        /// Number of patients [config: synth.patients, default 20].
        #[arg(long, value_parser = positive)]
        patients: Option<usize>,
        /// Corpus seed [config: synth.seed, default 7].
        #[arg(long)]
        seed: Option<u64>,
        /// White-noise standard deviation in mV [config: synth.noise_mv, default 0.02].
        #[arg(long)]
        noise_mv: Option<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Denoise, normalise, segment and pair a raw corpus, then split it.
    Preprocess {
        /// Raw corpus written by synth-data.
        #[arg(long = "in", value_name = "DIR")]
        input: PathBuf,
        /// Padded beat length [config: preprocess.target_len, default auto].
        #[arg(long)]
        target_len: Option<usize>,
        /// Split seed [config: split.seed, default 0].
        #[arg(long)]
        split_seed: Option<u64>,
        /// Keep every patient within one split [config: split.by_patient].
        #[arg(long)]
        split_by_patient: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Train generator/discriminator pairs with per-epoch checkpoints.
    Train {
        /// Segment corpus written by preprocess.
        #[arg(long, value_name = "DIR")]
        corpus: PathBuf,
        /// baseline: one generator; advanced: one per target lead [config: train.mode, default advanced].
        #[arg(long, value_enum)]
        mode: Option<CliMode>,
        /// Epochs [config: train.epochs, default 9 baseline / 10 advanced].
        #[arg(long, value_parser = positive)]
        epochs: Option<usize>,
        /// Batch size [config: train.batch_size, default 256 baseline / 128 advanced].
        #[arg(long, value_parser = positive)]
        batch_size: Option<usize>,
        /// Adam learning rate [config: train.learning_rate, default 0.0001].
        #[arg(long)]
        lr: Option<f64>,
        /// Initialisation and batch-order seed [config: train.seed, default 0].
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Generate all twelve leads from one beat of one lead.
    Generate {
        /// Directory written by train.
        #[arg(long, value_name = "DIR")]
        model: PathBuf,
        /// One beat as a signal file (.ecgs binary or t_seconds,amplitude CSV).
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        /// Lead the input beat was recorded on.
        #[arg(long)]
        source_lead: LeadId,
        /// Output file format.
        #[arg(long, value_enum, default_value_t = BeatFormat::Csv)]
        format: BeatFormat,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Score epoch-selected generators on a corpus split.
    Evaluate {
        /// Directory written by train.
        #[arg(long, value_name = "DIR")]
        model: PathBuf,
        /// Segment corpus written by preprocess.
        #[arg(long, value_name = "DIR")]
        corpus: PathBuf,
        /// Split to score.
        #[arg(long, value_enum, default_value_t = CliSplit::Test)]
        split: CliSplit,
        /// Beats expanded into full twelve-lead sets under generated/.
        #[arg(long, default_value_t = 10)]
        sets: usize,
        /// Source lead of those sets [default: preprocess.reference_lead].
        #[arg(long)]
        source_lead: Option<LeadId>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Pearson correlation matrix between leads.
    Correlate {
        /// Segment corpus written by preprocess.
        #[arg(long, value_name = "DIR", conflicts_with = "generated", required_unless_present = "generated")]
        corpus: Option<PathBuf>,
        /// Directory of generated lead files (output of generate or evaluate).
        #[arg(long, value_name = "DIR")]
        generated: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Collect figures and tables from training, evaluation and correlation runs.
    Report {
        /// Run directory, or a directory of run directories.
        #[arg(long, value_name = "DIR")]
        runs: PathBuf,
        #[command(flatten)]
        out: OutArgs,
    },
}

fn positive(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(n) => Ok(n),
        Err(_) => Err(format!("{s:?} is not a positive integer")),
    }
}

impl From<CliSplit> for SplitName {
    fn from(s: CliSplit) -> Self {
        match s {
            CliSplit::Train => SplitName::Train,
            CliSplit::Val => SplitName::Val,
            CliSplit::Test => SplitName::Test,
        }
    }
}

/// Errors caused by the invocation rather than by the data.
pub fn is_usage_error(e: &Error) -> bool {
    matches!(
        e,
        Error::InvalidArgument(_) | Error::MissingModel(_) | Error::OutputExists(_) | Error::Config(_)
    )
}

fn exit_code(e: &Error) -> u8 {
    if is_usage_error(e) {
        2
    } else {
        1
    }
}

/// Applies flag overrides to `cfg`.
fn apply_flags(cfg: &mut RunConfig, cmd: &Command) {
    match cmd {
        Command::SynthData { patients, seed, noise_mv, .. } => {
            if let Some(p) = patients {
                cfg.synth.patients = *p;
            }
            if let Some(s) = seed {
                cfg.synth.seed = *s;
            }
            if let Some(n) = noise_mv {
                cfg.synth.noise_amplitude = *n;
            }
        }
        Command::Preprocess { target_len, split_seed, split_by_patient, .. } => {
            if target_len.is_some() {
                cfg.pipeline.target_len = *target_len;
            }
            if let Some(s) = split_seed {
                cfg.split_seed = *s;
            }
            if *split_by_patient {
                cfg.split_by_patient = true;
            }
        }
        Command::Train { mode, epochs, batch_size, lr, seed, .. } => {
            if let Some(m) = mode {
                cfg.mode = match m {
                    CliMode::Baseline => Mode::Baseline,
                    CliMode::Advanced => Mode::Advanced,
                };
            }
            if let Some(e) = epochs {
                cfg.epochs = Some(*e);
            }
            if let Some(b) = batch_size {
                cfg.batch_size = Some(*b);
            }
            if let Some(l) = lr {
                cfg.adam.lr = *l;
            }
            if let Some(s) = seed {
                cfg.train_seed = *s;
            }
        }
        Command::Evaluate { source_lead: Some(l), .. } => cfg.pipeline.reference_lead = *l,
        _ => {}
    }
}

fn out_args(cmd: &Command) -> &OutArgs {
    match cmd {
        Command::SynthData { out, .. }
        | Command::Preprocess { out, .. }
        | Command::Train { out, .. }
        | Command::Generate { out, .. }
        | Command::Evaluate { out, .. }
        | Command::Correlate { out, .. }
        | Command::Report { out, .. } => out,
    }
}

pub(crate) fn require_dir(path: &Path, what: &str) -> Result<()> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{what} directory {} does not exist", path.display())))
    }
}

fn run_command(cfg: &RunConfig, cmd: &Command) -> Result<()> {
    let out = out_args(cmd);
    if fsutil::is_nonempty_dir(&out.out) && !out.force {
        return Err(Error::OutputExists(out.out.clone()));
    }
    if out.out.exists() && !out.out.is_dir() {
        return Err(Error::InvalidArgument(format!("{} exists and is not a directory", out.out.display())));
    }
    // Validate inputs before creating anything.
    match cmd {
        Command::Preprocess { input, .. } => require_dir(input, "input")?,
        Command::Train { corpus, .. } => require_dir(corpus, "corpus")?,
        Command::Generate { model, input, .. } => {
            commands::check_model(model)?;
            if !input.is_file() {
                return Err(Error::InvalidArgument(format!("input file {} does not exist", input.display())));
            }
        }
        Command::Evaluate { model, corpus, .. } => {
            commands::check_model(model)?;
            require_dir(corpus, "corpus")?;
        }
        Command::Correlate { corpus, generated, .. } => {
            if let Some(c) = corpus {
                require_dir(c, "corpus")?;
            }
            if let Some(g) = generated {
                require_dir(g, "generated")?;
            }
        }
        Command::Report { runs, .. } => require_dir(runs, "runs")?,
        Command::SynthData { .. } => {}
    }
    let staging = fsutil::staging_dir(&out.out)?;
    let result = (|| {
        match cmd {
            Command::SynthData { .. } => commands::synth_data(cfg, &staging)?,
            Command::Preprocess { input, .. } => commands::preprocess(cfg, input, &staging)?,
            Command::Train { corpus, .. } => commands::train(cfg, corpus, &staging)?,
            Command::Generate { model, input, source_lead, format, .. } => {
                commands::generate(model, input, *source_lead, *format, &staging)?
            }
            Command::Evaluate { model, corpus, split, sets, .. } => {
                commands::evaluate(cfg, model, corpus, (*split).into(), *sets, &staging)?
            }
            Command::Correlate { corpus, generated, .. } => {
                commands::correlate(corpus.as_deref(), generated.as_deref(), &staging)?
            }
            Command::Report { runs, .. } => report::report(runs, &staging)?,
        }
        fsutil::atomic_write(&staging.join("run.cfg"), cfg.dump().as_bytes())
    })();
    match result {
        Ok(()) => fsutil::commit_dir(&staging, &out.out),
        Err(e) => {
            let _ = std::fs::remove_dir_all(&staging);
            Err(e)
        }
    }
}

fn effective_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => {
            if !p.is_file() {
                return Err(Error::InvalidArgument(format!("config file {} does not exist", p.display())));
            }
            RunConfig::load(p).map_err(|e| Error::Config(e.to_string()))?
        }
        None => RunConfig::default(),
    };
    if let Some(cmd) = &cli.command {
        apply_flags(&mut cfg, cmd);
    }
    cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
    Ok(cfg)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = effective_config(&cli).and_then(|cfg| {
        if cli.dump_config {
            print!("{}", cfg.dump());
            return Ok(());
        }
        match &cli.command {
            Some(cmd) => run_command(&cfg, cmd),
            None => Err(Error::InvalidArgument("no command given (see --help)".into())),
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
