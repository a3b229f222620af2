//! Command-line front end: `preprocess`, `augment`, `train`, `predict`,
//! `evaluate` and `inspect`.

mod commands;
mod config;
mod output;
mod predictions;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, ErrorCategory};

pub use commands::{checkpoint_metadata, execute, Command as CommandKind};
pub use config::{ModelChoice, Paths, RunConfig, Settings, KEYS};
pub use output::Outputs;
pub use predictions::{parse_predictions, prediction_header, write_predictions, Prediction};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

pub fn exit_code(err: &Error) -> i32 {
    match err.category() {
        ErrorCategory::Config => EXIT_CONFIG,
        ErrorCategory::Data => EXIT_DATA,
        ErrorCategory::Numeric => EXIT_NUMERIC,
        ErrorCategory::Io => EXIT_OTHER,
    }
}

const AFTER_HELP: &str = "\
Settings come from the --config file, then command flags, then --set KEY=VALUE
overrides. Keys are `section.key`, e.g. train.epochs or clean.urls.

Defaults: epochs 20, batch size 128, learning rate 0.01 (AMSGrad), L2 0.01 on
kernels, ensemble weights 0.6 (keis_bigru) / 0.4 (keis_cnn), max length 60,
patience 3 with lr x0.5 on plateau. bert_bi_head defaults to Adam, lr 2e-5,
batch size 16.

Exit status: 0 success, 2 configuration error, 3 data error, 4 numeric
failure, 1 anything else.";

#[derive(Debug, Parser)]
#[command(name = "tweetnet", version, about = "Offensive-tweet classification pipeline", after_help = AFTER_HELP)]
pub struct Cli {
    /// Configuration file of `key = value` lines under `[section]` headers.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Override one setting; repeatable.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    pub set: Vec<String>,

    /// Random seed for splits, initialisation and training.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Clean a TSV corpus.
    ///
    /// Example: tweetnet preprocess --input raw.tsv --output clean.tsv --language english
    Preprocess(PreprocessArgs),
    /// Add synonym-substituted copies of a labeled corpus.
    ///
    /// Example: tweetnet augment --train train.tsv --embeddings vec.txt --output aug.tsv --synonyms syn.tsv
    Augment(AugmentArgs),
    /// Train a model or the two-member ensemble and write a checkpoint.
    ///
    /// Example: tweetnet train --train train.tsv --embeddings vec.txt --model ensemble --checkpoint m.ckpt
    Train(TrainArgs),
    /// Label a TSV corpus with a trained checkpoint.
    ///
    /// Example: tweetnet predict --checkpoint m.ckpt --input test.tsv --output preds.tsv
    Predict(PredictArgs),
    /// Score a prediction file against gold labels.
    ///
    /// Example: tweetnet evaluate --predictions preds.tsv --gold test.tsv --report report
    Evaluate(EvaluateArgs),
    /// Print the architecture, spec digest and metadata of a checkpoint.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Subtask: A (NOT/OFF), B (UNT/TIN) or C (IND/GRP/OTH). Default A.
    #[arg(long)]
    pub task: Option<String>,
    /// arabic, english, danish, greek or turkish. Default english.
    #[arg(long)]
    pub language: Option<String>,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, value_name = "TSV")]
    pub input: Option<PathBuf>,
    #[arg(long, value_name = "TSV")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, value_name = "TSV")]
    pub train: Option<PathBuf>,
    /// Word vectors in word2vec text format.
    #[arg(long, value_name = "FILE")]
    pub embeddings: Option<PathBuf>,
    /// Expanded corpus: cleaned originals followed by synthetic copies.
    #[arg(long, value_name = "TSV")]
    pub output: Option<PathBuf>,
    /// Exported synonym table.
    #[arg(long, value_name = "TSV")]
    pub synonyms: Option<PathBuf>,
    /// Most frequent words considered. Default 1000.
    #[arg(long)]
    pub top_n: Option<usize>,
    /// Minimum cosine similarity of a synonym. Default 0.7.
    #[arg(long)]
    pub min_cos: Option<f64>,
    /// replace_all or max:K. Default replace_all.
    #[arg(long)]
    pub policy: Option<String>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, value_name = "TSV")]
    pub train: Option<PathBuf>,
    /// Validation corpus; without it a stratified share of --train is held out.
    #[arg(long, value_name = "TSV")]
    pub val: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub embeddings: Option<PathBuf>,
    /// Precomputed contextual vectors (bert_bi_head only).
    #[arg(long, value_name = "FILE")]
    pub contextual: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub checkpoint: Option<PathBuf>,
    /// Per-epoch loss and macro-F1 CSV.
    #[arg(long, value_name = "CSV")]
    pub history: Option<PathBuf>,
    /// keis_bigru, keis_cnn, ensemble or bert_bi_head. Default keis_bigru.
    #[arg(long)]
    pub model: Option<String>,
    /// Default 20.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Default 128 (16 for bert_bi_head).
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Default 0.01 (2e-5 for bert_bi_head).
    #[arg(long)]
    pub lr: Option<f64>,
    /// Default 3.
    #[arg(long)]
    pub patience: Option<usize>,
    /// Tokens per input. Default 60.
    #[arg(long)]
    pub max_len: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long, value_name = "FILE")]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, value_name = "TSV")]
    pub input: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub contextual: Option<PathBuf>,
    #[arg(long, value_name = "TSV")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Default A.
    #[arg(long)]
    pub task: Option<String>,
    #[arg(long, value_name = "TSV")]
    pub predictions: Option<PathBuf>,
    #[arg(long, value_name = "TSV")]
    pub gold: Option<PathBuf>,
    /// Report path stem; `.json` and `.txt` are appended.
    #[arg(long, value_name = "STEM")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long, value_name = "FILE")]
    pub checkpoint: Option<PathBuf>,
}

struct Flags<'a>(&'a mut Settings);

impl Flags<'_> {
    fn put<T: ToString>(&mut self, key: &str, flag: &str, value: &Option<T>) {
        if let Some(v) = value {
            self.0.set(key, v.to_string(), format!("--{flag}"));
        }
    }

    fn path(&mut self, key: &str, flag: &str, value: &Option<PathBuf>) {
        self.put(key, flag, &value.as_ref().map(|p| p.display().to_string()));
    }

    fn corpus(&mut self, c: &CorpusArgs) {
        self.put("data.task", "task", &c.task);
        self.put("data.language", "language", &c.language);
    }
}

impl Cli {
    /// Merges the config file, the flags and the `--set` overrides, in
    /// increasing precedence.
    pub fn settings(&self) -> crate::Result<Settings> {
        let mut s = match &self.config {
            Some(p) => Settings::load(p)?,
            None => Settings::default(),
        };
        let mut f = Flags(&mut s);
        f.put("train.seed", "seed", &self.seed);
        match &self.command {
            Cmd::Preprocess(a) => {
                f.corpus(&a.corpus);
                f.path("paths.input", "input", &a.input);
                f.path("paths.output", "output", &a.output);
            }
            Cmd::Augment(a) => {
                f.corpus(&a.corpus);
                f.path("paths.train", "train", &a.train);
                f.path("paths.embeddings", "embeddings", &a.embeddings);
                f.path("paths.output", "output", &a.output);
                f.path("paths.synonyms", "synonyms", &a.synonyms);
                f.put("augment.top_n", "top-n", &a.top_n);
                f.put("augment.min_cos", "min-cos", &a.min_cos);
                f.put("augment.policy", "policy", &a.policy);
            }
            Cmd::Train(a) => {
                f.corpus(&a.corpus);
                f.path("paths.train", "train", &a.train);
                f.path("paths.val", "val", &a.val);
                f.path("paths.embeddings", "embeddings", &a.embeddings);
                f.path("paths.contextual", "contextual", &a.contextual);
                f.path("paths.checkpoint", "checkpoint", &a.checkpoint);
                f.path("paths.history", "history", &a.history);
                f.put("model.architecture", "model", &a.model);
                f.put("train.epochs", "epochs", &a.epochs);
                f.put("train.batch_size", "batch-size", &a.batch_size);
                f.put("train.lr", "lr", &a.lr);
                f.put("train.patience", "patience", &a.patience);
                f.put("data.max_len", "max-len", &a.max_len);
            }
            Cmd::Predict(a) => {
                f.path("paths.checkpoint", "checkpoint", &a.checkpoint);
                f.path("paths.input", "input", &a.input);
                f.path("paths.contextual", "contextual", &a.contextual);
                f.path("paths.output", "output", &a.output);
            }
            Cmd::Evaluate(a) => {
                f.put("data.task", "task", &a.task);
                f.path("paths.predictions", "predictions", &a.predictions);
                f.path("paths.gold", "gold", &a.gold);
                f.path("paths.report", "report", &a.report);
            }
            Cmd::Inspect(a) => f.path("paths.checkpoint", "checkpoint", &a.checkpoint),
        }
        for a in &self.set {
            s.set_assignment(a)?;
        }
        Ok(s)
    }

    pub fn kind(&self) -> CommandKind {
        match self.command {
            Cmd::Preprocess(_) => CommandKind::Preprocess,
            Cmd::Augment(_) => CommandKind::Augment,
            Cmd::Train(_) => CommandKind::Train,
            Cmd::Predict(_) => CommandKind::Predict,
            Cmd::Evaluate(_) => CommandKind::Evaluate,
            Cmd::Inspect(_) => CommandKind::Inspect,
        }
    }
}

/// Parses `args` (program name first), runs the command, prints any error
/// to stderr and returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = cli
        .settings()
        .and_then(|s| RunConfig::from_settings(&s))
        .and_then(|cfg| execute(cli.kind(), &cfg));
    match result {
        Ok(report) => {
            print!("{report}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
