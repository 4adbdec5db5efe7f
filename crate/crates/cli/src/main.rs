//! `dialkm`: batch workflows over dialog corpora, document bases and
//! prediction files. Results go to stdout as JSON; diagnostics and errors
//! go to stderr.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dialkm_core::corpus::Split;
use dialkm_core::unstructured::{DomainThresholds, TfIdfVariant};

use crate::config::{Config, Method};
use crate::output::{pretty, CliError};

#[derive(Parser, Debug)]
#[command(
    name = "dialkm",
    version,
    about = "Hybrid knowledge management and evaluation for task-oriented dialog"
)]
struct Cli {
    /// TOML config file
    #[arg(long, global = true, env = "DIALKM_CONFIG")]
    config: Option<PathBuf>,

    /// Reserved; recorded in the config echo
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Only log errors
    #[arg(long, short, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Dialog counts per split, average turns and slot counts
    Stats {
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Count slot types and values from this ontology instead of the gold states
        #[arg(long)]
        ontology: Option<PathBuf>,
    },
    /// Add the ruk triple and topic of the gold document to inserted turns
    ExtendLabels {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        docs: Option<PathBuf>,
        #[arg(long)]
        index: Option<PathBuf>,
        /// Where to write the extended corpus
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract topic words for every document and write the index
    BuildIndex {
        #[arg(long)]
        docs: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Restaurant, hotel, taxi and train thresholds, comma-separated
        #[arg(long)]
        thresholds: Option<DomainThresholds>,
        /// Stopword file, one word per line
        #[arg(long)]
        stopwords: Option<PathBuf>,
        #[arg(long)]
        tfidf: Option<TfIdfVariant>,
    },
    /// Rank documents for a belief state or a dialog context
    Retrieve {
        #[arg(long)]
        index: Option<PathBuf>,
        #[arg(long)]
        docs: Option<PathBuf>,
        /// Extended belief state in the flat format
        #[arg(long, default_value = "")]
        state: String,
        #[arg(long, value_enum)]
        method: Option<Method>,
        /// Dialog context for the tfidf and bm25 methods
        #[arg(long)]
        context: Option<String>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        k1: Option<f64>,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        entity_threshold: Option<f64>,
    },
    /// Query one domain of the database with a belief state
    QueryDb {
        #[arg(long)]
        db: Option<PathBuf>,
        #[arg(long)]
        ontology: Option<PathBuf>,
        #[arg(long)]
        canon_map: Option<PathBuf>,
        #[arg(long)]
        domain: String,
        #[arg(long, default_value = "")]
        state: String,
    },
    /// Score a prediction file against the gold corpus
    Evaluate {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        predictions: Option<PathBuf>,
        #[arg(long)]
        db: Option<PathBuf>,
        #[arg(long)]
        ontology: Option<PathBuf>,
        #[arg(long)]
        canon_map: Option<PathBuf>,
        /// Responses use [domain_slot] placeholders
        #[arg(long, conflicts_with = "lexical")]
        delex: bool,
        /// Responses are lexicalized; entities are found by DB name
        #[arg(long)]
        lexical: bool,
        /// Disable add-one smoothing of higher-order BLEU precisions
        #[arg(long)]
        no_bleu_smoothing: bool,
        /// Restrict to one split
        #[arg(long)]
        split: Option<Split>,
        /// Also write the report here
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Convert a DSTC9-style knowledge.json into the document schema
    ConvertDocs {
        #[arg(long)]
        knowledge: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn init_logging(quiet: bool) {
    let level = if quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();
}

fn load_config(cli: &Cli) -> Result<Config, CliError> {
    let mut config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if cli.seed.is_some() {
        config.seed = cli.seed;
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<serde_json::Value, CliError> {
    let mut config = load_config(&cli)?;
    match cli.command {
        Command::Stats { corpus, ontology } => commands::stats(&mut config, corpus, ontology),
        Command::ExtendLabels {
            corpus,
            docs,
            index,
            out,
        } => commands::extend_labels(&mut config, corpus, docs, index, &out),
        Command::BuildIndex {
            docs,
            out,
            thresholds,
            stopwords,
            tfidf,
        } => commands::build_index(&mut config, docs, &out, thresholds, stopwords, tfidf),
        Command::Retrieve {
            index,
            docs,
            state,
            method,
            context,
            k,
            k1,
            b,
            entity_threshold,
        } => {
            let r = &mut config.retrieval;
            if let Some(m) = method {
                r.method = m;
            }
            if let Some(k) = k {
                r.k = k;
            }
            if let Some(k1) = k1 {
                r.k1 = k1;
            }
            if let Some(b) = b {
                r.b = b;
            }
            if let Some(t) = entity_threshold {
                r.entity_threshold = t;
            }
            config.validate()?;
            commands::retrieve(&mut config, index, docs, &state, context.as_deref())
        }
        Command::QueryDb {
            db,
            ontology,
            canon_map,
            domain,
            state,
        } => commands::query_db(&mut config, db, ontology, canon_map, &domain, &state),
        Command::Evaluate {
            corpus,
            predictions,
            db,
            ontology,
            canon_map,
            delex,
            lexical,
            no_bleu_smoothing,
            split,
            report,
        } => {
            if delex {
                config.metrics.mode = dialkm_core::metrics::ResponseMode::Delex;
            }
            if lexical {
                config.metrics.mode = dialkm_core::metrics::ResponseMode::Lexical;
            }
            if no_bleu_smoothing {
                config.metrics.bleu_smoothing = false;
            }
            commands::evaluate(
                &mut config,
                commands::EvalInputs {
                    corpus,
                    predictions,
                    db,
                    ontology,
                    canon_map,
                },
                split,
                report.as_deref(),
            )
        }
        Command::ConvertDocs { knowledge, out } => {
            commands::convert_docs(&config, &knowledge, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::new("usage", e.render().to_string().trim_end());
            eprint!("{}", pretty(&err.to_json()));
            return ExitCode::from(2);
        }
    };
    init_logging(cli.quiet);
    match run(cli) {
        Ok(value) => {
            print!("{}", pretty(&value));
            ExitCode::SUCCESS
        }
        Err(err) => {
            log::debug!("{err}");
            eprint!("{}", pretty(&err.to_json()));
            ExitCode::FAILURE
        }
    }
}
