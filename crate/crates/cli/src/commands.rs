use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use inkgram::corpus::{load_corpus, save_corpus};
use inkgram::eval::{evaluate, Scenario};
use inkgram::grammar::Grammar;
use inkgram::inkio::{load_ink, InkFormat};
use inkgram::model::Model;
use inkgram::recognize::Pipeline;
use inkgram::scoring::input::ScoringMode;
use inkgram::synth::{synth_corpus, GlyphSet, SynthConfig};
use inkgram::train::{train, TrainConfig};
use serde::de::DeserializeOwned;

#[derive(Parser)]
#[command(name = "inkgram", version, about = "Handwritten math recognition")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Train a model bundle from an annotated corpus directory.
    Train(TrainArgs),
    /// Generate a synthetic annotated corpus.
    SynthCorpus(SynthArgs),
    /// Recognize one ink file.
    Recognize(RecognizeArgs),
    /// Score a model on an annotated corpus.
    Evaluate(EvaluateArgs),
    /// Serve the session API.
    Serve(ServeArgs),
}

#[derive(Args)]
pub struct GrammarArg {
    /// Grammar file, or one of the builtin names `toy` and `crohme-like`.
    #[arg(long, default_value = "crohme-like")]
    pub grammar: String,
}

impl GrammarArg {
    fn load(&self) -> Result<Grammar> {
        Ok(match self.grammar.as_str() {
            "toy" => Grammar::toy(),
            "crohme-like" => Grammar::crohme_like(),
            path => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
                Grammar::parse(&text)?
            }
        })
    }
}

#[derive(Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Output bundle directory.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub grammar: GrammarArg,
    /// JSON training config; missing fields take defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub grammar: GrammarArg,
    /// JSON synthesis config; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args)]
pub struct RecognizeArgs {
    /// Native JSON or InkML file.
    pub ink: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub top: usize,
    /// Print the parse forest before the results.
    #[arg(long)]
    pub dump_forest: bool,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value = "default")]
    pub scenario: Scenario,
    /// Alternate-list depth for correction counting; defaults to the model's.
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Print the full per-item report as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Args)]
pub struct ServeArgs {
    /// Model bundle directory; repeat as NAME=DIR to serve several.
    #[arg(long, required = true)]
    pub model: Vec<String>,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: String,
    /// Directory served at `/` (the UI bundle).
    #[arg(long = "static")]
    pub static_dir: Option<PathBuf>,
}

fn read_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

pub fn run_train(a: &TrainArgs) -> Result<String> {
    let cfg: TrainConfig = read_config(a.config.as_deref())?;
    let corpus = load_corpus(&a.corpus)?;
    let (model, log) = train(&a.grammar.load()?, &corpus, &cfg)?;
    model.save(&a.out)?;
    Ok(format!(
        "trained on {} items: {} symbols, {} relation samples, probe accuracy {:.2}%\nwrote {}\n",
        corpus.len(),
        log.symbol_counts.len(),
        log.relation_samples.len(),
        100.0 * log.probe_accuracy,
        a.out.display()
    ))
}

pub fn run_synth(a: &SynthArgs) -> Result<String> {
    let mut cfg: SynthConfig = read_config(a.config.as_deref())?;
    if let Some(c) = a.count {
        cfg.count = c;
    }
    if let Some(n) = a.noise {
        cfg.noise = n;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let items = synth_corpus(&a.grammar.load()?, &GlyphSet::builtin(), &cfg)?;
    save_corpus(&a.out, &items)?;
    Ok(format!("wrote {} items to {}\n", items.len(), a.out.display()))
}

pub fn run_recognize(a: &RecognizeArgs) -> Result<String> {
    let model = Model::load(&a.model)?;
    let ink = load_ink(&a.ink, InkFormat::from_path(&a.ink))?;
    let mut p = Pipeline::build(&model, &ink.observable, ScoringMode::Default)?;
    let mut out = String::new();
    if a.dump_forest {
        out.push_str(&p.forest().dump(&model.grammar));
    }
    let trees: Vec<_> = p.top(a.top).iter().map(|t| t.summary()).collect();
    if a.json {
        out.push_str(&serde_json::to_string_pretty(&trees)?);
        out.push('\n');
    } else if trees.is_empty() {
        out.push_str("no parse\n");
    } else {
        for (i, t) in trees.iter().enumerate() {
            let _ = writeln!(out, "{:>3}. {:<30} {:.4}", i + 1, t.latex, t.score);
        }
    }
    Ok(out)
}

pub fn run_evaluate(a: &EvaluateArgs) -> Result<String> {
    let model = Model::load(&a.model)?;
    let corpus = load_corpus(&a.corpus)?;
    let report = evaluate(&model, &corpus, a.scenario, a.k_max.unwrap_or(model.config.k_max))?;
    if a.json {
        Ok(serde_json::to_string_pretty(&report)? + "\n")
    } else {
        Ok(report.summary())
    }
}

/// `NAME=DIR`, or a bare directory named after its last component.
pub fn parse_model_arg(arg: &str) -> (String, PathBuf) {
    match arg.split_once('=') {
        Some((name, dir)) => (name.to_string(), PathBuf::from(dir)),
        None => {
            let dir = PathBuf::from(arg);
            let name = dir
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| "default".into());
            (name, dir)
        }
    }
}
