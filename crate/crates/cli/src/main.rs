use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use partexec_core::backend::{prompt_digest, read_transcript, LiveConfig, MatchMode, ReplayBackend};
use partexec_core::eval::{load_corpus, venn, CorpusReport, Evaluator};
use partexec_core::predict::PromptBundle;
use partexec_core::runtime::{Budget, DepsPolicy, Runtime};
use partexec_core::types::ClassifierBundle;
use partexec_core::{instrument, BackendSource, PipelineConfig, PipelineFactory, PipelineMode, SourceSnippet, Terminal};

#[derive(Parser)]
#[command(name = "partexec", version, about = "Execute partial Python snippets by injecting predicted values")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the instrumented source and its site map.
    Instrument {
        input: PathBuf,
        /// Instrumented source; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Site map JSON; defaults to `<out>.sites.json` when --out is given.
        #[arg(long)]
        site_map: Option<PathBuf>,
    },
    /// Run one snippet and print its execution report.
    Run {
        snippet: PathBuf,
        #[command(flatten)]
        config: RunArgs,
        #[arg(long, default_value_t = 1)]
        runs: usize,
    },
    /// Evaluate coverage over a corpus.
    Eval {
        corpus: PathBuf,
        #[command(flatten)]
        config: RunArgs,
        #[arg(long, default_value_t = 5)]
        runs: usize,
        /// Also write a per-snippet CSV table.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// An earlier eval report to compare fully executed snippets against.
        #[arg(long)]
        compare: Option<PathBuf>,
    },
    /// Report runtime type errors found in a corpus.
    Detect {
        corpus: PathBuf,
        #[command(flatten)]
        config: RunArgs,
        #[arg(long, default_value_t = 5)]
        runs: usize,
    },
    /// Inspect transcript files.
    Transcript {
        #[command(subcommand)]
        action: TranscriptCmd,
    },
}

#[derive(Subcommand)]
enum TranscriptCmd {
    /// Check that every line is a well-formed entry.
    Validate { file: PathBuf },
    /// Print the SHA-256 key of a prompt read from a file or `-` for stdin.
    Digest { prompt: PathBuf },
    /// Count entries per match mode.
    Stats { file: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendKind {
    Live,
    Replay,
    Record,
}

#[derive(Clone, Copy, ValueEnum)]
enum PipelineArg {
    Full,
    #[value(name = "value_only", alias = "value-only")]
    ValueOnly,
    #[value(name = "type_only", alias = "type-only")]
    TypeOnly,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum, default_value = "replay")]
    backend: BackendKind,
    /// Replay: a transcript file or a directory of per-snippet transcripts;
    /// without one every completion request fails.
    /// Record: the directory transcripts are written to.
    #[arg(long)]
    transcript: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "full")]
    pipeline: PipelineArg,
    #[arg(long, default_value_t = 5)]
    t_max: u32,
    #[arg(long, default_value_t = 0.8)]
    temperature: f64,
    #[arg(long)]
    top_p: Option<f64>,
    /// Wall-clock limit per run, in seconds.
    #[arg(long, default_value_t = 10.0)]
    timeout: f64,
    #[arg(long, default_value_t = 50)]
    max_injections: usize,
    /// Let the checker pip-install modules named in --allowlist.
    #[arg(long)]
    allow_install: bool,
    #[arg(long, value_delimiter = ',')]
    allowlist: Vec<String>,
    /// Directory with value_prompts.json and/or classifier_prompts.json.
    #[arg(long)]
    prompt_assets: Option<PathBuf>,
    /// Report destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Interpreter for the worker; PARTEXEC_PYTHON or python3 by default.
    #[arg(long)]
    python: Option<PathBuf>,
    /// Overrides PARTEXEC_ENDPOINT.
    #[arg(long)]
    endpoint: Option<String>,
    /// Overrides PARTEXEC_MODEL.
    #[arg(long)]
    model: Option<String>,
}

/// A configuration problem; exits with status 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

struct Setup {
    factory: PipelineFactory,
    evaluator: Evaluator,
}

impl RunArgs {
    fn setup(&self, runs: usize) -> Result<Setup> {
        if self.t_max < 1 {
            return Err(usage("--t-max must be at least 1"));
        }
        if runs < 1 {
            return Err(usage("--runs must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.temperature) {
            return Err(usage("--temperature must lie in [0, 1]"));
        }
        if let Some(p) = self.top_p {
            if !(p > 0.0 && p <= 1.0) {
                return Err(usage("--top-p must lie in (0, 1]"));
            }
        }
        if !(self.timeout.is_finite() && self.timeout > 0.0) {
            return Err(usage("--timeout must be positive"));
        }
        let mut live = LiveConfig::from_env();
        if let Some(e) = &self.endpoint {
            live.endpoint = e.clone();
        }
        if let Some(m) = &self.model {
            live.model = m.clone();
        }
        let source = match self.backend {
            BackendKind::Replay => match &self.transcript {
                Some(t) if t.exists() => BackendSource::Replay(t.clone()),
                Some(t) => return Err(usage(format!("transcript {} does not exist", t.display()))),
                // nothing to replay: every completion request fails
                None => BackendSource::Fixed(Arc::new(ReplayBackend::new(Vec::new()))),
            },
            BackendKind::Live => BackendSource::Live(live),
            BackendKind::Record => match &self.transcript {
                Some(dir) => {
                    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                    BackendSource::Record { config: live, dir: dir.clone() }
                }
                None => return Err(usage("--backend record needs --transcript DIR")),
            },
        };
        let mode = match self.pipeline {
            PipelineArg::Full => PipelineMode::Full,
            PipelineArg::ValueOnly => PipelineMode::ValueOnly,
            PipelineArg::TypeOnly => PipelineMode::TypeOnly,
        };
        let mut factory = PipelineFactory::new(mode, source);
        factory.config = PipelineConfig { t_max: self.t_max, temperature: self.temperature, top_p: self.top_p, ..PipelineConfig::default() };
        if let Some(dir) = &self.prompt_assets {
            if !dir.is_dir() {
                return Err(usage(format!("--prompt-assets {} is not a directory", dir.display())));
            }
            let v = dir.join("value_prompts.json");
            if v.exists() {
                factory.prompts = Arc::new(PromptBundle::load(&v).map_err(|e| usage(e.to_string()))?);
            }
            let c = dir.join("classifier_prompts.json");
            if c.exists() {
                factory.classifier = Arc::new(ClassifierBundle::load(&c).map_err(|e| usage(e.to_string()))?);
            }
        }
        let budget = Budget {
            timeout: Duration::from_secs_f64(self.timeout),
            max_injections: self.max_injections,
            deps: DepsPolicy { allow_install: self.allow_install, allowlist: self.allowlist.clone() },
            ..Budget::default()
        };
        let runtime = match &self.python {
            Some(p) => Runtime { python: p.clone() },
            None => Runtime::default(),
        };
        Ok(Setup { factory, evaluator: Evaluator { runtime, budget, runs } })
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, format!("{text}\n")).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn read_source(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn cmd_instrument(input: &Path, out: Option<&Path>, site_map: Option<&Path>) -> Result<ExitCode> {
    let text = read_source(input)?;
    let snippet = SourceSnippet::new(input.display().to_string(), text);
    let program = match instrument(&snippet) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("ParseError: {}: {e}", input.display());
            return Ok(ExitCode::from(1));
        }
    };
    let sites = serde_json::to_string_pretty(&program.site_map_json())?;
    match out {
        Some(p) => {
            std::fs::write(p, &program.instrumented_text).with_context(|| format!("writing {}", p.display()))?;
            let map = site_map.map(Path::to_path_buf).unwrap_or_else(|| {
                let mut s = p.as_os_str().to_owned();
                s.push(".sites.json");
                PathBuf::from(s)
            });
            std::fs::write(&map, sites + "\n").with_context(|| format!("writing {}", map.display()))?;
        }
        None => {
            print!("{}", program.instrumented_text);
            if let Some(m) = site_map {
                std::fs::write(m, sites + "\n").with_context(|| format!("writing {}", m.display()))?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_run(path: &Path, config: &RunArgs, runs: usize) -> Result<ExitCode> {
    let setup = config.setup(runs)?;
    let text = read_source(path)?;
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let snippet = SourceSnippet::new(path.display().to_string(), text);
    let program = match instrument(&snippet) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("ParseError: {}: {e}", path.display());
            return Ok(ExitCode::from(1));
        }
    };
    let mut reports = Vec::new();
    for k in 1..=runs {
        let pipeline = setup.factory.make(&id, k).map_err(|e| usage(e.to_string()))?;
        reports.push(setup.evaluator.runtime.run(&program, &pipeline, &setup.evaluator.budget));
    }
    let report = partexec_core::eval::combine_runs(&reports).expect("at least one run");
    emit(config.out.as_deref(), &report.to_json())?;
    Ok(if report.terminal == Terminal::Completed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn evaluate(corpus: &Path, setup: &Setup) -> Result<CorpusReport> {
    let entries = load_corpus(corpus).map_err(|e| usage(e.to_string()))?;
    setup.evaluator.evaluate_corpus(&entries, &setup.factory).map_err(|e| usage(e.to_string()))
}

fn cmd_eval(corpus: &Path, config: &RunArgs, runs: usize, csv: Option<&Path>, compare: Option<&Path>) -> Result<ExitCode> {
    let setup = config.setup(runs)?;
    let baseline: Option<CorpusReport> = match compare {
        Some(p) => {
            let text = read_source(p)?;
            Some(serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", p.display())))?)
        }
        None => None,
    };
    let report = evaluate(corpus, &setup)?;
    if let Some(p) = csv {
        std::fs::write(p, report.to_csv()).with_context(|| format!("writing {}", p.display()))?;
    }
    let text = match baseline {
        Some(b) => {
            let mut v = serde_json::to_value(&report)?;
            v["comparison"] = serde_json::to_value(venn(&report, &b))?;
            serde_json::to_string_pretty(&v)?
        }
        None => report.to_json(),
    };
    emit(config.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_detect(corpus: &Path, config: &RunArgs, runs: usize) -> Result<ExitCode> {
    let setup = config.setup(runs)?;
    let report = evaluate(corpus, &setup)?;
    let other: Vec<_> = report
        .snippets
        .iter()
        .flat_map(|s| s.other_crashes.iter().map(move |c| json!({"origin": s.id, "exception_class": c.exception_class, "message": c.message, "line_no": c.line_no})))
        .collect();
    let out = json!({
        "findings": report.findings(),
        "other_crashes": other,
        "snippet_count": report.snippets.len(),
        "skipped": report.skipped,
    });
    emit(config.out.as_deref(), &serde_json::to_string_pretty(&out)?)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_transcript(action: &TranscriptCmd) -> Result<ExitCode> {
    match action {
        TranscriptCmd::Validate { file } => match read_transcript(file) {
            Ok(t) => {
                println!("{}: {} entries", file.display(), t.len());
                Ok(ExitCode::SUCCESS)
            }
            Err(e) => {
                eprintln!("{e}");
                Ok(ExitCode::from(1))
            }
        },
        TranscriptCmd::Digest { prompt } => {
            let text = if prompt.as_os_str() == "-" {
                let mut s = String::new();
                std::io::stdin().read_to_string(&mut s)?;
                s
            } else {
                read_source(prompt)?
            };
            println!("{}", prompt_digest(&text));
            Ok(ExitCode::SUCCESS)
        }
        TranscriptCmd::Stats { file } => {
            let t = read_transcript(file).map_err(|e| usage(e.to_string()))?;
            let count = |m| t.iter().filter(|e| e.mode == m).count();
            let stats = json!({
                "entries": t.len(),
                "exact_prompt": count(MatchMode::ExactPrompt),
                "prompt_digest": count(MatchMode::PromptDigest),
                "sequence": count(MatchMode::Sequence),
            });
            println!("{}", serde_json::to_string_pretty(&stats)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Instrument { input, out, site_map } => cmd_instrument(input, out.as_deref(), site_map.as_deref()),
        Command::Run { snippet, config, runs } => cmd_run(snippet, config, *runs),
        Command::Eval { corpus, config, runs, csv, compare } => cmd_eval(corpus, config, *runs, csv.as_deref(), compare.as_deref()),
        Command::Detect { corpus, config, runs } => cmd_detect(corpus, config, *runs),
        Command::Transcript { action } => cmd_transcript(action),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
