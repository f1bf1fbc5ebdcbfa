//! `qreform`: ingest session logs, run the reformulation analyses, generate
//! synthetic corpora.
//!
//! Exit codes: 0 success (including skipped tables), 1 analysis or ingest
//! failure, 2 usage or spec error.

mod analyze;
mod config;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qreform::actions::{extract_pairs, pair_summary};
use qreform::corpus::{attach_documents, from_canonical_json, ingest_qrels, ingest_trec_xml, to_canonical_json};
use qreform::report::Cell;
use qreform::sources::DocstorePolicy;
use qreform::synthgen::{generate, GeneratorSpec};
use qreform::textnorm::{load_stoplist, STOPLIST_ENV};
use qreform::{Corpus, Error, NormalizationConfig, ReportTable};
use sha2::{Digest, Sha256};

use analyze::{Context, Group, Output};
use config::{AnalysisConfig, Format, Overrides};

#[derive(Parser)]
#[command(name = "qreform", version, about = "Term-based analysis of query reformulation in session logs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read TREC Session Track XML (plus optional qrels and documents) into a corpus file.
    Ingest(IngestArgs),
    /// Run analyses on a corpus file and write one report per table or series.
    Analyze(AnalyzeArgs),
    /// Generate a synthetic corpus from a generator spec.
    Synth(SynthArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Session Track XML files, one per dataset.
    #[arg(long = "trec-xml", required = true, num_args = 1..)]
    trec_xml: Vec<PathBuf>,
    /// Relevance judgments in TREC qrels format.
    #[arg(long, num_args = 1..)]
    qrels: Vec<PathBuf>,
    /// Directory of document files named by docid.
    #[arg(long)]
    docs: Option<PathBuf>,
    /// Stopword file, one word per line. Defaults to $QREFORM_STOPLIST, then the SMART list.
    #[arg(long)]
    stoplist: Option<PathBuf>,
    #[arg(long)]
    no_stem: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(value_enum)]
    group: Group,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long = "out-dir")]
    out_dir: PathBuf,
    /// JSON settings file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Count pairs ending in the test query (pairs and positions). Default true.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    include_test_queries: Option<bool>,
    #[arg(long)]
    k1: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    cutoff: Option<usize>,
    /// Comma-separated minimum dwell times in seconds.
    #[arg(long, value_delimiter = ',')]
    dwell_thresholds: Option<Vec<f64>>,
    #[arg(long, value_parser = parse_policy)]
    docstore_policy: Option<DocstorePolicy>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Fail (exit 1) when a table is skipped for missing inputs.
    #[arg(long)]
    strict: bool,
    /// Re-normalize the corpus without stemming.
    #[arg(long)]
    no_stem: bool,
    /// Re-normalize the corpus with this stopword file.
    #[arg(long)]
    stoplist: Option<PathBuf>,
    #[arg(long)]
    max_position: Option<u32>,
    #[arg(long)]
    k_max: Option<usize>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn parse_policy(s: &str) -> Result<DocstorePolicy, String> {
    s.parse().map_err(|_| format!("expected drop or empty, got {s:?}"))
}

enum Failure {
    Usage(String),
    Analysis(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Analysis(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::try_parse().unwrap_or_else(|e| e.exit());
    let result = match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Analyze(a) => run_analyze(a),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Analysis(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

fn normalization(stoplist: Option<&Path>, no_stem: bool) -> Result<NormalizationConfig, Failure> {
    let mut cfg = NormalizationConfig::default().with_stemming(!no_stem);
    let env_path = std::env::var_os(STOPLIST_ENV).map(PathBuf::from);
    if let Some(path) = stoplist.map(Path::to_path_buf).or(env_path) {
        cfg = cfg.with_stoplist(load_stoplist(&path).map_err(|e| Failure::Usage(e.to_string()))?);
    }
    Ok(cfg)
}

/// Writes to stdout, ignoring a closed pipe (`qreform ... | head`).
fn say(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::Analysis(format!("{}: {e}", path.display())))
}

fn ingest(a: IngestArgs) -> Result<(), Failure> {
    let cfg = normalization(a.stoplist.as_deref(), a.no_stem)?;
    let mut corpus: Option<Corpus> = None;
    for path in &a.trec_xml {
        let part = ingest_trec_xml(path, &cfg)?;
        match &mut corpus {
            None => corpus = Some(part),
            Some(c) => c.merge(part)?,
        }
    }
    let mut corpus = corpus.expect("clap requires at least one --trec-xml");
    for path in &a.qrels {
        let q = ingest_qrels(path)?;
        corpus.qrels.get_or_insert_with(Default::default).extend(q);
    }
    if let Some(dir) = &a.docs {
        let (attached, report) = attach_documents(corpus, dir)?;
        corpus = attached;
        for w in &report.warnings {
            eprintln!("warning: {w}");
        }
        eprintln!(
            "documents: {} loaded, {} impressions with missing clicked documents",
            report.loaded, report.flagged_impressions
        );
    }
    corpus.validate()?;
    write(&a.out, &to_canonical_json(&corpus))?;
    say(&corpus_summary(&corpus).to_markdown(&[]));
    Ok(())
}

/// Sessions, ranked impressions, pairs and mean query length per dataset.
fn corpus_summary(corpus: &Corpus) -> ReportTable {
    let datasets = corpus.datasets();
    let mut columns = datasets.clone();
    columns.push(qreform::actions::COMBINED.into());
    let mut t = ReportTable::new("Corpus summary", columns.clone());
    let select = |c: &str| -> Vec<&qreform::Session> {
        corpus
            .sessions
            .iter()
            .filter(|s| c == qreform::actions::COMBINED || s.dataset == c)
            .collect()
    };
    let count = |f: &dyn Fn(&qreform::Session) -> usize| -> Vec<Cell> {
        columns
            .iter()
            .map(|c| Cell::value(select(c).into_iter().map(f).sum::<usize>() as f64))
            .collect()
    };
    t.push_row("Sessions", count(&|_| 1));
    t.push_row("Impressions", count(&|s| s.ranked_impressions().count()));
    t.push_row("Pairs", count(&|s| s.impressions.len().saturating_sub(1)));
    let lengths = columns
        .iter()
        .map(|c| {
            let queries: Vec<usize> = select(c)
                .into_iter()
                .flat_map(|s| s.impressions.iter().map(|i| i.query_terms.distinct()))
                .collect();
            Cell::mean(queries.iter().sum::<usize>() as f64, queries.len())
        })
        .collect();
    t.push_row("Mean query length", lengths);
    t
}

fn run_analyze(a: AnalyzeArgs) -> Result<(), Failure> {
    let base = match &a.config {
        Some(path) => AnalysisConfig::load(path).map_err(Failure::Usage)?,
        None => AnalysisConfig::default(),
    };
    let cfg = base.apply(Overrides {
        include_test_queries: a.include_test_queries,
        k1: a.k1,
        b: a.b,
        cutoff: a.cutoff,
        dwell_thresholds: a.dwell_thresholds,
        docstore_policy: a.docstore_policy,
        format: a.format,
        strict: a.strict,
        no_stem: a.no_stem,
        stoplist: a.stoplist,
        max_position: a.max_position,
        k_max: a.k_max,
    });
    cfg.validate().map_err(Failure::Usage)?;

    let bytes = fs::read(&a.corpus).map_err(|e| Failure::Analysis(format!("{}: {e}", a.corpus.display())))?;
    let mut corpus = from_canonical_json(&bytes)?;
    if cfg.stem.is_some() || cfg.stoplist.is_some() {
        let mut norm = corpus.normalization.clone();
        if let Some(stem) = cfg.stem {
            norm = norm.with_stemming(stem);
        }
        if let Some(path) = &cfg.stoplist {
            norm = norm.with_stoplist(load_stoplist(path).map_err(|e| Failure::Usage(e.to_string()))?);
        }
        corpus.renormalize(norm);
    }

    let header = report_header(&corpus, &bytes, &cfg);
    let groups = a.group.expand();
    let ctx = &Context::new(&corpus, &cfg);
    // groups run concurrently; files are written afterwards in a fixed order
    let results: Vec<_> = std::thread::scope(|scope| {
        let handles: Vec<_> = groups.iter().map(|&g| scope.spawn(move || ctx.run(g))).collect();
        handles.into_iter().map(|h| h.join().expect("analysis worker panicked")).collect()
    });

    fs::create_dir_all(&a.out_dir).map_err(|e| Failure::Analysis(format!("{}: {e}", a.out_dir.display())))?;
    let mut skipped = 0;
    for (group, result) in groups.iter().zip(results) {
        let outputs = result.map_err(|e| Failure::Analysis(format!("{group:?}: {e}")))?;
        for out in outputs {
            match out {
                Output::Table { name, table } => {
                    table.validate()?;
                    let mut lines = header.clone();
                    lines.insert(0, format!("table: {name}"));
                    if cfg.format.csv() {
                        write(&a.out_dir.join(format!("{name}.csv")), table.to_csv(&lines).as_bytes())?;
                    }
                    if cfg.format.md() {
                        write(&a.out_dir.join(format!("{name}.md")), table.to_markdown(&lines).as_bytes())?;
                    }
                    say(&format!("wrote {name}\n"));
                }
                Output::Skipped { name, reason } => {
                    eprintln!("notice: skipped {name}: {reason}");
                    skipped += 1;
                }
            }
        }
    }
    if skipped > 0 && cfg.strict {
        return Err(Failure::Analysis(format!("{skipped} table(s) skipped under --strict")));
    }
    Ok(())
}

/// Provenance lines shared by every report of one run.
fn report_header(corpus: &Corpus, corpus_bytes: &[u8], cfg: &AnalysisConfig) -> Vec<String> {
    let config_json = serde_json::to_string(cfg).expect("config serializes");
    vec![
        format!("qreform {}", env!("CARGO_PKG_VERSION")),
        format!("corpus: {}", corpus.provenance),
        format!("corpus sha256: {}", hex::encode(Sha256::digest(corpus_bytes))),
        format!("normalization: {}", corpus.normalization.fingerprint()),
        format!("config hash: {}", hex::encode(&Sha256::digest(config_json.as_bytes())[..8])),
        format!("config: {config_json}"),
    ]
}

fn synth(a: SynthArgs) -> Result<(), Failure> {
    let spec = GeneratorSpec::load(&a.spec).map_err(|e| Failure::Usage(e.to_string()))?;
    let corpus = generate(&spec).map_err(|e| Failure::Usage(e.to_string()))?;
    write(&a.out, &to_canonical_json(&corpus))?;
    let pairs = extract_pairs(&corpus, true);
    say(&format!("{} sessions, {} pairs\n", corpus.sessions.len(), pairs.len()));
    if let Ok(t) = pair_summary(&pairs) {
        say(&t.to_markdown(&[]));
    }
    Ok(())
}
