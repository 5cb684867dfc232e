//! Command-line front end. `run` returns the process exit status: 0 on
//! success, 1 for input errors, 2 when the extraction program is infeasible.
//! Outputs are written only after every step has succeeded.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::coherence::{build_coherence, Combiner};
use crate::corpus::{export_corpus, parse_corpus, stratified_sample, Corpus, CorpusFormat};
use crate::embeddings::{fallback_encode, load_embeddings, EmbeddingFormat, EmbeddingStore};
use crate::evaluation::{evaluate_map, framing_distribution, run_grid_with_matrix};
use crate::export::export_dot;
use crate::extraction::{
    build_lp, decode_map, select_endpoints, solve_lp, EndpointSpec, ExtractionError, ExtractionParams,
    NarrativeMap,
};
use crate::json::to_canonical_string;
use crate::topics::{TopicConfig, TopicModel};

const DEFAULT_SEED: u64 = 42;
const SEED_ENV: &str = "FRAMEMAP_SEED";
const FALLBACK_DIMENSION: usize = 256;

#[derive(Debug, Parser)]
#[command(name = "framemap", version, about = "Narrative map extraction and framing analysis for news corpora")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a corpus and write it back in canonical form.
    Ingest(IngestArgs),
    /// Draw a frame-stratified sample.
    Sample(SampleArgs),
    /// Extract one narrative map (JSON plus DOT).
    Extract(ExtractArgs),
    /// Extract and evaluate a map for every start/end frame pair.
    Grid(GridArgs),
    /// Compute framing metrics for an extracted map.
    Evaluate(EvaluateArgs),
    /// Render a map as Graphviz DOT.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
struct Shared {
    /// JSON run configuration; flags take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// RNG seed; falls back to the config file, then FRAMEMAP_SEED, then 42.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct CorpusArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// csv or json; guessed from the file extension when omitted.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// JSONL or binary embeddings; headlines are hashed into vectors when omitted.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Precomputed topic sidecar (JSONL with id, x, y, cluster).
    #[arg(long)]
    topics: Option<PathBuf>,
    /// geometric-mean or product.
    #[arg(long)]
    combiner: Option<String>,
}

#[derive(Debug, Args)]
struct ParamArgs {
    /// Expected events per storyline (default 6).
    #[arg(long)]
    k: Option<usize>,
    /// Fraction of topics the map must cover (default 0.5).
    #[arg(long)]
    coverage: Option<f64>,
    /// Minimum flow for an edge to be kept in the map (default 1e-3).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Weight of the total-coherence tie-breaker (default 1e-3).
    #[arg(long)]
    lambda: Option<f64>,
    /// Solver feasibility tolerance (default 1e-6).
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[command(flatten)]
    shared: Shared,
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Collapse the nine raw frames into the three grouped frames.
    #[arg(long)]
    group: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    out_format: Option<String>,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[command(flatten)]
    shared: Shared,
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    n: Option<usize>,
    /// Group frames after sampling.
    #[arg(long)]
    group: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    out_format: Option<String>,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    #[command(flatten)]
    shared: Shared,
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    params: ParamArgs,
    /// Document id or frame:N.
    #[arg(long)]
    start: Option<String>,
    #[arg(long)]
    end: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// DOT output; defaults to the map path with a .dot extension.
    #[arg(long)]
    dot: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[command(flatten)]
    shared: Shared,
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write both grids as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Directory for one map JSON per successful cell.
    #[arg(long)]
    maps_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    shared: Shared,
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    map: PathBuf,
    /// Report path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[arg(long)]
    map: PathBuf,
    /// Label nodes with the nine raw frame names instead of the grouped ones.
    #[arg(long)]
    raw_frames: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Contents of `--config`; every field is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RunConfig {
    subcommand: Option<String>,
    corpus: Option<PathBuf>,
    format: Option<String>,
    embeddings: Option<PathBuf>,
    topics: Option<PathBuf>,
    output: Option<PathBuf>,
    params: Option<ExtractionParams>,
    seed: Option<u64>,
    start: Option<String>,
    end: Option<String>,
    n: Option<usize>,
    combiner: Option<String>,
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Infeasible(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Input(_) => 1,
            Failure::Infeasible(_) => 2,
        }
    }
}

impl From<ExtractionError> for Failure {
    fn from(e: ExtractionError) -> Self {
        match e {
            ExtractionError::Infeasible { .. } => Failure::Infeasible(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

fn input<E: std::fmt::Display>(context: &str) -> impl FnOnce(E) -> Failure + '_ {
    move |e| Failure::Input(format!("{context}: {e}"))
}

/// Files to write once the command has succeeded; `None` means stdout.
type Outputs = Vec<(Option<PathBuf>, Vec<u8>)>;

pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Sample(a) => sample(a),
        Command::Extract(a) => extract_cmd(a),
        Command::Grid(a) => grid(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Export(a) => export(a),
    };
    match result.and_then(write_outputs) {
        Ok(()) => 0,
        Err(f) => {
            match &f {
                Failure::Input(m) => eprintln!("error: {m}"),
                Failure::Infeasible(m) => eprintln!("infeasible: {m}"),
            }
            f.code()
        }
    }
}

fn write_outputs(outputs: Outputs) -> Result<(), Failure> {
    for (path, bytes) in outputs {
        match path {
            Some(p) => {
                fs::write(&p, &bytes).map_err(input(&format!("cannot write {}", p.display())))?;
                eprintln!("wrote {}", p.display());
            }
            None => {
                use std::io::Write;
                std::io::stdout()
                    .write_all(&bytes)
                    .map_err(input("cannot write to standard output"))?;
            }
        }
    }
    Ok(())
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(input(&format!("cannot read {}", path.display())))
}

fn load_config(shared: &Shared) -> Result<RunConfig, Failure> {
    match &shared.config {
        None => Ok(RunConfig::default()),
        Some(path) => {
            let raw = read(path)?;
            serde_json::from_slice(&raw).map_err(input(&format!("invalid config {}", path.display())))
        }
    }
}

/// `--seed`, then the config file, then `FRAMEMAP_SEED`, then 42.
fn resolve_seed(shared: &Shared, config: &RunConfig) -> Result<u64, Failure> {
    if let Some(seed) = shared.seed.or(config.seed) {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Input(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn resolve_params(args: &ParamArgs, config: &RunConfig) -> Result<ExtractionParams, Failure> {
    let mut p = config.params.unwrap_or_default();
    if let Some(k) = args.k {
        p.k = k;
    }
    if let Some(c) = args.coverage {
        p.coverage_threshold = c;
    }
    if let Some(e) = args.epsilon {
        p.edge_keep_epsilon = e;
    }
    if let Some(l) = args.lambda {
        p.tie_break_lambda = l;
    }
    if let Some(t) = args.tolerance {
        p.solver_tolerance = t;
    }
    p.validate()?;
    Ok(p)
}

fn corpus_format(path: &Path, flag: Option<&str>) -> Result<CorpusFormat, Failure> {
    match flag {
        Some(f) => f.parse().map_err(Failure::Input),
        None => Ok(match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => CorpusFormat::Csv,
            _ => CorpusFormat::Json,
        }),
    }
}

fn load_corpus(args: &CorpusArgs, config: &RunConfig) -> Result<Corpus, Failure> {
    let path = args
        .corpus
        .as_ref()
        .or(config.corpus.as_ref())
        .ok_or_else(|| Failure::Input("no corpus given (--corpus)".into()))?;
    let format = corpus_format(path, args.format.as_deref().or(config.format.as_deref()))?;
    let raw = read(path)?;
    parse_corpus(&raw, format).map_err(input(&format!("invalid corpus {}", path.display())))
}

fn parse_combiner(name: Option<&str>) -> Result<Combiner, Failure> {
    match name.map(str::to_ascii_lowercase).as_deref() {
        None | Some("geometric-mean") | Some("geometric_mean") => Ok(Combiner::GeometricMean),
        Some("product") => Ok(Combiner::Product),
        Some(other) => Err(Failure::Input(format!(
            "unknown combiner {other:?} (expected geometric-mean or product)"
        ))),
    }
}

/// Embeddings keyed by document id, plus the topic model over them.
fn load_model(
    corpus: &Corpus,
    args: &ModelArgs,
    config: &RunConfig,
    seed: u64,
) -> Result<(EmbeddingStore<f64>, TopicModel<f64>), Failure> {
    let mut vectors = Vec::with_capacity(corpus.len());
    match args.embeddings.as_ref().or(config.embeddings.as_ref()) {
        Some(path) => {
            let raw = read(path)?;
            let store: EmbeddingStore<f64> = load_embeddings(&raw, EmbeddingFormat::sniff(&raw))
                .map_err(input(&format!("invalid embeddings {}", path.display())))?;
            for d in corpus.documents() {
                let v = store.get(d.embedding_key()).ok_or_else(|| {
                    Failure::Input(format!("{} has no embedding for document {:?}", path.display(), d.id))
                })?;
                vectors.push((d.id.clone(), v.to_vec()));
            }
        }
        None => {
            for d in corpus.documents() {
                let v = fallback_encode(&d.headline, FALLBACK_DIMENSION, seed)
                    .map_err(input(&format!("cannot encode headline of {:?}", d.id)))?;
                vectors.push((d.id.clone(), v));
            }
        }
    }
    let store = EmbeddingStore::from_vectors(vectors).map_err(input("invalid embeddings"))?;
    let config_topics = TopicConfig::default();
    let topics = match args.topics.as_ref().or(config.topics.as_ref()) {
        Some(path) => {
            let raw = read(path)?;
            TopicModel::from_sidecar(&raw, config_topics.alpha)
                .map_err(input(&format!("invalid topic sidecar {}", path.display())))?
        }
        None => TopicModel::from_embeddings(&store, &config_topics, seed).map_err(input("topic modelling failed"))?,
    };
    Ok((store, topics))
}

fn out_path(flag: &Option<PathBuf>, config: &RunConfig, what: &str) -> Result<PathBuf, Failure> {
    flag.clone()
        .or_else(|| config.output.clone())
        .ok_or_else(|| Failure::Input(format!("no output path given for the {what} (--out)")))
}

fn write_corpus(corpus: &Corpus, path: PathBuf, format: Option<&str>) -> Result<Outputs, Failure> {
    let format = corpus_format(&path, format)?;
    let bytes = export_corpus(corpus, format).map_err(input("cannot serialize corpus"))?;
    Ok(vec![(Some(path), bytes)])
}

fn ingest(a: IngestArgs) -> Result<Outputs, Failure> {
    let config = load_config(&a.shared)?;
    let mut corpus = load_corpus(&a.corpus, &config)?;
    if a.group {
        corpus = corpus.apply_frame_grouping().map_err(input("cannot group frames"))?;
    }
    eprintln!("{} documents, {} frames", corpus.len(), corpus.frame_count());
    write_corpus(&corpus, out_path(&a.out, &config, "corpus")?, a.out_format.as_deref())
}

fn sample(a: SampleArgs) -> Result<Outputs, Failure> {
    let config = load_config(&a.shared)?;
    let seed = resolve_seed(&a.shared, &config)?;
    let corpus = load_corpus(&a.corpus, &config)?;
    let n = a.n.or(config.n).unwrap_or(131);
    let mut sampled = stratified_sample(&corpus, n, seed).map_err(input("sampling failed"))?;
    if a.group {
        sampled = sampled.apply_frame_grouping().map_err(input("cannot group frames"))?;
    }
    eprintln!("sampled {} of {} documents (seed {seed})", sampled.len(), corpus.len());
    write_corpus(&sampled, out_path(&a.out, &config, "sample")?, a.out_format.as_deref())
}

fn extract_cmd(a: ExtractArgs) -> Result<Outputs, Failure> {
    let config = load_config(&a.shared)?;
    let seed = resolve_seed(&a.shared, &config)?;
    let params = resolve_params(&a.params, &config)?;
    let out = out_path(&a.out, &config, "map")?;
    let spec = |flag: &Option<String>, cfg: &Option<String>, what: &str| -> Result<EndpointSpec, Failure> {
        flag.as_ref()
            .or(cfg.as_ref())
            .ok_or_else(|| Failure::Input(format!("no {what} given (--{what})")))?
            .parse::<EndpointSpec>()
            .map_err(Failure::from)
    };
    let start = spec(&a.start, &config.start, "start")?;
    let end = spec(&a.end, &config.end, "end")?;
    let combiner = parse_combiner(a.model.combiner.as_deref().or(config.combiner.as_deref()))?;

    let corpus = load_corpus(&a.corpus, &config)?;
    let (source, sink) = select_endpoints(&corpus, &start, &end)?;
    let (store, topics) = load_model(&corpus, &a.model, &config, seed)?;
    let matrix = build_coherence(&corpus, &store, &topics, combiner).map_err(input("cannot score pairs"))?;
    let model = build_lp(&matrix, &topics, &source, &sink, &params)?;
    for w in &model.warnings {
        eprintln!("warning: {w}");
    }
    let solution = solve_lp(&model)?;
    let map = decode_map(&solution, &model, &corpus)?;
    eprintln!(
        "map {source} -> {sink}: {} events, {} edges, bottleneck {:.6}",
        map.nodes.len(),
        map.edges.len(),
        map.objective
    );
    let dot_path = a.dot.clone().unwrap_or_else(|| out.with_extension("dot"));
    let dot = export_dot(&map, corpus.taxonomy(), corpus.is_grouped());
    Ok(vec![
        (Some(out), map.to_json().into_bytes()),
        (Some(dot_path), dot.into_bytes()),
    ])
}

fn grid(a: GridArgs) -> Result<Outputs, Failure> {
    let config = load_config(&a.shared)?;
    let seed = resolve_seed(&a.shared, &config)?;
    let params = resolve_params(&a.params, &config)?;
    let out = out_path(&a.out, &config, "report")?;
    let combiner = parse_combiner(a.model.combiner.as_deref().or(config.combiner.as_deref()))?;
    let corpus = load_corpus(&a.corpus, &config)?;
    if !corpus.is_grouped() {
        return Err(Failure::Input(
            "grid needs a grouped corpus (frames 1-3); run ingest --group first".into(),
        ));
    }
    for f in 1..=corpus.frame_count() {
        if !corpus.frames().any(|x| x == f) {
            return Err(Failure::Input(format!("grid needs every grouped frame; frame {f} has no documents")));
        }
    }
    let (store, topics) = load_model(&corpus, &a.model, &config, seed)?;
    let matrix = build_coherence(&corpus, &store, &topics, combiner).map_err(input("cannot score pairs"))?;
    let run = run_grid_with_matrix(&corpus, &matrix, &topics, &params).map_err(input("grid failed"))?;

    let mut outputs: Outputs = vec![(Some(out), run.report.to_json().into_bytes())];
    if let Some(csv) = a.csv {
        outputs.push((Some(csv), run.report.to_csv().into_bytes()));
    }
    if let Some(dir) = a.maps_dir {
        fs::create_dir_all(&dir).map_err(input(&format!("cannot create {}", dir.display())))?;
        for (cell, map) in run.report.cells.iter().zip(&run.maps) {
            if let Some(map) = map {
                let path = dir.join(format!("map-{}-{}.json", cell.start_frame, cell.end_frame));
                outputs.push((Some(path), map.to_json().into_bytes()));
            }
        }
    }
    let failed = run.maps.iter().filter(|m| m.is_none()).count();
    eprintln!("grid: {} of {} cells extracted", run.maps.len() - failed, run.maps.len());
    Ok(outputs)
}

fn evaluate(a: EvaluateArgs) -> Result<Outputs, Failure> {
    let config = load_config(&a.shared)?;
    let corpus = load_corpus(&a.corpus, &config)?;
    let raw = String::from_utf8(read(&a.map)?).map_err(input(&format!("{} is not UTF-8", a.map.display())))?;
    let map: NarrativeMap<f64> =
        NarrativeMap::from_json(&raw).map_err(input(&format!("invalid map {}", a.map.display())))?;
    let distribution =
        framing_distribution(corpus.frames(), corpus.frame_count()).map_err(input("empty corpus"))?;
    let report = evaluate_map(&map, &distribution).map_err(input("cannot evaluate map"))?;
    let json = to_canonical_string(&report).expect("report serializes");
    Ok(vec![(a.out.or(config.output), json.into_bytes())])
}

fn export(a: ExportArgs) -> Result<Outputs, Failure> {
    let raw = String::from_utf8(read(&a.map)?).map_err(input(&format!("{} is not UTF-8", a.map.display())))?;
    let map: NarrativeMap<f64> =
        NarrativeMap::from_json(&raw).map_err(input(&format!("invalid map {}", a.map.display())))?;
    let dot = export_dot(&map, &Default::default(), !a.raw_frames);
    Ok(vec![(a.out, dot.into_bytes())])
}
