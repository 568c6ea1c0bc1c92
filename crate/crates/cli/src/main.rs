//! Command-line driver: corpus vectorization, distance matrices and binary
//! SOM training. Every command computes its outputs in memory and writes
//! them only once all of them are ready.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hamming_som::hamming::{build_distance_circuit, classical_distance_matrix, DistanceMatrix};
use hamming_som::sofm::{self, Backend, BinaryMap, ClusterInit, TrainConfig, Training};
use hamming_som::textvec::{
    build_vocabulary, vectorize, vectors_from_csv, vectors_to_csv, Corpus, LabeledVector,
    Vocabulary, VocabularyParams,
};
use hamming_som::BinaryVector;
use serde_json::json;

#[derive(Parser)]
#[command(name = "hamming-som", version, about = "Hamming distance circuits and binary SOM training")]
struct Cli {
    /// Worker threads for state-vector kernels (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the vocabulary and binary document vectors.
    Vectorize {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Compute a distance matrix between two vector sets.
    Distance {
        #[command(flatten)]
        input: VectorArgs,
        /// Second vector set (CSV); defaults to the first set.
        #[arg(long)]
        against: Option<PathBuf>,
        #[command(flatten)]
        backend: BackendArgs,
        /// Also write threshold.txt: '#' below the median distance, '.' otherwise.
        #[arg(long)]
        threshold_median: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Train a binary self-organizing map.
    Train {
        #[command(flatten)]
        input: VectorArgs,
        #[command(flatten)]
        backend: BackendArgs,
        #[command(flatten)]
        training: TrainArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Vectorize, compute the all-pairs distance matrix and train, in one run.
    Report {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        backend: BackendArgs,
        #[command(flatten)]
        training: TrainArgs,
        /// Also write threshold.txt for the distance matrix.
        #[arg(long)]
        threshold_median: bool,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args)]
struct CorpusArgs {
    /// JSON file of {id, text, tag?} objects or a directory of text files
    /// (default: the bundled sample corpus).
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Vocabulary size, i.e. the vector dimension.
    #[arg(long, default_value_t = 9)]
    n: usize,
    /// Minimum number of documents a word must occur in.
    #[arg(long, default_value_t = 2)]
    min_df: usize,
    /// Maximum number of documents a word may occur in.
    #[arg(long, default_value_t = 4)]
    max_df: usize,
    /// Word to exclude; repeatable. Default: level.
    #[arg(long = "stopword")]
    stopwords: Vec<String>,
    /// Disable the default stopword list.
    #[arg(long, conflicts_with = "stopwords")]
    no_stopwords: bool,
}

#[derive(Args)]
struct VectorArgs {
    /// Vector CSV with id and bits columns (tag optional). Without it the
    /// corpus options are used to build vectors.
    #[arg(long, conflicts_with = "corpus")]
    vectors: Option<PathBuf>,
    #[command(flatten)]
    corpus: CorpusArgs,
}

#[derive(Args)]
struct BackendArgs {
    #[arg(long, value_enum, default_value_t = BackendKind::QuantumExact)]
    backend: BackendKind,
    /// Shots per circuit for the sampled backend.
    #[arg(long, default_value_t = 8192)]
    shots: usize,
    /// Seed for every random choice of the run.
    #[arg(long, default_value_t = TrainConfig::DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args)]
struct TrainArgs {
    /// Maximum number of epochs.
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    /// Number of cluster vectors.
    #[arg(long, default_value_t = 3)]
    clusters: usize,
    #[arg(long, value_enum, default_value_t = InitKind::Samples)]
    init: InitKind,
}

#[derive(Args)]
struct OutArgs {
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendKind {
    Classical,
    QuantumExact,
    QuantumSampled,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitKind {
    /// Distinct training samples.
    Samples,
    /// Distinct random bit strings.
    Random,
}

impl BackendArgs {
    fn validate(&self) -> Result<()> {
        ensure!(self.shots >= 1, "--shots must be at least 1");
        Ok(())
    }

    fn backend(&self) -> Backend {
        match self.backend {
            BackendKind::Classical => Backend::Classical,
            BackendKind::QuantumExact => Backend::QuantumExact,
            BackendKind::QuantumSampled => Backend::QuantumSampled { shots: self.shots },
        }
    }

    fn name(&self) -> &'static str {
        match self.backend {
            BackendKind::Classical => "classical",
            BackendKind::QuantumExact => "quantum-exact",
            BackendKind::QuantumSampled => "quantum-sampled",
        }
    }
}

impl TrainArgs {
    fn validate(&self) -> Result<()> {
        ensure!(self.epochs >= 1, "--epochs must be at least 1");
        ensure!(self.clusters >= 1, "--clusters must be at least 1");
        Ok(())
    }
}

impl CorpusArgs {
    fn params(&self) -> VocabularyParams {
        let mut params = VocabularyParams { size: self.n, min_df: self.min_df, max_df: self.max_df, ..Default::default() };
        if self.no_stopwords {
            params.stoplist.clear();
        } else if !self.stopwords.is_empty() {
            params.stoplist = self.stopwords.clone();
        }
        params
    }

    fn validate(&self) -> Result<()> {
        ensure!(self.n >= 1, "--n must be at least 1");
        ensure!(self.min_df <= self.max_df, "--min-df {} exceeds --max-df {}", self.min_df, self.max_df);
        Ok(())
    }

    fn load(&self) -> Result<(Corpus, Vocabulary, Vec<LabeledVector>)> {
        let corpus = match &self.corpus {
            Some(path) => Corpus::load(path).with_context(|| format!("loading corpus {}", path.display()))?,
            None => Corpus::sample(),
        };
        let vocab = build_vocabulary(&corpus, &self.params())?;
        let vectors = vectorize(&corpus, &vocab);
        Ok((corpus, vocab, vectors))
    }
}

impl VectorArgs {
    fn validate(&self) -> Result<()> {
        if self.vectors.is_none() {
            self.corpus.validate()?;
        }
        Ok(())
    }

    fn load(&self) -> Result<Vec<LabeledVector>> {
        match &self.vectors {
            Some(path) => read_vectors(path),
            None => Ok(self.corpus.load()?.2),
        }
    }
}

fn read_vectors(path: &Path) -> Result<Vec<LabeledVector>> {
    let data = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let vectors = vectors_from_csv(&data).with_context(|| format!("parsing {}", path.display()))?;
    ensure!(!vectors.is_empty(), "{} contains no vectors", path.display());
    Ok(vectors)
}

/// Files of one command, written together or not at all.
#[derive(Default)]
struct Outputs {
    files: Vec<(&'static str, String)>,
}

impl Outputs {
    fn add(&mut self, name: &'static str, contents: String) {
        self.files.push((name, contents));
    }

    fn write(self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut written = Vec::new();
        for (name, contents) in &self.files {
            let path = dir.join(name);
            if let Err(e) = fs::write(&path, contents) {
                for p in &written {
                    let _ = fs::remove_file(p);
                }
                let _ = fs::remove_file(&path);
                return Err(e).with_context(|| format!("writing {}", path.display()));
            }
            written.push(path);
        }
        Ok(())
    }
}

fn bits(vectors: &[LabeledVector]) -> Vec<BinaryVector> {
    vectors.iter().map(|v| v.bits.clone()).collect()
}

fn distance_matrix(inputs: &[BinaryVector], clusters: &[BinaryVector], backend: &BackendArgs) -> Result<DistanceMatrix> {
    Ok(match backend.backend {
        BackendKind::Classical => classical_distance_matrix(inputs, clusters)?,
        BackendKind::QuantumExact => build_distance_circuit(inputs, clusters, true)?.exact()?,
        BackendKind::QuantumSampled => {
            build_distance_circuit(inputs, clusters, true)?.sampled(backend.shots, backend.seed)?
        }
    })
}

fn add_distance_outputs(out: &mut Outputs, m: &DistanceMatrix, threshold: bool) {
    out.add("distance.csv", m.to_csv());
    out.add("integer_distance.csv", m.integer_csv());
    out.add("distance.json", m.to_json());
    if threshold {
        out.add("threshold.txt", m.render_median_threshold());
    }
    let missing = m.missing();
    if !missing.is_empty() {
        eprintln!(
            "warning: {} of {} entries had no shots in their subspace and are written as NA; raise --shots",
            missing.len(),
            m.rows() * m.cols()
        );
    }
}

fn run_training(
    vectors: &[LabeledVector],
    backend: &BackendArgs,
    training: &TrainArgs,
) -> Result<Training> {
    let samples = bits(vectors);
    let init = match training.init {
        InitKind::Samples => ClusterInit::Samples,
        InitKind::Random => ClusterInit::Random,
    };
    let map = BinaryMap::initialize(init, training.clusters, &samples, backend.seed)?;
    let config = TrainConfig {
        epochs: training.epochs,
        seed: backend.seed,
        backend: backend.backend(),
        ..Default::default()
    };
    Ok(sofm::train(map, &samples, &config)?)
}

fn add_training_outputs(
    out: &mut Outputs,
    vectors: &[LabeledVector],
    t: &Training,
    backend: &BackendArgs,
    training: &TrainArgs,
) {
    let ids: Vec<String> = vectors.iter().map(|v| v.id.clone()).collect();
    out.add("trace.jsonl", t.traces_jsonl());
    out.add("labels.csv", t.labels_csv(&ids));
    out.add("evaluations.csv", t.evaluations_csv());

    let mut clusters = String::from("unit,bits\n");
    for (k, c) in t.map.clusters().iter().enumerate() {
        clusters.push_str(&format!("{k},{c}\n"));
    }
    out.add("clusters.csv", clusters);

    let tags: Option<Vec<&str>> = vectors.iter().map(|v| v.tag.as_deref()).collect();
    let purity = tags.map(|tags| sofm::label_purity(t.final_labels(), &tags));
    let summary = json!({
        "backend": backend.name(),
        "shots": matches!(backend.backend, BackendKind::QuantumSampled).then_some(backend.shots),
        "seed": backend.seed,
        "clusters": training.clusters,
        "max_epochs": training.epochs,
        "epochs_run": t.traces.len(),
        "converged_at": t.converged_at,
        "distance_evaluations": t.total_evaluations(),
        "final_labels": t.final_labels(),
        "purity": purity.map(hamming_som::format::round_sig12),
        "skipped_updates": t.traces.iter().map(|e| e.skipped.len()).sum::<usize>(),
    });
    out.add("summary.json", serde_json::to_string_pretty(&summary).expect("json value") + "\n");
}

fn run(cli: Cli) -> Result<()> {
    if let Some(workers) = cli.workers {
        ensure!(workers >= 1, "--workers must be at least 1");
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .context("configuring worker pool")?;
    }

    let mut out = Outputs::default();
    let dir = match cli.command {
        Command::Vectorize { corpus, out: o } => {
            corpus.validate()?;
            let (_, vocab, vectors) = corpus.load()?;
            out.add("vocabulary.json", vocab.to_json());
            out.add("vectors.csv", vectors_to_csv(&vectors));
            o.out_dir
        }
        Command::Distance { input, against, backend, threshold_median, out: o } => {
            input.validate()?;
            backend.validate()?;
            let a = bits(&input.load()?);
            let b = match &against {
                Some(path) => bits(&read_vectors(path)?),
                None => a.clone(),
            };
            let m = distance_matrix(&a, &b, &backend)?;
            add_distance_outputs(&mut out, &m, threshold_median);
            o.out_dir
        }
        Command::Train { input, backend, training, out: o } => {
            input.validate()?;
            backend.validate()?;
            training.validate()?;
            let vectors = input.load()?;
            let t = run_training(&vectors, &backend, &training)?;
            add_training_outputs(&mut out, &vectors, &t, &backend, &training);
            o.out_dir
        }
        Command::Report { corpus, backend, training, threshold_median, out: o } => {
            corpus.validate()?;
            backend.validate()?;
            training.validate()?;
            let (_, vocab, vectors) = corpus.load()?;
            let samples = bits(&vectors);
            let m = distance_matrix(&samples, &samples, &backend)?;
            let t = run_training(&vectors, &backend, &training)?;
            out.add("vocabulary.json", vocab.to_json());
            out.add("vectors.csv", vectors_to_csv(&vectors));
            add_distance_outputs(&mut out, &m, threshold_median);
            add_training_outputs(&mut out, &vectors, &t, &backend, &training);
            o.out_dir
        }
    };
    if out.files.is_empty() {
        bail!("nothing to write");
    }
    out.write(&dir)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
