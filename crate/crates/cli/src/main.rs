mod config;

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use boundseg::corpus::{
    corpus_checksum, labels_from_punctuation, read_corpus, synth_generate, synth_vocabulary, write_corpus, Corpus,
    CorpusFormat, Group, LabeledText, SynthSpec, UNTAGGED,
};
use boundseg::evaluation::{cross_validated_eval, robustness_eval, AlphaTuning, EvalConfig, EvalReport};
use boundseg::features::{load_embeddings, write_embeddings, EmbeddingTable, Vocab};
use boundseg::model::{load_model, save_model, FeatureSet, Hyperparams, TrainedSegmenter, Variant};
use boundseg::training::{train_segmenter, EpochReport, SegmenterConfig, TrainConfig};
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use config::render_config;

#[derive(Debug)]
pub enum CliError {
    /// Rejected command line, already rendered by the argument parser.
    Parse(String),
    Usage(String),
    Core(boundseg::Error),
}

impl From<boundseg::Error> for CliError {
    fn from(e: boundseg::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) | CliError::Usage(_) => 1,
            CliError::Core(boundseg::Error::NonFinite { .. }) => 3,
            CliError::Core(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "{}", m.trim_end()),
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Core(e) => write!(f, "error: {e}"),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Sentence boundary detection for speech transcripts.
#[derive(Debug, Parser)]
#[command(name = "boundseg", version, args_override_self = true)]
struct Cli {
    /// Master random seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// `key = value` file supplying defaults for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for cross-validation folds.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    /// error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "info")]
    log_level: log::LevelFilter,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Train a segmenter and write the model file.
    Train(TrainArgs),
    /// Insert sentence boundaries into transcripts.
    Segment(SegmentArgs),
    /// Cross-validated or cross-corpus evaluation.
    Eval(EvalArgs),
    /// Generate a synthetic corpus with planted boundary cues.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Tsv,
    Tokens,
}

impl From<FormatArg> for CorpusFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Tsv => CorpusFormat::Tsv,
            FormatArg::Tokens => CorpusFormat::Tokens,
        }
    }
}

#[derive(Debug, Clone, Args)]
struct ModelArgs {
    /// rcnn, mlp, cnn or rnn.
    #[arg(long, default_value = "rcnn")]
    variant: Variant,

    /// `all` or a `+`-joined subset of embeddings, pos, prosody. Defaults to all
    /// when the corpus has prosody and embeddings+pos otherwise.
    #[arg(long)]
    features: Option<FeatureSet>,

    /// Pretrained word vectors (`<count> <dim>` header, then `word v1 … vdim`).
    #[arg(long)]
    embeddings: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "tsv")]
    format: FormatArg,

    #[arg(long, default_value_t = 20)]
    epochs: usize,

    #[arg(long, default_value_t = 8)]
    batch_size: usize,

    #[arg(long, default_value_t = 50)]
    bucket_width: usize,

    /// RMSProp learning rate.
    #[arg(long, default_value_t = 0.001)]
    eta: f64,

    /// Lexical convolution filters.
    #[arg(long, default_value_t = 100)]
    filters: usize,

    /// Lexical recurrent units.
    #[arg(long, default_value_t = 100)]
    units: usize,

    #[arg(long, default_value_t = 8)]
    prosodic_filters: usize,

    #[arg(long, default_value_t = 100)]
    prosodic_units: usize,

    /// Word vector size when no embeddings file is given.
    #[arg(long, default_value_t = 50)]
    word_dim: usize,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Corpus file or directory.
    #[arg(long)]
    corpus: PathBuf,

    /// Model file to write.
    #[arg(long)]
    out: PathBuf,

    /// Fix the fusion weight instead of tuning it.
    #[arg(long)]
    alpha: Option<f64>,

    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Text,
    Tsv,
}

#[derive(Debug, Args)]
struct SegmentArgs {
    #[arg(long)]
    model: PathBuf,

    /// Transcript: a `.tsv` corpus file, or plain text with space-separated tokens.
    #[arg(long)]
    input: PathBuf,

    /// Override the stored fusion weight; 1.0 uses the lexical model alone.
    #[arg(long)]
    alpha: Option<f64>,

    #[arg(long, value_enum, default_value = "text")]
    emit: Emit,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Corpus for k-fold cross-validation.
    #[arg(long, conflicts_with_all = ["train_corpus", "test_corpus"], required_unless_present = "train_corpus")]
    corpus: Option<PathBuf>,

    /// Training corpus of a cross-corpus evaluation.
    #[arg(long, requires = "test_corpus")]
    train_corpus: Option<PathBuf>,

    /// Scoring corpus of a cross-corpus evaluation.
    #[arg(long, requires = "train_corpus")]
    test_corpus: Option<PathBuf>,

    #[arg(long, default_value_t = 5)]
    folds: usize,

    /// Fixed fusion weight. Without it, cross-validation tunes one weight on
    /// the pooled out-of-fold predictions.
    #[arg(long)]
    alpha: Option<f64>,

    /// Tune the fusion weight separately on each fold's training split.
    #[arg(long, conflicts_with = "alpha")]
    per_fold_alpha: bool,

    /// Append the tab-separated report line to this file.
    #[arg(long)]
    report: Option<PathBuf>,

    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,

    #[arg(long, default_value = "synth")]
    name: String,

    #[arg(long, default_value_t = 60)]
    texts: usize,

    #[arg(long, default_value_t = 13.0)]
    mean_sentence_len: f64,

    #[arg(long, default_value_t = 10.0)]
    sentences_per_text: f64,

    /// Token planted at sentence ends.
    #[arg(long, default_value = "então")]
    cue: String,

    #[arg(long, default_value_t = 0.95)]
    cue_reliability: f64,

    /// Distance of the cue from the sentence-final word.
    #[arg(long, default_value_t = 0)]
    cue_offset: usize,

    /// Pause-duration shift at boundaries, in noise standard deviations.
    #[arg(long, default_value_t = 2.0)]
    prosody_strength: f64,

    #[arg(long, default_value_t = 200)]
    vocab_size: usize,

    /// CTL, MCI, AD or OTHER.
    #[arg(long, default_value = "CTL")]
    group: Group,

    /// Size of the random word vectors written to `embeddings.txt`.
    #[arg(long, default_value_t = 50)]
    embedding_dim: usize,
}

fn require_exists(path: &Path, what: &str) -> CliResult<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{what} {} does not exist", path.display())))
    }
}

fn check_alpha(alpha: Option<f64>) -> CliResult<()> {
    match alpha {
        Some(a) if !(0.0..=1.0).contains(&a) => Err(CliError::Usage(format!("--alpha {a} outside [0, 1]"))),
        _ => Ok(()),
    }
}

fn load_corpus(path: &Path, format: FormatArg) -> CliResult<Corpus> {
    require_exists(path, "corpus")?;
    let corpus = read_corpus(path, format.into())?;
    if corpus.is_empty() {
        return Err(CliError::Usage(format!("no corpus files found in {}", path.display())));
    }
    Ok(corpus)
}

impl ModelArgs {
    fn embeddings(&self) -> CliResult<Option<EmbeddingTable>> {
        match &self.embeddings {
            None => Ok(None),
            Some(p) => {
                require_exists(p, "embeddings file")?;
                Ok(Some(load_embeddings(p)?))
            }
        }
    }

    fn segmenter_config(&self, seed: u64, alpha: Option<f64>, has_prosody: bool) -> CliResult<SegmenterConfig> {
        let features = self.features.unwrap_or(if has_prosody {
            FeatureSet::ALL
        } else {
            FeatureSet::LEXICAL
        });
        if self.epochs == 0 || self.batch_size == 0 || self.bucket_width == 0 {
            return Err(CliError::Usage("--epochs, --batch-size and --bucket-width must be positive".into()));
        }
        let lexical = Hyperparams {
            word_dim: self.word_dim,
            eta: self.eta,
            ..Hyperparams::lexical().with_sizes(self.filters, self.units)
        };
        let prosodic = Hyperparams {
            eta: self.eta,
            ..Hyperparams::prosodic().with_sizes(self.prosodic_filters, self.prosodic_units)
        };
        for h in [&lexical, &prosodic] {
            h.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        }
        Ok(SegmenterConfig {
            variant: self.variant,
            features,
            lexical,
            prosodic,
            train: TrainConfig {
                epochs: self.epochs,
                batch_size: self.batch_size,
                bucket_width: self.bucket_width,
                seed,
                ..TrainConfig::default()
            },
            alpha,
        })
    }

    fn manifest(&self, cfg: &SegmenterConfig) -> Vec<(String, String)> {
        let mut pairs = vec![
            ("seed", cfg.train.seed.to_string()),
            ("variant", cfg.variant.to_string()),
            ("features", cfg.features.to_string()),
            ("format", format!("{:?}", self.format).to_lowercase()),
            ("epochs", self.epochs.to_string()),
            ("batch-size", self.batch_size.to_string()),
            ("bucket-width", self.bucket_width.to_string()),
            ("eta", self.eta.to_string()),
            ("filters", self.filters.to_string()),
            ("units", self.units.to_string()),
            ("prosodic-filters", self.prosodic_filters.to_string()),
            ("prosodic-units", self.prosodic_units.to_string()),
            ("word-dim", self.word_dim.to_string()),
        ];
        if let Some(e) = &self.embeddings {
            pairs.push(("embeddings", e.display().to_string()));
        }
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}

fn log_epochs(name: &str, reports: &[EpochReport]) {
    if reports.is_empty() {
        return;
    }
    log::info!("{name} model: epoch\tmean_loss\telapsed_ms");
    for r in reports {
        log::info!("{r}");
    }
}

fn cmd_train(seed: u64, args: TrainArgs) -> CliResult<()> {
    check_alpha(args.alpha)?;
    let corpus = load_corpus(&args.corpus, args.model.format)?;
    let embeddings = args.model.embeddings()?;
    let cfg = args.model.segmenter_config(seed, args.alpha, corpus.has_prosody())?;
    log::info!("resolved configuration: {cfg:?}");
    let texts: Vec<&LabeledText> = corpus.texts.iter().collect();
    let run = train_segmenter(&texts, embeddings.as_ref(), &cfg)?;
    log_epochs("lexical", &run.lexical_log);
    log_epochs("prosodic", &run.prosodic_log);
    save_model(&run.segmenter, &args.out)?;

    let mut manifest = args.model.manifest(&cfg);
    manifest.push(("corpus".into(), args.corpus.display().to_string()));
    if let Some(a) = args.alpha {
        manifest.push(("alpha".into(), a.to_string()));
    }
    let mut body = format!(
        "# trained fusion weight {}\n# corpus {} crc32 {:08x}, {} texts\n",
        run.segmenter.alpha,
        corpus.name,
        corpus_checksum(&corpus),
        corpus.len()
    );
    body.push_str(&render_config(&manifest));
    fs::write(manifest_path(&args.out), body)?;
    println!(
        "wrote {} ({} {}, alpha {:.2})",
        args.out.display(),
        run.segmenter.variant,
        run.segmenter.features,
        run.segmenter.alpha
    );
    Ok(())
}

fn manifest_path(model: &Path) -> PathBuf {
    let mut name = model.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest");
    model.with_file_name(name)
}

/// Reads the texts to segment. Plain-text input may carry punctuation, which is ignored.
fn read_input(path: &Path) -> CliResult<Vec<LabeledText>> {
    require_exists(path, "input file")?;
    if path.extension().is_some_and(|e| e == "tsv") {
        if fs::read_to_string(path)?.trim().is_empty() {
            return Ok(Vec::new());
        }
        return Ok(read_corpus(path, CorpusFormat::Tsv)?.texts);
    }
    let raw = fs::read_to_string(path)?;
    if raw.split_whitespace().next().is_none() {
        return Ok(Vec::new());
    }
    let (tokens, labels) = labels_from_punctuation(&raw)?;
    let tags = vec![UNTAGGED.to_string(); tokens.len()];
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(vec![LabeledText::new(id, tokens, tags, None, labels, Group::Other)?])
}

fn segment_text(model: &TrainedSegmenter, text: &LabeledText, alpha: f64, emit: Emit) -> CliResult<String> {
    if model.prosodic.is_some() && alpha < 1.0 && !text.has_prosody() {
        return Err(CliError::Core(boundseg::Error::Unsupported(format!(
            "the model fuses prosody (alpha = {alpha:.2}) but {:?} has no prosodic features; rerun with --alpha 1.0 to use the lexical model alone",
            text.id
        ))));
    }
    let fused = model.segment_with_alpha(text, alpha)?;
    let mut out = String::new();
    match emit {
        Emit::Text => {
            let mut parts = Vec::with_capacity(text.len() * 2);
            for (tok, label) in text.tokens.iter().zip(&fused.labels) {
                parts.push(tok.as_str());
                if *label == boundseg::corpus::Label::B {
                    parts.push(".");
                }
            }
            out.push_str(&parts.join(" "));
            out.push('\n');
        }
        Emit::Tsv => {
            for ((tok, p), label) in text.tokens.iter().zip(fused.boundary_probs()).zip(&fused.labels) {
                let _ = writeln!(out, "{tok}\t{p:.6}\t{label}");
            }
        }
    }
    Ok(out)
}

fn cmd_segment(args: SegmentArgs) -> CliResult<()> {
    check_alpha(args.alpha)?;
    require_exists(&args.model, "model file")?;
    let model = load_model(&args.model)?;
    if args.alpha.is_some_and(|a| a > 0.0) && model.lexical.is_none() {
        return Err(CliError::Usage("this model has no lexical network; --alpha must be 0".into()));
    }
    let alpha = args.alpha.unwrap_or(model.alpha);
    let texts = read_input(&args.input)?;
    let mut stdout = std::io::stdout().lock();
    for (i, text) in texts.iter().enumerate() {
        if i > 0 && args.emit == Emit::Tsv {
            writeln!(stdout)?;
        }
        stdout.write_all(segment_text(&model, text, alpha, args.emit)?.as_bytes())?;
    }
    Ok(())
}

fn emit_report(report: &EvalReport, path: Option<&Path>) -> CliResult<()> {
    print!("{}", report.table());
    println!("{}", report.line());
    if let Some(p) = path {
        let mut f = fs::OpenOptions::new().create(true).append(true).open(p)?;
        writeln!(f, "{}", report.line())?;
    }
    Ok(())
}

fn cmd_eval(seed: u64, jobs: usize, args: EvalArgs) -> CliResult<()> {
    check_alpha(args.alpha)?;
    if jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let embeddings = args.model.embeddings()?;
    let report = match (&args.corpus, &args.train_corpus, &args.test_corpus) {
        (Some(path), None, None) => {
            if args.folds < 2 {
                return Err(CliError::Usage("--folds must be at least 2".into()));
            }
            let corpus = load_corpus(path, args.model.format)?;
            let segmenter = args.model.segmenter_config(seed, None, corpus.has_prosody())?;
            let tuning = match (args.alpha, args.per_fold_alpha) {
                (Some(a), _) => AlphaTuning::Fixed(a),
                (None, true) => AlphaTuning::PerFold,
                (None, false) => AlphaTuning::Pooled,
            };
            let cfg = EvalConfig {
                segmenter,
                folds: args.folds,
                jobs,
                tuning,
            };
            log::info!("resolved configuration: {cfg:?}");
            cross_validated_eval(&corpus, embeddings.as_ref(), &cfg)?
        }
        (None, Some(train), Some(test)) => {
            if args.per_fold_alpha {
                return Err(CliError::Usage("--per-fold-alpha applies only to cross-validation".into()));
            }
            let train = load_corpus(train, args.model.format)?;
            let test = load_corpus(test, args.model.format)?;
            let both = train.has_prosody() && test.has_prosody();
            let cfg = args.model.segmenter_config(seed, args.alpha, both)?;
            log::info!("resolved configuration: {cfg:?}");
            robustness_eval(&train, &test, embeddings.as_ref(), &cfg)?
        }
        _ => {
            return Err(CliError::Usage(
                "give either --corpus or both --train-corpus and --test-corpus".into(),
            ))
        }
    };
    emit_report(&report, args.report.as_deref())
}

fn cmd_synth(seed: u64, args: SynthArgs) -> CliResult<()> {
    if args.texts == 0 {
        return Err(CliError::Usage("--texts must be at least 1".into()));
    }
    if args.embedding_dim == 0 {
        return Err(CliError::Usage("--embedding-dim must be at least 1".into()));
    }
    let spec = SynthSpec {
        name: args.name.clone(),
        n_texts: args.texts,
        mean_sentence_len: args.mean_sentence_len,
        mean_sentences_per_text: args.sentences_per_text,
        boundary_cue_token: args.cue.clone(),
        cue_reliability: args.cue_reliability,
        cue_offset: args.cue_offset,
        prosody_cue_strength: args.prosody_strength,
        vocab_size: args.vocab_size,
        group: args.group,
        seed,
    };
    let corpus = synth_generate(&spec).map_err(|e| match e {
        boundseg::Error::Contract(m) => CliError::Usage(m),
        other => other.into(),
    })?;
    let files = write_corpus(&corpus, &args.out, CorpusFormat::Tsv)?;

    let mut words = synth_vocabulary(args.vocab_size, &args.cue);
    words.push(args.cue.clone());
    let vocab = Vocab::new(words)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    write_embeddings(
        &EmbeddingTable::glorot(vocab, args.embedding_dim, &mut rng),
        &args.out.join("embeddings.txt"),
    )?;

    let manifest: Vec<(String, String)> = [
        ("seed", seed.to_string()),
        ("name", args.name),
        ("texts", args.texts.to_string()),
        ("mean-sentence-len", args.mean_sentence_len.to_string()),
        ("sentences-per-text", args.sentences_per_text.to_string()),
        ("cue", args.cue),
        ("cue-reliability", args.cue_reliability.to_string()),
        ("cue-offset", args.cue_offset.to_string()),
        ("prosody-strength", args.prosody_strength.to_string()),
        ("vocab-size", args.vocab_size.to_string()),
        ("group", args.group.to_string()),
        ("embedding-dim", args.embedding_dim.to_string()),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    let body = format!(
        "# synthetic corpus, crc32 {:08x}\n{}",
        corpus_checksum(&corpus),
        render_config(&manifest)
    );
    fs::write(args.out.join("manifest.conf"), body)?;
    println!("wrote {} texts to {}", files.len(), args.out.display());
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    log::debug!("resolved command line: {cli:?}");
    match cli.command {
        Cmd::Train(a) => cmd_train(cli.seed, a),
        Cmd::Segment(a) => cmd_segment(a),
        Cmd::Eval(a) => cmd_eval(cli.seed, cli.jobs, a),
        Cmd::Synth(a) => cmd_synth(cli.seed, a),
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let parsed = config::merge_config(args, &Cli::command()).and_then(|merged| {
        Cli::try_parse_from(merged).map_err(|e| {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                std::process::exit(0);
            }
            CliError::Parse(e.render().to_string())
        })
    });
    let cli = match parsed {
        Ok(cli) => cli,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(e.exit_code());
        }
    };
    env_logger::Builder::new()
        .filter_level(cli.log_level)
        .format(|buf, record| writeln!(buf, "{}", record.args()))
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
