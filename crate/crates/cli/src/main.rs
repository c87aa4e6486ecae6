//! `swtag`: train, apply and evaluate sliding-window part-of-speech taggers.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use swtag::{
    analyze, corpus::read_corpus, corpus::read_gold, corpus_stats, eval, learning_curve, AmbiguityInventory,
    AmbiguousText, Lexicon, Model, RuleSet, SyntheticLanguage, SyntheticSpec, TagInventory, TaggerConfig,
    TrainOptions, WindowSpec,
};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Format { path: PathBuf, source: swtag::Error },
    #[error(transparent)]
    Lib(#[from] swtag::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "swtag", version, about = "Unsupervised sliding-window part-of-speech tagging")]
struct Cli {
    /// Log more detail (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a tagger on an untagged corpus and write a model file.
    Train(TrainArgs),
    /// Tag a corpus with a trained model, one tag per token line.
    Tag(TagArgs),
    /// Tag a gold-standard file and report accuracy.
    Eval(EvalArgs),
    /// Print word count, distinct ambiguity classes and ambiguity rate.
    Stats(StatsArgs),
    /// Learning curves for several taggers, written as CSV and SVG.
    Sweep(SweepArgs),
    /// Write a tagset, lexicon, rules and corpora sampled from a synthetic language.
    Synth(SynthArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Sw,
    Lsw,
    Hmm,
}

#[derive(Args, Debug)]
struct Inventory {
    /// Tag set file: one tag per line, `open:` marks open-class tags.
    #[arg(long)]
    tagset: PathBuf,
    /// Lexicon file: `surface<TAB>tag1,tag2,...` per line.
    #[arg(long)]
    lexicon: PathBuf,
    /// Treat tokens of this tag's singleton class as document boundaries.
    #[arg(long, value_name = "TAG")]
    sentence_delim: Option<String>,
}

#[derive(Args, Debug, Clone, Copy)]
struct Training {
    /// Maximum number of re-estimation iterations.
    #[arg(long, default_value_t = 8)]
    iterations: usize,
    /// Stop early once the largest relative parameter change is below this.
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
}

impl Training {
    fn options(&self) -> CliResult<TrainOptions> {
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return Err(CliError::Config("--epsilon must be non-negative".into()));
        }
        Ok(TrainOptions {
            iterations: self.iterations,
            epsilon: self.epsilon,
        })
    }
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long, value_enum)]
    tagger: Kind,
    /// Context window as `-N,+M`, e.g. `-1,+1`; required for sw and lsw.
    #[arg(long, allow_hyphen_values = true)]
    window: Option<String>,
    /// Forbid/enforce rules file (lsw and hmm only).
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Untagged training corpus.
    #[arg(long)]
    corpus: PathBuf,
    /// Where to write the model.
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    inventory: Inventory,
    #[command(flatten)]
    training: Training,
    /// Accepted for symmetry with the other commands; training is deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct TagArgs {
    #[arg(long)]
    model: PathBuf,
    /// Corpus to tag.
    #[arg(long)]
    corpus: PathBuf,
    /// Output file; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    inventory: Inventory,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    /// Gold file: `surface<TAB>tag` per line.
    #[arg(long)]
    gold: PathBuf,
    #[command(flatten)]
    inventory: Inventory,
}

#[derive(Args, Debug)]
struct StatsArgs {
    /// Corpus file (untagged, pre-disambiguated, or gold with `--gold-format`).
    #[arg(long)]
    corpus: PathBuf,
    /// Read the corpus as `surface<TAB>gold` lines.
    #[arg(long)]
    gold_format: bool,
    #[command(flatten)]
    inventory: Inventory,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Taggers to compare: `sw:-1,+1`, `lsw:-1,+1`, `lsw-no-rules:-1,+1`,
    /// `hmm` or `hmm-no-rules`. Repeatable.
    #[arg(long = "tagger", allow_hyphen_values = true)]
    taggers: Vec<String>,
    /// Training sizes in tokens, comma-separated and increasing.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    /// Output path prefix; writes `<prefix>.csv`, `<prefix>.svg` and
    /// `<prefix>.params.csv`.
    #[arg(long)]
    output: PathBuf,
    /// Untagged training corpus (file mode).
    #[arg(long, requires_all = ["test", "tagset", "lexicon"], conflicts_with = "synth_spec")]
    train: Option<PathBuf>,
    /// Gold test file (file mode).
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long)]
    tagset: Option<PathBuf>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    rules: Option<PathBuf>,
    #[arg(long, value_name = "TAG")]
    sentence_delim: Option<String>,
    /// Synthetic language spec; corpora are sampled per seed.
    #[arg(long)]
    synth_spec: Option<PathBuf>,
    /// Number of seeds in synthetic mode; adds `<prefix>.summary.csv`.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    /// Base seed in synthetic mode; defaults to the seed in the synthetic spec file.
    #[arg(long)]
    seed: Option<u64>,
    /// Test-set size in synthetic mode.
    #[arg(long, default_value_t = 10_000)]
    test_length: usize,
    #[command(flatten)]
    training: Training,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Synthetic language spec.
    #[arg(long)]
    spec: PathBuf,
    /// Output directory.
    #[arg(long)]
    output: PathBuf,
    /// Training corpus length; defaults to the length in the synthetic spec file.
    #[arg(long)]
    length: Option<usize>,
    /// Test corpus length.
    #[arg(long, default_value_t = 10_000)]
    test_length: usize,
    /// Seed; defaults to the seed in the synthetic spec file.
    #[arg(long)]
    seed: Option<u64>,
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn create(path: &Path) -> CliResult<BufWriter<fs::File>> {
    fs::File::create(path).map(BufWriter::new).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn in_file<T>(path: &Path, r: swtag::Result<T>) -> CliResult<T> {
    r.map_err(|source| CliError::Format {
        path: path.to_path_buf(),
        source,
    })
}

fn load_tags(path: &Path) -> CliResult<TagInventory> {
    in_file(path, TagInventory::parse(&read(path)?))
}

fn load_rules(path: Option<&Path>, tags: &TagInventory) -> CliResult<Option<RuleSet>> {
    path.map(|p| in_file(p, RuleSet::parse(&read(p)?, tags))).transpose()
}

fn parse_window(s: &str) -> CliResult<WindowSpec> {
    s.parse().map_err(|e: swtag::Error| CliError::Config(format!("--window {s}: {e}")))
}

fn split_documents(
    text: AmbiguousText,
    delim: Option<&str>,
    tags: &TagInventory,
    classes: &AmbiguityInventory,
) -> CliResult<AmbiguousText> {
    let Some(name) = delim else { return Ok(text) };
    let tag = tags
        .id(name)
        .map_err(|e| CliError::Config(format!("--sentence-delim: {e}")))?;
    Ok(match classes.find(&[tag]) {
        Some(class) => text.split_at(class),
        None => {
            log::warn!("no word has the single tag `{name}`; documents are not split");
            text
        }
    })
}

fn load_text(
    path: &Path,
    gold: bool,
    lexicon: &Lexicon,
    tags: &TagInventory,
    classes: &mut AmbiguityInventory,
    delim: Option<&str>,
) -> CliResult<AmbiguousText> {
    let raw = read(path)?;
    let docs = in_file(path, if gold { read_gold(&raw) } else { read_corpus(&raw) })?;
    let text = in_file(path, analyze(&docs, lexicon, tags, classes))?;
    split_documents(text, delim, tags, classes)
}

fn load_model(path: &Path, tags: &TagInventory) -> CliResult<(Model, AmbiguityInventory)> {
    in_file(path, Model::from_text(&read(path)?, tags))
}

fn train(args: TrainArgs) -> CliResult<()> {
    let opts = args.training.options()?;
    let window = args.window.as_deref().map(parse_window).transpose()?;
    let tags = load_tags(&args.inventory.tagset)?;
    let rules = load_rules(args.rules.as_deref(), &tags)?;
    let config = match (args.tagger, window) {
        (Kind::Sw, Some(spec)) if rules.is_none() => TaggerConfig::Sw { spec },
        (Kind::Sw, Some(_)) => return Err(CliError::Config("the sw tagger takes no --rules".into())),
        (Kind::Lsw, Some(spec)) => TaggerConfig::Lsw { spec, rules },
        (Kind::Hmm, None) => TaggerConfig::Hmm { rules },
        (Kind::Hmm, Some(_)) => return Err(CliError::Config("--window does not apply to the hmm tagger".into())),
        (_, None) => return Err(CliError::Config("--window is required for sw and lsw".into())),
    };
    let mut classes = AmbiguityInventory::new(&tags);
    let lexicon = in_file(
        &args.inventory.lexicon,
        Lexicon::parse(&read(&args.inventory.lexicon)?, &tags, &mut classes),
    )?;
    let text = load_text(
        &args.corpus,
        false,
        &lexicon,
        &tags,
        &mut classes,
        args.inventory.sentence_delim.as_deref(),
    )?;
    if text.is_empty() {
        return Err(CliError::Config(format!("{}: corpus is empty", args.corpus.display())));
    }
    let model = config.train(&text, &tags, &classes, &opts)?;
    log::info!(
        "trained {} on {} tokens: {} parameters",
        config.label(),
        text.len(),
        model.parameter_count()
    );
    write(&args.model, &model.to_text(&tags, &classes))
}

/// Model plus inventories ready to analyze new text.
fn prepare(model: &Path, inv: &Inventory) -> CliResult<(Model, TagInventory, AmbiguityInventory, Lexicon)> {
    let tags = load_tags(&inv.tagset)?;
    let (model, mut classes) = load_model(model, &tags)?;
    let lexicon = in_file(&inv.lexicon, Lexicon::parse(&read(&inv.lexicon)?, &tags, &mut classes))?;
    Ok((model, tags, classes, lexicon))
}

fn tag(args: TagArgs) -> CliResult<()> {
    let (model, tags, mut classes, lexicon) = prepare(&args.model, &args.inventory)?;
    let text = load_text(
        &args.corpus,
        false,
        &lexicon,
        &tags,
        &mut classes,
        args.inventory.sentence_delim.as_deref(),
    )?;
    let out = model.tag(&text, &classes);
    let mut buf = String::new();
    let mut next = out.iter();
    for (i, doc) in text.documents().enumerate() {
        if i > 0 {
            buf.push('\n');
        }
        for _ in doc {
            buf.push_str(tags.name(*next.next().expect("one tag per token")));
            buf.push('\n');
        }
    }
    match &args.output {
        Some(path) => write(path, &buf),
        None => io::stdout()
            .write_all(buf.as_bytes())
            .map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}

fn evaluate(args: EvalArgs) -> CliResult<()> {
    let (model, tags, mut classes, lexicon) = prepare(&args.model, &args.inventory)?;
    let gold = load_text(
        &args.gold,
        true,
        &lexicon,
        &tags,
        &mut classes,
        args.inventory.sentence_delim.as_deref(),
    )?;
    let report = eval::accuracy(&model.tag(&gold, &classes), &gold, &classes)?;
    println!("{report}");
    Ok(())
}

fn stats(args: StatsArgs) -> CliResult<()> {
    let tags = load_tags(&args.inventory.tagset)?;
    let mut classes = AmbiguityInventory::new(&tags);
    let lexicon = in_file(
        &args.inventory.lexicon,
        Lexicon::parse(&read(&args.inventory.lexicon)?, &tags, &mut classes),
    )?;
    let text = load_text(&args.corpus, args.gold_format, &lexicon, &tags, &mut classes, None)?;
    println!("{}", corpus_stats(&text, &classes));
    Ok(())
}

fn parse_tagger(s: &str, rules: Option<&RuleSet>) -> CliResult<TaggerConfig> {
    let (name, window) = match s.split_once(':') {
        Some((n, w)) => (n, Some(parse_window(w)?)),
        None => (s, None),
    };
    let need_rules = || {
        rules
            .cloned()
            .map(Some)
            .ok_or_else(|| CliError::Config(format!("tagger `{s}` needs a rules file")))
    };
    match (name, window) {
        ("sw", Some(spec)) => Ok(TaggerConfig::Sw { spec }),
        ("lsw", Some(spec)) => Ok(TaggerConfig::Lsw { spec, rules: need_rules()? }),
        ("lsw-no-rules", Some(spec)) => Ok(TaggerConfig::Lsw { spec, rules: None }),
        ("hmm", None) => Ok(TaggerConfig::Hmm { rules: need_rules()? }),
        ("hmm-no-rules", None) => Ok(TaggerConfig::Hmm { rules: None }),
        _ => Err(CliError::Config(format!(
            "unknown tagger `{s}`; expected sw:W, lsw:W, lsw-no-rules:W, hmm or hmm-no-rules"
        ))),
    }
}

fn sweep_configs(specs: &[String], rules: Option<&RuleSet>) -> CliResult<Vec<TaggerConfig>> {
    let defaults: Vec<String> = if rules.is_some() {
        vec!["sw:-1,+1".into(), "lsw:-1,+1".into(), "lsw-no-rules:-1,+1".into(), "hmm".into()]
    } else {
        vec!["sw:-1,+1".into(), "lsw-no-rules:-1,+1".into(), "hmm-no-rules".into()]
    };
    let specs = if specs.is_empty() { &defaults } else { specs };
    specs.iter().map(|s| parse_tagger(s, rules)).collect()
}

fn with_extension(prefix: &Path, ext: &str) -> PathBuf {
    let mut name = prefix.as_os_str().to_owned();
    name.push(ext);
    PathBuf::from(name)
}

fn write_curves(prefix: &Path, curves: &[eval::LearningCurve]) -> CliResult<()> {
    let csv = with_extension(prefix, ".csv");
    in_file(&csv, eval::write_csv(curves, create(&csv)?))?;
    let params = with_extension(prefix, ".params.csv");
    in_file(&params, eval::write_parameter_csv(curves, create(&params)?))?;
    let svg = with_extension(prefix, ".svg");
    in_file(&svg, eval::write_svg(curves, create(&svg)?))
}

fn sweep(args: SweepArgs) -> CliResult<()> {
    let opts = args.training.options()?;
    if let Some(spec_path) = &args.synth_spec {
        return sweep_synthetic(&args, spec_path, &opts);
    }
    let (Some(train), Some(test), Some(tagset), Some(lexicon)) = (&args.train, &args.test, &args.tagset, &args.lexicon)
    else {
        return Err(CliError::Config(
            "sweep needs either --synth-spec or --train, --test, --tagset and --lexicon".into(),
        ));
    };
    let tags = load_tags(tagset)?;
    let rules = load_rules(args.rules.as_deref(), &tags)?;
    let configs = sweep_configs(&args.taggers, rules.as_ref())?;
    let mut classes = AmbiguityInventory::new(&tags);
    let lexicon = in_file(lexicon, Lexicon::parse(&read(lexicon)?, &tags, &mut classes))?;
    let delim = args.sentence_delim.as_deref();
    let train_text = load_text(train, false, &lexicon, &tags, &mut classes, delim)?;
    let test_text = load_text(test, true, &lexicon, &tags, &mut classes, delim)?;
    let curves = learning_curve(&configs, &train_text, &test_text, &args.sizes, &tags, &classes, &opts)
        .map_err(size_as_config)?;
    write_curves(&args.output, &curves)
}

fn size_as_config(e: swtag::Error) -> CliError {
    match e {
        swtag::Error::SizeExceedsCorpus { .. } | swtag::Error::Invalid(_) => CliError::Config(e.to_string()),
        other => CliError::Lib(other),
    }
}

fn sweep_synthetic(args: &SweepArgs, spec_path: &Path, opts: &TrainOptions) -> CliResult<()> {
    let spec = in_file(spec_path, SyntheticSpec::parse(&read(spec_path)?))?;
    let lang = in_file(spec_path, SyntheticLanguage::new(&spec))?;
    let rules = if spec.rules.is_empty() {
        None
    } else {
        Some(in_file(spec_path, RuleSet::parse(&spec.rules.join("\n"), &lang.tags))?)
    };
    let configs = sweep_configs(&args.taggers, rules.as_ref())?;
    let length = *args.sizes.last().expect("sizes is required");
    let base = args.seed.unwrap_or(spec.seed);
    let mut runs = Vec::new();
    for i in 0..args.seeds.max(1) {
        let (train, test) = synthetic_pair(&lang, length, args.test_length, base + i);
        let curves = learning_curve(&configs, &train, &test, &args.sizes, &lang.tags, &lang.classes, opts)
            .map_err(size_as_config)?;
        runs.push(curves);
    }
    write_curves(&args.output, &runs[0])?;
    if runs.len() > 1 {
        for (i, run) in runs.iter().enumerate().skip(1) {
            write_curves(&with_extension(&args.output, &format!(".seed{}", base + i as u64)), run)?;
        }
        let rows = eval::summarize(&runs)?;
        let path = with_extension(&args.output, ".summary.csv");
        in_file(&path, eval::write_summary_csv(&rows, create(&path)?))?;
    }
    Ok(())
}

/// Training corpus from `seed`, test corpus from a seed derived from it.
fn synthetic_pair(
    lang: &SyntheticLanguage,
    train_length: usize,
    test_length: usize,
    seed: u64,
) -> (AmbiguousText, AmbiguousText) {
    let (_, train) = lang.generate(train_length, seed);
    let (test, _) = lang.generate(test_length, seed ^ 0x5eed_7e57_0000_0000);
    (train, test)
}

fn corpus_text(text: &AmbiguousText, tags: &TagInventory, gold: bool) -> String {
    let mut out = String::new();
    for (i, doc) in text.documents().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for tok in doc {
            out.push_str(&tok.surface);
            if gold {
                out.push('\t');
                out.push_str(tags.name(tok.gold.expect("generated text is gold-tagged")));
            }
            out.push('\n');
        }
    }
    out
}

fn synth(args: SynthArgs) -> CliResult<()> {
    let spec = in_file(&args.spec, SyntheticSpec::parse(&read(&args.spec)?))?;
    let lang = in_file(&args.spec, SyntheticLanguage::new(&spec))?;
    let rules = in_file(&args.spec, RuleSet::parse(&spec.rules.join("\n"), &lang.tags))?;
    let (train, test) = synthetic_pair(
        &lang,
        args.length.unwrap_or(spec.length),
        args.test_length,
        args.seed.unwrap_or(spec.seed),
    );
    fs::create_dir_all(&args.output).map_err(|source| CliError::Io {
        path: args.output.clone(),
        source,
    })?;
    let dir = &args.output;
    write(&dir.join("tagset.txt"), &lang.tags.to_text())?;
    write(&dir.join("lexicon.txt"), &lang.lexicon.to_text(&lang.tags, &lang.classes))?;
    write(&dir.join("rules.txt"), &rules.to_text(&lang.tags))?;
    write(&dir.join("train.txt"), &corpus_text(&train, &lang.tags, false))?;
    write(&dir.join("test.txt"), &corpus_text(&test, &lang.tags, true))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    let result = match cli.command {
        Command::Train(a) => train(a),
        Command::Tag(a) => tag(a),
        Command::Eval(a) => evaluate(a),
        Command::Stats(a) => stats(a),
        Command::Sweep(a) => sweep(a),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("swtag: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
