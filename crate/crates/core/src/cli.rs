//! Command-line front end.
//!
//! Every subcommand reads its settings from flags, optionally backed by a
//! `key = value` config file (`--config`); flags win over the file. The
//! resolved settings are echoed into the output directory as `config.toml`,
//! so a run can be repeated from its outputs alone.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::alignment::{apply_transform, LandmarkStrategy, OrthogonalTransform};
use crate::classifier::OptimizerKind;
use crate::detection::{
    all_distances, calibration_samples, cdf_predictions, cosine_predictions, s4d_predictions,
    select_threshold_loocv, Detection, DetectorSpec, EmpiricalCdf, Targets,
};
use crate::embedding::{intersect, load_frequency_file, load_word2vec_text, AlignedPair, EmbeddingTable, Normalization};
use crate::error::{Error, Result};
use crate::eval::{
    default_ks, rank_shifts, rho_curve_tsv, score, spearman_topk, unique_words, ShiftMetric, SpearmanMode,
};
use crate::io::{fmt_float, read_lines, write_atomic};
use crate::pipeline::{align_with_strategy, running_mean, s4a, s4d_train, Profile, S4Params, S4aInit};
use crate::synth::{generate_synthetic_pair, write_gold_tsv, read_gold_tsv, Rotation, SyntheticSpec};

#[derive(Debug, Parser)]
#[command(name = "semshift", version, about = "Semantic shift detection between two word-embedding spaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic embedding pair with planted shifts.
    Synth(SynthArgs),
    /// Align A to B and write the transform and per-word distances.
    Align(RunArgs),
    /// Classify target words as shifted or stable.
    Detect(DetectArgs),
    /// Run the self-supervised landmark loop.
    Landmarks(RunArgs),
    /// Rank words by shift and compare the ranking with a second alignment.
    Discover(DiscoverArgs),
}

/// Settings shared by the subcommands that read an embedding pair.
///
/// All fields are optional so that flags and config-file values can be merged.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunArgs {
    /// Embedding file for the source space (word2vec text).
    #[arg(long)]
    pub a: Option<PathBuf>,
    /// Embedding file for the target space (word2vec text).
    #[arg(long)]
    pub b: Option<PathBuf>,
    /// `word<TAB>count` file ranking A's vocabulary; defaults to file order.
    #[arg(long)]
    pub freq: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// none | l2 | center-l2 (default l2).
    #[arg(long)]
    pub normalization: Option<String>,
    /// global | top-freq:F | bot-freq:F | cos-split:Q | file:PATH | s4a (default global).
    #[arg(long)]
    pub landmarks: Option<String>,
    /// cos:T | cdf | s4d (default s4d).
    #[arg(long)]
    pub detector: Option<String>,
    /// Parameter preset: detect, english, german, latin or swedish.
    #[arg(long)]
    pub profile: Option<String>,
    /// Starting partition for the landmark loop: all | cosine_split[:Q].
    #[arg(long)]
    pub init: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n_pos: Option<usize>,
    #[arg(long)]
    pub n_neg: Option<usize>,
    /// Perturbation rate.
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// adam | sgd.
    #[arg(long)]
    pub optimizer: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Mini-batch size; 0 trains on each batch in one step.
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    /// `key = value` file with any of the options above.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DetectArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Words to classify, one per line, or `wordA wordB` pairs. Defaults to the common vocabulary.
    #[arg(long)]
    pub targets: Option<PathBuf>,
    /// `word<TAB>label` file; when given, an evaluation report is written.
    #[arg(long)]
    pub gold: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DiscoverArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Size of the top lists compared for unique words.
    #[arg(long, default_value_t = 50)]
    pub k: usize,
    /// Landmark strategy of the comparison alignment.
    #[arg(long, default_value = "global")]
    pub compare: String,
    /// Transform JSON to compare against instead of fitting one.
    #[arg(long)]
    pub compare_transform: Option<PathBuf>,
    /// euclidean | cosine.
    #[arg(long, default_value = "euclidean")]
    pub metric: String,
    /// Score the top-k of both lists together instead of the first list only.
    #[arg(long)]
    pub union: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2000)]
    pub vocab_size: usize,
    #[arg(long, default_value_t = 50)]
    pub dim: usize,
    #[arg(long, default_value_t = 0.1)]
    pub shift_fraction: f64,
    #[arg(long, default_value_t = 0.6)]
    pub shift_strength: f64,
    #[arg(long, default_value_t = 0.05)]
    pub noise_sigma: f64,
    /// Leave B in A's coordinates instead of applying a random rotation.
    #[arg(long)]
    pub no_rotation: bool,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

/// Fully resolved settings of a run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub a: PathBuf,
    pub b: PathBuf,
    pub freq: Option<PathBuf>,
    pub out: PathBuf,
    pub normalization: Normalization,
    pub landmarks: LandmarkStrategy,
    pub detector: DetectorSpec,
    pub init: S4aInit,
    pub params: S4Params,
}

impl RunArgs {
    /// Fills every unset field from `other`.
    fn or(self, other: RunArgs) -> RunArgs {
        RunArgs {
            a: self.a.or(other.a),
            b: self.b.or(other.b),
            freq: self.freq.or(other.freq),
            out: self.out.or(other.out),
            normalization: self.normalization.or(other.normalization),
            landmarks: self.landmarks.or(other.landmarks),
            detector: self.detector.or(other.detector),
            profile: self.profile.or(other.profile),
            init: self.init.or(other.init),
            seed: self.seed.or(other.seed),
            n_pos: self.n_pos.or(other.n_pos),
            n_neg: self.n_neg.or(other.n_neg),
            r: self.r.or(other.r),
            iterations: self.iterations.or(other.iterations),
            lr: self.lr.or(other.lr),
            optimizer: self.optimizer.or(other.optimizer),
            epochs: self.epochs.or(other.epochs),
            batch_size: self.batch_size.or(other.batch_size),
            hidden: self.hidden.or(other.hidden),
            config: self.config.or(other.config),
        }
    }

    /// Merges the config file (if any) under the flags and applies defaults.
    pub fn resolve(self) -> Result<RunConfig> {
        let merged = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                let file: RunArgs = toml::from_str(&text).map_err(|e| Error::Parse {
                    path: path.display().to_string(),
                    line: e.span().map(|s| text[..s.start].lines().count().max(1)).unwrap_or(0),
                    message: e.message().to_string(),
                })?;
                self.or(file)
            }
            None => self,
        };
        let required = |p: Option<PathBuf>, flag: &str| {
            p.ok_or_else(|| Error::InvalidArgument(format!("missing required option --{flag}")))
        };
        let profile: Profile = merged.profile.as_deref().unwrap_or("detect").parse()?;
        let mut params = S4Params::profile(profile);
        if let Some(v) = merged.seed {
            params.seed = v;
        }
        if let Some(v) = merged.n_pos {
            params.n_pos = v;
        }
        if let Some(v) = merged.n_neg {
            params.n_neg = v;
        }
        if let Some(v) = merged.r {
            params.r = v;
        }
        if let Some(v) = merged.iterations {
            params.iterations = v;
        }
        if let Some(v) = merged.lr {
            params.train.lr = v;
        }
        if let Some(v) = merged.optimizer.as_deref() {
            params.train.optimizer = v.parse::<OptimizerKind>()?;
        }
        if let Some(v) = merged.epochs {
            params.train.epochs = v;
        }
        if let Some(v) = merged.batch_size {
            params.train.batch_size = v;
        }
        if let Some(v) = merged.hidden {
            params.train.hidden = v;
        }
        params.validate()?;
        Ok(RunConfig {
            a: required(merged.a, "a")?,
            b: required(merged.b, "b")?,
            freq: merged.freq,
            out: required(merged.out, "out")?,
            normalization: merged.normalization.as_deref().unwrap_or("l2").parse()?,
            landmarks: merged.landmarks.as_deref().unwrap_or("global").parse()?,
            detector: merged.detector.as_deref().unwrap_or("s4d").parse()?,
            init: merged.init.as_deref().unwrap_or("all").parse()?,
            params,
        })
    }
}

impl RunConfig {
    /// The settings as a `key = value` file that `--config` accepts back.
    /// The output directory is left out so that runs into different
    /// directories echo identical files.
    pub fn to_toml(&self) -> String {
        let p = &self.params;
        let optimizer = match p.train.optimizer {
            OptimizerKind::Adam => "adam",
            OptimizerKind::Sgd => "sgd",
        };
        let init = match self.init {
            S4aInit::AllLandmarks => "all".to_string(),
            S4aInit::CosineSplit(q) => format!("cosine_split:{q}"),
        };
        let mut s = String::new();
        let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
        let quoted = |v: &str| toml::Value::String(v.to_string()).to_string();
        kv("a", quoted(&self.a.display().to_string()));
        kv("b", quoted(&self.b.display().to_string()));
        if let Some(f) = &self.freq {
            kv("freq", quoted(&f.display().to_string()));
        }
        kv("normalization", quoted(&self.normalization.to_string()));
        kv("landmarks", quoted(&self.landmarks.to_string()));
        kv("detector", quoted(&self.detector.to_string()));
        kv("init", quoted(&init));
        kv("seed", p.seed.to_string());
        kv("n_pos", p.n_pos.to_string());
        kv("n_neg", p.n_neg.to_string());
        kv("r", toml_float(p.r));
        kv("iterations", p.iterations.to_string());
        kv("lr", toml_float(p.train.lr));
        kv("optimizer", quoted(optimizer));
        kv("epochs", p.train.epochs.to_string());
        kv("batch_size", p.train.batch_size.to_string());
        kv("hidden", p.train.hidden.to_string());
        s
    }

    fn write_echo(&self) -> Result<()> {
        write_atomic(&self.out.join("config.toml"), self.to_toml().as_bytes())
    }
}

/// TOML needs a decimal point or exponent to read a value back as a float.
fn toml_float(x: f64) -> String {
    let s = fmt_float(x);
    if s.contains(['.', 'e', 'E']) || !x.is_finite() {
        s
    } else {
        format!("{s}.0")
    }
}

/// The two normalised tables and their intersection.
pub struct Inputs {
    pub table_a: EmbeddingTable,
    pub table_b: EmbeddingTable,
    pub pair: AlignedPair,
}

pub fn load_inputs(cfg: &RunConfig) -> Result<Inputs> {
    let mut table_a = load_word2vec_text(&cfg.a)?;
    if let Some(f) = &cfg.freq {
        table_a = table_a.with_freq_rank(load_frequency_file(f)?);
    }
    let table_a = table_a.normalized(cfg.normalization)?;
    let table_b = load_word2vec_text(&cfg.b)?.normalized(cfg.normalization)?;
    let pair = intersect(&table_a, &table_b)?;
    Ok(Inputs { table_a, table_b, pair })
}

fn distances_tsv(pair: &AlignedPair) -> Result<String> {
    let mut s = String::from("word\teuclidean\tcosine\n");
    for (i, w) in pair.words().iter().enumerate() {
        let (e, c) = crate::alignment::shift_at(pair, i)?;
        writeln!(s, "{w}\t{}\t{}", fmt_float(e), fmt_float(c)).unwrap();
    }
    Ok(s)
}

fn transform_of(pair: &AlignedPair) -> &OrthogonalTransform {
    pair.transform().expect("pair was aligned")
}

pub fn cmd_align(cfg: &RunConfig) -> Result<()> {
    let inputs = load_inputs(cfg)?;
    let al = align_with_strategy(&inputs.pair, &cfg.landmarks, &cfg.params, cfg.init)?;
    let t = transform_of(&al.pair);
    t.write_json(&cfg.out.join("transform.json"))?;
    write_atomic(&cfg.out.join("distances.tsv"), distances_tsv(&al.pair)?.as_bytes())?;
    cfg.write_echo()?;
    println!("common vocabulary: {} words, dimension {}", inputs.pair.len(), inputs.pair.dim());
    println!("landmarks ({}): {}", cfg.landmarks, al.landmarks.len());
    println!("residual: {}", fmt_float(t.residual));
    Ok(())
}

/// Target list: single words, or `wordA wordB` pairs when any line has two fields.
enum TargetList {
    Words(Vec<String>),
    Pairs(Vec<(String, String)>),
}

fn read_targets(path: &Path) -> Result<TargetList> {
    let rows: Vec<Vec<String>> = read_lines(path)?
        .into_iter()
        .map(|(_, l)| l.split_whitespace().map(str::to_string).collect())
        .collect();
    if rows.iter().any(|r| r.len() >= 2) {
        Ok(TargetList::Pairs(
            rows.into_iter()
                .map(|r| {
                    let b = r.get(1).unwrap_or(&r[0]).clone();
                    (r[0].clone(), b)
                })
                .collect(),
        ))
    } else {
        Ok(TargetList::Words(rows.into_iter().map(|mut r| r.swap_remove(0)).collect()))
    }
}

pub fn cmd_detect(cfg: &RunConfig, targets: Option<&Path>, gold: Option<&Path>) -> Result<()> {
    let inputs = load_inputs(cfg)?;
    let al = align_with_strategy(&inputs.pair, &cfg.landmarks, &cfg.params, cfg.init)?;
    let pair = &al.pair;
    let t = transform_of(pair);
    let targets = match targets.map(read_targets).transpose()? {
        None => Targets::from_pair(pair, pair.words()),
        Some(TargetList::Words(w)) => Targets::from_pair(pair, &w),
        Some(TargetList::Pairs(p)) => Targets::from_tables(&inputs.table_a, &inputs.table_b, t, &p)?,
    };

    let detection: Detection = match cfg.detector {
        DetectorSpec::Cosine(threshold) => cosine_predictions(&targets, threshold)?,
        DetectorSpec::Cdf => {
            let l = pair.indices_of(&al.landmarks)?;
            let m = pair.indices_of(&al.non_landmarks)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.params.seed);
            let p = &cfg.params;
            let samples = calibration_samples(pair, &l, &m, p.n_pos, p.n_neg, p.r, &mut rng)?;
            let threshold = select_threshold_loocv(&samples)?;
            println!("cdf threshold: {threshold}");
            cdf_predictions(&targets, &EmpiricalCdf::new(&all_distances(pair)?)?, threshold)?
        }
        DetectorSpec::S4d => {
            let model = s4d_train(pair, &al.landmarks, &al.non_landmarks, &cfg.params)?;
            model.weights.write_json(&cfg.out.join("weights.json"))?;
            if let Some(last) = model.losses.last() {
                println!("final training loss: {}", fmt_float(*last));
            }
            s4d_predictions(&model.weights, &targets)?
        }
    };

    t.write_json(&cfg.out.join("transform.json"))?;
    detection.write_tsv(&cfg.out.join("predictions.tsv"))?;
    let shifted = detection.predictions.iter().filter(|p| p.label == 1).count();
    println!(
        "{} words classified, {} shifted, {} skipped",
        detection.predictions.len(),
        shifted,
        detection.skipped.len()
    );
    if !detection.skipped.is_empty() {
        println!("skipped: {}", detection.skipped.join(" "));
    }
    if let Some(gold) = gold {
        let labels = read_gold_tsv(gold)?;
        let mut report = score(&detection.predictions, &labels)?;
        report.n_skipped += detection.skipped.len();
        report.write_json(&cfg.out.join("eval.json"))?;
        println!(
            "accuracy {} precision {} recall {} f1 {}",
            fmt_float(report.accuracy),
            fmt_float(report.precision),
            fmt_float(report.recall),
            fmt_float(report.f1)
        );
    }
    cfg.write_echo()
}

pub fn jaccard_tsv(history: &[f64]) -> String {
    let mut s = String::from("iteration\tjaccard\trunning_mean\n");
    for (i, (j, m)) in history.iter().zip(running_mean(history)).enumerate() {
        writeln!(s, "{}\t{}\t{}", i + 1, fmt_float(*j), fmt_float(m)).unwrap();
    }
    s
}

pub fn cmd_landmarks(cfg: &RunConfig) -> Result<()> {
    let inputs = load_inputs(cfg)?;
    let res = s4a(&inputs.pair, &cfg.params, cfg.init)?;
    res.write_landmarks(&cfg.out.join("landmarks.txt"))?;
    let mut nl = res.non_landmarks.join("\n");
    if !nl.is_empty() {
        nl.push('\n');
    }
    write_atomic(&cfg.out.join("non_landmarks.txt"), nl.as_bytes())?;
    write_atomic(&cfg.out.join("jaccard.tsv"), jaccard_tsv(&res.jaccard_history).as_bytes())?;
    res.transform.write_json(&cfg.out.join("transform.json"))?;
    res.weights.write_json(&cfg.out.join("weights.json"))?;
    write_atomic(
        &cfg.out.join("s4a.json"),
        res.to_json("transform.json", "weights.json")?.as_bytes(),
    )?;
    cfg.write_echo()?;
    let running = res.running_jaccard();
    println!(
        "{} landmarks, {} non-landmarks after {} iterations",
        res.landmarks.len(),
        res.non_landmarks.len(),
        res.jaccard_history.len()
    );
    if let Some(j) = running.last() {
        println!("running mean Jaccard: {}", fmt_float(*j));
    }
    println!("residual: {}", fmt_float(res.transform.residual));
    Ok(())
}

pub fn cmd_discover(cfg: &RunConfig, args: &DiscoverArgs) -> Result<()> {
    let metric: ShiftMetric = args.metric.parse()?;
    let mode = if args.union { SpearmanMode::Union } else { SpearmanMode::Anchor };
    let inputs = load_inputs(cfg)?;
    let al = align_with_strategy(&inputs.pair, &cfg.landmarks, &cfg.params, cfg.init)?;
    let (other, other_name) = match &args.compare_transform {
        Some(path) => (
            apply_transform(&inputs.pair, &OrthogonalTransform::read_json(path)?)?,
            "transform".to_string(),
        ),
        None => {
            let strategy: LandmarkStrategy = args.compare.parse()?;
            let name = strategy.to_string();
            (align_with_strategy(&inputs.pair, &strategy, &cfg.params, cfg.init)?.pair, name)
        }
    };
    let name = cfg.landmarks.to_string();
    let mut ranked = rank_shifts(&al.pair, metric)?;
    ranked.method = name.clone();
    let mut ranked_other = rank_shifts(&other, metric)?;
    ranked_other.method = other_name.clone();
    let curve = spearman_topk(&ranked, &ranked_other, &default_ks(ranked.len()), mode)?;
    let k = args.k.min(ranked.len());
    let unique = unique_words(&ranked, &ranked_other, k)?;

    write_atomic(&cfg.out.join("ranked.tsv"), ranked.to_tsv().as_bytes())?;
    write_atomic(&cfg.out.join("ranked_compare.tsv"), ranked_other.to_tsv().as_bytes())?;
    write_atomic(&cfg.out.join("rho_curve.tsv"), rho_curve_tsv(&curve).as_bytes())?;
    write_atomic(
        &cfg.out.join("unique_words.tsv"),
        unique.to_tsv(&name, &other_name).as_bytes(),
    )?;
    transform_of(&al.pair).write_json(&cfg.out.join("transform.json"))?;
    cfg.write_echo()?;

    println!("most shifted ({name}): {}", ranked.top(k.min(10)).collect::<Vec<_>>().join(" "));
    println!(
        "top {k}: {} only in {name}, {} only in {other_name}, {} shared",
        unique.only_x.len(),
        unique.only_y.len(),
        unique.common.len()
    );
    if let Some((k, rho)) = curve.last() {
        println!("spearman rho at k={k}: {}", fmt_float(*rho));
    }
    Ok(())
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let spec = SyntheticSpec {
        vocab_size: args.vocab_size,
        dim: args.dim,
        shift_fraction: args.shift_fraction,
        shift_strength: args.shift_strength,
        noise_sigma: args.noise_sigma,
        rotation: if args.no_rotation { Rotation::None } else { Rotation::RandomOrthogonal },
        seed: args.seed,
    };
    let synth = generate_synthetic_pair(&spec)?;
    let (a, b) = synth.tables()?;
    a.write_word2vec_text(&args.out.join("a.txt"))?;
    b.write_word2vec_text(&args.out.join("b.txt"))?;
    write_gold_tsv(&synth.gold, &args.out.join("gold.tsv"))?;
    let echo = toml::to_string(&spec).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    write_atomic(&args.out.join("config.toml"), echo.as_bytes())?;
    println!(
        "{} words, dimension {}, {} planted shifts",
        spec.vocab_size,
        spec.dim,
        synth.planted.len()
    );
    Ok(())
}

/// Parses `args` (program name first), runs the subcommand, and returns the
/// process exit code: 0 on success, 1 for usage errors, 2 for data errors and
/// 3 for numerical failures.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Synth(args) => cmd_synth(&args),
        Command::Align(run) => cmd_align(&run.resolve()?),
        Command::Detect(args) => cmd_detect(&args.run.resolve()?, args.targets.as_deref(), args.gold.as_deref()),
        Command::Landmarks(run) => cmd_landmarks(&run.resolve()?),
        Command::Discover(args) => {
            let cfg = args.run.clone().resolve()?;
            cmd_discover(&cfg, &args)
        }
    }
}
