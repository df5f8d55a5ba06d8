//! The `skyforge` command line.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use skyforge_core::codec;
use skyforge_core::metrics::{choose_threshold, estimate_compute_savings, EvalReport};
use skyforge_core::physics::label_design;
use skyforge_core::pipeline::{self, assemble_dataset, KeptDesign, Labeled, LabeledDataset, Provenance, Split};
use skyforge_core::{Catalog, ModelConfig};

use crate::catalog_io;
use crate::checkpoint;
use crate::config::ProjectConfig;
use crate::dataset;
use crate::error::{Error, Result};
use crate::fsutil;
use crate::manifest::{self, ManifestBuilder};
use crate::parallel;
use crate::report;

#[derive(Debug, Parser)]
#[command(name = "skyforge", version, about = "Generate, label and filter multirotor design trees")]
pub struct Cli {
    /// Worker threads (defaults to SKYFORGE_THREADS, then all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Suppress progress output on stderr.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample designs and write them as token sequences.
    Generate(GenerateArgs),
    /// Label designs with the hover oracle.
    Label(LabelArgs),
    /// Train the hover surrogate on a labeled file.
    Train(TrainArgs),
    /// Score a labeled file and compute precision/recall.
    Eval(EvalArgs),
    /// Stream new designs through the surrogate and keep likely hoverers.
    Filter(FilterArgs),
    /// Verify a sample of kept designs with the oracle.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Component catalog (JSON lines); defaults to the bundled one.
    #[arg(long)]
    pub catalog: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Number of designs.
    #[arg(long)]
    pub count: usize,
    /// First generator index.
    #[arg(long, default_value_t = 0)]
    pub start: u64,
    /// Generator seed (overrides the config).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also label the designs.
    #[arg(long)]
    pub label: bool,
    /// Output token sequences as JSON lines.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    #[command(flatten)]
    pub common: Common,
    /// Designs as JSON lines, labeled or not.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Labeled designs as JSON lines.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    /// Labeled designs.
    #[arg(long)]
    pub data: PathBuf,
    /// Checkpoint to write.
    #[arg(long)]
    pub model_out: PathBuf,
    /// Training epochs (overrides the config).
    #[arg(long)]
    pub epochs: Option<usize>,
    /// SGD learning rate (overrides the config).
    #[arg(long)]
    pub lr: Option<f64>,
    /// Minibatch size (overrides the config).
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Initialization and shuffling seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Train/test split seed (overrides the config).
    #[arg(long)]
    pub split_seed: Option<u64>,
    /// Per-epoch loss and accuracy as CSV.
    #[arg(long)]
    pub history: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Test,
    All,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,
    /// Checkpoint written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Labeled designs.
    #[arg(long)]
    pub data: PathBuf,
    /// JSON evaluation report.
    #[arg(long)]
    pub out: PathBuf,
    /// Fixed decision threshold; otherwise chosen from --min-recall.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Recall target for choosing the threshold (defaults to the config).
    #[arg(long)]
    pub min_recall: Option<f64>,
    /// Which part of the split to score.
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitArg,
    /// Train/test split seed (overrides the config).
    #[arg(long)]
    pub split_seed: Option<u64>,
    /// Precision/recall curve as CSV.
    #[arg(long)]
    pub pr_out: Option<PathBuf>,
    /// Per-design probabilities as CSV.
    #[arg(long)]
    pub scores_out: Option<PathBuf>,
    /// Accept a checkpoint trained against a different catalog of the
    /// same width.
    #[arg(long)]
    pub allow_catalog_mismatch: bool,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[command(flatten)]
    pub common: Common,
    /// Checkpoint written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Number of designs to propose.
    #[arg(long)]
    pub count: usize,
    /// First generator index (defaults to the config's filter start).
    #[arg(long)]
    pub start: Option<u64>,
    /// Generator seed (overrides the config).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Keep designs whose hover probability is at least this.
    #[arg(long)]
    pub threshold: f64,
    /// Kept designs as JSON lines.
    #[arg(long)]
    pub out: PathBuf,
    /// Accept a checkpoint trained against a different catalog of the
    /// same width.
    #[arg(long)]
    pub allow_catalog_mismatch: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub common: Common,
    /// Kept designs written by `filter`.
    #[arg(long)]
    pub kept: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Fraction of kept designs to verify.
    #[arg(long, conflicts_with = "verify_count")]
    pub verify_fraction: Option<f64>,
    /// Number of kept designs to verify.
    #[arg(long)]
    pub verify_count: Option<usize>,
    /// Verification sampling seed (defaults to the config).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of proposals the kept file was drawn from; read from the
    /// filter manifest when omitted.
    #[arg(long)]
    pub proposed: Option<usize>,
}

/// Reports progress on stderr unless quiet.
struct Progress {
    quiet: bool,
}

impl Progress {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let threads = match cli.threads {
        Some(n) => Some(n),
        None => match std::env::var("SKYFORGE_THREADS") {
            Ok(v) => Some(v.parse().map_err(|_| Error::Usage(format!("SKYFORGE_THREADS: not a number: `{v}`")))?),
            Err(_) => None,
        },
    };
    if let Some(n) = threads {
        // Fails only if a pool already exists, as in tests that call run twice.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let p = Progress { quiet: cli.quiet };
    match cli.command {
        Command::Generate(a) => generate(a, &p),
        Command::Label(a) => label(a, &p),
        Command::Train(a) => train(a, &p),
        Command::Eval(a) => eval(a, &p),
        Command::Filter(a) => filter(a, &p),
        Command::Report(a) => report_cmd(a, &p),
    }
}

fn load_common(c: &Common) -> Result<(ProjectConfig, Catalog)> {
    Ok((ProjectConfig::resolve(c.config.as_deref())?, catalog_io::resolve(c.catalog.as_deref())?))
}

fn input_files(m: &mut ManifestBuilder, c: &Common) -> Result<()> {
    for p in [&c.config, &c.catalog].into_iter().flatten() {
        m.input(p)?;
    }
    Ok(())
}

fn generate(a: GenerateArgs, p: &Progress) -> Result<()> {
    let (mut cfg, catalog) = load_common(&a.common)?;
    if let Some(s) = a.seed {
        cfg.generator.seed = s;
    }
    let t0 = Instant::now();
    let mut w = fsutil::AtomicWriter::create(&a.out)?;
    let mut positives = 0usize;
    if a.label {
        let labeled = parallel::label_range(&cfg.generator, a.start, a.count, &catalog, &cfg.physics)?;
        for l in &labeled {
            positives += l.label as usize;
            writeln_to(&mut w, &a.out, &dataset::labeled_line(l))?;
        }
    } else {
        parallel::generate(&cfg.generator, a.start, a.count, &catalog, |i, seq| {
            writeln_to(&mut w, &a.out, &dataset::design_line(i, seq))
        })?;
    }
    w.commit()?;
    let secs = t0.elapsed().as_secs_f64();
    p.say(format!("wrote {} designs to {} in {secs:.2}s", a.count, a.out.display()));

    let mut m = ManifestBuilder::new("generate", &cfg, catalog.content_hash());
    m.seed("generator", cfg.generator.seed)
        .stat("start_index", a.start)
        .stat("count", a.count)
        .timing("generate", secs);
    if a.label {
        m.stat("positives", positives);
    }
    input_files(&mut m, &a.common)?;
    m.output(&a.out)?;
    m.write_next_to(&a.out)?;
    Ok(())
}

fn writeln_to(w: &mut fsutil::AtomicWriter, path: &Path, line: &str) -> Result<()> {
    use std::io::Write;
    w.write_all(line.as_bytes())
        .and_then(|_| w.write_all(b"\n"))
        .map_err(|e| Error::io(path, e))
}

fn label(a: LabelArgs, p: &Progress) -> Result<()> {
    let (cfg, catalog) = load_common(&a.common)?;
    let t0 = Instant::now();
    let lines = dataset::read(&a.input)?;
    let labeled = lines
        .iter()
        .enumerate()
        .map(|(pos, d)| {
            let at_line = |message: String| Error::Parse {
                path: a.input.clone(),
                line: d.line,
                message,
            };
            let tree = codec::parse(&d.tokens, &catalog).map_err(|e| at_line(e.to_string()))?;
            let (_, hover) = label_design(&tree, &catalog, &cfg.physics).map_err(|e| at_line(e.to_string()))?;
            Ok(Labeled::new(d.index.unwrap_or(pos as u64), d.tokens.clone(), &hover))
        })
        .collect::<Result<Vec<_>>>()?;
    let positives = labeled.iter().filter(|l| l.label == 1).count();
    dataset::write_lines(&a.out, labeled.iter().map(dataset::labeled_line))?;
    let secs = t0.elapsed().as_secs_f64();
    p.say(format!(
        "labeled {} designs, {positives} hover ({:.1}%)",
        labeled.len(),
        100.0 * positives as f64 / labeled.len().max(1) as f64
    ));

    let mut m = ManifestBuilder::new("label", &cfg, catalog.content_hash());
    m.stat("count", labeled.len()).stat("positives", positives).timing("label", secs);
    input_files(&mut m, &a.common)?;
    m.input(&a.input)?.output(&a.out)?;
    m.write_next_to(&a.out)?;
    Ok(())
}

/// Rebuilds the train/test split of a labeled file.
fn load_dataset(path: &Path, cfg: &ProjectConfig, catalog: &Catalog, split_seed: u64) -> Result<LabeledDataset> {
    let labeled = dataset::read_labeled(path)?;
    if labeled.len() < pipeline::MIN_DATASET_SIZE {
        return Err(skyforge_core::PipelineError::TooSmall {
            min: pipeline::MIN_DATASET_SIZE,
            got: labeled.len(),
        }
        .into());
    }
    let provenance = Provenance {
        generator: cfg.generator.clone(),
        start_index: labeled.iter().map(|l| l.index).min().unwrap_or(0),
        count: labeled.len(),
        split_seed,
        train_fraction: pipeline::DEFAULT_TRAIN_FRACTION,
        catalog_hash: catalog.content_hash(),
    };
    Ok(assemble_dataset(labeled, provenance)?)
}

fn train(a: TrainArgs, p: &Progress) -> Result<()> {
    let (mut cfg, catalog) = load_common(&a.common)?;
    if let Some(e) = a.epochs {
        cfg.train.epochs = e;
    }
    if let Some(lr) = a.lr {
        cfg.train.learning_rate = lr;
    }
    if let Some(b) = a.batch_size {
        cfg.train.batch_size = b;
    }
    if let Some(s) = a.seed {
        cfg.train.init_seed = s;
        cfg.train.shuffle_seed = s;
    }
    if let Some(s) = a.split_seed {
        cfg.pipeline.split_seed = s;
    }
    cfg.validate()?;
    let data = load_dataset(&a.data, &cfg, &catalog, cfg.pipeline.split_seed)?;
    let model_cfg = ModelConfig {
        input_dim: ModelConfig::for_catalog(&catalog).input_dim,
        ..cfg.model.clone()
    };
    let n_train = data.split(Split::Train).count();
    p.say(format!(
        "training on {n_train} of {} designs for {} epochs",
        data.records.len(),
        cfg.train.epochs
    ));

    let t0 = Instant::now();
    let every = (cfg.train.epochs / 20).max(1);
    let (model, history) = pipeline::train_surrogate(&data, &catalog, model_cfg, &cfg.train, |s| {
        if s.epoch % every == 0 || s.epoch == 1 {
            p.say(format!("epoch {:>5}  loss {:.5}  acc {:.4}", s.epoch, s.loss, s.accuracy));
        }
    })?;
    let secs = t0.elapsed().as_secs_f64();
    checkpoint::save(&model, &a.model_out)?;
    if let Some(h) = &a.history {
        fsutil::write_atomic(h, report::history_csv(&history).as_bytes())?;
    }

    let last = history.last().expect("epochs >= 1");
    let mut m = ManifestBuilder::new("train", &cfg, catalog.content_hash());
    m.seed("init", cfg.train.init_seed)
        .seed("shuffle", cfg.train.shuffle_seed)
        .seed("split", cfg.pipeline.split_seed)
        .stat("n_train", n_train)
        .stat("n_test", data.records.len() - n_train)
        .stat("parameters", model.params().len())
        .stat("final_loss", last.loss)
        .stat("final_accuracy", last.accuracy)
        .timing("train", secs);
    input_files(&mut m, &a.common)?;
    m.input(&a.data)?.output(&a.model_out)?;
    if let Some(h) = &a.history {
        m.output(h)?;
    }
    m.write_next_to(&a.model_out)?;
    p.say(format!("saved model to {} ({secs:.1}s)", a.model_out.display()));
    Ok(())
}

fn eval(a: EvalArgs, p: &Progress) -> Result<()> {
    let (mut cfg, catalog) = load_common(&a.common)?;
    if let Some(s) = a.split_seed {
        cfg.pipeline.split_seed = s;
    }
    if let Some(r) = a.min_recall {
        cfg.pipeline.min_recall = r;
    }
    let model = checkpoint::load_for(&a.model, &catalog, a.allow_catalog_mismatch)?;
    let t0 = Instant::now();
    let data = load_dataset(&a.data, &cfg, &catalog, cfg.pipeline.split_seed)?;
    let records: Vec<&Labeled> = data
        .records
        .iter()
        .filter(|r| match a.split {
            SplitArg::Train => r.split == Split::Train,
            SplitArg::Test => r.split == Split::Test,
            SplitArg::All => true,
        })
        .map(|r| &r.labeled)
        .collect();
    let seqs: Vec<_> = records.iter().map(|r| &r.tokens).collect();
    let labels: Vec<u8> = records.iter().map(|r| r.label).collect();
    let probs = score_parallel(&model, &seqs, &catalog)?;

    let curve_only = EvalReport::from_scores(&probs, &labels, 0.5);
    let threshold = match a.threshold {
        Some(t) => t,
        None => choose_threshold(&curve_only, cfg.pipeline.min_recall)?,
    };
    let rep = EvalReport::from_scores(&probs, &labels, threshold);
    let secs = t0.elapsed().as_secs_f64();
    if !p.quiet {
        print!("{}", report::eval_summary(&rep));
    }
    let body = json!({
        "split": format!("{:?}", a.split).to_lowercase(),
        "n": records.len(),
        "positives": labels.iter().filter(|&&y| y == 1).count(),
        "min_recall": a.threshold.is_none().then_some(cfg.pipeline.min_recall),
        "report": rep,
    });
    fsutil::write_atomic(&a.out, serde_json::to_string_pretty(&body).expect("serializable").as_bytes())?;
    if let Some(pr) = &a.pr_out {
        fsutil::write_atomic(pr, report::pr_curve_csv(&rep.pr_curve).as_bytes())?;
    }
    if let Some(path) = &a.scores_out {
        let mut csv = String::from("index,label,failure_reason,probability\n");
        for (r, q) in records.iter().zip(&probs) {
            let reason = r.failure_reason.map_or("", |f| f.name());
            csv.push_str(&format!("{},{},{reason},{q}\n", r.index, r.label));
        }
        fsutil::write_atomic(path, csv.as_bytes())?;
    }

    let mut m = ManifestBuilder::new("eval", &cfg, catalog.content_hash());
    m.seed("split", cfg.pipeline.split_seed)
        .stat("threshold", threshold)
        .stat("accuracy", rep.accuracy)
        .stat("precision", rep.precision)
        .stat("recall", rep.recall)
        .timing("eval", secs);
    input_files(&mut m, &a.common)?;
    m.input(&a.model)?.input(&a.data)?.output(&a.out)?;
    for path in [&a.pr_out, &a.scores_out].into_iter().flatten() {
        m.output(path)?;
    }
    m.write_next_to(&a.out)?;
    Ok(())
}

fn score_parallel(
    model: &skyforge_core::SurrogateModel,
    seqs: &[&skyforge_core::TokenSequence],
    catalog: &Catalog,
) -> Result<Vec<f64>> {
    use rayon::prelude::*;
    seqs.par_chunks(256)
        .map(|c| Ok(pipeline::score(model, c, catalog)?))
        .collect::<Result<Vec<Vec<f64>>>>()
        .map(|v| v.concat())
}

fn filter(a: FilterArgs, p: &Progress) -> Result<()> {
    let (mut cfg, catalog) = load_common(&a.common)?;
    if let Some(s) = a.seed {
        cfg.generator.seed = s;
    }
    if !(0.0..=1.0).contains(&a.threshold) {
        return Err(Error::Usage(format!("--threshold must be in [0, 1], got {}", a.threshold)));
    }
    let start = a.start.unwrap_or(cfg.pipeline.filter_start_index);
    let model = checkpoint::load_for(&a.model, &catalog, a.allow_catalog_mismatch)?;
    let t0 = Instant::now();
    let mut rep = parallel::filter_designs(&model, &cfg.generator, start, a.count, a.threshold, &catalog)?;
    rep.compute = estimate_compute_savings(rep.n_proposed, rep.n_kept, cfg.pipeline.minutes_per_eval)?;
    let lines = rep.kept.iter().map(dataset::kept_line).collect::<Result<Vec<_>>>()?;
    dataset::write_lines(&a.out, lines)?;
    let secs = t0.elapsed().as_secs_f64();
    if !p.quiet {
        print!("{}", report::filter_summary(&rep, cfg.pipeline.minutes_per_eval));
    }

    let mut m = ManifestBuilder::new("filter", &cfg, catalog.content_hash());
    m.seed("generator", cfg.generator.seed)
        .stat("start_index", start)
        .stat("n_proposed", rep.n_proposed)
        .stat("n_kept", rep.n_kept)
        .stat("keep_rate", rep.keep_rate())
        .stat("threshold", rep.threshold)
        .stat("days_unfiltered", rep.compute.days_unfiltered)
        .stat("days_filtered", rep.compute.days_filtered)
        .timing("filter", secs);
    input_files(&mut m, &a.common)?;
    m.input(&a.model)?.output(&a.out)?;
    m.write_next_to(&a.out)?;
    Ok(())
}

fn report_cmd(a: ReportArgs, p: &Progress) -> Result<()> {
    let (mut cfg, catalog) = load_common(&a.common)?;
    if let Some(s) = a.seed {
        cfg.pipeline.verify_seed = s;
    }
    let lines = dataset::read(&a.kept)?;
    let kept = lines
        .iter()
        .enumerate()
        .map(|(pos, d)| {
            let design = codec::parse(&d.tokens, &catalog).map_err(|e| Error::Parse {
                path: a.kept.clone(),
                line: d.line,
                message: e.to_string(),
            })?;
            Ok(KeptDesign {
                index: d.index.unwrap_or(pos as u64),
                design,
                probability: d.probability.unwrap_or(f64::NAN),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let sample_size = match (a.verify_count, a.verify_fraction) {
        (Some(n), _) => n,
        (None, Some(f)) if (0.0..=1.0).contains(&f) => (f * kept.len() as f64).round() as usize,
        (None, Some(f)) => return Err(Error::Usage(format!("--verify-fraction must be in [0, 1], got {f}"))),
        (None, None) => kept.len(),
    };
    let proposed = match a.proposed {
        Some(n) => n,
        None => {
            let mpath = manifest::manifest_path(&a.kept);
            let mf = manifest::read(&mpath)?;
            mf.stats
                .get("n_proposed")
                .and_then(|v| v.as_u64())
                .map(|n| n as usize)
                .ok_or_else(|| Error::Usage(format!("{}: no n_proposed; pass --proposed", mpath.display())))?
        }
    };
    if proposed < kept.len() {
        return Err(Error::Usage(format!("--proposed {proposed} is smaller than the {} kept designs", kept.len())));
    }

    let t0 = Instant::now();
    let v = pipeline::verify_kept(&kept, &catalog, &cfg.physics, sample_size, cfg.pipeline.verify_seed)?;
    let compute = estimate_compute_savings(proposed, kept.len(), cfg.pipeline.minutes_per_eval)?;
    let secs = t0.elapsed().as_secs_f64();

    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let summary_path = a.out.join("summary.txt");
    let mut summary = format!(
        "{} kept of {proposed} proposed ({:.1}%)\n",
        kept.len(),
        100.0 * kept.len() as f64 / proposed.max(1) as f64
    );
    summary.push_str(&report::savings_summary(&compute, cfg.pipeline.minutes_per_eval));
    summary.push_str(&report::verification_summary(&v));
    let outputs: BTreeMap<&str, String> = [
        ("propellers.csv", report::histogram_csv(&v.propeller_histogram)),
        ("wings.csv", report::histogram_csv(&v.wing_histogram)),
        (
            "verification.json",
            serde_json::to_string_pretty(&json!({ "verification": v, "compute": compute, "n_proposed": proposed, "n_kept": kept.len() }))
                .expect("serializable"),
        ),
        ("summary.txt", summary.clone()),
    ]
    .into_iter()
    .collect();
    for (name, body) in &outputs {
        fsutil::write_atomic(&a.out.join(name), body.as_bytes())?;
    }
    p.say(summary.trim_end());

    let mut m = ManifestBuilder::new("report", &cfg, catalog.content_hash());
    m.seed("verify", cfg.pipeline.verify_seed)
        .stat("n_kept", kept.len())
        .stat("n_proposed", proposed)
        .stat("sample_size", v.sample_size)
        .stat("n_hover", v.n_hover)
        .stat("hover_rate", v.hover_rate)
        .timing("verify", secs);
    input_files(&mut m, &a.common)?;
    m.input(&a.kept)?;
    for name in outputs.keys() {
        m.output(&a.out.join(name))?;
    }
    m.write_next_to(&summary_path)?;
    Ok(())
}
