//! Build a labeled dataset, train on it, calibrate a threshold and use the
//! trained model to filter fresh generator output.
//!
//! Everything here is sequential; the per-design building blocks
//! ([`label_index`], [`score_index`]) are public so a caller can fan them
//! out over threads and reassemble results in index order.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::catalog::Catalog;
use crate::codec::{self, FloatNormalizer, SparseSequence, TokenSequence};
use crate::design::{count_components, DesignNode};
use crate::error::PipelineError;
use crate::generator::{sample_design, GeneratorConfig};
use crate::metrics::{estimate_compute_savings, ComputeSavings, EvalReport};
use crate::physics::{label_design, FailureReason, HoverResult, PhysicsConstants};
use crate::rng::{Purpose, Stream};
use crate::surrogate::{self, EpochStats, ModelConfig, SurrogateModel, TrainConfig};

pub const MIN_DATASET_SIZE: usize = 10;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.8;
pub const DEFAULT_MINUTES_PER_EVAL: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Split {
    Train,
    Test,
}

/// A design with its oracle outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Labeled {
    /// Generator index the design was sampled at.
    pub index: u64,
    pub tokens: TokenSequence,
    pub label: u8,
    pub hover_time_s: f64,
    pub failure_reason: Option<FailureReason>,
}

impl Labeled {
    pub fn new(index: u64, tokens: TokenSequence, hover: &HoverResult) -> Self {
        Labeled {
            index,
            tokens,
            label: hover.label(),
            hover_time_s: hover.hover_time_s,
            failure_reason: hover.failure_reason,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRecord {
    pub labeled: Labeled,
    pub split: Split,
}

impl core::ops::Deref for LabeledRecord {
    type Target = Labeled;

    fn deref(&self) -> &Labeled {
        &self.labeled
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub generator: GeneratorConfig,
    pub start_index: u64,
    pub count: usize,
    pub split_seed: u64,
    pub train_fraction: f64,
    pub catalog_hash: [u8; 32],
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub records: Vec<LabeledRecord>,
    pub provenance: Provenance,
}

impl LabeledDataset {
    pub fn split(&self, which: Split) -> impl Iterator<Item = &LabeledRecord> {
        self.records.iter().filter(move |r| r.split == which)
    }

    pub fn positive_rate(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().filter(|r| r.label == 1).count() as f64 / self.records.len() as f64
    }
}

/// Samples, flattens and labels the design at generator `index`.
pub fn label_index(
    gen: &GeneratorConfig,
    index: u64,
    catalog: &Catalog,
    constants: &PhysicsConstants,
) -> Result<Labeled, PipelineError> {
    let design = sample_design(gen, index, catalog);
    let (_, hover) = label_design(&design, catalog, constants)?;
    Ok(Labeled::new(index, codec::flatten(&design)?, &hover))
}

/// `n` designs at indices `0..n`, labeled and split.
pub fn build_dataset(
    gen: &GeneratorConfig,
    n: usize,
    catalog: &Catalog,
    constants: &PhysicsConstants,
    split_seed: u64,
) -> Result<LabeledDataset, PipelineError> {
    gen.validate()?;
    constants.validate()?;
    if n < MIN_DATASET_SIZE {
        return Err(PipelineError::TooSmall {
            min: MIN_DATASET_SIZE,
            got: n,
        });
    }
    let labeled = (0..n as u64)
        .map(|i| label_index(gen, i, catalog, constants))
        .collect::<Result<Vec<_>, _>>()?;
    let provenance = Provenance {
        generator: gen.clone(),
        start_index: 0,
        count: n,
        split_seed,
        train_fraction: DEFAULT_TRAIN_FRACTION,
        catalog_hash: catalog.content_hash(),
    };
    assemble_dataset(labeled, provenance)
}

/// Assigns a seeded train/test split to already-labeled records and checks
/// both splits carry both classes.
pub fn assemble_dataset(labeled: Vec<Labeled>, provenance: Provenance) -> Result<LabeledDataset, PipelineError> {
    let n = labeled.len();
    let mut order: Vec<usize> = (0..n).collect();
    Stream::new(provenance.split_seed, Purpose::Split, 0).shuffle(&mut order);
    let n_train = libm::round(n as f64 * provenance.train_fraction) as usize;
    let mut split = alloc::vec![Split::Test; n];
    for &i in &order[..n_train.min(n)] {
        split[i] = Split::Train;
    }
    let records: Vec<LabeledRecord> = labeled
        .into_iter()
        .zip(split)
        .map(|(labeled, split)| LabeledRecord { labeled, split })
        .collect();
    let dataset = LabeledDataset { records, provenance };
    for (which, name) in [(Split::Train, "train"), (Split::Test, "test")] {
        let (mut pos, mut neg) = (false, false);
        for r in dataset.split(which) {
            pos |= r.label == 1;
            neg |= r.label == 0;
        }
        if !(pos && neg) {
            return Err(PipelineError::DegenerateDataset(name));
        }
    }
    Ok(dataset)
}

/// Fits the float normalizer on the train split, initializes a model for
/// `catalog` and trains it.
pub fn train_surrogate<F: FnMut(&EpochStats)>(
    dataset: &LabeledDataset,
    catalog: &Catalog,
    model_config: ModelConfig,
    train_config: &TrainConfig,
    on_epoch: F,
) -> Result<(SurrogateModel, Vec<EpochStats>), PipelineError> {
    let train: Vec<&LabeledRecord> = dataset.split(Split::Train).collect();
    let normalizer = FloatNormalizer::fit(train.iter().map(|r| &r.tokens));
    let model = SurrogateModel::for_catalog(model_config, catalog, normalizer, train_config.init_seed)?;
    let inputs = train
        .iter()
        .map(|r| model.embed(&r.tokens, catalog))
        .collect::<Result<Vec<SparseSequence>, _>>()?;
    let labels: Vec<u8> = train.iter().map(|r| r.label).collect();
    Ok(surrogate::train_with(model, &inputs, &labels, train_config, on_epoch)?)
}

/// Hover probabilities for token sequences.
pub fn score(model: &SurrogateModel, sequences: &[&TokenSequence], catalog: &Catalog) -> Result<Vec<f64>, PipelineError> {
    sequences
        .iter()
        .map(|s| {
            let x = model.embed(s, catalog)?;
            Ok(surrogate::sigmoid(model.logit(&x)?))
        })
        .collect()
}

/// Metrics of `model` on the test split.
pub fn evaluate(
    model: &SurrogateModel,
    dataset: &LabeledDataset,
    catalog: &Catalog,
    threshold: f64,
) -> Result<EvalReport, PipelineError> {
    let test: Vec<&LabeledRecord> = dataset.split(Split::Test).collect();
    if test.is_empty() {
        return Err(PipelineError::DegenerateDataset("test"));
    }
    let seqs: Vec<&TokenSequence> = test.iter().map(|r| &r.tokens).collect();
    let probs = score(model, &seqs, catalog)?;
    let labels: Vec<u8> = test.iter().map(|r| r.label).collect();
    Ok(EvalReport::from_scores(&probs, &labels, threshold))
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeptDesign {
    pub index: u64,
    pub design: DesignNode,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Verification {
    pub sample_size: usize,
    pub n_hover: usize,
    pub hover_rate: f64,
    /// Generator indices of the verified designs, ascending.
    pub sampled_indices: Vec<u64>,
    /// propeller count -> number of verified hovering designs
    pub propeller_histogram: BTreeMap<usize, usize>,
    /// wing count -> number of verified hovering designs
    pub wing_histogram: BTreeMap<usize, usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterReport {
    pub start_index: u64,
    pub n_proposed: usize,
    pub n_kept: usize,
    pub threshold: f64,
    /// In generator order.
    pub kept: Vec<KeptDesign>,
    pub verification: Option<Verification>,
    pub compute: ComputeSavings,
}

impl FilterReport {
    pub fn keep_rate(&self) -> f64 {
        if self.n_proposed == 0 {
            0.0
        } else {
            self.n_kept as f64 / self.n_proposed as f64
        }
    }
}

/// Samples the design at `index` and returns it with its hover
/// probability.
pub fn score_index(
    model: &SurrogateModel,
    gen: &GeneratorConfig,
    index: u64,
    catalog: &Catalog,
) -> Result<(DesignNode, f64), PipelineError> {
    let design = sample_design(gen, index, catalog);
    let x = model.embed(&codec::flatten(&design)?, catalog)?;
    Ok((design, surrogate::sigmoid(model.logit(&x)?)))
}

/// Rejection sampling: streams designs `start_index..start_index + n` and
/// keeps those scoring at least `threshold`.
pub fn filter_designs(
    model: &SurrogateModel,
    gen: &GeneratorConfig,
    start_index: u64,
    n: usize,
    threshold: f64,
    catalog: &Catalog,
) -> Result<FilterReport, PipelineError> {
    model.check_catalog(catalog)?;
    gen.validate()?;
    let mut kept = Vec::new();
    for index in start_index..start_index + n as u64 {
        let (design, probability) = score_index(model, gen, index, catalog)?;
        if probability >= threshold {
            kept.push(KeptDesign {
                index,
                design,
                probability,
            });
        }
    }
    Ok(filter_report(start_index, n, threshold, kept))
}

/// Report for an already-scored stream.
pub fn filter_report(start_index: u64, n_proposed: usize, threshold: f64, kept: Vec<KeptDesign>) -> FilterReport {
    let n_kept = kept.len();
    FilterReport {
        start_index,
        n_proposed,
        n_kept,
        threshold,
        kept,
        verification: None,
        compute: estimate_compute_savings(n_proposed, n_kept, DEFAULT_MINUTES_PER_EVAL)
            .expect("default minutes per evaluation are positive"),
    }
}

/// Positions (into `0..available`) of a seeded uniform subsample, ascending.
pub fn subsample(available: usize, sample_size: usize, seed: u64) -> Result<Vec<usize>, PipelineError> {
    if sample_size > available {
        return Err(PipelineError::SampleTooLarge {
            requested: sample_size,
            available,
        });
    }
    let mut order: Vec<usize> = (0..available).collect();
    Stream::new(seed, Purpose::Subsample, 0).shuffle(&mut order);
    order.truncate(sample_size);
    order.sort_unstable();
    Ok(order)
}

/// Oracle-labels a seeded subsample of the kept designs and tallies the
/// hovering ones by propeller and wing count.
pub fn verify_kept(
    kept: &[KeptDesign],
    catalog: &Catalog,
    constants: &PhysicsConstants,
    sample_size: usize,
    seed: u64,
) -> Result<Verification, PipelineError> {
    let picks = subsample(kept.len(), sample_size, seed)?;
    let mut v = Verification {
        sample_size,
        n_hover: 0,
        hover_rate: 0.0,
        sampled_indices: Vec::with_capacity(sample_size),
        propeller_histogram: BTreeMap::new(),
        wing_histogram: BTreeMap::new(),
    };
    for i in picks {
        let k = &kept[i];
        v.sampled_indices.push(k.index);
        let (label, _) = label_design(&k.design, catalog, constants)?;
        if label == 1 {
            v.n_hover += 1;
            let counts = count_components(&k.design)?;
            *v.propeller_histogram.entry(counts.propellers).or_default() += 1;
            *v.wing_histogram.entry(counts.wings).or_default() += 1;
        }
    }
    if sample_size > 0 {
        v.hover_rate = v.n_hover as f64 / sample_size as f64;
    }
    Ok(v)
}

/// Oracle hover rate of the unfiltered stream `start_index..start_index + n`.
pub fn stream_hover_rate(
    gen: &GeneratorConfig,
    start_index: u64,
    n: usize,
    catalog: &Catalog,
    constants: &PhysicsConstants,
) -> Result<f64, PipelineError> {
    if n == 0 {
        return Ok(0.0);
    }
    let mut hover = 0usize;
    for index in start_index..start_index + n as u64 {
        let design = sample_design(gen, index, catalog);
        hover += label_design(&design, catalog, constants)?.0 as usize;
    }
    Ok(hover as f64 / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::tests::small_catalog;

    fn tiny_model() -> ModelConfig {
        ModelConfig {
            d_model: 8,
            n_layers: 1,
            n_heads: 2,
            d_ff: 16,
            ..Default::default()
        }
    }

    fn gen() -> GeneratorConfig {
        GeneratorConfig::with_seed(3)
    }

    #[test]
    fn too_small_and_degenerate() {
        let cat = small_catalog();
        let c = PhysicsConstants::default();
        assert!(matches!(build_dataset(&gen(), 9, &cat, &c, 0), Err(PipelineError::TooSmall { .. })));
        // Hover is impossible with a tiny battery discharge limit.
        let never = PhysicsConstants {
            drivetrain_efficiency: 1e-9,
            ..Default::default()
        };
        assert!(matches!(
            build_dataset(&gen(), 10, &cat, &never, 0),
            Err(PipelineError::DegenerateDataset(_))
        ));
    }

    fn dataset(n: usize) -> LabeledDataset {
        // the small catalog hovers often, so any reasonable n has both classes
        build_dataset(&gen(), n, &small_catalog(), &PhysicsConstants::default(), 7).unwrap()
    }

    #[test]
    fn dataset_split_and_determinism() {
        let d = dataset(200);
        assert_eq!(d.records.len(), 200);
        assert_eq!(d.split(Split::Train).count(), 160);
        assert_eq!(d, dataset(200));
        for (i, r) in d.records.iter().enumerate() {
            assert_eq!(r.index, i as u64);
            assert_eq!(r.label, (r.hover_time_s > 0.0) as u8);
            assert_eq!(r.label == 0, r.failure_reason.is_some());
        }
    }

    #[test]
    fn filter_extremes_and_monotonicity() {
        let cat = small_catalog();
        let d = dataset(100);
        let cfg = TrainConfig {
            epochs: 2,
            ..Default::default()
        };
        let (model, hist) = train_surrogate(&d, &cat, tiny_model(), &cfg, |_| {}).unwrap();
        assert_eq!(hist.len(), 2);
        let all = filter_designs(&model, &gen(), 1000, 50, 0.0, &cat).unwrap();
        assert_eq!(all.n_kept, 50);
        assert!(all.kept.windows(2).all(|w| w[0].index < w[1].index));
        let none = filter_designs(&model, &gen(), 1000, 50, 1.0, &cat).unwrap();
        assert_eq!(none.n_kept, 0);
        let mut last = usize::MAX;
        for t in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let r = filter_designs(&model, &gen(), 1000, 50, t, &cat).unwrap();
            assert!(r.n_kept <= last);
            last = r.n_kept;
        }
        let report = evaluate(&model, &d, &cat, 0.5).unwrap();
        assert_eq!(report.confusion.total(), d.split(Split::Test).count());
    }

    #[test]
    fn hash_mismatch_is_refused() {
        let cat = small_catalog();
        let model = SurrogateModel::for_catalog(tiny_model(), &cat, FloatNormalizer::identity(), 0).unwrap();
        let other = Catalog::empty(cat.layout());
        assert!(matches!(
            filter_designs(&model, &gen(), 0, 1, 0.5, &other),
            Err(PipelineError::Surrogate(crate::SurrogateError::HashMismatch))
        ));
    }

    #[test]
    fn verification_histograms_partition_hover_count() {
        let cat = small_catalog();
        let c = PhysicsConstants::default();
        let kept: Vec<KeptDesign> = (0..60u64)
            .map(|i| KeptDesign {
                index: i,
                design: sample_design(&gen(), i, &cat),
                probability: 1.0,
            })
            .collect();
        let v = verify_kept(&kept, &cat, &c, 25, 1).unwrap();
        assert_eq!(v.sampled_indices.len(), 25);
        assert!(v.sampled_indices.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(v.propeller_histogram.values().sum::<usize>(), v.n_hover);
        assert_eq!(v.wing_histogram.values().sum::<usize>(), v.n_hover);
        let empty = verify_kept(&kept, &cat, &c, 0, 1).unwrap();
        assert_eq!((empty.n_hover, empty.hover_rate), (0, 0.0));
        assert!(matches!(verify_kept(&kept, &cat, &c, 61, 1), Err(PipelineError::SampleTooLarge { .. })));
    }
}
