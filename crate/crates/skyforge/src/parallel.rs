//! Data-parallel versions of the per-design pipeline stages.
//!
//! Work is split into fixed-size chunks of generator indices; each chunk is
//! mapped in parallel and merged in index order, so output is identical for
//! any thread count and memory stays bounded by one chunk.

use rayon::prelude::*;
use skyforge_core::codec;
use skyforge_core::design::validate_design;
use skyforge_core::generator::sample_design;
use skyforge_core::pipeline::{
    self, assemble_dataset, filter_report, label_index, FilterReport, KeptDesign, Labeled, LabeledDataset, Provenance,
};
use skyforge_core::{Catalog, GeneratorConfig, PhysicsConstants, PipelineError, SurrogateModel, TokenSequence};

use crate::error::Result;

pub const CHUNK: u64 = 4096;

/// Runs `map` over `start..start + n` chunk by chunk, handing each chunk's
/// results to `sink` in index order.
pub fn chunked<T, M, S>(start: u64, n: usize, map: M, mut sink: S) -> Result<()>
where
    T: Send,
    M: Fn(u64) -> Result<T> + Sync,
    S: FnMut(Vec<T>) -> Result<()>,
{
    let end = start + n as u64;
    let mut lo = start;
    while lo < end {
        let hi = (lo + CHUNK).min(end);
        let out = (lo..hi).into_par_iter().map(&map).collect::<Result<Vec<T>>>()?;
        sink(out)?;
        lo = hi;
    }
    Ok(())
}

/// Samples, validates and flattens designs `start..start + n`.
pub fn generate<S>(gen: &GeneratorConfig, start: u64, n: usize, catalog: &Catalog, mut sink: S) -> Result<()>
where
    S: FnMut(u64, &TokenSequence) -> Result<()>,
{
    gen.validate()?;
    chunked(
        start,
        n,
        |i| {
            let design = sample_design(gen, i, catalog);
            let report = validate_design(&design, catalog);
            if let Some(v) = report.violations.into_iter().next() {
                return Err(PipelineError::InvalidTree(skyforge_core::InvalidTree(v)).into());
            }
            Ok((i, codec::flatten(&design)?))
        },
        |chunk| chunk.iter().try_for_each(|(i, seq)| sink(*i, seq)),
    )
}

pub fn label_range(
    gen: &GeneratorConfig,
    start: u64,
    n: usize,
    catalog: &Catalog,
    constants: &PhysicsConstants,
) -> Result<Vec<Labeled>> {
    gen.validate()?;
    constants.validate()?;
    let mut out = Vec::with_capacity(n);
    chunked(
        start,
        n,
        |i| Ok(label_index(gen, i, catalog, constants)?),
        |chunk| {
            out.extend(chunk);
            Ok(())
        },
    )?;
    Ok(out)
}

/// Same result as the sequential `pipeline::build_dataset`.
pub fn build_dataset(
    gen: &GeneratorConfig,
    n: usize,
    catalog: &Catalog,
    constants: &PhysicsConstants,
    split_seed: u64,
) -> Result<LabeledDataset> {
    if n < pipeline::MIN_DATASET_SIZE {
        return Err(PipelineError::TooSmall {
            min: pipeline::MIN_DATASET_SIZE,
            got: n,
        }
        .into());
    }
    let labeled = label_range(gen, 0, n, catalog, constants)?;
    let provenance = Provenance {
        generator: gen.clone(),
        start_index: 0,
        count: n,
        split_seed,
        train_fraction: pipeline::DEFAULT_TRAIN_FRACTION,
        catalog_hash: catalog.content_hash(),
    };
    Ok(assemble_dataset(labeled, provenance)?)
}

/// Same result as the sequential `pipeline::filter_designs`.
pub fn filter_designs(
    model: &SurrogateModel,
    gen: &GeneratorConfig,
    start: u64,
    n: usize,
    threshold: f64,
    catalog: &Catalog,
) -> Result<FilterReport> {
    model.check_catalog(catalog)?;
    gen.validate()?;
    let mut kept = Vec::new();
    chunked(
        start,
        n,
        |i| {
            let (design, probability) = pipeline::score_index(model, gen, i, catalog)?;
            Ok((probability >= threshold).then_some(KeptDesign {
                index: i,
                design,
                probability,
            }))
        },
        |chunk| {
            kept.extend(chunk.into_iter().flatten());
            Ok(())
        },
    )?;
    Ok(filter_report(start, n, threshold, kept))
}

/// Oracle hover rate of the unfiltered stream.
pub fn stream_hover_rate(
    gen: &GeneratorConfig,
    start: u64,
    n: usize,
    catalog: &Catalog,
    constants: &PhysicsConstants,
) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    let labeled = label_range(gen, start, n, catalog, constants)?;
    Ok(labeled.iter().filter(|l| l.label == 1).count() as f64 / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog_io;

    #[test]
    fn parallel_matches_sequential() {
        let cat = catalog_io::bundled();
        let gen = GeneratorConfig::with_seed(5);
        let c = PhysicsConstants::default();
        let par = label_range(&gen, 10, 300, &cat, &c).unwrap();
        let seq: Vec<Labeled> = (10..310).map(|i| label_index(&gen, i, &cat, &c).unwrap()).collect();
        assert_eq!(par, seq);
        let rate = stream_hover_rate(&gen, 10, 300, &cat, &c).unwrap();
        let seq_rate = pipeline::stream_hover_rate(&gen, 10, 300, &cat, &c).unwrap();
        assert_eq!(rate, seq_rate);
    }
}
