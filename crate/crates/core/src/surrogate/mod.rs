//! Transformer-encoder hover classifier.
//!
//! Token vectors go through a linear input projection, sinusoidal
//! positional encoding, a stack of self-attention + feed-forward layers and
//! a linear readout of the last real token, giving one logit per design.
//! Forward and backward passes are written out by hand over a single flat
//! `f64` parameter vector; see [`ParamLayout`] for its order.
//!
//! Padding never enters the computation: inputs are reduced to their real
//! rows (with their original positions) before the encoder runs, which is
//! exactly equivalent to giving padded keys a weight of zero.

mod encoder;
pub mod linalg;
mod train;

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::catalog::Catalog;
use crate::codec::{self, EmbeddedSequence, EmbeddingLayout, FloatNormalizer, SparseSequence, TokenSequence};
use crate::error::{ConfigError, SurrogateError};
use crate::rng::{Purpose, Stream};

pub use encoder::LAYER_NORM_EPS;
pub use train::{train, train_with, EpochStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum NormPlacement {
    /// `LN(x + sublayer(x))`
    Post,
    /// `x + sublayer(LN(x))`
    Pre,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PositionalEncoding {
    Sinusoidal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Readout {
    LastRealToken,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct ModelConfig {
    pub d_model: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    pub input_dim: usize,
    pub max_seq_len: usize,
    /// Must be 0; kept so configs state it explicitly.
    pub dropout: f64,
    pub positional_encoding: PositionalEncoding,
    pub norm_placement: NormPlacement,
    pub readout: Readout,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            d_model: 200,
            n_layers: 8,
            n_heads: 2,
            d_ff: 800,
            input_dim: 741,
            max_seq_len: codec::MAX_SEQUENCE_LEN,
            dropout: 0.0,
            positional_encoding: PositionalEncoding::Sinusoidal,
            norm_placement: NormPlacement::Post,
            readout: Readout::LastRealToken,
        }
    }
}

impl ModelConfig {
    /// Default architecture sized for `catalog`'s token width.
    pub fn for_catalog(catalog: &Catalog) -> Self {
        ModelConfig {
            input_dim: EmbeddingLayout::of(catalog).width(),
            ..Default::default()
        }
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("d_model", self.d_model),
            ("n_layers", self.n_layers),
            ("n_heads", self.n_heads),
            ("d_ff", self.d_ff),
            ("input_dim", self.input_dim),
            ("max_seq_len", self.max_seq_len),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(ConfigError::Invalid(alloc::format!("{name} must be >= 1")));
            }
        }
        if self.d_model % self.n_heads != 0 {
            return Err(ConfigError::Invalid(alloc::format!(
                "d_model {} is not divisible by n_heads {}",
                self.d_model, self.n_heads
            )));
        }
        if self.dropout != 0.0 {
            return Err(ConfigError::Invalid("dropout is not supported; set it to 0".to_string()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub shuffle_seed: u64,
    pub init_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            epochs: 2500,
            batch_size: 128,
            shuffle_seed: 0,
            init_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(ConfigError::Invalid(alloc::format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(ConfigError::Invalid("epochs must be >= 1".to_string()));
        }
        if self.batch_size == 0 {
            return Err(ConfigError::Invalid("batch_size must be >= 1".to_string()));
        }
        Ok(())
    }
}

/// A contiguous run of the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub len: usize,
}

impl Span {
    pub fn of<'a>(&self, v: &'a [f64]) -> &'a [f64] {
        &v[self.start..self.start + self.len]
    }

    pub fn of_mut<'a>(&self, v: &'a mut [f64]) -> &'a mut [f64] {
        &mut v[self.start..self.start + self.len]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpans {
    pub wq: Span,
    pub bq: Span,
    pub wk: Span,
    pub bk: Span,
    pub wv: Span,
    pub bv: Span,
    pub wo: Span,
    pub bo: Span,
    pub ln1_gain: Span,
    pub ln1_bias: Span,
    pub w1: Span,
    pub b1: Span,
    pub w2: Span,
    pub b2: Span,
    pub ln2_gain: Span,
    pub ln2_bias: Span,
}

/// Parameter order in the flat vector (and on disk): input projection
/// weight `[input_dim × d_model]` and bias, then per layer
/// `wq bq wk bk wv bv wo bo ln1 w1 b1 w2 b2 ln2`, then the readout weight
/// `[d_model]` and bias. Matrices are row-major `[in × out]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamLayout {
    pub input_w: Span,
    pub input_b: Span,
    pub layers: Vec<LayerSpans>,
    pub readout_w: Span,
    pub readout_b: Span,
    pub total: usize,
}

impl ParamLayout {
    pub fn new(c: &ModelConfig) -> Self {
        let mut next = 0;
        let mut take = |len: usize| {
            let s = Span { start: next, len };
            next += len;
            s
        };
        let (d, f) = (c.d_model, c.d_ff);
        let input_w = take(c.input_dim * d);
        let input_b = take(d);
        let layers = (0..c.n_layers)
            .map(|_| LayerSpans {
                wq: take(d * d),
                bq: take(d),
                wk: take(d * d),
                bk: take(d),
                wv: take(d * d),
                bv: take(d),
                wo: take(d * d),
                bo: take(d),
                ln1_gain: take(d),
                ln1_bias: take(d),
                w1: take(d * f),
                b1: take(f),
                w2: take(f * d),
                b2: take(d),
                ln2_gain: take(d),
                ln2_bias: take(d),
            })
            .collect();
        let readout_w = take(d);
        let readout_b = take(1);
        ParamLayout {
            input_w,
            input_b,
            layers,
            readout_w,
            readout_b,
            total: next,
        }
    }

    /// `(span, fan_in)` of every weight matrix, in layout order.
    fn weight_matrices(&self, c: &ModelConfig) -> Vec<(Span, usize)> {
        let mut out = vec![(self.input_w, c.input_dim)];
        for l in &self.layers {
            out.extend([
                (l.wq, c.d_model),
                (l.wk, c.d_model),
                (l.wv, c.d_model),
                (l.wo, c.d_model),
                (l.w1, c.d_model),
                (l.w2, c.d_ff),
            ]);
        }
        out.push((self.readout_w, c.d_model));
        out
    }
}

/// Trained (or freshly initialized) classifier together with everything
/// needed to embed inputs the way it was trained.
#[derive(Debug, Clone)]
pub struct SurrogateModel {
    config: ModelConfig,
    layout: ParamLayout,
    params: Vec<f64>,
    normalizer: FloatNormalizer,
    catalog_hash: [u8; 32],
    positional: Vec<f64>,
}

impl PartialEq for SurrogateModel {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.params == other.params
            && self.normalizer == other.normalizer
            && self.catalog_hash == other.catalog_hash
    }
}

impl SurrogateModel {
    /// Weights `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`, biases 0, layer-norm
    /// gains 1, drawn in layout order from the `init_seed` stream.
    pub fn init(
        config: ModelConfig,
        normalizer: FloatNormalizer,
        catalog_hash: [u8; 32],
        init_seed: u64,
    ) -> Result<Self, SurrogateError> {
        config.validate()?;
        let layout = ParamLayout::new(&config);
        let mut params = vec![0.0; layout.total];
        let mut rng = Stream::new(init_seed, Purpose::Init, 0);
        for (span, fan_in) in layout.weight_matrices(&config) {
            let bound = 1.0 / libm::sqrt(fan_in as f64);
            for w in span.of_mut(&mut params) {
                *w = rng.uniform(-bound, bound);
            }
        }
        for l in &layout.layers {
            l.ln1_gain.of_mut(&mut params).fill(1.0);
            l.ln2_gain.of_mut(&mut params).fill(1.0);
        }
        Self::from_parts(config, params, normalizer, catalog_hash)
    }

    /// Model for `catalog` with the given architecture; `input_dim` is
    /// overwritten with the catalog's token width.
    pub fn for_catalog(
        mut config: ModelConfig,
        catalog: &Catalog,
        normalizer: FloatNormalizer,
        init_seed: u64,
    ) -> Result<Self, SurrogateError> {
        config.input_dim = EmbeddingLayout::of(catalog).width();
        Self::init(config, normalizer, catalog.content_hash(), init_seed)
    }

    pub fn from_parts(
        config: ModelConfig,
        params: Vec<f64>,
        normalizer: FloatNormalizer,
        catalog_hash: [u8; 32],
    ) -> Result<Self, SurrogateError> {
        config.validate()?;
        let layout = ParamLayout::new(&config);
        if params.len() != layout.total {
            return Err(ConfigError::Invalid(alloc::format!(
                "expected {} parameters, got {}",
                layout.total,
                params.len()
            ))
            .into());
        }
        let positional = encoder::sinusoidal_table(config.max_seq_len, config.d_model);
        Ok(SurrogateModel {
            config,
            layout,
            params,
            normalizer,
            catalog_hash,
            positional,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn normalizer(&self) -> &FloatNormalizer {
        &self.normalizer
    }

    pub fn catalog_hash(&self) -> [u8; 32] {
        self.catalog_hash
    }

    pub fn check_catalog(&self, catalog: &Catalog) -> Result<(), SurrogateError> {
        if catalog.content_hash() == self.catalog_hash {
            Ok(())
        } else {
            Err(SurrogateError::HashMismatch)
        }
    }

    /// Embeds a token sequence with this model's normalization statistics.
    pub fn embed(&self, seq: &TokenSequence, catalog: &Catalog) -> Result<SparseSequence, SurrogateError> {
        self.check_catalog(catalog)?;
        Ok(codec::embed_sequence_sparse(seq, catalog, &self.normalizer)?)
    }

    pub fn forward(&self, batch: &[EmbeddedSequence]) -> Result<Vec<f64>, SurrogateError> {
        batch.iter().map(|s| self.logit(&s.to_sparse())).collect()
    }

    pub fn forward_sparse(&self, batch: &[SparseSequence]) -> Result<Vec<f64>, SurrogateError> {
        batch.iter().map(|s| self.logit(s)).collect()
    }

    pub fn predict_proba(&self, batch: &[EmbeddedSequence]) -> Result<Vec<f64>, SurrogateError> {
        Ok(self.forward(batch)?.into_iter().map(sigmoid).collect())
    }

    pub fn predict_proba_sparse(&self, batch: &[SparseSequence]) -> Result<Vec<f64>, SurrogateError> {
        Ok(self.forward_sparse(batch)?.into_iter().map(sigmoid).collect())
    }

    /// Logit of one sequence.
    pub fn logit(&self, seq: &SparseSequence) -> Result<f64, SurrogateError> {
        self.check_input(seq)?;
        Ok(encoder::forward(self, seq, false).logit)
    }

    /// Mean binary cross-entropy over the batch and its gradient with
    /// respect to every parameter (same layout as [`Self::params`]).
    pub fn loss_and_gradients(&self, batch: &[SparseSequence], labels: &[f64]) -> Result<(f64, Vec<f64>), SurrogateError> {
        let mut grads = vec![0.0; self.layout.total];
        let refs: Vec<&SparseSequence> = batch.iter().collect();
        let (loss, _) = self.accumulate_gradients(&refs, labels, &mut grads)?;
        Ok((loss, grads))
    }

    /// Adds the batch-mean gradient into `grads`; returns the mean loss and
    /// the number of correct predictions at probability 0.5.
    pub(crate) fn accumulate_gradients(
        &self,
        batch: &[&SparseSequence],
        labels: &[f64],
        grads: &mut [f64],
    ) -> Result<(f64, usize), SurrogateError> {
        if batch.len() != labels.len() {
            return Err(SurrogateError::LabelCount {
                inputs: batch.len(),
                labels: labels.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|y| **y != 0.0 && **y != 1.0) {
            return Err(SurrogateError::BadLabel(bad));
        }
        for s in batch {
            self.check_input(s)?;
        }
        let scale = 1.0 / batch.len().max(1) as f64;
        let mut loss = 0.0;
        let mut correct = 0;
        for (s, &y) in batch.iter().zip(labels) {
            let pass = encoder::forward(self, s, true);
            let z = pass.logit;
            loss += bce_with_logits(z, y);
            correct += ((z >= 0.0) == (y == 1.0)) as usize;
            encoder::backward(self, s, &pass, (sigmoid_exact(z) - y) * scale, grads);
        }
        let loss = loss * scale;
        if !loss.is_finite() {
            return Err(SurrogateError::Divergence { epoch: 0 });
        }
        Ok((loss, correct))
    }

    /// Attention weights of every layer and head for one (possibly padded)
    /// sequence, as `rows × rows` matrices in padded coordinates. Padded
    /// rows and columns are zero.
    pub fn attention_weights(&self, seq: &EmbeddedSequence) -> Result<Vec<Vec<f64>>, SurrogateError> {
        let sparse = seq.to_sparse();
        self.check_input(&sparse)?;
        let pass = encoder::forward(self, &sparse, true);
        let n = seq.rows();
        let mut out = Vec::new();
        for cache in &pass.layers {
            let l = sparse.len();
            for h in 0..self.config.n_heads {
                let mut m = vec![0.0; n * n];
                for (i, &pi) in sparse.positions.iter().enumerate() {
                    for (j, &pj) in sparse.positions.iter().enumerate() {
                        m[pi * n + pj] = cache.probs[h * l * l + i * l + j];
                    }
                }
                out.push(m);
            }
        }
        Ok(out)
    }

    fn check_input(&self, seq: &SparseSequence) -> Result<(), SurrogateError> {
        if seq.width != self.config.input_dim {
            return Err(SurrogateError::DimensionMismatch {
                expected: self.config.input_dim,
                got: seq.width,
            });
        }
        let Some(&last) = seq.positions.last() else {
            return Err(SurrogateError::EmptyMask);
        };
        if last >= self.config.max_seq_len {
            return Err(SurrogateError::TooLong {
                len: last + 1,
                max: self.config.max_seq_len,
            });
        }
        debug_assert!(seq.positions.windows(2).all(|w| w[0] < w[1]));
        Ok(())
    }
}

/// `σ(z)` kept strictly inside (0, 1) so downstream log-odds stay finite.
pub fn sigmoid(z: f64) -> f64 {
    sigmoid_exact(z).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

fn sigmoid_exact(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// `-[y ln σ(z) + (1-y) ln(1-σ(z))]` in log-sum-exp form.
pub fn bce_with_logits(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + libm::log1p(libm::exp(-z.abs()))
}

#[cfg(test)]
mod tests;
