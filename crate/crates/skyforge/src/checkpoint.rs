//! Binary model checkpoints.
//!
//! Little-endian layout:
//!
//! ```text
//! magic "UAVSURR1"          8 bytes
//! format version            u32
//! config block              6 × u32, f64 dropout, 3 × u8 (positional, norm, readout)
//! catalog hash              32 bytes
//! normalization stats       u32 count, then count × (f64 mean, f64 std)
//! parameters                u64 count, then count × f64
//! SHA-256 of all the above  32 bytes
//! ```

use std::path::Path;

use sha2::{Digest, Sha256};
use skyforge_core::codec::FloatNormalizer;
use skyforge_core::surrogate::{ModelConfig, NormPlacement, PositionalEncoding, Readout};
use skyforge_core::{Catalog, ParamKey, SurrogateError, SurrogateModel};

use crate::error::{Error, Result};
use crate::fsutil;

pub const MAGIC: &[u8; 8] = b"UAVSURR1";
pub const VERSION: u32 = 1;

pub fn to_bytes(model: &SurrogateModel) -> Vec<u8> {
    let c = model.config();
    let mut out = Vec::with_capacity(128 + 8 * model.params().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for v in [c.d_model, c.n_layers, c.n_heads, c.d_ff, c.input_dim, c.max_seq_len] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    out.extend_from_slice(&c.dropout.to_le_bytes());
    out.push(match c.positional_encoding {
        PositionalEncoding::Sinusoidal => 0,
    });
    out.push(match c.norm_placement {
        NormPlacement::Post => 0,
        NormPlacement::Pre => 1,
    });
    out.push(match c.readout {
        Readout::LastRealToken => 0,
    });
    out.extend_from_slice(&model.catalog_hash());
    let stats = &model.normalizer().stats;
    out.extend_from_slice(&(stats.len() as u32).to_le_bytes());
    for (mean, std) in stats {
        out.extend_from_slice(&mean.to_le_bytes());
        out.extend_from_slice(&std.to_le_bytes());
    }
    out.extend_from_slice(&(model.params().len() as u64).to_le_bytes());
    for w in model.params() {
        out.extend_from_slice(&w.to_le_bytes());
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.bytes.len()).ok_or(Error::Truncated(what))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self, what: &'static str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &'static str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &'static str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &'static str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

/// Decodes a checkpoint without checking which catalog it belongs to.
pub fn from_bytes(bytes: &[u8]) -> Result<SurrogateModel> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(MAGIC.len(), "magic")? != MAGIC {
        return Err(Error::BadMagic);
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(Error::BadVersion(version));
    }
    let mut dims = [0usize; 6];
    for d in &mut dims {
        *d = r.u32("config")? as usize;
    }
    let dropout = r.f64("config")?;
    let bad = |what: &str| Error::Corrupt(format!("unknown {what} code"));
    let positional_encoding = match r.u8("config")? {
        0 => PositionalEncoding::Sinusoidal,
        _ => return Err(bad("positional encoding")),
    };
    let norm_placement = match r.u8("config")? {
        0 => NormPlacement::Post,
        1 => NormPlacement::Pre,
        _ => return Err(bad("norm placement")),
    };
    let readout = match r.u8("config")? {
        0 => Readout::LastRealToken,
        _ => return Err(bad("readout")),
    };
    let config = ModelConfig {
        d_model: dims[0],
        n_layers: dims[1],
        n_heads: dims[2],
        d_ff: dims[3],
        input_dim: dims[4],
        max_seq_len: dims[5],
        dropout,
        positional_encoding,
        norm_placement,
        readout,
    };
    let hash: [u8; 32] = r.take(32, "catalog hash")?.try_into().unwrap();
    let n_stats = r.u32("normalization stats")? as usize;
    if n_stats != ParamKey::ALL.len() {
        return Err(Error::Corrupt(format!("expected {} normalization entries, found {n_stats}", ParamKey::ALL.len())));
    }
    let mut normalizer = FloatNormalizer::identity();
    for s in normalizer.stats.iter_mut() {
        *s = (r.f64("normalization stats")?, r.f64("normalization stats")?);
    }
    let n_params = r.u64("parameters")? as usize;
    // refuse absurd counts before allocating
    if n_params > (bytes.len() - r.pos) / 8 {
        return Err(Error::Truncated("parameters"));
    }
    let mut params = Vec::with_capacity(n_params);
    for _ in 0..n_params {
        params.push(r.f64("parameters")?);
    }
    let body_end = r.pos;
    let stored = r.take(32, "checksum")?;
    if Sha256::digest(&bytes[..body_end]).as_slice() != stored {
        return Err(Error::BadChecksum);
    }
    if r.pos != bytes.len() {
        return Err(Error::Corrupt("trailing bytes after checksum".into()));
    }
    Ok(SurrogateModel::from_parts(config, params, normalizer, hash)?)
}

pub fn save(model: &SurrogateModel, path: &Path) -> Result<()> {
    fsutil::write_atomic(path, &to_bytes(model))
}

pub fn load(path: &Path) -> Result<SurrogateModel> {
    from_bytes(&fsutil::read_bytes(path)?)
}

/// Loads a checkpoint and checks it was trained against `catalog`.
///
/// With `allow_mismatch` a model from a different catalog is rebound to
/// `catalog`, provided the embedding widths agree.
pub fn load_for(path: &Path, catalog: &Catalog, allow_mismatch: bool) -> Result<SurrogateModel> {
    let model = load(path)?;
    if model.check_catalog(catalog).is_ok() {
        return Ok(model);
    }
    if !allow_mismatch {
        return Err(Error::CatalogMismatch);
    }
    let width = skyforge_core::codec::EmbeddingLayout::of(catalog).width();
    if width != model.config().input_dim {
        return Err(SurrogateError::DimensionMismatch {
            expected: model.config().input_dim,
            got: width,
        }
        .into());
    }
    Ok(SurrogateModel::from_parts(
        model.config().clone(),
        model.params().to_vec(),
        model.normalizer().clone(),
        catalog.content_hash(),
    )?)
}
