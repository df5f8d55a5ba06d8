use skyforge::catalog_io;
use skyforge::checkpoint::{self, MAGIC};
use skyforge::core::codec::FloatNormalizer;
use skyforge::core::surrogate::NormPlacement;
use skyforge::core::{Catalog, CatalogLayout, ComponentKind, ModelConfig, SurrogateModel};
use skyforge::Error;

fn small_model(catalog: &Catalog, norm: NormPlacement) -> SurrogateModel {
    let config = ModelConfig {
        d_model: 8,
        n_layers: 1,
        n_heads: 2,
        d_ff: 16,
        norm_placement: norm,
        ..ModelConfig::for_catalog(catalog)
    };
    let mut normalizer = FloatNormalizer::identity();
    normalizer.stats[0] = (150.0, 42.5);
    SurrogateModel::for_catalog(config, catalog, normalizer, 3).unwrap()
}

#[test]
fn round_trip_is_exact() {
    let cat = catalog_io::bundled();
    for norm in [NormPlacement::Post, NormPlacement::Pre] {
        let m = small_model(&cat, norm);
        let bytes = checkpoint::to_bytes(&m);
        assert_eq!(&bytes[..8], MAGIC);
        let back = checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back.config(), m.config());
        assert_eq!(back.params(), m.params());
        assert_eq!(back.normalizer(), m.normalizer());
        assert_eq!(back.catalog_hash(), m.catalog_hash());
        assert_eq!(checkpoint::to_bytes(&back), bytes);
    }
}

#[test]
fn save_and_load_through_a_file() {
    let cat = catalog_io::bundled();
    let m = small_model(&cat, NormPlacement::Post);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.bin");
    checkpoint::save(&m, &path).unwrap();
    let back = checkpoint::load_for(&path, &cat, false).unwrap();
    assert_eq!(back.params(), m.params());
}

#[test]
fn rejects_bad_magic_and_version() {
    let cat = catalog_io::bundled();
    let bytes = checkpoint::to_bytes(&small_model(&cat, NormPlacement::Post));
    let mut b = bytes.clone();
    b[0] = b'X';
    assert!(matches!(checkpoint::from_bytes(&b), Err(Error::BadMagic)));
    let mut b = bytes.clone();
    b[8..12].copy_from_slice(&7u32.to_le_bytes());
    assert!(matches!(checkpoint::from_bytes(&b), Err(Error::BadVersion(7))));
}

#[test]
fn rejects_truncation_anywhere() {
    let cat = catalog_io::bundled();
    let bytes = checkpoint::to_bytes(&small_model(&cat, NormPlacement::Post));
    for cut in [0, 5, 8, 13, 40, 70, 200, bytes.len() / 2, bytes.len() - 33, bytes.len() - 1] {
        let r = checkpoint::from_bytes(&bytes[..cut]);
        assert!(matches!(r, Err(Error::Truncated(_)) | Err(Error::BadChecksum)), "cut {cut}: {r:?}");
    }
}

#[test]
fn rejects_flipped_bits() {
    let cat = catalog_io::bundled();
    let bytes = checkpoint::to_bytes(&small_model(&cat, NormPlacement::Post));
    // A parameter byte: structure intact, checksum catches it.
    let mut b = bytes.clone();
    let i = bytes.len() - 40;
    b[i] ^= 1;
    assert!(matches!(checkpoint::from_bytes(&b), Err(Error::BadChecksum)));
    let mut b = bytes.clone();
    b.push(0);
    assert!(matches!(checkpoint::from_bytes(&b), Err(Error::Corrupt(_))));
}

#[test]
fn catalog_hash_is_enforced_unless_overridden() {
    let cat = catalog_io::bundled();
    let m = small_model(&cat, NormPlacement::Post);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.bin");
    checkpoint::save(&m, &path).unwrap();

    // Same ids, one attribute changed: same embedding width, different hash.
    let mut records = cat.records().to_vec();
    let motor = records.iter().position(|r| r.kind == ComponentKind::Motor).unwrap();
    *records[motor].attributes.get_mut("mass_g").unwrap() += 1.0;
    let other = Catalog::new(records, CatalogLayout::STANDARD).unwrap();
    assert_ne!(other.content_hash(), cat.content_hash());

    assert!(matches!(checkpoint::load_for(&path, &other, false), Err(Error::CatalogMismatch)));
    let rebound = checkpoint::load_for(&path, &other, true).unwrap();
    assert_eq!(rebound.catalog_hash(), other.content_hash());
    assert_eq!(rebound.params(), m.params());

    // A catalog with a different width cannot be forced.
    let tiny = Catalog::new(cat.records()[..10].to_vec(), CatalogLayout::STANDARD).unwrap();
    assert!(checkpoint::load_for(&path, &tiny, true).is_err());
}
