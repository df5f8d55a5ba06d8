//! Catalog files: one JSON component record per line.

use std::io::Write;
use std::path::Path;

use skyforge_core::{Catalog, CatalogLayout, ComponentRecord};

use crate::error::{Error, Result};
use crate::fsutil::{self, AtomicWriter};

const BUNDLED: &str = include_str!("../data/catalog.jsonl");

/// The catalog shipped with the crate, in the standard layout.
pub fn bundled() -> Catalog {
    parse(BUNDLED, Path::new("<bundled catalog>"), CatalogLayout::STANDARD).expect("bundled catalog is valid")
}

pub fn load(path: &Path, layout: CatalogLayout) -> Result<Catalog> {
    parse(&fsutil::read_to_string(path)?, path, layout)
}

/// `path` is only used in error messages.
pub fn parse(text: &str, path: &Path, layout: CatalogLayout) -> Result<Catalog> {
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r: ComponentRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        records.push(r);
    }
    Ok(Catalog::new(records, layout)?)
}

pub fn save(catalog: &Catalog, path: &Path) -> Result<()> {
    let mut w = AtomicWriter::create(path)?;
    for r in catalog.records() {
        let line = serde_json::to_string(r).expect("records serialize");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.commit()
}

/// `--catalog` if given, otherwise the bundled one.
pub fn resolve(path: Option<&Path>) -> Result<Catalog> {
    match path {
        Some(p) => load(p, CatalogLayout::STANDARD),
        None => Ok(bundled()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use skyforge_core::codec::EmbeddingLayout;

    #[test]
    fn bundled_catalog_has_standard_layout() {
        let c = bundled();
        assert_eq!(c.len(), 643);
        assert_eq!(c.value_class_count(), 671);
        assert_eq!(EmbeddingLayout::of(&c).width(), 741);
        for id in [
            "t_motor_MN2212KV780",
            "apc_propellers_12x5",
            "t_motor_T_80A",
            "TurnigyGraphene1400mAh3S75C",
        ] {
            assert!(c.get(id).is_some(), "{id}");
        }
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.jsonl");
        let c = bundled();
        save(&c, &p).unwrap();
        let back = load(&p, CatalogLayout::STANDARD).unwrap();
        assert_eq!(back.content_hash(), c.content_hash());
    }

    #[test]
    fn parse_error_names_line() {
        let text = "{\"id\":\"a\",\"kind\":\"ESC\",\"attributes\":{\"mass_g\":1.0,\"max_current_A\":5.0}}\n\nnot json\n";
        match parse(text, Path::new("x"), CatalogLayout::STANDARD) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
