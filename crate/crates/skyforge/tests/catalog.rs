use skyforge::core::{Catalog, GeneratorConfig, PhysicsConstants};
use skyforge::{catalog_io, parallel};

#[test]
fn bundled_catalog_loads_with_expected_layout() {
    let cat = catalog_io::bundled();
    assert_eq!(cat.layout().key_classes, 18);
    assert_eq!(cat.value_class_count(), 671);
    assert_eq!(cat.layout().attribute_slots, 51);
    assert_eq!(Catalog::new(cat.records().to_vec(), cat.layout().clone()).unwrap().content_hash(), cat.content_hash());
}

#[test]
fn default_generator_base_rate_is_near_ten_percent() {
    let cat = catalog_io::bundled();
    for seed in [0, 1] {
        let rate = parallel::stream_hover_rate(&GeneratorConfig::with_seed(seed), 0, 5000, &cat, &PhysicsConstants::default())
            .unwrap();
        assert!((0.05..=0.20).contains(&rate), "seed {seed}: {rate}");
    }
}
