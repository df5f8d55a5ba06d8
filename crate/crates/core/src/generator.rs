//! Seeded procedural generator of topologically valid design trees.
//!
//! Design `i` is a pure function of `(config, i, catalog)`: its random
//! stream is derived from the seed and the index, so any partition of an
//! index range produces the same designs.

use alloc::vec;
use alloc::vec::Vec;

use crate::catalog::{Catalog, ComponentKind};
use crate::codec::{flattened_len, MAX_SEQUENCE_LEN};
use crate::design::{DesignNode, NodeKind, ParamKey, ParamValue, MAX_HUB_ARITY, MIN_HUB_ARITY};
use crate::error::ConfigError;
use crate::rng::{Purpose, Stream};

/// Resampling attempts before a too-long design is truncated.
const MAX_ATTEMPTS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct GeneratorConfig {
    pub seed: u64,
    /// Weights over hub arities 2..=13.
    pub arity_weights: Vec<f64>,
    pub symmetry_prob: f64,
    /// Weights over 0..=4 wings.
    pub wing_count_weights: Vec<f64>,
    /// Number of hub levels; 1 means a single hub of arms.
    pub max_depth: u32,
    /// Chance that a hub slot holds a nested hub (when depth allows).
    pub nested_hub_prob: f64,
    #[cfg_attr(feature = "serde", serde(rename = "armLength_range_mm"))]
    pub arm_length_range_mm: (f64, f64),
    pub offset_range_mm: (f64, f64),
    pub angle_range_deg: (f64, f64),
    pub span_range_mm: (f64, f64),
    pub chord_range_mm: (f64, f64),
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            seed: 0,
            arity_weights: vec![1.0 / 12.0; 12],
            symmetry_prob: 0.7,
            wing_count_weights: vec![0.6, 0.05, 0.15, 0.05, 0.15],
            max_depth: 2,
            nested_hub_prob: 0.1,
            arm_length_range_mm: (80.0, 400.0),
            offset_range_mm: (-10.0, 10.0),
            angle_range_deg: (0.0, 90.0),
            span_range_mm: (300.0, 1500.0),
            chord_range_mm: (80.0, 300.0),
        }
    }
}

impl GeneratorConfig {
    pub fn with_seed(seed: u64) -> Self {
        GeneratorConfig {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        check_weights(
            "arity_weights",
            &self.arity_weights,
            (MAX_HUB_ARITY - MIN_HUB_ARITY + 1) as usize,
        )?;
        check_weights("wing_count_weights", &self.wing_count_weights, 5)?;
        check_prob("symmetry_prob", self.symmetry_prob)?;
        check_prob("nested_hub_prob", self.nested_hub_prob)?;
        if self.max_depth < 1 {
            return Err(ConfigError::Invalid("max_depth must be >= 1".into()));
        }
        check_range("armLength_range_mm", self.arm_length_range_mm)?;
        check_range("offset_range_mm", self.offset_range_mm)?;
        check_range("angle_range_deg", self.angle_range_deg)?;
        check_range("span_range_mm", self.span_range_mm)?;
        check_range("chord_range_mm", self.chord_range_mm)?;
        for (field, (lo, _)) in [
            ("armLength_range_mm", self.arm_length_range_mm),
            ("span_range_mm", self.span_range_mm),
            ("chord_range_mm", self.chord_range_mm),
        ] {
            if lo <= 0.0 {
                return Err(ConfigError::Invalid(alloc::format!(
                    "{field}: lengths must be positive"
                )));
            }
        }
        Ok(())
    }
}

fn check_prob(field: &'static str, p: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(ConfigError::BadProbability { field, value: p })
    }
}

fn check_weights(field: &'static str, w: &[f64], len: usize) -> Result<(), ConfigError> {
    if w.len() != len {
        return Err(ConfigError::WrongLength {
            field,
            expected: len,
            got: w.len(),
        });
    }
    for &p in w {
        check_prob(field, p)?;
    }
    let sum: f64 = w.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(ConfigError::NotNormalized { field, sum });
    }
    Ok(())
}

fn check_range(field: &'static str, (min, max): (f64, f64)) -> Result<(), ConfigError> {
    if min.is_finite() && max.is_finite() && min < max {
        Ok(())
    } else {
        Err(ConfigError::DegenerateRange { field, min, max })
    }
}

/// Samples design `index`. The config is assumed valid and the catalog to
/// hold at least one component of every kind.
pub fn sample_design(config: &GeneratorConfig, index: u64, catalog: &Catalog) -> DesignNode {
    let mut rng = Stream::new(config.seed, Purpose::Design, index);
    let sampler = Sampler { config, catalog };
    let mut design = sampler.design(&mut rng);
    for _ in 1..MAX_ATTEMPTS {
        if flattened_len(&design) <= MAX_SEQUENCE_LEN {
            return design;
        }
        design = sampler.design(&mut rng);
    }
    if flattened_len(&design) > MAX_SEQUENCE_LEN {
        force_symmetric(&mut design);
    }
    design
}

/// Element `i` equals `sample_design(config, start_index + i, catalog)`.
pub fn sample_batch(config: &GeneratorConfig, start_index: u64, n: usize, catalog: &Catalog) -> Vec<DesignNode> {
    (0..n as u64)
        .map(|i| sample_design(config, start_index + i, catalog))
        .collect()
}

/// Structural truncation: every hub keeps only its first child and becomes
/// symmetric.
fn force_symmetric(node: &mut DesignNode) {
    if let NodeKind::Hub { arity, .. } = node.kind {
        node.kind = NodeKind::Hub {
            arity,
            symmetric: true,
        };
        node.children.truncate(1);
    }
    for c in &mut node.children {
        force_symmetric(c);
    }
}

struct Sampler<'a> {
    config: &'a GeneratorConfig,
    catalog: &'a Catalog,
}

impl Sampler<'_> {
    fn design(&self, rng: &mut Stream) -> DesignNode {
        let wings = rng.weighted(&self.config.wing_count_weights);
        let hub = self.hub(1, rng);
        let mut root = if wings == 0 {
            hub
        } else {
            let mut fuselage = DesignNode::new(NodeKind::Fuselage).with_child(hub);
            for _ in 0..wings {
                fuselage.children.push(self.wing(rng));
            }
            fuselage
        };
        let battery = self.component(ComponentKind::Battery, rng);
        root.params.push((ParamKey::BatteryType, battery));
        root
    }

    fn hub(&self, depth: u32, rng: &mut Stream) -> DesignNode {
        let arity = MIN_HUB_ARITY + rng.weighted(&self.config.arity_weights) as u8;
        let symmetric = rng.bernoulli(self.config.symmetry_prob);
        let slots = if symmetric { 1 } else { arity as usize };
        let mut node = DesignNode::new(NodeKind::Hub { arity, symmetric });
        for _ in 0..slots {
            let nested = depth < self.config.max_depth && rng.bernoulli(self.config.nested_hub_prob);
            let child = if nested {
                self.hub(depth + 1, rng)
            } else {
                self.arm(rng)
            };
            node.children.push(child);
        }
        node
    }

    fn arm(&self, rng: &mut Stream) -> DesignNode {
        let c = self.config;
        let n = ParamValue::Numeric;
        DesignNode::new(NodeKind::PropArm)
            .with_param(ParamKey::ArmLength, n(uniform(rng, c.arm_length_range_mm)))
            .with_param(ParamKey::MotorType, self.component(ComponentKind::Motor, rng))
            .with_param(ParamKey::PropType, self.component(ComponentKind::Propeller, rng))
            .with_param(ParamKey::EscType, self.component(ComponentKind::Esc, rng))
            .with_param(ParamKey::Offset, n(uniform(rng, c.offset_range_mm)))
            .with_param(ParamKey::Offset, n(uniform(rng, c.offset_range_mm)))
            .with_param(ParamKey::Angle, n(uniform(rng, c.angle_range_deg)))
            .with_param(ParamKey::X1Offset, n(uniform(rng, c.offset_range_mm)))
            .with_param(ParamKey::Z1Offset, n(uniform(rng, c.offset_range_mm)))
    }

    fn wing(&self, rng: &mut Stream) -> DesignNode {
        let c = self.config;
        DesignNode::wing(
            uniform(rng, c.span_range_mm),
            uniform(rng, c.chord_range_mm),
            uniform(rng, c.angle_range_deg),
            uniform(rng, c.offset_range_mm),
        )
    }

    fn component(&self, kind: ComponentKind, rng: &mut Stream) -> ParamValue {
        let members = self.catalog.members(kind);
        let record = self.catalog.record(members[rng.below(members.len())]);
        ParamValue::Categorical(record.id.clone())
    }
}

fn uniform(rng: &mut Stream, (lo, hi): (f64, f64)) -> f64 {
    rng.uniform(lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::tests::small_catalog;
    use crate::design::{count_components, expand_symmetry, validate_design};

    #[test]
    fn default_config_is_valid() {
        GeneratorConfig::default().validate().unwrap();
    }

    #[test]
    fn bad_configs() {
        let mut c = GeneratorConfig::default();
        c.arity_weights[0] = 0.5;
        assert!(matches!(c.validate(), Err(ConfigError::NotNormalized { .. })));

        let mut c = GeneratorConfig::default();
        c.wing_count_weights.pop();
        assert!(matches!(c.validate(), Err(ConfigError::WrongLength { .. })));

        let c = GeneratorConfig { arm_length_range_mm: (100.0, 100.0), ..Default::default() };
        assert!(matches!(c.validate(), Err(ConfigError::DegenerateRange { .. })));

        let c = GeneratorConfig { max_depth: 0, ..Default::default() };
        assert!(c.validate().is_err());

        let c = GeneratorConfig { symmetry_prob: 1.5, ..Default::default() };
        assert!(matches!(c.validate(), Err(ConfigError::BadProbability { .. })));
    }

    #[test]
    fn deterministic_per_index() {
        let cat = small_catalog();
        let cfg = GeneratorConfig::with_seed(42);
        let a = sample_design(&cfg, 0, &cat);
        assert_eq!(a, sample_design(&cfg, 0, &cat));
        assert!(validate_design(&a, &cat).is_valid());
        let other = GeneratorConfig::with_seed(43);
        assert_ne!(a, sample_design(&other, 0, &cat));
    }

    #[test]
    fn concentrated_config_yields_symmetric_quad() {
        let cat = small_catalog();
        let mut arity = vec![0.0; 12];
        arity[2] = 1.0;
        let cfg = GeneratorConfig {
            arity_weights: arity,
            symmetry_prob: 1.0,
            wing_count_weights: vec![1.0, 0.0, 0.0, 0.0, 0.0],
            max_depth: 1,
            ..GeneratorConfig::with_seed(42)
        };
        for i in 0..50 {
            let d = sample_design(&cfg, i, &cat);
            assert_eq!(d.kind, NodeKind::hub(4, true));
            assert_eq!(d.children.len(), 1);
            assert_eq!(d.children[0].kind, NodeKind::PropArm);
            assert!(d.battery().is_some());
            assert_eq!(count_components(&d).unwrap().propellers, 4);
            assert_eq!(crate::codec::flattened_len(&d), 12);
        }
    }

    #[test]
    fn batches_concatenate() {
        let cat = small_catalog();
        let cfg = GeneratorConfig::with_seed(7);
        assert!(sample_batch(&cfg, 0, 0, &cat).is_empty());
        let mut split = sample_batch(&cfg, 0, 100, &cat);
        split.extend(sample_batch(&cfg, 100, 100, &cat));
        assert_eq!(split, sample_batch(&cfg, 0, 200, &cat));
    }

    #[test]
    fn truncation_bounds_length() {
        let cat = small_catalog();
        // Only non-symmetric 13-hubs nested twice: always too long.
        let mut arity = vec![0.0; 12];
        arity[11] = 1.0;
        let cfg = GeneratorConfig {
            arity_weights: arity,
            symmetry_prob: 0.0,
            max_depth: 2,
            nested_hub_prob: 1.0,
            ..GeneratorConfig::with_seed(5)
        };
        for i in 0..10 {
            let d = sample_design(&cfg, i, &cat);
            assert!(crate::codec::flattened_len(&d) <= MAX_SEQUENCE_LEN);
            assert!(validate_design(&d, &cat).is_valid());
            assert!(expand_symmetry(&d).is_ok());
        }
    }
}
