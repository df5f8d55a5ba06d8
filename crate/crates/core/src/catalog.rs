//! Component library: motors, propellers, ESCs and batteries.
//!
//! Each record carries the physical attributes of its kind. The catalog
//! assigns every `(kind, attribute)` pair a fixed slot in a global attribute
//! schema, padded with reserved slots up to [`CatalogLayout::attribute_slots`],
//! and min-max normalizes each slot over the catalog.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use sha2::{Digest, Sha256};

use crate::design::{NodeKind, ParamKey};
use crate::error::CatalogError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ComponentKind {
    Motor,
    Propeller,
    #[cfg_attr(feature = "serde", serde(rename = "ESC"))]
    Esc,
    Battery,
}

impl ComponentKind {
    pub const ALL: [ComponentKind; 4] = [
        ComponentKind::Motor,
        ComponentKind::Propeller,
        ComponentKind::Esc,
        ComponentKind::Battery,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ComponentKind::Motor => "Motor",
            ComponentKind::Propeller => "Propeller",
            ComponentKind::Esc => "ESC",
            ComponentKind::Battery => "Battery",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|k| k.name() == name)
    }

    /// Attribute names of this kind, sorted.
    pub fn attributes(self) -> &'static [&'static str] {
        match self {
            ComponentKind::Motor => &["kv_rpm_per_volt", "mass_g", "max_current_A", "resistance_ohm"],
            ComponentKind::Propeller => &[
                "diameter_in",
                "mass_g",
                "pitch_in",
                "power_coeff_Cp",
                "thrust_coeff_Ct",
            ],
            ComponentKind::Esc => &["mass_g", "max_current_A"],
            ComponentKind::Battery => &["capacity_mAh", "mass_g", "max_discharge_C", "voltage_V"],
        }
    }

    /// First global schema slot of this kind.
    fn slot_base(self) -> usize {
        Self::ALL
            .iter()
            .take_while(|k| **k != self)
            .map(|k| k.attributes().len())
            .sum()
    }

    pub fn reference_key(self) -> ParamKey {
        match self {
            ComponentKind::Motor => ParamKey::MotorType,
            ComponentKind::Propeller => ParamKey::PropType,
            ComponentKind::Esc => ParamKey::EscType,
            ComponentKind::Battery => ParamKey::BatteryType,
        }
    }
}

impl fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Number of physical (non-reserved) attribute slots.
pub const PHYSICAL_SLOTS: usize = 4 + 5 + 2 + 4;

/// One line of the catalog file.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComponentRecord {
    pub id: String,
    pub kind: ComponentKind,
    pub attributes: BTreeMap<String, f64>,
}

impl ComponentRecord {
    pub fn new(id: &str, kind: ComponentKind, attributes: &[(&str, f64)]) -> Self {
        ComponentRecord {
            id: id.to_string(),
            kind,
            attributes: attributes
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect(),
        }
    }

    fn get(&self, name: &str) -> f64 {
        self.attributes[name]
    }
}

/// Widths of the embedding segments that depend on configuration rather
/// than on the records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CatalogLayout {
    /// One-hot width of the key segment (`node_type` + parameter keys +
    /// reserved classes).
    pub key_classes: usize,
    /// Width of the attribute segment (physical + reserved slots).
    pub attribute_slots: usize,
}

impl CatalogLayout {
    /// 18 key classes and 51 attribute slots.
    pub const STANDARD: CatalogLayout = CatalogLayout {
        key_classes: 18,
        attribute_slots: 51,
    };

    /// Smallest layout that fits the grammar and the physical schema.
    pub const MINIMAL: CatalogLayout = CatalogLayout {
        key_classes: 1 + ParamKey::ALL.len(),
        attribute_slots: PHYSICAL_SLOTS,
    };
}

impl Default for CatalogLayout {
    fn default() -> Self {
        Self::STANDARD
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotorSpec {
    pub kv_rpm_per_volt: f64,
    pub max_current_a: f64,
    pub resistance_ohm: f64,
    pub mass_g: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropellerSpec {
    pub diameter_in: f64,
    pub pitch_in: f64,
    pub thrust_coeff: f64,
    pub power_coeff: f64,
    pub mass_g: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EscSpec {
    pub max_current_a: f64,
    pub mass_g: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatterySpec {
    pub capacity_mah: f64,
    pub voltage_v: f64,
    pub max_discharge_c: f64,
    pub mass_g: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComponentSpec {
    Motor(MotorSpec),
    Propeller(PropellerSpec),
    Esc(EscSpec),
    Battery(BatterySpec),
}

impl ComponentSpec {
    fn from_record(r: &ComponentRecord) -> Self {
        match r.kind {
            ComponentKind::Motor => ComponentSpec::Motor(MotorSpec {
                kv_rpm_per_volt: r.get("kv_rpm_per_volt"),
                max_current_a: r.get("max_current_A"),
                resistance_ohm: r.get("resistance_ohm"),
                mass_g: r.get("mass_g"),
            }),
            ComponentKind::Propeller => ComponentSpec::Propeller(PropellerSpec {
                diameter_in: r.get("diameter_in"),
                pitch_in: r.get("pitch_in"),
                thrust_coeff: r.get("thrust_coeff_Ct"),
                power_coeff: r.get("power_coeff_Cp"),
                mass_g: r.get("mass_g"),
            }),
            ComponentKind::Esc => ComponentSpec::Esc(EscSpec {
                max_current_a: r.get("max_current_A"),
                mass_g: r.get("mass_g"),
            }),
            ComponentKind::Battery => ComponentSpec::Battery(BatterySpec {
                capacity_mah: r.get("capacity_mAh"),
                voltage_v: r.get("voltage_V"),
                max_discharge_c: r.get("max_discharge_C"),
                mass_g: r.get("mass_g"),
            }),
        }
    }

    pub fn mass_g(&self) -> f64 {
        match self {
            ComponentSpec::Motor(m) => m.mass_g,
            ComponentSpec::Propeller(p) => p.mass_g,
            ComponentSpec::Esc(e) => e.mass_g,
            ComponentSpec::Battery(b) => b.mass_g,
        }
    }
}

/// Immutable, id-indexed component library.
#[derive(Debug, Clone)]
pub struct Catalog {
    records: Vec<ComponentRecord>,
    specs: Vec<ComponentSpec>,
    index: BTreeMap<String, usize>,
    by_kind: [Vec<usize>; 4],
    schema: Vec<String>,
    slot_min: Vec<f64>,
    slot_max: Vec<f64>,
    layout: CatalogLayout,
    hash: [u8; 32],
}

impl PartialEq for Catalog {
    fn eq(&self, other: &Self) -> bool {
        self.records == other.records && self.layout == other.layout
    }
}

impl Catalog {
    /// Builds a catalog; records are sorted by id.
    pub fn new(mut records: Vec<ComponentRecord>, layout: CatalogLayout) -> Result<Self, CatalogError> {
        if layout.attribute_slots < PHYSICAL_SLOTS {
            return Err(CatalogError::LayoutTooNarrow {
                what: "attribute slots",
                needed: PHYSICAL_SLOTS,
                configured: layout.attribute_slots,
            });
        }
        if layout.key_classes < CatalogLayout::MINIMAL.key_classes {
            return Err(CatalogError::LayoutTooNarrow {
                what: "key classes",
                needed: CatalogLayout::MINIMAL.key_classes,
                configured: layout.key_classes,
            });
        }
        for r in &records {
            validate_record(r)?;
        }
        records.sort_by(|a, b| a.id.cmp(&b.id));
        let mut index = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            if index.insert(r.id.clone(), i).is_some() {
                return Err(CatalogError::DuplicateId(r.id.clone()));
            }
        }

        let mut schema = Vec::with_capacity(layout.attribute_slots);
        for kind in ComponentKind::ALL {
            for name in kind.attributes() {
                schema.push(format!("{}.{}", kind.name(), name));
            }
        }
        for i in schema.len()..layout.attribute_slots {
            schema.push(format!("reserved_{i}"));
        }

        let mut slot_min = vec![f64::INFINITY; PHYSICAL_SLOTS];
        let mut slot_max = vec![f64::NEG_INFINITY; PHYSICAL_SLOTS];
        let mut by_kind: [Vec<usize>; 4] = Default::default();
        for (i, r) in records.iter().enumerate() {
            by_kind[r.kind as usize].push(i);
            let base = r.kind.slot_base();
            for (j, name) in r.kind.attributes().iter().enumerate() {
                let v = r.get(name);
                slot_min[base + j] = slot_min[base + j].min(v);
                slot_max[base + j] = slot_max[base + j].max(v);
            }
        }

        let specs = records.iter().map(ComponentSpec::from_record).collect();
        let hash = content_hash(&records, layout);
        Ok(Catalog {
            records,
            specs,
            index,
            by_kind,
            schema,
            slot_min,
            slot_max,
            layout,
            hash,
        })
    }

    pub fn empty(layout: CatalogLayout) -> Self {
        Self::new(Vec::new(), layout).expect("empty catalog with a valid layout")
    }

    pub fn layout(&self) -> CatalogLayout {
        self.layout
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records sorted by id.
    pub fn records(&self) -> &[ComponentRecord] {
        &self.records
    }

    pub fn get(&self, id: &str) -> Option<&ComponentRecord> {
        self.index.get(id).map(|&i| &self.records[i])
    }

    /// Position of `id` in [`Catalog::value_vocab`].
    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn kind_of(&self, id: &str) -> Option<ComponentKind> {
        self.get(id).map(|r| r.kind)
    }

    /// Component ids in vocabulary order.
    pub fn value_vocab(&self) -> Vec<&str> {
        self.records.iter().map(|r| r.id.as_str()).collect()
    }

    /// Size of the value one-hot: a NUMERIC class, every grammar literal and
    /// every component id.
    pub fn value_class_count(&self) -> usize {
        1 + NodeKind::LITERAL_COUNT + self.records.len()
    }

    /// Indices (into [`Catalog::records`]) of every record of `kind`.
    pub fn members(&self, kind: ComponentKind) -> &[usize] {
        &self.by_kind[kind as usize]
    }

    pub fn record(&self, index: usize) -> &ComponentRecord {
        &self.records[index]
    }

    pub fn spec(&self, id: &str) -> Option<&ComponentSpec> {
        self.index.get(id).map(|&i| &self.specs[i])
    }

    pub fn motor(&self, id: &str) -> Option<MotorSpec> {
        match self.spec(id)? {
            ComponentSpec::Motor(m) => Some(*m),
            _ => None,
        }
    }

    pub fn propeller(&self, id: &str) -> Option<PropellerSpec> {
        match self.spec(id)? {
            ComponentSpec::Propeller(p) => Some(*p),
            _ => None,
        }
    }

    pub fn esc(&self, id: &str) -> Option<EscSpec> {
        match self.spec(id)? {
            ComponentSpec::Esc(e) => Some(*e),
            _ => None,
        }
    }

    pub fn battery(&self, id: &str) -> Option<BatterySpec> {
        match self.spec(id)? {
            ComponentSpec::Battery(b) => Some(*b),
            _ => None,
        }
    }

    /// Ordered slot names of the attribute segment.
    pub fn attribute_schema(&self) -> &[String] {
        &self.schema
    }

    /// Global slots owned by `kind`.
    pub fn slots_of(kind: ComponentKind) -> core::ops::Range<usize> {
        let base = kind.slot_base();
        base..base + kind.attributes().len()
    }

    /// Normalized attribute entries of a component as `(slot, value)` pairs.
    pub fn attribute_entries(&self, id: &str) -> Result<Vec<(usize, f64)>, CatalogError> {
        let r = self
            .get(id)
            .ok_or_else(|| CatalogError::UnknownId(id.to_string()))?;
        let base = r.kind.slot_base();
        Ok(r.kind
            .attributes()
            .iter()
            .enumerate()
            .map(|(j, name)| (base + j, self.normalize_slot(base + j, r.get(name))))
            .collect())
    }

    /// Dense attribute vector of width `attribute_slots`; slots of other
    /// kinds are exactly zero.
    pub fn attribute_vector(&self, id: &str) -> Result<Vec<f64>, CatalogError> {
        let mut v = vec![0.0; self.layout.attribute_slots];
        for (slot, x) in self.attribute_entries(id)? {
            v[slot] = x;
        }
        Ok(v)
    }

    /// Min-max scaling into [0, 1]; a slot with a single distinct value
    /// maps to 1.
    fn normalize_slot(&self, slot: usize, x: f64) -> f64 {
        let (lo, hi) = (self.slot_min[slot], self.slot_max[slot]);
        if hi > lo {
            (x - lo) / (hi - lo)
        } else {
            1.0
        }
    }

    /// Catalog-wide `(min, max)` of a physical slot.
    pub fn slot_range(&self, slot: usize) -> Option<(f64, f64)> {
        if slot < PHYSICAL_SLOTS && !self.records.is_empty() {
            Some((self.slot_min[slot], self.slot_max[slot]))
        } else {
            None
        }
    }

    /// SHA-256 over the canonical record list and layout.
    pub fn content_hash(&self) -> [u8; 32] {
        self.hash
    }
}

fn validate_record(r: &ComponentRecord) -> Result<(), CatalogError> {
    let expected = r.kind.attributes();
    for name in expected {
        let Some(&v) = r.attributes.get(*name) else {
            return Err(CatalogError::MissingAttribute {
                id: r.id.clone(),
                name: name.to_string(),
            });
        };
        if !v.is_finite() {
            return Err(CatalogError::NonFinite {
                id: r.id.clone(),
                name: name.to_string(),
            });
        }
        if v <= 0.0 {
            return Err(CatalogError::NonPositive {
                id: r.id.clone(),
                name: name.to_string(),
                value: v,
            });
        }
    }
    if let Some(extra) = r.attributes.keys().find(|k| !expected.contains(&k.as_str())) {
        return Err(CatalogError::UnknownAttribute {
            id: r.id.clone(),
            name: extra.clone(),
        });
    }
    Ok(())
}

fn content_hash(records: &[ComponentRecord], layout: CatalogLayout) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"skyforge-catalog-v1\0");
    h.update((layout.key_classes as u64).to_le_bytes());
    h.update((layout.attribute_slots as u64).to_le_bytes());
    for r in records {
        h.update(r.id.as_bytes());
        h.update([0]);
        h.update(r.kind.name().as_bytes());
        h.update([0]);
        for (name, value) in &r.attributes {
            h.update(name.as_bytes());
            h.update([0]);
            h.update(value.to_bits().to_le_bytes());
        }
        h.update([0xff]);
    }
    h.finalize().into()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn motor(id: &str, kv: f64, max_a: f64, mass: f64) -> ComponentRecord {
        ComponentRecord::new(
            id,
            ComponentKind::Motor,
            &[
                ("kv_rpm_per_volt", kv),
                ("max_current_A", max_a),
                ("resistance_ohm", 0.1),
                ("mass_g", mass),
            ],
        )
    }

    pub(crate) fn prop(id: &str, d: f64, ct: f64, cp: f64, mass: f64) -> ComponentRecord {
        ComponentRecord::new(
            id,
            ComponentKind::Propeller,
            &[
                ("diameter_in", d),
                ("pitch_in", 5.0),
                ("thrust_coeff_Ct", ct),
                ("power_coeff_Cp", cp),
                ("mass_g", mass),
            ],
        )
    }

    pub(crate) fn esc(id: &str, max_a: f64, mass: f64) -> ComponentRecord {
        ComponentRecord::new(
            id,
            ComponentKind::Esc,
            &[("max_current_A", max_a), ("mass_g", mass)],
        )
    }

    pub(crate) fn battery(id: &str, mah: f64, v: f64, c: f64, mass: f64) -> ComponentRecord {
        ComponentRecord::new(
            id,
            ComponentKind::Battery,
            &[
                ("capacity_mAh", mah),
                ("voltage_V", v),
                ("max_discharge_C", c),
                ("mass_g", mass),
            ],
        )
    }

    pub(crate) fn small_catalog() -> Catalog {
        Catalog::new(
            vec![
                motor("motor_a", 1000.0, 30.0, 60.0),
                motor("motor_b", 780.0, 20.0, 55.0),
                prop("prop_10x5", 10.0, 0.10, 0.05, 13.0),
                prop("prop_5x3", 5.0, 0.09, 0.04, 4.0),
                esc("esc_30", 30.0, 9.0),
                battery("bat_3s", 2200.0, 11.1, 25.0, 180.0),
                battery("bat_4s", 5000.0, 14.8, 50.0, 520.0),
            ],
            CatalogLayout::STANDARD,
        )
        .unwrap()
    }

    #[test]
    fn attribute_names_sorted() {
        for kind in ComponentKind::ALL {
            let names = kind.attributes();
            assert!(names.windows(2).all(|w| w[0] < w[1]), "{kind}");
        }
        assert_eq!(
            ComponentKind::ALL.iter().map(|k| k.attributes().len()).sum::<usize>(),
            PHYSICAL_SLOTS
        );
    }

    #[test]
    fn schema_is_padded_to_layout() {
        let cat = small_catalog();
        assert_eq!(cat.attribute_schema().len(), 51);
        assert_eq!(cat.attribute_schema()[0], "Motor.kv_rpm_per_volt");
        assert_eq!(cat.attribute_schema()[50], "reserved_50");
        assert_eq!(cat.value_class_count(), 1 + NodeKind::LITERAL_COUNT + 7);
    }

    #[test]
    fn empty_catalog() {
        let cat = Catalog::new(Vec::new(), CatalogLayout::STANDARD).unwrap();
        assert!(cat.value_vocab().is_empty());
        assert!(cat.is_empty());
    }

    #[test]
    fn duplicate_id_rejected() {
        let err = Catalog::new(
            vec![esc("t_motor_T_80A", 80.0, 70.0), esc("t_motor_T_80A", 60.0, 50.0)],
            CatalogLayout::STANDARD,
        )
        .unwrap_err();
        assert_eq!(err, CatalogError::DuplicateId("t_motor_T_80A".into()));
    }

    #[test]
    fn bad_attributes_rejected() {
        let nan = esc("e", f64::NAN, 1.0);
        assert!(matches!(
            Catalog::new(vec![nan], CatalogLayout::STANDARD),
            Err(CatalogError::NonFinite { .. })
        ));
        let zero = esc("e", 0.0, 1.0);
        assert!(matches!(
            Catalog::new(vec![zero], CatalogLayout::STANDARD),
            Err(CatalogError::NonPositive { .. })
        ));
        let mut extra = esc("e", 1.0, 1.0);
        extra.attributes.insert("color".into(), 1.0);
        assert!(matches!(
            Catalog::new(vec![extra], CatalogLayout::STANDARD),
            Err(CatalogError::UnknownAttribute { .. })
        ));
        let mut missing = esc("e", 1.0, 1.0);
        missing.attributes.remove("mass_g");
        assert!(matches!(
            Catalog::new(vec![missing], CatalogLayout::STANDARD),
            Err(CatalogError::MissingAttribute { .. })
        ));
    }

    #[test]
    fn attribute_vector_partition() {
        let cat = small_catalog();
        let motor_slots = Catalog::slots_of(ComponentKind::Motor);
        let v = cat.attribute_vector("motor_a").unwrap();
        assert_eq!(v.len(), 51);
        for (i, x) in v.iter().enumerate() {
            if !motor_slots.contains(&i) {
                assert_eq!(*x, 0.0);
            }
            assert!((0.0..=1.0).contains(x));
        }
        let b = cat.attribute_vector("bat_4s").unwrap();
        let battery_slots = Catalog::slots_of(ComponentKind::Battery);
        assert!(b.iter().enumerate().all(|(i, x)| battery_slots.contains(&i) || *x == 0.0));
        assert!(b[battery_slots].iter().all(|x| *x == 1.0));
        assert!(matches!(
            cat.attribute_vector("nope"),
            Err(CatalogError::UnknownId(_))
        ));
    }

    #[test]
    fn vocab_index_is_bijection() {
        let cat = small_catalog();
        let vocab = cat.value_vocab();
        for (i, v) in vocab.iter().enumerate() {
            assert_eq!(cat.index_of(v), Some(i));
        }
    }

    #[test]
    fn hash_tracks_content() {
        let a = small_catalog();
        let mut records = a.records().to_vec();
        records.reverse();
        let b = Catalog::new(records.clone(), CatalogLayout::STANDARD).unwrap();
        assert_eq!(a.content_hash(), b.content_hash());
        records[0].attributes.insert("mass_g".into(), 1.5);
        let c = Catalog::new(records, CatalogLayout::STANDARD).unwrap();
        assert_ne!(a.content_hash(), c.content_hash());
    }
}
