//! Design trees: hubs, propeller arms, wings and fuselages with their
//! parameters.
//!
//! A symmetric hub `ConnectedHub<k>_Sym` owns a single child subtree that is
//! replicated `k` times by [`expand_symmetry`]. Every other consumer (mass
//! rollup, component counts, hover evaluation) works on the expanded view.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::catalog::{Catalog, ComponentKind};
use crate::error::InvalidTree;
use crate::grammar::{self, ParamSlot, SlotType};

pub const MIN_HUB_ARITY: u8 = 2;
/// Large enough for a tridecacopter.
pub const MAX_HUB_ARITY: u8 = 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Hub { arity: u8, symmetric: bool },
    PropArm,
    Wing,
    Fuselage,
}

impl NodeKind {
    /// Number of distinct node-kind literals in the grammar.
    pub const LITERAL_COUNT: usize = 2 * (MAX_HUB_ARITY - MIN_HUB_ARITY + 1) as usize + 3;

    pub const fn hub(arity: u8, symmetric: bool) -> Self {
        NodeKind::Hub { arity, symmetric }
    }

    /// Position of this literal in the fixed literal ordering: hubs by
    /// arity (plain before `_Sym`), then `PropArm`, `Wing`, `Fuselage`.
    /// `None` for hubs outside the arity range.
    pub fn literal_index(self) -> Option<usize> {
        let hubs = Self::LITERAL_COUNT - 3;
        match self {
            NodeKind::Hub { arity, symmetric } => {
                if !(MIN_HUB_ARITY..=MAX_HUB_ARITY).contains(&arity) {
                    return None;
                }
                Some(2 * (arity - MIN_HUB_ARITY) as usize + symmetric as usize)
            }
            NodeKind::PropArm => Some(hubs),
            NodeKind::Wing => Some(hubs + 1),
            NodeKind::Fuselage => Some(hubs + 2),
        }
    }

    pub fn from_literal_index(index: usize) -> Option<Self> {
        let hubs = Self::LITERAL_COUNT - 3;
        match index {
            i if i < hubs => Some(NodeKind::Hub {
                arity: MIN_HUB_ARITY + (i / 2) as u8,
                symmetric: i % 2 == 1,
            }),
            i if i == hubs => Some(NodeKind::PropArm),
            i if i == hubs + 1 => Some(NodeKind::Wing),
            i if i == hubs + 2 => Some(NodeKind::Fuselage),
            _ => None,
        }
    }

    pub fn is_hub(self) -> bool {
        matches!(self, NodeKind::Hub { .. })
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeKind::Hub { arity, symmetric } => {
                write!(f, "ConnectedHub{arity}")?;
                if *symmetric {
                    f.write_str("_Sym")?;
                }
                Ok(())
            }
            NodeKind::PropArm => f.write_str("PropArm"),
            NodeKind::Wing => f.write_str("Wing"),
            NodeKind::Fuselage => f.write_str("Fuselage"),
        }
    }
}

impl FromStr for NodeKind {
    type Err = ();

    /// Accepts exactly the literals produced by `Display` within the arity
    /// range; `ConnectedHub04` and `ConnectedHub14` are rejected.
    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "PropArm" => return Ok(NodeKind::PropArm),
            "Wing" => return Ok(NodeKind::Wing),
            "Fuselage" => return Ok(NodeKind::Fuselage),
            _ => {}
        }
        let rest = s.strip_prefix("ConnectedHub").ok_or(())?;
        let (digits, symmetric) = match rest.strip_suffix("_Sym") {
            Some(d) => (d, true),
            None => (rest, false),
        };
        if digits.is_empty() || digits.starts_with('0') || !digits.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(());
        }
        let arity: u8 = digits.parse().map_err(|_| ())?;
        if !(MIN_HUB_ARITY..=MAX_HUB_ARITY).contains(&arity) {
            return Err(());
        }
        Ok(NodeKind::Hub { arity, symmetric })
    }
}

/// Parameter keys of the grammar. The token key vocabulary is `node_type`
/// followed by these, in declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamKey {
    ArmLength,
    MotorType,
    PropType,
    EscType,
    BatteryType,
    Offset,
    Angle,
    X1Offset,
    Z1Offset,
    Span,
    Chord,
}

impl ParamKey {
    pub const ALL: [ParamKey; 11] = [
        ParamKey::ArmLength,
        ParamKey::MotorType,
        ParamKey::PropType,
        ParamKey::EscType,
        ParamKey::BatteryType,
        ParamKey::Offset,
        ParamKey::Angle,
        ParamKey::X1Offset,
        ParamKey::Z1Offset,
        ParamKey::Span,
        ParamKey::Chord,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamKey::ArmLength => "armLength",
            ParamKey::MotorType => "motorType",
            ParamKey::PropType => "propType",
            ParamKey::EscType => "escType",
            ParamKey::BatteryType => "batteryType",
            ParamKey::Offset => "offset",
            ParamKey::Angle => "angle",
            ParamKey::X1Offset => "x1_offset",
            ParamKey::Z1Offset => "z1_offset",
            ParamKey::Span => "span",
            ParamKey::Chord => "chord",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|k| k.name() == name)
    }

    /// Dense index in `0..ParamKey::ALL.len()`.
    pub fn index(self) -> usize {
        self as usize
    }

    /// Component kind referenced by this key, if it is a reference key.
    pub fn component_kind(self) -> Option<ComponentKind> {
        match self {
            ParamKey::MotorType => Some(ComponentKind::Motor),
            ParamKey::PropType => Some(ComponentKind::Propeller),
            ParamKey::EscType => Some(ComponentKind::Esc),
            ParamKey::BatteryType => Some(ComponentKind::Battery),
            _ => None,
        }
    }
}

impl fmt::Display for ParamKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    /// A categorical value; for reference keys this is a catalog id.
    Categorical(String),
    /// Millimeters for lengths and offsets, degrees for angles.
    Numeric(f64),
}

impl ParamValue {
    pub fn as_numeric(&self) -> Option<f64> {
        match self {
            ParamValue::Numeric(x) => Some(*x),
            ParamValue::Categorical(_) => None,
        }
    }

    pub fn as_categorical(&self) -> Option<&str> {
        match self {
            ParamValue::Categorical(s) => Some(s),
            ParamValue::Numeric(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignNode {
    pub kind: NodeKind,
    pub params: Vec<(ParamKey, ParamValue)>,
    pub children: Vec<DesignNode>,
}

impl DesignNode {
    pub fn new(kind: NodeKind) -> Self {
        DesignNode {
            kind,
            params: Vec::new(),
            children: Vec::new(),
        }
    }

    pub fn with_param(mut self, key: ParamKey, value: ParamValue) -> Self {
        self.params.push((key, value));
        self
    }

    pub fn with_child(mut self, child: DesignNode) -> Self {
        self.children.push(child);
        self
    }

    /// First value stored under `key`.
    pub fn param(&self, key: ParamKey) -> Option<&ParamValue> {
        self.params.iter().find(|(k, _)| *k == key).map(|(_, v)| v)
    }

    /// Convenience constructor for a propeller arm with its parameters in
    /// grammar order.
    #[allow(clippy::too_many_arguments)]
    pub fn prop_arm(
        arm_length_mm: f64,
        motor: &str,
        prop: &str,
        esc: &str,
        offsets: [f64; 2],
        angle_deg: f64,
        x1_offset: f64,
        z1_offset: f64,
    ) -> Self {
        use ParamValue::{Categorical as C, Numeric as N};
        DesignNode::new(NodeKind::PropArm)
            .with_param(ParamKey::ArmLength, N(arm_length_mm))
            .with_param(ParamKey::MotorType, C(motor.to_string()))
            .with_param(ParamKey::PropType, C(prop.to_string()))
            .with_param(ParamKey::EscType, C(esc.to_string()))
            .with_param(ParamKey::Offset, N(offsets[0]))
            .with_param(ParamKey::Offset, N(offsets[1]))
            .with_param(ParamKey::Angle, N(angle_deg))
            .with_param(ParamKey::X1Offset, N(x1_offset))
            .with_param(ParamKey::Z1Offset, N(z1_offset))
    }

    pub fn wing(span_mm: f64, chord_mm: f64, angle_deg: f64, offset_mm: f64) -> Self {
        use ParamValue::Numeric as N;
        DesignNode::new(NodeKind::Wing)
            .with_param(ParamKey::Span, N(span_mm))
            .with_param(ParamKey::Chord, N(chord_mm))
            .with_param(ParamKey::Angle, N(angle_deg))
            .with_param(ParamKey::Offset, N(offset_mm))
    }

    /// Attaches the root-level battery reference.
    pub fn with_battery(self, battery: &str) -> Self {
        self.with_param(
            ParamKey::BatteryType,
            ParamValue::Categorical(battery.to_string()),
        )
    }

    pub fn battery(&self) -> Option<&str> {
        self.param(ParamKey::BatteryType)
            .and_then(ParamValue::as_categorical)
    }

    /// Number of nodes in the (unexpanded) tree.
    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(DesignNode::node_count).sum::<usize>()
    }

    /// Preorder visit of every node with its path.
    pub fn walk<F: FnMut(&NodePath, &DesignNode)>(&self, mut f: F) {
        fn go<F: FnMut(&NodePath, &DesignNode)>(n: &DesignNode, path: &mut NodePath, f: &mut F) {
            f(path, n);
            for (i, c) in n.children.iter().enumerate() {
                path.0.push(i);
                go(c, path, f);
                path.0.pop();
            }
        }
        go(self, &mut NodePath::root(), &mut f);
    }
}

/// Child-index path from the root.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NodePath(pub Vec<usize>);

impl NodePath {
    pub fn root() -> Self {
        NodePath(Vec::new())
    }
}

impl fmt::Display for NodePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("/");
        }
        for i in &self.0 {
            write!(f, "/{i}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    RootKind,
    ArityRange,
    SymmetryChildCount,
    HubChildCount,
    FuselageChildCount,
    LeafChildren,
    ChildKind,
    ParamOrder,
    ParamType,
    NumericRange,
    BatteryPlacement,
    BatteryRequired,
    CatalogResolution,
    CatalogKind,
}

impl Rule {
    pub fn id(self) -> &'static str {
        match self {
            Rule::RootKind => "root-kind",
            Rule::ArityRange => "arity-range",
            Rule::SymmetryChildCount => "symmetry-child-count",
            Rule::HubChildCount => "hub-child-count",
            Rule::FuselageChildCount => "fuselage-child-count",
            Rule::LeafChildren => "leaf-children",
            Rule::ChildKind => "child-kind",
            Rule::ParamOrder => "param-order",
            Rule::ParamType => "param-type",
            Rule::NumericRange => "numeric-range",
            Rule::BatteryPlacement => "battery-placement",
            Rule::BatteryRequired => "battery-required",
            Rule::CatalogResolution => "catalog-resolution",
            Rule::CatalogKind => "catalog-kind",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub path: NodePath,
    pub rule: Rule,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.rule, self.path, self.message)
    }
}

/// Outcome of [`validate_design`]; valid exactly when there are no
/// violations.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has_rule(&self, rule: Rule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }

    fn push(&mut self, path: &NodePath, rule: Rule, message: String) {
        self.violations.push(Violation {
            path: path.clone(),
            rule,
            message,
        });
    }
}

/// Full validation: structure, parameter rows, numeric ranges and catalog
/// resolution of every component reference.
pub fn validate_design(tree: &DesignNode, catalog: &Catalog) -> ValidationReport {
    let mut report = ValidationReport::default();
    check(tree, Some(catalog), &mut report);
    report
}

/// Validation without a catalog; component references are not resolved.
pub fn validate_structure(tree: &DesignNode) -> ValidationReport {
    let mut report = ValidationReport::default();
    check(tree, None, &mut report);
    report
}

pub(crate) fn require_structure(tree: &DesignNode) -> Result<(), InvalidTree> {
    let mut report = validate_structure(tree);
    if report.violations.is_empty() {
        Ok(())
    } else {
        Err(InvalidTree(report.violations.swap_remove(0)))
    }
}

pub(crate) fn require_valid(tree: &DesignNode, catalog: &Catalog) -> Result<(), InvalidTree> {
    let mut report = validate_design(tree, catalog);
    if report.violations.is_empty() {
        Ok(())
    } else {
        Err(InvalidTree(report.violations.swap_remove(0)))
    }
}

fn check(root: &DesignNode, catalog: Option<&Catalog>, report: &mut ValidationReport) {
    let path = NodePath::root();
    if !grammar::allowed_at_root(root.kind) {
        report.push(
            &path,
            Rule::RootKind,
            format!("{} cannot be the root", root.kind),
        );
    }
    let mut has_arm = false;
    root.walk(|path, node| {
        has_arm |= node.kind == NodeKind::PropArm;
        check_node(node, path, path.0.is_empty(), catalog, report);
    });
    if has_arm && root.battery().is_none() {
        report.push(
            &path,
            Rule::BatteryRequired,
            "design with propeller arms carries no batteryType".to_string(),
        );
    }
}

fn check_node(
    node: &DesignNode,
    path: &NodePath,
    is_root: bool,
    catalog: Option<&Catalog>,
    report: &mut ValidationReport,
) {
    if let NodeKind::Hub { arity, .. } = node.kind {
        if !(MIN_HUB_ARITY..=MAX_HUB_ARITY).contains(&arity) {
            report.push(
                path,
                Rule::ArityRange,
                format!("hub arity {arity} outside {MIN_HUB_ARITY}..={MAX_HUB_ARITY}"),
            );
        }
    }
    let n = node.children.len();
    match (node.kind, grammar::expected_children(node.kind)) {
        (NodeKind::Hub { symmetric: true, .. }, _) if n != 1 => report.push(
            path,
            Rule::SymmetryChildCount,
            format!("symmetric hub must define exactly 1 child, found {n}"),
        ),
        (NodeKind::Hub { .. }, Some(k)) if n != k => report.push(
            path,
            Rule::HubChildCount,
            format!("hub of arity {k} has {n} children"),
        ),
        (NodeKind::PropArm | NodeKind::Wing, _) if n != 0 => report.push(
            path,
            Rule::LeafChildren,
            format!("{} cannot have children", node.kind),
        ),
        (NodeKind::Fuselage, _) if n > grammar::MAX_FUSELAGE_CHILDREN => report.push(
            path,
            Rule::FuselageChildCount,
            format!(
                "fuselage has {n} children, at most {} allowed",
                grammar::MAX_FUSELAGE_CHILDREN
            ),
        ),
        _ => {}
    }
    for child in &node.children {
        if !grammar::allows_child(node.kind, child.kind) && !node.kind.is_leaf() {
            report.push(
                path,
                Rule::ChildKind,
                format!("{} cannot be a child of {}", child.kind, node.kind),
            );
        }
    }
    check_params(node, path, is_root, catalog, report);
}

impl NodeKind {
    fn is_leaf(self) -> bool {
        matches!(self, NodeKind::PropArm | NodeKind::Wing)
    }
}

fn check_params(
    node: &DesignNode,
    path: &NodePath,
    is_root: bool,
    catalog: Option<&Catalog>,
    report: &mut ValidationReport,
) {
    let leading = grammar::leading_params(node.kind);
    let mut params = node.params.as_slice();
    if is_root {
        if let Some(((ParamKey::BatteryType, value), head)) = params.split_last() {
            check_value(&grammar::ROOT_TRAILING, value, path, catalog, report);
            params = head;
        }
    }
    if params
        .iter()
        .any(|(k, _)| *k == ParamKey::BatteryType)
    {
        report.push(
            path,
            Rule::BatteryPlacement,
            "batteryType may only appear once, as the last root parameter".to_string(),
        );
        return;
    }
    let keys_match =
        params.len() == leading.len() && params.iter().zip(leading).all(|((k, _), s)| *k == s.key);
    if !keys_match {
        report.push(
            path,
            Rule::ParamOrder,
            format!(
                "{} expects parameters [{}], found [{}]",
                node.kind,
                join_keys(leading.iter().map(|s| s.key)),
                join_keys(params.iter().map(|(k, _)| *k)),
            ),
        );
        return;
    }
    for ((_, value), slot) in params.iter().zip(leading) {
        check_value(slot, value, path, catalog, report);
    }
}

fn join_keys(keys: impl Iterator<Item = ParamKey>) -> String {
    let v: Vec<&str> = keys.map(ParamKey::name).collect();
    v.join(", ")
}

fn check_value(
    slot: &ParamSlot,
    value: &ParamValue,
    path: &NodePath,
    catalog: Option<&Catalog>,
    report: &mut ValidationReport,
) {
    match (slot.ty, value) {
        (SlotType::Numeric, ParamValue::Numeric(x)) => {
            if !x.is_finite() || (slot.positive && *x <= 0.0) {
                report.push(
                    path,
                    Rule::NumericRange,
                    format!("{} = {x} out of range", slot.key),
                );
            }
        }
        (SlotType::Component(kind), ParamValue::Categorical(id)) => {
            let Some(catalog) = catalog else { return };
            match catalog.kind_of(id) {
                None => report.push(
                    path,
                    Rule::CatalogResolution,
                    format!("{} `{id}` not in catalog", slot.key),
                ),
                Some(found) if found != kind => report.push(
                    path,
                    Rule::CatalogKind,
                    format!("{} `{id}` is a {found}, expected {kind}", slot.key),
                ),
                Some(_) => {}
            }
        }
        (SlotType::Numeric, ParamValue::Categorical(_)) => report.push(
            path,
            Rule::ParamType,
            format!("{} expects a number", slot.key),
        ),
        (SlotType::Component(_), ParamValue::Numeric(_)) => report.push(
            path,
            Rule::ParamType,
            format!("{} expects a component id", slot.key),
        ),
    }
}

/// Replaces every symmetric hub by a plain hub with `arity` deep copies of
/// its child. Idempotent.
pub fn expand_symmetry(tree: &DesignNode) -> Result<DesignNode, InvalidTree> {
    require_structure(tree)?;
    Ok(expand_unchecked(tree))
}

pub(crate) fn expand_unchecked(node: &DesignNode) -> DesignNode {
    match node.kind {
        NodeKind::Hub {
            arity,
            symmetric: true,
        } => {
            let child = expand_unchecked(&node.children[0]);
            DesignNode {
                kind: NodeKind::Hub {
                    arity,
                    symmetric: false,
                },
                params: node.params.clone(),
                children: vec![child; arity as usize],
            }
        }
        _ => DesignNode {
            kind: node.kind,
            params: node.params.clone(),
            children: node.children.iter().map(expand_unchecked).collect(),
        },
    }
}

/// Component totals of the symmetry-expanded design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ComponentCounts {
    pub propellers: usize,
    pub motors: usize,
    pub escs: usize,
    pub wings: usize,
    pub batteries: usize,
    pub fuselages: usize,
    pub hubs: usize,
}

pub fn count_components(tree: &DesignNode) -> Result<ComponentCounts, InvalidTree> {
    require_structure(tree)?;
    let mut counts = ComponentCounts {
        batteries: tree.battery().is_some() as usize,
        ..Default::default()
    };
    count_into(tree, 1, &mut counts);
    Ok(counts)
}

fn count_into(node: &DesignNode, multiplicity: usize, counts: &mut ComponentCounts) {
    match node.kind {
        NodeKind::PropArm => {
            counts.propellers += multiplicity;
            counts.motors += multiplicity;
            counts.escs += multiplicity;
        }
        NodeKind::Wing => counts.wings += multiplicity,
        NodeKind::Fuselage => counts.fuselages += multiplicity,
        NodeKind::Hub { .. } => counts.hubs += multiplicity,
    }
    let child_multiplicity = match node.kind {
        NodeKind::Hub {
            arity,
            symmetric: true,
        } => multiplicity * arity as usize,
        _ => multiplicity,
    };
    for child in &node.children {
        count_into(child, child_multiplicity, counts);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::tests::small_catalog;

    fn arm() -> DesignNode {
        DesignNode::prop_arm(
            200.0,
            "motor_a",
            "prop_10x5",
            "esc_30",
            [0.0, 0.0],
            0.0,
            0.0,
            0.0,
        )
    }

    fn sym_quad() -> DesignNode {
        DesignNode::new(NodeKind::hub(4, true))
            .with_child(arm())
            .with_battery("bat_3s")
    }

    #[test]
    fn literals_round_trip() {
        for i in 0..NodeKind::LITERAL_COUNT {
            let kind = NodeKind::from_literal_index(i).unwrap();
            assert_eq!(kind.literal_index(), Some(i));
            let text = kind.to_string();
            assert_eq!(text.parse::<NodeKind>(), Ok(kind));
        }
        assert_eq!(NodeKind::hub(4, true).to_string(), "ConnectedHub4_Sym");
        for bad in ["ConnectedHub14", "ConnectedHub1", "ConnectedHub04", "ConnectedHub", "Hub4"] {
            assert!(bad.parse::<NodeKind>().is_err(), "{bad}");
        }
    }

    #[test]
    fn symmetric_quad_is_valid() {
        let report = validate_design(&sym_quad(), &small_catalog());
        assert!(report.is_valid(), "{:?}", report.violations);
    }

    #[test]
    fn symmetric_hub_with_two_children() {
        let tree = DesignNode::new(NodeKind::hub(4, true))
            .with_child(arm())
            .with_child(arm())
            .with_battery("bat_3s");
        let report = validate_design(&tree, &small_catalog());
        assert!(!report.is_valid());
        assert!(report.has_rule(Rule::SymmetryChildCount));
    }

    #[test]
    fn unresolvable_motor() {
        let bad = DesignNode::prop_arm(
            200.0,
            "nonexistent_motor",
            "prop_10x5",
            "esc_30",
            [0.0, 0.0],
            0.0,
            0.0,
            0.0,
        );
        let tree = DesignNode::new(NodeKind::hub(4, true))
            .with_child(bad)
            .with_battery("bat_3s");
        let report = validate_design(&tree, &small_catalog());
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].rule, Rule::CatalogResolution);
        assert_eq!(report.violations[0].path.to_string(), "/0");
        // Structure alone is fine.
        assert!(validate_structure(&tree).is_valid());
    }

    #[test]
    fn wrong_component_kind() {
        let bad = DesignNode::prop_arm(
            200.0, "prop_10x5", "prop_10x5", "esc_30", [0.0, 0.0], 0.0, 0.0, 0.0,
        );
        let tree = DesignNode::new(NodeKind::hub(2, true))
            .with_child(bad)
            .with_battery("bat_3s");
        let report = validate_design(&tree, &small_catalog());
        assert!(report.has_rule(Rule::CatalogKind));
    }

    #[test]
    fn reports_every_violation() {
        let mut arm_bad = arm();
        arm_bad.params.swap(1, 2);
        let tree = DesignNode::new(NodeKind::hub(3, false))
            .with_child(arm_bad)
            .with_child(DesignNode::new(NodeKind::Fuselage))
            .with_child(DesignNode::wing(-1.0, 100.0, 0.0, 0.0));
        let report = validate_design(&tree, &small_catalog());
        let rules: Vec<Rule> = report.violations.iter().map(|v| v.rule).collect();
        assert!(rules.contains(&Rule::ParamOrder));
        assert!(rules.contains(&Rule::ChildKind));
        assert!(rules.contains(&Rule::NumericRange));
        assert!(rules.contains(&Rule::BatteryRequired));
    }

    #[test]
    fn arity_and_root_rules() {
        let tree = DesignNode::new(NodeKind::hub(14, true)).with_child(DesignNode::wing(
            100.0, 100.0, 0.0, 0.0,
        ));
        assert!(validate_structure(&tree).has_rule(Rule::ArityRange));
        let arm_root = arm().with_battery("bat_3s");
        assert!(validate_structure(&arm_root).has_rule(Rule::RootKind));
    }

    #[test]
    fn battery_only_at_root_end() {
        let mut inner = DesignNode::new(NodeKind::hub(2, true)).with_child(arm());
        inner = inner.with_battery("bat_3s");
        let tree = DesignNode::new(NodeKind::hub(2, true))
            .with_child(inner)
            .with_battery("bat_3s");
        assert!(validate_structure(&tree).has_rule(Rule::BatteryPlacement));
    }

    #[test]
    fn expand_symmetric_quad() {
        let expanded = expand_symmetry(&sym_quad()).unwrap();
        assert_eq!(expanded.kind, NodeKind::hub(4, false));
        assert_eq!(expanded.children.len(), 4);
        assert!(expanded.children.iter().all(|c| *c == arm()));
        assert_eq!(expanded.battery(), Some("bat_3s"));
        assert!(validate_design(&expanded, &small_catalog()).is_valid());
    }

    #[test]
    fn expand_is_identity_without_symmetry() {
        let tree = DesignNode::new(NodeKind::hub(2, false))
            .with_child(arm())
            .with_child(DesignNode::wing(800.0, 150.0, 5.0, 0.0))
            .with_battery("bat_3s");
        assert_eq!(expand_symmetry(&tree).unwrap(), tree);
    }

    #[test]
    fn nested_symmetry_multiplies() {
        // Hub3_Sym -> Hub2_Sym -> PropArm: written out by hand this is
        // 3 hubs of 2 arms each, i.e. 6 copies of the arm.
        let tree = DesignNode::new(NodeKind::hub(3, true))
            .with_child(DesignNode::new(NodeKind::hub(2, true)).with_child(arm()))
            .with_battery("bat_3s");
        let expanded = expand_symmetry(&tree).unwrap();
        let mut arms = 0;
        expanded.walk(|_, n| arms += (*n == arm()) as usize);
        assert_eq!(arms, 6);
        assert_eq!(expanded.children.len(), 3);
        assert!(expanded
            .children
            .iter()
            .all(|h| h.kind == NodeKind::hub(2, false) && h.children.len() == 2));
        assert_eq!(count_components(&tree).unwrap().propellers, 6);
    }

    #[test]
    fn counts() {
        let quad = count_components(&sym_quad()).unwrap();
        assert_eq!((quad.propellers, quad.wings, quad.batteries), (4, 0, 1));

        let fuselage = count_components(&DesignNode::new(NodeKind::Fuselage)).unwrap();
        assert_eq!(
            fuselage,
            ComponentCounts {
                fuselages: 1,
                ..Default::default()
            }
        );

        let tri = DesignNode::new(NodeKind::hub(13, true))
            .with_child(arm())
            .with_battery("bat_3s");
        assert_eq!(count_components(&tri).unwrap().propellers, 13);
    }

    #[test]
    fn invalid_tree_is_an_error() {
        let tree = DesignNode::new(NodeKind::hub(4, true));
        assert!(expand_symmetry(&tree).is_err());
        assert!(count_components(&tree).is_err());
    }
}
