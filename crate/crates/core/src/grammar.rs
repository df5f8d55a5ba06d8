//! The frozen grammar table: which parameters each node kind carries, in
//! which order, and which children it may own.
//!
//! The table is the single source of truth for flattening, parsing and
//! validation. Changing an entry changes the token language.

use crate::catalog::ComponentKind;
use crate::design::{NodeKind, ParamKey};

/// Type of value a parameter slot accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotType {
    /// Length in millimeters or angle in degrees, depending on the key.
    Numeric,
    /// Reference to a catalog record of the given kind.
    Component(ComponentKind),
}

/// One parameter position in a node's grammar row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamSlot {
    pub key: ParamKey,
    pub ty: SlotType,
    /// Value must be strictly positive (lengths).
    pub positive: bool,
}

const fn num(key: ParamKey) -> ParamSlot {
    ParamSlot {
        key,
        ty: SlotType::Numeric,
        positive: false,
    }
}

const fn len(key: ParamKey) -> ParamSlot {
    ParamSlot {
        key,
        ty: SlotType::Numeric,
        positive: true,
    }
}

const fn part(key: ParamKey, kind: ComponentKind) -> ParamSlot {
    ParamSlot {
        key,
        ty: SlotType::Component(kind),
        positive: false,
    }
}

const PROP_ARM: [ParamSlot; 9] = [
    len(ParamKey::ArmLength),
    part(ParamKey::MotorType, ComponentKind::Motor),
    part(ParamKey::PropType, ComponentKind::Propeller),
    part(ParamKey::EscType, ComponentKind::Esc),
    num(ParamKey::Offset),
    num(ParamKey::Offset),
    num(ParamKey::Angle),
    num(ParamKey::X1Offset),
    num(ParamKey::Z1Offset),
];

const WING: [ParamSlot; 4] = [
    len(ParamKey::Span),
    len(ParamKey::Chord),
    num(ParamKey::Angle),
    num(ParamKey::Offset),
];

/// Optional parameter carried by the root and emitted after the whole tree.
pub const ROOT_TRAILING: ParamSlot = part(ParamKey::BatteryType, ComponentKind::Battery);

/// Most children a fuselage may carry.
pub const MAX_FUSELAGE_CHILDREN: usize = 16;

/// Parameters emitted directly after a node's `node_type` token.
pub fn leading_params(kind: NodeKind) -> &'static [ParamSlot] {
    match kind {
        NodeKind::PropArm => &PROP_ARM,
        NodeKind::Wing => &WING,
        NodeKind::Hub { .. } | NodeKind::Fuselage => &[],
    }
}

/// Whether `child` may appear directly under `parent`.
pub fn allows_child(parent: NodeKind, child: NodeKind) -> bool {
    match parent {
        NodeKind::Hub { .. } | NodeKind::Fuselage => matches!(
            child,
            NodeKind::Hub { .. } | NodeKind::PropArm | NodeKind::Wing
        ),
        NodeKind::PropArm | NodeKind::Wing => false,
    }
}

pub fn allowed_at_root(kind: NodeKind) -> bool {
    matches!(kind, NodeKind::Hub { .. } | NodeKind::Fuselage)
}

/// Exact number of children the node expects, or `None` when the count is
/// variable (fuselage).
pub fn expected_children(kind: NodeKind) -> Option<usize> {
    match kind {
        NodeKind::Hub {
            symmetric: true, ..
        } => Some(1),
        NodeKind::Hub { arity, .. } => Some(arity as usize),
        NodeKind::PropArm | NodeKind::Wing => Some(0),
        NodeKind::Fuselage => None,
    }
}
