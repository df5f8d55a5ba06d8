//! Closed-form static hover oracle.
//!
//! Stands in for a full flight-dynamics evaluation. A design hovers when,
//! at the rotor speed needed to carry its weight, every motor stays within
//! its rpm and current limits, every ESC within its current rating and the
//! battery within its discharge rating, and no two neighbouring propeller
//! disks on a hub overlap.
//!
//! Propellers follow the static similarity relations
//! `T = Ct·ρ·n²·D⁴` and `P = Cp·ρ·n³·D⁵` with `n` in rev/s and `D` in m.
//! All rotors of a design turn at a common speed, so thrust splits in
//! proportion to `Ct·D⁴`.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use crate::catalog::{BatterySpec, Catalog};
use crate::design::{self, DesignNode, NodeKind, ParamKey};
use crate::error::{ConfigError, InvalidTree};

/// Standard gravity, m/s².
pub const GRAVITY: f64 = 9.80665;
const MM_PER_INCH: f64 = 25.4;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct PhysicsConstants {
    /// kg/m³, sea-level standard.
    pub air_density_rho: f64,
    /// Fraction of the no-load speed `Kv·V` reachable under load.
    pub loaded_rpm_fraction: f64,
    pub drivetrain_efficiency: f64,
    pub usable_battery_fraction: f64,
    /// g/mm
    pub arm_linear_density: f64,
    /// g
    pub fuselage_base_mass: f64,
    /// g/mm² of planform area.
    pub wing_area_density: f64,
    /// mm between neighbouring propeller tips.
    pub min_tip_clearance_mm: f64,
}

impl Default for PhysicsConstants {
    fn default() -> Self {
        PhysicsConstants {
            air_density_rho: 1.225,
            loaded_rpm_fraction: 0.80,
            drivetrain_efficiency: 0.75,
            usable_battery_fraction: 0.80,
            arm_linear_density: 0.05,
            fuselage_base_mass: 250.0,
            wing_area_density: 0.001,
            min_tip_clearance_mm: 10.0,
        }
    }
}

impl PhysicsConstants {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fields = [
            ("air_density_rho", self.air_density_rho),
            ("loaded_rpm_fraction", self.loaded_rpm_fraction),
            ("drivetrain_efficiency", self.drivetrain_efficiency),
            ("usable_battery_fraction", self.usable_battery_fraction),
            ("arm_linear_density", self.arm_linear_density),
            ("fuselage_base_mass", self.fuselage_base_mass),
            ("wing_area_density", self.wing_area_density),
            ("min_tip_clearance_mm", self.min_tip_clearance_mm),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::Invalid(alloc::format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FailureReason {
    /// Not produced by the static model (an rpm shortfall is reported as
    /// `MotorRpmLimit`); kept for record compatibility.
    ThrustDeficit,
    MotorRpmLimit,
    MotorCurrentLimit,
    EscCurrentLimit,
    BatteryDischargeLimit,
    Interference,
    NoPropellers,
}

impl FailureReason {
    pub const ALL: [FailureReason; 7] = [
        FailureReason::ThrustDeficit,
        FailureReason::MotorRpmLimit,
        FailureReason::MotorCurrentLimit,
        FailureReason::EscCurrentLimit,
        FailureReason::BatteryDischargeLimit,
        FailureReason::Interference,
        FailureReason::NoPropellers,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FailureReason::ThrustDeficit => "thrust_deficit",
            FailureReason::MotorRpmLimit => "motor_rpm_limit",
            FailureReason::MotorCurrentLimit => "motor_current_limit",
            FailureReason::EscCurrentLimit => "esc_current_limit",
            FailureReason::BatteryDischargeLimit => "battery_discharge_limit",
            FailureReason::Interference => "interference",
            FailureReason::NoPropellers => "no_propellers",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|r| r.name() == name)
    }
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoverResult {
    pub can_hover: bool,
    pub hover_time_s: f64,
    pub total_mass_kg: f64,
    /// Electrical power drawn at hover (0 when no rotor speed could be
    /// computed).
    pub hover_power_w: f64,
    /// Common rotor speed needed to hover, rev/s.
    pub rotor_speed_rps: f64,
    pub failure_reason: Option<FailureReason>,
}

impl HoverResult {
    /// 1 iff the hover time is positive.
    pub fn label(&self) -> u8 {
        (self.hover_time_s > 0.0) as u8
    }
}

/// One rotor of the expanded design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotor {
    pub kv_rpm_per_volt: f64,
    pub motor_max_current_a: f64,
    pub esc_max_current_a: f64,
    pub thrust_coeff: f64,
    pub power_coeff: f64,
    pub diameter_m: f64,
}

/// Everything the oracle needs from a design, already rolled up.
#[derive(Debug, Clone, PartialEq)]
pub struct HoverProblem {
    pub total_mass_kg: f64,
    pub rotors: Vec<Rotor>,
    pub battery: Option<BatterySpec>,
    pub interference: bool,
}

/// `n = sqrt((W / rotors) / (Ct·ρ·D⁴))` in rev/s.
pub fn required_rotor_speed(
    weight_n: f64,
    rotor_count: usize,
    thrust_coeff: f64,
    diameter_m: f64,
    air_density: f64,
) -> Option<f64> {
    if rotor_count == 0 {
        return None;
    }
    let per_rotor = weight_n / rotor_count as f64;
    Some(libm::sqrt(
        per_rotor / (thrust_coeff * air_density * libm::pow(diameter_m, 4.0)),
    ))
}

/// Component, arm, wing, battery and fuselage mass of the expanded design,
/// in kg.
pub fn mass_rollup(tree: &DesignNode, catalog: &Catalog, constants: &PhysicsConstants) -> Result<f64, InvalidTree> {
    design::require_valid(tree, catalog)?;
    let expanded = design::expand_unchecked(tree);
    Ok(rollup_expanded(&expanded, catalog, constants))
}

fn rollup_expanded(expanded: &DesignNode, catalog: &Catalog, c: &PhysicsConstants) -> f64 {
    let mut grams = c.fuselage_base_mass;
    if let Some(b) = expanded.battery().and_then(|id| catalog.battery(id)) {
        grams += b.mass_g;
    }
    expanded.walk(|_, node| match node.kind {
        NodeKind::PropArm => grams += arm_mass_g(node, catalog, c),
        NodeKind::Wing => {
            grams += c.wing_area_density * numeric(node, ParamKey::Span) * numeric(node, ParamKey::Chord)
        }
        _ => {}
    });
    grams / 1000.0
}

fn arm_mass_g(node: &DesignNode, catalog: &Catalog, c: &PhysicsConstants) -> f64 {
    let part = |key| {
        node.param(key)
            .and_then(|v| v.as_categorical())
            .and_then(|id| catalog.spec(id))
            .map_or(0.0, |s| s.mass_g())
    };
    c.arm_linear_density * numeric(node, ParamKey::ArmLength)
        + part(ParamKey::MotorType)
        + part(ParamKey::PropType)
        + part(ParamKey::EscType)
}

fn numeric(node: &DesignNode, key: ParamKey) -> f64 {
    node.param(key).and_then(|v| v.as_numeric()).unwrap_or(0.0)
}

fn id(node: &DesignNode, key: ParamKey) -> &str {
    node.param(key).and_then(|v| v.as_categorical()).unwrap_or("")
}

impl HoverProblem {
    pub fn from_design(tree: &DesignNode, catalog: &Catalog, constants: &PhysicsConstants) -> Result<Self, InvalidTree> {
        design::require_valid(tree, catalog)?;
        let expanded = design::expand_unchecked(tree);
        let total_mass_kg = rollup_expanded(&expanded, catalog, constants);
        let mut rotors = Vec::new();
        let mut interference = false;
        expanded.walk(|_, node| {
            if node.kind == NodeKind::PropArm {
                rotors.push(rotor_of(node, catalog));
            }
            if let NodeKind::Hub { .. } = node.kind {
                interference |= hub_interferes(node, catalog, constants);
            }
        });
        Ok(HoverProblem {
            total_mass_kg,
            rotors,
            battery: expanded.battery().and_then(|b| catalog.battery(b)),
            interference,
        })
    }

    pub fn solve(&self, c: &PhysicsConstants) -> HoverResult {
        let fail = |reason, power, speed| HoverResult {
            can_hover: false,
            hover_time_s: 0.0,
            total_mass_kg: self.total_mass_kg,
            hover_power_w: power,
            rotor_speed_rps: speed,
            failure_reason: Some(reason),
        };
        if self.rotors.is_empty() {
            return fail(FailureReason::NoPropellers, 0.0, 0.0);
        }
        if self.interference {
            return fail(FailureReason::Interference, 0.0, 0.0);
        }
        let weight = self.total_mass_kg * GRAVITY;
        // Identical rotors share the load evenly; otherwise the common speed
        // balances total thrust against weight.
        let speed = match self.rotors.split_first() {
            Some((first, rest)) if rest.iter().all(|r| r == first) => required_rotor_speed(
                weight,
                self.rotors.len(),
                first.thrust_coeff,
                first.diameter_m,
                c.air_density_rho,
            )
            .unwrap_or(0.0),
            _ => {
                let share: f64 = self
                    .rotors
                    .iter()
                    .map(|r| r.thrust_coeff * libm::pow(r.diameter_m, 4.0))
                    .sum();
                libm::sqrt(weight / (c.air_density_rho * share))
            }
        };

        let voltage = self.battery.map_or(0.0, |b| b.voltage_v);
        let mut total_power = 0.0;
        let mut total_current = 0.0;
        let mut rpm_limited = false;
        let mut motor_limited = false;
        let mut esc_limited = false;
        for r in &self.rotors {
            let max_speed = r.kv_rpm_per_volt * voltage * c.loaded_rpm_fraction / 60.0;
            rpm_limited |= speed > max_speed;
            let mech = r.power_coeff * c.air_density_rho * libm::pow(speed, 3.0) * libm::pow(r.diameter_m, 5.0);
            let elec = mech / c.drivetrain_efficiency;
            let current = if voltage > 0.0 { elec / voltage } else { f64::INFINITY };
            motor_limited |= current > r.motor_max_current_a;
            esc_limited |= current > r.esc_max_current_a;
            total_power += elec;
            total_current += current;
        }
        if rpm_limited {
            return fail(FailureReason::MotorRpmLimit, total_power, speed);
        }
        if motor_limited {
            return fail(FailureReason::MotorCurrentLimit, total_power, speed);
        }
        if esc_limited {
            return fail(FailureReason::EscCurrentLimit, total_power, speed);
        }
        let Some(battery) = self.battery else {
            return fail(FailureReason::BatteryDischargeLimit, total_power, speed);
        };
        let capacity_ah = battery.capacity_mah / 1000.0;
        if total_current > capacity_ah * battery.max_discharge_c {
            return fail(FailureReason::BatteryDischargeLimit, total_power, speed);
        }
        let energy_j = capacity_ah * c.usable_battery_fraction * battery.voltage_v * 3600.0;
        HoverResult {
            can_hover: true,
            hover_time_s: energy_j / total_power,
            total_mass_kg: self.total_mass_kg,
            hover_power_w: total_power,
            rotor_speed_rps: speed,
            failure_reason: None,
        }
    }
}

fn rotor_of(arm: &DesignNode, catalog: &Catalog) -> Rotor {
    let motor = catalog.motor(id(arm, ParamKey::MotorType)).expect("validated motor");
    let prop = catalog.propeller(id(arm, ParamKey::PropType)).expect("validated propeller");
    let esc = catalog.esc(id(arm, ParamKey::EscType)).expect("validated esc");
    Rotor {
        kv_rpm_per_volt: motor.kv_rpm_per_volt,
        motor_max_current_a: motor.max_current_a,
        esc_max_current_a: esc.max_current_a,
        thrust_coeff: prop.thrust_coeff,
        power_coeff: prop.power_coeff,
        diameter_m: prop.diameter_in * MM_PER_INCH / 1000.0,
    }
}

/// Connections of a hub are spread evenly around it; arm `i` puts its
/// propeller centre `armLength_i` from the hub centre. Neighbouring disks
/// must keep the tip clearance.
fn hub_interferes(hub: &DesignNode, catalog: &Catalog, c: &PhysicsConstants) -> bool {
    let k = hub.children.len();
    if k < 2 {
        return false;
    }
    let step = 2.0 * PI / k as f64;
    let disk = |n: &DesignNode| -> Option<(f64, f64)> {
        if n.kind != NodeKind::PropArm {
            return None;
        }
        let prop = catalog.propeller(id(n, ParamKey::PropType))?;
        Some((numeric(n, ParamKey::ArmLength), prop.diameter_in * MM_PER_INCH / 2.0))
    };
    for i in 0..k {
        let j = (i + 1) % k;
        if k == 2 && i == 1 {
            break;
        }
        let (Some((ri, rad_i)), Some((rj, rad_j))) = (disk(&hub.children[i]), disk(&hub.children[j])) else {
            continue;
        };
        let d2 = ri * ri + rj * rj - 2.0 * ri * rj * libm::cos(step);
        let need = rad_i + rad_j + c.min_tip_clearance_mm;
        if libm::sqrt(d2.max(0.0)) < need {
            return true;
        }
    }
    false
}

pub fn evaluate_hover(tree: &DesignNode, catalog: &Catalog, constants: &PhysicsConstants) -> Result<HoverResult, InvalidTree> {
    Ok(HoverProblem::from_design(tree, catalog, constants)?.solve(constants))
}

/// Binary hover label (1 iff hover time > 0) with the full result.
pub fn label_design(tree: &DesignNode, catalog: &Catalog, constants: &PhysicsConstants) -> Result<(u8, HoverResult), InvalidTree> {
    let result = evaluate_hover(tree, catalog, constants)?;
    Ok((result.label(), result))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::tests::{battery, esc, motor, prop};
    use crate::catalog::CatalogLayout;
    use crate::design::{expand_symmetry, NodeKind};
    use alloc::vec;

    fn catalog() -> Catalog {
        Catalog::new(
            vec![
                motor("m60", 1000.0, 30.0, 60.0),
                prop("p10", 10.0, 0.10, 0.05, 13.0),
                prop("p20", 20.0, 0.10, 0.05, 50.0),
                esc("e9", 30.0, 9.0),
                battery("b", 2200.0, 11.1, 25.0, 180.0),
            ],
            CatalogLayout::STANDARD,
        )
        .unwrap()
    }

    fn quad(arity: u8, arm: f64, prop: &str) -> DesignNode {
        DesignNode::new(NodeKind::hub(arity, true))
            .with_child(DesignNode::prop_arm(arm, "m60", prop, "e9", [0.0, 0.0], 0.0, 0.0, 0.0))
            .with_battery("b")
    }

    #[test]
    fn fuselage_only_mass() {
        let m = mass_rollup(&DesignNode::new(NodeKind::Fuselage), &catalog(), &PhysicsConstants::default()).unwrap();
        assert_eq!(m, 0.250);
    }

    #[test]
    fn quad_mass_by_hand() {
        let m = mass_rollup(&quad(4, 200.0, "p10"), &catalog(), &PhysicsConstants::default()).unwrap();
        let expected = 0.250 + 4.0 * (0.05 * 200.0 + 60.0 + 13.0 + 9.0) / 1000.0 + 0.180;
        assert!((m - expected).abs() < 1e-15, "{m} vs {expected}");
    }

    #[test]
    fn doubling_arity_doubles_arm_mass() {
        let c = PhysicsConstants::default();
        let cat = catalog();
        let base = 0.250 + 0.180;
        let m4 = mass_rollup(&quad(4, 200.0, "p10"), &cat, &c).unwrap() - base;
        let m8 = mass_rollup(&quad(8, 200.0, "p10"), &cat, &c).unwrap() - base;
        assert!((m8 - 2.0 * m4).abs() < 1e-15);
    }

    #[test]
    fn rotor_speed_laws() {
        let n = required_rotor_speed(11.772, 4, 0.10, 0.254, 1.225).unwrap();
        assert!((n - 75.97).abs() < 0.01, "{n}");
        assert_eq!(required_rotor_speed(0.0, 4, 0.10, 0.254, 1.225), Some(0.0));
        let n2 = required_rotor_speed(2.0 * 11.772, 4, 0.10, 0.254, 1.225).unwrap();
        assert!((n2 / n - core::f64::consts::SQRT_2).abs() < 1e-12);
        assert_eq!(required_rotor_speed(1.0, 0, 0.1, 0.2, 1.225), None);
    }

    #[test]
    fn no_propellers() {
        let tree = DesignNode::new(NodeKind::Fuselage)
            .with_child(DesignNode::wing(1000.0, 200.0, 0.0, 0.0))
            .with_child(DesignNode::wing(1000.0, 200.0, 0.0, 0.0));
        let r = evaluate_hover(&tree, &catalog(), &PhysicsConstants::default()).unwrap();
        assert!(!r.can_hover);
        assert_eq!(r.hover_time_s, 0.0);
        assert_eq!(r.failure_reason, Some(FailureReason::NoPropellers));
        assert_eq!(r.label(), 0);
    }

    #[test]
    fn quad_hovers_and_is_symmetry_consistent() {
        let cat = catalog();
        let c = PhysicsConstants::default();
        let tree = quad(4, 200.0, "p10");
        let (label, r) = label_design(&tree, &cat, &c).unwrap();
        assert_eq!(label, 1);
        assert!(r.can_hover && r.failure_reason.is_none() && r.hover_time_s > 0.0);
        let expanded = expand_symmetry(&tree).unwrap();
        assert_eq!(evaluate_hover(&expanded, &cat, &c).unwrap(), r);
    }

    #[test]
    fn interference_between_large_props() {
        // 20" props (508 mm) on 13 arms of 200 mm cannot fit.
        let r = evaluate_hover(&quad(13, 200.0, "p20"), &catalog(), &PhysicsConstants::default()).unwrap();
        assert_eq!(r.failure_reason, Some(FailureReason::Interference));
        // Two arms at 180° with 10" props: centres 400 mm apart > 264 mm.
        let r = evaluate_hover(&quad(2, 200.0, "p10"), &catalog(), &PhysicsConstants::default()).unwrap();
        assert_ne!(r.failure_reason, Some(FailureReason::Interference));
    }

    #[test]
    fn invalid_tree_error() {
        let tree = DesignNode::new(NodeKind::hub(4, true))
            .with_child(DesignNode::prop_arm(200.0, "ghost", "p10", "e9", [0.0, 0.0], 0.0, 0.0, 0.0))
            .with_battery("b");
        assert!(evaluate_hover(&tree, &catalog(), &PhysicsConstants::default()).is_err());
        assert!(mass_rollup(&tree, &catalog(), &PhysicsConstants::default()).is_err());
    }

    #[test]
    fn constants_validate() {
        PhysicsConstants::default().validate().unwrap();
        let bad = PhysicsConstants {
            drivetrain_efficiency: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
