#![allow(dead_code)]

use skyforge_core::{Catalog, CatalogLayout, ComponentKind, ComponentRecord};

/// A few dozen parts spread over realistic ranges.
pub fn catalog() -> Catalog {
    let mut r = Vec::new();
    for i in 0..12 {
        let kv = 300.0 + 150.0 * i as f64;
        r.push(ComponentRecord::new(
            &format!("motor_{i}"),
            ComponentKind::Motor,
            &[("kv_rpm_per_volt", kv), ("max_current_A", 10.0 + 4.0 * i as f64), ("resistance_ohm", 0.05), ("mass_g", 30.0 + 8.0 * i as f64)],
        ));
    }
    for d in [5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 12.0, 15.0] {
        r.push(ComponentRecord::new(
            &format!("prop_{d}"),
            ComponentKind::Propeller,
            &[("diameter_in", d), ("pitch_in", d / 2.0), ("thrust_coeff_Ct", 0.1), ("power_coeff_Cp", 0.045), ("mass_g", 0.1 * d * d)],
        ));
    }
    for a in [12.0, 20.0, 30.0, 45.0, 60.0] {
        r.push(ComponentRecord::new(
            &format!("esc_{a}"),
            ComponentKind::Esc,
            &[("max_current_A", a), ("mass_g", a / 2.0)],
        ));
    }
    for (i, (cap, v)) in [(1300.0, 11.1), (2200.0, 11.1), (3300.0, 14.8), (5000.0, 22.2)].into_iter().enumerate() {
        r.push(ComponentRecord::new(
            &format!("battery_{i}"),
            ComponentKind::Battery,
            &[("capacity_mAh", cap), ("voltage_V", v), ("max_discharge_C", 50.0), ("mass_g", cap * v / 150.0)],
        ));
    }
    Catalog::new(r, CatalogLayout::STANDARD).unwrap()
}
