//! A symmetric quadcopter built from bundled catalog parts, used as a
//! fixed example in tests and documentation.

use skyforge_core::{DesignNode, NodeKind};

pub const MOTOR: &str = "t_motor_MN2212KV780";
pub const PROPELLER: &str = "apc_propellers_12x5";
pub const ESC: &str = "t_motor_T_80A";
pub const BATTERY: &str = "TurnigyGraphene1400mAh3S75C";

/// One arm, repeated four times by the symmetric hub.
pub fn quadcopter() -> DesignNode {
    DesignNode::new(NodeKind::hub(4, true))
        .with_child(DesignNode::prop_arm(
            210.88760375976562,
            MOTOR,
            PROPELLER,
            ESC,
            [-3.2862548828125, 4.2498626708984375],
            0.0,
            4.219192504882812,
            3.637290954589844,
        ))
        .with_battery(BATTERY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog_io;
    use skyforge_core::design::validate_design;

    #[test]
    fn valid_against_bundled_catalog() {
        assert!(validate_design(&quadcopter(), &catalog_io::bundled()).is_valid());
    }
}
