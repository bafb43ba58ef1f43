//! Three-level current draw and coulomb-counting battery.

use serde::{Deserialize, Serialize};

use crate::controller::ControllerNode;
use crate::motor::MotorMode;

const MS_PER_HOUR: f64 = 3_600_000.0;

/// Measured operating points of the whole system, mA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurrentProfile {
    pub idle_ma: f64,
    pub inference_ma: f64,
    pub operation_ma: f64,
}

impl Default for CurrentProfile {
    fn default() -> Self {
        Self {
            idle_ma: 130.0,
            inference_ma: 250.0,
            operation_ma: 450.0,
        }
    }
}

/// What the system is doing, for billing purposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activity {
    Off,
    Running { node: ControllerNode, motor: MotorMode },
}

/// Vision loop only -> inference current; any motor motion or hold
/// (including hold under load) -> operation current.
pub fn current_for(profile: &CurrentProfile, activity: Activity) -> f64 {
    match activity {
        Activity::Off => profile.idle_ma,
        Activity::Running { node, motor } => {
            let node_active = matches!(
                node,
                ControllerNode::WaitClose | ControllerNode::Holding | ControllerNode::WaitOpen
            );
            let motor_active = motor != MotorMode::IdleOpen;
            if node_active || motor_active {
                profile.operation_ma
            } else {
                profile.inference_ma
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatteryState {
    pub capacity_mah: f64,
    pub consumed_mah: f64,
    pub nominal_voltage: f64,
    /// Fraction of nameplate capacity actually usable, `(0, 1]`.
    pub derating: f64,
    pub depleted: bool,
}

impl Default for BatteryState {
    fn default() -> Self {
        Self {
            capacity_mah: 1300.0,
            consumed_mah: 0.0,
            nominal_voltage: 11.1,
            derating: 1.0,
            depleted: false,
        }
    }
}

impl BatteryState {
    pub fn usable_mah(&self) -> f64 {
        self.capacity_mah * self.derating
    }

    pub fn remaining_mah(&self) -> f64 {
        (self.usable_mah() - self.consumed_mah).max(0.0)
    }

    pub fn energy_wh(&self) -> f64 {
        self.consumed_mah * self.nominal_voltage / 1000.0
    }
}

/// Draws `current_ma` for `dt_ms`. Consumption saturates at the usable
/// capacity, where the battery is flagged depleted.
pub fn integrate(battery: &BatteryState, current_ma: f64, dt_ms: u64) -> BatteryState {
    let mut next = *battery;
    if next.depleted || dt_ms == 0 {
        return next;
    }
    next.consumed_mah += current_ma * dt_ms as f64 / MS_PER_HOUR;
    let usable = next.usable_mah();
    if next.consumed_mah >= usable {
        next.consumed_mah = usable;
        next.depleted = true;
    }
    next
}
