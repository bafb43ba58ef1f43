//! Simulated plant: five tendon-driven fingers, one servo each, and the
//! object being grasped.
//!
//! Each finger is reduced to a single flexion scalar in `[0, 1]` that is
//! linear in its servo angle. Fingertip pressure is a linear spring that
//! engages once flexion passes the finger's contact point on the object.

use serde::{Deserialize, Serialize};

use crate::error::DomainError;
use crate::timeline::Timeline;

pub const FINGER_COUNT: usize = 5;

pub const OPEN_ANGLE: f64 = 0.0;
pub const CLOSED_ANGLE: f64 = 180.0;

/// SG90 class servo: 0.1 s per 60°.
pub const DEFAULT_SLEW_RATE: f64 = 600.0;

/// Residual below which a servo snaps onto its command, so accumulated
/// floating-point error never costs an extra tick.
const SNAP_EPSILON_DEG: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FingerId {
    Thumb,
    Index,
    Middle,
    Ring,
    Pinky,
}

impl FingerId {
    pub const ALL: [FingerId; FINGER_COUNT] = [
        FingerId::Thumb,
        FingerId::Index,
        FingerId::Middle,
        FingerId::Ring,
        FingerId::Pinky,
    ];

    /// Stable telemetry ordering, 0..4.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServoState {
    pub commanded_angle: f64,
    pub current_angle: f64,
    /// Degrees per second, > 0.
    pub slew_rate: f64,
    pub halted: bool,
}

impl ServoState {
    pub fn at_rest(angle: f64, slew_rate: f64) -> Self {
        Self {
            commanded_angle: angle,
            current_angle: angle,
            slew_rate,
            halted: false,
        }
    }

    fn stepped(&self, dt_ms: u64) -> Self {
        let mut next = *self;
        if self.halted {
            return next;
        }
        let max_step = self.slew_rate * dt_ms as f64 / 1000.0;
        let remaining = self.commanded_angle - self.current_angle;
        next.current_angle = if remaining.abs() <= max_step + SNAP_EPSILON_DEG {
            self.commanded_angle
        } else {
            self.current_angle + max_step.copysign(remaining)
        };
        next.current_angle = next.current_angle.clamp(OPEN_ANGLE, CLOSED_ANGLE);
        next
    }
}

/// Piecewise-linear object path in the wrist frame, millimetres.
/// `x` points forward along the palm normal (the camera and TOF axis),
/// `y` is lateral and `z` is vertical.
pub type Trajectory = Timeline<[f64; 3]>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub label: String,
    pub trajectory: Trajectory,
    /// Flexion at which each fingertip touches the object.
    pub contact_flexion: [f64; FINGER_COUNT],
    /// Pressure units per unit flexion past contact.
    pub stiffness: f64,
    pub diameter_mm: f64,
    pub present: bool,
}

impl ObjectSpec {
    pub fn position_at(&self, t_ms: u64) -> [f64; 3] {
        self.trajectory.at(t_ms)
    }

    /// Euclidean range from the wrist sensors to the object.
    pub fn distance_at(&self, t_ms: u64) -> f64 {
        let [x, y, z] = self.position_at(t_ms);
        (x * x + y * y + z * z).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandState {
    pub servos: [ServoState; FINGER_COUNT],
    pub flexion: [f64; FINGER_COUNT],
    pub contact: [bool; FINGER_COUNT],
    pub pressure: [f64; FINGER_COUNT],
}

impl HandState {
    /// Fully open hand at rest, no contact.
    pub fn open(slew_rate: f64) -> Self {
        Self {
            servos: [ServoState::at_rest(OPEN_ANGLE, slew_rate); FINGER_COUNT],
            flexion: [0.0; FINGER_COUNT],
            contact: [false; FINGER_COUNT],
            pressure: [0.0; FINGER_COUNT],
        }
    }

    pub fn angles(&self) -> [f64; FINGER_COUNT] {
        self.servos.map(|s| s.current_angle)
    }

    /// Recomputes pressure and contact flags for every finger.
    pub fn with_contacts(mut self, object: &ObjectSpec) -> Self {
        for finger in FingerId::ALL {
            let i = finger.index();
            let p = contact_pressure(&self, object, finger);
            self.pressure[i] = p;
            self.contact[i] = p > 0.0;
        }
        self
    }

    pub fn fingers_in_contact(&self) -> usize {
        self.contact.iter().filter(|c| **c).count()
    }
}

/// Linear tendon model: 0° open, 180° fully flexed.
pub fn flexion_from_angle(angle: f64) -> Result<f64, DomainError> {
    if !(OPEN_ANGLE..=CLOSED_ANGLE).contains(&angle) {
        return Err(DomainError::AngleOutOfRange(angle));
    }
    Ok(angle / CLOSED_ANGLE)
}

/// Advances every non-halted servo toward its command by at most
/// `slew_rate * dt`, never overshooting, and recomputes flexion.
/// Contact state is left untouched; see [`HandState::with_contacts`].
pub fn step_kinematics(hand: &HandState, dt_ms: u64) -> HandState {
    debug_assert!(dt_ms > 0, "step_kinematics requires dt > 0");
    let mut next = hand.clone();
    for (servo, flex) in next.servos.iter_mut().zip(next.flexion.iter_mut()) {
        *servo = servo.stepped(dt_ms);
        *flex = servo.current_angle / CLOSED_ANGLE;
    }
    next
}

/// Fingertip pressure for one finger; zero when the object is absent or the
/// finger has not flexed past its contact point.
pub fn contact_pressure(hand: &HandState, object: &ObjectSpec, finger: FingerId) -> f64 {
    if !object.present {
        return 0.0;
    }
    let i = finger.index();
    let past = hand.flexion[i] - object.contact_flexion[i];
    if past <= 0.0 {
        0.0
    } else {
        object.stiffness * past
    }
}
