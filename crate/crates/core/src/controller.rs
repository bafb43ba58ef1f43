//! Main-processor control loop as an explicit state machine:
//!
//! ```text
//! Idle --detection--> ObjectDetected --TOF in gate / HAND_CLOSE--> WaitClose
//!   ^                     | no detection for timeout                 | CLOSED
//!   |                     v                                          v
//!   +-------------------- Idle        WaitOpen <--tilt held / HAND_OPEN-- Holding
//!   +----------------------OPENED------'
//! ```

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::hand::FINGER_COUNT;
use crate::sensors::{tilt_angle, AccelSample, AdcReading, DetectionEvent, TofReading};
use crate::wire::{Command, Status, WireMessage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ControllerNode {
    Idle,
    ObjectDetected,
    WaitClose,
    Holding,
    WaitOpen,
}

impl ControllerNode {
    pub const ALL: [ControllerNode; 5] = [
        ControllerNode::Idle,
        ControllerNode::ObjectDetected,
        ControllerNode::WaitClose,
        ControllerNode::Holding,
        ControllerNode::WaitOpen,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ControllerNode::Idle => "Idle",
            ControllerNode::ObjectDetected => "ObjectDetected",
            ControllerNode::WaitClose => "WaitClose",
            ControllerNode::Holding => "Holding",
            ControllerNode::WaitOpen => "WaitOpen",
        }
    }

    /// Nodes in which the camera pipeline runs.
    pub fn uses_vision(self) -> bool {
        matches!(self, ControllerNode::Idle | ControllerNode::ObjectDetected)
    }
}

impl fmt::Display for ControllerNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateConfig {
    /// Inclusive lower bound of the close gate on the TOF reading, mm.
    pub close_min: f64,
    /// Inclusive upper bound, mm.
    pub close_max: f64,
    pub tilt_threshold_deg: f64,
    pub debounce_ms: u64,
    pub detection_timeout_ms: u64,
    /// Nominal camera frame period (9 FPS).
    pub vision_period_ms: u64,
    pub control_period_ms: u64,
}

impl Default for GateConfig {
    fn default() -> Self {
        Self {
            close_min: 70.0,
            close_max: 90.0,
            tilt_threshold_deg: 60.0,
            debounce_ms: 300,
            detection_timeout_ms: 2000,
            vision_period_ms: 111,
            control_period_ms: crate::config::CONTROL_PERIOD_MS,
        }
    }
}

impl GateConfig {
    /// Vision period rounded to the nearest whole number of control ticks
    /// (111 ms -> 110 ms at 10 ms ticks), never less than one tick.
    pub fn effective_vision_period_ms(&self) -> u64 {
        let p = self.control_period_ms;
        let ticks = ((self.vision_period_ms + p / 2) / p).max(1);
        ticks * p
    }

    pub fn in_gate(&self, reading: &TofReading) -> bool {
        reading
            .distance()
            .is_some_and(|d| d >= self.close_min && d <= self.close_max)
    }
}

/// Everything the sensors report in one control period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorFrame {
    pub tof: TofReading,
    /// FSR channels; these are wired to the motor controller and not used
    /// by the main control loop.
    pub adc: [AdcReading; FINGER_COUNT],
    pub accel: AccelSample,
    /// Whether the camera was sampled this tick.
    pub vision_sampled: bool,
    pub detection: Option<DetectionEvent>,
}

/// Something the controller noticed but could not act on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Anomaly {
    UnexpectedStatus { node: ControllerNode, status: Status },
    UnexpectedCommand(Command),
    BadAccelSample,
}

impl fmt::Display for Anomaly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Anomaly::UnexpectedStatus { node, status } => {
                write!(f, "unexpected {} in {node}", WireMessage::Status(*status))
            }
            Anomaly::UnexpectedCommand(c) => write!(f, "controller received {}", WireMessage::Command(*c)),
            Anomaly::BadAccelSample => f.write_str("accelerometer sample unusable"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TickOutput {
    pub commands: Vec<Command>,
    pub anomalies: Vec<Anomaly>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerState {
    pub node: ControllerNode,
    /// Time since the last detection while in `ObjectDetected`.
    pub detection_loss_ms: u64,
    /// Accumulated tilt time while in `Holding`; zero elsewhere.
    pub gesture_debounce_ms: u64,
    pub last_vision_sample_ms: Option<u64>,
}

impl Default for ControllerState {
    fn default() -> Self {
        Self {
            node: ControllerNode::Idle,
            detection_loss_ms: 0,
            gesture_debounce_ms: 0,
            last_vision_sample_ms: None,
        }
    }
}

impl ControllerState {
    /// Whether the camera should be sampled at `t_ms`: only in the vision
    /// nodes and only on vision-period boundaries.
    pub fn wants_vision(&self, t_ms: u64, cfg: &GateConfig) -> bool {
        self.node.uses_vision() && t_ms.is_multiple_of(cfg.effective_vision_period_ms())
    }

    fn enter(&mut self, node: ControllerNode) {
        self.node = node;
        self.detection_loss_ms = 0;
        self.gesture_debounce_ms = 0;
    }
}

/// One control period of the main loop. Inbound status messages are applied
/// first, then the handler for the resulting node runs.
pub fn controller_tick(
    state: &mut ControllerState,
    frame: &SensorFrame,
    inbound: &[WireMessage],
    cfg: &GateConfig,
    t_ms: u64,
) -> TickOutput {
    let mut out = TickOutput::default();
    for msg in inbound {
        match (msg, state.node) {
            (WireMessage::Status(Status::Closed), ControllerNode::WaitClose) => {
                state.enter(ControllerNode::Holding);
            }
            (WireMessage::Status(Status::Opened), ControllerNode::WaitOpen) => {
                state.enter(ControllerNode::Idle);
            }
            (WireMessage::Status(status), node) => {
                out.anomalies.push(Anomaly::UnexpectedStatus { node, status: *status });
            }
            (WireMessage::Command(c), _) => out.anomalies.push(Anomaly::UnexpectedCommand(*c)),
            (WireMessage::Telemetry(_), _) => {}
        }
    }

    if frame.vision_sampled {
        state.last_vision_sample_ms = Some(t_ms);
    }
    let dt = cfg.control_period_ms;

    match state.node {
        ControllerNode::Idle => {
            if frame.vision_sampled && frame.detection.is_some() {
                state.enter(ControllerNode::ObjectDetected);
                // the ranger is switched on by the detection and read at once
                range_gate(state, frame, cfg, &mut out);
            }
        }
        ControllerNode::ObjectDetected => {
            if frame.vision_sampled && frame.detection.is_some() {
                state.detection_loss_ms = 0;
            } else {
                state.detection_loss_ms += dt;
            }
            if state.detection_loss_ms >= cfg.detection_timeout_ms {
                state.enter(ControllerNode::Idle);
            } else {
                range_gate(state, frame, cfg, &mut out);
            }
        }
        ControllerNode::Holding => match tilt_angle(&frame.accel) {
            Ok(tilt) => {
                let (timer, fired) = gesture_update(state.gesture_debounce_ms, tilt, cfg, dt);
                state.gesture_debounce_ms = timer;
                if fired {
                    out.commands.push(Command::HandOpen);
                    state.enter(ControllerNode::WaitOpen);
                }
            }
            Err(_) => {
                state.gesture_debounce_ms = 0;
                out.anomalies.push(Anomaly::BadAccelSample);
            }
        },
        ControllerNode::WaitClose | ControllerNode::WaitOpen => {}
    }
    out
}

fn range_gate(state: &mut ControllerState, frame: &SensorFrame, cfg: &GateConfig, out: &mut TickOutput) {
    if cfg.in_gate(&frame.tof) {
        out.commands.push(Command::HandClose);
        state.enter(ControllerNode::WaitClose);
    }
}

/// Tilt debounce: accumulates while the tilt is at or above threshold,
/// resets on any dip, fires (and resets) once the accumulation reaches the
/// debounce time.
pub fn gesture_update(timer_ms: u64, tilt_deg: f64, cfg: &GateConfig, dt_ms: u64) -> (u64, bool) {
    if tilt_deg < cfg.tilt_threshold_deg {
        return (0, false);
    }
    let timer = timer_ms + dt_ms;
    if timer >= cfg.debounce_ms {
        (0, true)
    } else {
        (timer, false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensors::BoundingBox;

    fn frame(tof: Option<f64>, tilt_deg: f64, detection: Option<bool>) -> SensorFrame {
        let r = tilt_deg.to_radians();
        SensorFrame {
            tof: tof.map_or(TofReading::Invalid, |d| TofReading::Valid { distance_mm: d }),
            adc: [AdcReading::ZERO; 5],
            accel: AccelSample {
                ax: r.sin(),
                ay: 0.0,
                az: r.cos(),
            },
            vision_sampled: detection.is_some(),
            detection: detection.filter(|d| *d).map(|_| DetectionEvent {
                label: "can".into(),
                score: 0.9,
                bbox: BoundingBox {
                    cx: 0.5,
                    cy: 0.5,
                    w: 0.2,
                    h: 0.2,
                },
                t_ms: 0,
            }),
        }
    }

    fn in_node(node: ControllerNode) -> ControllerState {
        ControllerState {
            node,
            ..ControllerState::default()
        }
    }

    #[test]
    fn vision_period_rounds_to_tick() {
        let cfg = GateConfig::default();
        assert_eq!(cfg.effective_vision_period_ms(), 110);
        let s = ControllerState::default();
        assert!(s.wants_vision(0, &cfg));
        assert!(!s.wants_vision(100, &cfg));
        assert!(s.wants_vision(220, &cfg));
        assert!(!in_node(ControllerNode::Holding).wants_vision(220, &cfg));
    }

    #[test]
    fn gate_closes_at_80mm() {
        let cfg = GateConfig::default();
        let mut s = in_node(ControllerNode::ObjectDetected);
        let out = controller_tick(&mut s, &frame(Some(80.0), 0.0, None), &[], &cfg, 500);
        assert_eq!(out.commands, vec![Command::HandClose]);
        assert_eq!(s.node, ControllerNode::WaitClose);
    }

    #[test]
    fn no_close_at_100mm() {
        let cfg = GateConfig::default();
        let mut s = in_node(ControllerNode::ObjectDetected);
        let out = controller_tick(&mut s, &frame(Some(100.0), 0.0, None), &[], &cfg, 500);
        assert!(out.commands.is_empty());
        assert_eq!(s.node, ControllerNode::ObjectDetected);
    }

    #[test]
    fn gate_bounds_inclusive() {
        let cfg = GateConfig::default();
        for (d, closes) in [(69.99, false), (70.0, true), (90.0, true), (90.01, false)] {
            let mut s = in_node(ControllerNode::ObjectDetected);
            let out = controller_tick(&mut s, &frame(Some(d), 0.0, None), &[], &cfg, 0);
            assert_eq!(!out.commands.is_empty(), closes, "{d}");
        }
        let mut s = in_node(ControllerNode::ObjectDetected);
        assert!(controller_tick(&mut s, &frame(None, 0.0, None), &[], &cfg, 0)
            .commands
            .is_empty());
    }

    #[test]
    fn detection_tick_can_close_immediately() {
        let cfg = GateConfig::default();
        let mut s = ControllerState::default();
        let out = controller_tick(&mut s, &frame(Some(85.0), 0.0, Some(true)), &[], &cfg, 110);
        assert_eq!(out.commands, vec![Command::HandClose]);
        assert_eq!(s.node, ControllerNode::WaitClose);
        assert_eq!(s.last_vision_sample_ms, Some(110));
    }

    #[test]
    fn idle_ignores_tof_without_detection() {
        let cfg = GateConfig::default();
        let mut s = ControllerState::default();
        let out = controller_tick(&mut s, &frame(Some(80.0), 0.0, Some(false)), &[], &cfg, 0);
        assert!(out.commands.is_empty());
        assert_eq!(s.node, ControllerNode::Idle);
    }

    #[test]
    fn detection_timeout_returns_to_idle() {
        let cfg = GateConfig::default();
        let mut s = in_node(ControllerNode::ObjectDetected);
        let mut t = 0;
        while s.node == ControllerNode::ObjectDetected {
            let sampled = t % 110 == 0;
            controller_tick(&mut s, &frame(Some(150.0), 0.0, sampled.then_some(false)), &[], &cfg, t);
            t += 10;
        }
        assert_eq!(s.node, ControllerNode::Idle);
        assert_eq!(t, 2000);
    }

    #[test]
    fn fresh_detection_resets_loss_timer() {
        let cfg = GateConfig::default();
        let mut s = in_node(ControllerNode::ObjectDetected);
        for t in (0..5000).step_by(10) {
            let sampled = t % 110 == 0;
            controller_tick(&mut s, &frame(Some(150.0), 0.0, sampled.then_some(true)), &[], &cfg, t);
            assert_eq!(s.node, ControllerNode::ObjectDetected);
            assert!(s.detection_loss_ms < 110);
        }
    }

    #[test]
    fn closed_status_arms_gesture_then_tilt_releases() {
        let cfg = GateConfig::default();
        let mut s = in_node(ControllerNode::WaitClose);
        controller_tick(&mut s, &frame(None, 0.0, None), &[Status::Closed.into()], &cfg, 0);
        assert_eq!(s.node, ControllerNode::Holding);
        let mut fired_at = None;
        for k in 1..=40u64 {
            let out = controller_tick(&mut s, &frame(None, 90.0, None), &[], &cfg, k * 10);
            if out.commands == vec![Command::HandOpen] {
                fired_at = Some(k);
                break;
            }
        }
        assert_eq!(fired_at, Some(30));
        assert_eq!(s.node, ControllerNode::WaitOpen);
        assert_eq!(s.gesture_debounce_ms, 0);
        controller_tick(&mut s, &frame(None, 0.0, None), &[Status::Opened.into()], &cfg, 500);
        assert_eq!(s.node, ControllerNode::Idle);
    }

    #[test]
    fn unexpected_status_is_anomaly() {
        let cfg = GateConfig::default();
        let mut s = ControllerState::default();
        let out = controller_tick(&mut s, &frame(None, 0.0, None), &[Status::Closed.into()], &cfg, 0);
        assert_eq!(
            out.anomalies,
            vec![Anomaly::UnexpectedStatus {
                node: ControllerNode::Idle,
                status: Status::Closed
            }]
        );
        assert_eq!(s, ControllerState::default());
        let out = controller_tick(&mut s, &frame(None, 0.0, None), &[Command::HandOpen.into()], &cfg, 0);
        assert_eq!(out.anomalies, vec![Anomaly::UnexpectedCommand(Command::HandOpen)]);
    }

    #[test]
    fn zero_accel_sample_is_anomaly() {
        let cfg = GateConfig::default();
        let mut s = in_node(ControllerNode::Holding);
        let mut f = frame(None, 0.0, None);
        f.accel = AccelSample {
            ax: 0.0,
            ay: 0.0,
            az: 0.0,
        };
        let out = controller_tick(&mut s, &f, &[], &cfg, 0);
        assert_eq!(out.anomalies, vec![Anomaly::BadAccelSample]);
        assert_eq!(s.node, ControllerNode::Holding);
    }

    #[test]
    fn gesture_examples() {
        let cfg = GateConfig::default();
        let run = |tilts: &[f64]| -> Option<usize> {
            let mut timer = 0;
            for (i, t) in tilts.iter().enumerate() {
                let (next, fired) = gesture_update(timer, *t, &cfg, 10);
                timer = next;
                if fired {
                    return Some(i + 1);
                }
            }
            None
        };
        assert_eq!(run(&[0.0; 1000]), None);
        assert_eq!(run(&[90.0; 30]), Some(30));
        let mut interrupted = vec![90.0; 20];
        interrupted.push(0.0);
        interrupted.extend([90.0; 20]);
        assert_eq!(run(&interrupted), None);
        assert_eq!(run(&[59.0; 1000]), None);
        assert_eq!(run(&[60.0; 30]), Some(30));
    }
}
