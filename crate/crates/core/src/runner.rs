//! The tick loop that wires every component together.
//!
//! Order within one tick at time `t`:
//!
//! 1. sample sensors from ground truth at `t` (camera only when the
//!    controller asks for a vision frame);
//! 2. the main controller consumes the bytes the motor controller sent
//!    last tick, then runs its state machine;
//! 3. the motor controller consumes the bytes the main controller sent last
//!    tick, then runs its pressure-stop logic on the ADC readings;
//! 4. servo outputs are latched, power is integrated, the record is
//!    written, and the plant advances to `t + dt`.
//!
//! Bytes written in tick `k` are delivered in tick `k + 1`, which stands in
//! for UART transmission latency.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::controller::{controller_tick, ControllerNode, ControllerState, SensorFrame};
use crate::hand::{step_kinematics, HandState};
use crate::motor::MotorController;
use crate::power::{current_for, integrate, Activity, BatteryState};
use crate::report::RunSummary;
use crate::scenario::ScenarioSpec;
use crate::sensors::{accel_sample, camera_sample, fsr_to_adc, tilt_angle, tof_sample, AdcReading};
use crate::trace::{CameraSample, Endpoint, TraceRecord, WireEvent};
use crate::wire::{encode_into, Command, StreamDecoder, WireMessage};

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: Vec<TraceRecord>,
    pub summary: RunSummary,
}

/// Runs a scenario to completion. Deterministic in `spec` (including its
/// seed).
pub fn run(spec: &ScenarioSpec) -> RunOutput {
    let mut sim = Simulation::new(spec.clone());
    let mut trace = Vec::with_capacity((spec.duration_ms / spec.config.control_period_ms()) as usize + 1);
    while let Some(rec) = sim.step() {
        trace.push(rec);
    }
    let summary = sim.summary();
    RunOutput { trace, summary }
}

#[derive(Debug, Default, Clone)]
struct Episode {
    first_detection_ms: Option<u64>,
    hold_ms: Option<u64>,
    contacts_at_hold: usize,
    open_sent_ms: Option<u64>,
    released_ms: Option<u64>,
}

/// Full system state, advanced one control period per [`Simulation::step`].
#[derive(Debug, Clone)]
pub struct Simulation {
    spec: ScenarioSpec,
    rng: ChaCha8Rng,
    t_ms: u64,
    hand: HandState,
    controller: ControllerState,
    motor: MotorController,
    battery: BatteryState,
    to_motor: Vec<u8>,
    to_controller: Vec<u8>,
    motor_rx: StreamDecoder,
    controller_rx: StreamDecoder,
    episode: Episode,
    frame_errors: usize,
    anomalies: usize,
    close_commands: usize,
    open_commands: usize,
}

impl Simulation {
    pub fn new(spec: ScenarioSpec) -> Self {
        let cfg = &spec.config;
        let hand = HandState::open(cfg.slew_rate).with_contacts(&spec.object);
        Self {
            rng: ChaCha8Rng::seed_from_u64(spec.seed),
            t_ms: 0,
            hand,
            controller: ControllerState::default(),
            motor: MotorController::new(cfg.motor.clone()),
            battery: cfg.battery,
            to_motor: Vec::new(),
            to_controller: Vec::new(),
            motor_rx: StreamDecoder::new(),
            controller_rx: StreamDecoder::new(),
            episode: Episode::default(),
            frame_errors: 0,
            anomalies: 0,
            close_commands: 0,
            open_commands: 0,
            spec,
        }
    }

    pub fn time_ms(&self) -> u64 {
        self.t_ms
    }

    pub fn hand(&self) -> &HandState {
        &self.hand
    }

    pub fn controller(&self) -> &ControllerState {
        &self.controller
    }

    pub fn motor(&self) -> &MotorController {
        &self.motor
    }

    pub fn battery(&self) -> &BatteryState {
        &self.battery
    }

    /// Advances one tick, or returns `None` once the scenario duration is
    /// exhausted.
    pub fn step(&mut self) -> Option<TraceRecord> {
        if self.t_ms >= self.spec.duration_ms {
            return None;
        }
        let t = self.t_ms;
        let cfg = &self.spec.config;
        let object = &self.spec.object;
        let dt = cfg.control_period_ms();
        let mut notes = Vec::new();
        let mut wire = Vec::new();

        // sensors
        let vision_sampled = self.controller.wants_vision(t, &cfg.gate);
        let detection = if vision_sampled {
            camera_sample(object, t, &cfg.sensors)
        } else {
            None
        };
        let tof = tof_sample(object, t, &cfg.sensors, &mut self.rng);
        let adc = self
            .hand
            .pressure
            .map(|p| fsr_to_adc(p, cfg.sensors.fsr_full_scale).unwrap_or(AdcReading::ZERO));
        let accel = accel_sample(&self.spec.wrist, t);
        let camera = match (vision_sampled, detection.is_some()) {
            (false, _) => CameraSample::NotSampled,
            (true, false) => CameraSample::Miss,
            (true, true) => CameraSample::Hit,
        };
        let frame = SensorFrame {
            tof,
            adc,
            accel,
            vision_sampled,
            detection,
        };

        // whatever was written last tick arrives now
        let to_controller = std::mem::take(&mut self.to_controller);
        let to_motor = std::mem::take(&mut self.to_motor);

        // main controller
        let (ctl_msgs, ctl_errs) = self.controller_rx.push(&to_controller);
        for e in &ctl_errs {
            notes.push(format!("controller rx {e}"));
        }
        self.frame_errors += ctl_errs.len();
        let before = self.controller.node;
        let out = controller_tick(&mut self.controller, &frame, &ctl_msgs, &cfg.gate, t);
        self.anomalies += out.anomalies.len();
        notes.extend(out.anomalies.iter().map(|a| a.to_string()));
        for cmd in &out.commands {
            let msg = WireMessage::Command(*cmd);
            encode_into(&msg, &mut self.to_motor);
            wire.push(WireEvent {
                from: Endpoint::Controller,
                msg,
            });
            match cmd {
                Command::HandClose => self.close_commands += 1,
                Command::HandOpen => {
                    self.open_commands += 1;
                    self.episode.open_sent_ms.get_or_insert(t);
                }
            }
        }
        track_episode(&mut self.episode, &self.hand, before, self.controller.node, t);

        // motor controller
        let (mc_msgs, mc_errs) = self.motor_rx.push(&to_motor);
        for e in &mc_errs {
            notes.push(format!("motor rx {e}"));
        }
        self.frame_errors += mc_errs.len();
        for msg in &mc_msgs {
            if let Err(e) = self.motor.handle_command(msg) {
                self.anomalies += 1;
                notes.push(e.to_string());
            }
        }
        for msg in self.motor.tick(&self.hand, &adc) {
            encode_into(&msg, &mut self.to_controller);
            wire.push(WireEvent {
                from: Endpoint::Motor,
                msg,
            });
        }
        self.motor.outputs().apply(&mut self.hand);

        // power
        let current = current_for(
            &cfg.currents,
            Activity::Running {
                node: self.controller.node,
                motor: self.motor.mode(),
            },
        );
        let was_depleted = self.battery.depleted;
        self.battery = integrate(&self.battery, current, dt);
        if self.battery.depleted && !was_depleted {
            notes.push("battery depleted".into());
        }

        let record = TraceRecord {
            t_ms: t,
            node: self.controller.node,
            motor: self.motor.mode(),
            true_distance_mm: object.distance_at(t),
            tof,
            camera,
            tilt_deg: tilt_angle(&accel).unwrap_or(f64::NAN),
            adc,
            angles: self.hand.angles(),
            wire,
            current_ma: current,
            consumed_mah: self.battery.consumed_mah,
            notes,
        };

        // plant
        self.hand = step_kinematics(&self.hand, dt).with_contacts(object);
        self.t_ms += dt;
        Some(record)
    }

    /// Summary of the run so far. The first grasp episode is the one
    /// scored.
    pub fn summary(&self) -> RunSummary {
        let ep = &self.episode;
        let quorum = self.spec.config.contact_quorum;
        RunSummary {
            name: self.spec.name.clone(),
            seed: self.spec.seed,
            success: ep.hold_ms.is_some() && ep.contacts_at_hold >= quorum,
            reached_hold: ep.hold_ms.is_some(),
            fingers_in_contact_at_hold: ep.contacts_at_hold,
            time_to_grasp_ms: ep.hold_ms.zip(ep.first_detection_ms).map(|(h, d)| h - d),
            time_to_release_ms: ep.released_ms.zip(ep.open_sent_ms).map(|(r, o)| r - o),
            energy_mah: self.battery.consumed_mah,
            frame_errors: self.frame_errors,
            anomalies: self.anomalies,
            hand_close_commands: self.close_commands,
            hand_open_commands: self.open_commands,
            duration_ms: self.t_ms,
        }
    }
}

fn track_episode(ep: &mut Episode, hand: &HandState, before: ControllerNode, now: ControllerNode, t: u64) {
    if before == ControllerNode::Idle && now != ControllerNode::Idle {
        ep.first_detection_ms.get_or_insert(t);
    }
    if now == ControllerNode::Holding && before != ControllerNode::Holding && ep.hold_ms.is_none() {
        ep.hold_ms = Some(t);
        ep.contacts_at_hold = hand.fingers_in_contact();
    }
    if before == ControllerNode::WaitOpen && now == ControllerNode::Idle && ep.released_ms.is_none() {
        ep.released_ms = Some(t);
    }
}
