//! Deterministic, tick-based simulation of a vision-guided prosthetic hand.
//!
//! The crate models both processors of the hand and the plant they drive:
//!
//! * [`controller`]: the main-processor state machine (detect, range-gate,
//!   close, hold, tilt-to-release).
//! * [`motor`]: the servo/FSR microcontroller with per-finger pressure stop.
//! * [`wire`]: the newline-framed UART protocol between the two.
//! * [`hand`] and [`sensors`]: the tendon-driven fingers, the grasped object,
//!   and the camera / time-of-flight / FSR / accelerometer models.
//! * [`power`]: current draw and coulomb-counting battery model.
//! * [`scenario`], [`runner`], [`trace`], [`report`]: scenario files, the
//!   tick loop, CSV traces and run/batch summaries.
//!
//! All time is integer milliseconds. A run is a pure function of its
//! [`ScenarioSpec`], including the RNG seed.

pub mod config;
pub mod controller;
pub mod error;
pub mod hand;
pub mod motor;
pub mod power;
pub mod report;
pub mod runner;
pub mod scenario;
pub mod sensors;
pub mod timeline;
pub mod trace;
pub mod wire;

pub use config::{ConfigOverrides, SimConfig, CONTROL_PERIOD_MS};
pub use controller::{ControllerNode, ControllerState, GateConfig, SensorFrame};
pub use error::{DomainError, ScenarioError};
pub use hand::{FingerId, HandState, ObjectSpec, ServoState, FINGER_COUNT};
pub use motor::{MotorController, MotorMode};
pub use power::{BatteryState, CurrentProfile};
pub use report::{summarize_batch, BatchReport, RunSummary};
pub use runner::{run, RunOutput, Simulation};
pub use scenario::{load_scenario, parse_scenario, ScenarioSpec};
pub use sensors::{AccelSample, AdcReading, DetectionEvent, TofReading, WristPose};
pub use trace::TraceRecord;
pub use wire::{decode, encode, Command, Status, WireMessage};
