//! Per-tick trace records and their CSV rendering.
//!
//! One row per control tick. Sensor columns (`true_mm`, `tof_mm`, `camera`,
//! `tilt_deg`, `adc*`, `angle*`) are the world as observed at the start of
//! the tick; `node` and `motor` are the states after the tick; `wire` lists
//! the messages sent during the tick as `ctl>LINE` (main controller to
//! motor controller) or `mcu>LINE`, separated by `|`; `current_ma` is the
//! draw over the tick and `consumed_mah` the total after it.

use std::fmt::Write as _;
use std::io;

use serde::{Deserialize, Serialize};

use crate::controller::ControllerNode;
use crate::hand::FINGER_COUNT;
use crate::motor::MotorMode;
use crate::sensors::{AdcReading, TofReading};
use crate::wire::WireMessage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Endpoint {
    /// Main processor.
    Controller,
    /// Motor microcontroller.
    Motor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireEvent {
    pub from: Endpoint,
    pub msg: WireMessage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CameraSample {
    NotSampled,
    Miss,
    Hit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t_ms: u64,
    pub node: ControllerNode,
    pub motor: MotorMode,
    pub true_distance_mm: f64,
    pub tof: TofReading,
    pub camera: CameraSample,
    pub tilt_deg: f64,
    pub adc: [AdcReading; FINGER_COUNT],
    pub angles: [f64; FINGER_COUNT],
    pub wire: Vec<WireEvent>,
    pub current_ma: f64,
    pub consumed_mah: f64,
    pub notes: Vec<String>,
}

impl TraceRecord {
    pub fn sent(&self, from: Endpoint, msg: WireMessage) -> bool {
        self.wire.iter().any(|e| e.from == from && e.msg == msg)
    }
}

pub const CSV_HEADER: &str = "t_ms,node,motor,true_mm,tof_mm,camera,tilt_deg,\
adc0,adc1,adc2,adc3,adc4,angle0,angle1,angle2,angle3,angle4,wire,current_ma,consumed_mah,notes";

fn csv_row(r: &TraceRecord) -> String {
    let mut row = String::with_capacity(160);
    let tof = r.tof.distance().map(|d| format!("{d:.3}")).unwrap_or_default();
    let camera = match r.camera {
        CameraSample::NotSampled => "-",
        CameraSample::Miss => "miss",
        CameraSample::Hit => "hit",
    };
    write!(
        row,
        "{},{},{},{:.3},{},{},{:.3}",
        r.t_ms,
        r.node,
        r.motor.as_str(),
        r.true_distance_mm,
        tof,
        camera,
        r.tilt_deg
    )
    .unwrap();
    for a in &r.adc {
        write!(row, ",{}", a.counts()).unwrap();
    }
    for a in &r.angles {
        write!(row, ",{a:.3}").unwrap();
    }
    let wire: Vec<String> = r
        .wire
        .iter()
        .map(|e| {
            let tag = match e.from {
                Endpoint::Controller => "ctl",
                Endpoint::Motor => "mcu",
            };
            format!("{tag}>{}", e.msg)
        })
        .collect();
    let notes: Vec<String> = r.notes.iter().map(|n| n.replace([',', '\n', '|', ';'], " ")).collect();
    write!(
        row,
        ",{},{:.1},{:.9},{}",
        wire.join("|"),
        r.current_ma,
        r.consumed_mah,
        notes.join(";")
    )
    .unwrap();
    row
}

pub fn write_csv<W: io::Write>(records: &[TraceRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{}", csv_row(r))?;
    }
    out.flush()
}

pub fn to_csv_string(records: &[TraceRecord]) -> String {
    let mut buf = Vec::new();
    write_csv(records, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("trace is ASCII")
}
