//! Simulation configuration and the override layers read from scenario
//! files and from a global `--config` file.
//!
//! Overrides are a flat TOML table. Keys are listed in [`ConfigOverrides`];
//! unknown keys are rejected. Layers apply in order (defaults, scenario
//! `[config]`, global file) and the merged result is validated once, with
//! errors pointing at the file and line that set the offending value.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::controller::GateConfig;
use crate::error::ScenarioError;
use crate::hand::{DEFAULT_SLEW_RATE, FINGER_COUNT};
use crate::motor::MotorConfig;
use crate::power::{BatteryState, CurrentProfile};
use crate::sensors::{SensorParams, ADC_MAX};

/// Global control period. Every component ticks at this rate.
pub const CONTROL_PERIOD_MS: u64 = 10;

pub const DEFAULT_CONTACT_QUORUM: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub gate: GateConfig,
    pub motor: MotorConfig,
    pub sensors: SensorParams,
    /// Servo slew rate, degrees per second.
    pub slew_rate: f64,
    pub currents: CurrentProfile,
    /// Initial battery state.
    pub battery: BatteryState,
    /// Fingers that must be in contact at hold for a grasp to count.
    pub contact_quorum: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            gate: GateConfig::default(),
            motor: MotorConfig::default(),
            sensors: SensorParams::default(),
            slew_rate: DEFAULT_SLEW_RATE,
            currents: CurrentProfile::default(),
            battery: BatteryState::default(),
            contact_quorum: DEFAULT_CONTACT_QUORUM,
        }
    }
}

impl SimConfig {
    pub fn control_period_ms(&self) -> u64 {
        self.gate.control_period_ms
    }

    /// Largest ADC rise one tick of closing can cause on a finger touching
    /// an object of the given stiffness.
    pub fn one_tick_adc_increment(&self, stiffness: f64) -> u16 {
        let dt = self.control_period_ms() as f64;
        let counts =
            f64::from(ADC_MAX) * stiffness * self.slew_rate * dt / (1000.0 * 180.0 * self.sensors.fsr_full_scale);
        counts.ceil().min(f64::from(u16::MAX)) as u16
    }
}

/// Where each overridden field was last set: `(origin, line)`.
pub type FieldSources = BTreeMap<&'static str, (String, usize)>;

/// Maps byte offsets in a source text to 1-based line numbers.
#[derive(Debug, Clone)]
pub(crate) struct LineIndex {
    starts: Vec<usize>,
}

impl LineIndex {
    pub(crate) fn new(text: &str) -> Self {
        let starts = std::iter::once(0)
            .chain(text.match_indices('\n').map(|(i, _)| i + 1))
            .collect();
        Self { starts }
    }

    pub(crate) fn line(&self, offset: usize) -> usize {
        self.starts.partition_point(|s| *s <= offset)
    }
}

macro_rules! overrides {
    ($( $(#[$doc:meta])* $key:ident : $ty:ty => $($path:ident).+ ;)*) => {
        /// One layer of configuration overrides; every key is optional.
        #[derive(Debug, Clone, Default, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct ConfigOverrides {
            $( $(#[$doc])* #[serde(default)] pub $key: Option<Spanned<$ty>>, )*
        }

        impl ConfigOverrides {
            fn apply_raw(&self, cfg: &mut SimConfig, origin: &str, lines: &LineIndex, sources: &mut FieldSources) {
                $(
                    if let Some(v) = &self.$key {
                        cfg.$($path).+ = v.get_ref().clone();
                        sources.insert(stringify!($key), (origin.to_string(), lines.line(v.span().start)));
                    }
                )*
            }
        }
    };
}

overrides! {
    close_min_mm: f64 => gate.close_min;
    close_max_mm: f64 => gate.close_max;
    tilt_threshold_deg: f64 => gate.tilt_threshold_deg;
    debounce_ms: u64 => gate.debounce_ms;
    detection_timeout_ms: u64 => gate.detection_timeout_ms;
    /// Nominal; rounded to whole control ticks at run time.
    vision_period_ms: u64 => gate.vision_period_ms;
    pressure_threshold: u16 => motor.pressure_threshold;
    global_stop: bool => motor.global_stop;
    telemetry_every: u32 => motor.telemetry_every;
    slew_rate_deg_s: f64 => slew_rate;
    fov_horizontal_deg: f64 => sensors.fov_horizontal_deg;
    fov_vertical_deg: f64 => sensors.fov_vertical_deg;
    min_detect_mm: f64 => sensors.min_detect_mm;
    detector_score: f64 => sensors.detector_score;
    tof_max_range_mm: f64 => sensors.tof_max_range_mm;
    tof_noise_mm: f64 => sensors.tof_noise_mm;
    tof_noise: bool => sensors.tof_noise_enabled;
    fsr_full_scale: f64 => sensors.fsr_full_scale;
    idle_ma: f64 => currents.idle_ma;
    inference_ma: f64 => currents.inference_ma;
    operation_ma: f64 => currents.operation_ma;
    battery_capacity_mah: f64 => battery.capacity_mah;
    battery_voltage: f64 => battery.nominal_voltage;
    battery_derating: f64 => battery.derating;
    contact_quorum: usize => contact_quorum;
}

/// A parsed override table together with where it came from.
#[derive(Debug, Clone)]
pub struct ConfigLayer {
    origin: String,
    lines: LineIndex,
    overrides: ConfigOverrides,
}

impl ConfigLayer {
    pub(crate) fn new(origin: &str, text: &str, overrides: ConfigOverrides) -> Self {
        Self {
            origin: origin.to_string(),
            lines: LineIndex::new(text),
            overrides,
        }
    }

    /// Parses a standalone global config file (a flat table of overrides).
    pub fn parse(origin: &str, text: &str) -> Result<Self, ScenarioError> {
        let overrides: ConfigOverrides = toml::from_str(text).map_err(|e| parse_error(origin, text, &e))?;
        Ok(Self::new(origin, text, overrides))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&path.display().to_string(), &text)
    }

    pub fn empty(origin: &str) -> Self {
        Self::new(origin, "", ConfigOverrides::default())
    }

    pub(crate) fn apply(&self, cfg: &mut SimConfig, sources: &mut FieldSources) {
        self.overrides.apply_raw(cfg, &self.origin, &self.lines, sources);
    }
}

pub(crate) fn parse_error(origin: &str, text: &str, err: &toml::de::Error) -> ScenarioError {
    let line = err.span().map_or(1, |s| LineIndex::new(text).line(s.start));
    ScenarioError::Parse {
        origin: origin.to_string(),
        line,
        message: err.message().to_string(),
    }
}

/// Applies `layers` over `base` and validates the result.
pub fn merge(base: SimConfig, layers: &[&ConfigLayer], default_origin: &str) -> Result<SimConfig, ScenarioError> {
    let mut cfg = base;
    let mut sources = FieldSources::new();
    for layer in layers {
        layer.apply(&mut cfg, &mut sources);
    }
    validate(&cfg, &sources, default_origin)?;
    Ok(cfg)
}

fn validate(cfg: &SimConfig, sources: &FieldSources, default_origin: &str) -> Result<(), ScenarioError> {
    let fail = |field: &'static str, reason: String| {
        let (origin, line) = match sources.get(field) {
            Some((o, l)) => (o.clone(), Some(*l)),
            None => (default_origin.to_string(), None),
        };
        Err(ScenarioError::Invalid {
            origin,
            field: field.to_string(),
            line,
            reason,
        })
    };
    let positive = |v: f64| v.is_finite() && v > 0.0;

    let g = &cfg.gate;
    if !positive(g.close_min) {
        return fail("close_min_mm", format!("must be > 0, got {}", g.close_min));
    }
    if !(g.close_max.is_finite() && g.close_max > g.close_min) {
        let field = if sources.contains_key("close_max_mm") {
            "close_max_mm"
        } else {
            "close_min_mm"
        };
        return fail(field, format!("gate [{}, {}] is empty", g.close_min, g.close_max));
    }
    if !(g.tilt_threshold_deg > 0.0 && g.tilt_threshold_deg <= 180.0) {
        return fail(
            "tilt_threshold_deg",
            format!("must be in (0, 180], got {}", g.tilt_threshold_deg),
        );
    }
    if g.debounce_ms == 0 || !g.debounce_ms.is_multiple_of(g.control_period_ms) {
        return fail(
            "debounce_ms",
            format!(
                "must be a positive multiple of {} ms, got {}",
                g.control_period_ms, g.debounce_ms
            ),
        );
    }
    if g.detection_timeout_ms == 0 {
        return fail("detection_timeout_ms", "must be > 0".into());
    }
    if g.vision_period_ms == 0 {
        return fail("vision_period_ms", "must be > 0".into());
    }
    let thr = cfg.motor.pressure_threshold;
    if !(1..=ADC_MAX).contains(&thr) {
        return fail("pressure_threshold", format!("must be in [1, {ADC_MAX}], got {thr}"));
    }
    if !positive(cfg.slew_rate) {
        return fail("slew_rate_deg_s", format!("must be > 0, got {}", cfg.slew_rate));
    }
    let s = &cfg.sensors;
    for (field, v) in [
        ("fov_horizontal_deg", s.fov_horizontal_deg),
        ("fov_vertical_deg", s.fov_vertical_deg),
    ] {
        if !(v > 0.0 && v < 180.0) {
            return fail(field, format!("must be in (0, 180), got {v}"));
        }
    }
    if !(s.min_detect_mm.is_finite() && s.min_detect_mm >= 0.0) {
        return fail("min_detect_mm", format!("must be >= 0, got {}", s.min_detect_mm));
    }
    if !(s.detector_score > 0.0 && s.detector_score <= 1.0) {
        return fail("detector_score", format!("must be in (0, 1], got {}", s.detector_score));
    }
    if !positive(s.tof_max_range_mm) {
        return fail("tof_max_range_mm", format!("must be > 0, got {}", s.tof_max_range_mm));
    }
    if !(s.tof_noise_mm.is_finite() && s.tof_noise_mm >= 0.0) {
        return fail("tof_noise_mm", format!("must be >= 0, got {}", s.tof_noise_mm));
    }
    if !positive(s.fsr_full_scale) {
        return fail("fsr_full_scale", format!("must be > 0, got {}", s.fsr_full_scale));
    }
    let c = &cfg.currents;
    for (field, v) in [
        ("idle_ma", c.idle_ma),
        ("inference_ma", c.inference_ma),
        ("operation_ma", c.operation_ma),
    ] {
        if !positive(v) {
            return fail(field, format!("must be > 0, got {v}"));
        }
    }
    if c.idle_ma > c.inference_ma {
        return fail(
            "idle_ma",
            format!("idle {} exceeds inference {}", c.idle_ma, c.inference_ma),
        );
    }
    if c.inference_ma > c.operation_ma {
        return fail(
            "inference_ma",
            format!("inference {} exceeds operation {}", c.inference_ma, c.operation_ma),
        );
    }
    let b = &cfg.battery;
    if !positive(b.capacity_mah) {
        return fail("battery_capacity_mah", format!("must be > 0, got {}", b.capacity_mah));
    }
    if !positive(b.nominal_voltage) {
        return fail("battery_voltage", format!("must be > 0, got {}", b.nominal_voltage));
    }
    if !(b.derating > 0.0 && b.derating <= 1.0) {
        return fail("battery_derating", format!("must be in (0, 1], got {}", b.derating));
    }
    if !(1..=FINGER_COUNT).contains(&cfg.contact_quorum) {
        return fail(
            "contact_quorum",
            format!("must be in [1, {FINGER_COUNT}], got {}", cfg.contact_quorum),
        );
    }
    Ok(())
}
