//! Scenario files.
//!
//! A scenario is a TOML document with a versioned header:
//!
//! ```toml
//! format = "handsim-scenario"
//! version = 1
//! name = "nominal"
//! duration_ms = 6000
//! seed = 42
//!
//! [object]
//! label = "tin-can"          # optional
//! present = true             # optional, default true
//! stiffness = 4.0            # pressure units per unit flexion, default 4.0
//! diameter_mm = 66.0         # optional, default 66.0
//! contact_flexion = [0.5, 0.5, 0.5, 0.5, 0.5]   # optional
//! waypoints = [
//!   { t_ms = 0,    pos = [300.0, 0.0, 0.0] },
//!   { t_ms = 1500, pos = [80.0, 0.0, 0.0] },
//! ]
//!
//! [wrist]                    # optional, default level
//! tilt = [ { t_ms = 0, deg = 0.0 }, { t_ms = 3000, deg = 90.0 } ]
//!
//! [config]                   # optional overrides, see `ConfigOverrides`
//! pressure_threshold = 600
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::config::{self, ConfigLayer, ConfigOverrides, LineIndex, SimConfig};
use crate::error::ScenarioError;
use crate::hand::{ObjectSpec, FINGER_COUNT};
use crate::sensors::WristPose;
use crate::timeline::Timeline;

pub const FORMAT_NAME: &str = "handsim-scenario";
pub const FORMAT_VERSION: u32 = 1;

pub const DEFAULT_STIFFNESS: f64 = 4.0;
pub const DEFAULT_DIAMETER_MM: f64 = 66.0;
pub const DEFAULT_CONTACT_FLEXION: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub duration_ms: u64,
    pub object: ObjectSpec,
    pub wrist: WristPose,
    pub config: SimConfig,
    pub seed: u64,
}

impl ScenarioSpec {
    /// A scenario with default configuration and a level wrist.
    pub fn new(name: impl Into<String>, duration_ms: u64, object: ObjectSpec, seed: u64) -> Self {
        Self {
            name: name.into(),
            duration_ms,
            object,
            wrist: WristPose::level(),
            config: SimConfig::default(),
            seed,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    format: Option<Spanned<String>>,
    version: Option<Spanned<i64>>,
    name: Option<String>,
    duration_ms: Option<Spanned<i64>>,
    seed: Option<Spanned<u64>>,
    object: Option<ObjectFile>,
    wrist: Option<WristFile>,
    config: Option<ConfigOverrides>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectFile {
    label: Option<String>,
    present: Option<bool>,
    stiffness: Option<Spanned<f64>>,
    diameter_mm: Option<Spanned<f64>>,
    contact_flexion: Option<Spanned<Vec<f64>>>,
    #[serde(default)]
    waypoints: Vec<Spanned<WaypointFile>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WaypointFile {
    t_ms: u64,
    pos: [f64; 3],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WristFile {
    #[serde(default)]
    tilt: Vec<Spanned<TiltFile>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TiltFile {
    t_ms: u64,
    deg: f64,
}

pub fn load_scenario(path: &Path) -> Result<ScenarioSpec, ScenarioError> {
    load_scenario_with(path, None)
}

/// Loads a scenario and layers an optional global override file on top of
/// its `[config]` table.
pub fn load_scenario_with(path: &Path, global: Option<&ConfigLayer>) -> Result<ScenarioSpec, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario_with(&text, &path.display().to_string(), global)
}

pub fn parse_scenario(text: &str, origin: &str) -> Result<ScenarioSpec, ScenarioError> {
    parse_scenario_with(text, origin, None)
}

pub fn parse_scenario_with(
    text: &str,
    origin: &str,
    global: Option<&ConfigLayer>,
) -> Result<ScenarioSpec, ScenarioError> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| config::parse_error(origin, text, &e))?;
    let lines = LineIndex::new(text);
    let invalid = |field: &str, line: Option<usize>, reason: String| ScenarioError::Invalid {
        origin: origin.to_string(),
        field: field.to_string(),
        line,
        reason,
    };
    let line_of = |span: std::ops::Range<usize>| Some(lines.line(span.start));

    match &file.format {
        None => {
            return Err(invalid(
                "format",
                None,
                format!("missing header; expected \"{FORMAT_NAME}\""),
            ))
        }
        Some(f) if f.get_ref() != FORMAT_NAME => {
            return Err(invalid(
                "format",
                line_of(f.span()),
                format!("expected \"{FORMAT_NAME}\""),
            ))
        }
        Some(_) => {}
    }
    match &file.version {
        None => return Err(invalid("version", None, "missing".into())),
        Some(v) if *v.get_ref() != i64::from(FORMAT_VERSION) => {
            return Err(invalid(
                "version",
                line_of(v.span()),
                format!("unsupported version {}, expected {FORMAT_VERSION}", v.get_ref()),
            ))
        }
        Some(_) => {}
    }
    let seed = file
        .seed
        .as_ref()
        .map(|s| *s.get_ref())
        .ok_or_else(|| invalid("seed", None, "missing; every scenario must fix its RNG seed".into()))?;
    let duration_ms = match &file.duration_ms {
        None => return Err(invalid("duration_ms", None, "missing".into())),
        Some(d) if *d.get_ref() <= 0 => {
            return Err(invalid(
                "duration_ms",
                line_of(d.span()),
                format!("must be > 0, got {}", d.get_ref()),
            ))
        }
        Some(d) => *d.get_ref() as u64,
    };

    let obj = file
        .object
        .ok_or_else(|| invalid("object", None, "missing [object] table".into()))?;
    if obj.waypoints.is_empty() {
        return Err(invalid(
            "object.waypoints",
            None,
            "at least one waypoint is required".into(),
        ));
    }
    let mut knots = Vec::with_capacity(obj.waypoints.len());
    for (i, wp) in obj.waypoints.iter().enumerate() {
        let line = line_of(wp.span());
        let w = wp.get_ref();
        let field = format!("object.waypoints[{i}]");
        if let Some((prev_t, _)) = knots.last() {
            if w.t_ms <= *prev_t {
                return Err(invalid(
                    &field,
                    line,
                    format!("time {} ms does not follow previous waypoint at {prev_t} ms", w.t_ms),
                ));
            }
        }
        if w.t_ms > duration_ms {
            return Err(invalid(
                &field,
                line,
                format!("time {} ms beyond duration {duration_ms} ms", w.t_ms),
            ));
        }
        if w.pos.iter().any(|c| !c.is_finite()) {
            return Err(invalid(&field, line, "position must be finite".into()));
        }
        knots.push((w.t_ms, w.pos));
    }
    let trajectory = Timeline::new(knots).expect("checked monotone above");

    let stiffness = match &obj.stiffness {
        Some(s) if !(s.get_ref().is_finite() && *s.get_ref() > 0.0) => {
            return Err(invalid(
                "object.stiffness",
                line_of(s.span()),
                format!("must be > 0, got {}", s.get_ref()),
            ))
        }
        Some(s) => *s.get_ref(),
        None => DEFAULT_STIFFNESS,
    };
    let diameter_mm = match &obj.diameter_mm {
        Some(d) if !(d.get_ref().is_finite() && *d.get_ref() > 0.0) => {
            return Err(invalid(
                "object.diameter_mm",
                line_of(d.span()),
                format!("must be > 0, got {}", d.get_ref()),
            ))
        }
        Some(d) => *d.get_ref(),
        None => DEFAULT_DIAMETER_MM,
    };
    let contact_flexion = match &obj.contact_flexion {
        None => [DEFAULT_CONTACT_FLEXION; FINGER_COUNT],
        Some(cf) => {
            let line = line_of(cf.span());
            let values: [f64; FINGER_COUNT] = cf.get_ref().as_slice().try_into().map_err(|_| {
                invalid(
                    "object.contact_flexion",
                    line,
                    format!("expected {FINGER_COUNT} values, got {}", cf.get_ref().len()),
                )
            })?;
            if let Some(bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(invalid("object.contact_flexion", line, format!("{bad} outside [0, 1]")));
            }
            values
        }
    };
    let object = ObjectSpec {
        label: obj.label.unwrap_or_else(|| "object".to_string()),
        trajectory,
        contact_flexion,
        stiffness,
        diameter_mm,
        present: obj.present.unwrap_or(true),
    };

    let wrist = match file.wrist {
        None => WristPose::level(),
        Some(w) if w.tilt.is_empty() => WristPose::level(),
        Some(w) => {
            let mut knots: Vec<(u64, f64)> = Vec::with_capacity(w.tilt.len());
            for (i, k) in w.tilt.iter().enumerate() {
                let line = line_of(k.span());
                let field = format!("wrist.tilt[{i}]");
                let TiltFile { t_ms, deg } = *k.get_ref();
                if let Some((prev_t, _)) = knots.last() {
                    if t_ms <= *prev_t {
                        return Err(invalid(
                            &field,
                            line,
                            format!("time {t_ms} ms does not follow previous knot at {prev_t} ms"),
                        ));
                    }
                }
                if t_ms > duration_ms {
                    return Err(invalid(
                        &field,
                        line,
                        format!("time {t_ms} ms beyond duration {duration_ms} ms"),
                    ));
                }
                if !(0.0..=180.0).contains(&deg) {
                    return Err(invalid(&field, line, format!("tilt {deg}° outside [0, 180]")));
                }
                knots.push((t_ms, deg));
            }
            WristPose {
                timeline: Timeline::new(knots).expect("checked monotone above"),
            }
        }
    };

    let local = ConfigLayer::new(origin, text, file.config.unwrap_or_default());
    let mut layers = vec![&local];
    layers.extend(global);
    let config = config::merge(SimConfig::default(), &layers, origin)?;

    Ok(ScenarioSpec {
        name: file.name.unwrap_or_else(|| {
            Path::new(origin)
                .file_stem()
                .map_or_else(|| "scenario".to_string(), |s| s.to_string_lossy().into_owned())
        }),
        duration_ms,
        object,
        wrist,
        config,
        seed,
    })
}

/// Scenario files (`*.toml`) in `dir`, sorted by path.
pub fn scenario_files(dir: &Path) -> Result<Vec<std::path::PathBuf>, ScenarioError> {
    let io = |source| ScenarioError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "toml") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
format = "handsim-scenario"
version = 1
duration_ms = 1000
seed = 5

[object]
waypoints = [ { t_ms = 0, pos = [120.0, 0.0, 0.0] } ]
"#;

    #[test]
    fn minimal_file_gets_defaults() {
        let spec = parse_scenario(MINIMAL, "scenarios/still.toml").unwrap();
        assert_eq!(spec.name, "still");
        assert_eq!(spec.seed, 5);
        assert_eq!(spec.duration_ms, 1000);
        assert_eq!(spec.config, SimConfig::default());
        assert_eq!(spec.object.stiffness, DEFAULT_STIFFNESS);
        assert_eq!(spec.object.contact_flexion, [0.5; 5]);
        assert!(spec.object.present);
        assert_eq!(spec.object.position_at(999), [120.0, 0.0, 0.0]);
        assert_eq!(spec.wrist.tilt_at(500), 0.0);
    }

    #[test]
    fn decreasing_waypoints_name_the_waypoint() {
        let text = MINIMAL.replace(
            "waypoints = [ { t_ms = 0, pos = [120.0, 0.0, 0.0] } ]",
            "waypoints = [\n  { t_ms = 0, pos = [120.0, 0.0, 0.0] },\n  { t_ms = 500, pos = [90.0, 0.0, 0.0] },\n  { t_ms = 400, pos = [80.0, 0.0, 0.0] },\n]",
        );
        let err = parse_scenario(&text, "s.toml").unwrap_err();
        assert_eq!(err.field(), Some("object.waypoints[2]"));
        assert_eq!(err.line(), Some(11));
        assert!(err.to_string().contains("line 11"), "{err}");
    }

    #[test]
    fn threshold_override_beyond_adc_range() {
        let text = format!("{MINIMAL}\n[config]\npressure_threshold = 2000\n");
        let err = parse_scenario(&text, "s.toml").unwrap_err();
        assert_eq!(err.field(), Some("pressure_threshold"));
        assert_eq!(err.line(), Some(11));
    }

    #[test]
    fn missing_seed_rejected() {
        let err = parse_scenario(&MINIMAL.replace("seed = 5\n", ""), "s.toml").unwrap_err();
        assert_eq!(err.field(), Some("seed"));
    }

    #[test]
    fn header_checked() {
        let err = parse_scenario(&MINIMAL.replace("version = 1", "version = 2"), "s.toml").unwrap_err();
        assert_eq!(err.field(), Some("version"));
        let err = parse_scenario(&MINIMAL.replace("handsim-scenario", "other"), "s.toml").unwrap_err();
        assert_eq!(err.field(), Some("format"));
        assert_eq!(err.line(), Some(2));
    }

    #[test]
    fn times_must_fit_duration() {
        let text = MINIMAL.replace("t_ms = 0,", "t_ms = 1500,");
        assert_eq!(
            parse_scenario(&text, "s").unwrap_err().field(),
            Some("object.waypoints[0]")
        );
        let text = format!("{MINIMAL}\n[wrist]\ntilt = [ {{ t_ms = 2000, deg = 90.0 }} ]\n");
        assert_eq!(parse_scenario(&text, "s").unwrap_err().field(), Some("wrist.tilt[0]"));
    }

    #[test]
    fn object_fields_validated() {
        let with = |extra: &str| MINIMAL.replace("[object]\n", &format!("[object]\n{extra}\n"));
        let err = parse_scenario(&with("stiffness = -1.0"), "s").unwrap_err();
        assert_eq!(err.field(), Some("object.stiffness"));
        let err = parse_scenario(&with("contact_flexion = [0.5, 0.5]"), "s").unwrap_err();
        assert_eq!(err.field(), Some("object.contact_flexion"));
        let err = parse_scenario(&with("contact_flexion = [0.5, 0.5, 1.5, 0.5, 0.5]"), "s").unwrap_err();
        assert_eq!(err.field(), Some("object.contact_flexion"));
    }

    #[test]
    fn tilt_out_of_range_rejected() {
        let text = format!("{MINIMAL}\n[wrist]\ntilt = [ {{ t_ms = 0, deg = 190.0 }} ]\n");
        assert_eq!(parse_scenario(&text, "s").unwrap_err().field(), Some("wrist.tilt[0]"));
    }

    #[test]
    fn global_layer_overrides_scenario() {
        let text = format!("{MINIMAL}\n[config]\npressure_threshold = 500\n");
        let global = ConfigLayer::parse("global.toml", "pressure_threshold = 800\n").unwrap();
        let spec = parse_scenario_with(&text, "s", Some(&global)).unwrap();
        assert_eq!(spec.config.motor.pressure_threshold, 800);
        let bad = ConfigLayer::parse("global.toml", "\npressure_threshold = 0\n").unwrap();
        let err = parse_scenario_with(&text, "s", Some(&bad)).unwrap_err();
        assert!(err.to_string().starts_with("global.toml: line 2"), "{err}");
    }

    #[test]
    fn syntax_error_reports_line() {
        let err = parse_scenario("format = \"handsim-scenario\"\nversion = = 1\n", "s").unwrap_err();
        assert!(matches!(err, ScenarioError::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn load_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.toml");
        std::fs::write(&path, MINIMAL).unwrap();
        std::fs::write(dir.path().join("a.toml"), MINIMAL).unwrap();
        std::fs::write(dir.path().join("notes.txt"), "x").unwrap();
        assert_eq!(load_scenario(&path).unwrap().name, "b");
        let files = scenario_files(dir.path()).unwrap();
        assert_eq!(files.len(), 2);
        assert!(files[0].ends_with("a.toml"));
        assert!(matches!(
            load_scenario(&dir.path().join("nope.toml")),
            Err(ScenarioError::Io { .. })
        ));
    }
}
