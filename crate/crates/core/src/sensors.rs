//! Camera, time-of-flight, FSR/ADC and accelerometer models.
//!
//! Every sensor is a pure function of simulated ground truth. The only
//! source of randomness is the TOF noise, drawn from a caller-owned RNG.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::DomainError;
use crate::hand::ObjectSpec;
use crate::timeline::Timeline;

pub const ADC_MAX: u16 = 1023;

/// Tunables for the sensor models. Defaults describe the modeled hardware.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorParams {
    /// Full horizontal field of view, degrees.
    pub fov_horizontal_deg: f64,
    /// Full vertical field of view, degrees.
    pub fov_vertical_deg: f64,
    /// Closest range at which the detector still fires, mm.
    pub min_detect_mm: f64,
    pub detector_score: f64,
    pub tof_max_range_mm: f64,
    /// Half-width of the uniform TOF noise band, mm.
    pub tof_noise_mm: f64,
    pub tof_noise_enabled: bool,
    /// Pressure that maps to ADC full scale.
    pub fsr_full_scale: f64,
}

impl Default for SensorParams {
    fn default() -> Self {
        Self {
            fov_horizontal_deg: 87.0,
            fov_vertical_deg: 84.0,
            min_detect_mm: 50.0,
            detector_score: 0.9,
            tof_max_range_mm: 200.0,
            tof_noise_mm: 3.0,
            tof_noise_enabled: true,
            fsr_full_scale: 1.0,
        }
    }
}

/// Normalized image-space box, all components in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionEvent {
    pub label: String,
    pub score: f64,
    pub bbox: BoundingBox,
    pub t_ms: u64,
}

/// Input resolution of the modeled detector (frames are resized to this).
pub const DETECTOR_INPUT_PX: (u32, u32) = (320, 320);

/// Scripted object detector: fires whenever the object is in front of the
/// wrist, inside the field of view and no closer than `min_detect_mm`.
pub fn camera_sample(object: &ObjectSpec, t_ms: u64, params: &SensorParams) -> Option<DetectionEvent> {
    if !object.present {
        return None;
    }
    let [x, y, z] = object.position_at(t_ms);
    if x <= 0.0 {
        return None;
    }
    let half_h = (params.fov_horizontal_deg / 2.0).to_radians();
    let half_v = (params.fov_vertical_deg / 2.0).to_radians();
    if y.abs().atan2(x) > half_h || z.abs().atan2(x) > half_v {
        return None;
    }
    if object.distance_at(t_ms) < params.min_detect_mm {
        return None;
    }
    let (tan_h, tan_v) = (half_h.tan(), half_v.tan());
    // image y grows downward
    let bbox = BoundingBox {
        cx: (0.5 + 0.5 * (y / x) / tan_h).clamp(0.0, 1.0),
        cy: (0.5 - 0.5 * (z / x) / tan_v).clamp(0.0, 1.0),
        w: (object.diameter_mm / x / (2.0 * tan_h)).clamp(0.0, 1.0),
        h: (object.diameter_mm / x / (2.0 * tan_v)).clamp(0.0, 1.0),
    };
    Some(DetectionEvent {
        label: object.label.clone(),
        score: params.detector_score,
        bbox,
        t_ms,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TofReading {
    Valid {
        distance_mm: f64,
    },
    /// Nothing within range; carries no distance.
    Invalid,
}

impl TofReading {
    pub fn distance(&self) -> Option<f64> {
        match self {
            TofReading::Valid { distance_mm } => Some(*distance_mm),
            TofReading::Invalid => None,
        }
    }

    pub fn is_valid(&self) -> bool {
        matches!(self, TofReading::Valid { .. })
    }
}

/// Time-of-flight ranger. Noise is only drawn when a valid reading is
/// produced and noise is enabled.
pub fn tof_sample<R: Rng + ?Sized>(object: &ObjectSpec, t_ms: u64, params: &SensorParams, rng: &mut R) -> TofReading {
    if !object.present {
        return TofReading::Invalid;
    }
    let truth = object.distance_at(t_ms);
    if truth > params.tof_max_range_mm {
        return TofReading::Invalid;
    }
    let noise = if params.tof_noise_enabled && params.tof_noise_mm > 0.0 {
        rng.random_range(-params.tof_noise_mm..=params.tof_noise_mm)
    } else {
        0.0
    };
    TofReading::Valid {
        distance_mm: (truth + noise).max(0.0),
    }
}

/// 10-bit ADC count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "u16", into = "u16")]
pub struct AdcReading(u16);

impl AdcReading {
    pub const ZERO: AdcReading = AdcReading(0);
    pub const MAX: AdcReading = AdcReading(ADC_MAX);

    pub fn new(counts: u16) -> Option<Self> {
        (counts <= ADC_MAX).then_some(Self(counts))
    }

    pub fn counts(self) -> u16 {
        self.0
    }
}

impl TryFrom<u16> for AdcReading {
    type Error = String;

    fn try_from(v: u16) -> Result<Self, Self::Error> {
        Self::new(v).ok_or_else(|| format!("ADC count {v} exceeds {ADC_MAX}"))
    }
}

impl From<AdcReading> for u16 {
    fn from(r: AdcReading) -> u16 {
        r.0
    }
}

/// FSR divider into the 10-bit converter: linear up to `full_scale`,
/// saturating at 1023.
pub fn fsr_to_adc(pressure: f64, full_scale: f64) -> Result<AdcReading, DomainError> {
    if pressure.is_nan() || pressure < 0.0 {
        return Err(DomainError::NegativePressure(pressure));
    }
    let counts = (f64::from(ADC_MAX) * pressure / full_scale).round();
    Ok(AdcReading(counts.min(f64::from(ADC_MAX)) as u16))
}

/// Acceleration in g.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccelSample {
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
}

impl AccelSample {
    pub fn magnitude(&self) -> f64 {
        (self.ax * self.ax + self.ay * self.ay + self.az * self.az).sqrt()
    }
}

/// Wrist inclination over time: the angle between the hand's down axis and
/// gravity, degrees in `[0, 180]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WristPose {
    pub timeline: Timeline<f64>,
}

impl WristPose {
    pub fn level() -> Self {
        Self {
            timeline: Timeline::constant(0.0),
        }
    }

    pub fn tilt_at(&self, t_ms: u64) -> f64 {
        self.timeline.at(t_ms).clamp(0.0, 180.0)
    }
}

/// Quasi-static accelerometer: gravity rotated about the sensor pitch axis.
pub fn accel_sample(pose: &WristPose, t_ms: u64) -> AccelSample {
    let tilt = pose.tilt_at(t_ms).to_radians();
    AccelSample {
        ax: tilt.sin(),
        ay: 0.0,
        az: tilt.cos(),
    }
}

/// Inclination from vertical, degrees: `acos(az / |a|)`.
///
/// Evaluated as `atan2(|a_xy|, az)`, which is the same angle but keeps full
/// precision near 0° and 180° where `acos` is ill-conditioned.
pub fn tilt_angle(sample: &AccelSample) -> Result<f64, DomainError> {
    let mag = sample.magnitude();
    if mag == 0.0 || !mag.is_finite() {
        return Err(DomainError::ZeroMagnitude);
    }
    let horizontal = sample.ax.hypot(sample.ay);
    Ok(horizontal.atan2(sample.az).to_degrees())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn object_at(pos: [f64; 3]) -> ObjectSpec {
        ObjectSpec {
            label: "can".into(),
            trajectory: Timeline::constant(pos),
            contact_flexion: [0.5; 5],
            stiffness: 4.0,
            diameter_mm: 66.0,
            present: true,
        }
    }

    fn quiet() -> SensorParams {
        SensorParams {
            tof_noise_enabled: false,
            ..SensorParams::default()
        }
    }

    #[test]
    fn camera_examples() {
        let p = SensorParams::default();
        let det = camera_sample(&object_at([150.0, 0.0, 0.0]), 220, &p).expect("on-axis");
        assert_eq!(det.score, 0.9);
        assert_eq!(det.t_ms, 220);
        assert_eq!((det.bbox.cx, det.bbox.cy), (0.5, 0.5));

        let mut absent = object_at([150.0, 0.0, 0.0]);
        absent.present = false;
        assert!(camera_sample(&absent, 0, &p).is_none());

        let off = 60f64.to_radians();
        let side = object_at([150.0 * off.cos(), 150.0 * off.sin(), 0.0]);
        assert!(camera_sample(&side, 0, &p).is_none());
    }

    #[test]
    fn camera_fov_edges_and_min_range() {
        let p = SensorParams::default();
        let at = |h_deg: f64, v_deg: f64| {
            let x = 150.0;
            object_at([x, x * h_deg.to_radians().tan(), x * v_deg.to_radians().tan()])
        };
        assert!(camera_sample(&at(43.0, 0.0), 0, &p).is_some());
        assert!(camera_sample(&at(44.0, 0.0), 0, &p).is_none());
        assert!(camera_sample(&at(0.0, 41.5), 0, &p).is_some());
        assert!(camera_sample(&at(0.0, 42.5), 0, &p).is_none());
        assert!(camera_sample(&object_at([49.0, 0.0, 0.0]), 0, &p).is_none());
        assert!(camera_sample(&object_at([50.0, 0.0, 0.0]), 0, &p).is_some());
        assert!(camera_sample(&object_at([-150.0, 0.0, 0.0]), 0, &p).is_none());
    }

    #[test]
    fn bbox_stays_in_unit_square() {
        let p = SensorParams::default();
        for pos in [[50.0, 45.0, -40.0], [400.0, -300.0, 300.0], [60.0, 0.0, 0.0]] {
            let det = camera_sample(&object_at(pos), 0, &p).unwrap();
            for v in [det.bbox.cx, det.bbox.cy, det.bbox.w, det.bbox.h] {
                assert!((0.0..=1.0).contains(&v), "{pos:?} -> {:?}", det.bbox);
            }
        }
    }

    #[test]
    fn tof_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = quiet();
        assert_eq!(
            tof_sample(&object_at([80.0, 0.0, 0.0]), 0, &q, &mut rng),
            TofReading::Valid { distance_mm: 80.0 }
        );
        assert_eq!(
            tof_sample(&object_at([250.0, 0.0, 0.0]), 0, &q, &mut rng),
            TofReading::Invalid
        );
        let mut absent = object_at([80.0, 0.0, 0.0]);
        absent.present = false;
        assert_eq!(tof_sample(&absent, 0, &q, &mut rng), TofReading::Invalid);
    }

    #[test]
    fn tof_noise_band_and_clamp() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = SensorParams::default();
        for _ in 0..2000 {
            let d = tof_sample(&object_at([80.0, 0.0, 0.0]), 0, &p, &mut rng)
                .distance()
                .unwrap();
            assert!((77.0..=83.0).contains(&d));
            let d = tof_sample(&object_at([1.0, 0.0, 0.0]), 0, &p, &mut rng)
                .distance()
                .unwrap();
            assert!(d >= 0.0);
        }
    }

    #[test]
    fn tof_seeded_reproducible() {
        let p = SensorParams::default();
        let obj = object_at([120.0, 5.0, 0.0]);
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..64)
                .map(|t| tof_sample(&obj, t, &p, &mut rng).distance().unwrap().to_bits())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(77), draw(77));
        assert_ne!(draw(77), draw(78));
    }

    #[test]
    fn adc_examples() {
        assert_eq!(fsr_to_adc(0.0, 1.0).unwrap().counts(), 0);
        assert_eq!(fsr_to_adc(1.0, 1.0).unwrap().counts(), 1023);
        assert_eq!(fsr_to_adc(0.5, 1.0).unwrap().counts(), 512);
        assert_eq!(fsr_to_adc(7.0, 1.0).unwrap().counts(), 1023);
        assert_eq!(fsr_to_adc(1.0, 2.0).unwrap().counts(), 512);
        assert!(matches!(fsr_to_adc(-0.1, 1.0), Err(DomainError::NegativePressure(_))));
        assert!(AdcReading::new(1024).is_none());
        assert_eq!(AdcReading::new(1023), Some(AdcReading::MAX));
    }

    #[test]
    fn accel_examples() {
        let pose = |deg| WristPose {
            timeline: Timeline::constant(deg),
        };
        let a = accel_sample(&pose(0.0), 0);
        assert_eq!((a.ax, a.ay, a.az), (0.0, 0.0, 1.0));
        let a = accel_sample(&pose(90.0), 0);
        assert!((a.ax - 1.0).abs() < 1e-15 && a.az.abs() < 1e-15);
        let a = accel_sample(&pose(60.0), 0);
        assert!((a.ax - 0.866).abs() < 1e-3 && (a.az - 0.5).abs() < 1e-12);
    }

    #[test]
    fn tilt_examples() {
        let s = |ax, ay, az| AccelSample { ax, ay, az };
        assert_eq!(tilt_angle(&s(0.0, 0.0, 1.0)).unwrap(), 0.0);
        assert!((tilt_angle(&s(1.0, 0.0, 0.0)).unwrap() - 90.0).abs() < 1e-12);
        assert!((tilt_angle(&s(0.866, 0.0, 0.5)).unwrap() - 60.0).abs() < 0.01);
        assert_eq!(tilt_angle(&s(0.0, 0.0, 0.0)), Err(DomainError::ZeroMagnitude));
    }

    proptest! {
        #[test]
        fn tilt_round_trip(deg in 0.0f64..=180.0) {
            let pose = WristPose { timeline: Timeline::constant(deg) };
            let sample = accel_sample(&pose, 0);
            let m = sample.magnitude();
            prop_assert!((0.5..=1.5).contains(&m));
            let back = tilt_angle(&sample).unwrap();
            prop_assert!((back - deg).abs() < 1e-9, "{} vs {}", back, deg);
        }

        #[test]
        fn adc_monotone_and_saturating(a in 0.0f64..3.0, b in 0.0f64..3.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let (x, y) = (fsr_to_adc(lo, 1.0).unwrap(), fsr_to_adc(hi, 1.0).unwrap());
            prop_assert!(x <= y);
            prop_assert!(y.counts() <= 1023);
            if hi >= 1.0 { prop_assert_eq!(y.counts(), 1023); }
        }

        #[test]
        fn camera_is_pure(x in -100.0f64..400.0, y in -300.0f64..300.0, z in -300.0f64..300.0, t in 0u64..10_000) {
            let obj = object_at([x, y, z]);
            let p = SensorParams::default();
            prop_assert_eq!(camera_sample(&obj, t, &p), camera_sample(&obj, t, &p));
        }
    }
}
