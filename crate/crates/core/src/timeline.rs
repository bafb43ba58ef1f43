//! Piecewise-linear timelines keyed by integer milliseconds.

use serde::{Deserialize, Serialize};

/// Values that can be linearly interpolated.
pub trait Lerp: Copy {
    fn lerp(a: Self, b: Self, frac: f64) -> Self;
}

impl Lerp for f64 {
    fn lerp(a: Self, b: Self, frac: f64) -> Self {
        a + (b - a) * frac
    }
}

impl Lerp for [f64; 3] {
    fn lerp(a: Self, b: Self, frac: f64) -> Self {
        [
            f64::lerp(a[0], b[0], frac),
            f64::lerp(a[1], b[1], frac),
            f64::lerp(a[2], b[2], frac),
        ]
    }
}

/// Error returned when knot times are not strictly increasing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("knot {index} is not after the previous knot")]
pub struct NonMonotone {
    /// Index of the first knot whose time does not exceed its predecessor.
    pub index: usize,
}

/// A function of time defined by knots; constant before the first and after
/// the last knot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timeline<T> {
    knots: Vec<(u64, T)>,
}

impl<T: Lerp> Timeline<T> {
    pub fn new(knots: Vec<(u64, T)>) -> Result<Self, NonMonotone> {
        if let Some(i) = knots.windows(2).position(|w| w[1].0 <= w[0].0) {
            return Err(NonMonotone { index: i + 1 });
        }
        Ok(Self { knots })
    }

    pub fn constant(value: T) -> Self {
        Self {
            knots: vec![(0, value)],
        }
    }

    pub fn knots(&self) -> &[(u64, T)] {
        &self.knots
    }

    pub fn last_time(&self) -> Option<u64> {
        self.knots.last().map(|k| k.0)
    }

    /// Panics if the timeline has no knots.
    pub fn at(&self, t_ms: u64) -> T {
        let knots = &self.knots;
        assert!(!knots.is_empty(), "empty timeline");
        // index of the first knot strictly after t
        let next = knots.partition_point(|k| k.0 <= t_ms);
        if next == 0 {
            return knots[0].1;
        }
        if next == knots.len() {
            return knots[next - 1].1;
        }
        let (t0, v0) = knots[next - 1];
        let (t1, v1) = knots[next];
        let frac = (t_ms - t0) as f64 / (t1 - t0) as f64;
        T::lerp(v0, v1, frac)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_and_clamps() {
        let tl = Timeline::new(vec![(100, 0.0), (200, 10.0), (400, 10.0)]).unwrap();
        assert_eq!(tl.at(0), 0.0);
        assert_eq!(tl.at(100), 0.0);
        assert_eq!(tl.at(150), 5.0);
        assert_eq!(tl.at(200), 10.0);
        assert_eq!(tl.at(10_000), 10.0);
    }

    #[test]
    fn rejects_non_increasing_times() {
        assert_eq!(
            Timeline::new(vec![(0, 1.0), (50, 2.0), (50, 3.0)]),
            Err(NonMonotone { index: 2 })
        );
        assert_eq!(
            Timeline::new(vec![(0, 1.0), (50, 2.0), (10, 3.0)]),
            Err(NonMonotone { index: 2 })
        );
    }

    #[test]
    fn vector_knots() {
        let tl = Timeline::new(vec![(0, [0.0, 0.0, 0.0]), (10, [10.0, -10.0, 2.0])]).unwrap();
        assert_eq!(tl.at(5), [5.0, -5.0, 1.0]);
    }
}
