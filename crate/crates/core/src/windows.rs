//! Acceleration windows of the modulation strength.
//!
//! Accelerating modes exist for `sπ ≤ λ < √(1 + (sπ)²)` with `s` an integer
//! or half-integer. The windows are disjoint and ordered in `s`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::WindowError;
use crate::math;

/// A non-negative multiple of 1/2, stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfIndex(u32);

impl HalfIndex {
    pub const ZERO: HalfIndex = HalfIndex(0);
    pub const HALF: HalfIndex = HalfIndex(1);

    pub const fn from_twice(twice: u32) -> Self {
        HalfIndex(twice)
    }

    pub fn new(s: f64) -> Result<Self, WindowError> {
        let twice = 2.0 * s;
        if !s.is_finite() || s < 0.0 || twice != math::round(twice) || twice > u32::MAX as f64 {
            return Err(WindowError::InvalidIndex(s));
        }
        Ok(HalfIndex(twice as u32))
    }

    pub fn twice(self) -> u32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub fn next(self) -> Self {
        HalfIndex(self.0 + 1)
    }
}

impl core::fmt::Display for HalfIndex {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// The half-open interval `[lower, upper)` of modulation strengths for index `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccelWindow {
    pub s: HalfIndex,
    pub lower: f64,
    pub upper: f64,
    /// Radius of the accelerating phase-space disk, when it has been estimated.
    pub disk_radius: Option<f64>,
}

impl AccelWindow {
    pub fn of(s: HalfIndex) -> Self {
        let lower = s.value() * PI;
        AccelWindow { s, lower, upper: math::sqrt(1.0 + lower * lower), disk_radius: None }
    }

    /// `lower <= lambda < upper`.
    pub fn contains(&self, lambda: f64) -> bool {
        self.lower <= lambda && lambda < self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

pub fn window_bounds(s: f64) -> Result<AccelWindow, WindowError> {
    Ok(AccelWindow::of(HalfIndex::new(s)?))
}

fn first_index(include_s0: bool) -> HalfIndex {
    if include_s0 {
        HalfIndex::ZERO
    } else {
        HalfIndex::HALF
    }
}

/// The window containing `lambda` among indices up to `s_max`, if any.
pub fn classify(lambda: f64, s_max: HalfIndex, include_s0: bool) -> Option<AccelWindow> {
    if !(lambda >= 0.0) {
        return None;
    }
    // Windows of index s start at sπ, so only floor(2λ/π) can contain λ.
    let candidate = math::floor(2.0 * lambda / PI);
    if candidate > s_max.twice() as f64 {
        return None;
    }
    let s = HalfIndex::from_twice(candidate as u32);
    if s < first_index(include_s0) {
        return None;
    }
    let window = AccelWindow::of(s);
    // Guard the floor against rounding right at a lower bound.
    if window.contains(lambda) {
        return Some(window);
    }
    let next = AccelWindow::of(s.next());
    (next.s <= s_max && next.contains(lambda)).then_some(next)
}

/// All windows whose lower edge does not exceed `lambda_max`, ascending in `s`.
pub fn enumerate_windows(lambda_max: f64, include_s0: bool) -> Vec<AccelWindow> {
    let mut out = Vec::new();
    if !(lambda_max >= 0.0) {
        return out;
    }
    let mut s = first_index(include_s0);
    loop {
        let window = AccelWindow::of(s);
        if window.lower > lambda_max {
            break;
        }
        out.push(window);
        s = s.next();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const BIG: HalfIndex = HalfIndex::from_twice(400);

    #[test]
    #[allow(clippy::approx_constant)]
    fn bounds_examples() {
        let w = window_bounds(0.5).unwrap();
        assert!((w.lower - 1.5707963267948966).abs() < 1e-12);
        assert!((w.upper - 1.8620958891185866).abs() < 1e-12);
        let w = window_bounds(1.0).unwrap();
        assert!((w.lower - 3.141592653589793).abs() < 1e-12);
        assert!((w.upper - 3.296908309475615).abs() < 1e-12);
        let w = window_bounds(0.0).unwrap();
        assert_eq!((w.lower, w.upper), (0.0, 1.0));
    }

    #[test]
    fn invalid_indices() {
        for s in [-0.5, 0.25, 1.3, f64::NAN, f64::INFINITY] {
            assert!(window_bounds(s).is_err(), "{s}");
        }
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(1.7, BIG, false).unwrap().s, HalfIndex::HALF);
        assert!(classify(2.4, BIG, false).is_none());
        assert_eq!(classify(3.2, BIG, false).unwrap().s, HalfIndex::from_twice(2));
        assert!(classify(3.2, HalfIndex::HALF, false).is_none());
        assert!(classify(0.5, BIG, false).is_none());
        assert_eq!(classify(0.5, BIG, true).unwrap().s, HalfIndex::ZERO);
        assert!(classify(1.0, BIG, true).is_none());
    }

    #[test]
    fn boundary_ties() {
        let w = window_bounds(1.5).unwrap();
        assert_eq!(classify(w.lower, BIG, false).unwrap().s, w.s);
        assert!(classify(w.upper, BIG, false).is_none());
    }

    #[test]
    fn enumerate_examples() {
        let twice = |ws: &[AccelWindow]| ws.iter().map(|w| w.s.twice()).collect::<Vec<_>>();
        assert_eq!(twice(&enumerate_windows(2.0, true)), [0, 1]);
        assert_eq!(twice(&enumerate_windows(2.0, false)), [1]);
        assert_eq!(twice(&enumerate_windows(0.0, true)), [0]);
        assert!(enumerate_windows(0.0, false).is_empty());
        assert_eq!(twice(&enumerate_windows(5.0, true)), [0, 1, 2, 3]);
    }

    #[test]
    fn display() {
        assert_eq!(alloc::format!("{}", HalfIndex::HALF), "1/2");
        assert_eq!(alloc::format!("{}", HalfIndex::from_twice(4)), "2");
    }

    proptest! {
        #[test]
        fn width_identity(twice in 0u32..=200) {
            let w = AccelWindow::of(HalfIndex::from_twice(twice));
            prop_assert!((w.upper * w.upper - w.lower * w.lower - 1.0).abs() < 1e-12 * w.upper * w.upper);
            prop_assert!(w.lower < w.upper);
        }

        #[test]
        fn windows_disjoint(twice in 1u32..=200) {
            let w = AccelWindow::of(HalfIndex::from_twice(twice));
            let next = AccelWindow::of(HalfIndex::from_twice(twice + 1));
            prop_assert!(w.upper < next.lower);
        }

        #[test]
        fn classify_matches_enumeration(lambda in 0.0f64..60.0, include_s0 in any::<bool>()) {
            let found = classify(lambda, BIG, include_s0);
            let listed = enumerate_windows(lambda, include_s0)
                .into_iter()
                .find(|w| w.contains(lambda));
            prop_assert_eq!(found.map(|w| w.s), listed.map(|w| w.s));
        }
    }
}
