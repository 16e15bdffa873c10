//! Which initial conditions end up on accelerating orbits.

use alloc::vec::Vec;

use crate::classical::{AccelCriterion, Backend, ClassicalState, Tracker};
use crate::error::ClassicalError;
use crate::scaling::ScaledParams;

/// Rectangular grid of initial points `(z₀, p₀)` launched at time `t0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapGrid {
    pub z_range: (f64, f64),
    pub p_range: (f64, f64),
    pub nz: usize,
    pub np: usize,
    pub t0: f64,
}

impl MapGrid {
    pub fn len(&self) -> usize {
        self.nz * self.np
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn coord(range: (f64, f64), n: usize, i: usize) -> f64 {
        if n == 1 {
            0.5 * (range.0 + range.1)
        } else {
            range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64
        }
    }

    /// Point `index`, with `z` varying fastest.
    pub fn point(&self, index: usize) -> (f64, f64) {
        let (iz, ip) = (index % self.nz, index / self.nz);
        (Self::coord(self.z_range, self.nz, iz), Self::coord(self.p_range, self.np, ip))
    }

    /// Index of the grid node nearest to `(z, p)`.
    pub fn nearest(&self, z: f64, p: f64) -> usize {
        let pick = |range: (f64, f64), n: usize, x: f64| {
            if n == 1 {
                return 0;
            }
            let f = (x - range.0) / (range.1 - range.0) * (n - 1) as f64;
            (crate::math::round(f).max(0.0) as usize).min(n - 1)
        };
        pick(self.p_range, self.np, p) * self.nz + pick(self.z_range, self.nz, z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapPoint {
    pub z0: f64,
    pub p0: f64,
    /// Mean energy gain per bounce over the criterion window; NaN if not launched.
    pub gain: f64,
    pub accelerating: bool,
    /// False when the point starts below the mirror surface.
    pub launched: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccelMap {
    pub grid: MapGrid,
    pub points: Vec<MapPoint>,
}

impl AccelMap {
    pub fn flagged_fraction(&self) -> f64 {
        let launched = self.points.iter().filter(|p| p.launched).count();
        if launched == 0 {
            return 0.0;
        }
        self.points.iter().filter(|p| p.accelerating).count() as f64 / launched as f64
    }
}

/// Everything needed to evaluate map points independently.
#[derive(Debug, Clone, Copy)]
pub struct AccelMapRun {
    pub grid: MapGrid,
    pub params: ScaledParams,
    pub backend: Backend,
    pub criterion: AccelCriterion,
    pub t_probe: f64,
}

impl AccelMapRun {
    pub fn evaluate(&self, index: usize) -> Result<MapPoint, ClassicalError> {
        let (z0, p0) = self.grid.point(index);
        let t0 = self.grid.t0;
        if z0 < self.params.mirror_position(t0) {
            return Ok(MapPoint { z0, p0, gain: f64::NAN, accelerating: false, launched: false });
        }
        let mut tracker = Tracker::new(ClassicalState::new(z0, p0, t0));
        tracker.advance_to(t0 + self.t_probe, &self.params, &self.backend)?;
        let e = tracker.energies();
        Ok(MapPoint {
            z0,
            p0,
            gain: self.criterion.mean_gain(e),
            accelerating: self.criterion.is_accelerating(e),
            launched: true,
        })
    }

    /// Collect per-point results given in index order.
    pub fn assemble(&self, points: Vec<MapPoint>) -> AccelMap {
        assert_eq!(points.len(), self.grid.len(), "one result per grid point");
        AccelMap { grid: self.grid, points }
    }
}

/// Sequentially evaluate every grid point.
pub fn acceleration_map(run: &AccelMapRun) -> Result<AccelMap, ClassicalError> {
    let points = (0..run.grid.len()).map(|i| run.evaluate(i)).collect::<Result<Vec<_>, _>>()?;
    Ok(run.assemble(points))
}

/// Size of the 4-connected flagged region containing grid index `seed`
/// (zero if that point is not flagged).
pub fn flagged_component_size(map: &AccelMap, seed: usize) -> usize {
    let (nz, np) = (map.grid.nz, map.grid.np);
    if seed >= map.points.len() || !map.points[seed].accelerating {
        return 0;
    }
    let mut seen = alloc::vec![false; map.points.len()];
    let mut stack = alloc::vec![seed];
    seen[seed] = true;
    let mut count = 0;
    while let Some(i) = stack.pop() {
        count += 1;
        let (iz, ip) = (i % nz, i / nz);
        let mut push = |j: usize| {
            if !seen[j] && map.points[j].accelerating {
                seen[j] = true;
                stack.push(j);
            }
        };
        if iz > 0 {
            push(i - 1);
        }
        if iz + 1 < nz {
            push(i + 1);
        }
        if ip > 0 {
            push(i - nz);
        }
        if ip + 1 < np {
            push(i + nz);
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(lambda: f64) -> ScaledParams {
        ScaledParams::new(1.0, 1.0, lambda, 1.0).unwrap()
    }

    #[test]
    fn subcritical_has_no_acceleration() {
        let run = AccelMapRun {
            grid: MapGrid { z_range: (0.5, 20.0), p_range: (-5.0, 15.0), nz: 8, np: 8, t0: 0.0 },
            params: params(0.1),
            backend: Backend::hard_wall(),
            criterion: AccelCriterion::default(),
            t_probe: 300.0,
        };
        let map = acceleration_map(&run).unwrap();
        assert!(map.points.iter().all(|p| !p.accelerating));
    }

    #[test]
    fn island_point_is_flagged() {
        let lambda: f64 = 1.7;
        let phase = libm::acos(core::f64::consts::PI / (2.0 * lambda));
        let p = 6.0 * core::f64::consts::PI;
        let z = lambda * libm::sin(phase);
        let run = AccelMapRun {
            grid: MapGrid { z_range: (z, z), p_range: (p, p), nz: 1, np: 1, t0: phase },
            params: params(lambda),
            backend: Backend::hard_wall(),
            criterion: AccelCriterion::default(),
            t_probe: 1000.0,
        };
        let map = acceleration_map(&run).unwrap();
        assert!(map.points[0].accelerating);
        // One quantum of π in momentum per bounce.
        assert!(map.points[0].gain > 10.0 * core::f64::consts::PI);
    }

    #[test]
    fn below_mirror_points_are_skipped() {
        let run = AccelMapRun {
            grid: MapGrid { z_range: (-3.0, -2.0), p_range: (0.0, 1.0), nz: 2, np: 2, t0: 0.0 },
            params: params(1.7),
            backend: Backend::hard_wall(),
            criterion: AccelCriterion::default(),
            t_probe: 10.0,
        };
        let map = acceleration_map(&run).unwrap();
        assert!(map.points.iter().all(|p| !p.launched && p.gain.is_nan()));
        assert_eq!(map.flagged_fraction(), 0.0);
    }

    #[test]
    fn component_flood_fill() {
        let grid = MapGrid { z_range: (0.0, 1.0), p_range: (0.0, 1.0), nz: 3, np: 3, t0: 0.0 };
        let flags = [true, true, false, false, true, false, true, false, false];
        let points =
            flags.iter().map(|&f| MapPoint { z0: 0.0, p0: 0.0, gain: 0.0, accelerating: f, launched: true }).collect();
        let map = AccelMap { grid, points };
        assert_eq!(flagged_component_size(&map, 0), 3);
        assert_eq!(flagged_component_size(&map, 6), 1);
        assert_eq!(flagged_component_size(&map, 2), 0);
        assert_eq!(grid.nearest(0.9, 0.1), 2);
    }
}
