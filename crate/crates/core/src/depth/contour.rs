//! Marching-squares contours of region membership and depth fields on a
//! planar chart.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{region_membership, DepthEngine, DepthRegion};
use crate::error::{HoroError, Result};
use crate::manifold::{Geometry, ManifoldContext};

/// Grid nodes are excluded when closer than this to the ball boundary.
pub const BALL_MASK_MARGIN: f64 = 1e-6;
/// Grid nodes in SPD cone coordinates need `ac − b² ≥` this value.
pub const SPD_DET_MARGIN: f64 = 1e-9;

/// Regular grid of `nx × ny` nodes over a rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64, nx: usize, ny: usize) -> Result<Self> {
        let g = GridSpec { x_min, x_max, y_min, y_max, nx, ny };
        g.validate()?;
        Ok(g)
    }

    /// Square grid `[-r, r]²` with `n` nodes per side.
    pub fn square(r: f64, n: usize) -> Result<Self> {
        Self::new(-r, r, -r, r, n, n)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 {
            return Err(HoroError::invalid("grid needs at least 2 nodes per axis"));
        }
        if !(self.x_max > self.x_min && self.y_max > self.y_min) {
            return Err(HoroError::invalid("grid ranges are empty"));
        }
        Ok(())
    }

    pub fn node(&self, i: usize, j: usize) -> (f64, f64) {
        let u = self.x_min + (self.x_max - self.x_min) * i as f64 / (self.nx - 1) as f64;
        let v = self.y_min + (self.y_max - self.y_min) * j as f64 / (self.ny - 1) as f64;
        (u, v)
    }

    /// Nodes in row-major order (`j` outer, `i` inner).
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        (0..self.ny).flat_map(|j| (0..self.nx).map(move |i| self.node(i, j))).collect()
    }

    pub fn cell_size(&self) -> f64 {
        let dx = (self.x_max - self.x_min) / (self.nx - 1) as f64;
        let dy = (self.y_max - self.y_min) / (self.ny - 1) as f64;
        dx.hypot(dy)
    }
}

/// Map from grid coordinates `(u, v)` to manifold points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlaneChart {
    /// `(u, v)` are the coordinates of a two-dimensional Euclidean or ball
    /// point.
    Coordinates,
    /// `(u, v) = (a, c)` of the 2×2 matrix `[[a, b], [b, c]]` with `b` fixed.
    SpdConeSlice { b: f64 },
}

impl PlaneChart {
    pub fn validate(&self, ctx: ManifoldContext) -> Result<()> {
        match (self, ctx) {
            (PlaneChart::Coordinates, ManifoldContext::Euclidean { dim: 2 })
            | (PlaneChart::Coordinates, ManifoldContext::PoincareBall { dim: 2 })
            | (PlaneChart::SpdConeSlice { .. }, ManifoldContext::SpdCone { size: 2 }) => Ok(()),
            _ => Err(HoroError::invalid(format!("chart {self:?} does not apply to {ctx}"))),
        }
    }

    /// Point at `(u, v)`, or `None` where the node is masked.
    pub fn point<G: Geometry>(&self, geometry: &G, u: f64, v: f64) -> Option<G::Point> {
        match (self, geometry.context()) {
            (PlaneChart::Coordinates, ManifoldContext::PoincareBall { .. }) => {
                let r = BALL_MASK_MARGIN;
                if u.hypot(v) > 1.0 - r {
                    return None;
                }
                geometry.point_from_row(&[u, v]).ok()
            }
            (PlaneChart::Coordinates, ManifoldContext::Euclidean { .. }) => geometry.point_from_row(&[u, v]).ok(),
            (PlaneChart::SpdConeSlice { b }, ManifoldContext::SpdCone { size: 2 }) => {
                if u <= 0.0 || u * v - b * b < SPD_DET_MARGIN {
                    return None;
                }
                geometry.point_from_row(&[u, *b, v]).ok()
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub points: Vec<[f64; 2]>,
    pub closed: bool,
}

/// Polylines of one level set together with the grid they were traced on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourSet {
    pub grid: GridSpec,
    pub chart: PlaneChart,
    pub level: f64,
    pub polylines: Vec<Polyline>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum EdgeKey {
    /// Edge from node (i, j) to (i+1, j).
    Horizontal(usize, usize),
    /// Edge from node (i, j) to (i, j+1).
    Vertical(usize, usize),
}

/// Traces the `level` set of a scalar field sampled on `grid`.
///
/// `values` is row-major (`j` outer); `None` marks masked nodes, and cells
/// touching a masked node are skipped. Saddle cells are resolved by the
/// average of the four corners.
pub fn trace_contour_2d(grid: &GridSpec, values: &[Option<f64>], level: f64) -> Result<Vec<Polyline>> {
    grid.validate()?;
    HoroError::check_dim(grid.nx * grid.ny, values.len())?;
    let at = |i: usize, j: usize| values[j * grid.nx + i];
    let mut positions: HashMap<EdgeKey, [f64; 2]> = HashMap::new();
    let mut segments: Vec<(EdgeKey, EdgeKey)> = Vec::new();

    let mut crossing = |key: EdgeKey, (ia, ja): (usize, usize), (ib, jb): (usize, usize), fa: f64, fb: f64| {
        positions.entry(key).or_insert_with(|| {
            let t = if fb == fa { 0.5 } else { ((level - fa) / (fb - fa)).clamp(0.0, 1.0) };
            let (ua, va) = grid.node(ia, ja);
            let (ub, vb) = grid.node(ib, jb);
            [ua + t * (ub - ua), va + t * (vb - va)]
        });
        key
    };

    for j in 0..grid.ny - 1 {
        for i in 0..grid.nx - 1 {
            let (Some(f00), Some(f10), Some(f11), Some(f01)) = (at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1))
            else {
                continue;
            };
            let case = usize::from(f00 > level)
                | usize::from(f10 > level) << 1
                | usize::from(f11 > level) << 2
                | usize::from(f01 > level) << 3;
            if case == 0 || case == 15 {
                continue;
            }
            let bottom = crossing(EdgeKey::Horizontal(i, j), (i, j), (i + 1, j), f00, f10);
            let right = crossing(EdgeKey::Vertical(i + 1, j), (i + 1, j), (i + 1, j + 1), f10, f11);
            let top = crossing(EdgeKey::Horizontal(i, j + 1), (i, j + 1), (i + 1, j + 1), f01, f11);
            let left = crossing(EdgeKey::Vertical(i, j), (i, j), (i, j + 1), f00, f01);
            let center_above = 0.25 * (f00 + f10 + f11 + f01) > level;
            let pairs: &[(EdgeKey, EdgeKey)] = match case {
                1 | 14 => &[(left, bottom)],
                2 | 13 => &[(bottom, right)],
                3 | 12 => &[(left, right)],
                4 | 11 => &[(right, top)],
                6 | 9 => &[(bottom, top)],
                7 | 8 => &[(left, top)],
                5 => {
                    if center_above {
                        &[(left, top), (bottom, right)]
                    } else {
                        &[(left, bottom), (right, top)]
                    }
                }
                10 => {
                    if center_above {
                        &[(left, bottom), (right, top)]
                    } else {
                        &[(left, top), (bottom, right)]
                    }
                }
                _ => unreachable!("cases 0 and 15 skipped above"),
            };
            segments.extend_from_slice(pairs);
        }
    }
    Ok(join_segments(&segments, &positions))
}

fn join_segments(segments: &[(EdgeKey, EdgeKey)], positions: &HashMap<EdgeKey, [f64; 2]>) -> Vec<Polyline> {
    let mut incident: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (s, &(a, b)) in segments.iter().enumerate() {
        incident.entry(a).or_default().push(s);
        incident.entry(b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();

    let walk = |start_seg: usize, start_key: EdgeKey, used: &mut Vec<bool>| -> (Vec<EdgeKey>, bool) {
        let mut keys = vec![start_key];
        let mut seg = start_seg;
        let mut current = start_key;
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            let next = if a == current { b } else { a };
            keys.push(next);
            if next == start_key {
                return (keys, true);
            }
            let follow = incident[&next].iter().copied().find(|&s| !used[s]);
            match follow {
                Some(s) => {
                    seg = s;
                    current = next;
                }
                None => return (keys, false),
            }
        }
    };

    // Open chains first, starting from their dangling ends.
    for s in 0..segments.len() {
        if used[s] {
            continue;
        }
        let (a, b) = segments[s];
        let start = if incident[&a].len() == 1 {
            Some(a)
        } else if incident[&b].len() == 1 {
            Some(b)
        } else {
            None
        };
        if let Some(key) = start {
            let (keys, closed) = walk(s, key, &mut used);
            out.push(to_polyline(&keys, closed, positions));
        }
    }
    for s in 0..segments.len() {
        if !used[s] {
            let (keys, closed) = walk(s, segments[s].0, &mut used);
            out.push(to_polyline(&keys, closed, positions));
        }
    }
    out
}

fn to_polyline(keys: &[EdgeKey], closed: bool, positions: &HashMap<EdgeKey, [f64; 2]>) -> Polyline {
    let mut points: Vec<[f64; 2]> = keys.iter().map(|k| positions[k]).collect();
    if closed {
        points.pop();
    }
    Polyline { points, closed }
}

/// Samples `field` over the grid through `chart`, masked nodes as `None`.
pub fn sample_field<G: Geometry>(
    geometry: &G,
    grid: &GridSpec,
    chart: &PlaneChart,
    field: impl Fn(&G::Point) -> f64 + Sync,
) -> Vec<Option<f64>> {
    grid.nodes().par_iter().map(|&(u, v)| chart.point(geometry, u, v).map(|z| field(&z))).collect()
}

/// Unmasked grid nodes as manifold points, row-major.
pub fn grid_points<G: Geometry>(geometry: &G, grid: &GridSpec, chart: &PlaneChart) -> Vec<G::Point> {
    grid.nodes().iter().filter_map(|&(u, v)| chart.point(geometry, u, v)).collect()
}

/// Zero level set of the membership functional `F` of a region.
pub fn region_contours<G: Geometry>(
    geometry: &G,
    region: &DepthRegion<G::Direction>,
    grid: &GridSpec,
    chart: &PlaneChart,
) -> Result<ContourSet> {
    chart.validate(geometry.context())?;
    grid.validate()?;
    let values = sample_field(geometry, grid, chart, |z| region_membership(geometry, region, z).value);
    let polylines = trace_contour_2d(grid, &values, 0.0)?;
    Ok(ContourSet { grid: *grid, chart: *chart, level: 0.0, polylines })
}

/// Boundaries of `{D_m ≥ α}` for each level `α`. The depth field is
/// piecewise constant, so crossings are placed by interpolating `α − D_m`.
pub fn depth_contours<G: Geometry>(
    engine: &DepthEngine<'_, G>,
    grid: &GridSpec,
    chart: &PlaneChart,
    levels: &[f64],
) -> Result<Vec<ContourSet>> {
    let geometry = engine.geometry();
    chart.validate(geometry.context())?;
    grid.validate()?;
    let depths = sample_field(geometry, grid, chart, |z| engine.value(z));
    levels
        .iter()
        .map(|&alpha| {
            let values: Vec<Option<f64>> = depths.iter().map(|d| d.map(|d| alpha - d)).collect();
            let polylines = trace_contour_2d(grid, &values, 0.0)?;
            Ok(ContourSet { grid: *grid, chart: *chart, level: alpha, polylines })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depth::{region_thresholds, DirectionSet, RegionEntry};
    use crate::manifold::{DirectionMode, PoincareBall};
    use crate::measure::EmpiricalMeasure;

    #[test]
    fn circle_level_set_is_closed() {
        let grid = GridSpec::square(2.0, 41).unwrap();
        let values: Vec<Option<f64>> = grid.nodes().iter().map(|&(u, v)| Some(u * u + v * v)).collect();
        let lines = trace_contour_2d(&grid, &values, 1.0).unwrap();
        assert_eq!(lines.len(), 1);
        assert!(lines[0].closed);
        for p in &lines[0].points {
            assert!((p[0].hypot(p[1]) - 1.0).abs() < 0.02);
        }
    }

    #[test]
    fn empty_grid_rejected() {
        assert!(GridSpec::new(0.0, 1.0, 0.0, 1.0, 1, 5).is_err());
        assert!(GridSpec::new(1.0, 1.0, 0.0, 1.0, 3, 5).is_err());
    }

    #[test]
    fn horoball_is_tangent_circle() {
        let g = PoincareBall::new(2).unwrap();
        let xi = g.direction(&[1.0, 0.0]).unwrap();
        let t: f64 = 0.5;
        let region = DepthRegion::new(vec![RegionEntry { direction: xi, threshold: t }], 0.5, String::new()).unwrap();
        let grid = GridSpec::square(1.0, 201).unwrap();
        let set = region_contours(&g, &region, &grid, &PlaneChart::Coordinates).unwrap();
        assert!(!set.polylines.is_empty());
        let center = 1.0 / (1.0 + t.exp());
        let radius = t.exp() / (1.0 + t.exp());
        let tol = grid.cell_size();
        let mut n = 0;
        for line in &set.polylines {
            for p in &line.points {
                assert!(((p[0] - center).hypot(p[1]) - radius).abs() < tol);
                n += 1;
            }
        }
        assert!(n > 100);
    }

    #[test]
    fn unreachable_region_has_no_contour() {
        let g = PoincareBall::new(2).unwrap();
        let pts = [[0.1, 0.0], [-0.1, 0.0]].iter().map(|p| g.point(p).unwrap()).collect();
        let mu = EmpiricalMeasure::uniform(pts).unwrap();
        let dirs = DirectionSet::sample(&g, 16, DirectionMode::Grid).unwrap();
        let mut region = region_thresholds(&g, &mu, 0.5, &dirs).unwrap();
        for e in &mut region.entries {
            e.threshold = -50.0;
        }
        let grid = GridSpec::square(1.0, 41).unwrap();
        let set = region_contours(&g, &region, &grid, &PlaneChart::Coordinates).unwrap();
        assert!(set.polylines.is_empty());
    }
}
