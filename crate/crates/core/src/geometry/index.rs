//! Multiscale dyadic occupancy index.
//!
//! The root cube is split dyadically; level `m` has cells of side
//! `root.side() / 2^m`. Each level stores its occupied cells sorted by Morton
//! key. Because a parent's key is its child's key shifted right by `dim`
//! bits, the children of any cell form a contiguous run in the next level,
//! and the descendants of a cell at any deeper level form a contiguous run as
//! well. Ball queries walk this implicit tree and only open cells that
//! straddle the ball boundary.

use super::pointset::{dist_sq, Cube, PointSet};
use crate::error::{Error, Result};

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 8;

/// Deepest level addressable in dimension `dim` (u32 lattice coordinates,
/// u128 Morton keys).
pub fn level_cap(dim: usize) -> u32 {
    (128 / dim.max(1)).min(31) as u32
}

#[derive(Clone, Debug, PartialEq)]
struct Level {
    keys: Vec<u128>,
    coords: Vec<u32>,
    /// `child_start[i]..child_start[i + 1]` indexes the children of cell `i`
    /// in the next level. Empty on the leaf level.
    child_start: Vec<usize>,
}

impl Level {
    fn len(&self) -> usize {
        self.keys.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiScaleIndex {
    dim: usize,
    root: Cube,
    lo: Vec<f64>,
    side: f64,
    max_level: u32,
    resolution: f64,
    levels: Vec<Level>,
    /// Sample coordinates reordered by leaf key.
    points: Vec<f64>,
    /// `point_start[j]..point_start[j + 1]` are the points of leaf cell `j`.
    point_start: Vec<usize>,
}

fn morton(coords: &[u32], bits: u32) -> u128 {
    let mut key = 0u128;
    for b in (0..bits).rev() {
        for c in coords {
            key = (key << 1) | u128::from((c >> b) & 1);
        }
    }
    key
}

impl MultiScaleIndex {
    /// Build the index down to `max_level`.
    ///
    /// The root is the cube centred at the bounding-box midpoint with radius
    /// half the largest bounding-box side. A set whose extent is below the
    /// sample resolution is treated as a single point: the root is widened so
    /// that the leaf side equals the resolution.
    pub fn build(set: &PointSet, max_level: u32) -> Result<Self> {
        let dim = set.dim();
        if dim > MAX_DIM {
            return Err(Error::InvalidParameter(format!(
                "dimension {dim} exceeds the supported maximum {MAX_DIM}"
            )));
        }
        let cap = level_cap(dim);
        if max_level > cap {
            return Err(Error::InvalidParameter(format!(
                "max level {max_level} exceeds the addressable depth {cap} in dimension {dim}"
            )));
        }
        let (bmin, bmax) = set.bounding_box().ok_or(Error::EmptySet)?;
        let resolution = set.resolution();
        let center: Vec<f64> = bmin.iter().zip(&bmax).map(|(a, b)| 0.5 * (a + b)).collect();
        let half = bmin
            .iter()
            .zip(&bmax)
            .map(|(a, b)| 0.5 * (b - a))
            .fold(0.0, f64::max);
        let radius = if half < 0.5 * resolution {
            0.5 * resolution * 2f64.powi(max_level as i32)
        } else {
            half
        };
        let side = 2.0 * radius;
        let leaf_side = side / 2f64.powi(max_level as i32);
        if leaf_side < resolution {
            return Err(Error::ResolutionExceeded {
                leaf_side,
                resolution,
            });
        }
        let lo: Vec<f64> = center.iter().map(|c| c - radius).collect();
        let root = Cube::new(center, radius)?;

        let cells_per_axis = 1u64 << max_level;
        let top = (cells_per_axis - 1) as u32;
        let n = set.len();
        let mut leaf_coords = vec![0u32; n * dim];
        let mut keyed: Vec<(u128, usize)> = Vec::with_capacity(n);
        for (i, p) in set.iter().enumerate() {
            let c = &mut leaf_coords[i * dim..(i + 1) * dim];
            for d in 0..dim {
                let t = (p[d] - lo[d]) / side;
                let v = (t * cells_per_axis as f64).floor();
                c[d] = if v <= 0.0 { 0 } else { (v as u64).min(top as u64) as u32 };
            }
            keyed.push((morton(c, max_level), i));
        }
        keyed.sort_unstable();

        let mut points = Vec::with_capacity(n * dim);
        let mut point_start = Vec::new();
        let mut leaf = Level {
            keys: Vec::new(),
            coords: Vec::new(),
            child_start: Vec::new(),
        };
        for (pos, &(key, i)) in keyed.iter().enumerate() {
            if leaf.keys.last() != Some(&key) {
                leaf.keys.push(key);
                leaf.coords
                    .extend_from_slice(&leaf_coords[i * dim..(i + 1) * dim]);
                point_start.push(pos);
            }
            points.extend_from_slice(set.point(i));
        }
        point_start.push(n);

        let mut levels = vec![leaf];
        for _ in 0..max_level {
            let child = levels.last().expect("at least the leaf level");
            let mut parent = Level {
                keys: Vec::new(),
                coords: Vec::new(),
                child_start: Vec::new(),
            };
            for j in 0..child.len() {
                let pk = child.keys[j] >> dim;
                if parent.keys.last() != Some(&pk) {
                    parent.keys.push(pk);
                    parent
                        .coords
                        .extend(child.coords[j * dim..(j + 1) * dim].iter().map(|c| c >> 1));
                    parent.child_start.push(j);
                }
            }
            parent.child_start.push(child.len());
            levels.push(parent);
        }
        levels.reverse();

        Ok(Self {
            dim,
            root,
            lo,
            side,
            max_level,
            resolution,
            levels,
            points,
            point_start,
        })
    }

    /// Deepest level whose cell side is still at or above the resolution,
    /// for the root that `build` would choose.
    pub fn max_level_for(set: &PointSet) -> Result<u32> {
        let (bmin, bmax) = set.bounding_box().ok_or(Error::EmptySet)?;
        let cap = level_cap(set.dim());
        let side = bmin
            .iter()
            .zip(&bmax)
            .map(|(a, b)| b - a)
            .fold(0.0, f64::max);
        if side < set.resolution() {
            return Ok(cap.min(16));
        }
        let mut m = 0;
        while m < cap && side / 2f64.powi(m as i32 + 1) >= set.resolution() {
            m += 1;
        }
        Ok(m)
    }

    /// Build at the deepest level the resolution allows.
    pub fn build_auto(set: &PointSet) -> Result<Self> {
        Self::build(set, Self::max_level_for(set)?)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn root(&self) -> &Cube {
        &self.root
    }

    pub fn max_level(&self) -> u32 {
        self.max_level
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    /// Euclidean diameter of the root cube.
    pub fn diameter(&self) -> f64 {
        self.root.diameter()
    }

    pub fn num_points(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn cell_side(&self, level: u32) -> f64 {
        self.side / 2f64.powi(level as i32)
    }

    fn check_level(&self, level: u32) -> Result<()> {
        if level > self.max_level {
            return Err(Error::LevelOutOfRange {
                level,
                max_level: self.max_level,
            });
        }
        Ok(())
    }

    /// Number of occupied cells at `level`.
    pub fn occupied_count(&self, level: u32) -> Result<usize> {
        self.check_level(level)?;
        Ok(self.levels[level as usize].len())
    }

    /// Lattice coordinates of the occupied cells at `level`, in Morton order.
    pub fn cells(&self, level: u32) -> Result<impl Iterator<Item = &[u32]> + '_> {
        self.check_level(level)?;
        Ok(self.levels[level as usize].coords.chunks_exact(self.dim))
    }

    /// Whether the cell with the given lattice coordinates is occupied.
    pub fn is_occupied(&self, level: u32, coords: &[u32]) -> Result<bool> {
        self.check_level(level)?;
        let key = morton(coords, level);
        Ok(self.levels[level as usize].keys.binary_search(&key).is_ok())
    }

    pub(crate) fn cell_coords(&self, level: u32, i: usize) -> &[u32] {
        &self.levels[level as usize].coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Range of descendants of `start..end` (cells at `level`) at `target`.
    fn descend(&self, level: u32, mut start: usize, mut end: usize, target: u32) -> (usize, usize) {
        for l in level..target {
            let cs = &self.levels[l as usize].child_start;
            start = cs[start];
            end = cs[end];
        }
        (start, end)
    }

    /// Sample points inside cell `i` of `level`.
    pub(crate) fn cell_points(&self, level: u32, i: usize) -> impl Iterator<Item = &[f64]> + '_ {
        let (a, b) = self.descend(level, i, i + 1, self.max_level);
        let (p, q) = (self.point_start[a], self.point_start[b]);
        self.points[p * self.dim..q * self.dim].chunks_exact(self.dim)
    }

    /// Index range of the children of cell `i` at `level` (which must be
    /// below the leaf level).
    pub(crate) fn children(&self, level: u32, i: usize) -> std::ops::Range<usize> {
        let cs = &self.levels[level as usize].child_start;
        cs[i]..cs[i + 1]
    }

    /// Number of occupied leaf cells below each cell, for every level.
    pub(crate) fn leaf_counts(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = Vec::with_capacity(self.levels.len());
        out.push(vec![1; self.levels[self.max_level as usize].len()]);
        for l in (0..self.max_level).rev() {
            let below = out.last().expect("pushed above");
            let lvl = &self.levels[l as usize];
            let counts = (0..lvl.len())
                .map(|i| below[lvl.child_start[i]..lvl.child_start[i + 1]].iter().sum())
                .collect();
            out.push(counts);
        }
        out.reverse();
        out
    }

    /// One representative sample point per leaf cell (the first in Morton order).
    pub(crate) fn leaf_representatives(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.point_start[..self.point_start.len() - 1]
            .iter()
            .map(move |&p| &self.points[p * self.dim..(p + 1) * self.dim])
    }

    /// Squared min and max distance from `x` to the closed cell box.
    fn cell_distances(&self, level: u32, i: usize, x: &[f64]) -> (f64, f64) {
        let s = self.cell_side(level);
        let c = self.cell_coords(level, i);
        let (mut dmin, mut dmax) = (0.0, 0.0);
        for d in 0..self.dim {
            let a = self.lo[d] + c[d] as f64 * s;
            let b = a + s;
            let v = x[d];
            let below = if v < a {
                a - v
            } else if v > b {
                v - b
            } else {
                0.0
            };
            let far = (v - a).abs().max((b - v).abs());
            dmin += below * below;
            dmax += far * far;
        }
        (dmin, dmax)
    }

    /// Number of occupied cells at `level` that contain at least one sample
    /// point of the closed ball `B(x, radius)`.
    pub fn ball_count(&self, x: &[f64], radius: f64, level: u32) -> Result<usize> {
        self.check_level(level)?;
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(self.ball_count_unchecked(x, radius, level))
    }

    pub(crate) fn ball_count_unchecked(&self, x: &[f64], radius: f64, level: u32) -> usize {
        let r2 = radius * radius;
        let mut count = 0;
        let mut stack = vec![(0u32, 0usize)];
        while let Some((l, i)) = stack.pop() {
            let (dmin, dmax) = self.cell_distances(l, i, x);
            if dmin > r2 {
                continue;
            }
            if dmax <= r2 {
                let (a, b) = self.descend(l, i, i + 1, level);
                count += b - a;
                continue;
            }
            if l == level {
                if self.cell_points(l, i).any(|p| dist_sq(p, x) <= r2) {
                    count += 1;
                }
                continue;
            }
            stack.extend(self.children(l, i).map(|j| (l + 1, j)));
        }
        count
    }

    /// The stored level used for a local count with `2^m` subdivisions of
    /// the cube of side `2 R`: the unique level whose side `s` satisfies
    /// `s <= 2^-m * 2R < 2s` (level 0 when the target exceeds the root).
    pub fn snapped_level(&self, radius: f64, m: u32) -> Result<u32> {
        let target = 2.0 * radius / 2f64.powi(m as i32);
        if target < self.resolution {
            return Err(Error::ScaleBelowResolution {
                side: target,
                resolution: self.resolution,
            });
        }
        let mut k = 0u32;
        while self.cell_side(k) > target {
            k += 1;
            if k > self.max_level {
                return Err(Error::LevelOutOfRange {
                    level: k,
                    max_level: self.max_level,
                });
            }
        }
        Ok(k)
    }

    /// Local dyadic count `N_d(B(x,R) ∩ F, m)` realised on the global grid
    /// at the snapped level.
    pub fn local_dyadic_count(&self, x: &[f64], radius: f64, m: u32) -> Result<usize> {
        self.check_level(m)?;
        let level = self.snapped_level(radius, m)?;
        self.ball_count(x, radius, level)
    }

    /// Check parent closure and the per-level count growth bounds.
    pub fn verify_structure(&self) -> std::result::Result<(), String> {
        for l in 0..self.max_level as usize {
            let (parent, child) = (&self.levels[l], &self.levels[l + 1]);
            for &k in &child.keys {
                if parent.keys.binary_search(&(k >> self.dim)).is_err() {
                    return Err(format!("level {} cell {k:#x} has no parent", l + 1));
                }
            }
            let (a, b) = (parent.len(), child.len());
            if !(a <= b && b <= (a << self.dim)) {
                return Err(format!("count growth violated at level {l}: {a} -> {b}"));
            }
        }
        let p = self.point_start.len() - 1;
        if p != self.levels[self.max_level as usize].len() {
            return Err("leaf point ranges out of sync".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(dim: usize, pts: &[&[f64]], res: f64) -> PointSet {
        PointSet::new(dim, pts.iter().map(|p| p.to_vec()).collect(), res).unwrap()
    }

    #[test]
    fn single_point_occupies_one_cell_per_level() {
        let idx = MultiScaleIndex::build(&set(2, &[&[0.0, 0.0]], 1e-6), 3).unwrap();
        for m in 0..=3 {
            assert_eq!(idx.occupied_count(m).unwrap(), 1);
        }
        assert!(idx.verify_structure().is_ok());
    }

    #[test]
    fn corners_split_into_quadrants() {
        let s = set(2, &[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]], 1e-3);
        let idx = MultiScaleIndex::build(&s, 1).unwrap();
        assert_eq!(idx.occupied_count(0).unwrap(), 1);
        assert_eq!(idx.occupied_count(1).unwrap(), 4);
        assert_eq!(idx.root().center, vec![0.5, 0.5]);
        assert_eq!(idx.root().radius, 0.5);
    }

    #[test]
    fn errors() {
        let empty = PointSet::empty(2, 1e-3).unwrap();
        assert!(matches!(
            MultiScaleIndex::build(&empty, 2),
            Err(Error::EmptySet)
        ));
        let s = set(1, &[&[0.0], &[1.0]], 0.1);
        assert!(matches!(
            MultiScaleIndex::build(&s, 4),
            Err(Error::ResolutionExceeded { .. })
        ));
        let idx = MultiScaleIndex::build(&s, 3).unwrap();
        assert!(matches!(
            idx.occupied_count(4),
            Err(Error::LevelOutOfRange { .. })
        ));
        assert!(matches!(
            idx.local_dyadic_count(&[0.5], 0.01, 0),
            Err(Error::ScaleBelowResolution { .. })
        ));
        assert_eq!(MultiScaleIndex::max_level_for(&s).unwrap(), 3);
    }

    #[test]
    fn segment_counts_match_bucketing() {
        let pts: Vec<Vec<f64>> = (0..=1000).map(|i| vec![i as f64 / 1000.0, 0.0]).collect();
        let s = PointSet::new(2, pts, 1e-3).unwrap();
        let idx = MultiScaleIndex::build(&s, 8).unwrap();
        for m in 0..=8 {
            let inv = 2f64.powi(m as i32);
            let c = idx.occupied_count(m).unwrap() as f64;
            assert!(c >= inv && c <= inv + 2.0, "level {m}: {c}");
        }
    }

    #[test]
    fn local_count_on_segment() {
        let pts: Vec<Vec<f64>> = (0..=1000).map(|i| vec![i as f64 / 1000.0, 0.0]).collect();
        let s = PointSet::new(2, pts, 1e-3).unwrap();
        let idx = MultiScaleIndex::build(&s, 8).unwrap();
        let c = idx.local_dyadic_count(&[0.5, 0.0], 0.25, 4).unwrap();
        assert!((7..=27).contains(&c), "{c}");
        // x a sample point, R = root radius, m = 0
        let c0 = idx.local_dyadic_count(&[0.0, 0.0], 0.5, 0).unwrap();
        assert!((1..=4).contains(&c0));
        // ball far from the samples but inside the root
        let pts = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let idx = MultiScaleIndex::build(&PointSet::new(2, pts, 1e-3).unwrap(), 6).unwrap();
        assert_eq!(idx.local_dyadic_count(&[0.5, 0.5], 0.2, 2).unwrap(), 0);
    }

    #[test]
    fn snapping_rule() {
        let pts: Vec<Vec<f64>> = (0..=64).map(|i| vec![i as f64 / 64.0]).collect();
        let idx = MultiScaleIndex::build(&PointSet::new(1, pts, 1e-3).unwrap(), 8).unwrap();
        for (r, m) in [(0.25, 4u32), (0.3, 3), (0.1, 2), (0.5, 0)] {
            let k = idx.snapped_level(r, m).unwrap();
            let target = 2.0 * r / 2f64.powi(m as i32);
            let s = idx.cell_side(k);
            assert!(s <= target && (k == 0 || target < 2.0 * s), "{r} {m} -> {k}");
        }
    }

    #[test]
    fn deterministic() {
        let pts: Vec<Vec<f64>> = (0..500)
            .map(|i| {
                let t = i as f64 * 0.37;
                vec![t.sin(), (2.0 * t).cos()]
            })
            .collect();
        let s = PointSet::new(2, pts, 1e-3).unwrap();
        assert_eq!(
            MultiScaleIndex::build(&s, 9).unwrap(),
            MultiScaleIndex::build(&s, 9).unwrap()
        );
    }
}
