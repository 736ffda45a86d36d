use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite sample of a subset of `R^n` with a declared sampling resolution.
///
/// The resolution is a promise made by whoever produced the sample: every
/// point of the intended set lies within `resolution / 2` of some sample
/// point. Coordinates are stored flat, `dim` values per point.
///
/// Samples drawn from a parametrised curve may carry the generating
/// parameter of each point (`None` for points that are not on the curve,
/// such as a closure point or core filling).
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
    resolution: f64,
    params: Option<Vec<Option<f64>>>,
}

impl PointSet {
    pub fn new(dim: usize, points: Vec<Vec<f64>>, resolution: f64) -> Result<Self> {
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::Parse(format!(
                    "point {i} has {} coordinates, expected {dim}",
                    p.len()
                )));
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(dim, coords, resolution)
    }

    pub fn from_flat(dim: usize, coords: Vec<f64>, resolution: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "resolution must be positive and finite, got {resolution}"
            )));
        }
        if coords.len() % dim != 0 {
            return Err(Error::Parse(format!(
                "{} coordinates do not split into points of dimension {dim}",
                coords.len()
            )));
        }
        if let Some(bad) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::Parse(format!(
                "non-finite coordinate in point {}",
                bad / dim
            )));
        }
        Ok(Self {
            dim,
            coords,
            resolution,
            params: None,
        })
    }

    /// An explicitly empty set.
    pub fn empty(dim: usize, resolution: f64) -> Result<Self> {
        Self::from_flat(dim, Vec::new(), resolution)
    }

    /// Attach per-point curve parameters.
    pub fn with_params(mut self, params: Vec<Option<f64>>) -> Result<Self> {
        if params.len() != self.len() {
            return Err(Error::InvalidParameter(format!(
                "{} parameters for {} points",
                params.len(),
                self.len()
            )));
        }
        self.params = Some(params);
        Ok(self)
    }

    pub fn with_resolution(mut self, resolution: f64) -> Result<Self> {
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "resolution must be positive and finite, got {resolution}"
            )));
        }
        self.resolution = resolution;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn params(&self) -> Option<&[Option<f64>]> {
        self.params.as_deref()
    }

    /// Union of two samples. The declared resolution is the coarser of the two.
    pub fn union(&self, other: &PointSet) -> Result<PointSet> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&other.coords);
        let mut out = PointSet::from_flat(
            self.dim,
            coords,
            self.resolution.max(other.resolution),
        )?;
        if self.params.is_some() || other.params.is_some() {
            let mut params = self
                .params
                .clone()
                .unwrap_or_else(|| vec![None; self.len()]);
            params.extend(
                other
                    .params
                    .clone()
                    .unwrap_or_else(|| vec![None; other.len()]),
            );
            out.params = Some(params);
        }
        Ok(out)
    }

    /// Axis-aligned bounding box as (min, max) per coordinate.
    pub fn bounding_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let mut it = self.iter();
        let first = it.next()?;
        let mut lo = first.to_vec();
        let mut hi = first.to_vec();
        for p in it {
            for d in 0..self.dim {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        Some((lo, hi))
    }
}

/// Axes-parallel closed cube, given by its center and half side length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Cube {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "cube radius must be positive, got {radius}"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn side(&self) -> f64 {
        2.0 * self.radius
    }

    pub fn diameter(&self) -> f64 {
        self.side() * (self.center.len() as f64).sqrt()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(&self.center)
            .all(|(x, c)| (x - c).abs() <= self.radius)
    }
}

/// Closed Euclidean ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        dist_sq(p, &self.center) <= self.radius * self.radius
    }
}

pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
