//! Deterministic samplers for the example families and their closed-form
//! dimension values.
//!
//! Spirals are sampled from `x = 1` with an adaptive parameter step taken
//! from the arc-length element, so consecutive sample points are never more
//! than half the target resolution apart. The spiral accumulates at the
//! origin, which is added to every spiral sample as the closure point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PointSet;

/// Refuse to generate samples larger than this.
pub const MAX_SAMPLE_POINTS: usize = 50_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum Family {
    /// `{x^-a e^{ix} : 1 <= x <= x_max}`
    PolySpiral { a: f64, x_max: f64 },
    /// `{e^{-cx} e^{ix} : 1 <= x <= x_max}`
    LogSpiral { c: f64, x_max: f64 },
    /// Endpoints of the level-`depth` intervals of the central Cantor set
    /// with contraction `ratio`.
    Cantor { ratio: f64, depth: u32 },
    /// `{0} ∪ {m^-p : 1 <= m <= m_max}`
    SequenceSet { p: f64, m_max: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FamilySpec {
    pub family: Family,
    pub target_resolution: f64,
}

impl FamilySpec {
    pub fn new(family: Family, target_resolution: f64) -> Self {
        Self {
            family,
            target_resolution,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let res = self.target_resolution;
        if !(res > 0.0 && res.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "target resolution must be positive, got {res}"
            )));
        }
        match self.family {
            Family::PolySpiral { a, x_max } => {
                positive("a", a)?;
                if !(x_max > 1.0 && x_max.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "x_max must exceed 1, got {x_max}"
                    )));
                }
            }
            Family::LogSpiral { c, x_max } => {
                positive("c", c)?;
                if !(x_max > 1.0 && x_max.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "x_max must exceed 1, got {x_max}"
                    )));
                }
            }
            Family::Cantor { ratio, depth } => {
                if !(ratio > 0.0 && ratio <= 0.5) {
                    return Err(Error::InvalidParameter(format!(
                        "Cantor ratio must lie in (0, 1/2], got {ratio}"
                    )));
                }
                if depth == 0 || depth > 24 {
                    return Err(Error::InvalidParameter(format!(
                        "Cantor depth must lie in 1..=24, got {depth}"
                    )));
                }
            }
            Family::SequenceSet { p, m_max } => {
                positive("p", p)?;
                if m_max == 0 || m_max as usize > MAX_SAMPLE_POINTS {
                    return Err(Error::InvalidParameter(format!(
                        "m_max must lie in 1..={MAX_SAMPLE_POINTS}, got {m_max}"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

/// A planar curve `x ↦ φ(x) e^{ix}` with decreasing modulus `φ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpiralCurve {
    Poly(f64),
    Log(f64),
}

impl SpiralCurve {
    pub fn modulus(&self, x: f64) -> f64 {
        match *self {
            SpiralCurve::Poly(a) => x.powf(-a),
            SpiralCurve::Log(c) => (-c * x).exp(),
        }
    }

    /// Arc-length element `sqrt(φ'(x)^2 + φ(x)^2)`; decreasing in `x`.
    pub fn speed(&self, x: f64) -> f64 {
        match *self {
            SpiralCurve::Poly(a) => {
                let m = x.powf(-a);
                m * (a * a / (x * x) + 1.0).sqrt()
            }
            SpiralCurve::Log(c) => (-c * x).exp() * (c * c + 1.0).sqrt(),
        }
    }

    pub fn point(&self, x: f64) -> [f64; 2] {
        let m = self.modulus(x);
        [m * x.cos(), m * x.sin()]
    }

    /// Radial gap between consecutive turns at parameter `x`.
    pub fn turn_gap(&self, x: f64) -> f64 {
        self.modulus(x) - self.modulus(x + std::f64::consts::TAU)
    }
}

/// Sample a family member.
pub fn sample_family(spec: &FamilySpec) -> Result<PointSet> {
    spec.validate()?;
    let res = spec.target_resolution;
    match spec.family {
        Family::PolySpiral { a, x_max } => sample_spiral(SpiralCurve::Poly(a), x_max, res),
        Family::LogSpiral { c, x_max } => sample_spiral(SpiralCurve::Log(c), x_max, res),
        Family::Cantor { ratio, depth } => {
            let pts = cantor_endpoints(ratio, depth);
            PointSet::from_flat(1, pts, res)
        }
        Family::SequenceSet { p, m_max } => {
            let mut pts = Vec::with_capacity(m_max as usize + 1);
            pts.push(0.0);
            pts.extend((1..=m_max).map(|m| (m as f64).powf(-p)));
            PointSet::from_flat(1, pts, res)
        }
    }
}

/// Sample a spiral on `[1, x_max]`.
///
/// The part of the spiral beyond `x_max` lies in the disk of radius
/// `φ(x_max)`. If that disk is no wider than the resolution, the origin
/// alone represents it. Otherwise, if the turns there are already closer
/// than half the resolution, the disk is indistinguishable from a filled
/// disk at this resolution and is filled with a lattice of spacing
/// `res / 2`. Anything else is rejected.
pub fn sample_spiral(curve: SpiralCurve, x_max: f64, res: f64) -> Result<PointSet> {
    let tail = curve.modulus(x_max);
    let fill = if tail <= res {
        false
    } else if curve.turn_gap(x_max) <= 0.5 * res {
        true
    } else {
        return Err(Error::TruncationTooCoarse(format!(
            "tail modulus {tail:e} at x_max = {x_max} exceeds the resolution {res:e}"
        )));
    };

    let step = 0.5 * res;
    let mut coords = Vec::new();
    let mut params = Vec::new();
    let mut x = 1.0;
    loop {
        let p = curve.point(x);
        coords.extend_from_slice(&p);
        params.push(Some(x));
        if x >= x_max {
            break;
        }
        x = (x + step / curve.speed(x)).min(x_max);
        if params.len() > MAX_SAMPLE_POINTS {
            return Err(Error::InvalidParameter(format!(
                "sample would exceed {MAX_SAMPLE_POINTS} points"
            )));
        }
    }
    coords.extend_from_slice(&[0.0, 0.0]);
    params.push(None);
    if fill {
        for q in disk_lattice(tail, step) {
            coords.extend_from_slice(&q);
            params.push(None);
        }
    }
    PointSet::from_flat(2, coords, res)?.with_params(params)
}

/// Lattice points of spacing `h` in the closed disk of radius `r` about 0,
/// excluding the origin.
pub(crate) fn disk_lattice(r: f64, h: f64) -> Vec<[f64; 2]> {
    let k = (r / h).floor() as i64;
    let mut out = Vec::new();
    for i in -k..=k {
        for j in -k..=k {
            if i == 0 && j == 0 {
                continue;
            }
            let q = [i as f64 * h, j as f64 * h];
            if q[0] * q[0] + q[1] * q[1] <= r * r {
                out.push(q);
            }
        }
    }
    out
}

/// All `2^(depth+1)` interval endpoints of the level-`depth` construction,
/// in increasing order.
pub fn cantor_endpoints(ratio: f64, depth: u32) -> Vec<f64> {
    let mut lefts = vec![0.0f64];
    let mut len = 1.0f64;
    for _ in 0..depth {
        let next_len = len * ratio;
        let shift = len - next_len;
        lefts = lefts
            .iter()
            .flat_map(|&l| [l, l + shift])
            .collect();
        len = next_len;
    }
    lefts.iter().flat_map(|&l| [l, l + len]).collect()
}

/// Box-counting dimension of `S_a`: `max{2/(1+a), 1}`.
pub fn oracle_spiral_box_dim(a: f64) -> Result<f64> {
    positive("a", a)?;
    Ok((2.0 / (1.0 + a)).max(1.0))
}

/// Assouad spectrum of `S_a` (already nondecreasing, so equal to the
/// regularized spectrum).
pub fn oracle_spiral_spectrum(a: f64, theta: f64) -> Result<f64> {
    positive("a", a)?;
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "theta must lie in (0, 1), got {theta}"
        )));
    }
    Ok(if a <= 1.0 {
        (2.0 / ((1.0 + a) * (1.0 - theta))).min(2.0)
    } else {
        (1.0 + theta / (a * (1.0 - theta))).min(2.0)
    })
}

/// Phase transition `ρ(S_a) = a / (1 + a)`.
pub fn oracle_spiral_rho(a: f64) -> Result<f64> {
    positive("a", a)?;
    Ok(a / (1.0 + a))
}

/// Quasi-Assouad (and Assouad) dimension of every `S_a`.
pub fn oracle_spiral_quasi_assouad(a: f64) -> Result<f64> {
    positive("a", a)?;
    Ok(2.0)
}

/// `(Hausdorff, upper box, Assouad)` dimensions of `{0} ∪ {m^-p}`.
pub fn oracle_sequence_dims(p: f64) -> Result<(f64, f64, f64)> {
    positive("p", p)?;
    Ok((0.0, 1.0 / (1.0 + p), 1.0))
}

/// Similarity dimension `log 2 / log(1/ratio)` of the central Cantor set;
/// its box, Assouad and every spectrum value coincide with it.
pub fn oracle_cantor_dim(ratio: f64) -> Result<f64> {
    if !(ratio > 0.0 && ratio < 0.5 + f64::EPSILON) {
        return Err(Error::InvalidParameter(format!(
            "Cantor ratio must lie in (0, 1/2], got {ratio}"
        )));
    }
    Ok(2f64.ln() / (1.0 / ratio).ln())
}
