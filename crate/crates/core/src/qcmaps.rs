//! Explicit planar quasiconformal maps and their dilatation bounds.
//!
//! A map is a chain of primitives applied in order. Conformal primitives
//! (similarities and Möbius maps) contribute a factor 1 to the dilatation
//! bound, radial power maps contribute `max(e, 1/e)`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PointSet;

/// Minimum distance of data from a Möbius pole, in units of the resolution.
pub const POLE_CLEARANCE: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Primitive {
    /// `z ↦ |z|^{e-1} z`. The radial stretch of dilatation `K` has `e = 1/K`.
    RadialPower { exponent: f64 },
    /// `z ↦ s z + t`
    Similarity { scale: Complex64, offset: Complex64 },
    /// `z ↦ (a z + b) / (c z + d)`
    Mobius {
        a: Complex64,
        b: Complex64,
        c: Complex64,
        d: Complex64,
    },
}

impl Primitive {
    pub fn dilatation(&self) -> f64 {
        match *self {
            Primitive::RadialPower { exponent } => exponent.max(1.0 / exponent),
            _ => 1.0,
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        match *self {
            Primitive::RadialPower { exponent } => {
                let m = z.norm();
                if m == 0.0 {
                    z
                } else {
                    z * m.powf(exponent - 1.0)
                }
            }
            Primitive::Similarity { scale, offset } => scale * z + offset,
            Primitive::Mobius { a, b, c, d } => (a * z + b) / (c * z + d),
        }
    }

    pub fn inverse(&self) -> Primitive {
        match *self {
            Primitive::RadialPower { exponent } => Primitive::RadialPower {
                exponent: 1.0 / exponent,
            },
            Primitive::Similarity { scale, offset } => Primitive::Similarity {
                scale: 1.0 / scale,
                offset: -offset / scale,
            },
            Primitive::Mobius { a, b, c, d } => Primitive::Mobius {
                a: d,
                b: -b,
                c: -c,
                d: a,
            },
        }
    }

    fn pole(&self) -> Option<Complex64> {
        match *self {
            Primitive::Mobius { c, d, .. } if c != Complex64::new(0.0, 0.0) => Some(-d / c),
            _ => None,
        }
    }

    /// Resolution of the image of a sample of resolution `res`: the true set
    /// lies within `res / 2` of the sample, so the bound is taken over that
    /// neighbourhood of the points.
    fn image_resolution(&self, points: &[Complex64], res: f64) -> f64 {
        let h = 0.5 * res;
        match *self {
            Primitive::Similarity { scale, .. } => scale.norm() * res,
            Primitive::RadialPower { exponent: e } => {
                let (lo, hi) = points.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), z| {
                    let m = z.norm();
                    (lo.min(m), hi.max(m))
                });
                if points.is_empty() {
                    return res;
                }
                let (lo, hi) = ((lo - h).max(0.0), hi + h);
                // the differential has singular values |z|^{e-1} and e |z|^{e-1}
                let lip = |m: f64| e.max(1.0) * m.powf(e - 1.0);
                if e >= 1.0 {
                    lip(hi) * res
                } else if lo >= res {
                    lip(lo) * res
                } else {
                    // near the fixed point only the Hölder bound is finite
                    (lip(res) * res).max(2.0 * res.powf(e))
                }
            }
            Primitive::Mobius { a, b, c, d } => {
                let det = (a * d - b * c).norm();
                let worst = points
                    .iter()
                    .map(|z| ((c * z + d).norm() - c.norm() * h).max(f64::MIN_POSITIVE))
                    .fold(f64::INFINITY, f64::min);
                if points.is_empty() {
                    return res;
                }
                det / (worst * worst) * res
            }
        }
    }
}

impl fmt::Display for Primitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = |z: Complex64| format!("{}{:+}i", z.re, z.im);
        match *self {
            Primitive::RadialPower { exponent } if exponent <= 1.0 => {
                write!(f, "radial:K={}", 1.0 / exponent)
            }
            Primitive::RadialPower { exponent } => write!(f, "power:e={exponent}"),
            Primitive::Similarity { scale, offset } => {
                write!(f, "similarity:s={},t={}", c(scale), c(offset))
            }
            Primitive::Mobius { a, b, c: cc, d } => write!(
                f,
                "mobius:a={},b={},c={},d={}",
                c(a),
                c(b),
                c(cc),
                c(d)
            ),
        }
    }
}

/// A chain of primitives applied left to right.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct PlanarMap {
    ops: Vec<Primitive>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BiHolderExponents {
    pub alpha: f64,
    pub beta: f64,
    pub constant_note: String,
}

impl PlanarMap {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn radial_stretch(k: f64) -> Result<Self> {
        if !(k >= 1.0 && k.is_finite()) {
            return Err(Error::InvalidDilatation(k));
        }
        Ok(Self {
            ops: vec![Primitive::RadialPower { exponent: 1.0 / k }],
        })
    }

    pub fn similarity(scale: Complex64, offset: Complex64) -> Result<Self> {
        if scale.norm() == 0.0 || !scale.is_finite() || !offset.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "similarity needs a finite nonzero scale, got {scale}"
            )));
        }
        Ok(Self {
            ops: vec![Primitive::Similarity { scale, offset }],
        })
    }

    pub fn mobius(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self> {
        if [a, b, c, d].iter().any(|z| !z.is_finite()) || (a * d - b * c).norm() == 0.0 {
            return Err(Error::InvalidParameter(
                "mobius coefficients must be finite with ad - bc != 0".into(),
            ));
        }
        Ok(Self {
            ops: vec![Primitive::Mobius { a, b, c, d }],
        })
    }

    pub fn ops(&self) -> &[Primitive] {
        &self.ops
    }

    /// Product of the primitive dilatations.
    pub fn dilatation_bound(&self) -> f64 {
        self.ops.iter().map(Primitive::dilatation).product()
    }

    /// Apply `self`, then `next`.
    pub fn then(&self, next: &PlanarMap) -> PlanarMap {
        let mut ops = self.ops.clone();
        ops.extend_from_slice(&next.ops);
        PlanarMap { ops }
    }

    pub fn inverse(&self) -> PlanarMap {
        PlanarMap {
            ops: self.ops.iter().rev().map(Primitive::inverse).collect(),
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.ops.iter().fold(z, |w, op| op.eval(w))
    }

    pub fn bi_holder_exponents(&self) -> BiHolderExponents {
        let k = self.dilatation_bound();
        BiHolderExponents {
            alpha: 1.0 / k,
            beta: k,
            constant_note: "local bound; the constant depends on the map and the compact set".into(),
        }
    }

    /// Map every point and propagate the resolution primitive by primitive.
    pub fn apply(&self, set: &PointSet) -> Result<PointSet> {
        if set.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: set.dim(),
            });
        }
        let mut pts: Vec<Complex64> = set.iter().map(|p| Complex64::new(p[0], p[1])).collect();
        let mut res = set.resolution();
        for op in &self.ops {
            if let Some(pole) = op.pole() {
                let required = POLE_CLEARANCE * res;
                for z in &pts {
                    let distance = (z - pole).norm();
                    if distance < required {
                        return Err(Error::PoleProximity {
                            point: [z.re, z.im],
                            distance,
                            required,
                        });
                    }
                }
            }
            let next_res = op.image_resolution(&pts, res);
            for z in &mut pts {
                *z = op.eval(*z);
            }
            res = next_res;
        }
        let coords = pts.iter().flat_map(|z| [z.re, z.im]).collect();
        let out = PointSet::from_flat(2, coords, res)?;
        match set.params() {
            Some(p) => out.with_params(p.to_vec()),
            None => Ok(out),
        }
    }
}

/// `outer ∘ inner`: apply `inner` first.
pub fn compose(outer: &PlanarMap, inner: &PlanarMap) -> PlanarMap {
    inner.then(outer)
}

impl fmt::Display for PlanarMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ops.is_empty() {
            return write!(f, "identity");
        }
        let parts: Vec<String> = self.ops.iter().map(ToString::to_string).collect();
        write!(f, "{}", parts.join("|"))
    }
}

fn parse_complex(key: &str, v: &str) -> Result<Complex64> {
    Complex64::from_str(v.trim())
        .map_err(|_| Error::Parse(format!("cannot read {key}={v} as a complex number")))
}

fn parse_primitive(s: &str) -> Result<PlanarMap> {
    let s = s.trim();
    if s == "identity" {
        return Ok(PlanarMap::identity());
    }
    let (kind, args) = s
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("map term {s:?} lacks a ':'")))?;
    let mut kv = std::collections::BTreeMap::new();
    for a in args.split(',') {
        let (k, v) = a
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("map argument {a:?} lacks a '='")))?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    let mut take = |key: &str| {
        kv.remove(key)
            .ok_or_else(|| Error::Parse(format!("{kind} needs {key}=")))
    };
    let map = match kind.trim() {
        "radial" => {
            let v = take("K")?;
            let k: f64 = v
                .parse()
                .map_err(|_| Error::Parse(format!("cannot read K={v}")))?;
            PlanarMap::radial_stretch(k)?
        }
        "power" => {
            let v = take("e")?;
            let e: f64 = v
                .parse()
                .map_err(|_| Error::Parse(format!("cannot read e={v}")))?;
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::InvalidParameter(format!("power exponent must be positive, got {e}")));
            }
            PlanarMap {
                ops: vec![Primitive::RadialPower { exponent: e }],
            }
        }
        "similarity" => {
            let s = parse_complex("s", &take("s")?)?;
            let t = parse_complex("t", &take("t")?)?;
            PlanarMap::similarity(s, t)?
        }
        "mobius" => {
            let a = parse_complex("a", &take("a")?)?;
            let b = parse_complex("b", &take("b")?)?;
            let c = parse_complex("c", &take("c")?)?;
            let d = parse_complex("d", &take("d")?)?;
            PlanarMap::mobius(a, b, c, d)?
        }
        other => return Err(Error::Parse(format!("unknown map kind {other:?}"))),
    };
    if let Some(extra) = kv.keys().next() {
        return Err(Error::Parse(format!("unexpected argument {extra:?} for {kind}")));
    }
    Ok(map)
}

impl FromStr for PlanarMap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.split('|')
            .try_fold(PlanarMap::identity(), |acc, term| Ok(acc.then(&parse_primitive(term)?)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{sample_family, Family, FamilySpec};
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Pointwise dilatation `(|f_z| + |f_zbar|) / (|f_z| - |f_zbar|)` by
    /// central differences.
    fn measured_dilatation(f: &PlanarMap, z: Complex64) -> f64 {
        let h = 1e-6 * z.norm().max(1e-3);
        let fx = (f.eval(z + h) - f.eval(z - h)) / (2.0 * h);
        let fy = (f.eval(z + c(0.0, h)) - f.eval(z - c(0.0, h))) / (2.0 * h);
        let fz = 0.5 * (fx - c(0.0, 1.0) * fy);
        let fzb = 0.5 * (fx + c(0.0, 1.0) * fy);
        (fz.norm() + fzb.norm()) / (fz.norm() - fzb.norm())
    }

    #[test]
    fn radial_stretch_examples() {
        let id = PlanarMap::radial_stretch(1.0).unwrap();
        assert_eq!(id.eval(c(0.3, -0.7)), c(0.3, -0.7));
        let f = PlanarMap::radial_stretch(2.0).unwrap();
        let z = Complex64::from_polar(1.0, 1.0);
        assert_abs_diff_eq!((f.eval(z) - z).norm(), 0.0, epsilon = 1e-15);
        let w = f.eval(Complex64::from_polar(1.0 / 16.0, 4.0));
        let want = Complex64::from_polar(0.25, 4.0);
        assert_abs_diff_eq!((w - want).norm(), 0.0, epsilon = 1e-15);
        assert_eq!(f.eval(c(0.0, 0.0)), c(0.0, 0.0));
        assert!(matches!(
            PlanarMap::radial_stretch(0.5),
            Err(Error::InvalidDilatation(_))
        ));
    }

    #[test]
    fn modulus_and_argument() {
        for k in [1.5, 2.0, 7.0] {
            let f = PlanarMap::radial_stretch(k).unwrap();
            for (m, t) in [(1e-6, 0.3), (0.5, -2.0), (3.0, 3.0)] {
                let w = f.eval(Complex64::from_polar(m, t));
                assert!((w.norm() / m.powf(1.0 / k) - 1.0).abs() < 1e-14);
                assert!((w.arg() - t).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn bookkeeping() {
        let r2 = PlanarMap::radial_stretch(2.0).unwrap();
        let r3 = PlanarMap::radial_stretch(3.0).unwrap();
        let m = PlanarMap::mobius(c(1.0, 0.0), c(0.5, 0.0), c(0.2, 0.1), c(1.0, 0.0)).unwrap();
        let s = PlanarMap::similarity(c(2.0, 1.0), c(0.0, 1.0)).unwrap();
        assert_eq!(compose(&PlanarMap::identity(), &r2).dilatation_bound(), 2.0);
        assert_eq!(compose(&m, &r2).dilatation_bound(), 2.0);
        let six = compose(&r2, &r3);
        assert!((six.dilatation_bound() - 6.0).abs() < 1e-12);
        let padded = s.then(&r2).then(&m).then(&r3).then(&s);
        assert_eq!(padded.dilatation_bound(), six.dilatation_bound());
        let e = six.bi_holder_exponents();
        assert!((e.alpha - 1.0 / 6.0).abs() < 1e-12 && (e.beta - 6.0).abs() < 1e-12);
        let e = PlanarMap::identity().bi_holder_exponents();
        assert_eq!((e.alpha, e.beta), (1.0, 1.0));
        assert_eq!(
            (r2.bi_holder_exponents().alpha, r2.bi_holder_exponents().beta),
            (0.5, 2.0)
        );
    }

    #[test]
    fn measured_distortion_within_bound() {
        let six = compose(
            &PlanarMap::radial_stretch(2.0).unwrap(),
            &PlanarMap::radial_stretch(3.0).unwrap(),
        );
        let mut worst: f64 = 0.0;
        for i in 1..20 {
            for j in 0..12 {
                let z = Complex64::from_polar(i as f64 * 0.05, j as f64 * 0.5);
                worst = worst.max(measured_dilatation(&six, z));
            }
        }
        assert!(worst <= 6.0 + 1e-4, "{worst}");
        assert!(worst >= 6.0 - 1e-3, "{worst}");
        let m = PlanarMap::mobius(c(1.0, 0.0), c(0.5, 0.0), c(0.2, 0.1), c(1.0, 0.0)).unwrap();
        assert!((measured_dilatation(&m, c(0.3, 0.2)) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn inverses_round_trip() {
        let f: PlanarMap = "radial:K=2.5|similarity:s=1+2i,t=0.5-1i|mobius:a=1,b=0.5,c=0.2+0.1i,d=1"
            .parse()
            .unwrap();
        let g = f.inverse();
        for z in [c(0.1, 0.2), c(-0.7, 0.01), c(1e-4, -3e-4)] {
            assert!((g.eval(f.eval(z)) - z).norm() < 1e-10);
        }
        let r = PlanarMap::radial_stretch(3.0).unwrap();
        assert_eq!(
            r.inverse().ops(),
            &[Primitive::RadialPower { exponent: 3.0 }]
        );
    }

    #[test]
    fn parse_and_print() {
        let f: PlanarMap = "radial:K=2.0|similarity:s=1+2i,t=0".parse().unwrap();
        assert_eq!(f.ops().len(), 2);
        assert_eq!(f.dilatation_bound(), 2.0);
        let g: PlanarMap = f.to_string().parse().unwrap();
        assert_eq!(f, g);
        assert!("radial:K=0.5".parse::<PlanarMap>().is_err());
        assert!("radial:k=2".parse::<PlanarMap>().is_err());
        assert!("shear:K=2".parse::<PlanarMap>().is_err());
        assert!("mobius:a=1,b=1,c=1,d=1".parse::<PlanarMap>().is_err());
        assert!("similarity:s=0,t=0".parse::<PlanarMap>().is_err());
        assert_eq!("identity".parse::<PlanarMap>().unwrap(), PlanarMap::identity());
    }

    #[test]
    fn apply_examples() {
        let sq = PointSet::new(
            2,
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
            1e-3,
        )
        .unwrap();
        assert_eq!(PlanarMap::identity().apply(&sq).unwrap(), sq);
        let s = PlanarMap::similarity(c(2.0, 0.0), c(0.0, 0.0)).unwrap();
        let out = s.apply(&sq).unwrap();
        assert_eq!(out.coords(), &[0.0, 0.0, 2.0, 0.0, 0.0, 2.0, 2.0, 2.0]);
        assert_eq!(out.resolution(), 2e-3);

        let pole = PlanarMap::mobius(c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)).unwrap();
        assert!(matches!(pole.apply(&sq), Err(Error::PoleProximity { .. })));
        let line = PointSet::new(1, vec![vec![0.0]], 1e-3).unwrap();
        assert!(matches!(
            s.apply(&line),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn spiral_transport() {
        for (a, k) in [(2.0, 2.0), (3.0, 1.5), (1.0, 4.0)] {
            let spec = FamilySpec::new(Family::PolySpiral { a, x_max: 1e3 }, 1e-3);
            let set = sample_family(&spec).unwrap();
            let img = PlanarMap::radial_stretch(k).unwrap().apply(&set).unwrap();
            let mut worst: f64 = 0.0;
            for (p, x) in img.iter().zip(img.params().unwrap()) {
                if let Some(x) = x {
                    let want = Complex64::from_polar(x.powf(-a / k), *x);
                    worst = worst.max((c(p[0], p[1]) - want).norm());
                }
            }
            assert!(worst < 1e-12, "a={a} K={k}: {worst}");
        }
    }

    #[test]
    fn resolution_grows_near_the_fixed_point() {
        let set = PointSet::new(2, vec![vec![0.0, 0.0], vec![0.5, 0.0]], 1e-4).unwrap();
        let out = PlanarMap::radial_stretch(2.0).unwrap().apply(&set).unwrap();
        assert!(out.resolution() >= 2.0 * 1e-2 - 1e-15);
        let far = PointSet::new(2, vec![vec![0.5, 0.0], vec![0.8, 0.0]], 1e-4).unwrap();
        let out = PlanarMap::radial_stretch(2.0).unwrap().apply(&far).unwrap();
        assert!(out.resolution() < 2e-4);
    }
}
