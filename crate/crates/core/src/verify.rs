//! End-to-end check of the spectrum distortion bounds on a mapped spiral.
//!
//! The source spiral is sampled so that both the sample and its image meet
//! the target resolution. A plain image of a uniform sample would not: a
//! radial stretch expands distances near the origin without bound. The
//! curve is followed until the turns of both the spiral and its image are
//! closer than half the resolution. The remaining core, a small disk about
//! the origin, is indistinguishable from a filled disk at that resolution
//! on both sides, so it is filled with lattices of spacing `res / 2`: one in
//! the source disk and one covering the image of the disk, pulled back
//! through the inverse map.

use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bounds::{compare_bounds, t_of_theta, BoundReport, Comparison, ExponentContext};
use crate::error::{Error, Result};
use crate::estimators::{estimate_spectrum, theta_range, ScaleWindow, SpectrumEstimate};
use crate::families::{disk_lattice, oracle_spiral_spectrum, SpiralCurve, MAX_SAMPLE_POINTS};
use crate::geometry::{MultiScaleIndex, PointSet};
use crate::qcmaps::{PlanarMap, Primitive};

/// Default slack between estimates and bounds.
pub const DEFAULT_SLACK: f64 = 0.2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Scenario {
    /// Exponent of the source spiral.
    pub a: f64,
    /// Map expression in the CLI mini-language.
    pub map: String,
    /// Check a single `θ(t)`; the whole grid when absent.
    pub t: Option<f64>,
    pub slack: f64,
    pub resolution: f64,
    /// Largest curve parameter the sampler may reach before the core.
    pub x_limit: f64,
    pub center_budget: usize,
    pub image_theta: Vec<f64>,
    pub source_theta: Vec<f64>,
}

impl Scenario {
    pub fn new(a: f64, map: &str) -> Self {
        Self {
            a,
            map: map.to_string(),
            t: None,
            slack: DEFAULT_SLACK,
            resolution: 1e-3,
            x_limit: 1e7,
            center_budget: crate::estimators::DEFAULT_CENTER_BUDGET,
            image_theta: theta_range(0.05, 0.9, 0.05),
            source_theta: theta_range(0.025, 0.95, 0.025),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OracleVerdict {
    pub theta: f64,
    pub oracle: f64,
    pub estimate: Option<f64>,
    pub pass: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Timings {
    pub sample_ms: u128,
    pub source_estimate_ms: u128,
    pub image_estimate_ms: u128,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VerifyReport {
    pub scenario: Scenario,
    pub dilatation: f64,
    pub source_points: usize,
    pub image_points: usize,
    /// Curve parameter where the filled core begins.
    pub core_parameter: f64,
    pub estimated_source_spectrum: SpectrumEstimate,
    pub estimated_image_spectrum: SpectrumEstimate,
    pub bound_curves: BoundReport,
    /// Exponent of the image spiral when the map is a radial stretch up to
    /// similarities.
    pub image_exponent: Option<f64>,
    pub oracle_verdicts: Vec<OracleVerdict>,
    pub comparisons: Vec<Comparison>,
    pub pass: bool,
    pub timings: Timings,
}

/// Spiral exponent of the image when the map is a radial power composed
/// with similarities fixing the origin.
fn image_exponent(a: f64, map: &PlanarMap) -> Option<f64> {
    let mut b = a;
    for op in map.ops() {
        match op {
            Primitive::RadialPower { exponent } => b *= exponent,
            Primitive::Similarity { offset, .. } if offset.norm() == 0.0 => {}
            _ => return None,
        }
    }
    Some(b)
}

fn at(curve: SpiralCurve, x: f64) -> Complex64 {
    let p = curve.point(x);
    Complex64::new(p[0], p[1])
}

/// Sample `S_a` so that the sample and its image under `map` both have
/// resolution `res`. Returns the sample and the core parameter.
pub fn sample_for_map(a: f64, map: &PlanarMap, res: f64, x_limit: f64) -> Result<(PointSet, f64)> {
    let curve = SpiralCurve::Poly(a);
    let h = 0.5 * res;
    let image_gap = |x: f64| (map.eval(at(curve, x + std::f64::consts::TAU)) - map.eval(at(curve, x))).norm();
    let fine = |x: f64| curve.turn_gap(x) <= h && image_gap(x) <= h;

    let mut hi = 1.0;
    while !fine(hi) {
        hi *= 2.0;
        if hi > x_limit {
            return Err(Error::TruncationTooCoarse(format!(
                "turns of the spiral or its image stay wider than {h:e} up to x = {x_limit:e}"
            )));
        }
    }
    let mut lo = hi / 2.0;
    while hi - lo > 1e-3 * hi {
        let mid = 0.5 * (lo + hi);
        if fine(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let x_core = hi.max(1.0);

    let mut pts: Vec<Complex64> = Vec::new();
    let mut params = Vec::new();
    let mut x = 1.0;
    loop {
        pts.push(at(curve, x));
        params.push(Some(x));
        if x >= x_core {
            break;
        }
        let here = map.eval(at(curve, x));
        let mut dx = h / curve.speed(x);
        while (map.eval(at(curve, x + dx)) - here).norm() > h {
            dx *= 0.5;
        }
        x = (x + dx).min(x_core);
        if pts.len() > MAX_SAMPLE_POINTS {
            return Err(Error::InvalidParameter(format!(
                "sample would exceed {MAX_SAMPLE_POINTS} points"
            )));
        }
    }

    let radius = curve.modulus(x_core);
    pts.push(Complex64::new(0.0, 0.0));
    params.push(None);
    for q in disk_lattice(radius, h) {
        pts.push(Complex64::new(q[0], q[1]));
        params.push(None);
    }
    // lattice over the image of the core disk
    let inverse = map.inverse();
    let boundary: Vec<Complex64> = (0..4096)
        .map(|i| map.eval(Complex64::from_polar(radius, i as f64 * std::f64::consts::TAU / 4096.0)))
        .collect();
    let (mut lo_re, mut hi_re, mut lo_im, mut hi_im) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for w in &boundary {
        lo_re = lo_re.min(w.re);
        hi_re = hi_re.max(w.re);
        lo_im = lo_im.min(w.im);
        hi_im = hi_im.max(w.im);
    }
    let (i0, i1) = ((lo_re / h).floor() as i64, (hi_re / h).ceil() as i64);
    let (j0, j1) = ((lo_im / h).floor() as i64, (hi_im / h).ceil() as i64);
    let cells = (i1 - i0 + 1) as f64 * (j1 - j0 + 1) as f64;
    if cells + pts.len() as f64 > MAX_SAMPLE_POINTS as f64 {
        return Err(Error::InvalidParameter(format!(
            "core lattice would exceed {MAX_SAMPLE_POINTS} points"
        )));
    }
    for i in i0..=i1 {
        for j in j0..=j1 {
            let z = inverse.eval(Complex64::new(i as f64 * h, j as f64 * h));
            if z.norm() <= radius {
                pts.push(z);
                params.push(None);
            }
        }
    }
    let coords = pts.iter().flat_map(|z| [z.re, z.im]).collect();
    let set = PointSet::from_flat(2, coords, res)?.with_params(params)?;
    Ok((set, x_core))
}

fn spectrum(set: &PointSet, grid: &[f64], budget: usize) -> Result<SpectrumEstimate> {
    let idx = MultiScaleIndex::build_auto(set)?;
    let window = ScaleWindow::spectrum_default_for(&idx);
    estimate_spectrum(&idx, grid, &window, budget)
}

pub fn run(scenario: &Scenario) -> Result<VerifyReport> {
    let map: PlanarMap = scenario.map.parse()?;
    let k = map.dilatation_bound();
    let ctx = ExponentContext::planar(k)?;

    let t0 = Instant::now();
    let (source, x_core) = sample_for_map(scenario.a, &map, scenario.resolution, scenario.x_limit)?;
    // the sampler guarantees the target resolution on the image side
    let image = map.apply(&source)?.with_resolution(scenario.resolution)?;
    let sample_ms = t0.elapsed().as_millis();

    let t1 = Instant::now();
    let src = spectrum(&source, &scenario.source_theta, scenario.center_budget)?;
    let source_estimate_ms = t1.elapsed().as_millis();
    let t2 = Instant::now();
    let img = spectrum(&image, &scenario.image_theta, scenario.center_budget)?;
    let image_estimate_ms = t2.elapsed().as_millis();

    let grid: Vec<f64> = match scenario.t {
        Some(t) => vec![crate::bounds::theta_of_t(t)?],
        None => scenario.image_theta.clone(),
    };
    let max_src = *scenario.source_theta.last().expect("nonempty grid");
    let source_fn = |th: f64| {
        if th > max_src + 1e-12 {
            None
        } else {
            src.regularized_at(th)
        }
    };
    let image_fn = |th: f64| img.regularized_at(th);
    let bound_curves = BoundReport::evaluate(&grid, &ctx, &source_fn, &image_fn, None, scenario.slack)?;

    let image_exponent = image_exponent(scenario.a, &map);
    let oracle_verdicts = match image_exponent {
        Some(b) => oracle_check(&grid, b, &image_fn, scenario.slack),
        None => Vec::new(),
    };
    let comparisons = grid
        .iter()
        .map(|&th| compare_bounds(t_of_theta(th)?, k, &source_fn))
        .collect::<Result<Vec<_>>>()?;

    let pass = bound_curves.passed() && oracle_verdicts.iter().all(|v| v.pass != Some(false));
    Ok(VerifyReport {
        scenario: scenario.clone(),
        dilatation: k,
        source_points: source.len(),
        image_points: image.len(),
        core_parameter: x_core,
        estimated_source_spectrum: src,
        estimated_image_spectrum: img,
        bound_curves,
        image_exponent,
        oracle_verdicts,
        comparisons,
        pass,
        timings: Timings {
            sample_ms,
            source_estimate_ms,
            image_estimate_ms,
        },
    })
}

/// Compare an image spectrum with the closed form for `S_b`.
pub fn oracle_check(
    grid: &[f64],
    b: f64,
    image: &dyn Fn(f64) -> Option<f64>,
    slack: f64,
) -> Vec<OracleVerdict> {
    grid.iter()
        .filter_map(|&theta| {
            let oracle = oracle_spiral_spectrum(b, theta).ok()?;
            let estimate = image(theta);
            Some(OracleVerdict {
                theta,
                oracle,
                estimate,
                pass: estimate.map(|v| (v - oracle).abs() <= slack),
            })
        })
        .collect()
}
