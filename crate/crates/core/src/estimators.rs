//! Dimension estimates from multiscale counts.
//!
//! Geometry is measured in units of the root diameter, so the scale
//! constraints of the spectrum (`r <= R^{1/θ} < R < 1`) apply to rescaled
//! radii. Covering counts use global grid cells of side `2r`, the dyadic
//! formulation in which a cell of side `2^{1-m} R` stands for the scale
//! `r = 2^{-m} R`.
//!
//! Every exponent is a least-squares slope of log counts against log scale
//! ratios, fitted over all admissible dyadic levels. Multiplicative
//! constants in the counts land in the intercept instead of biasing the
//! exponent, which a single count ratio `log N / log(R/r)` cannot avoid at
//! the scale ranges a finite sample offers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dist_sq, MultiScaleIndex};

/// Smallest admissible scale ratio `R / r` for ball counts.
pub const MIN_SCALE_RATIO: f64 = 4.0;
/// Minimum number of dyadic levels for any slope fit.
pub const MIN_FIT_LEVELS: usize = 3;
/// Minimum number of dyadic levels for the box-counting fit.
pub const MIN_BOX_LEVELS: usize = 4;
/// Default θ used as a stand-in for the limit θ → 1.
pub const DEFAULT_THETA_HI: f64 = 0.9;
/// Default number of ball centres.
pub const DEFAULT_CENTER_BUDGET: usize = 64;
/// Default upper cap on `R` for spectrum queries, as a fraction of the root
/// diameter.
pub const SPECTRUM_R_CAP: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScaleWindow {
    pub r_min: f64,
    pub r_max: f64,
}

impl ScaleWindow {
    pub fn new(r_min: f64, r_max: f64) -> Result<Self> {
        if !(r_min > 0.0 && r_min < r_max && r_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "scale window needs 0 < r_min < r_max, got [{r_min}, {r_max}]"
            )));
        }
        Ok(Self { r_min, r_max })
    }

    /// Two dyadic levels of guard band on either end: `[4 res, diam / 4]`.
    pub fn default_for(idx: &MultiScaleIndex) -> Self {
        Self {
            r_min: 4.0 * idx.resolution(),
            r_max: idx.diameter() / 4.0,
        }
    }

    /// Default window for spectrum estimates: `R` may reach
    /// `SPECTRUM_R_CAP` of the root diameter.
    pub fn spectrum_default_for(idx: &MultiScaleIndex) -> Self {
        Self {
            r_min: 4.0 * idx.resolution(),
            r_max: SPECTRUM_R_CAP * idx.diameter(),
        }
    }

    pub fn validate(&self, idx: &MultiScaleIndex) -> Result<()> {
        let res = idx.resolution();
        let diam = idx.diameter();
        if self.r_min < res * (1.0 - 1e-12) {
            return Err(Error::ScaleBelowResolution {
                side: self.r_min,
                resolution: res,
            });
        }
        if !(self.r_min < self.r_max && self.r_max <= diam * (1.0 + 1e-12)) {
            return Err(Error::InvalidParameter(format!(
                "scale window [{:e}, {:e}] must satisfy r_min < r_max <= diameter {diam:e}",
                self.r_min, self.r_max
            )));
        }
        Ok(())
    }

    /// Levels whose cell side lies in the window.
    fn levels(&self, idx: &MultiScaleIndex) -> Vec<u32> {
        (0..=idx.max_level())
            .filter(|&m| {
                let s = idx.cell_side(m);
                s >= self.r_min * (1.0 - 1e-12) && s <= self.r_max * (1.0 + 1e-12)
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Method {
    Box,
    SpectrumLimit,
    AssouadWindow,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DimEstimate {
    pub value: f64,
    pub method: Method,
    pub window: ScaleWindow,
    /// (log scale, log count) pairs behind the fit.
    pub slope_diagnostics: Vec<(f64, f64)>,
}

/// Ordinary least-squares slope.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

fn clamp_dim(v: f64, n: usize) -> f64 {
    v.clamp(0.0, n as f64)
}

/// Upper box-counting dimension from the slope of `log N(s)` against
/// `log(1/s)` over the window's levels.
pub fn estimate_box_dim(idx: &MultiScaleIndex, window: &ScaleWindow) -> Result<DimEstimate> {
    window.validate(idx)?;
    let levels = window.levels(idx);
    if levels.len() < MIN_BOX_LEVELS {
        return Err(Error::WindowTooNarrow(format!(
            "{} dyadic levels in [{:e}, {:e}], need {MIN_BOX_LEVELS}",
            levels.len(),
            window.r_min,
            window.r_max
        )));
    }
    let pairs: Vec<(f64, f64)> = levels
        .iter()
        .map(|&m| {
            let c = idx.occupied_count(m).expect("level within range");
            ((1.0 / idx.cell_side(m)).ln(), (c as f64).ln())
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
    let slope = ls_slope(&xs, &ys).unwrap_or(0.0);
    Ok(DimEstimate {
        value: clamp_dim(slope, idx.dim()),
        method: Method::Box,
        window: *window,
        slope_diagnostics: pairs,
    })
}

/// Ball centres: greedy densest-descent points followed by a farthest-point
/// traversal over one representative per leaf cell, seeded at the
/// lexicographically smallest representative.
///
/// The densest-descent points start from the most populated cell of each
/// level and repeatedly step into the most populated child, which finds the
/// accumulation points where local counts are largest. At most half the
/// budget goes to them.
pub fn select_centers(idx: &MultiScaleIndex, budget: usize) -> Vec<Vec<f64>> {
    let budget = budget.max(1);
    let counts = idx.leaf_counts();
    let leaf = idx.max_level();

    let mut hot_leaves: Vec<usize> = Vec::new();
    let hot_budget = (budget / 2).max(1);
    for l in 0..=leaf {
        if hot_leaves.len() >= hot_budget {
            break;
        }
        let lc = &counts[l as usize];
        let mut best = 0;
        for (i, &c) in lc.iter().enumerate() {
            if c > lc[best] {
                best = i;
            }
        }
        let mut i = best;
        for ll in l..leaf {
            let kids = idx.children(ll, i);
            let below = &counts[ll as usize + 1];
            let mut pick = kids.start;
            for j in kids {
                if below[j] > below[pick] {
                    pick = j;
                }
            }
            i = pick;
        }
        if !hot_leaves.contains(&i) {
            hot_leaves.push(i);
        }
    }

    let reps: Vec<&[f64]> = idx.leaf_representatives().collect();
    let mut centers: Vec<Vec<f64>> = hot_leaves.iter().map(|&j| reps[j].to_vec()).collect();
    if centers.len() >= budget {
        centers.truncate(budget);
        return centers;
    }

    let seed = (0..reps.len())
        .min_by(|&a, &b| {
            reps[a]
                .partial_cmp(reps[b])
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .expect("index is nonempty");
    let mut nearest: Vec<f64> = vec![f64::INFINITY; reps.len()];
    let update = |c: &[f64], nearest: &mut Vec<f64>| {
        nearest
            .par_iter_mut()
            .zip(reps.par_iter())
            .for_each(|(d, p)| *d = d.min(dist_sq(p, c)));
    };
    for c in &centers {
        update(c, &mut nearest);
    }
    if !centers.iter().any(|c| c.as_slice() == reps[seed]) {
        centers.push(reps[seed].to_vec());
        update(reps[seed], &mut nearest);
    }
    while centers.len() < budget {
        let mut far = 0;
        for (j, &d) in nearest.iter().enumerate() {
            if d > nearest[far] {
                far = j;
            }
        }
        if nearest[far] <= 0.0 {
            break;
        }
        centers.push(reps[far].to_vec());
        update(reps[far], &mut nearest);
    }
    centers
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScalePoint {
    /// Small scale `r` (half the cell side).
    pub r: f64,
    /// Ball radius `R`.
    pub big_r: f64,
    pub level: u32,
    /// Largest count over the centres.
    pub count: usize,
    pub center: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ThetaDiagnostics {
    pub theta: f64,
    pub scales: Vec<ScalePoint>,
    /// Largest single ratio `log N / log(R/r)` over all centres and levels.
    pub max_ratio: Option<f64>,
    /// 95th percentile of the same ratios.
    pub p95_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEstimate {
    pub theta: Vec<f64>,
    /// Per-θ estimate; `None` where no admissible scale pairs exist.
    pub value: Vec<Option<f64>>,
    /// Running maximum of `value`.
    pub regularized: Vec<Option<f64>>,
    pub diagnostics: Vec<ThetaDiagnostics>,
}

impl SpectrumEstimate {
    /// Wrap externally supplied values (for instance closed-form oracles).
    pub fn from_values(theta: Vec<f64>, value: Vec<Option<f64>>) -> Result<Self> {
        check_theta_grid(&theta)?;
        if theta.len() != value.len() {
            return Err(Error::InvalidParameter(format!(
                "{} theta values but {} spectrum values",
                theta.len(),
                value.len()
            )));
        }
        let regularized = running_max(&value);
        let diagnostics = theta
            .iter()
            .map(|&t| ThetaDiagnostics {
                theta: t,
                scales: Vec::new(),
                max_ratio: None,
                p95_ratio: None,
            })
            .collect();
        Ok(Self {
            theta,
            value,
            regularized,
            diagnostics,
        })
    }

    /// Regularized value from the grid: the largest estimate at grid points
    /// `θ' <= θ`.
    pub fn regularized_at(&self, theta: f64) -> Option<f64> {
        self.theta
            .iter()
            .zip(&self.value)
            .filter(|(t, _)| **t <= theta + 1e-12)
            .filter_map(|(_, v)| *v)
            .reduce(f64::max)
    }

    /// Two-column plotting table `theta,regularized`; absent values are
    /// left empty.
    pub fn to_plot_csv(&self) -> String {
        let mut out = String::from("theta,regularized\n");
        for (t, v) in self.theta.iter().zip(&self.regularized) {
            match v {
                Some(v) => out.push_str(&format!("{t},{v}\n")),
                None => out.push_str(&format!("{t},\n")),
            }
        }
        out
    }
}

fn running_max(values: &[Option<f64>]) -> Vec<Option<f64>> {
    let mut best: Option<f64> = None;
    values
        .iter()
        .map(|v| {
            if let Some(v) = v {
                best = Some(best.map_or(*v, |b| b.max(*v)));
            }
            best
        })
        .collect()
}

fn check_theta_grid(theta: &[f64]) -> Result<()> {
    if theta.is_empty() {
        return Err(Error::InvalidParameter("empty theta grid".into()));
    }
    if theta.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
        return Err(Error::InvalidParameter(
            "theta values must lie in (0, 1)".into(),
        ));
    }
    if theta.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "theta grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Evenly spaced grid `start, start + step, ..., <= stop`.
pub fn theta_range(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n)
        .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumOptions {
    pub center_budget: usize,
    /// Relaxation constant `C1 >= 1`: pairs satisfy `r / C1 <= R^{1/θ}`.
    pub scale_relaxation: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            center_budget: DEFAULT_CENTER_BUDGET,
            scale_relaxation: 1.0,
        }
    }
}

/// Scale pairs used for one θ: `(level, r, R)`.
fn spectrum_pairs(
    idx: &MultiScaleIndex,
    window: &ScaleWindow,
    theta: f64,
    relax: f64,
) -> Vec<(u32, f64, f64)> {
    let diam = idx.diameter();
    window
        .levels(idx)
        .into_iter()
        .filter_map(|k| {
            let r = 0.5 * idx.cell_side(k);
            let big_r = diam * (r / diam / relax).powf(theta);
            (big_r <= window.r_max && big_r < diam && big_r / r >= MIN_SCALE_RATIO)
                .then_some((k, r, big_r))
        })
        .collect()
}

struct PairCounts {
    level: u32,
    r: f64,
    big_r: f64,
    counts: Vec<usize>,
}

fn count_pairs(idx: &MultiScaleIndex, centers: &[Vec<f64>], pairs: &[(u32, f64, f64)]) -> Vec<PairCounts> {
    pairs
        .par_iter()
        .map(|&(level, r, big_r)| PairCounts {
            level,
            r,
            big_r,
            counts: centers
                .iter()
                .map(|c| idx.ball_count_unchecked(c, big_r, level))
                .collect(),
        })
        .collect()
}

fn percentile(mut v: Vec<f64>, q: f64) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite ratios"));
    let pos = ((v.len() - 1) as f64 * q).round() as usize;
    Some(v[pos])
}

/// Estimate the regularized Assouad spectrum on `theta_grid`.
///
/// For each θ and each dyadic level `r` in the window, the ball radius is
/// `R = r^θ` (rescaled units), capped by the window's `r_max`. The largest
/// count over the centres is taken per level and the exponent is the slope
/// of `log count` against `log(R/r)`. A θ with fewer than
/// `MIN_FIT_LEVELS` admissible levels is reported as absent, even when that
/// leaves the whole grid absent.
pub fn estimate_spectrum(
    idx: &MultiScaleIndex,
    theta_grid: &[f64],
    window: &ScaleWindow,
    center_budget: usize,
) -> Result<SpectrumEstimate> {
    estimate_spectrum_with(
        idx,
        theta_grid,
        window,
        &SpectrumOptions {
            center_budget,
            ..SpectrumOptions::default()
        },
    )
}

pub fn estimate_spectrum_with(
    idx: &MultiScaleIndex,
    theta_grid: &[f64],
    window: &ScaleWindow,
    opts: &SpectrumOptions,
) -> Result<SpectrumEstimate> {
    check_theta_grid(theta_grid)?;
    window.validate(idx)?;
    if opts.center_budget == 0 {
        return Err(Error::InvalidParameter("center budget must be >= 1".into()));
    }
    if !(opts.scale_relaxation >= 1.0 && opts.scale_relaxation.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "scale relaxation must be >= 1, got {}",
            opts.scale_relaxation
        )));
    }
    let centers = select_centers(idx, opts.center_budget);
    spectrum_at_centers(idx, theta_grid, window, opts.scale_relaxation, &centers)
}

fn spectrum_at_centers(
    idx: &MultiScaleIndex,
    theta_grid: &[f64],
    window: &ScaleWindow,
    relax: f64,
    centers: &[Vec<f64>],
) -> Result<SpectrumEstimate> {
    let n = idx.dim();
    let per_theta: Vec<(Option<f64>, ThetaDiagnostics)> = theta_grid
        .par_iter()
        .map(|&theta| {
            let pairs = spectrum_pairs(idx, window, theta, relax);
            let counted = count_pairs(idx, centers, &pairs);
            let mut ratios = Vec::new();
            let mut scales = Vec::new();
            let (mut xs, mut ys) = (Vec::new(), Vec::new());
            for pc in &counted {
                let lr = (pc.big_r / pc.r).ln();
                ratios.extend(pc.counts.iter().map(|&c| (c as f64).ln() / lr));
                let (best, &count) = pc
                    .counts
                    .iter()
                    .enumerate()
                    .max_by_key(|(i, c)| (**c, std::cmp::Reverse(*i)))
                    .expect("at least one centre");
                xs.push(lr);
                ys.push((count.max(1) as f64).ln());
                scales.push(ScalePoint {
                    r: pc.r,
                    big_r: pc.big_r,
                    level: pc.level,
                    count,
                    center: centers[best].clone(),
                });
            }
            let value = if counted.len() >= MIN_FIT_LEVELS {
                ls_slope(&xs, &ys).map(|s| clamp_dim(s, n))
            } else {
                None
            };
            let diag = ThetaDiagnostics {
                theta,
                scales,
                max_ratio: ratios.iter().copied().reduce(f64::max).map(|v| clamp_dim(v, n)),
                p95_ratio: percentile(ratios, 0.95).map(|v| clamp_dim(v, n)),
            };
            (value, diag)
        })
        .collect();
    let (value, diagnostics): (Vec<_>, Vec<_>) = per_theta.into_iter().unzip();
    let regularized = running_max(&value);
    Ok(SpectrumEstimate {
        theta: theta_grid.to_vec(),
        value,
        regularized,
        diagnostics,
    })
}

/// Quasi-Assouad dimension as the regularized spectrum at `theta_hi`.
pub fn estimate_quasi_assouad(
    idx: &MultiScaleIndex,
    window: &ScaleWindow,
    center_budget: usize,
    theta_hi: f64,
) -> Result<DimEstimate> {
    if !(theta_hi > 0.0 && theta_hi < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "theta_hi must lie in (0, 1), got {theta_hi}"
        )));
    }
    let mut grid: Vec<f64> = theta_range(0.05, theta_hi, 0.05)
        .into_iter()
        .filter(|t| *t < theta_hi - 1e-9)
        .collect();
    grid.push(theta_hi);
    let spec = estimate_spectrum(idx, &grid, window, center_budget)?;
    let value = spec
        .regularized
        .last()
        .copied()
        .flatten()
        .ok_or_else(|| Error::WindowTooNarrow(format!("no spectrum value up to theta = {theta_hi}")))?;
    Ok(DimEstimate {
        value,
        method: Method::SpectrumLimit,
        window: *window,
        slope_diagnostics: spec
            .theta
            .iter()
            .zip(&spec.regularized)
            .filter_map(|(t, v)| v.map(|v| (*t, v)))
            .collect(),
    })
}

/// Assouad dimension as the largest exponent over two families of scale
/// pairs inside the window.
///
/// Fixed-ratio pairs: for each `R / r = 2^j` (`j >= 2`) take the largest
/// count over all admissible levels and centres, then fit the slope of
/// `log count` against `j log 2`. Fixed-θ pairs: the spectrum fits for
/// θ = 0.05, 0.1, ..., `DEFAULT_THETA_HI`. The second family reaches the
/// pairs `r << R^2` near accumulation points that a fixed ratio only sees at
/// scales far below the resolution.
pub fn estimate_assouad(
    idx: &MultiScaleIndex,
    window: &ScaleWindow,
    center_budget: usize,
) -> Result<DimEstimate> {
    window.validate(idx)?;
    if center_budget == 0 {
        return Err(Error::InvalidParameter("center budget must be >= 1".into()));
    }
    let levels = window.levels(idx);
    let min_j = MIN_SCALE_RATIO.log2().ceil() as i32;
    let mut pairs = Vec::new();
    for &k in &levels {
        let r = 0.5 * idx.cell_side(k);
        let mut j = min_j;
        loop {
            let big_r = r * 2f64.powi(j);
            if big_r > window.r_max {
                break;
            }
            pairs.push((k, r, big_r, j));
            j += 1;
        }
    }
    let js: std::collections::BTreeSet<i32> = pairs.iter().map(|p| p.3).collect();
    if js.len() < MIN_FIT_LEVELS {
        return Err(Error::WindowTooNarrow(format!(
            "{} scale ratios available in [{:e}, {:e}], need {MIN_FIT_LEVELS}",
            js.len(),
            window.r_min,
            window.r_max
        )));
    }
    let centers = select_centers(idx, center_budget);
    let triples: Vec<(u32, f64, f64)> = pairs.iter().map(|p| (p.0, p.1, p.2)).collect();
    let counted = count_pairs(idx, &centers, &triples);
    let mut diag = Vec::new();
    for &j in &js {
        let best = pairs
            .iter()
            .zip(&counted)
            .filter(|(p, _)| p.3 == j)
            .flat_map(|(_, pc)| pc.counts.iter().copied())
            .max()
            .unwrap_or(1)
            .max(1);
        diag.push((f64::from(j) * 2f64.ln(), (best as f64).ln()));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = diag.iter().copied().unzip();
    let mut value = ls_slope(&xs, &ys).unwrap_or(0.0);
    let grid = theta_range(0.05, DEFAULT_THETA_HI, 0.05);
    if let Ok(spec) = spectrum_at_centers(idx, &grid, window, 1.0, &centers) {
        value = spec.value.iter().flatten().fold(value, |a, b| a.max(*b));
    }
    Ok(DimEstimate {
        value: clamp_dim(value, idx.dim()),
        method: Method::AssouadWindow,
        window: *window,
        slope_diagnostics: diag,
    })
}

/// Phase transition: the smallest grid θ whose regularized value is within
/// `epsilon` of the estimated quasi-Assouad dimension (the largest
/// regularized value, capped at the ambient dimension); 1 if the spectrum
/// has no values.
pub fn estimate_rho(spec: &SpectrumEstimate, ambient_dim: usize, epsilon: f64) -> f64 {
    let Some(qa) = spec
        .regularized
        .iter()
        .filter_map(|v| *v)
        .reduce(f64::max)
        .map(|v| v.min(ambient_dim as f64))
    else {
        return 1.0;
    };
    spec.theta
        .iter()
        .zip(&spec.regularized)
        .find(|(_, v)| v.is_some_and(|v| v >= qa - epsilon))
        .map_or(1.0, |(t, _)| *t)
}
