//! Closed-form distortion bounds for dimensions under quasiconformal maps.
//!
//! Bounds are stated in the coordinates `1/dim - 1/n`, where a
//! `K`-quasiconformal map acts by a bounded multiplicative factor. A source
//! value of 0 gives an image bound of 0 (with `1/0 = ∞`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent parameters for one map class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExponentContext {
    pub n: usize,
    pub k: f64,
    /// Higher integrability exponent; `f64::INFINITY` for conformal maps.
    pub p: f64,
    /// Constant `λ >= 1` of the λ form of the bounds.
    pub lambda: f64,
}

/// `2K / (K - 1)`, infinite at `K = 1`.
pub fn planar_exponent(k: f64) -> f64 {
    if k == 1.0 {
        f64::INFINITY
    } else {
        2.0 * k / (k - 1.0)
    }
}

/// `nK / (K - 1)`: the sharp value in the plane, an upper bound and the
/// conjectured value in higher dimensions.
pub fn conjectural_exponent(n: usize, k: f64) -> f64 {
    if k == 1.0 {
        f64::INFINITY
    } else {
        n as f64 * k / (k - 1.0)
    }
}

/// Proven lower bound `nλK / (λK - 1)` for the exponent in dimension `n`.
pub fn lambda_exponent_lower(n: usize, k: f64, lambda: f64) -> f64 {
    let lk = lambda * k;
    if lk == 1.0 {
        f64::INFINITY
    } else {
        n as f64 * lk / (lk - 1.0)
    }
}

fn check_k(k: f64) -> Result<()> {
    if !(k >= 1.0 && k.is_finite()) {
        return Err(Error::InvalidDilatation(k));
    }
    Ok(())
}

fn check_exponent(n: usize, p: f64) -> Result<()> {
    if !(p > n as f64) {
        return Err(Error::InvalidParameter(format!(
            "exponent p = {p} must exceed n = {n}"
        )));
    }
    Ok(())
}

impl ExponentContext {
    /// Plane with the sharp exponent `2K / (K - 1)`.
    pub fn planar(k: f64) -> Result<Self> {
        Self::new(2, k, None, None)
    }

    /// `p` may be omitted in the plane (sharp value) or when `K = 1`.
    pub fn new(n: usize, k: f64, p: Option<f64>, lambda: Option<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "ambient dimension must be >= 2, got {n}"
            )));
        }
        check_k(k)?;
        let p = match p {
            Some(p) => p,
            None if k == 1.0 => f64::INFINITY,
            None if n == 2 => planar_exponent(k),
            None => {
                return Err(Error::InvalidParameter(format!(
                    "the exponent for n = {n} is not known and must be supplied"
                )))
            }
        };
        check_exponent(n, p)?;
        let lambda = lambda.unwrap_or(1.0);
        if !(lambda >= 1.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be >= 1, got {lambda}"
            )));
        }
        Ok(Self { n, k, p, lambda })
    }

    fn nf(&self) -> f64 {
        self.n as f64
    }
}

/// `θ(t) = 1 / (1 + t)`.
pub fn theta_of_t(t: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("t must be positive, got {t}")));
    }
    Ok(1.0 / (1.0 + t))
}

/// Inverse of `theta_of_t`.
pub fn t_of_theta(theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "theta must lie in (0, 1), got {theta}"
        )));
    }
    Ok(1.0 / theta - 1.0)
}

/// Upper bound `pα / (p - n + α)` on the image dimension; `α` when `p = ∞`.
pub fn beta_upper(alpha: f64, ctx: &ExponentContext) -> Result<f64> {
    let n = ctx.nf();
    if !(alpha > 0.0 && alpha <= n) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, {n}], got {alpha}"
        )));
    }
    if ctx.p.is_infinite() {
        return Ok(alpha);
    }
    Ok(ctx.p * alpha / (ctx.p - n + alpha))
}

/// `1 - n/p`, which is 1 for conformal maps.
pub fn symmetric_coeff(ctx: &ExponentContext) -> f64 {
    if ctx.p.is_infinite() {
        1.0
    } else {
        1.0 - ctx.nf() / ctx.p
    }
}

/// Solve `1/D - 1/n = c (1/d - 1/n)` for `D`.
fn transport(d: f64, n: f64, c: f64) -> f64 {
    if d == 0.0 {
        return 0.0;
    }
    let inv = 1.0 / n + c * (1.0 / d - 1.0 / n);
    if inv <= 0.0 {
        f64::INFINITY
    } else {
        1.0 / inv
    }
}

fn check_dim(name: &str, d: f64, n: f64) -> Result<()> {
    if !(0.0..=n).contains(&d) {
        return Err(Error::InvalidParameter(format!(
            "{name} = {d} must lie in [0, {n}]"
        )));
    }
    Ok(())
}

/// The exponent used for the lower bound: `inner_p` if given, else the
/// exponent for dilatation `K^{n-1}`, which in dimension `n >= 3` is only
/// known conjecturally and is reported as an assumption.
fn inner_exponent(ctx: &ExponentContext, inner_p: Option<f64>) -> Result<(f64, Vec<String>)> {
    if let Some(p) = inner_p {
        check_exponent(ctx.n, p)?;
        return Ok((p, Vec::new()));
    }
    if ctx.n == 2 {
        return Ok((ctx.p, Vec::new()));
    }
    let kk = ctx.k.powi(ctx.n as i32 - 1);
    let p = conjectural_exponent(ctx.n, kk);
    let note = if p.is_infinite() {
        Vec::new()
    } else {
        vec![format!(
            "inner exponent nK'/(K'-1) = {p} with K' = K^(n-1) = {kk} is conjectural for n = {}",
            ctx.n
        )]
    };
    Ok((p, note))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SpectrumBounds {
    pub theta: f64,
    /// Source spectrum at `θ(Kt)`, which controls the lower bound.
    pub source_low: f64,
    /// Source spectrum at `θ(t/K)`, which controls the upper bound.
    pub source_high: f64,
    pub lower: f64,
    pub upper: f64,
    pub assumptions: Vec<String>,
}

/// Two-sided bounds on the regularized spectrum of the image at `θ(t)`.
///
/// The upper bound comes from the source value at `θ(t/K)` with
/// coefficient `1 - n/p`; the lower bound from the source value at
/// `θ(Kt)` with coefficient `(1 - n/p')^{-1}`.
pub fn spectrum_bounds(
    t: f64,
    ctx: &ExponentContext,
    source: &dyn Fn(f64) -> Option<f64>,
    inner_p: Option<f64>,
) -> Result<SpectrumBounds> {
    let theta = theta_of_t(t)?;
    let n = ctx.nf();
    let th_hi = theta_of_t(t / ctx.k)?;
    let th_lo = theta_of_t(t * ctx.k)?;
    let d_hi = source(th_hi).ok_or(Error::SpectrumUndefined(th_hi))?;
    let d_lo = source(th_lo).ok_or(Error::SpectrumUndefined(th_lo))?;
    check_dim("source spectrum", d_hi, n)?;
    check_dim("source spectrum", d_lo, n)?;
    let (p_in, assumptions) = inner_exponent(ctx, inner_p)?;
    let c_in = if p_in.is_infinite() { 1.0 } else { 1.0 - n / p_in };
    Ok(SpectrumBounds {
        theta,
        source_low: d_lo,
        source_high: d_hi,
        lower: transport(d_lo, n, 1.0 / c_in).min(n),
        upper: transport(d_hi, n, symmetric_coeff(ctx)).min(n),
        assumptions,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AssouadBounds {
    pub lower: f64,
    pub upper: f64,
    /// Bounds with coefficients `(K_O λ)^{-1}` and `λ K_I`.
    pub lambda_lower: f64,
    pub lambda_upper: f64,
    pub assumptions: Vec<String>,
}

/// Two-sided bounds on the Assouad dimension of the image of a set of
/// Assouad dimension `alpha`.
///
/// `inner_k` is the inner dilatation used by the λ form; it defaults to
/// `K^{n-1}` (equal to `K` in the plane).
pub fn assouad_bounds(
    alpha: f64,
    ctx: &ExponentContext,
    inner_p: Option<f64>,
    inner_k: Option<f64>,
) -> Result<AssouadBounds> {
    let n = ctx.nf();
    if !(alpha > 0.0 && alpha < n) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, {n}), got {alpha}"
        )));
    }
    let (p_in, assumptions) = inner_exponent(ctx, inner_p)?;
    let c_in = if p_in.is_infinite() { 1.0 } else { 1.0 - n / p_in };
    let k_inner = inner_k.unwrap_or_else(|| ctx.k.powi(ctx.n as i32 - 1));
    check_k(k_inner)?;
    Ok(AssouadBounds {
        lower: transport(alpha, n, 1.0 / c_in).min(n),
        upper: transport(alpha, n, symmetric_coeff(ctx)).min(n),
        lambda_lower: transport(alpha, n, ctx.lambda * k_inner).min(n),
        lambda_upper: transport(alpha, n, 1.0 / (ctx.k * ctx.lambda)).min(n),
        assumptions,
    })
}

/// Upper bound on the image spectrum at `theta` inherited from the local
/// `(1/K, K)`-bi-Hölder property, clamped at the planar dimension 2.
/// `source_at` is the source spectrum at `theta / K^2`.
pub fn biholder_upper(theta: f64, k: f64, source_at: f64) -> Result<f64> {
    check_k(k)?;
    let limit = 1.0 / (k * k);
    if !(theta > 0.0 && theta < limit) {
        return Err(Error::ThetaOutOfRange { theta, limit });
    }
    check_dim("source spectrum", source_at, 2.0)?;
    Ok((k * (1.0 - theta / (k * k)) / (1.0 - theta) * source_at).min(2.0))
}

/// Planar upper bound `K d / (1 + (K-1) d / 2)` on the image spectrum at
/// `θ(t)`, with `d` the source spectrum at `θ(t/K)`.
pub fn ours_upper(t: f64, k: f64, d: f64) -> Result<f64> {
    theta_of_t(t)?;
    check_k(k)?;
    check_dim("source spectrum", d, 2.0)?;
    Ok(k * d / (1.0 + 0.5 * (k - 1.0) * d))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "camelCase")]
pub enum Comparison {
    /// Both bounds apply; `holds` records `ours <= biholder`.
    Compared {
        theta: f64,
        ours: f64,
        biholder: f64,
        holds: bool,
    },
    /// `θ(t) >= 1/K^2`: the bi-Hölder bound does not apply.
    BiholderInapplicable { theta: f64, ours: f64 },
    /// `θ(t) > d/2`: the comparison is not covered.
    ThetaAboveHalfSource { theta: f64, ours: f64, biholder: f64 },
    /// A needed source value is missing.
    SourceUndefined { theta: f64 },
}

/// Compare the two planar upper bounds at `θ(t)`.
pub fn compare_bounds(t: f64, k: f64, source: &dyn Fn(f64) -> Option<f64>) -> Result<Comparison> {
    let theta = theta_of_t(t)?;
    check_k(k)?;
    let th_d = theta_of_t(t / k)?;
    let Some(d) = source(th_d) else {
        return Ok(Comparison::SourceUndefined { theta: th_d });
    };
    let ours = ours_upper(t, k, d)?;
    if theta >= 1.0 / (k * k) {
        return Ok(Comparison::BiholderInapplicable { theta, ours });
    }
    let th_b = theta / (k * k);
    let Some(sb) = source(th_b) else {
        return Ok(Comparison::SourceUndefined { theta: th_b });
    };
    let biholder = biholder_upper(theta, k, sb)?;
    if theta > 0.5 * d {
        return Ok(Comparison::ThetaAboveHalfSource {
            theta,
            ours,
            biholder,
        });
    }
    Ok(Comparison::Compared {
        theta,
        ours,
        biholder,
        holds: ours <= biholder + 1e-12,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Classification {
    /// Smallest dilatation of a planar quasiconformal map between the spirals.
    pub k: f64,
    /// The spiral exponents are increasing (`a < b`); the value comes from
    /// applying the classification to the inverse map.
    pub via_inverse: bool,
    /// Radial stretch realising the minimum, as a map expression.
    pub witness: String,
}

/// Minimal dilatation of a quasiconformal map of the plane sending the
/// spiral with exponent `a` onto the one with exponent `b`.
pub fn classify_spirals(a: f64, b: f64) -> Result<Classification> {
    for (name, v) in [("a", a), ("b", b)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }
    let k = a.max(b) / a.min(b);
    let witness = if a >= b {
        format!("radial:K={k}")
    } else {
        format!("power:e={k}")
    };
    Ok(Classification {
        k,
        via_inverse: a < b,
        witness,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ThetaVerdict {
    pub theta: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub source: Option<f64>,
    pub image: Option<f64>,
    /// `None` where the bounds or the image value are not available.
    pub pass: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BoundReport {
    pub k: f64,
    pub slack: f64,
    pub theta_grid: Vec<f64>,
    pub verdicts: Vec<ThetaVerdict>,
    pub assumptions: Vec<String>,
}

impl BoundReport {
    /// Checks the image spectrum against the bounds at every θ of `grid`
    /// where everything needed is defined.
    pub fn evaluate(
        grid: &[f64],
        ctx: &ExponentContext,
        source: &dyn Fn(f64) -> Option<f64>,
        image: &dyn Fn(f64) -> Option<f64>,
        inner_p: Option<f64>,
        slack: f64,
    ) -> Result<Self> {
        if !(slack >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "slack must be nonnegative, got {slack}"
            )));
        }
        let mut assumptions = Vec::new();
        let mut verdicts = Vec::with_capacity(grid.len());
        for &theta in grid {
            let t = t_of_theta(theta)?;
            let bounds = match spectrum_bounds(t, ctx, source, inner_p) {
                Ok(b) => Some(b),
                Err(Error::SpectrumUndefined(_)) => None,
                Err(e) => return Err(e),
            };
            if let Some(b) = &bounds {
                for a in &b.assumptions {
                    if !assumptions.contains(a) {
                        assumptions.push(a.clone());
                    }
                }
            }
            let img = image(theta);
            let pass = match (&bounds, img) {
                (Some(b), Some(v)) => Some(v >= b.lower - slack && v <= b.upper + slack),
                _ => None,
            };
            verdicts.push(ThetaVerdict {
                theta,
                lower: bounds.as_ref().map(|b| b.lower),
                upper: bounds.as_ref().map(|b| b.upper),
                source: source(theta),
                image: img,
                pass,
            });
        }
        Ok(Self {
            k: ctx.k,
            slack,
            theta_grid: grid.to_vec(),
            verdicts,
            assumptions,
        })
    }

    pub fn feasible(&self) -> usize {
        self.verdicts.iter().filter(|v| v.pass.is_some()).count()
    }

    /// True when at least one θ was checked and none failed.
    pub fn passed(&self) -> bool {
        self.feasible() > 0 && self.verdicts.iter().all(|v| v.pass != Some(false))
    }
}
