//! Shared helpers: random point sets and brute-force reference counts.

#![allow(dead_code)]

use std::collections::HashSet;

use assouad_lab::geometry::{MultiScaleIndex, PointSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random set of one of several shapes: uniform, clustered around a few
/// centres, near a line, or a jittered lattice. At most `max_points` points.
pub fn random_set(seed: u64, dim: usize, max_points: usize) -> PointSet {
    let mut r = rng(seed);
    let n = r.gen_range(1..=max_points);
    let shape = r.gen_range(0..4);
    let scale: f64 = 10f64.powf(r.gen_range(-2.0..2.0));
    let offset: Vec<f64> = (0..dim).map(|_| r.gen_range(-5.0..5.0)).collect();
    let centres: Vec<Vec<f64>> = (0..r.gen_range(1..6))
        .map(|_| (0..dim).map(|_| r.gen::<f64>()).collect())
        .collect();
    let dir: Vec<f64> = (0..dim).map(|_| r.gen_range(-1.0..1.0)).collect();
    let mut pts = Vec::with_capacity(n);
    for i in 0..n {
        let p: Vec<f64> = match shape {
            0 => (0..dim).map(|_| r.gen::<f64>()).collect(),
            1 => {
                let c = &centres[i % centres.len()];
                let w = 10f64.powf(r.gen_range(-4.0..-1.0));
                c.iter().map(|x| x + w * r.gen_range(-1.0..1.0)).collect()
            }
            2 => {
                let s: f64 = r.gen();
                dir.iter().map(|d| s * d + 1e-3 * r.gen::<f64>()).collect()
            }
            _ => (0..dim)
                .map(|_| r.gen_range(0..20) as f64 / 20.0 + 1e-6 * r.gen::<f64>())
                .collect(),
        };
        pts.push(p.iter().zip(&offset).map(|(x, o)| o + scale * x).collect());
    }
    PointSet::new(dim, pts, scale * 1e-4).expect("valid random set")
}

/// Leaf lattice coordinates of `p`, computed the way the index does.
fn leaf_coords(idx: &MultiScaleIndex, p: &[f64]) -> Vec<u64> {
    let root = idx.root();
    let side = root.side();
    let per_axis = 1u64 << idx.max_level();
    p.iter()
        .zip(&root.center)
        .map(|(x, c)| {
            let lo = c - root.radius;
            let v = ((x - lo) / side * per_axis as f64).floor();
            if v <= 0.0 {
                0
            } else {
                (v as u64).min(per_axis - 1)
            }
        })
        .collect()
}

/// Occupied cells at `level`, found by scanning all points.
pub fn brute_occupied(idx: &MultiScaleIndex, set: &PointSet, level: u32) -> usize {
    let shift = idx.max_level() - level;
    set.iter()
        .map(|p| leaf_coords(idx, p).into_iter().map(|c| c >> shift).collect::<Vec<_>>())
        .collect::<HashSet<_>>()
        .len()
}

/// Global cells at `level` that hold a point of the closed ball.
pub fn brute_ball_count(idx: &MultiScaleIndex, set: &PointSet, x: &[f64], radius: f64, level: u32) -> usize {
    let shift = idx.max_level() - level;
    set.iter()
        .filter(|p| dist(p, x) <= radius)
        .map(|p| leaf_coords(idx, p).into_iter().map(|c| c >> shift).collect::<Vec<_>>())
        .collect::<HashSet<_>>()
        .len()
}

/// Cells of the grid that splits `[x - R, x + R]^n` into `2^m` parts per
/// axis and hold a point of the closed ball.
pub fn brute_centred_count(set: &PointSet, x: &[f64], radius: f64, m: u32) -> usize {
    let parts = 1i64 << m;
    let side = 2.0 * radius / parts as f64;
    set.iter()
        .filter(|p| dist(p, x) <= radius)
        .map(|p| {
            p.iter()
                .zip(x)
                .map(|(v, c)| (((v - (c - radius)) / side).floor() as i64).clamp(0, parts - 1))
                .collect::<Vec<_>>()
        })
        .collect::<HashSet<_>>()
        .len()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Check the structural invariants and the local count comparisons of the
/// index over one random set; returns a description of each violation.
pub fn index_violations(seed: u64, dim: usize, max_points: usize) -> Vec<String> {
    let set = random_set(seed, dim, max_points);
    let idx = MultiScaleIndex::build_auto(&set).expect("index builds");
    let mut bad = Vec::new();
    if let Err(e) = idx.verify_structure() {
        bad.push(format!("seed {seed}: {e}"));
    }
    let top = idx.max_level();
    let mut prev = 1usize;
    for l in 0..=top {
        let c = idx.occupied_count(l).expect("level in range");
        if c != brute_occupied(&idx, &set, l) {
            bad.push(format!("seed {seed}: level {l} occupancy differs from brute force"));
        }
        if l > 0 && !(prev <= c && c <= prev << dim) {
            bad.push(format!("seed {seed}: count growth {prev} -> {c} at level {l}"));
        }
        prev = c;
    }
    for cell in idx.cells(top / 2).expect("level in range") {
        if !idx.is_occupied(top / 2, cell).expect("level in range") {
            bad.push(format!("seed {seed}: listed cell not found"));
        }
    }

    let mut r = rng(seed ^ 0x9e37_79b9);
    let diam = idx.diameter();
    let three = 3usize.pow(dim as u32);
    let two = 1usize << dim;
    for _ in 0..12 {
        let x: Vec<f64> = if r.gen_bool(0.7) {
            set.point(r.gen_range(0..set.len())).to_vec()
        } else {
            idx.root().center.iter().map(|c| c + r.gen_range(-0.5..0.5) * diam).collect()
        };
        let radius = diam * 10f64.powf(r.gen_range(-3.0..0.0));
        let m = r.gen_range(0..6u32).min(top);
        let level = match idx.snapped_level(radius, m) {
            Ok(l) => l,
            Err(_) => continue,
        };
        let global = idx.ball_count(&x, radius, level).expect("valid query");
        if global != brute_ball_count(&idx, &set, &x, radius, level) {
            bad.push(format!("seed {seed}: ball count differs from brute force"));
        }
        let local = idx.local_dyadic_count(&x, radius, m).expect("valid query");
        let centred = brute_centred_count(&set, &x, radius, m);
        if !(local <= three * centred && centred <= two * local) {
            bad.push(format!(
                "seed {seed}: global {local} vs centred {centred} outside the 3^n / 2^n sandwich"
            ));
        }
    }
    bad
}

pub const ORACLE_EXPONENTS: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 5.0];

/// Interior θ grid `0.01, 0.02, ..., 0.99`.
pub fn theta_grid() -> Vec<f64> {
    (1..100).map(|i| i as f64 / 100.0).collect()
}

/// Exact formula identities of the distortion bounds; returns violations.
pub fn formula_violations() -> Vec<String> {
    use assouad_lab::bounds::*;
    use assouad_lab::families::oracle_spiral_spectrum;
    let mut bad = Vec::new();
    let tol = 1e-12;

    // upper form against the symmetric form, n = 2 and n = 3
    for n in [2usize, 3] {
        let nf = n as f64;
        for i in 0..10 {
            let alpha = nf * (i as f64 + 0.5) / 10.0;
            for j in 0..10 {
                let p = nf * (1.05 + 0.6 * j as f64 * j as f64);
                let ctx = ExponentContext::new(n, 2.0, Some(p), None).expect("valid context");
                let beta = beta_upper(alpha, &ctx).expect("alpha in range");
                let lhs = 1.0 / beta - 1.0 / nf;
                let rhs = symmetric_coeff(&ctx) * (1.0 / alpha - 1.0 / nf);
                if (lhs - rhs).abs() > tol {
                    bad.push(format!("n={n} alpha={alpha} p={p}: {lhs} vs {rhs}"));
                }
            }
        }
    }

    // planar coefficient and the d = 1 reduction
    for i in 0..=200 {
        let k = 1.01 * (100.0f64 / 1.01).powf(i as f64 / 200.0);
        let ctx = ExponentContext::planar(k).expect("valid K");
        let c = symmetric_coeff(&ctx);
        if (c - 1.0 / k).abs() > tol {
            bad.push(format!("K={k}: planar coefficient {c}"));
        }
        let ours = ours_upper(1.0, k, 1.0).expect("valid input");
        let beta = beta_upper(1.0, &ctx).expect("valid input");
        if (ours - beta).abs() > tol {
            bad.push(format!("K={k}: d=1 bound {ours} vs {beta}"));
        }
    }

    // the planar bound never exceeds the bi-Hölder bound where both apply
    let mut compared = 0;
    for &a in &ORACLE_EXPONENTS {
        let source = |th: f64| oracle_spiral_spectrum(a, th).ok();
        for k in [1.05, 1.2, 1.5, 2.0, 3.0, 5.0] {
            for th in theta_grid() {
                let t = t_of_theta(th).expect("theta in range");
                match compare_bounds(t, k, &source).expect("valid input") {
                    Comparison::Compared { holds, ours, biholder, .. } => {
                        compared += 1;
                        if !holds {
                            bad.push(format!("a={a} K={k} theta={th}: {ours} > {biholder}"));
                        }
                    }
                    Comparison::BiholderInapplicable { theta, .. } if theta < 1.0 / (k * k) => {
                        bad.push(format!("a={a} K={k} theta={th}: wrongly inapplicable"));
                    }
                    _ => {}
                }
            }
        }
    }
    if compared == 0 {
        bad.push("no grid point met the comparison hypotheses".into());
    }
    bad
}

/// Properties of the spiral closed forms; returns violations.
pub fn oracle_violations() -> Vec<String> {
    use assouad_lab::families::*;
    let mut bad = Vec::new();
    let tol = 1e-12;
    for &a in &ORACLE_EXPONENTS {
        let boxd = oracle_spiral_box_dim(a).expect("a > 0");
        let qa = oracle_spiral_quasi_assouad(a).expect("a > 0");
        let rho = oracle_spiral_rho(a).expect("a > 0");
        let gap = rho - (1.0 - boxd / qa);
        if gap < -tol {
            bad.push(format!("a={a}: rho {rho} below 1 - box/qA"));
        }
        if (a <= 1.0) != (gap.abs() <= tol) {
            bad.push(format!("a={a}: rho gap {gap} has the wrong equality case"));
        }
        let mut prev = boxd;
        for th in theta_grid() {
            let s = oracle_spiral_spectrum(a, th).expect("theta in range");
            if s > boxd / (1.0 - th) + tol {
                bad.push(format!("a={a} theta={th}: {s} above box/(1-theta)"));
            }
            if th < rho && s < (1.0 - rho) / (1.0 - th) * qa - tol {
                bad.push(format!("a={a} theta={th}: {s} below the phase-transition bound"));
            }
            if s < prev - tol {
                bad.push(format!("a={a} theta={th}: spectrum decreases"));
            }
            if th >= rho && (s - qa).abs() > tol {
                bad.push(format!("a={a} theta={th}: {s} has not reached {qa} past rho"));
            }
            if th < rho - tol && s >= qa {
                bad.push(format!("a={a} theta={th}: {s} reached {qa} before rho"));
            }
            prev = s;
        }
    }
    bad
}
