//! Exhaustive grid evaluators for tiny instances.
//!
//! These share no code with the searches or the Gram-matrix tests beyond the
//! distribution type, so they can be used to cross-check both.

use crate::dist::{JointDist, JointFunction};
use crate::error::{Error, Result};
use crate::par;
use crate::phi::PhiSpec;
use crate::ribbon_mc::LambdaPoint;

pub const GRID_CAP: f64 = 1e7;

/// Evenly spaced values per function coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub resolution: usize,
    /// Defaults to the Φ domain (or `[-1, 1]` for correlations).
    pub domain: Option<(f64, f64)>,
}

impl GridSpec {
    pub fn new(resolution: usize) -> Self {
        Self {
            resolution,
            domain: None,
        }
    }

    /// Grid values including both endpoints and the exact midpoint.
    pub fn values(&self, fallback: (f64, f64)) -> Result<Vec<f64>> {
        if self.resolution < 3 {
            return Err(Error::BadParameter(format!("grid resolution {} < 3", self.resolution)));
        }
        let (lo, hi) = self.domain.unwrap_or(fallback);
        if !(lo < hi) {
            return Err(Error::BadParameter(format!("empty grid domain [{lo}, {hi}]")));
        }
        let n = self.resolution;
        let mut v: Vec<f64> = (0..n)
            .map(|j| lo + (hi - lo) * j as f64 / (n - 1) as f64)
            .collect();
        v[n - 1] = hi;
        let mid = 0.5 * (lo + hi);
        if n % 2 == 1 {
            v[n / 2] = mid;
        } else {
            v.insert(n / 2, mid);
        }
        Ok(v)
    }

    /// Largest resolution whose grid over `dims` coordinates fits the cap.
    pub fn fitting(dims: usize, max_resolution: usize) -> Self {
        let mut r = max_resolution.max(3);
        while r > 3 && grid_size(r, dims) > GRID_CAP {
            r -= 1;
        }
        Self::new(r)
    }
}

fn grid_size(resolution: usize, dims: usize) -> f64 {
    let len = if resolution % 2 == 1 { resolution } else { resolution + 1 };
    (len as f64).powi(dims as i32)
}

fn check_cap(len: usize, dims: usize) -> Result<usize> {
    let points = (len as f64).powi(dims as i32);
    if points > GRID_CAP {
        return Err(Error::GridTooLarge { points });
    }
    Ok(points as usize)
}

/// Decodes grid index `idx` into per-dimension value indices.
fn decode(mut idx: usize, len: usize, out: &mut [usize]) {
    for o in out.iter_mut().rev() {
        *o = idx % len;
        idx /= len;
    }
}

fn plain_entropy(phi: &PhiSpec, w: &[f64], v: &[f64]) -> f64 {
    let mut mean = 0.0;
    let mut e = 0.0;
    for (p, x) in w.iter().zip(v) {
        mean += p * x;
        e += p * phi.eval(*x);
    }
    e - phi.eval(mean)
}

/// Global grid minimum of `H_Φ(f) − Σ λ_i H_Φ(E[f|X_i])` over functions on
/// the support. Ties resolve to the lowest grid index.
pub fn brute_min_objective(
    d: &JointDist,
    phi: &PhiSpec,
    lambda: &LambdaPoint,
    grid: &GridSpec,
) -> Result<(f64, JointFunction)> {
    lambda.require_k(d.k())?;
    let values = grid.values(phi.domain())?;
    let support = d.support_indices();
    let n = support.len();
    let total = check_cap(values.len(), n)?;
    let p: Vec<f64> = support.iter().map(|&a| d.probs()[a]).collect();
    let terms: Vec<(f64, Vec<usize>, Vec<f64>)> = (0..d.k())
        .filter(|&i| lambda.values[i] > 0.0)
        .map(|i| {
            let cells: Vec<usize> = support.iter().map(|&a| d.symbol(a, i)).collect();
            let mut mass = vec![0.0; d.sizes()[i]];
            for (c, w) in cells.iter().zip(&p) {
                mass[*c] += w;
            }
            (lambda.values[i], cells, mass)
        })
        .collect();
    let len = values.len();
    let chunk = (total / 256).max(1);
    let chunks = total.div_ceil(chunk);
    let partial = par::map_range(chunks, |c| {
        let mut idx = vec![0; n];
        let mut f = vec![0.0; n];
        let mut best = (f64::INFINITY, usize::MAX);
        for g in c * chunk..((c + 1) * chunk).min(total) {
            decode(g, len, &mut idx);
            for (fi, &j) in f.iter_mut().zip(&idx) {
                *fi = values[j];
            }
            let mut gap = plain_entropy(phi, &p, &f);
            for (l, cells, mass) in &terms {
                let mut acc = vec![0.0; mass.len()];
                for ((cell, w), v) in cells.iter().zip(&p).zip(&f) {
                    acc[*cell] += w * v;
                }
                let cond: Vec<f64> = acc
                    .iter()
                    .zip(mass)
                    .map(|(a, m)| if *m > 0.0 { a / m } else { 0.0 })
                    .collect();
                gap -= l * plain_entropy(phi, mass, &cond);
            }
            if gap < best.0 {
                best = (gap, g);
            }
        }
        best
    });
    let (gap, at) = partial
        .into_iter()
        .fold((f64::INFINITY, usize::MAX), |a, b| if b.0 < a.0 { b } else { a });
    let mut idx = vec![0; n];
    decode(at.min(total.saturating_sub(1)), len, &mut idx);
    let mid = values[len / 2];
    let mut out = vec![mid; d.len()];
    for (k, &a) in support.iter().enumerate() {
        out[a] = values[idx[k]];
    }
    Ok((gap, JointFunction::new(out)))
}

/// Largest Pearson correlation of `(f(X), g(Y))` over gridded non-constant
/// pairs. A lower bound on ρ that converges as the resolution grows.
pub fn brute_maximal_correlation(d: &JointDist, grid: &GridSpec) -> Result<f64> {
    d.require_bipartite()?;
    let values = grid.values((-1.0, 1.0))?;
    let px = d.marginal_probs(0);
    let py = d.marginal_probs(1);
    let xs: Vec<usize> = (0..px.len()).filter(|&x| px[x] > 0.0).collect();
    let ys: Vec<usize> = (0..py.len()).filter(|&y| py[y] > 0.0).collect();
    let (nx, ny) = (xs.len(), ys.len());
    let len = values.len();
    let fx_total = check_cap(len, nx)?;
    let fy_total = check_cap(len, ny)?;
    check_cap(len, nx + ny)?;
    let table: Vec<Vec<f64>> = xs
        .iter()
        .map(|&x| ys.iter().map(|&y| d.probs()[x * py.len() + y]).collect())
        .collect();
    let wx: Vec<f64> = xs.iter().map(|&x| px[x]).collect();
    let wy: Vec<f64> = ys.iter().map(|&y| py[y]).collect();

    // Centered, normalized g vectors are shared by every f.
    let mut gs: Vec<Vec<f64>> = Vec::new();
    let mut idx = vec![0; ny];
    for j in 0..fy_total {
        decode(j, len, &mut idx);
        let g: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
        if let Some(z) = standardize(&wy, &g) {
            gs.push(z);
        }
    }
    let partial = par::map_range(fx_total, |i| {
        let mut idx = vec![0; nx];
        decode(i, len, &mut idx);
        let f: Vec<f64> = idx.iter().map(|&j| values[j]).collect();
        let Some(zf) = standardize(&wx, &f) else {
            return f64::NEG_INFINITY;
        };
        // h(y) = Σ_x p(x,y) zf(x), so E[zf zg] = Σ_y h(y) zg(y).
        let h: Vec<f64> = (0..ny)
            .map(|y| (0..nx).map(|x| table[x][y] * zf[x]).sum())
            .collect();
        gs.iter()
            .map(|zg| h.iter().zip(zg).map(|(a, b)| a * b).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    });
    let best = partial.into_iter().fold(f64::NEG_INFINITY, f64::max);
    Ok(best.max(0.0))
}

fn standardize(w: &[f64], v: &[f64]) -> Option<Vec<f64>> {
    let m: f64 = w.iter().zip(v).map(|(a, b)| a * b).sum();
    let var: f64 = w.iter().zip(v).map(|(a, b)| a * (b - m) * (b - m)).sum();
    if var <= 1e-14 {
        return None;
    }
    let s = var.sqrt();
    Some(v.iter().map(|x| (x - m) / s).collect())
}
