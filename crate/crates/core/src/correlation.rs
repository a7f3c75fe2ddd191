//! Maximal correlation and Φ-SDPI constants for bipartite distributions.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;

use crate::dist::{JointDist, MarginalFunction};
use crate::error::{Error, Result};
use crate::phi::PhiSpec;
use crate::search::{self, Objective, SearchOpts};

/// Maximal correlation with the optimal pair of functions.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxCorrelation {
    pub rho: f64,
    /// Zero-mean, unit-variance function of the first coordinate.
    pub f: MarginalFunction,
    /// Zero-mean, unit-variance function of the second coordinate.
    pub g: MarginalFunction,
    /// Set when a marginal has fewer than two positive symbols (then ρ = 0).
    pub degenerate: Option<usize>,
}

/// Lower-bound estimate of η_Φ (or η_{Φ,Ψ}) from multi-start ascent.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaEstimate {
    pub value: f64,
    pub witness: MarginalFunction,
    pub lower_bound_rho2: f64,
    pub restarts_used: usize,
    pub converged: bool,
}

fn positive(p: &[f64]) -> Vec<usize> {
    (0..p.len()).filter(|&i| p[i] > 0.0).collect()
}

pub fn maximal_correlation(d: &JointDist) -> Result<f64> {
    Ok(maximal_correlation_full(d)?.rho)
}

/// ρ(X;Y) as the second singular value of `p(x,y)/sqrt(p(x)p(y))`.
pub fn maximal_correlation_full(d: &JointDist) -> Result<MaxCorrelation> {
    d.require_bipartite()?;
    let px = d.marginal_probs(0);
    let py = d.marginal_probs(1);
    let xs = positive(&px);
    let ys = positive(&py);
    let zero = |coord: usize, n: usize| MarginalFunction::new(coord, vec![0.0; n]);
    let degenerate = if xs.len() < 2 {
        Some(0)
    } else if ys.len() < 2 {
        Some(1)
    } else {
        None
    };
    if degenerate.is_some() {
        return Ok(MaxCorrelation {
            rho: 0.0,
            f: zero(0, px.len()),
            g: zero(1, py.len()),
            degenerate,
        });
    }
    let ny = py.len();
    // Deflate the trivial singular pair (sqrt p_x, sqrt p_y) with value 1.
    let q = DMatrix::from_fn(xs.len(), ys.len(), |i, j| {
        let (x, y) = (xs[i], ys[j]);
        let (a, b) = (px[x], py[y]);
        d.probs()[x * ny + y] / (a * b).sqrt() - (a * b).sqrt()
    });
    // Q is rank-deficient by construction, which trips nalgebra's 2x2 SVD
    // step. The augmented matrix [[0, Q], [Qᵀ, 0]] has eigenvalues ±σ and a
    // stable symmetric solver.
    let (n, m) = (xs.len(), ys.len());
    let aug = DMatrix::from_fn(n + m, n + m, |i, j| match (i < n, j < n) {
        (true, false) => q[(i, j - n)],
        (false, true) => q[(j, i - n)],
        _ => 0.0,
    });
    let eig = SymmetricEigen::new(aug);
    let (mut best, mut sigma) = (0, f64::NEG_INFINITY);
    for (i, &s) in eig.eigenvalues.iter().enumerate() {
        if s > sigma {
            best = i;
            sigma = s;
        }
    }
    let w = eig.eigenvectors.column(best);
    let unit = |mut z: DVector<f64>, sqrt_p: DVector<f64>| {
        // At σ = 0 the eigenspace also holds the trivial direction.
        z -= &sqrt_p * sqrt_p.dot(&z);
        let norm = z.norm();
        if norm > 0.0 {
            z /= norm;
        }
        z
    };
    let u = unit(w.rows(0, n).into_owned(), DVector::from_iterator(n, xs.iter().map(|&x| px[x].sqrt())));
    let v = unit(w.rows(n, m).into_owned(), DVector::from_iterator(m, ys.iter().map(|&y| py[y].sqrt())));
    let mut f = vec![0.0; px.len()];
    let mut g = vec![0.0; ny];
    for (i, &x) in xs.iter().enumerate() {
        f[x] = u[i] / px[x].sqrt();
    }
    for (j, &y) in ys.iter().enumerate() {
        g[y] = v[j] / py[y].sqrt();
    }
    Ok(MaxCorrelation {
        rho: sigma.clamp(0.0, 1.0),
        f: MarginalFunction::new(0, f),
        g: MarginalFunction::new(1, g),
        degenerate: None,
    })
}

/// ρ², which lower-bounds η_Φ for every Φ in class 𝓕.
pub fn eta_lower_bound_rho2(d: &JointDist) -> Result<f64> {
    let rho = maximal_correlation(d)?;
    Ok(rho * rho)
}

/// Ratio `H_Ψ(E[f|Y]) / H_Φ(f)` over the positive symbols of X.
struct EtaRatio<'a> {
    phi: &'a PhiSpec,
    psi: &'a PhiSpec,
    px: Vec<f64>,
    py: Vec<f64>,
    /// Joint table restricted to positive symbols, `joint[x][y]`.
    joint: Vec<Vec<f64>>,
    lo: f64,
    hi: f64,
}

impl EtaRatio<'_> {
    fn mean(&self, f: &[f64]) -> f64 {
        self.px.iter().zip(f).map(|(p, v)| p * v).sum()
    }

    fn cond(&self, f: &[f64]) -> Vec<f64> {
        (0..self.py.len())
            .map(|y| {
                let s: f64 = (0..self.px.len()).map(|x| self.joint[x][y] * f[x]).sum();
                (s / self.py[y]).clamp(self.lo, self.hi)
            })
            .collect()
    }

    fn variance(&self, f: &[f64]) -> f64 {
        let m = self.mean(f);
        self.px.iter().zip(f).map(|(p, v)| p * (v - m) * (v - m)).sum()
    }

    fn parts(&self, f: &[f64]) -> (f64, f64, f64, Vec<f64>) {
        let m = self.mean(f).clamp(self.lo, self.hi);
        let g = self.cond(f);
        let h_phi: f64 = self.px.iter().zip(f).map(|(p, &v)| p * self.phi.bregman(v, m)).sum();
        let h_psi: f64 = self.py.iter().zip(&g).map(|(p, &v)| p * self.psi.bregman(v, m)).sum();
        (h_psi, h_phi, m, g)
    }

    fn ratio(&self, f: &[f64]) -> f64 {
        let (a, b, _, _) = self.parts(f);
        if b > 0.0 {
            a / b
        } else {
            0.0
        }
    }
}

impl Objective for EtaRatio<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        let (a, b, _, _) = self.parts(x);
        if b > 0.0 {
            -a / b
        } else {
            f64::INFINITY
        }
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        let (a, b, m, g) = self.parts(x);
        let (dphi_m, dpsi_m) = (self.phi.d1(m), self.psi.d1(m));
        let dpsi_g: Vec<f64> = g.iter().map(|&v| self.psi.d1(v)).collect();
        for i in 0..x.len() {
            let db = self.px[i] * (self.phi.d1(x[i]) - dphi_m);
            let cross: f64 = (0..self.py.len()).map(|y| self.joint[i][y] * dpsi_g[y]).sum();
            let da = cross - self.px[i] * dpsi_m;
            grad[i] = -(da * b - a * db) / (b * b);
        }
    }

    fn project(&self, x: &mut [f64]) {
        x.iter_mut().for_each(|v| *v = v.clamp(self.lo, self.hi));
    }

    fn admissible(&self, x: &[f64]) -> bool {
        self.variance(x) >= 1e-12
    }
}

/// Multi-start estimate of η_Φ(X;Y), or of η_{Φ,Ψ} when `psi` is given.
///
/// The value is attained by the returned witness, so it is a lower bound on
/// the supremum; it is never claimed to be the supremum itself.
pub fn eta_phi(
    d: &JointDist,
    phi: &PhiSpec,
    psi: Option<&PhiSpec>,
    opts: &SearchOpts,
) -> Result<EtaEstimate> {
    opts.validate()?;
    d.require_bipartite()?;
    let psi = psi.unwrap_or(phi);
    let px_all = d.marginal_probs(0);
    let py_all = d.marginal_probs(1);
    let xs = positive(&px_all);
    let ys = positive(&py_all);
    if xs.len() < 2 {
        return Err(Error::DegenerateMarginal { coord: 0 });
    }
    let (plo, phi_hi) = phi.search_box();
    let (qlo, qhi) = psi.search_box();
    let (lo, hi) = (plo.max(qlo), phi_hi.min(qhi));
    if lo >= hi {
        return Err(Error::DomainViolation {
            value: lo,
            lo: psi.domain().0,
            hi: psi.domain().1,
        });
    }
    let ny = py_all.len();
    let problem = EtaRatio {
        phi,
        psi,
        px: xs.iter().map(|&x| px_all[x]).collect(),
        py: ys.iter().map(|&y| py_all[y]).collect(),
        joint: xs
            .iter()
            .map(|&x| ys.iter().map(|&y| d.probs()[x * ny + y]).collect())
            .collect(),
        lo,
        hi,
    };

    let rho = maximal_correlation_full(d)?;
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let dir: Vec<f64> = xs.iter().map(|&x| rho.f.values[x]).collect();
    let scale = dir.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut starts = Vec::with_capacity(opts.restarts);
    if scale > 0.0 {
        for amp in [1e-2, 1e-3, 1e-4, 1e-5] {
            if starts.len() + 1 >= opts.restarts.max(2) {
                break;
            }
            let x0: Vec<f64> = dir.iter().map(|v| mid + amp * half * v / scale).collect();
            if problem.variance(&x0) >= 1e-10 {
                starts.push(x0);
            }
        }
    }
    let mut r = 0;
    while starts.len() < opts.restarts {
        let mut rng = search::restart_rng(opts.seed, r);
        r += 1;
        let mut x0: Vec<f64> = Vec::new();
        for _ in 0..100 {
            x0 = (0..xs.len()).map(|_| rng.gen_range(lo..=hi)).collect();
            if problem.variance(&x0) >= 1e-10 {
                break;
            }
        }
        starts.push(x0);
    }

    let runs = search::multistart(&problem, &starts, opts);
    let best = search::best_index(&runs);
    let run = &runs[best];
    let value = problem.ratio(&run.x).max(0.0);
    let m = problem.mean(&run.x);
    let mut witness = vec![m; px_all.len()];
    for (i, &x) in xs.iter().enumerate() {
        witness[x] = run.x[i];
    }
    Ok(EtaEstimate {
        value,
        witness: MarginalFunction::new(0, witness),
        lower_bound_rho2: rho.rho * rho.rho,
        restarts_used: runs.len(),
        converged: run.converged,
    })
}

/// `H_Ψ(E[f|Y]) / H_Φ(f)` for a function of X, using the plain formula.
pub fn eta_ratio(d: &JointDist, phi: &PhiSpec, psi: &PhiSpec, f: &MarginalFunction) -> Result<f64> {
    d.require_bipartite()?;
    let px = d.marginal_probs(0);
    let py = d.marginal_probs(1);
    let ny = py.len();
    for (x, &p) in px.iter().enumerate() {
        if p > 0.0 {
            phi.check_value(f.values[x])?;
        }
    }
    let g: Vec<f64> = (0..ny)
        .map(|y| {
            if py[y] > 0.0 {
                (0..px.len()).map(|x| d.probs()[x * ny + y] * f.values[x]).sum::<f64>() / py[y]
            } else {
                0.0
            }
        })
        .collect();
    let b = crate::phi::entropy_of(phi, &px, &f.values);
    let a = crate::phi::entropy_of(psi, &py, &g);
    if b <= 0.0 {
        return Err(Error::BadParameter("ratio undefined for constant f".into()));
    }
    Ok(a / b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{dsbs, equal_copies, independent, pair_product};

    #[test]
    fn rho_examples() {
        let d = dsbs(0.6).unwrap();
        assert!((maximal_correlation(&d).unwrap() - 0.6).abs() < 1e-12);
        let ind = independent(&[vec![0.3, 0.7], vec![0.2, 0.3, 0.5]]).unwrap();
        assert!(maximal_correlation(&ind).unwrap() < 1e-12);
        let same = equal_copies(2, &[1.0 / 3.0; 3]).unwrap();
        assert!((maximal_correlation(&same).unwrap() - 1.0).abs() < 1e-12);
        let p = pair_product(&dsbs(0.3).unwrap(), &dsbs(0.6).unwrap()).unwrap();
        assert!((maximal_correlation(&p).unwrap() - 0.6).abs() < 1e-12);
        assert!(matches!(
            maximal_correlation(&crate::dist::xor_triple()),
            Err(Error::NotBipartite { k: 3 })
        ));
    }

    #[test]
    fn rho_witness_is_normalized() {
        let d = JointDist::new(vec![2, 3], vec![0.1, 0.25, 0.05, 0.2, 0.1, 0.3]).unwrap();
        let mc = maximal_correlation_full(&d).unwrap();
        let px = d.marginal_probs(0);
        let py = d.marginal_probs(1);
        assert!(mc.f.mean(&px).abs() < 1e-12);
        assert!((mc.f.variance(&px) - 1.0).abs() < 1e-12);
        assert!((mc.g.variance(&py) - 1.0).abs() < 1e-12);
        let cov: f64 = (0..6)
            .map(|a| d.probs()[a] * mc.f.values[a / 3] * mc.g.values[a % 3])
            .sum();
        assert!((cov - mc.rho).abs() < 1e-12);
    }

    #[test]
    fn degenerate_marginal_gives_zero() {
        let d = JointDist::new(vec![2, 2], vec![0.4, 0.6, 0.0, 0.0]).unwrap();
        let mc = maximal_correlation_full(&d).unwrap();
        assert_eq!(mc.rho, 0.0);
        assert_eq!(mc.degenerate, Some(0));
    }

    #[test]
    fn eta_square_is_rho_squared() {
        let d = JointDist::new(vec![3, 2], vec![0.2, 0.1, 0.05, 0.25, 0.3, 0.1]).unwrap();
        let sq = PhiSpec::square();
        let est = eta_phi(&d, &sq, None, &SearchOpts::for_eta()).unwrap();
        assert!((est.value - est.lower_bound_rho2).abs() < 1e-6, "{est:?}");
    }

    #[test]
    fn eta_independent_is_zero() {
        let d = independent(&[vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap();
        let est = eta_phi(&d, &PhiSpec::xlogx_default(), None, &SearchOpts::for_eta()).unwrap();
        assert!(est.value < 1e-9, "{est:?}");
    }

    #[test]
    fn eta_dsbs_xlogx() {
        let d = dsbs(0.5).unwrap();
        let est = eta_phi(&d, &PhiSpec::xlogx_default(), None, &SearchOpts::for_eta()).unwrap();
        assert!((est.value - 0.25).abs() < 1e-3, "{est:?}");
        assert!(est.value >= est.lower_bound_rho2 - 1e-6);
    }

    #[test]
    fn power_ratio_is_scale_invariant() {
        let d = JointDist::new(vec![3, 2], vec![0.2, 0.1, 0.05, 0.25, 0.3, 0.1]).unwrap();
        let phi = PhiSpec::power(1.5).unwrap();
        let f = MarginalFunction::new(0, vec![0.2, 0.9, 0.5]);
        let base = eta_ratio(&d, &phi, &phi, &f).unwrap();
        for c in [0.1, 0.5, 1.1] {
            let g = MarginalFunction::new(0, f.values.iter().map(|v| c * v).collect());
            let r = eta_ratio(&d, &phi, &phi, &g).unwrap();
            assert!((r - base).abs() < 1e-12 * base.max(1.0));
        }
    }
}
