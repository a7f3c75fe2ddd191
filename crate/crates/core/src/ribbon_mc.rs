//! Exact MC-ribbon machinery built on the Gram matrix of per-coordinate
//! orthonormal bases.
//!
//! For `f_i = Σ_j c_ij f_ij` the Gram matrix gives `Var[Σ f_i] = cᵀMc`, so
//! every membership question for Φ(t) = t² reduces to a PSD test.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::dist::{JointDist, JointFunction, MarginalFunction};
use crate::error::{Error, Result};
use crate::par;

pub const PSD_TOL: f64 = 1e-9;
const BASIS_DROP: f64 = 1e-10;

/// A point λ ∈ [0,1]^k.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaPoint {
    pub values: Vec<f64>,
}

impl LambdaPoint {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::BadLambda("empty lambda".into()));
        }
        for (i, &v) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::BadLambda(format!("lambda_{} = {v} not in [0,1]", i + 1)));
            }
        }
        Ok(Self { values })
    }

    pub fn k(&self) -> usize {
        self.values.len()
    }

    pub fn require_k(&self, k: usize) -> Result<()> {
        if self.k() != k {
            return Err(Error::BadLambda(format!(
                "lambda has {} entries, distribution has {k} coordinates",
                self.k()
            )));
        }
        Ok(())
    }
}

/// Block Gram matrix `m[(i,j),(i',j')] = E[f_ij(X_i) f_i'j'(X_i')]`.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    pub block_dims: Vec<usize>,
    pub offsets: Vec<usize>,
    pub m: DMatrix<f64>,
    /// Per coordinate, the zero-mean orthonormal basis functions.
    pub basis: Vec<Vec<MarginalFunction>>,
    pub alphabet_sizes: Vec<usize>,
}

impl GramMatrix {
    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.dim() == 0 {
            return Vec::new();
        }
        let mut e: Vec<f64> = SymmetricEigen::new(self.m.clone()).eigenvalues.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }

    /// Block index of each row.
    pub fn block_of(&self) -> Vec<usize> {
        self.block_dims
            .iter()
            .enumerate()
            .flat_map(|(i, &n)| std::iter::repeat_n(i, n))
            .collect()
    }

    /// Single-coordinate functions `f_i = Σ_j c_ij f_ij` for a coefficient vector.
    pub fn functions(&self, c: &[f64]) -> Vec<MarginalFunction> {
        self.basis
            .iter()
            .enumerate()
            .map(|(i, fs)| {
                let mut values = vec![0.0; self.alphabet_sizes[i]];
                for (j, f) in fs.iter().enumerate() {
                    let cij = c[self.offsets[i] + j];
                    for (v, b) in values.iter_mut().zip(&f.values) {
                        *v += cij * b;
                    }
                }
                MarginalFunction::new(i, values)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Member,
    NonMember,
}

/// Single-coordinate functions violating a defining inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub coefficients: Vec<f64>,
    pub functions: Vec<MarginalFunction>,
    /// The defining inequality re-evaluated from the distribution.
    pub gap: f64,
}

impl Witness {
    /// `Σ_i f_i(X_i)` on the joint space.
    pub fn joint(&self, d: &JointDist) -> JointFunction {
        let parts: Vec<MarginalFunction> =
            self.functions.iter().filter(|f| !f.values.is_empty()).cloned().collect();
        JointFunction::sum_of(d, &parts)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MembershipResult {
    pub verdict: Verdict,
    /// Smallest eigenvalue of the tested matrix (+∞ when it is empty).
    pub min_eigenvalue: f64,
    pub witness: Option<Witness>,
}

impl MembershipResult {
    pub fn is_member(&self) -> bool {
        self.verdict == Verdict::Member
    }
}

fn inner(p: &[f64], u: &[f64], v: &[f64]) -> f64 {
    p.iter().zip(u).zip(v).map(|((p, a), b)| p * a * b).sum()
}

fn coordinate_basis(px: &[f64], coord: usize) -> Vec<MarginalFunction> {
    let mut order: Vec<usize> = (0..px.len()).filter(|&s| px[s] > 0.0).collect();
    order.sort_by(|&a, &b| px[b].total_cmp(&px[a]));
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for &s in &order {
        let mut v: Vec<f64> = (0..px.len())
            .map(|x| if x == s { 1.0 } else { 0.0 } - px[s])
            .collect();
        for _ in 0..2 {
            for b in &basis {
                let c = inner(px, &v, b);
                v.iter_mut().zip(b).for_each(|(vi, bi)| *vi -= c * bi);
            }
        }
        let norm = inner(px, &v, &v).sqrt();
        if norm >= BASIS_DROP {
            v.iter_mut().for_each(|vi| *vi /= norm);
            basis.push(v);
        }
    }
    basis
        .into_iter()
        .map(|v| MarginalFunction::new(coord, v))
        .collect()
}

/// Builds the Gram matrix from weighted Gram–Schmidt on centered indicators.
pub fn gram_matrix(d: &JointDist) -> GramMatrix {
    let k = d.k();
    let marginals: Vec<Vec<f64>> = (0..k).map(|i| d.marginal_probs(i)).collect();
    let basis: Vec<Vec<MarginalFunction>> =
        (0..k).map(|i| coordinate_basis(&marginals[i], i)).collect();
    let block_dims: Vec<usize> = basis.iter().map(Vec::len).collect();
    let mut offsets = vec![0; k];
    for i in 1..k {
        offsets[i] = offsets[i - 1] + block_dims[i - 1];
    }
    let n: usize = block_dims.iter().sum();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..k {
        for (j, f) in basis[i].iter().enumerate() {
            for (j2, g) in basis[i].iter().enumerate() {
                m[(offsets[i] + j, offsets[i] + j2)] = inner(&marginals[i], &f.values, &g.values);
            }
        }
        for i2 in i + 1..k {
            let pair = d.marginal(&[i, i2]).expect("distinct sorted coordinates");
            let n2 = d.sizes()[i2];
            for (j, f) in basis[i].iter().enumerate() {
                for (j2, g) in basis[i2].iter().enumerate() {
                    let v: f64 = pair
                        .probs()
                        .iter()
                        .enumerate()
                        .map(|(a, &p)| p * f.values[a / n2] * g.values[a % n2])
                        .sum();
                    m[(offsets[i] + j, offsets[i2] + j2)] = v;
                    m[(offsets[i2] + j2, offsets[i] + j)] = v;
                }
            }
        }
    }
    GramMatrix {
        block_dims,
        offsets,
        m,
        basis,
        alphabet_sizes: d.sizes().to_vec(),
    }
}

/// Smallest eigenvalue and its unit eigenvector.
fn min_eigen(a: DMatrix<f64>) -> (f64, DVector<f64>) {
    if a.nrows() == 0 {
        return (f64::INFINITY, DVector::zeros(0));
    }
    let eig = SymmetricEigen::new(a);
    let mut best = 0;
    for i in 1..eig.eigenvalues.len() {
        if eig.eigenvalues[i] < eig.eigenvalues[best] {
            best = i;
        }
    }
    (eig.eigenvalues[best], eig.eigenvectors.column(best).into_owned())
}

fn sub_matrix(m: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), rows.len(), |a, b| m[(rows[a], rows[b])])
}

fn var_of(d: &JointDist, f: &MarginalFunction) -> f64 {
    f.variance(&d.marginal_probs(f.coord))
}

/// Gap `Σ_i Var[f_i]/λ_i − Var[Σ_i f_i]` over coordinates with λ_i > 0.
pub fn lambda_inverse_gap(d: &JointDist, lambda: &LambdaPoint, fs: &[MarginalFunction]) -> f64 {
    let kept: Vec<MarginalFunction> = fs
        .iter()
        .filter(|f| lambda.values[f.coord] > 0.0 && !f.values.is_empty())
        .cloned()
        .collect();
    let weighted: f64 = kept.iter().map(|f| var_of(d, f) / lambda.values[f.coord]).sum();
    weighted - JointFunction::sum_of(d, &kept).variance(d)
}

/// Gap `Var[f] − Σ_i λ_i Var[E[f|X_i]]` of the MC-ribbon inequality.
pub fn mc_gap(d: &JointDist, lambda: &LambdaPoint, f: &JointFunction) -> f64 {
    let mut rhs = 0.0;
    for i in 0..d.k() {
        if lambda.values[i] > 0.0 {
            let ce = d.cond_expectation(f, i).expect("coordinate in range");
            rhs += lambda.values[i] * var_of(d, &ce.function);
        }
    }
    f.variance(d) - rhs
}

/// Gap `Var[Σ f_i] − Σ_i λ_i Var[f_i]` of the S̃ inequality.
pub fn tilde_gap(d: &JointDist, lambda: &LambdaPoint, fs: &[MarginalFunction]) -> f64 {
    let parts: Vec<MarginalFunction> = fs.iter().filter(|f| !f.values.is_empty()).cloned().collect();
    let rhs: f64 = parts.iter().map(|f| lambda.values[f.coord] * var_of(d, f)).sum();
    JointFunction::sum_of(d, &parts).variance(d) - rhs
}

fn result_from(
    min_eigenvalue: f64,
    witness: impl FnOnce() -> Witness,
) -> MembershipResult {
    if min_eigenvalue >= -PSD_TOL {
        MembershipResult {
            verdict: Verdict::Member,
            min_eigenvalue,
            witness: None,
        }
    } else {
        MembershipResult {
            verdict: Verdict::NonMember,
            min_eigenvalue,
            witness: Some(witness()),
        }
    }
}

/// Membership in the MC-ribbon through `Λ⁻¹ − M ⪰ 0`. Blocks with λ_i = 0
/// are removed first since their constraint is vacuous.
pub fn mc_membership(d: &JointDist, lambda: &LambdaPoint) -> Result<MembershipResult> {
    lambda.require_k(d.k())?;
    Ok(mc_membership_gram(d, &gram_matrix(d), lambda))
}

/// Same as [`mc_membership`] with a precomputed Gram matrix.
pub fn mc_membership_gram(d: &JointDist, g: &GramMatrix, lambda: &LambdaPoint) -> MembershipResult {
    let blocks = g.block_of();
    let rows: Vec<usize> = (0..g.dim()).filter(|&r| lambda.values[blocks[r]] > 0.0).collect();
    let mut a = -sub_matrix(&g.m, &rows);
    for (i, &r) in rows.iter().enumerate() {
        a[(i, i)] += 1.0 / lambda.values[blocks[r]];
    }
    let (min, v) = min_eigen(a);
    result_from(min, || {
        let mut c = vec![0.0; g.dim()];
        for (i, &r) in rows.iter().enumerate() {
            c[r] = v[i];
        }
        let functions = g.functions(&c);
        let gap = lambda_inverse_gap(d, lambda, &functions);
        Witness {
            coefficients: c,
            functions,
            gap,
        }
    })
}

/// Membership through `M − MΛM ⪰ 0`. A negative eigenvector yields
/// `f = Σ f_i` violating `Var f ≥ Σ λ_i Var E[f|X_i]` directly.
pub fn mc_membership_sprime(d: &JointDist, lambda: &LambdaPoint) -> Result<MembershipResult> {
    lambda.require_k(d.k())?;
    let g = gram_matrix(d);
    Ok(sprime_membership_gram(d, &g, lambda))
}

/// Same as [`mc_membership_sprime`] with a precomputed Gram matrix.
pub fn sprime_membership_gram(d: &JointDist, g: &GramMatrix, lambda: &LambdaPoint) -> MembershipResult {
    let blocks = g.block_of();
    let l = DMatrix::from_fn(g.dim(), g.dim(), |a, b| {
        if a == b {
            lambda.values[blocks[a]]
        } else {
            0.0
        }
    });
    let mut a = &g.m - &g.m * l * &g.m;
    a = (&a + a.transpose()) * 0.5;
    let (min, v) = min_eigen(a);
    result_from(min, || {
        let c: Vec<f64> = v.iter().copied().collect();
        let functions = g.functions(&c);
        let f = JointFunction::sum_of(d, &functions);
        let gap = mc_gap(d, lambda, &f);
        Witness {
            coefficients: c,
            functions,
            gap,
        }
    })
}

/// Membership in S̃ through `M − Λ_block ⪰ 0`.
pub fn tilde_membership(d: &JointDist, lambda: &LambdaPoint) -> Result<MembershipResult> {
    lambda.require_k(d.k())?;
    let g = gram_matrix(d);
    Ok(tilde_membership_gram(d, &g, lambda))
}

/// Same as [`tilde_membership`] with a precomputed Gram matrix.
pub fn tilde_membership_gram(d: &JointDist, g: &GramMatrix, lambda: &LambdaPoint) -> MembershipResult {
    let blocks = g.block_of();
    let mut a = g.m.clone();
    for r in 0..g.dim() {
        a[(r, r)] -= lambda.values[blocks[r]];
    }
    let (min, v) = min_eigen(a);
    result_from(min, || {
        let c: Vec<f64> = v.iter().copied().collect();
        let functions = g.functions(&c);
        let gap = tilde_gap(d, lambda, &functions);
        Witness {
            coefficients: c,
            functions,
            gap,
        }
    })
}

/// Two-coordinate closed form: member iff `(1/λ₁ − 1)(1/λ₂ − 1) ≥ ρ²`,
/// with λ_i = 0 making the constraint vacuous.
pub fn bipartite_closed_form(rho: f64, lambda: &LambdaPoint) -> Result<bool> {
    lambda.require_k(2)?;
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::BadParameter(format!("rho {rho} not in [0,1]")));
    }
    let (l1, l2) = (lambda.values[0], lambda.values[1]);
    if l1 == 0.0 || l2 == 0.0 {
        return Ok(true);
    }
    Ok((1.0 / l1 - 1.0) * (1.0 / l2 - 1.0) >= rho * rho - PSD_TOL)
}

/// Quantities entering the binary-binary-ternary closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct BbtQuantities {
    pub rho12: f64,
    pub rho13: f64,
    pub rho23: f64,
    /// `E[E[g₁|X₃] E[g₂|X₃]]` with the sign convention ρ₁₂ ≥ 0.
    pub r: f64,
    pub sigma_min: f64,
}

pub const GENERICITY_TOL: f64 = 1e-8;

pub fn bbt_quantities(d: &JointDist) -> Result<BbtQuantities> {
    if d.sizes() != [2, 2, 3] {
        return Err(Error::BadShape(format!(
            "expected alphabet sizes [2, 2, 3], got {:?}",
            d.sizes()
        )));
    }
    let g = gram_matrix(d);
    if g.block_dims[0] != 1 || g.block_dims[1] != 1 {
        return Err(Error::NonGeneric { sigma_min: 0.0 });
    }
    let g1 = g.basis[0][0].clone();
    let mut g2 = g.basis[1][0].clone();
    let lift1 = JointFunction::lift(d, &g1);
    let mut rho12 = d.expect(&JointFunction::new(
        lift1
            .values
            .iter()
            .zip(&JointFunction::lift(d, &g2).values)
            .map(|(a, b)| a * b)
            .collect(),
    ));
    if rho12 < 0.0 {
        g2.values.iter_mut().for_each(|v| *v = -*v);
        rho12 = -rho12;
    }
    let a1 = d.cond_expectation(&lift1, 2)?.function.values;
    let a2 = d.cond_expectation(&JointFunction::lift(d, &g2), 2)?.function.values;
    let p3 = d.marginal_probs(2);
    let dot = |u: &[f64], v: &[f64]| inner(&p3, u, v);
    let stack = DMatrix::from_fn(3, 2, |x, i| p3[x].sqrt() * if i == 0 { a1[x] } else { a2[x] });
    let sv = stack.singular_values();
    let sigma_min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(BbtQuantities {
        rho12,
        rho13: dot(&a1, &a1).sqrt(),
        rho23: dot(&a2, &a2).sqrt(),
        r: dot(&a1, &a2),
        sigma_min,
    })
}

/// Closed-form MC-ribbon membership for binary, binary, ternary coordinates.
pub fn bbt_closed_form(d: &JointDist, lambda: &LambdaPoint) -> Result<bool> {
    lambda.require_k(3)?;
    let q = bbt_quantities(d)?;
    if q.sigma_min <= GENERICITY_TOL {
        return Err(Error::NonGeneric {
            sigma_min: q.sigma_min,
        });
    }
    let l = &lambda.values;
    let pair = |rho: f64, a: f64, b: f64| bipartite_closed_form(rho, &LambdaPoint { values: vec![a, b] });
    if l[2] == 0.0 {
        return pair(q.rho12, l[0], l[1]);
    }
    if l[0] == 0.0 {
        return pair(q.rho23, l[1], l[2]);
    }
    if l[1] == 0.0 {
        return pair(q.rho13, l[0], l[2]);
    }
    let t: Vec<f64> = l.iter().map(|v| 1.0 / v - 1.0).collect();
    let c1 = t[0] * t[2] - q.rho13 * q.rho13;
    let c2 = t[1] * t[2] - q.rho23 * q.rho23;
    let cross = t[2] * q.rho12 + q.r;
    Ok(c1 >= -PSD_TOL && c2 >= -PSD_TOL && c1 * c2 - cross * cross >= -PSD_TOL)
}

/// Pearson correlation matrix of an all-binary distribution.
pub fn pearson_matrix(d: &JointDist) -> Result<DMatrix<f64>> {
    let k = d.k();
    if d.sizes().iter().any(|&n| n != 2) {
        return Err(Error::BadShape(format!("expected all-binary alphabets, got {:?}", d.sizes())));
    }
    let mean: Vec<f64> = (0..k).map(|i| d.marginal_probs(i)[1]).collect();
    for (i, &m) in mean.iter().enumerate() {
        if m <= 0.0 || m >= 1.0 {
            return Err(Error::DegenerateMarginal { coord: i });
        }
    }
    let mut r = DMatrix::identity(k, k);
    for i in 0..k {
        for j in i + 1..k {
            let pair = d.marginal(&[i, j])?;
            let cov = pair.probs()[3] - mean[i] * mean[j];
            let v = cov / (mean[i] * (1.0 - mean[i]) * mean[j] * (1.0 - mean[j])).sqrt();
            r[(i, j)] = v;
            r[(j, i)] = v;
        }
    }
    Ok(r)
}

/// Membership for jointly Gaussian (or all-binary) coordinates through
/// `Λ⁻¹ − R ⪰ 0`, deleting rows with λ_i = 0.
pub fn gaussian_mc_membership(r: &DMatrix<f64>, lambda: &LambdaPoint) -> Result<MembershipResult> {
    let k = r.nrows();
    if r.ncols() != k || k == 0 {
        return Err(Error::NotCorrelationMatrix(format!("shape {}x{}", k, r.ncols())));
    }
    lambda.require_k(k)?;
    for i in 0..k {
        if (r[(i, i)] - 1.0).abs() > 1e-9 {
            return Err(Error::NotCorrelationMatrix(format!("diagonal entry {i} is {}", r[(i, i)])));
        }
        for j in 0..k {
            if !r[(i, j)].is_finite() || (r[(i, j)] - r[(j, i)]).abs() > 1e-9 {
                return Err(Error::NotCorrelationMatrix(format!("entry ({i},{j}) breaks symmetry")));
            }
        }
    }
    let (min_r, _) = min_eigen(r.clone());
    if min_r < -PSD_TOL {
        return Err(Error::NotCorrelationMatrix(format!("smallest eigenvalue {min_r:e}")));
    }
    let rows: Vec<usize> = (0..k).filter(|&i| lambda.values[i] > 0.0).collect();
    let mut a = -sub_matrix(r, &rows);
    for (i, &row) in rows.iter().enumerate() {
        a[(i, i)] += 1.0 / lambda.values[row];
    }
    let (min, v) = min_eigen(a);
    Ok(result_from(min, || {
        let mut c = vec![0.0; k];
        for (i, &row) in rows.iter().enumerate() {
            c[row] = v[i];
        }
        Witness {
            coefficients: c,
            functions: Vec::new(),
            gap: min,
        }
    }))
}

/// Structural facts read off the Gram matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureReport {
    pub pairwise_independent: bool,
    pub common_part: bool,
    pub tilde_degenerate: bool,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    /// Zero-mean `f_i`, not all zero, with `Σ f_i = 0` when degenerate.
    pub kernel: Option<Vec<MarginalFunction>>,
}

pub fn detect_structure(d: &JointDist) -> StructureReport {
    let g = gram_matrix(d);
    let blocks = g.block_of();
    let mut max_cross = 0.0f64;
    for a in 0..g.dim() {
        for b in 0..g.dim() {
            if blocks[a] != blocks[b] {
                max_cross = max_cross.max(g.m[(a, b)].abs());
            }
        }
    }
    let eig = g.eigenvalues();
    let min = eig.first().copied().unwrap_or(f64::INFINITY);
    let max = eig.last().copied().unwrap_or(0.0);
    let tilde_degenerate = min <= 1e-8;
    let kernel = tilde_degenerate.then(|| {
        let (_, v) = min_eigen(g.m.clone());
        g.functions(v.as_slice())
    });
    StructureReport {
        pairwise_independent: max_cross < 1e-10,
        common_part: max >= d.k() as f64 - 1e-8,
        tilde_degenerate,
        min_eigenvalue: min,
        max_eigenvalue: max,
        kernel,
    }
}

/// Directions on the probability simplex: for k = 2, `n` evenly spaced
/// points `(1−s, s)`; for k = 3, the barycentric grid with `n` divisions.
pub fn simplex_directions(k: usize, n: usize) -> Result<Vec<Vec<f64>>> {
    match k {
        2 => {
            if n < 2 {
                return Err(Error::BadParameter("need at least 2 directions".into()));
            }
            Ok((0..n)
                .map(|j| {
                    let s = j as f64 / (n - 1) as f64;
                    vec![1.0 - s, s]
                })
                .collect())
        }
        3 => {
            if n < 1 {
                return Err(Error::BadParameter("need at least 1 division".into()));
            }
            let mut out = Vec::new();
            for i in 0..=n {
                for j in 0..=n - i {
                    let l = n - i - j;
                    out.push(vec![i as f64 / n as f64, j as f64 / n as f64, l as f64 / n as f64]);
                }
            }
            Ok(out)
        }
        _ => Err(Error::BadParameter(format!("ray tracing supports k = 2 or 3, got {k}"))),
    }
}

/// One traced ray: the last member found and the first non-member, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct RayPoint {
    pub direction_index: usize,
    pub direction: Vec<f64>,
    pub inner: Vec<f64>,
    pub outer: Option<Vec<f64>>,
}

/// Bisects each ray `r·w` from the simplex face outwards. Relies on the
/// region being down-closed, which holds for every ribbon here.
pub fn trace_rays<F>(directions: &[Vec<f64>], tol: f64, member: F) -> Vec<RayPoint>
where
    F: Fn(&[f64]) -> bool + Sync + Send,
{
    let idx: Vec<usize> = (0..directions.len()).collect();
    par::map_slice(&idx, |&di| {
        let w = &directions[di];
        let wmax = w.iter().fold(0.0f64, |a, &b| a.max(b));
        let at = |r: f64| -> Vec<f64> { w.iter().map(|v| (v * r).min(1.0)).collect() };
        let mut lo = 1.0 / w.iter().sum::<f64>();
        let mut hi = 1.0 / wmax;
        if member(&at(hi)) {
            return RayPoint {
                direction_index: di,
                direction: w.clone(),
                inner: at(hi),
                outer: None,
            };
        }
        while (hi - lo) * wmax > tol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if member(&at(mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        RayPoint {
            direction_index: di,
            direction: w.clone(),
            inner: at(lo),
            outer: Some(at(hi)),
        }
    })
}

/// Boundary of the MC-ribbon along `directions` rays (k = 2 or 3).
pub fn trace_mc_boundary(d: &JointDist, directions: usize, tol: f64) -> Result<Vec<RayPoint>> {
    let dirs = simplex_directions(d.k(), directions)?;
    let g = gram_matrix(d);
    Ok(trace_rays(&dirs, tol, |l| {
        mc_membership_gram(d, &g, &LambdaPoint { values: l.to_vec() }).is_member()
    }))
}

/// `inf (1 − λ₁)/λ₂` over traced member points with λ₂ > 0.
pub fn rho2_from_trace(points: &[RayPoint]) -> f64 {
    points
        .iter()
        .filter(|p| p.inner.len() == 2 && p.inner[1] > 0.0)
        .map(|p| (1.0 - p.inner[0]) / p.inner[1])
        .fold(f64::INFINITY, f64::min)
}

/// Recovers ρ² from a fine trace of the bipartite MC-ribbon boundary, with
/// rays clustered geometrically towards the λ₁ axis. Rays stop at slope
/// 1e-4: closer to the axis, 1/λ₂ grows so large that the absolute PSD
/// tolerance lets points below the curve through.
pub fn rho2_from_mc_ribbon(d: &JointDist) -> Result<f64> {
    d.require_bipartite()?;
    let mut dirs = Vec::new();
    for j in 0..=240 {
        let s = 1e-4 * (0.5f64 / 1e-4).powf(j as f64 / 240.0);
        dirs.push(vec![1.0 - s, s]);
    }
    let g = gram_matrix(d);
    let pts = trace_rays(&dirs, 1e-13, |l| {
        mc_membership_gram(d, &g, &LambdaPoint { values: l.to_vec() }).is_member()
    });
    Ok(rho2_from_trace(&pts))
}

/// Full grid sweep with `n` points per axis on `[0,1]`, row-major order.
pub fn grid_sweep<F>(k: usize, n: usize, member: F) -> Result<Vec<(Vec<f64>, bool)>>
where
    F: Fn(&[f64]) -> bool + Sync + Send,
{
    if n < 2 {
        return Err(Error::BadParameter("grid needs at least 2 points per axis".into()));
    }
    let total = n.checked_pow(k as u32).filter(|&t| t <= 10_000_000).ok_or(Error::GridTooLarge {
        points: (n as f64).powi(k as i32),
    })?;
    Ok(par::map_range(total, |flat| {
        let mut rem = flat;
        let mut l = vec![0.0; k];
        for i in (0..k).rev() {
            l[i] = (rem % n) as f64 / (n - 1) as f64;
            rem /= n;
        }
        let m = member(&l);
        (l, m)
    }))
}
