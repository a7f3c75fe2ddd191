//! Discrete joint distributions over `k` finite alphabets.
//!
//! Probabilities are stored as a row-major tensor: the last coordinate varies
//! fastest. Symbols of every alphabet are the indices `0..n`. Atoms of zero
//! probability stay in the tensor but are skipped by every expectation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const INPUT_NORMALIZATION_TOL: f64 = 1e-9;
const CHANNEL_ROW_TOL: f64 = 1e-12;

/// Joint probability tensor with its support mask.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDist {
    sizes: Vec<usize>,
    strides: Vec<usize>,
    probs: Vec<f64>,
    support: Vec<bool>,
}

/// On-disk form of a distribution: `{"alphabet_sizes":[2,2],"probs":[...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistFile {
    pub alphabet_sizes: Vec<usize>,
    pub probs: Vec<f64>,
}

/// A real-valued function on the joint outcome space, same shape as the
/// distribution it is evaluated against.
#[derive(Debug, Clone, PartialEq)]
pub struct JointFunction {
    pub values: Vec<f64>,
}

/// A real-valued function of a single coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalFunction {
    pub coord: usize,
    pub values: Vec<f64>,
}

/// Conditional expectation onto one coordinate. Symbols of zero marginal
/// probability carry the value 0 and are listed in `zero_mass`.
#[derive(Debug, Clone, PartialEq)]
pub struct CondExpectation {
    pub function: MarginalFunction,
    pub zero_mass: Vec<usize>,
}

/// Row-stochastic matrix acting on one coordinate (or, for auxiliary
/// channels, on the flattened joint alphabet).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Channel {
    #[serde(default)]
    pub coord: usize,
    pub matrix: Vec<Vec<f64>>,
}

/// Index map from the joint tensor onto the marginal tensor of a coordinate
/// subset.
#[derive(Debug, Clone)]
pub struct Projection {
    pub coords: Vec<usize>,
    pub sizes: Vec<usize>,
    /// `map[flat]` is the marginal index of joint atom `flat`.
    pub map: Vec<usize>,
}

impl Projection {
    pub fn len(&self) -> usize {
        self.sizes.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn strides_for(sizes: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; sizes.len()];
    for i in (0..sizes.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * sizes[i + 1];
    }
    strides
}

impl JointDist {
    /// Validates and renormalizes a flat probability vector.
    pub fn new(sizes: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(Error::BadShape(format!(
                "need k >= 1 and every alphabet size >= 1, got {sizes:?}"
            )));
        }
        let expected: usize = sizes.iter().product();
        if expected != probs.len() {
            return Err(Error::ShapeMismatch {
                expected,
                got: probs.len(),
            });
        }
        for (index, &value) in probs.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::NegativeProbability { index, value });
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > INPUT_NORMALIZATION_TOL {
            return Err(Error::NotNormalized { sum });
        }
        let probs = probs.into_iter().map(|p| p / sum).collect();
        Ok(Self::from_parts(sizes, probs))
    }

    /// Builds a distribution from a tensor that is already valid.
    pub(crate) fn from_parts(sizes: Vec<usize>, probs: Vec<f64>) -> Self {
        let strides = strides_for(&sizes);
        let support = probs.iter().map(|&p| p > 0.0).collect();
        Self {
            sizes,
            strides,
            probs,
            support,
        }
    }

    pub fn from_file(file: DistFile) -> Result<Self> {
        Self::new(file.alphabet_sizes, file.probs)
    }

    pub fn to_file(&self) -> DistFile {
        DistFile {
            alphabet_sizes: self.sizes.clone(),
            probs: self.probs.clone(),
        }
    }

    /// Number of coordinates.
    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn support(&self) -> &[bool] {
        &self.support
    }

    /// Number of atoms in the tensor (support or not).
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Flat indices of positive-probability atoms.
    pub fn support_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&a| self.support[a]).collect()
    }

    pub fn encode(&self, symbols: &[usize]) -> usize {
        symbols
            .iter()
            .zip(&self.strides)
            .map(|(s, st)| s * st)
            .sum()
    }

    pub fn decode(&self, flat: usize) -> Vec<usize> {
        self.sizes
            .iter()
            .zip(&self.strides)
            .map(|(&n, &st)| (flat / st) % n)
            .collect()
    }

    /// Symbol of coordinate `coord` at joint atom `flat`.
    pub fn symbol(&self, flat: usize, coord: usize) -> usize {
        (flat / self.strides[coord]) % self.sizes[coord]
    }

    fn check_coords(&self, coords: &[usize], allow_empty: bool) -> Result<()> {
        let sorted = coords.windows(2).all(|w| w[0] < w[1]);
        let in_range = coords.iter().all(|&c| c < self.k());
        if !sorted || !in_range || (!allow_empty && coords.is_empty()) {
            return Err(Error::BadCoordinate {
                coords: coords.to_vec(),
                k: self.k(),
            });
        }
        Ok(())
    }

    /// Index map onto the marginal of a sorted, distinct coordinate subset.
    /// The empty subset maps every atom to 0.
    pub fn projection(&self, coords: &[usize]) -> Result<Projection> {
        self.check_coords(coords, true)?;
        let sizes: Vec<usize> = coords.iter().map(|&c| self.sizes[c]).collect();
        let sub_strides = strides_for(&sizes);
        let map = (0..self.len())
            .map(|flat| {
                coords
                    .iter()
                    .zip(&sub_strides)
                    .map(|(&c, &st)| self.symbol(flat, c) * st)
                    .sum()
            })
            .collect();
        Ok(Projection {
            coords: coords.to_vec(),
            sizes,
            map,
        })
    }

    /// Marginal tensor of the coordinates in `proj`.
    pub fn project_probs(&self, proj: &Projection) -> Vec<f64> {
        let mut out = vec![0.0; proj.len().max(1)];
        for (flat, &p) in self.probs.iter().enumerate() {
            out[proj.map[flat]] += p;
        }
        out
    }

    /// Marginal distribution over a non-empty sorted subset of coordinates.
    pub fn marginal(&self, coords: &[usize]) -> Result<JointDist> {
        self.check_coords(coords, false)?;
        let proj = self.projection(coords)?;
        let probs = self.project_probs(&proj);
        Ok(JointDist::from_parts(proj.sizes, probs))
    }

    /// Marginal probability vector of one coordinate.
    pub fn marginal_probs(&self, coord: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.sizes[coord]];
        for (flat, &p) in self.probs.iter().enumerate() {
            out[self.symbol(flat, coord)] += p;
        }
        out
    }

    /// Number of positive-probability symbols of one coordinate.
    pub fn support_size(&self, coord: usize) -> usize {
        self.marginal_probs(coord).iter().filter(|&&p| p > 0.0).count()
    }

    /// `E[f]` over the support.
    pub fn expect(&self, f: &JointFunction) -> f64 {
        self.probs
            .iter()
            .zip(&f.values)
            .filter(|(&p, _)| p > 0.0)
            .map(|(&p, &v)| p * v)
            .sum()
    }

    /// Conditional expectation onto a coordinate subset, returned as a vector
    /// over the marginal tensor of `proj`. Zero-mass cells hold 0.
    pub fn cond_expect_on(&self, f: &JointFunction, proj: &Projection) -> Vec<f64> {
        let n = proj.len().max(1);
        let mut mass = vec![0.0; n];
        let mut acc = vec![0.0; n];
        for flat in 0..self.len() {
            let p = self.probs[flat];
            if p > 0.0 {
                let cell = proj.map[flat];
                mass[cell] += p;
                acc[cell] += p * f.values[flat];
            }
        }
        acc.iter()
            .zip(&mass)
            .map(|(&a, &m)| if m > 0.0 { a / m } else { 0.0 })
            .collect()
    }

    /// `E[f | X_i]` as a function of `X_i`.
    pub fn cond_expectation(&self, f: &JointFunction, coord: usize) -> Result<CondExpectation> {
        self.check_coords(&[coord], false)?;
        self.check_function(f)?;
        let proj = self.projection(&[coord])?;
        let values = self.cond_expect_on(f, &proj);
        let zero_mass = self
            .marginal_probs(coord)
            .iter()
            .enumerate()
            .filter(|(_, &p)| p <= 0.0)
            .map(|(x, _)| x)
            .collect();
        Ok(CondExpectation {
            function: MarginalFunction { coord, values },
            zero_mass,
        })
    }

    pub fn check_function(&self, f: &JointFunction) -> Result<()> {
        if f.values.len() != self.len() {
            return Err(Error::ShapeMismatch {
                expected: self.len(),
                got: f.values.len(),
            });
        }
        Ok(())
    }

    /// Largest deviation `|p(x) - prod_i p(x_i)|` over all atoms.
    pub fn independence_deviation(&self) -> f64 {
        let marginals: Vec<Vec<f64>> = (0..self.k()).map(|i| self.marginal_probs(i)).collect();
        (0..self.len())
            .map(|flat| {
                let prod: f64 = (0..self.k())
                    .map(|i| marginals[i][self.symbol(flat, i)])
                    .product();
                (self.probs[flat] - prod).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn require_bipartite(&self) -> Result<()> {
        if self.k() != 2 {
            return Err(Error::NotBipartite { k: self.k() });
        }
        Ok(())
    }
}

impl JointFunction {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn constant(d: &JointDist, c: f64) -> Self {
        Self {
            values: vec![c; d.len()],
        }
    }

    /// Tabulates `f` at every atom, passing the decoded symbol tuple.
    pub fn from_fn(d: &JointDist, f: impl Fn(&[usize]) -> f64) -> Self {
        Self {
            values: (0..d.len()).map(|flat| f(&d.decode(flat))).collect(),
        }
    }

    /// Lifts a single-coordinate function to the joint space.
    pub fn lift(d: &JointDist, g: &MarginalFunction) -> Self {
        Self {
            values: (0..d.len())
                .map(|flat| g.values[d.symbol(flat, g.coord)])
                .collect(),
        }
    }

    /// `f_1(X_1) + ... + f_m(X_m)` for single-coordinate summands.
    pub fn sum_of(d: &JointDist, parts: &[MarginalFunction]) -> Self {
        let mut values = vec![0.0; d.len()];
        for g in parts {
            for (flat, v) in values.iter_mut().enumerate() {
                *v += g.values[d.symbol(flat, g.coord)];
            }
        }
        Self { values }
    }

    /// Variance under `d`, ignoring zero-probability atoms.
    pub fn variance(&self, d: &JointDist) -> f64 {
        let mean = d.expect(self);
        d.probs()
            .iter()
            .zip(&self.values)
            .filter(|(&p, _)| p > 0.0)
            .map(|(&p, &v)| p * (v - mean) * (v - mean))
            .sum()
    }
}

impl MarginalFunction {
    pub fn new(coord: usize, values: Vec<f64>) -> Self {
        Self { coord, values }
    }

    pub fn mean(&self, marginal: &[f64]) -> f64 {
        marginal.iter().zip(&self.values).map(|(p, v)| p * v).sum()
    }

    pub fn variance(&self, marginal: &[f64]) -> f64 {
        let m = self.mean(marginal);
        marginal
            .iter()
            .zip(&self.values)
            .map(|(p, v)| p * (v - m) * (v - m))
            .sum()
    }
}

impl Channel {
    pub fn new(coord: usize, matrix: Vec<Vec<f64>>) -> Result<Self> {
        let ch = Self { coord, matrix };
        ch.validate()?;
        Ok(ch)
    }

    pub fn validate(&self) -> Result<()> {
        let cols = self.matrix.first().map(Vec::len).unwrap_or(0);
        if self.matrix.is_empty() || cols == 0 {
            return Err(Error::InvalidChannel("empty matrix".into()));
        }
        for (r, row) in self.matrix.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::InvalidChannel(format!(
                    "row {r} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            if row.iter().any(|&v| !v.is_finite() || v < 0.0) {
                return Err(Error::InvalidChannel(format!("row {r} has a negative entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > CHANNEL_ROW_TOL {
                return Err(Error::InvalidChannel(format!("row {r} sums to {sum}")));
            }
        }
        Ok(())
    }

    pub fn inputs(&self) -> usize {
        self.matrix.len()
    }

    pub fn outputs(&self) -> usize {
        self.matrix[0].len()
    }

    pub fn identity(coord: usize, n: usize) -> Self {
        let matrix = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self { coord, matrix }
    }

    /// Binary symmetric channel.
    pub fn bsc(coord: usize, crossover: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&crossover) {
            return Err(Error::BadParameter(format!("crossover {crossover} not in [0,1]")));
        }
        Self::new(
            coord,
            vec![
                vec![1.0 - crossover, crossover],
                vec![crossover, 1.0 - crossover],
            ],
        )
    }

    /// Channel that always outputs `symbol`.
    pub fn constant(coord: usize, inputs: usize, outputs: usize, symbol: usize) -> Self {
        let row: Vec<f64> = (0..outputs)
            .map(|j| if j == symbol { 1.0 } else { 0.0 })
            .collect();
        Self {
            coord,
            matrix: vec![row; inputs],
        }
    }

    pub fn random<R: Rng + ?Sized>(coord: usize, inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let matrix = (0..inputs)
            .map(|_| random_simplex(outputs, rng))
            .collect();
        Self { coord, matrix }
    }
}

/// Distribution of `(X_1 Y_1, ..., X_k Y_k)` for independent `X_[k]`, `Y_[k]`.
/// Symbol `(x_i, y_i)` of coordinate `i` is encoded as `x_i * |Y_i| + y_i`.
pub fn pair_product(dx: &JointDist, dy: &JointDist) -> Result<JointDist> {
    if dx.k() != dy.k() {
        return Err(Error::ArityMismatch {
            left: dx.k(),
            right: dy.k(),
        });
    }
    let sizes: Vec<usize> = dx.sizes.iter().zip(&dy.sizes).map(|(a, b)| a * b).collect();
    let strides = strides_for(&sizes);
    let mut probs = vec![0.0; sizes.iter().product()];
    for ix in 0..dx.len() {
        let px = dx.probs[ix];
        for iy in 0..dy.len() {
            let flat: usize = (0..dx.k())
                .map(|i| (dx.symbol(ix, i) * dy.sizes[i] + dy.symbol(iy, i)) * strides[i])
                .sum();
            probs[flat] = px * dy.probs[iy];
        }
    }
    Ok(JointDist::from_parts(sizes, probs))
}

/// Pushes `d` through independent per-coordinate channels.
pub fn apply_channels(d: &JointDist, chans: &[Channel]) -> Result<JointDist> {
    if chans.len() != d.k() {
        return Err(Error::ShapeMismatch {
            expected: d.k(),
            got: chans.len(),
        });
    }
    for (i, ch) in chans.iter().enumerate() {
        ch.validate()?;
        if ch.coord != i || ch.inputs() != d.sizes[i] {
            return Err(Error::ShapeMismatch {
                expected: d.sizes[i],
                got: ch.inputs(),
            });
        }
    }
    let mut sizes = d.sizes.clone();
    let mut probs = d.probs.clone();
    for (axis, ch) in chans.iter().enumerate() {
        let pre: usize = sizes[..axis].iter().product();
        let post: usize = sizes[axis + 1..].iter().product();
        let (n_in, n_out) = (ch.inputs(), ch.outputs());
        let mut next = vec![0.0; pre * n_out * post];
        for a in 0..pre {
            for y in 0..n_out {
                for b in 0..post {
                    let mut acc = 0.0;
                    for x in 0..n_in {
                        acc += probs[(a * n_in + x) * post + b] * ch.matrix[x][y];
                    }
                    next[(a * n_out + y) * post + b] = acc;
                }
            }
        }
        sizes[axis] = n_out;
        probs = next;
    }
    Ok(JointDist::from_parts(sizes, probs))
}

/// Named distribution families.
#[derive(Debug, Clone, PartialEq)]
pub enum Canonical {
    /// Doubly symmetric binary source: uniform bits with `P(X != Y) = (1-λ)/2`.
    Dsbs { lambda: f64 },
    /// Uniform on `{(x1, x2, x1 xor x2)}`.
    XorTriple,
    /// Joint law of `(S_n, S_m)` for partial sums of i.i.d. Bernoulli(q).
    SumIidBernoulli { q: f64, n: usize, m: usize },
    /// `k` identical copies of a base distribution.
    EqualCopies { k: usize, base: Vec<f64> },
    /// Three atoms `p(000)=a`, `p(110)=b`, `p(101)=1-a-b`.
    TildeDegenerate { a: f64, b: f64 },
}

fn binomial_pmf(n: usize, q: f64) -> Vec<f64> {
    let mut pmf = vec![0.0; n + 1];
    let mut coeff = 1.0;
    for (s, p) in pmf.iter_mut().enumerate() {
        if s > 0 {
            coeff = coeff * (n + 1 - s) as f64 / s as f64;
        }
        *p = coeff * q.powi(s as i32) * (1.0 - q).powi((n - s) as i32);
    }
    pmf
}

pub fn canonical(name: &Canonical) -> Result<JointDist> {
    match *name {
        Canonical::Dsbs { lambda } => {
            if !(0.0..=1.0).contains(&lambda) {
                return Err(Error::BadParameter(format!("dsbs lambda {lambda} not in [0,1]")));
            }
            let same = (1.0 + lambda) / 4.0;
            let diff = (1.0 - lambda) / 4.0;
            Ok(JointDist::from_parts(vec![2, 2], vec![same, diff, diff, same]))
        }
        Canonical::XorTriple => {
            let mut probs = vec![0.0; 8];
            for x1 in 0..2 {
                for x2 in 0..2 {
                    probs[x1 * 4 + x2 * 2 + (x1 ^ x2)] = 0.25;
                }
            }
            Ok(JointDist::from_parts(vec![2, 2, 2], probs))
        }
        Canonical::SumIidBernoulli { q, n, m } => {
            if !(q > 0.0 && q < 1.0) || m == 0 || m > n {
                return Err(Error::BadParameter(format!(
                    "sum_iid_bernoulli needs q in (0,1) and 1 <= m <= n, got q={q}, n={n}, m={m}"
                )));
            }
            let head = binomial_pmf(m, q);
            let tail = binomial_pmf(n - m, q);
            let mut probs = vec![0.0; (n + 1) * (m + 1)];
            for (sm, &ph) in head.iter().enumerate() {
                for (rest, &pt) in tail.iter().enumerate() {
                    probs[(sm + rest) * (m + 1) + sm] = ph * pt;
                }
            }
            let total: f64 = probs.iter().sum();
            probs.iter_mut().for_each(|p| *p /= total);
            Ok(JointDist::from_parts(vec![n + 1, m + 1], probs))
        }
        Canonical::EqualCopies { k, ref base } => {
            if k == 0 {
                return Err(Error::BadParameter("equal_copies needs k >= 1".into()));
            }
            let base = JointDist::new(vec![base.len()], base.clone())
                .map_err(|e| Error::BadParameter(format!("equal_copies base: {e}")))?;
            let n = base.len();
            let sizes = vec![n; k];
            let strides = strides_for(&sizes);
            let mut probs = vec![0.0; n.pow(k as u32)];
            for (x, &p) in base.probs.iter().enumerate() {
                probs[strides.iter().map(|s| s * x).sum::<usize>()] = p;
            }
            Ok(JointDist::from_parts(sizes, probs))
        }
        Canonical::TildeDegenerate { a, b } => {
            if !(a > 0.0 && b > 0.0 && a + b < 1.0) {
                return Err(Error::BadParameter(format!(
                    "tilde_degenerate needs a, b > 0 with a + b < 1, got a={a}, b={b}"
                )));
            }
            let mut probs = vec![0.0; 8];
            probs[0b000] = a;
            probs[0b110] = b;
            probs[0b101] = 1.0 - a - b;
            Ok(JointDist::from_parts(vec![2, 2, 2], probs))
        }
    }
}

pub fn dsbs(lambda: f64) -> Result<JointDist> {
    canonical(&Canonical::Dsbs { lambda })
}

pub fn xor_triple() -> JointDist {
    canonical(&Canonical::XorTriple).expect("fixed parameters")
}

pub fn sum_iid_bernoulli(q: f64, n: usize, m: usize) -> Result<JointDist> {
    canonical(&Canonical::SumIidBernoulli { q, n, m })
}

pub fn equal_copies(k: usize, base: &[f64]) -> Result<JointDist> {
    canonical(&Canonical::EqualCopies {
        k,
        base: base.to_vec(),
    })
}

pub fn tilde_degenerate(a: f64, b: f64) -> Result<JointDist> {
    canonical(&Canonical::TildeDegenerate { a, b })
}

/// Product of independent marginals.
pub fn independent(marginals: &[Vec<f64>]) -> Result<JointDist> {
    let mut d = JointDist::new(vec![marginals[0].len()], marginals[0].clone())?;
    for m in &marginals[1..] {
        let next = JointDist::new(vec![m.len()], m.clone())?;
        let sizes: Vec<usize> = d.sizes.iter().chain(&next.sizes).copied().collect();
        let probs = d
            .probs
            .iter()
            .flat_map(|&p| next.probs.iter().map(move |&q| p * q))
            .collect();
        d = JointDist::from_parts(sizes, probs);
    }
    Ok(d)
}

/// Uniformly random point on the probability simplex.
pub fn random_simplex<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Random joint distribution. Each atom is zeroed independently with
/// probability `zero_fraction`; at least one atom keeps positive mass.
pub fn random_joint<R: Rng + ?Sized>(sizes: &[usize], zero_fraction: f64, rng: &mut R) -> JointDist {
    let n: usize = sizes.iter().product();
    let mut w = random_simplex(n, rng);
    if zero_fraction > 0.0 {
        let keep = rng.gen_range(0..n);
        for (a, v) in w.iter_mut().enumerate() {
            if a != keep && rng.gen::<f64>() < zero_fraction {
                *v = 0.0;
            }
        }
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= s);
    }
    JointDist::from_parts(sizes.to_vec(), w)
}
