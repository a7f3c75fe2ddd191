//! Convex generators Φ, Φ-entropy and Φ-mutual information.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::dist::{JointDist, JointFunction};
use crate::error::{Error, Result};

/// Closure type for user-supplied Φ.
pub type PhiFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum PhiKind {
    Square,
    Power { alpha: f64 },
    XLogX,
    BinaryEntropy,
    SymAlpha { alpha: f64 },
    Custom(PhiFn),
}

impl fmt::Debug for PhiKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhiKind::Square => write!(f, "Square"),
            PhiKind::Power { alpha } => write!(f, "Power({alpha})"),
            PhiKind::XLogX => write!(f, "XLogX"),
            PhiKind::BinaryEntropy => write!(f, "BinaryEntropy"),
            PhiKind::SymAlpha { alpha } => write!(f, "SymAlpha({alpha})"),
            PhiKind::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// Outcome of the numerical class-𝓕 check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassF {
    Verified,
    Refuted,
    Unchecked,
}

/// A convex generator on a compact interval.
///
/// `domain` is the box used by searches. `eval_domain` may be wider and is
/// what evaluation accepts; for `t log t` it reaches down to 0 so that
/// deterministic channels and zero-valued functions can be evaluated.
#[derive(Debug, Clone)]
pub struct PhiSpec {
    name: String,
    kind: PhiKind,
    domain: (f64, f64),
    eval_domain: (f64, f64),
    class_f: ClassF,
}

/// Report from [`check_class_f`].
#[derive(Debug, Clone, PartialEq)]
pub struct ClassFReport {
    pub verdict: ClassF,
    /// Smallest normalized margin of Φ⁗Φ″ − 2Φ‴² over the grid.
    pub worst_margin: f64,
    pub worst_at: f64,
    /// Largest second difference of 1/Φ″ (should be ≤ 0).
    pub worst_concavity: f64,
    pub convex: bool,
    pub affine: bool,
}

/// A Φ-entropy value, optionally split into per-cell contributions.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyValue {
    pub value: f64,
    /// `p(s) H_Φ(f | S = s)` for each conditioning cell.
    pub decomposition: Option<Vec<f64>>,
}

const LN2: f64 = std::f64::consts::LN_2;

fn xlogx(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t * t.ln()
    }
}

impl PhiSpec {
    fn builtin(name: String, kind: PhiKind, domain: (f64, f64), eval_domain: (f64, f64)) -> Self {
        let mut spec = Self {
            name,
            kind,
            domain,
            eval_domain,
            class_f: ClassF::Unchecked,
        };
        spec.class_f = check_class_f(&spec, 256).verdict;
        spec
    }

    pub fn square() -> Self {
        Self::builtin("square".into(), PhiKind::Square, (-1.0, 1.0), (-1.0, 1.0))
    }

    /// `t^α` on `[0, 1]`.
    pub fn power(alpha: f64) -> Result<Self> {
        Self::power_on(alpha, 1.0)
    }

    /// `t^α` on `[0, hi]`.
    pub fn power_on(alpha: f64, hi: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha <= 2.0) {
            return Err(Error::BadParameter(format!("power alpha {alpha} not in (1, 2]")));
        }
        if !(hi > 0.0 && hi.is_finite()) {
            return Err(Error::BadParameter(format!("power upper bound {hi} must be positive")));
        }
        Ok(Self::builtin(
            format!("power:{alpha}"),
            PhiKind::Power { alpha },
            (0.0, hi),
            (0.0, hi),
        ))
    }

    /// `t log t` on `[delta, t_max]`; evaluation also accepts 0.
    pub fn xlogx(delta: f64, t_max: f64) -> Result<Self> {
        if !(delta > 0.0 && t_max > delta && t_max.is_finite()) {
            return Err(Error::BadParameter(format!(
                "xlogx needs 0 < delta < T, got delta={delta}, T={t_max}"
            )));
        }
        Ok(Self::builtin(
            "xlogx".into(),
            PhiKind::XLogX,
            (delta, t_max),
            (0.0, t_max),
        ))
    }

    pub fn xlogx_default() -> Self {
        Self::xlogx(1e-6, 64.0).expect("default parameters are valid")
    }

    /// `1 - h((1+t)/2)` with `h` the binary entropy in bits.
    pub fn binary_entropy() -> Self {
        Self::builtin("binent".into(), PhiKind::BinaryEntropy, (-1.0, 1.0), (-1.0, 1.0))
    }

    /// `((1+t)^α + (1-t)^α - 2) / (2^α - 2)` on `[-1, 1]`.
    pub fn sym_alpha(alpha: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha <= 2.0) {
            return Err(Error::BadParameter(format!("sym alpha {alpha} not in (1, 2]")));
        }
        Ok(Self::builtin(
            format!("sym:{alpha}"),
            PhiKind::SymAlpha { alpha },
            (-1.0, 1.0),
            (-1.0, 1.0),
        ))
    }

    /// User-supplied Φ; derivatives come from finite differences. Fails if
    /// the function is not convex or is affine on the domain.
    pub fn custom(name: &str, lo: f64, hi: f64, f: PhiFn) -> Result<Self> {
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidPhi(format!("degenerate domain [{lo}, {hi}]")));
        }
        let mut spec = Self {
            name: name.into(),
            kind: PhiKind::Custom(f),
            domain: (lo, hi),
            eval_domain: (lo, hi),
            class_f: ClassF::Unchecked,
        };
        let report = check_class_f(&spec, 256);
        if !report.convex {
            return Err(Error::InvalidPhi(format!("{name} is not convex on [{lo}, {hi}]")));
        }
        if report.affine {
            return Err(Error::InvalidPhi(format!("{name} is affine on [{lo}, {hi}]")));
        }
        spec.class_f = report.verdict;
        Ok(spec)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &PhiKind {
        &self.kind
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn eval_domain(&self) -> (f64, f64) {
        self.eval_domain
    }

    pub fn class_f(&self) -> ClassF {
        self.class_f
    }

    pub fn is_square(&self) -> bool {
        matches!(self.kind, PhiKind::Square)
    }

    pub fn eval(&self, t: f64) -> f64 {
        match &self.kind {
            PhiKind::Square => t * t,
            PhiKind::Power { alpha } => t.powf(*alpha),
            PhiKind::XLogX => xlogx(t),
            PhiKind::BinaryEntropy => {
                let a = if t <= -1.0 { 0.0 } else { (1.0 + t) * t.ln_1p() };
                let b = if t >= 1.0 { 0.0 } else { (1.0 - t) * (-t).ln_1p() };
                (a + b) / (2.0 * LN2)
            }
            PhiKind::SymAlpha { alpha } => {
                let c = 1.0 / (2f64.powf(*alpha) - 2.0);
                c * ((1.0 + t).powf(*alpha) + (1.0 - t).powf(*alpha) - 2.0)
            }
            PhiKind::Custom(f) => f(t),
        }
    }

    /// Derivative of order 1 through 4. Analytic for built-ins.
    pub fn derivative(&self, order: usize, t: f64) -> f64 {
        assert!((1..=4).contains(&order), "derivative order {order} not supported");
        match &self.kind {
            PhiKind::Square => match order {
                1 => 2.0 * t,
                2 => 2.0,
                _ => 0.0,
            },
            PhiKind::Power { alpha } => {
                let a = *alpha;
                let mut coef = 1.0;
                for j in 0..order {
                    coef *= a - j as f64;
                }
                coef * t.powf(a - order as f64)
            }
            PhiKind::XLogX => match order {
                1 => t.ln() + 1.0,
                2 => 1.0 / t,
                3 => -1.0 / (t * t),
                _ => 2.0 / (t * t * t),
            },
            PhiKind::BinaryEntropy => {
                let c = 1.0 / LN2;
                let u = 1.0 - t * t;
                match order {
                    1 => (t.ln_1p() - (-t).ln_1p()) / (2.0 * LN2),
                    2 => c / u,
                    3 => 2.0 * c * t / (u * u),
                    _ => c * (2.0 + 6.0 * t * t) / (u * u * u),
                }
            }
            PhiKind::SymAlpha { alpha } => {
                let a = *alpha;
                let mut coef = 1.0 / (2f64.powf(a) - 2.0);
                for j in 0..order {
                    coef *= a - j as f64;
                }
                let e = a - order as f64;
                let sign = if order.is_multiple_of(2) { 1.0 } else { -1.0 };
                coef * ((1.0 + t).powf(e) + sign * (1.0 - t).powf(e))
            }
            PhiKind::Custom(_) => self.fd_derivative(order, t),
        }
    }

    pub fn d1(&self, t: f64) -> f64 {
        self.derivative(1, t)
    }

    pub fn d2(&self, t: f64) -> f64 {
        self.derivative(2, t)
    }

    /// Finite-difference derivative on a stencil kept inside `eval_domain`.
    pub fn fd_derivative(&self, order: usize, t: f64) -> f64 {
        let (lo, hi) = self.eval_domain;
        let width = hi - lo;
        let (half, rel) = match order {
            1 => (2, 1e-3),
            2 => (2, 2e-3),
            3 => (4, 5e-3),
            _ => (4, 1e-2),
        };
        let h = width * rel;
        let span = half as f64 * h;
        // Shift the stencil so it stays inside the evaluation domain.
        let center = t.clamp(lo + span, hi - span);
        let nodes: Vec<f64> = (0..=2 * half)
            .map(|j| center + (j as f64 - half as f64) * h)
            .collect();
        let w = fornberg_weights(t, &nodes, order);
        nodes
            .iter()
            .zip(&w)
            .map(|(&x, &wj)| wj * self.eval(x))
            .sum()
    }

    /// True when `t` lies in the evaluation domain, allowing for rounding.
    pub fn in_domain(&self, t: f64) -> bool {
        let (lo, hi) = self.eval_domain;
        let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
        t.is_finite() && t >= lo - slack && t <= hi + slack
    }

    pub(crate) fn check_value(&self, t: f64) -> Result<()> {
        if self.in_domain(t) {
            Ok(())
        } else {
            Err(Error::DomainViolation {
                value: t,
                lo: self.eval_domain.0,
                hi: self.eval_domain.1,
            })
        }
    }

    pub(crate) fn clamp(&self, t: f64) -> f64 {
        t.clamp(self.eval_domain.0, self.eval_domain.1)
    }

    /// Search box: the domain pulled in by `1e-9` of its width.
    pub fn search_box(&self) -> (f64, f64) {
        let (lo, hi) = self.domain;
        let s = 1e-9 * (hi - lo);
        (lo + s, hi - s)
    }

    /// Bregman divergence `Φ(a) - Φ(m) - Φ'(m)(a - m)`, evaluated through the
    /// integral form when the direct one would cancel catastrophically.
    pub fn bregman(&self, a: f64, m: f64) -> f64 {
        let delta = a - m;
        if delta == 0.0 {
            return 0.0;
        }
        let (fa, fm, dm) = (self.eval(a), self.eval(m), self.d1(m));
        let direct = fa - fm - dm * delta;
        let scale = fa.abs() + fm.abs() + (dm * delta).abs();
        if delta * delta * self.d2(m).abs() >= 1e-6 * scale {
            return direct.max(0.0);
        }
        // D = δ² ∫₀¹ (1-u) Φ''(m + uδ) du by 8-point Gauss-Legendre.
        let integral: f64 = GL8
            .iter()
            .map(|&(x, w)| {
                let u = 0.5 * (x + 1.0);
                0.5 * w * (1.0 - u) * self.d2(m + u * delta)
            })
            .sum();
        (delta * delta * integral).max(0.0)
    }
}

const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

impl FromStr for PhiSpec {
    type Err = Error;

    /// Parses `square`, `power:ALPHA[:T]`, `xlogx[:DELTA,T]`, `binent`, `sym:ALPHA`.
    fn from_str(s: &str) -> Result<Self> {
        let (head, rest) = match s.split_once(':') {
            Some((h, r)) => (h, Some(r)),
            None => (s, None),
        };
        let num = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::BadParameter(format!("cannot parse '{v}' in phi '{s}'")))
        };
        match (head, rest) {
            ("square", None) => Ok(Self::square()),
            ("binent", None) => Ok(Self::binary_entropy()),
            ("xlogx", None) => Ok(Self::xlogx_default()),
            ("xlogx", Some(r)) => {
                let parts: Vec<&str> = r.split([',', ':']).collect();
                match parts.as_slice() {
                    [d] => Self::xlogx(num(d)?, 64.0),
                    [d, t] => Self::xlogx(num(d)?, num(t)?),
                    _ => Err(Error::BadParameter(format!("bad xlogx parameters in '{s}'"))),
                }
            }
            ("power", Some(r)) => match r.split_once(':') {
                Some((a, t)) => Self::power_on(num(a)?, num(t)?),
                None => Self::power(num(r)?),
            },
            ("sym", Some(r)) => Self::sym_alpha(num(r)?),
            _ => Err(Error::BadParameter(format!(
                "unknown phi '{s}' (expected square, power:ALPHA, xlogx[:DELTA,T], binent, sym:ALPHA)"
            ))),
        }
    }
}

/// Finite-difference weights for derivative `order` at `z` on `nodes`
/// (Fornberg's recursion).
pub fn fornberg_weights(z: f64, nodes: &[f64], order: usize) -> Vec<f64> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - z;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// Checks convexity, non-affinity, concavity of 1/Φ″ and Φ⁗Φ″ ≥ 2Φ‴² on a
/// uniform interior grid of the search domain.
pub fn check_class_f(phi: &PhiSpec, grid_points: usize) -> ClassFReport {
    let n = grid_points.max(16);
    let (lo, hi) = phi.domain;
    let step = (hi - lo) / (n + 1) as f64;
    let grid: Vec<f64> = (1..=n).map(|j| lo + j as f64 * step).collect();

    let mut worst_margin = f64::INFINITY;
    let mut worst_at = grid[0];
    let mut convex = true;
    let mut max_d2 = 0.0f64;
    let mut ok_vi = true;
    let mut inv = Vec::with_capacity(n);
    for &t in &grid {
        let d2 = phi.derivative(2, t);
        let d3 = phi.derivative(3, t);
        let d4 = phi.derivative(4, t);
        if d2 < -1e-10 {
            convex = false;
        }
        max_d2 = max_d2.max(d2);
        let lhs = d4 * d2;
        let rhs = 2.0 * d3 * d3;
        let scale = 1.0 + lhs.abs() + rhs.abs();
        let margin = (lhs - rhs) / scale;
        if margin < worst_margin {
            worst_margin = margin;
            worst_at = t;
        }
        if margin < -1e-8 {
            ok_vi = false;
        }
        inv.push(1.0 / d2);
    }
    let mut worst_concavity = f64::NEG_INFINITY;
    let mut ok_v = true;
    for w in inv.windows(3) {
        let second = w[0] - 2.0 * w[1] + w[2];
        let scale = 1.0 + w[0].abs() + 2.0 * w[1].abs() + w[2].abs();
        let rel = second / scale;
        worst_concavity = worst_concavity.max(rel);
        if rel > 1e-8 {
            ok_v = false;
        }
    }
    let affine = max_d2 <= 1e-10;
    let verdict = if convex && !affine && ok_vi && ok_v {
        ClassF::Verified
    } else {
        ClassF::Refuted
    };
    ClassFReport {
        verdict,
        worst_margin,
        worst_at,
        worst_concavity,
        convex,
        affine,
    }
}

fn check_support_values(d: &JointDist, phi: &PhiSpec, f: &JointFunction) -> Result<()> {
    d.check_function(f)?;
    for (&p, &v) in d.probs().iter().zip(&f.values) {
        if p > 0.0 {
            phi.check_value(v)?;
        }
    }
    Ok(())
}

fn clamp_entropy(v: f64, scale: f64) -> f64 {
    if v < 0.0 && v >= -1e-12 * (1.0 + scale) {
        0.0
    } else {
        v
    }
}

/// `E[Φ(f)] - Φ(E f)` for weights `p` (zero weights skipped). Plain formula.
pub fn entropy_of(phi: &PhiSpec, p: &[f64], values: &[f64]) -> f64 {
    let mut mean = 0.0;
    let mut e_phi = 0.0;
    for (&w, &v) in p.iter().zip(values) {
        if w > 0.0 {
            mean += w * v;
            e_phi += w * phi.eval(v);
        }
    }
    let total: f64 = p.iter().filter(|&&w| w > 0.0).sum();
    if total <= 0.0 {
        return 0.0;
    }
    let mean = phi.clamp(mean / total);
    let v = e_phi / total - phi.eval(mean);
    clamp_entropy(v, e_phi.abs())
}

/// `H_Φ(f)` under `d`.
pub fn phi_entropy(d: &JointDist, phi: &PhiSpec, f: &JointFunction) -> Result<EntropyValue> {
    check_support_values(d, phi, f)?;
    Ok(EntropyValue {
        value: entropy_of(phi, d.probs(), &f.values),
        decomposition: None,
    })
}

/// `H_Φ(f | X_S)` for a sorted coordinate subset `S` (possibly empty).
pub fn cond_phi_entropy(
    d: &JointDist,
    phi: &PhiSpec,
    f: &JointFunction,
    coords: &[usize],
) -> Result<EntropyValue> {
    check_support_values(d, phi, f)?;
    let proj = d.projection(coords)?;
    let cells = proj.len().max(1);
    let mut mass = vec![0.0; cells];
    let mut sum_f = vec![0.0; cells];
    let mut sum_phi = vec![0.0; cells];
    for (flat, (&p, &v)) in d.probs().iter().zip(&f.values).enumerate() {
        if p > 0.0 {
            let c = proj.map[flat];
            mass[c] += p;
            sum_f[c] += p * v;
            sum_phi[c] += p * phi.eval(v);
        }
    }
    let terms: Vec<f64> = (0..cells)
        .map(|c| {
            if mass[c] <= 0.0 {
                return 0.0;
            }
            let m = phi.clamp(sum_f[c] / mass[c]);
            clamp_entropy(sum_phi[c] - mass[c] * phi.eval(m), sum_phi[c].abs())
        })
        .collect();
    let value = clamp_entropy(terms.iter().sum(), 0.0);
    Ok(EntropyValue {
        value,
        decomposition: Some(terms),
    })
}

/// `I_Φ(X; Y) = Σ p(x)p(y) Φ(p(x,y) / (p(x)p(y))) - Φ(1)` for a bipartite `d`.
pub fn phi_mutual_information(d: &JointDist, phi: &PhiSpec) -> Result<f64> {
    d.require_bipartite()?;
    let px = d.marginal_probs(0);
    let py = d.marginal_probs(1);
    mutual_information_tables(phi, &px, &py, |x, y| d.probs()[x * py.len() + y])
}

/// Shared I_Φ evaluation for a joint table given through `joint(x, y)`.
pub(crate) fn mutual_information_tables(
    phi: &PhiSpec,
    px: &[f64],
    py: &[f64],
    joint: impl Fn(usize, usize) -> f64,
) -> Result<f64> {
    phi.check_value(1.0)?;
    let mut total = 0.0;
    for (x, &a) in px.iter().enumerate() {
        for (y, &b) in py.iter().enumerate() {
            let w = a * b;
            if w > 0.0 {
                let r = joint(x, y) / w;
                phi.check_value(r)?;
                total += w * phi.eval(phi.clamp(r));
            }
        }
    }
    let v = total - phi.eval(1.0);
    Ok(clamp_entropy(v, total.abs()))
}

/// `Σ_i H_Φ(f | X_{-i}) - H_Φ(f)` for mutually independent coordinates.
pub fn subadditivity_gap(d: &JointDist, phi: &PhiSpec, f: &JointFunction) -> Result<f64> {
    let deviation = d.independence_deviation();
    if deviation > 1e-10 {
        return Err(Error::NotIndependent { deviation });
    }
    let total = phi_entropy(d, phi, f)?.value;
    let mut sum = 0.0;
    for i in 0..d.k() {
        let rest: Vec<usize> = (0..d.k()).filter(|&j| j != i).collect();
        sum += cond_phi_entropy(d, phi, f, &rest)?.value;
    }
    Ok(sum - total)
}
