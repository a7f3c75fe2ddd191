//! Φ-ribbon membership by certified-violation search.
//!
//! The search minimizes `G(f) = H_Φ(f) − Σ λ_i H_Φ(E[f|X_i])` over functions
//! with values in the Φ domain. A violation is only reported after the best
//! point is re-evaluated with the plain entropy formula; a search that finds
//! nothing reports `HoldsUpToSearch`, which is evidence and not proof.

use rand::Rng;
use serde::Serialize;

use crate::dist::{Channel, JointDist, JointFunction};
use crate::error::{Error, Result};
use crate::phi::{self, ClassF, PhiSpec};
use crate::ribbon_mc::{self, GramMatrix, LambdaPoint, RayPoint};
use crate::search::{self, Objective, SearchOpts};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RibbonStatus {
    HoldsUpToSearch,
    Violated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RibbonVerdict {
    pub status: RibbonStatus,
    /// Smallest plain-formula gap over all restart endpoints.
    pub gap: f64,
    /// Function attaining `gap`; present only when violated.
    pub witness: Option<JointFunction>,
    /// Tensorization guarantees need Φ in class 𝓕; this is advisory.
    pub phi_class_f: ClassF,
    pub restarts_used: usize,
}

impl RibbonVerdict {
    pub fn is_violated(&self) -> bool {
        self.status == RibbonStatus::Violated
    }
}

/// Gap `H_Φ(f) − Σ λ_i H_Φ(E[f|X_i])` by the plain formula.
pub fn ribbon_gap(d: &JointDist, phi: &PhiSpec, lambda: &LambdaPoint, f: &JointFunction) -> Result<f64> {
    lambda.require_k(d.k())?;
    let total = phi::phi_entropy(d, phi, f)?.value;
    let mut rhs = 0.0;
    for i in 0..d.k() {
        if lambda.values[i] > 0.0 {
            let ce = d.cond_expectation(f, i)?;
            rhs += lambda.values[i] * phi::entropy_of(phi, &d.marginal_probs(i), &ce.function.values);
        }
    }
    Ok(total - rhs)
}

enum Feasible {
    Box,
    /// `f ≥ lo`, `f ≤ hi` and `Σ p f = 1`.
    Normalized,
}

struct RibbonObjective<'a> {
    phi: &'a PhiSpec,
    p: Vec<f64>,
    /// Per coordinate with λ_i > 0: (λ_i, cell of each support atom, cell masses).
    terms: Vec<(f64, Vec<usize>, Vec<f64>)>,
    lo: f64,
    hi: f64,
    feasible: Feasible,
}

impl RibbonObjective<'_> {
    fn new<'a>(
        d: &JointDist,
        phi: &'a PhiSpec,
        lambda: &LambdaPoint,
        support: &[usize],
        (lo, hi): (f64, f64),
        feasible: Feasible,
    ) -> RibbonObjective<'a> {
        let p: Vec<f64> = support.iter().map(|&a| d.probs()[a]).collect();
        let terms = (0..d.k())
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
        RibbonObjective {
            phi,
            p,
            terms,
            lo,
            hi,
            feasible,
        }
    }

    fn mean(&self, x: &[f64]) -> f64 {
        self.p.iter().zip(x).map(|(p, v)| p * v).sum::<f64>().clamp(self.lo, self.hi)
    }

    fn cond(&self, x: &[f64], cells: &[usize], mass: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0; mass.len()];
        for ((c, p), v) in cells.iter().zip(&self.p).zip(x) {
            acc[*c] += p * v;
        }
        acc.iter()
            .zip(mass)
            .map(|(a, m)| if *m > 0.0 { (a / m).clamp(self.lo, self.hi) } else { 0.0 })
            .collect()
    }

    fn project_normalized(&self, x: &mut [f64]) {
        let at = |tau: f64, x: &[f64]| -> f64 {
            x.iter()
                .zip(&self.p)
                .map(|(v, p)| p * (v + tau * p).clamp(self.lo, self.hi))
                .sum()
        };
        let mut tlo = f64::INFINITY;
        let mut thi = f64::NEG_INFINITY;
        for (v, p) in x.iter().zip(&self.p) {
            tlo = tlo.min((self.lo - v) / p);
            thi = thi.max((self.hi - v) / p);
        }
        for _ in 0..200 {
            let mid = 0.5 * (tlo + thi);
            if mid <= tlo || mid >= thi {
                break;
            }
            if at(mid, x) < 1.0 {
                tlo = mid;
            } else {
                thi = mid;
            }
        }
        let tau = 0.5 * (tlo + thi);
        for (v, p) in x.iter_mut().zip(&self.p) {
            *v = (*v + tau * p).clamp(self.lo, self.hi);
        }
    }
}

impl Objective for RibbonObjective<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        let m = self.mean(x);
        let mut g: f64 = self.p.iter().zip(x).map(|(p, &v)| p * self.phi.bregman(v, m)).sum();
        for (l, cells, mass) in &self.terms {
            let c = self.cond(x, cells, mass);
            let h: f64 = mass.iter().zip(&c).map(|(q, &v)| if *q > 0.0 { q * self.phi.bregman(v, m) } else { 0.0 }).sum();
            g -= l * h;
        }
        g
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        let m = self.mean(x);
        let dm = self.phi.d1(m);
        for (gi, &v) in grad.iter_mut().zip(x) {
            *gi = self.phi.d1(v) - dm;
        }
        for (l, cells, mass) in &self.terms {
            let c = self.cond(x, cells, mass);
            let dc: Vec<f64> = c.iter().map(|&v| self.phi.d1(v) - dm).collect();
            for (gi, cell) in grad.iter_mut().zip(cells) {
                *gi -= l * dc[*cell];
            }
        }
        for (gi, p) in grad.iter_mut().zip(&self.p) {
            *gi *= p;
        }
    }

    fn project(&self, x: &mut [f64]) {
        match self.feasible {
            Feasible::Box => x.iter_mut().for_each(|v| *v = v.clamp(self.lo, self.hi)),
            Feasible::Normalized => self.project_normalized(x),
        }
    }
}

/// Starting points: the MC eigen-witness at several amplitudes around the
/// center and squeezed against each end of the box, then a rotation of random
/// interior points, random corners and random points near either end.
/// Generators whose curvature blows up at an endpoint tend to have their
/// violations there, far from the center.
fn starts(
    d: &JointDist,
    gram: &GramMatrix,
    lambda: &LambdaPoint,
    support: &[usize],
    center: f64,
    (lo, hi): (f64, f64),
    opts: &SearchOpts,
) -> Vec<Vec<f64>> {
    let mut seeded = Vec::new();
    let sp = ribbon_mc::sprime_membership_gram(d, gram, lambda);
    if let Some(w) = sp.witness {
        let f = w.joint(d);
        let dir: Vec<f64> = support.iter().map(|&a| f.values[a]).collect();
        let scale = dir.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let reach = (hi - center).min(center - lo);
        if scale > 0.0 {
            for amp in [0.9, 0.3, 0.1, 1e-2] {
                seeded.push(dir.iter().map(|v| center + amp * reach * v / scale).collect());
            }
            let (dmin, dmax) = dir.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
            if dmax > dmin {
                for width in [0.2, 0.02] {
                    let s = width * (hi - lo) / (dmax - dmin);
                    seeded.push(dir.iter().map(|v| lo + s * (v - dmin)).collect());
                    seeded.push(dir.iter().map(|v| hi - s * (dmax - v)).collect());
                }
            }
        }
    }
    // Keep at least half of the budget for random starts.
    seeded.truncate(opts.restarts / 2);
    let mut out = seeded;
    let mut r = 0;
    while out.len() < opts.restarts {
        let mut rng = search::restart_rng(opts.seed, r);
        let x: Vec<f64> = match r % 4 {
            0 => support.iter().map(|_| rng.gen_range(lo..=hi)).collect(),
            1 => support.iter().map(|_| if rng.gen::<bool>() { hi } else { lo }).collect(),
            k => {
                let width = (hi - lo) * 10f64.powf(rng.gen_range(-3.0..-0.5));
                let u: Vec<f64> = support.iter().map(|_| rng.gen::<f64>()).collect();
                if k == 2 {
                    u.iter().map(|v| lo + width * v).collect()
                } else {
                    u.iter().map(|v| hi - width * v).collect()
                }
            }
        };
        out.push(x);
        r += 1;
    }
    out
}

fn run_search(
    d: &JointDist,
    phi: &PhiSpec,
    lambda: &LambdaPoint,
    opts: &SearchOpts,
    normalized: bool,
) -> Result<RibbonVerdict> {
    opts.validate()?;
    lambda.require_k(d.k())?;
    let support = d.support_indices();
    let (mut lo, mut hi) = phi.search_box();
    let mut center = 0.5 * (lo + hi);
    if normalized {
        let (elo, ehi) = phi.eval_domain();
        let min_p = support.iter().map(|&a| d.probs()[a]).fold(f64::INFINITY, f64::min);
        let need = 1.0 / min_p;
        if !phi.in_domain(1.0) {
            return Err(Error::DomainViolation { value: 1.0, lo: elo, hi: ehi });
        }
        if ehi < need {
            return Err(Error::DomainViolation { value: need, lo: elo, hi: ehi });
        }
        let s = 1e-9 * (ehi - elo);
        lo = elo.max(0.0) + s;
        hi = ehi - s;
        center = 1.0;
    }
    let feasible = if normalized { Feasible::Normalized } else { Feasible::Box };
    let obj = RibbonObjective::new(d, phi, lambda, &support, (lo, hi), feasible);
    let gram = ribbon_mc::gram_matrix(d);
    let x0 = starts(d, &gram, lambda, &support, center, (lo, hi), opts);
    let runs = search::multistart(&obj, &x0, opts);

    let mut best: Option<(f64, JointFunction)> = None;
    for run in &runs {
        let m = obj.mean(&run.x);
        let mut values = vec![m; d.len()];
        for (i, &a) in support.iter().enumerate() {
            values[a] = run.x[i];
        }
        let f = JointFunction::new(values);
        let gap = ribbon_gap(d, phi, lambda, &f)?;
        if best.as_ref().is_none_or(|(b, _)| gap < *b) {
            best = Some((gap, f));
        }
    }
    let (gap, f) = best.expect("at least one restart");
    let violated = gap < -opts.violation_tol;
    Ok(RibbonVerdict {
        status: if violated { RibbonStatus::Violated } else { RibbonStatus::HoldsUpToSearch },
        gap,
        witness: violated.then_some(f),
        phi_class_f: phi.class_f(),
        restarts_used: runs.len(),
    })
}

/// Searches for `f` with `H_Φ(f) < Σ λ_i H_Φ(E[f|X_i])`.
pub fn phi_ribbon_membership(
    d: &JointDist,
    phi: &PhiSpec,
    lambda: &LambdaPoint,
    opts: &SearchOpts,
) -> Result<RibbonVerdict> {
    run_search(d, phi, lambda, opts, false)
}

/// The same search restricted to `f ≥ 0` with `E[f] = 1`. The Φ domain must
/// contain 1 and reach up to `1 / min p`.
pub fn normalized_phi_ribbon_membership(
    d: &JointDist,
    phi: &PhiSpec,
    lambda: &LambdaPoint,
    opts: &SearchOpts,
) -> Result<RibbonVerdict> {
    run_search(d, phi, lambda, opts, true)
}

fn check_joint_channel(d: &JointDist, ch: &Channel) -> Result<()> {
    ch.validate()?;
    if ch.inputs() != d.len() {
        return Err(Error::ShapeMismatch {
            expected: d.len(),
            got: ch.inputs(),
        });
    }
    Ok(())
}

/// `I_Φ(U; X_[k]) − Σ λ_i I_Φ(U; X_i)` for `U` drawn through `channel` from
/// the whole tuple. A negative value certifies a violation.
pub fn i_phi_channel_test(
    d: &JointDist,
    phi: &PhiSpec,
    lambda: &LambdaPoint,
    channel: &Channel,
) -> Result<f64> {
    lambda.require_k(d.k())?;
    check_joint_channel(d, channel)?;
    let nu = channel.outputs();
    let pu: Vec<f64> = (0..nu)
        .map(|u| (0..d.len()).map(|a| d.probs()[a] * channel.matrix[a][u]).sum())
        .collect();
    let joint_all = |u: usize, a: usize| d.probs()[a] * channel.matrix[a][u];
    let mut gap = phi::mutual_information_tables(phi, &pu, d.probs(), joint_all)?;
    for i in 0..d.k() {
        if lambda.values[i] > 0.0 {
            let pi = d.marginal_probs(i);
            let mut table = vec![vec![0.0; pi.len()]; nu];
            for a in 0..d.len() {
                let s = d.symbol(a, i);
                for (u, row) in table.iter_mut().enumerate() {
                    row[s] += d.probs()[a] * channel.matrix[a][u];
                }
            }
            let info = phi::mutual_information_tables(phi, &pu, &pi, |u, s| table[u][s])?;
            gap -= lambda.values[i] * info;
        }
    }
    Ok(gap)
}

/// Likelihood ratios `f_u = p(u|x)/p(u)` with weights `p(u)`. The weighted
/// sum of their ribbon gaps equals the channel gap.
pub fn witnesses_from_channel(d: &JointDist, channel: &Channel) -> Result<Vec<(f64, JointFunction)>> {
    check_joint_channel(d, channel)?;
    let mut out = Vec::new();
    for u in 0..channel.outputs() {
        let pu: f64 = (0..d.len()).map(|a| d.probs()[a] * channel.matrix[a][u]).sum();
        if pu > 0.0 {
            let f = (0..d.len()).map(|a| channel.matrix[a][u] / pu).collect();
            out.push((pu, JointFunction::new(f)));
        }
    }
    Ok(out)
}

/// Binary channel `C(0|x) = ε f(x)` built from a normalized witness. Its
/// I_Φ gap is `ε G(f) + O(ε²)`.
pub fn channel_from_witness(d: &JointDist, f: &JointFunction, eps: f64) -> Result<Channel> {
    d.check_function(f)?;
    let support = d.support_indices();
    if support.iter().any(|&a| f.values[a] < 0.0) {
        return Err(Error::BadParameter("witness must be non-negative".into()));
    }
    let mean = d.expect(f);
    if (mean - 1.0).abs() > 1e-9 {
        return Err(Error::BadParameter(format!("witness mean {mean} is not 1")));
    }
    let top = support.iter().map(|&a| f.values[a]).fold(0.0f64, f64::max);
    if !(eps > 0.0 && eps * top <= 1.0) {
        return Err(Error::BadParameter(format!("eps {eps} must lie in (0, 1/max f]")));
    }
    let matrix = (0..d.len())
        .map(|a| {
            let c = if d.support()[a] { eps * f.values[a] } else { eps };
            vec![c, 1.0 - c]
        })
        .collect();
    Channel::new(0, matrix)
}

/// Membership oracle for a fixed distribution and generator.
pub trait RibbonOracle: Sync {
    fn member(&self, lambda: &[f64]) -> bool;
}

/// Exact MC-ribbon oracle, used for Φ(t) = t².
pub struct ExactMc<'a> {
    d: &'a JointDist,
    gram: GramMatrix,
}

impl<'a> ExactMc<'a> {
    pub fn new(d: &'a JointDist) -> Self {
        Self {
            d,
            gram: ribbon_mc::gram_matrix(d),
        }
    }
}

impl RibbonOracle for ExactMc<'_> {
    fn member(&self, lambda: &[f64]) -> bool {
        let l = LambdaPoint { values: lambda.to_vec() };
        ribbon_mc::mc_membership_gram(self.d, &self.gram, &l).is_member()
    }
}

/// Search oracle: member unless a certified violation turns up.
pub struct PhiSearch<'a> {
    pub d: &'a JointDist,
    pub phi: &'a PhiSpec,
    pub opts: SearchOpts,
}

impl RibbonOracle for PhiSearch<'_> {
    fn member(&self, lambda: &[f64]) -> bool {
        let l = LambdaPoint { values: lambda.to_vec() };
        !phi_ribbon_membership(self.d, self.phi, &l, &self.opts)
            .expect("inputs validated before tracing")
            .is_violated()
    }
}

/// Exact oracle for the square generator, search otherwise.
pub fn oracle_for<'a>(d: &'a JointDist, phi: &'a PhiSpec, opts: &SearchOpts) -> Result<Box<dyn RibbonOracle + 'a>> {
    opts.validate()?;
    if phi.is_square() {
        return Ok(Box::new(ExactMc::new(d)));
    }
    // Surface domain and shape errors here rather than inside the oracle.
    let probe = LambdaPoint::new(vec![0.0; d.k()])?;
    phi_ribbon_membership(d, phi, &probe, &opts.clone().with_restarts(1))?;
    Ok(Box::new(PhiSearch {
        d,
        phi,
        opts: opts.clone(),
    }))
}

pub const DEFAULT_T_PROBE: f64 = 1e-3;

/// η_Φ from the ribbon: the smallest μ with `(1 − μt, t)` in the ribbon,
/// for the small probe `t`. Membership is monotone in μ, so μ is bisected.
pub fn eta_from_ribbon(d: &JointDist, phi: &PhiSpec, opts: &SearchOpts) -> Result<f64> {
    eta_from_ribbon_with(d, phi, opts, DEFAULT_T_PROBE)
}

pub fn eta_from_ribbon_with(d: &JointDist, phi: &PhiSpec, opts: &SearchOpts, t_probe: f64) -> Result<f64> {
    d.require_bipartite()?;
    if !(t_probe > 0.0 && t_probe < 1.0) {
        return Err(Error::BadParameter(format!("t_probe {t_probe} not in (0,1)")));
    }
    let oracle = oracle_for(d, phi, opts)?;
    let admissible = |mu: f64| oracle.member(&[1.0 - mu * t_probe, t_probe]);
    if admissible(0.0) {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > 1e-5 {
        let mid = 0.5 * (lo + hi);
        if admissible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Traces the ribbon boundary along rays through the simplex (k = 2 or 3).
pub fn ribbon_boundary_trace(
    d: &JointDist,
    phi: &PhiSpec,
    directions: usize,
    opts: &SearchOpts,
) -> Result<Vec<RayPoint>> {
    let dirs = ribbon_mc::simplex_directions(d.k(), directions)?;
    let oracle = oracle_for(d, phi, opts)?;
    Ok(ribbon_mc::trace_rays(&dirs, 1e-3, |l| oracle.member(l)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{dsbs, equal_copies, independent, xor_triple};

    fn lp(v: &[f64]) -> LambdaPoint {
        LambdaPoint::new(v.to_vec()).unwrap()
    }

    fn quick() -> SearchOpts {
        SearchOpts {
            restarts: 16,
            max_iters: 300,
            ..SearchOpts::default()
        }
    }

    #[test]
    fn independent_holds() {
        let d = independent(&[vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap();
        let v = phi_ribbon_membership(&d, &PhiSpec::xlogx_default(), &lp(&[1.0, 1.0]), &quick()).unwrap();
        assert_eq!(v.status, RibbonStatus::HoldsUpToSearch);
        assert!(v.gap >= -1e-9);
    }

    #[test]
    fn equal_copies_violated_above_simplex() {
        let d = equal_copies(2, &[0.5, 0.5]).unwrap();
        for phi in [PhiSpec::square(), PhiSpec::binary_entropy(), PhiSpec::xlogx_default()] {
            let v = phi_ribbon_membership(&d, &phi, &lp(&[0.6, 0.6]), &quick()).unwrap();
            assert!(v.is_violated(), "{}", phi.name());
            let g = ribbon_gap(&d, &phi, &lp(&[0.6, 0.6]), v.witness.as_ref().unwrap()).unwrap();
            assert!(g < -1e-9);
        }
    }

    #[test]
    fn xor_square_holds_binent_violated() {
        let x = xor_triple();
        let sq = phi_ribbon_membership(&x, &PhiSpec::square(), &lp(&[1.0, 1.0, 1.0]), &quick()).unwrap();
        assert_eq!(sq.status, RibbonStatus::HoldsUpToSearch);
        let be = phi_ribbon_membership(&x, &PhiSpec::binary_entropy(), &lp(&[1.0, 1.0, 1.0]), &quick()).unwrap();
        assert!(be.is_violated());
        assert!(be.gap < -1e-6);
    }

    #[test]
    fn channel_examples() {
        let x = xor_triple();
        let phi = PhiSpec::xlogx_default();
        let constant = Channel::constant(0, 8, 2, 0);
        let g = i_phi_channel_test(&x, &phi, &lp(&[1.0, 1.0, 1.0]), &constant).unwrap();
        assert!(g.abs() < 1e-15);

        // U = (X₁, X₂) as a deterministic channel with four outputs.
        let matrix = (0..8)
            .map(|a| {
                let u = x.symbol(a, 0) * 2 + x.symbol(a, 1);
                (0..4).map(|j| if j == u { 1.0 } else { 0.0 }).collect()
            })
            .collect();
        let ch = Channel::new(0, matrix).unwrap();
        let g = i_phi_channel_test(&x, &phi, &lp(&[1.0, 1.0, 1.0]), &ch).unwrap();
        assert!((g + std::f64::consts::LN_2).abs() < 1e-12);

        // The channel gap equals the p(u)-weighted ribbon gaps of f_u.
        let ws = witnesses_from_channel(&x, &ch).unwrap();
        let sum: f64 = ws
            .iter()
            .map(|(w, f)| w * ribbon_gap(&x, &phi, &lp(&[1.0, 1.0, 1.0]), f).unwrap())
            .sum();
        assert!((sum - g).abs() < 1e-12);
    }

    #[test]
    fn witness_channel_round_trip() {
        let d = JointDist::new(vec![2, 2], vec![0.4, 0.1, 0.2, 0.3]).unwrap();
        let phi = PhiSpec::xlogx_default();
        let f = JointFunction::new(vec![1.5, 0.0, 0.5, 1.0]);
        assert!((d.expect(&f) - 1.0).abs() < 1e-12);
        let lam = lp(&[0.9, 0.9]);
        let g = ribbon_gap(&d, &phi, &lam, &f).unwrap();
        let eps = 1e-3;
        let ch = channel_from_witness(&d, &f, eps).unwrap();
        let cg = i_phi_channel_test(&d, &phi, &lam, &ch).unwrap();
        assert!((cg / eps - g).abs() < 1e-2 * (1.0 + g.abs()), "{cg} vs {g}");
    }

    #[test]
    fn normalized_domain_checks() {
        let d = dsbs(0.5).unwrap();
        assert!(matches!(
            normalized_phi_ribbon_membership(&d, &PhiSpec::binary_entropy(), &lp(&[0.5, 0.5]), &quick()),
            Err(Error::DomainViolation { .. })
        ));
        let v = normalized_phi_ribbon_membership(&d, &PhiSpec::xlogx_default(), &lp(&[1.0, 1.0]), &quick()).unwrap();
        assert!(v.is_violated());
        let f = v.witness.unwrap();
        assert!((d.expect(&f) - 1.0).abs() < 1e-9);
        assert!(f.values.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn eta_from_ribbon_square() {
        let d = dsbs(0.5).unwrap();
        let eta = eta_from_ribbon(&d, &PhiSpec::square(), &SearchOpts::default()).unwrap();
        assert!((eta - 0.25).abs() < 1e-3, "{eta}");
        let ind = independent(&[vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap();
        assert_eq!(eta_from_ribbon(&ind, &PhiSpec::square(), &SearchOpts::default()).unwrap(), 0.0);
    }
}
