//! Named reproduction bundles. Each row compares a measured value with the
//! value theory predicts.

use clap::ValueEnum;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use phiribbon::dist::{dsbs, random_joint, sum_iid_bernoulli, tilde_degenerate, xor_triple};
use phiribbon::ribbon_mc::{pearson_matrix, rho2_from_mc_ribbon, tilde_gap, trace_mc_boundary, PSD_TOL};
use phiribbon::ribbon_phi::ribbon_gap;
use phiribbon::{
    eta_phi, gaussian_mc_membership, maximal_correlation, mc_membership, phi_ribbon_membership,
    tilde_membership, JointFunction, LambdaPoint, MarginalFunction, PhiSpec, SearchOpts,
};

use crate::CliError;

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SuiteName {
    Dsbs,
    Sumiid,
    Xor,
    BipartiteBoundary,
    Tilde,
    GaussianBinary,
    AlphaEquivalence,
}

pub struct Row {
    pub case: String,
    pub measured: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn close(case: String, measured: f64, expected: f64, tolerance: f64) -> Row {
    Row {
        case,
        measured,
        expected,
        tolerance,
        pass: (measured - expected).abs() <= tolerance,
    }
}

fn lp(v: Vec<f64>) -> LambdaPoint {
    LambdaPoint::new(v).expect("grid points lie in [0,1]")
}

pub fn run(name: SuiteName, seed: u64) -> Result<Vec<Row>, CliError> {
    let mut rows = Vec::new();
    match name {
        SuiteName::Dsbs => {
            let opts = SearchOpts::for_eta().with_seed(seed);
            let kl = PhiSpec::xlogx_default();
            let be = PhiSpec::binary_entropy();
            for j in 1..=9 {
                let l = j as f64 / 10.0;
                let d = dsbs(l)?;
                rows.push(close(format!("rho dsbs({l})"), maximal_correlation(&d)?, l, 1e-9));
                for phi in [&kl, &be] {
                    let e = eta_phi(&d, phi, None, &opts)?.value;
                    rows.push(close(format!("eta {} dsbs({l})", phi.name()), e, l * l, 2e-3));
                }
            }
        }
        SuiteName::Sumiid => {
            let opts = SearchOpts::for_eta().with_seed(seed);
            let be = PhiSpec::binary_entropy();
            for (n, m) in [(2, 1), (3, 1), (3, 2), (4, 2)] {
                let d = sum_iid_bernoulli(0.5, n, m)?;
                let target = m as f64 / n as f64;
                let rho = maximal_correlation(&d)?;
                rows.push(close(format!("rho^2 (S_{n},S_{m})"), rho * rho, target, 1e-9));
                let e = eta_phi(&d, &be, None, &opts)?.value;
                rows.push(close(format!("eta binent (S_{n},S_{m})"), e, target, 3e-3));
            }
        }
        SuiteName::Xor => {
            let x = xor_triple();
            let l = lp(vec![1.0, 1.0, 1.0]);
            let mc = mc_membership(&x, &l)?;
            rows.push(Row {
                case: "mc min eigenvalue at (1,1,1)".into(),
                measured: mc.min_eigenvalue,
                expected: 0.0,
                tolerance: PSD_TOL,
                pass: mc.is_member(),
            });
            let be = PhiSpec::binary_entropy();
            let v = phi_ribbon_membership(&x, &be, &l, &SearchOpts::default().with_seed(seed))?;
            let gap = match &v.witness {
                Some(f) => ribbon_gap(&x, &be, &l, f)?,
                None => v.gap,
            };
            rows.push(Row {
                case: "binent witness gap at (1,1,1)".into(),
                measured: gap,
                expected: -1e-6,
                tolerance: 0.0,
                pass: v.is_violated() && gap < -1e-6,
            });
        }
        SuiteName::BipartiteBoundary => {
            let d = dsbs(0.5)?;
            let pts = trace_mc_boundary(&d, 101, 1e-10)?;
            let mut worst = 0.0f64;
            for p in &pts {
                let w = &p.direction;
                let u = 0.5 * (1.0 + (1.0 - 3.0 * w[0] * w[1]).sqrt());
                for (a, v) in p.inner.iter().zip(w) {
                    worst = worst.max((a - (v / u).min(1.0)).abs());
                }
            }
            rows.push(close("max distance to (1/l1-1)(1/l2-1)=0.25".into(), worst, 0.0, 2e-3));
            rows.push(close("rho^2 from traced boundary".into(), rho2_from_mc_ribbon(&d)?, 0.25, 1e-3));
        }
        SuiteName::Tilde => {
            let d = tilde_degenerate(0.3, 0.3)?;
            let mut members = 0;
            for a in 0..10 {
                for b in 0..10 {
                    for c in 0..10 {
                        if a + b + c > 0 {
                            let l = lp(vec![a as f64 / 9.0, b as f64 / 9.0, c as f64 / 9.0]);
                            members += tilde_membership(&d, &l)?.is_member() as usize;
                        }
                    }
                }
            }
            rows.push(close("members among nonzero grid points".into(), members as f64, 0.0, 0.0));
            let parts = [
                MarginalFunction::new(0, vec![0.7, -0.3]),
                MarginalFunction::new(1, vec![-0.3, 0.7]),
                MarginalFunction::new(2, vec![-0.4, 0.6]),
            ];
            let var = JointFunction::sum_of(&d, &parts).variance(&d);
            rows.push(close("Var[f+g+h] of the witness".into(), var, 0.0, 1e-30));
            let gap = tilde_gap(&d, &lp(vec![0.1, 0.1, 0.1]), &parts);
            rows.push(Row {
                case: "witness gap at (0.1,0.1,0.1)".into(),
                measured: gap,
                expected: 0.0,
                tolerance: 0.0,
                pass: gap < 0.0,
            });
        }
        SuiteName::GaussianBinary => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut disagree = 0;
            for _ in 0..20 {
                let d = random_joint(&[2, 2, 2], 0.0, &mut rng);
                let r = pearson_matrix(&d)?;
                for a in 0..11 {
                    for b in 0..11 {
                        for c in 0..11 {
                            let l = lp(vec![a as f64 / 10.0, b as f64 / 10.0, c as f64 / 10.0]);
                            let x = mc_membership(&d, &l)?;
                            let y = gaussian_mc_membership(&r, &l)?;
                            let banded = x.min_eigenvalue.abs() < PSD_TOL || y.min_eigenvalue.abs() < PSD_TOL;
                            disagree += (!banded && x.is_member() != y.is_member()) as usize;
                        }
                    }
                }
            }
            rows.push(close("disagreements over 20 binary triples".into(), disagree as f64, 0.0, 0.0));
        }
        SuiteName::AlphaEquivalence => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = random_joint(&[2, 2], 0.0, &mut rng);
            let opts = SearchOpts::default().with_seed(seed);
            for alpha in [1.3, 1.7] {
                let pw = PhiSpec::power(alpha)?;
                let sy = PhiSpec::sym_alpha(alpha)?;
                let mut disagree = 0;
                for i in 0..8 {
                    for j in 0..8 {
                        let l = lp(vec![i as f64 / 7.0, j as f64 / 7.0]);
                        let a = phi_ribbon_membership(&d, &pw, &l, &opts)?.is_violated();
                        let b = phi_ribbon_membership(&d, &sy, &l, &opts)?.is_violated();
                        disagree += (a != b) as usize;
                    }
                }
                rows.push(close(format!("disagreements alpha={alpha} on 8x8 grid"), disagree as f64, 0.0, 0.0));
            }
        }
    }
    Ok(rows)
}
