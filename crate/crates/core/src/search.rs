//! Projected gradient descent with Armijo backtracking, plus deterministic
//! multi-start driving.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::par;

/// Search parameters shared by every numerical search in the crate.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchOpts {
    pub restarts: usize,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub violation_tol: f64,
    pub seed: u64,
    pub step_init: f64,
}

impl Default for SearchOpts {
    fn default() -> Self {
        Self {
            restarts: 64,
            max_iters: 500,
            grad_tol: 1e-9,
            violation_tol: 1e-9,
            seed: 0,
            step_init: 1.0,
        }
    }
}

impl SearchOpts {
    /// Defaults used for SDPI-constant estimation.
    pub fn for_eta() -> Self {
        Self {
            restarts: 32,
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn validate(&self) -> crate::Result<()> {
        if self.restarts == 0
            || self.max_iters == 0
            || !(self.grad_tol > 0.0)
            || !(self.violation_tol > 0.0)
            || !(self.step_init > 0.0)
        {
            return Err(crate::Error::BadParameter(format!("invalid search options {self:?}")));
        }
        Ok(())
    }
}

/// A smooth objective over a convex feasible set given by its projection.
pub(crate) trait Objective: Sync {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], g: &mut [f64]);
    fn project(&self, x: &mut [f64]);
    /// Points rejected by this guard are never accepted as iterates.
    fn admissible(&self, _x: &[f64]) -> bool {
        true
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Descent {
    pub x: Vec<f64>,
    pub value: f64,
    pub converged: bool,
}

fn pg_norm(obj: &dyn Objective, x: &[f64], g: &[f64]) -> f64 {
    let mut y: Vec<f64> = x.iter().zip(g).map(|(a, b)| a - b).collect();
    obj.project(&mut y);
    x.iter()
        .zip(&y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Minimizes `obj` from `x0`.
pub(crate) fn descend(obj: &dyn Objective, x0: Vec<f64>, opts: &SearchOpts) -> Descent {
    let n = x0.len();
    let mut x = x0;
    obj.project(&mut x);
    let mut fx = obj.value(&x);
    let mut g = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut step = opts.step_init;
    let mut pg = f64::INFINITY;
    let mut stalls = 0;
    for _ in 0..opts.max_iters {
        obj.gradient(&x, &mut g);
        pg = pg_norm(obj, &x, &g);
        if pg < opts.grad_tol || !pg.is_finite() {
            break;
        }
        let mut accepted = false;
        for _ in 0..60 {
            for i in 0..n {
                y[i] = x[i] - step * g[i];
            }
            obj.project(&mut y);
            let decrease: f64 = g.iter().zip(&y).zip(&x).map(|((gi, yi), xi)| gi * (yi - xi)).sum();
            if obj.admissible(&y) {
                let fy = obj.value(&y);
                if fy.is_finite() && fy <= fx + 1e-4 * decrease {
                    let gain = fx - fy;
                    std::mem::swap(&mut x, &mut y);
                    fx = fy;
                    step *= 2.0;
                    accepted = true;
                    if gain <= 1e-15 * (1.0 + fx.abs()) {
                        stalls += 1;
                    } else {
                        stalls = 0;
                    }
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted || stalls >= 20 {
            break;
        }
    }
    Descent {
        converged: pg < opts.grad_tol,
        x,
        value: fx,
    }
}

/// Independent stream for restart `r` under `seed`.
pub fn restart_rng(seed: u64, r: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r as u64);
    rng
}

/// Runs one descent per start and returns all results in start order.
pub(crate) fn multistart(
    obj: &dyn Objective,
    starts: &[Vec<f64>],
    opts: &SearchOpts,
) -> Vec<Descent> {
    // `dyn Objective` is Sync, so the closure can be shared across workers.
    par::map_slice(starts, |x0| descend(obj, x0.clone(), opts))
}

/// Index of the smallest value; ties resolve to the lowest index.
pub(crate) fn best_index(runs: &[Descent]) -> usize {
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.value < runs[best].value || (runs[best].value.is_nan() && !r.value.is_nan()) {
            best = i;
        }
    }
    best
}
