//! Multi-start local solves of an [`InverseModel`].

use carson_nlp::{constraint_violation, solve as ipm_solve, IpmOptions, IpmStatus, NlpProblem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::model::{InverseModel, Point};

pub const DEFAULT_SEED: u64 = 0x0005_eed0_c0ff_ee11;

/// Violation below which a run counts as satisfying the model's rows.
pub const FEASIBILITY_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    /// Pseudo-random starts in addition to any warm starts.
    pub starts: usize,
    pub seed: u64,
    pub ipm: IpmOptions,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            starts: 16,
            seed: DEFAULT_SEED,
            ipm: IpmOptions::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    /// The variable boxes or fixed values admit no point.
    Infeasible,
    /// No run converged but the best one satisfies the rows.
    IterationLimit,
    NoConvergence,
}

impl SolveStatus {
    /// Whether the returned point can be used.
    pub fn usable(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::IterationLimit)
    }
}

/// Outcome of one local solve.
#[derive(Clone, Debug)]
pub struct Run {
    pub start: usize,
    pub warm: bool,
    pub status: IpmStatus,
    pub objective: f64,
    pub point: Point,
    pub aux: Vec<f64>,
    pub violation: f64,
    pub stationarity: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub status: SolveStatus,
    pub objective: f64,
    pub point: Point,
    pub aux: Vec<f64>,
    pub violation: f64,
    pub stationarity: f64,
    /// Number of local solves attempted.
    pub starts: usize,
    pub converged: usize,
    pub runs: Vec<Run>,
    pub message: Option<String>,
}

/// Radical inverse of `index` in `base`.
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Deterministic low-discrepancy starts in the scaled box, skipping points
/// that violate the geometry rows.
pub fn start_points(model: &InverseModel, starts: usize, seed: u64) -> Vec<Vec<f64>> {
    let d = model.free.len();
    if starts == 0 {
        return Vec::new();
    }
    if d == 0 {
        return vec![Vec::new()];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
    let mut out = Vec::with_capacity(starts);
    let mut k = 1u64;
    while out.len() < starts && k <= 64 * starts as u64 {
        let z: Vec<f64> = (0..d)
            .map(|i| {
                let v = halton(k, PRIMES[i]) + shift[i];
                // keep starts off the bounds
                0.01 + 0.98 * (v - v.floor())
            })
            .collect();
        if model.geometry_ok(&z) {
            out.push(z);
        }
        k += 1;
    }
    out
}

fn run_one(model: &InverseModel, z0: &[f64], start: usize, warm: bool, ipm: &IpmOptions) -> Run {
    let mut x0 = z0.to_vec();
    x0.extend(model.initial_aux(z0));
    let s = ipm_solve(model, &x0, ipm);
    let nf = model.free.len();
    let kinds = model.constraint_kinds();
    let violation = match model.values(&s.x) {
        Some((_, c)) => constraint_violation(&kinds, &c),
        None => f64::INFINITY,
    };
    Run {
        start,
        warm,
        status: s.status,
        objective: s.objective,
        point: model.point(&s.x[..nf]),
        aux: s.x[nf..].to_vec(),
        violation,
        stationarity: s.dual_infeasibility,
        iterations: s.iterations,
    }
}

pub fn solve(model: &InverseModel, options: &SolverOptions) -> Solution {
    solve_from(model, options, &[])
}

/// Solves from the warm points first, then from `options.starts`
/// pseudo-random starts; the lowest converged objective wins, earlier runs
/// winning ties.
pub fn solve_from(model: &InverseModel, options: &SolverOptions, warm: &[Point]) -> Solution {
    if let Some(msg) = &model.infeasible_bounds {
        return Solution {
            status: SolveStatus::Infeasible,
            objective: f64::INFINITY,
            point: model.point(&vec![0.5; model.free.len()]),
            aux: Vec::new(),
            violation: f64::INFINITY,
            stationarity: f64::INFINITY,
            starts: 0,
            converged: 0,
            runs: Vec::new(),
            message: Some(msg.clone()),
        };
    }
    let mut starts: Vec<(Vec<f64>, bool)> = warm
        .iter()
        .filter_map(|p| model.scale(p))
        .map(|z| (z, true))
        .collect();
    starts.extend(start_points(model, options.starts, options.seed).into_iter().map(|z| (z, false)));

    let runs: Vec<Run> = starts
        .iter()
        .enumerate()
        .map(|(i, (z, w))| run_one(model, z, i, *w, &options.ipm))
        .collect();

    let converged = runs
        .iter()
        .filter(|r| r.status == IpmStatus::Optimal && r.violation <= FEASIBILITY_TOL)
        .count();
    let pick = |pred: &dyn Fn(&Run) -> bool| {
        runs.iter()
            .filter(|r| pred(r))
            .fold(None::<&Run>, |best, r| match best {
                Some(b) if b.objective <= r.objective => Some(b),
                _ => Some(r),
            })
    };
    let (status, best) = if let Some(b) = pick(&|r| r.status == IpmStatus::Optimal && r.violation <= FEASIBILITY_TOL) {
        (SolveStatus::Optimal, Some(b))
    } else if let Some(b) = pick(&|r| r.violation <= FEASIBILITY_TOL && r.objective.is_finite()) {
        (SolveStatus::IterationLimit, Some(b))
    } else {
        let least = runs
            .iter()
            .fold(None::<&Run>, |best, r| match best {
                Some(b) if b.violation <= r.violation => Some(b),
                _ => Some(r),
            });
        (SolveStatus::NoConvergence, least)
    };
    match best {
        Some(b) => Solution {
            status,
            objective: b.objective,
            point: b.point.clone(),
            aux: b.aux.clone(),
            violation: b.violation,
            stationarity: b.stationarity,
            starts: runs.len(),
            converged,
            message: None,
            runs: runs.clone(),
        },
        None => Solution {
            status: SolveStatus::NoConvergence,
            objective: f64::INFINITY,
            point: model.point(&vec![0.5; model.free.len()]),
            aux: Vec::new(),
            violation: f64::INFINITY,
            stationarity: f64::INFINITY,
            starts: 0,
            converged: 0,
            runs: Vec::new(),
            message: Some("no admissible start point".into()),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_base_two() {
        let v: Vec<f64> = (1..5).map(|i| halton(i, 2)).collect();
        assert_eq!(v, vec![0.5, 0.25, 0.75, 0.125]);
    }
}
