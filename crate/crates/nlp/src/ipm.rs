//! Primal-dual interior-point method for small dense NLPs.
//!
//! Solves
//!
//! ```text
//! min f(x)  s.t.  c_i(x) = 0 (equality rows),  c_i(x) >= 0 (inequality rows),
//!                 lo <= x <= hi
//! ```
//!
//! Inequalities get explicit slacks, bounds are handled by a log barrier,
//! and each Newton step solves the full symmetric KKT system through an
//! eigen-decomposition, which doubles as the inertia test. Globalization is an
//! l2-penalty merit line search with one second-order correction.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintKind {
    Equality,
    NonNegative,
}

/// First and second derivatives of a problem at one point.
#[derive(Clone, Debug)]
pub struct Derivatives {
    pub objective: f64,
    pub gradient: DVector<f64>,
    /// Objective Hessian, n x n.
    pub hessian: DMatrix<f64>,
    pub constraints: DVector<f64>,
    /// Constraint Jacobian, m x n.
    pub jacobian: DMatrix<f64>,
    /// One n x n Hessian per constraint row.
    pub constraint_hessians: Vec<DMatrix<f64>>,
}

pub trait NlpProblem {
    fn num_variables(&self) -> usize;
    /// Variable bounds; infinite entries mean unbounded.
    fn bounds(&self) -> (Vec<f64>, Vec<f64>);
    fn constraint_kinds(&self) -> Vec<ConstraintKind>;
    /// Objective and constraint values, or `None` outside the evaluation domain.
    fn values(&self, x: &[f64]) -> Option<(f64, Vec<f64>)>;
    fn derivatives(&self, x: &[f64]) -> Option<Derivatives>;
}

#[derive(Clone, Debug, PartialEq)]
pub struct IpmOptions {
    pub max_iter: usize,
    pub constr_viol_tol: f64,
    pub dual_inf_tol: f64,
    pub compl_inf_tol: f64,
    pub mu_init: f64,
    pub mu_min: f64,
    pub bound_push: f64,
    pub kappa_eps: f64,
    pub kappa_mu: f64,
    pub theta_mu: f64,
    pub tau_min: f64,
    pub max_backtracks: usize,
}

impl Default for IpmOptions {
    fn default() -> Self {
        Self {
            max_iter: 300,
            constr_viol_tol: 1e-8,
            dual_inf_tol: 1e-6,
            compl_inf_tol: 1e-6,
            mu_init: 0.1,
            mu_min: 1e-11,
            bound_push: 1e-2,
            kappa_eps: 10.0,
            kappa_mu: 0.2,
            theta_mu: 1.5,
            tau_min: 0.99,
            max_backtracks: 40,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IpmStatus {
    Optimal,
    IterationLimit,
    LineSearchFailure,
    NumericalFailure,
    InvalidStart,
}

#[derive(Clone, Debug)]
pub struct IpmSolution {
    pub status: IpmStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub constraints: Vec<f64>,
    /// Constraint multipliers (sign convention: grad f + J^T lambda - z_l + z_u = 0).
    pub multipliers: Vec<f64>,
    pub iterations: usize,
    pub constraint_violation: f64,
    pub dual_infeasibility: f64,
    pub complementarity: f64,
}

/// Largest violation of the problem constraints at `c`.
pub fn constraint_violation(kinds: &[ConstraintKind], c: &[f64]) -> f64 {
    kinds
        .iter()
        .zip(c)
        .map(|(k, &v)| match k {
            ConstraintKind::Equality => v.abs(),
            ConstraintKind::NonNegative => (-v).max(0.0),
        })
        .fold(0.0, f64::max)
}

struct Layout {
    nw: usize,
    m: usize,
    slack_of: Vec<Option<usize>>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Layout {
    fn residual(&self, w: &[f64], c: &[f64]) -> DVector<f64> {
        DVector::from_fn(self.m, |i, _| match self.slack_of[i] {
            Some(s) => c[i] - w[s],
            None => c[i],
        })
    }

    fn barrier(&self, f: f64, w: &[f64], mu: f64) -> f64 {
        let mut phi = f;
        for i in 0..self.nw {
            if self.lo[i].is_finite() {
                let d = w[i] - self.lo[i];
                if d <= 0.0 {
                    return f64::INFINITY;
                }
                phi -= mu * d.ln();
            }
            if self.hi[i].is_finite() {
                let d = self.hi[i] - w[i];
                if d <= 0.0 {
                    return f64::INFINITY;
                }
                phi -= mu * d.ln();
            }
        }
        phi
    }

    /// Largest step in (0, 1] keeping `v + a*dv` a fraction `tau` inside the bounds.
    fn max_step(&self, w: &[f64], dw: &[f64], tau: f64) -> f64 {
        let mut a: f64 = 1.0;
        for i in 0..self.nw {
            if self.lo[i].is_finite() && dw[i] < 0.0 {
                a = a.min(-tau * (w[i] - self.lo[i]) / dw[i]);
            }
            if self.hi[i].is_finite() && dw[i] > 0.0 {
                a = a.min(tau * (self.hi[i] - w[i]) / dw[i]);
            }
        }
        a
    }
}

fn max_step_positive(z: &[f64], dz: &[f64], tau: f64) -> f64 {
    z.iter()
        .zip(dz)
        .filter(|(_, &d)| d < 0.0)
        .map(|(&v, &d)| -tau * v / d)
        .fold(1.0, f64::min)
}

fn push_interior(x: f64, lo: f64, hi: f64, kappa: f64) -> f64 {
    let mut v = x;
    if lo.is_finite() && hi.is_finite() {
        let p = (kappa * lo.abs().max(1.0)).min(kappa * (hi - lo));
        v = v.max(lo + p).min(hi - p);
    } else if lo.is_finite() {
        v = v.max(lo + kappa * lo.abs().max(1.0));
    } else if hi.is_finite() {
        v = v.min(hi - kappa * hi.abs().max(1.0));
    }
    v
}

struct Factor {
    eigen: SymmetricEigen<f64, nalgebra::Dyn>,
    /// Symmetric scaling applied before the decomposition.
    d: DVector<f64>,
}

impl Factor {
    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let q = &self.eigen.eigenvectors;
        let mut t = q.tr_mul(&rhs.component_mul(&self.d));
        for (ti, &l) in t.iter_mut().zip(self.eigen.eigenvalues.iter()) {
            *ti /= l;
        }
        (q * t).component_mul(&self.d)
    }
}

/// Ruiz equilibration: returns `d` so that `diag(d) k diag(d)` has rows of
/// unit max-norm. Congruence keeps the inertia.
fn equilibrate(k: &DMatrix<f64>) -> DVector<f64> {
    let dim = k.nrows();
    let mut d = DVector::from_element(dim, 1.0);
    for _ in 0..10 {
        let mut done = true;
        let mut upd = DVector::from_element(dim, 1.0);
        for i in 0..dim {
            let mut mx: f64 = 0.0;
            for j in 0..dim {
                mx = mx.max((d[i] * k[(i, j)] * d[j]).abs());
            }
            if mx > 0.0 {
                upd[i] = 1.0 / mx.sqrt();
                if (1.0 - mx).abs() > 1e-2 {
                    done = false;
                }
            }
        }
        d.component_mul_assign(&upd);
        if done {
            break;
        }
    }
    d
}

/// Factorizes the KKT matrix, regularizing until its inertia is (nw, m, 0).
fn factor_kkt(
    hess: &DMatrix<f64>,
    jac: &DMatrix<f64>,
    nw: usize,
    m: usize,
    mu: f64,
    delta_w_last: &mut f64,
) -> Option<Factor> {
    let dim = nw + m;
    let build = |dw: f64, dc: f64| {
        let mut k = DMatrix::<f64>::zeros(dim, dim);
        k.view_mut((0, 0), (nw, nw)).copy_from(hess);
        for i in 0..nw {
            k[(i, i)] += dw;
        }
        k.view_mut((nw, 0), (m, nw)).copy_from(jac);
        k.view_mut((0, nw), (nw, m)).copy_from(&jac.transpose());
        for i in 0..m {
            k[(nw + i, nw + i)] = -dc;
        }
        k
    };
    let decompose = |k: DMatrix<f64>| {
        let d = equilibrate(&k);
        let scaled = DMatrix::from_fn(dim, dim, |i, j| d[i] * k[(i, j)] * d[j]);
        (SymmetricEigen::new(scaled), d)
    };
    let inertia = |e: &SymmetricEigen<f64, nalgebra::Dyn>| {
        let thr = 1e-13 * e.eigenvalues.amax();
        let pos = e.eigenvalues.iter().filter(|&&v| v > thr).count();
        let neg = e.eigenvalues.iter().filter(|&&v| v < -thr).count();
        (pos, neg, dim - pos - neg)
    };

    let mut delta_c = 0.0;
    let mut delta_w = 0.0;
    let (mut eigen, mut d) = decompose(build(delta_w, delta_c));
    let (mut pos, mut neg, mut zero) = inertia(&eigen);
    let delta_c0 = 1e-8 * mu.powf(0.25);
    if zero > 0 && m > 0 {
        delta_c = delta_c0;
        (eigen, d) = decompose(build(delta_w, delta_c));
        (pos, neg, zero) = inertia(&eigen);
    }
    if pos == nw && neg == m && zero == 0 {
        return Some(Factor { eigen, d });
    }
    delta_w = if *delta_w_last == 0.0 {
        1e-4
    } else {
        (*delta_w_last / 3.0).max(1e-20)
    };
    let growth = if *delta_w_last == 0.0 { 100.0 } else { 8.0 };
    loop {
        (eigen, d) = decompose(build(delta_w, delta_c));
        (pos, neg, zero) = inertia(&eigen);
        if pos == nw && neg == m && zero == 0 {
            *delta_w_last = delta_w;
            return Some(Factor { eigen, d });
        }
        if m > 0 && neg < m {
            // Too few negative directions: the Jacobian block is rank deficient.
            delta_c = if delta_c == 0.0 { delta_c0 } else { delta_c * 10.0 };
        } else {
            delta_w *= growth;
        }
        if delta_w > 1e40 || delta_c > 1e10 {
            return None;
        }
    }
}

/// Runs the interior-point method from `x0`.
pub fn solve<P: NlpProblem + ?Sized>(problem: &P, x0: &[f64], opts: &IpmOptions) -> IpmSolution {
    let n = problem.num_variables();
    let kinds = problem.constraint_kinds();
    let m = kinds.len();
    let (xl, xu) = problem.bounds();
    assert_eq!(x0.len(), n, "start point has wrong dimension");

    let mut slack_of = vec![None; m];
    let mut nw = n;
    for (i, k) in kinds.iter().enumerate() {
        if *k == ConstraintKind::NonNegative {
            slack_of[i] = Some(nw);
            nw += 1;
        }
    }
    let mut lo = xl;
    let mut hi = xu;
    lo.resize(nw, 0.0);
    hi.resize(nw, f64::INFINITY);
    let lay = Layout {
        nw,
        m,
        slack_of,
        lo,
        hi,
    };

    let failed = |status, x: Vec<f64>, iterations| IpmSolution {
        status,
        x,
        objective: f64::NAN,
        constraints: vec![f64::NAN; m],
        multipliers: vec![0.0; m],
        iterations,
        constraint_violation: f64::INFINITY,
        dual_infeasibility: f64::INFINITY,
        complementarity: f64::INFINITY,
    };

    let mut w = vec![0.0; nw];
    for i in 0..n {
        w[i] = push_interior(x0[i], lay.lo[i], lay.hi[i], opts.bound_push);
    }
    let Some((mut f, mut c)) = problem.values(&w[..n]) else {
        return failed(IpmStatus::InvalidStart, w[..n].to_vec(), 0);
    };
    if !f.is_finite() || c.iter().any(|v| !v.is_finite()) {
        return failed(IpmStatus::InvalidStart, w[..n].to_vec(), 0);
    }
    for i in 0..m {
        if let Some(s) = lay.slack_of[i] {
            w[s] = push_interior(c[i], 0.0, f64::INFINITY, opts.bound_push);
        }
    }

    let mut lam = DVector::<f64>::zeros(m);
    let mut zl: Vec<f64> = (0..nw).map(|i| if lay.lo[i].is_finite() { 1.0 } else { 0.0 }).collect();
    let mut zu: Vec<f64> = (0..nw).map(|i| if lay.hi[i].is_finite() { 1.0 } else { 0.0 }).collect();
    let mut mu = opts.mu_init;
    let mut nu = 1.0;
    let mut delta_w_last = 0.0;
    let eta = 1e-4;

    let mut last = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    for iter in 0..opts.max_iter {
        let Some(d) = problem.derivatives(&w[..n]) else {
            return failed(IpmStatus::NumericalFailure, w[..n].to_vec(), iter);
        };
        f = d.objective;
        c = d.constraints.iter().copied().collect();

        let mut jac = DMatrix::<f64>::zeros(m, nw);
        jac.view_mut((0, 0), (m, n)).copy_from(&d.jacobian);
        for i in 0..m {
            if let Some(s) = lay.slack_of[i] {
                jac[(i, s)] = -1.0;
            }
        }
        let resid = lay.residual(&w, &c);
        let mut gw = DVector::<f64>::zeros(nw);
        gw.rows_mut(0, n).copy_from(&d.gradient);

        if lam.amax() > 1e4 {
            // Regularized steps on inconsistent linearizations can blow the
            // multipliers up; fall back to the least-squares estimate.
            let mut r = gw.clone();
            for i in 0..nw {
                r[i] += zu[i] - zl[i];
            }
            let jt = jac.transpose();
            let est = jt.svd(true, true).solve(&(-r), 1e-10).unwrap_or_else(|_| DVector::zeros(m));
            lam = if est.amax() <= 1e4 { est } else { DVector::zeros(m) };
        }
        let jt_lam = jac.tr_mul(&lam);
        let compl = |mu: f64, zl: &[f64], zu: &[f64]| {
            let mut e: f64 = 0.0;
            for i in 0..nw {
                if lay.lo[i].is_finite() {
                    e = e.max(((w[i] - lay.lo[i]) * zl[i] - mu).abs());
                }
                if lay.hi[i].is_finite() {
                    e = e.max(((lay.hi[i] - w[i]) * zu[i] - mu).abs());
                }
            }
            e
        };
        let zsum: f64 = zl.iter().chain(zu.iter()).map(|v| v.abs()).sum();
        let s_max = 100.0;
        let s_d = ((lam.lp_norm(1) + zsum) / ((m + 2 * nw).max(1) as f64)).max(s_max) / s_max;
        let s_c = (zsum / ((2 * nw).max(1) as f64)).max(s_max) / s_max;
        let mut dual = 0.0f64;
        for i in 0..nw {
            dual = dual.max((gw[i] + jt_lam[i] - zl[i] + zu[i]).abs());
        }
        let dual_inf = dual / s_d;
        let primal = resid.amax();
        let compl0 = compl(0.0, &zl, &zu) / s_c;
        last = (primal, dual_inf, compl0);

        if primal <= opts.constr_viol_tol && dual_inf <= opts.dual_inf_tol && compl0 <= opts.compl_inf_tol {
            return IpmSolution {
                status: IpmStatus::Optimal,
                x: w[..n].to_vec(),
                objective: f,
                constraint_violation: constraint_violation(&kinds, &c),
                constraints: c,
                multipliers: lam.iter().copied().collect(),
                iterations: iter,
                dual_infeasibility: dual_inf,
                complementarity: compl0,
            };
        }

        loop {
            let e_mu = dual_inf.max(primal).max(compl(mu, &zl, &zu) / s_c);
            if e_mu <= opts.kappa_eps * mu && mu > opts.mu_min {
                mu = (opts.kappa_mu * mu).min(mu.powf(opts.theta_mu)).max(opts.mu_min);
            } else {
                break;
            }
        }
        let tau = opts.tau_min.max(1.0 - mu);

        // Lagrangian Hessian in w-space plus the barrier diagonal.
        let mut hess = DMatrix::<f64>::zeros(nw, nw);
        {
            let mut h = d.hessian.clone();
            for (i, hc) in d.constraint_hessians.iter().enumerate() {
                if lam[i] != 0.0 {
                    h += hc * lam[i];
                }
            }
            hess.view_mut((0, 0), (n, n)).copy_from(&h);
        }
        let mut grad_phi = gw.clone();
        for i in 0..nw {
            if lay.lo[i].is_finite() {
                let dl = w[i] - lay.lo[i];
                hess[(i, i)] += zl[i] / dl;
                grad_phi[i] -= mu / dl;
            }
            if lay.hi[i].is_finite() {
                let du = lay.hi[i] - w[i];
                hess[(i, i)] += zu[i] / du;
                grad_phi[i] += mu / du;
            }
        }

        let mut rhs = DVector::<f64>::zeros(nw + m);
        rhs.rows_mut(0, nw).copy_from(&(-(&grad_phi + &jt_lam)));
        rhs.rows_mut(nw, m).copy_from(&(-&resid));

        let merit_at = |wt: &[f64], nu: f64, mu: f64| -> Option<(f64, Vec<f64>, f64)> {
            let (ft, ct) = problem.values(&wt[..n])?;
            if !ft.is_finite() || ct.iter().any(|v| !v.is_finite()) {
                return None;
            }
            let phi = lay.barrier(ft, wt, mu);
            if !phi.is_finite() {
                return None;
            }
            let cn = lay.residual(wt, &ct).norm();
            Some((phi + nu * cn, ct, ft))
        };

        let mut accepted = false;
        let mut extra_reg = 0.0;
        for _attempt in 0..4 {
            let mut hreg = hess.clone();
            for i in 0..nw {
                hreg[(i, i)] += extra_reg;
            }
            let Some(fac) = factor_kkt(&hreg, &jac, nw, m, mu, &mut delta_w_last) else {
                return failed(IpmStatus::NumericalFailure, w[..n].to_vec(), iter);
            };
            let sol = fac.solve(&rhs);
            let dw: Vec<f64> = sol.rows(0, nw).iter().copied().collect();
            let dlam = sol.rows(nw, m).clone_owned();
            if dw.iter().any(|v| !v.is_finite()) {
                return failed(IpmStatus::NumericalFailure, w[..n].to_vec(), iter);
            }

            let dwv = DVector::from_column_slice(&dw);
            let cn = resid.norm();
            let dphi = grad_phi.dot(&dwv);
            // Predicted decrease of ||C|| along dw (exact directional derivative).
            let pred = if cn > 1e-14 { -resid.dot(&(&jac * &dwv)) / cn } else { 0.0 };
            if pred > 1e-14 * (1.0 + cn) {
                let quad = dwv.dot(&(&hreg * &dwv)).max(0.0);
                let need = (dphi + 0.5 * quad) / (0.9 * pred);
                if nu < need {
                    nu = need + 1.0;
                }
            }
            let dmerit = dphi - nu * pred;
            let phi0 = lay.barrier(f, &w, mu) + nu * cn;
            // Round-off allowance for merit comparisons.
            let slop = 10.0 * f64::EPSILON * (phi0.abs() + 1.0);

            let alpha_max = lay.max_step(&w, &dw, tau);
            let tiny = dw
                .iter()
                .zip(&w)
                .all(|(d, v)| d.abs() <= 10.0 * f64::EPSILON * (1.0 + v.abs()));

            let dz_of = |dwv: &[f64]| {
                let mut dzl = vec![0.0; nw];
                let mut dzu = vec![0.0; nw];
                for i in 0..nw {
                    if lay.lo[i].is_finite() {
                        let dl = w[i] - lay.lo[i];
                        dzl[i] = mu / dl - zl[i] - zl[i] / dl * dwv[i];
                    }
                    if lay.hi[i].is_finite() {
                        let du = lay.hi[i] - w[i];
                        dzu[i] = mu / du - zu[i] + zu[i] / du * dwv[i];
                    }
                }
                (dzl, dzu)
            };

            let mut step: Option<(Vec<f64>, f64, DVector<f64>)> = None;
            if tiny {
                step = Some((dw.clone(), alpha_max, dlam.clone()));
            } else {
                let mut alpha = alpha_max;
                for bt in 0..opts.max_backtracks {
                    let trial: Vec<f64> = (0..nw).map(|i| w[i] + alpha * dw[i]).collect();
                    let eval = merit_at(&trial, nu, mu);
                    if let Some((mt, ct, _)) = &eval {
                        if *mt <= phi0 + eta * alpha * dmerit + slop || (dmerit >= 0.0 && *mt <= phi0 + slop) {
                            step = Some((dw.clone(), alpha, dlam.clone()));
                            break;
                        }
                        if bt == 0 && m > 0 {
                            // Second-order correction on the first rejected trial.
                            let ctrial = lay.residual(&trial, ct);
                            if ctrial.norm() >= cn {
                                let c_soc = &resid * alpha + &ctrial;
                                let mut rs = DVector::<f64>::zeros(nw + m);
                                rs.rows_mut(0, nw).copy_from(&rhs.rows(0, nw));
                                rs.rows_mut(nw, m).copy_from(&(-c_soc));
                                let s2 = fac.solve(&rs);
                                let dsoc: Vec<f64> = s2.rows(0, nw).iter().copied().collect();
                                let a_soc = lay.max_step(&w, &dsoc, tau);
                                let tsoc: Vec<f64> = (0..nw).map(|i| w[i] + a_soc * dsoc[i]).collect();
                                if let Some((ms, _, _)) = merit_at(&tsoc, nu, mu) {
                                    if ms <= phi0 + eta * alpha * dmerit + slop {
                                        let dl2 = s2.rows(nw, m).clone_owned();
                                        step = Some((dsoc, a_soc, dl2));
                                        break;
                                    }
                                }
                            }
                        }
                    }
                    alpha *= 0.5;
                }
            }

            if let Some((dir, alpha, dl)) = step {
                let (dzl, dzu) = dz_of(&dir);
                let a_z = max_step_positive(&zl, &dzl, tau).min(max_step_positive(&zu, &dzu, tau));
                for i in 0..nw {
                    w[i] += alpha * dir[i];
                }
                lam += dl * alpha;
                for i in 0..nw {
                    if lay.lo[i].is_finite() {
                        zl[i] += a_z * dzl[i];
                        let dl = w[i] - lay.lo[i];
                        zl[i] = zl[i].min(1e10 * mu / dl).max(mu / (1e10 * dl));
                    }
                    if lay.hi[i].is_finite() {
                        zu[i] += a_z * dzu[i];
                        let du = lay.hi[i] - w[i];
                        zu[i] = zu[i].min(1e10 * mu / du).max(mu / (1e10 * du));
                    }
                }
                accepted = true;
                break;
            }
            extra_reg = if extra_reg == 0.0 { 1e-2 } else { extra_reg * 100.0 };
        }
        if !accepted {
            let (obj, cons) = problem.values(&w[..n]).unwrap_or((f, c.clone()));
            return IpmSolution {
                status: IpmStatus::LineSearchFailure,
                x: w[..n].to_vec(),
                objective: obj,
                constraint_violation: constraint_violation(&kinds, &cons),
                constraints: cons,
                multipliers: lam.iter().copied().collect(),
                iterations: iter,
                dual_infeasibility: last.1,
                complementarity: last.2,
            };
        }
    }
    let (obj, cons) = problem.values(&w[..n]).unwrap_or((f, c));
    IpmSolution {
        status: IpmStatus::IterationLimit,
        x: w[..n].to_vec(),
        objective: obj,
        constraint_violation: constraint_violation(&kinds, &cons),
        constraints: cons,
        multipliers: lam.iter().copied().collect(),
        iterations: opts.max_iter,
        dual_infeasibility: last.1,
        complementarity: last.2,
    }
}
