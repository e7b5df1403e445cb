use approx::assert_relative_eq;
use carson_nlp::{solve, ConstraintKind, Derivatives, Dual2, IpmOptions, IpmStatus, NlpProblem, Scalar};
use nalgebra::{DMatrix, DVector};

type D = Dual2<4>;

/// Test problem defined by a generic closure returning (objective, constraints).
struct Generic<F> {
    n: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    kinds: Vec<ConstraintKind>,
    f: F,
}

trait Model {
    fn eval<S: Scalar>(&self, x: &[S]) -> (S, Vec<S>);
}

impl<F: Model> NlpProblem for Generic<F> {
    fn num_variables(&self) -> usize {
        self.n
    }
    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (self.lo.clone(), self.hi.clone())
    }
    fn constraint_kinds(&self) -> Vec<ConstraintKind> {
        self.kinds.clone()
    }
    fn values(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        Some(self.f.eval(x))
    }
    fn derivatives(&self, x: &[f64]) -> Option<Derivatives> {
        let xs: Vec<D> = x.iter().enumerate().map(|(i, &v)| D::variable(v, i, 1.0)).collect();
        let (f, c) = self.f.eval(&xs);
        let n = self.n;
        let m = c.len();
        let hess = |d: &D| DMatrix::from_fn(n, n, |i, j| d.h[i][j]);
        Some(Derivatives {
            objective: f.v,
            gradient: DVector::from_fn(n, |i, _| f.g[i]),
            hessian: hess(&f),
            constraints: DVector::from_fn(m, |i, _| c[i].v),
            jacobian: DMatrix::from_fn(m, n, |i, j| c[i].g[j]),
            constraint_hessians: c.iter().map(hess).collect(),
        })
    }
}

struct Hs071;
impl Model for Hs071 {
    fn eval<S: Scalar>(&self, x: &[S]) -> (S, Vec<S>) {
        let f = x[0] * x[3] * (x[0] + x[1] + x[2]) + x[2];
        let g1 = x[0] * x[1] * x[2] * x[3] - 25.0;
        let g2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3] - 40.0;
        (f, vec![g1, g2])
    }
}

#[test]
fn hs071_reaches_known_optimum() {
    let p = Generic {
        n: 4,
        lo: vec![1.0; 4],
        hi: vec![5.0; 4],
        kinds: vec![ConstraintKind::NonNegative, ConstraintKind::Equality],
        f: Hs071,
    };
    let s = solve(&p, &[1.0, 5.0, 5.0, 1.0], &IpmOptions::default());
    assert_eq!(s.status, IpmStatus::Optimal);
    assert_relative_eq!(s.objective, 17.014017145, max_relative = 1e-7);
    let expect = [1.0, 4.74299963, 3.82114998, 1.37940829];
    for (a, b) in s.x.iter().zip(expect) {
        assert_relative_eq!(*a, b, max_relative = 1e-5);
    }
}

struct Rosen;
impl Model for Rosen {
    fn eval<S: Scalar>(&self, x: &[S]) -> (S, Vec<S>) {
        let a = S::one() - x[0];
        let b = x[1] - x[0] * x[0];
        (a * a + b * b * 100.0, vec![])
    }
}

#[test]
fn bound_constrained_rosenbrock_hits_active_bound() {
    let p = Generic {
        n: 2,
        lo: vec![-2.0, -2.0],
        hi: vec![0.5, 2.0],
        kinds: vec![],
        f: Rosen,
    };
    let s = solve(&p, &[-1.2, 1.0], &IpmOptions::default());
    assert_eq!(s.status, IpmStatus::Optimal);
    assert!((s.x[0] - 0.5).abs() < 1e-6);
    assert!((s.x[1] - 0.25).abs() < 1e-5);
}

/// Three consistent equations in two unknowns: rank-deficient Jacobian.
struct Overdetermined;
impl Model for Overdetermined {
    fn eval<S: Scalar>(&self, x: &[S]) -> (S, Vec<S>) {
        let c1 = x[0] * x[1] - 2.0;
        let c2 = x[0] + x[1] - 3.0;
        let c3 = x[0] * x[0] + x[1] * x[1] - 5.0;
        (x[0], vec![c1, c2, c3])
    }
}

#[test]
fn overdetermined_consistent_equalities_converge() {
    let p = Generic {
        n: 2,
        lo: vec![0.0, 0.0],
        hi: vec![10.0, 10.0],
        kinds: vec![ConstraintKind::Equality; 3],
        f: Overdetermined,
    };
    let s = solve(&p, &[0.7, 2.9], &IpmOptions::default());
    assert_eq!(s.status, IpmStatus::Optimal, "{s:?}");
    assert!(s.constraint_violation <= 1e-8);
    assert!((s.x[0] - 1.0).abs() < 1e-6 && (s.x[1] - 2.0).abs() < 1e-6);
}

/// Maximize x subject to a disc, starting away from the feasible set.
struct Disc;
impl Model for Disc {
    fn eval<S: Scalar>(&self, x: &[S]) -> (S, Vec<S>) {
        let c = S::constant(1.0) - (x[0] - 2.0).square() - (x[1] - 1.0).square();
        (-x[0], vec![c])
    }
}

#[test]
fn infeasible_start_reaches_disc_boundary() {
    let p = Generic {
        n: 2,
        lo: vec![-10.0, -10.0],
        hi: vec![10.0, 10.0],
        kinds: vec![ConstraintKind::NonNegative],
        f: Disc,
    };
    let s = solve(&p, &[-5.0, 7.0], &IpmOptions::default());
    assert_eq!(s.status, IpmStatus::Optimal);
    assert!((s.x[0] - 3.0).abs() < 1e-6);
    assert!((s.x[1] - 1.0).abs() < 1e-3);
}
