//! The line model written over real/imaginary pairs and generic scalars.
//!
//! Evaluated with `f64` it lifts a decision point to every intermediate
//! quantity; evaluated with [`Dual2`](carson_nlp::Dual2) it yields exact
//! first and second derivatives for the solver.

use std::ops::{Add, Mul, Sub};

use carson_nlp::Scalar;

use crate::catalog::{CarsonConstants, ConfigSpec, Family, MaterialSpec};
use crate::conductor::AcCorrections;

#[derive(Clone, Copy, Debug)]
pub struct Cx<S> {
    pub re: S,
    pub im: S,
}

impl<S: Scalar> Cx<S> {
    pub fn new(re: S, im: S) -> Self {
        Self { re, im }
    }

    pub fn zero() -> Self {
        Self::new(S::zero(), S::zero())
    }

    pub fn div(self, o: Self) -> Self {
        let den = o.re * o.re + o.im * o.im;
        Self::new(
            (self.re * o.re + self.im * o.im) / den,
            (self.im * o.re - self.re * o.im) / den,
        )
    }
}

impl<S: Scalar> Add for Cx<S> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.re + o.re, self.im + o.im)
    }
}

impl<S: Scalar> Sub for Cx<S> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.re - o.re, self.im - o.im)
    }
}

impl<S: Scalar> Mul for Cx<S> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }
}

pub type CMat<S> = Vec<Vec<Cx<S>>>;
pub type RMat<S> = Vec<Vec<S>>;

/// Real and imaginary parts of the symmetrical-component matrix.
pub fn transform_parts() -> ([[f64; 3]; 3], [[f64; 3]; 3]) {
    let h = 3f64.sqrt() / 2.0;
    let re = [[1.0, 1.0, 1.0], [1.0, -0.5, -0.5], [1.0, -0.5, -0.5]];
    let im = [[0.0, 0.0, 0.0], [0.0, -h, h], [0.0, h, -h]];
    (re, im)
}

/// `A^-1 M A` with `A^-1 = (A_re - j A_im) / 3`.
pub fn to_sequence<S: Scalar>(m: &CMat<S>) -> CMat<S> {
    let (ar, ai) = transform_parts();
    let mut p = vec![vec![Cx::<S>::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut re = S::zero();
            let mut im = S::zero();
            for k in 0..3 {
                re = re + m[i][k].re * ar[k][j] - m[i][k].im * ai[k][j];
                im = im + m[i][k].re * ai[k][j] + m[i][k].im * ar[k][j];
            }
            p[i][j] = Cx::new(re, im);
        }
    }
    let mut q = vec![vec![Cx::<S>::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut re = S::zero();
            let mut im = S::zero();
            for k in 0..3 {
                re = re + p[k][j].re * ar[i][k] + p[k][j].im * ai[i][k];
                im = im + p[k][j].im * ar[i][k] - p[k][j].re * ai[i][k];
            }
            q[i][j] = Cx::new(re / 3.0, im / 3.0);
        }
    }
    q
}

/// Gauss-Jordan inverse with partial pivoting on values.
pub fn invert<S: Scalar>(m: &RMat<S>) -> Option<RMat<S>> {
    let n = m.len();
    let mut a = m.clone();
    let mut inv: RMat<S> = (0..n)
        .map(|i| (0..n).map(|j| S::constant(if i == j { 1.0 } else { 0.0 })).collect())
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].value().abs().total_cmp(&a[j][col].value().abs()))?;
        if a[piv][col].value() == 0.0 {
            return None;
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let d = a[col][col];
        for j in 0..n {
            a[col][j] = a[col][j] / d;
            inv[col][j] = inv[col][j] / d;
        }
        for i in 0..n {
            if i != col {
                let f = a[i][col];
                for j in 0..n {
                    a[i][j] = a[i][j] - f * a[col][j];
                    inv[i][j] = inv[i][j] - f * inv[col][j];
                }
            }
        }
    }
    Some(inv)
}

/// Physical decision values. `u1` is ignored for cables with a packing
/// coefficient, where it follows from `r` and `t_nom`.
#[derive(Clone, Copy, Debug)]
pub struct Decision<S> {
    pub r: S,
    pub t: S,
    pub t_nom: Option<S>,
    pub u1: Option<S>,
    pub u2: Option<S>,
    pub v1: Option<S>,
    pub v_ref: S,
}

/// Every intermediate quantity of one line.
#[derive(Clone, Debug)]
pub struct LineExpressions<S> {
    pub area: S,
    pub r_dc: S,
    pub r_ac: S,
    pub gmr: S,
    pub core: Option<S>,
    pub nominal: Option<S>,
    /// Effective core/phase spacing.
    pub u1: S,
    pub x: Vec<S>,
    pub y: Vec<S>,
    pub d: RMat<S>,
    pub s: RMat<S>,
    pub z: CMat<S>,
    pub zkr: Option<CMat<S>>,
    pub z012: CMat<S>,
    pub p: Option<RMat<S>>,
    pub c: Option<RMat<S>>,
    pub y012: Option<CMat<S>>,
}

pub struct LineModel<'a> {
    pub constants: &'a CarsonConstants,
    pub config: &'a ConfigSpec,
    pub material: &'a MaterialSpec,
    pub corrections: AcCorrections,
    pub frequency: f64,
}

impl LineModel<'_> {
    pub fn coordinates<S: Scalar>(&self, u1: S, dec: &Decision<S>) -> (Vec<S>, Vec<S>) {
        let z = S::zero();
        let h = dec.v_ref;
        match self.config.family {
            Family::Horizontal4w => {
                let u2 = dec.u2.expect("u2 present");
                (vec![-u2, -u1, u1, u2], vec![h; 4])
            }
            Family::NeutralUnder => {
                let v1 = dec.v1.expect("v1 present");
                (vec![-u1, z, u1, z], vec![h, h, h, h - v1])
            }
            Family::Horizontal3w => (vec![-u1, z, u1], vec![h; 3]),
            Family::Triangular => {
                let tan = self.config.theta.unwrap_or(0.0).to_radians().tan();
                (vec![-u1, z, u1], vec![h, h + u1 * tan, h])
            }
            Family::Horizontal2w | Family::Cable2 => (vec![-u1, u1], vec![h; 2]),
            Family::Cable4 => (vec![u1, -u1, -u1, u1], vec![h + u1, h + u1, h - u1, h - u1]),
            Family::Cable3 => {
                let k = u1 / 3f64.sqrt();
                (vec![-u1, z, u1], vec![h - k, h + k * 2.0, h - k])
            }
        }
    }

    pub fn evaluate<S: Scalar>(&self, dec: &Decision<S>, with_shunt: bool) -> LineExpressions<S> {
        let k = self.constants;
        let strand = &self.config.strand;
        let area = dec.r * dec.r * (strand.n as f64 * std::f64::consts::PI);
        let r_dc = (dec.t - 20.0) * self.material.alpha * self.material.rho / area
            + S::constant(self.material.rho) / area;
        let r_ac = r_dc * ((1.0 + self.corrections.skin) * (1.0 + self.corrections.proximity));
        let gmr = dec.r * strand.k_gmr;
        let core = strand.k_r.map(|kr| dec.r * kr);
        let nominal = match (core, dec.t_nom) {
            (Some(c), Some(t)) => Some(c + t),
            _ => None,
        };
        let u1 = if self.config.family.is_cable() && nominal.is_some() {
            nominal.unwrap()
        } else {
            dec.u1.expect("u1 present")
        };
        let (x, y) = self.coordinates(u1, dec);
        let n = x.len();

        let mut d = vec![vec![S::zero(); n]; n];
        let mut s = vec![vec![S::zero(); n]; n];
        for i in 0..n {
            s[i][i] = (y[i] * 2.0).square().sqrt();
            for j in 0..n {
                if i != j {
                    let dx = x[i] - x[j];
                    d[i][j] = (dx.square() + (y[i] - y[j]).square()).sqrt();
                    s[i][j] = (dx.square() + (y[i] + y[j]).square()).sqrt();
                }
            }
        }

        let mut z = vec![vec![Cx::<S>::zero(); n]; n];
        for i in 0..n {
            for j in 0..n {
                z[i][j] = if i == j {
                    Cx::new(
                        r_ac + k.k1,
                        ((gmr * k.k3).ln() * -1.0 + k.k4) * k.k2,
                    )
                } else {
                    Cx::new(S::constant(k.k1), ((d[i][j] * k.k3).ln() * -1.0 + k.k4) * k.k2)
                };
            }
        }

        let zkr = (n == 4).then(|| {
            let znn = z[3][3];
            (0..3)
                .map(|i| (0..3).map(|j| z[i][j] - (z[i][3] * z[3][j]).div(znn)).collect())
                .collect::<CMat<S>>()
        });
        let abc: CMat<S> = match &zkr {
            Some(m) => m.clone(),
            None => z.iter().take(3).map(|r| r.iter().take(3).copied().collect()).collect(),
        };
        let z012 = to_sequence(&abc);

        let (mut p, mut c, mut y012) = (None, None, None);
        if with_shunt {
            if let Some(rc) = core {
                let pm: RMat<S> = (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| {
                                if i == j {
                                    (s[i][i] / rc).ln() * k.k5
                                } else {
                                    (s[i][j] / d[i][j]).ln() * k.k5
                                }
                            })
                            .collect()
                    })
                    .collect();
                if let Some(cm) = invert(&pm) {
                    let w = 2.0 * std::f64::consts::PI * self.frequency;
                    let yabc: CMat<S> = (0..3)
                        .map(|i| (0..3).map(|j| Cx::new(S::zero(), cm[i][j] * w)).collect())
                        .collect();
                    y012 = Some(to_sequence(&yabc));
                    c = Some(cm);
                }
                p = Some(pm);
            }
        }

        LineExpressions {
            area,
            r_dc,
            r_ac,
            gmr,
            core,
            nominal,
            u1,
            x,
            y,
            d,
            s,
            z,
            zkr,
            z012,
            p,
            c,
            y012,
        }
    }
}
