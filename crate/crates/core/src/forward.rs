//! Closed-form forward model: Carson series impedance, Kron reduction,
//! symmetrical-component transform and the shunt admittance chain.
//!
//! This path works on `Complex64` matrices and is kept independent of the
//! real-valued expression system used by the optimizer, so that each can
//! check the other.

use nalgebra::{DMatrix, Matrix3};
use num_complex::Complex64;
use serde::Serialize;

use crate::catalog::{CarsonConstants, Catalog, ConfigSpec, MaterialSpec};
use crate::conductor::{sector_equivalent_u1, AcCorrections, ConductorState};
use crate::error::{Error, Result, StageExt};
use crate::geometry::{distance_matrices, place_conductors, CoordinateSet, DistanceSet, GeometryVars};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MatrixUnit {
    #[serde(rename = "ohm/km")]
    OhmPerKm,
    #[serde(rename = "km/uF")]
    KmPerMicroFarad,
    #[serde(rename = "uF/km")]
    MicroFaradPerKm,
    #[serde(rename = "uS/km")]
    MicroSiemensPerKm,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    pub unit: MatrixUnit,
    pub data: DMatrix<Complex64>,
}

impl ComplexMatrix {
    pub fn new(unit: MatrixUnit, data: DMatrix<Complex64>) -> Self {
        Self { unit, data }
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn real_part(&self) -> DMatrix<f64> {
        self.data.map(|z| z.re)
    }

    pub fn imag_part(&self) -> DMatrix<f64> {
        self.data.map(|z| z.im)
    }
}

/// Diagonal sequence components [ohm/km, uS/km].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct SequenceComponents {
    pub r00: f64,
    pub x00: f64,
    pub r11: f64,
    pub x11: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b00: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b11: Option<f64>,
}

/// The symmetrical-component matrix `A` and its inverse.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformMatrix {
    pub a: Matrix3<Complex64>,
    pub a_inv: Matrix3<Complex64>,
}

impl Default for TransformMatrix {
    fn default() -> Self {
        Self::new()
    }
}

impl TransformMatrix {
    pub fn new() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let a = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        let a2 = a * a;
        let m = Matrix3::new(one, one, one, one, a2, a, one, a, a2);
        // A^-1 = (1/3) conj(A) since A is symmetric and unitary up to sqrt(3).
        let inv = m.map(|z| z.conj() / 3.0);
        Self { a: m, a_inv: inv }
    }

    pub fn real(&self) -> Matrix3<f64> {
        self.a.map(|z| z.re)
    }

    pub fn imag(&self) -> Matrix3<f64> {
        self.a.map(|z| z.im)
    }

    /// `A^-1 M A`, evaluated over real and imaginary parts.
    pub fn to_sequence(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let (ar, ai) = (self.real(), self.imag());
        let (mr, mi) = (m.map(|z| z.re), m.map(|z| z.im));
        let ar = DMatrix::from_iterator(3, 3, ar.iter().copied());
        let ai = DMatrix::from_iterator(3, 3, ai.iter().copied());
        // M A
        let pr = &mr * &ar - &mi * &ai;
        let pi = &mr * &ai + &mi * &ar;
        // (1/3)(Ar - j Ai) (Pr + j Pi)
        let qr = (&ar * &pr + &ai * &pi) / 3.0;
        let qi = (&ar * &pi - &ai * &pr) / 3.0;
        DMatrix::from_fn(3, 3, |i, j| Complex64::new(qr[(i, j)], qi[(i, j)]))
    }

    /// `A M A^-1`, the inverse of [`TransformMatrix::to_sequence`].
    pub fn to_phase(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let a = DMatrix::from_iterator(3, 3, self.a.iter().copied());
        let ai = DMatrix::from_iterator(3, 3, self.a_inv.iter().copied());
        a * m * ai
    }
}

/// Carson self and mutual impedances [ohm/km].
pub fn series_impedance(
    k: &CarsonConstants,
    r_ac: f64,
    gmr: f64,
    dist: &DistanceSet,
) -> Result<ComplexMatrix> {
    if !(gmr > 0.0) {
        return Err(Error::LogDomain(format!("GMR must be positive, got {gmr}")));
    }
    let n = dist.d.nrows();
    let mut z = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for i in 0..n {
        for j in 0..n {
            z[(i, j)] = if i == j {
                Complex64::new(r_ac + k.k1, k.k2 * ((1.0 / (k.k3 * gmr)).ln() + k.k4))
            } else {
                let d = dist.d[(i, j)];
                if !(d > 0.0) {
                    return Err(Error::LogDomain(format!("distance D[{i},{j}] = {d}")));
                }
                Complex64::new(k.k1, k.k2 * ((1.0 / (k.k3 * d)).ln() + k.k4))
            };
        }
    }
    Ok(ComplexMatrix::new(MatrixUnit::OhmPerKm, z))
}

/// Eliminates the neutral (last) conductor of a 4x4 impedance matrix.
pub fn kron_reduce(z: &ComplexMatrix) -> Result<ComplexMatrix> {
    if z.n() != 4 {
        return Err(Error::Contract(format!("Kron reduction needs a 4x4 matrix, got {}", z.n())));
    }
    let m = &z.data;
    let znn = m[(3, 3)];
    if znn.norm() == 0.0 {
        return Err(Error::SingularNeutral);
    }
    let out = DMatrix::from_fn(3, 3, |i, j| m[(i, j)] - m[(i, 3)] * m[(3, j)] / znn);
    Ok(ComplexMatrix::new(z.unit, out))
}

pub fn sequence_impedance(z: &ComplexMatrix) -> Result<ComplexMatrix> {
    if z.n() != 3 {
        return Err(Error::Contract(format!("sequence transform needs a 3x3 matrix, got {}", z.n())));
    }
    Ok(ComplexMatrix::new(z.unit, TransformMatrix::new().to_sequence(&z.data)))
}

/// Maxwell potential coefficients [km/uF] for bare core radius `radius`.
pub fn potential_matrix(k: &CarsonConstants, dist: &DistanceSet, radius: f64) -> Result<ComplexMatrix> {
    if !(radius > 0.0) {
        return Err(Error::LogDomain(format!("core radius must be positive, got {radius}")));
    }
    let n = dist.d.nrows();
    let mut p = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for i in 0..n {
        for j in 0..n {
            let v = if i == j {
                let s = dist.s[(i, i)];
                if s <= radius {
                    return Err(Error::ConductorTouchesGround {
                        index: i,
                        image: s,
                        radius,
                    });
                }
                k.k5 * (s / radius).ln()
            } else {
                let ratio = dist.s[(i, j)] / dist.d[(i, j)];
                if !(ratio > 0.0) {
                    return Err(Error::LogDomain(format!("S/D ratio at [{i},{j}] is {ratio}")));
                }
                k.k5 * ratio.ln()
            };
            p[(i, j)] = Complex64::new(v, 0.0);
        }
    }
    Ok(ComplexMatrix::new(MatrixUnit::KmPerMicroFarad, p))
}

/// Inverts a real matrix by Gaussian elimination with partial pivoting and
/// reports its 1-norm condition number.
fn invert_real(p: &DMatrix<f64>) -> Option<(DMatrix<f64>, f64)> {
    let n = p.nrows();
    let mut a = p.clone();
    let mut inv = DMatrix::<f64>::identity(n, n);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[(i, col)].abs().total_cmp(&a[(j, col)].abs()))?;
        if a[(piv, col)] == 0.0 {
            return None;
        }
        a.swap_rows(col, piv);
        inv.swap_rows(col, piv);
        let d = a[(col, col)];
        for j in 0..n {
            a[(col, j)] /= d;
            inv[(col, j)] /= d;
        }
        for i in 0..n {
            if i != col {
                let f = a[(i, col)];
                if f != 0.0 {
                    for j in 0..n {
                        a[(i, j)] -= f * a[(col, j)];
                        inv[(i, j)] -= f * inv[(col, j)];
                    }
                }
            }
        }
    }
    let norm1 = |m: &DMatrix<f64>| {
        (0..m.ncols())
            .map(|j| m.column(j).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let cond = norm1(p) * norm1(&inv);
    Some((inv, cond))
}

/// Capacitance `C = P^-1` [uF/km] and admittance `Y = j 2 pi f C` [uS/km].
pub fn shunt_admittance(p: &ComplexMatrix, f_fund: f64) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let pr = p.real_part();
    let (c, cond) = invert_real(&pr)
        .ok_or_else(|| Error::DegenerateGeometry("potential matrix is singular".into()))?;
    if !(cond <= 1e12) {
        return Err(Error::DegenerateGeometry(format!(
            "potential matrix condition number {cond:.3e} exceeds 1e12"
        )));
    }
    let w = 2.0 * std::f64::consts::PI * f_fund;
    let cm = c.map(|v| Complex64::new(v, 0.0));
    let y = c.map(|v| Complex64::new(0.0, w * v));
    Ok((
        ComplexMatrix::new(MatrixUnit::MicroFaradPerKm, cm),
        ComplexMatrix::new(MatrixUnit::MicroSiemensPerKm, y),
    ))
}

/// Sequence admittance from the phase (abc) block.
pub fn sequence_admittance(y_abc: &ComplexMatrix) -> Result<ComplexMatrix> {
    if y_abc.n() != 3 {
        return Err(Error::Contract(format!("sequence admittance needs the 3x3 abc block, got {}", y_abc.n())));
    }
    Ok(ComplexMatrix::new(y_abc.unit, TransformMatrix::new().to_sequence(&y_abc.data)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForwardOptions {
    pub include_shunt: bool,
    pub corrections: AcCorrections,
    /// Overrides the catalog frequency when set.
    pub frequency: Option<f64>,
}

impl Default for ForwardOptions {
    fn default() -> Self {
        Self {
            include_shunt: true,
            corrections: AcCorrections::default(),
            frequency: None,
        }
    }
}

impl ForwardOptions {
    pub fn series_only() -> Self {
        Self {
            include_shunt: false,
            ..Self::default()
        }
    }
}

/// One line instance fed to the forward model.
#[derive(Clone, Debug, PartialEq)]
pub struct LineSpec {
    pub config: ConfigSpec,
    pub material: MaterialSpec,
    /// Strand radius [mm].
    pub r: f64,
    /// Conductor temperature [degC].
    pub temperature: f64,
    /// Insulation thickness [mm]; cables only.
    pub t_nom: Option<f64>,
    /// Geometry variables. For cables with a packing coefficient `u1` may be
    /// left out and is then derived as the insulated core radius.
    pub geometry: GeometryVars,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImpedanceSet {
    pub z_car: ComplexMatrix,
    pub z_kr: Option<ComplexMatrix>,
    pub z012: Option<ComplexMatrix>,
    pub p: Option<ComplexMatrix>,
    pub c: Option<ComplexMatrix>,
    pub y: Option<ComplexMatrix>,
    pub y012: Option<ComplexMatrix>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForwardReport {
    pub conductor: ConductorState,
    pub geometry: GeometryVars,
    pub coordinates: CoordinateSet,
    pub distances: DistanceSet,
    pub impedances: ImpedanceSet,
    /// Absent for two-conductor lines.
    pub sequence: Option<SequenceComponents>,
}

/// Resolves cable core spacing from the conductor when it is implied.
fn resolve_geometry(spec: &LineSpec, cond: &ConductorState) -> Result<GeometryVars> {
    let mut g = spec.geometry;
    if spec.config.family.is_cable() {
        match (cond.nominal_radius, g.u1) {
            (Some(rn), None) => g.u1 = Some(rn),
            (Some(rn), Some(u1)) if (u1 - rn).abs() > 1e-9 * rn.max(1.0) => {
                return Err(Error::Contract(format!(
                    "cable u1 ({u1}) must equal the insulated core radius ({rn})"
                )))
            }
            (None, None) if spec.config.strand.k_r.is_some() => {
                return Err(Error::Contract("cable lines need t_nom to place cores".into()))
            }
            (None, None) => {
                return Err(Error::Contract(
                    "sector cables need an explicit core spacing u1".into(),
                ))
            }
            _ => {}
        }
    } else if spec.t_nom.is_some() {
        return Err(Error::Contract("overhead conductors take no insulation thickness".into()));
    }
    Ok(g)
}

/// Full forward evaluation with all intermediate matrices.
pub fn forward_detailed(k: &CarsonConstants, spec: &LineSpec, opts: &ForwardOptions) -> Result<ForwardReport> {
    let cfg = &spec.config;
    let cond = ConductorState::evaluate(
        &cfg.strand,
        &spec.material,
        spec.r,
        spec.temperature,
        spec.t_nom,
        opts.corrections,
    )
    .stage("conductor")?;
    let geometry = resolve_geometry(spec, &cond).stage("geometry")?;
    let coordinates = place_conductors(cfg, &geometry).stage("geometry")?;
    let distances = distance_matrices(&coordinates).stage("distances")?;

    let z_car = series_impedance(k, cond.r_ac, cond.gmr, &distances).stage("series impedance")?;
    let n = cfg.n_cond;
    let z_kr = if n == 4 {
        Some(kron_reduce(&z_car).stage("kron reduction")?)
    } else {
        None
    };
    let z_abc = z_kr.as_ref().unwrap_or(&z_car);
    let z012 = if n >= 3 {
        Some(sequence_impedance(z_abc).stage("sequence transform")?)
    } else {
        None
    };

    let (mut p, mut c, mut y, mut y012) = (None, None, None, None);
    if opts.include_shunt {
        let radius = cond.core_radius.ok_or_else(|| {
            Error::UnsupportedGeometry(format!(
                "{}: shunt admittance needs a packing coefficient (N={})",
                cfg.name, cfg.strand.n
            ))
            .at("shunt admittance")
        })?;
        let pm = potential_matrix(k, &distances, radius).stage("potential matrix")?;
        let f = opts.frequency.unwrap_or(k.f_fund);
        let (cm, ym) = shunt_admittance(&pm, f).stage("shunt admittance")?;
        if n >= 3 {
            let block = ComplexMatrix::new(ym.unit, ym.data.view((0, 0), (3, 3)).clone_owned());
            y012 = Some(sequence_admittance(&block).stage("sequence admittance")?);
        }
        p = Some(pm);
        c = Some(cm);
        y = Some(ym);
    }

    let sequence = z012.as_ref().map(|z| SequenceComponents {
        r00: z.data[(0, 0)].re,
        x00: z.data[(0, 0)].im,
        r11: z.data[(1, 1)].re,
        x11: z.data[(1, 1)].im,
        b00: y012.as_ref().map(|y| y.data[(0, 0)].im),
        b11: y012.as_ref().map(|y| y.data[(1, 1)].im),
    });

    Ok(ForwardReport {
        conductor: cond,
        geometry,
        coordinates,
        distances,
        impedances: ImpedanceSet {
            z_car,
            z_kr,
            z012,
            p,
            c,
            y,
            y012,
        },
        sequence,
    })
}

/// Diagonal sequence components of one line.
pub fn forward_pipeline(k: &CarsonConstants, spec: &LineSpec, opts: &ForwardOptions) -> Result<SequenceComponents> {
    forward_detailed(k, spec, opts)?.sequence.ok_or_else(|| {
        Error::UnsupportedGeometry(format!(
            "{}: sequence components need three or four conductors",
            spec.config.name
        ))
    })
}

impl LineSpec {
    /// A line built in a configuration's standard geometry.
    ///
    /// Cables take their insulated core radius as spacing; sector cables use
    /// the circular-equivalent radius of their cross-section.
    pub fn in_standard_geometry(
        catalog: &Catalog,
        config: &ConfigSpec,
        material: &MaterialSpec,
        r: f64,
        temperature: f64,
        t_nom: Option<f64>,
    ) -> Result<LineSpec> {
        let sg = catalog.standard_geometry(&config.name).ok_or_else(|| {
            Error::Domain(format!("no standard geometry for {}; give it explicitly", config.name))
        })?;
        let mut geometry = GeometryVars {
            u1: sg.u1,
            u2: sg.u2,
            v1: sg.v1,
            v_ref: sg.v_ref,
        };
        if config.family.is_cable() {
            let t = t_nom.ok_or_else(|| Error::Contract("cable lines need t_nom".into()))?;
            geometry.u1 = match config.strand.k_r {
                Some(_) => None,
                None => Some(sector_equivalent_u1(config.strand.n, r, t)),
            };
        }
        Ok(LineSpec {
            config: config.clone(),
            material: material.clone(),
            r,
            temperature,
            t_nom,
            geometry,
        })
    }

    /// A catalog conductor in the standard geometry of `config_name`.
    pub fn catalog_standard(
        catalog: &Catalog,
        config_name: &str,
        conductor_code: &str,
        temperature: f64,
    ) -> Result<LineSpec> {
        let config = catalog.config(config_name)?;
        let entry = catalog.conductor(conductor_code)?;
        if entry.strands != config.strands {
            return Err(Error::Domain(format!(
                "{} has N={} strands but {} expects N={}",
                entry.code, entry.strands, config.name, config.strands
            )));
        }
        let material = catalog.material(&entry.material)?;
        let t_nom = if config.family.is_cable() { entry.t_nom_std } else { None };
        Self::in_standard_geometry(catalog, config, material, entry.r_std, temperature, t_nom)
    }
}
