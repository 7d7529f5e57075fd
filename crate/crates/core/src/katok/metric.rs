use core::f64::consts::{PI, TAU};

use libm::{cos, fabs, sin, sqrt};
use nalgebra::{Matrix2, SymmetricEigen};

use super::params::KatokParams;
use super::{conjugate_system, hamiltonian_ray_radius, tangent_basis};
use crate::dynamics::{CotangentState, Hamiltonian, MagneticForm};
use crate::psi::psi_forward;
use crate::sphere::{AxisFrame, Chart, ChartFrame, SpherePoint};
use crate::{Error, Vec3};

fn validate(p: &KatokParams) -> Result<(), Error> {
    KatokParams::new(p.s, p.alpha, p.k).map(|_| ())
}

/// The metric `g_{s,alpha,k}`, the potential `eta = alpha r beta` and the
/// Finsler norm `F` at one base point. Covectors are passed as their round
/// duals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KatokMetric {
    pub params: KatokParams,
    pub q: Vec3,
    pub h: f64,
    /// `d/dphi` at `q`.
    pub rot: Vec3,
    /// `r(q)`.
    pub r: f64,
    /// `2k / y_2`.
    pub scale: f64,
    /// `2k / y_2 - 1`, evaluated without cancellation.
    pub scale_minus_one: f64,
    /// Round dual of `eta_q`.
    pub eta: Vec3,
}

impl KatokMetric {
    /// `g(p1, p2)`.
    pub fn g(&self, p1: &Vec3, p2: &Vec3) -> f64 {
        let a2 = self.params.alpha * self.params.alpha;
        self.scale * (p1.dot(p2) - a2 * p1.dot(&self.rot) * p2.dot(&self.rot))
    }

    /// `F(p)^2 = g(p, p) / (2k)`.
    pub fn finsler_sq(&self, p: &Vec3) -> f64 {
        self.g(p, p) / (2.0 * self.params.k)
    }

    pub fn finsler(&self, p: &Vec3) -> f64 {
        sqrt(self.finsler_sq(p))
    }

    /// Matrix of `g` in the orthonormal frame of [`tangent_basis`].
    pub fn frame_matrix(&self) -> Matrix2<f64> {
        let (e1, e2) = tangent_basis(&self.q);
        let e = [e1, e2];
        Matrix2::from_fn(|i, j| self.g(&e[i], &e[j]))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.frame_matrix()).eigenvalues.min()
    }

    /// Operator norm of `g - g_round`. Its eigenvalues are `scale - 1`
    /// across `d/dphi` and `scale - 1 - scale alpha^2 |d/dphi|^2` along it.
    pub fn deviation_from_round(&self) -> f64 {
        let a2 = self.params.alpha * self.params.alpha;
        let along = self.scale_minus_one - self.scale * a2 * self.rot.norm_squared();
        fabs(self.scale_minus_one).max(fabs(along))
    }
}

pub fn katok_metric(params: &KatokParams, q: &SpherePoint) -> Result<KatokMetric, Error> {
    validate(params)?;
    let frame = AxisFrame::default();
    let a = q.ambient();
    let h = frame.height(&a);
    let rot = frame.rotation_field(&a);
    let r = params.r(h);
    let rho2 = rot.norm_squared();
    let one_minus_h = if h > 0.0 { rho2 / (1.0 + h) } else { 1.0 - h };
    let y2 = params.y2(h);
    Ok(KatokMetric {
        params: *params,
        q: a,
        h,
        rot,
        r,
        scale: 2.0 * params.k / y2,
        scale_minus_one: params.level_gap(h, one_minus_h) / y2,
        eta: rot * (params.alpha * r),
    })
}

/// The magnetic Katok system `(H_{g_{s,alpha,k}}, s mu + d(alpha r beta))`.
pub fn magnetic_system(params: &KatokParams) -> (Hamiltonian, MagneticForm) {
    (Hamiltonian::katok_kinetic(*params), MagneticForm::katok(*params))
}

fn eta_at(params: &KatokParams, q: &Vec3) -> Vec3 {
    let frame = AxisFrame::default();
    frame.rotation_field(q) * params.eta_profile(frame.height(q))
}

/// `(q, p) -> (q, p - eta_q)`, taking the magnetic Katok system to
/// `(H_{s,alpha}, s mu)`.
pub fn shift_to_conjugate(params: &KatokParams, x: &CotangentState) -> CotangentState {
    x.with_p(x.p() - eta_at(params, &x.q()))
}

pub fn shift_from_conjugate(params: &KatokParams, x: &CotangentState) -> CotangentState {
    x.with_p(x.p() + eta_at(params, &x.q()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelIdentity {
    /// `|H_{s,alpha}(q, p/F(p) - eta) - c|`.
    pub defect: f64,
    /// `r F(p) - alpha p(d/dphi)`, the right-hand side of the root equation.
    pub rhs: f64,
    /// `r^2 F(p)^2 - alpha^2 p(d/dphi)^2`.
    pub rhs_margin: f64,
}

pub fn level_identity_defect(params: &KatokParams, x: &CotangentState) -> Result<LevelIdentity, Error> {
    let p = x.p();
    if p.norm() == 0.0 {
        return Err(Error::ZeroCovector);
    }
    let m = katok_metric(params, x.base())?;
    let f = m.finsler(&p);
    let (h, _) = conjugate_system(params.s, params.alpha);
    let val = h.value_at(&m.q, &(p / f - m.eta));
    let l = p.dot(&m.rot);
    let a = params.alpha;
    Ok(LevelIdentity {
        defect: (val - params.c()).abs(),
        rhs: m.r * f - a * l,
        rhs_margin: m.r * m.r * f * f - a * a * l * l,
    })
}

/// Difference between the fibre-ray radii of `{H_g = k}` and
/// `{H_{s,alpha}(q, p - eta) = c}`.
pub fn kinetic_radius_defect(params: &KatokParams, q: &Vec3, dir: &Vec3) -> Result<f64, Error> {
    validate(params)?;
    let hi = 10.0 * sqrt(2.0 * params.k + params.s * params.s);
    let kinetic = Hamiltonian::katok_kinetic(*params);
    let m1 = hamiltonian_ray_radius(&kinetic, q, dir, &Vec3::zeros(), params.k, hi)?;
    let (hk, _) = conjugate_system(params.s, params.alpha);
    let m2 = hamiltonian_ray_radius(&hk, q, dir, &(-eta_at(params, q)), params.c(), hi)?;
    Ok((m1 - m2).abs())
}

/// Extremes of the appendix quantities over a `(theta, phi, direction)` grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AppendixReport {
    pub points: usize,
    pub min_y2: f64,
    /// `min (y_2 - s^2 (1/(1 - alpha^2 |d/dphi|^2) - 1))`.
    pub min_chain_slack: f64,
    /// `min s^2 (1/(1 - alpha^2 |d/dphi|^2) - 1)`.
    pub min_chain_floor: f64,
    /// `min |p|^2 (1 - alpha^2 |d/dphi|^2)^2` for unit `p`.
    pub min_aux: f64,
    pub max_y1: f64,
    /// `|y_2 - ((1 - alpha^2 |d/dphi|^2) r^2 - s^2)|`.
    pub max_y2_defect: f64,
    /// `|y_2 F^2 + 2 y_1 F - y_0|`.
    pub max_quad_residual: f64,
    /// Positive root of the quadratic against the closed-form `F`.
    pub max_root_defect: f64,
    pub min_rhs_margin: f64,
}

impl AppendixReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.min_y2 > 0.0
            && self.min_chain_slack > 0.0
            && self.min_chain_floor >= 0.0
            && self.min_aux > 0.0
            && self.max_y1 < tol
            && self.max_quad_residual < tol
            && self.max_root_defect < tol
            && self.min_rhs_margin > 0.0
    }
}

pub fn appendix_validate(
    params: &KatokParams,
    n_theta: usize,
    n_phi: usize,
    n_dirs: usize,
) -> Result<AppendixReport, Error> {
    validate(params)?;
    let (s, a, c) = (params.s, params.alpha, params.c());
    let mut rep = AppendixReport {
        points: 0,
        min_y2: f64::INFINITY,
        min_chain_slack: f64::INFINITY,
        min_chain_floor: f64::INFINITY,
        min_aux: f64::INFINITY,
        max_y1: 0.0,
        max_y2_defect: 0.0,
        max_quad_residual: 0.0,
        max_root_defect: 0.0,
        min_rhs_margin: f64::INFINITY,
    };
    for i in 0..n_theta {
        let theta = if n_theta > 1 { PI * i as f64 / (n_theta - 1) as f64 } else { PI / 2.0 };
        for j in 0..n_phi {
            let phi = TAU * j as f64 / n_phi as f64;
            let f = ChartFrame::new(Chart::A, theta, phi);
            let m = katok_metric(params, &SpherePoint::from_ambient(f.q)?)?;
            let rot2 = m.rot.norm_squared();
            let d = 1.0 - a * a * rot2;
            let eta_rot = m.eta.dot(&m.rot);
            let lead = c + a * eta_rot - a * s * m.h;
            let y2 = lead * lead - m.eta.norm_squared() - s * s;
            let y2_closed = d * m.r * m.r - s * s;
            let floor = s * s * (1.0 / d - 1.0);
            rep.min_y2 = rep.min_y2.min(y2);
            rep.max_y2_defect = rep.max_y2_defect.max((y2 - y2_closed).abs());
            rep.min_chain_slack = rep.min_chain_slack.min(y2 - floor);
            rep.min_chain_floor = rep.min_chain_floor.min(floor);
            rep.min_aux = rep.min_aux.min(d * d);
            let (e1, e2) = tangent_basis(&m.q);
            for k in 0..n_dirs {
                let ang = TAU * k as f64 / n_dirs as f64;
                let p = e1 * cos(ang) + e2 * sin(ang);
                let l = p.dot(&m.rot);
                let y0 = p.norm_squared() - a * a * l * l;
                let y1 = p.dot(&m.eta) - a * lead * l;
                let fsq = y0 / y2_closed;
                let fv = sqrt(fsq);
                let root = (-y1 + sqrt(y1 * y1 + y2 * y0)) / y2;
                rep.max_y1 = rep.max_y1.max(y1.abs());
                rep.max_quad_residual = rep.max_quad_residual.max((y2 * fsq + 2.0 * y1 * fv - y0).abs());
                rep.max_root_defect = rep.max_root_defect.max((root - fv).abs());
                rep.min_rhs_margin = rep.min_rhs_margin.min(m.r * m.r * fsq - a * a * l * l);
                rep.points += 1;
            }
        }
    }
    Ok(rep)
}

/// One of the two periodic orbits of the magnetic Katok system at level `k`,
/// both of which lie over great circles through the axis' equator in the
/// `s = 0` picture.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EquatorialOrbit {
    /// `+1` for the orbit turning with the rotation about the axis.
    pub orientation: f64,
    /// A point of the orbit of `(H_{s,alpha}, s mu)` at level `c`.
    pub conjugate_state: CotangentState,
    /// The corresponding point of the magnetic Katok system at level `k`.
    pub magnetic_state: CotangentState,
    /// `2 pi / (1 +- alpha)`.
    pub conjugate_period: f64,
    /// The period in the time of the kinetic Hamiltonian `H_g`.
    pub magnetic_period: f64,
}

/// Closed-form periodic orbits of the magnetic Katok system.
///
/// On `{H_g = k}` the fields satisfy `X_{H_g} = (2k / dK(p d/dp)) X_K` with
/// `K(q, p) = H_{s,alpha}(q, p - eta)`, the factor being constant along each
/// of the two orbits.
pub fn equatorial_orbits(params: &KatokParams) -> Result<[EquatorialOrbit; 2], Error> {
    validate(params)?;
    let (s, a, c) = (params.s, params.alpha, params.c());
    let (hk, _) = conjugate_system(s, a);
    let make = |orientation: f64| -> Result<EquatorialOrbit, Error> {
        let m = c / (1.0 + orientation * a);
        let unshifted = CotangentState::from_ambient(Vec3::x(), Vec3::y() * (orientation * m))?;
        let conj = psi_forward(s, &unshifted)?;
        let mag = shift_from_conjugate(params, &conj);
        let t_k = TAU / (1.0 + orientation * a);
        let dk = hk.ray_derivative(&conj.q(), &conj.p(), &mag.p());
        Ok(EquatorialOrbit {
            orientation,
            conjugate_state: conj,
            magnetic_state: mag,
            conjugate_period: t_k,
            magnetic_period: t_k * dk / (2.0 * params.k),
        })
    };
    Ok([make(1.0)?, make(-1.0)?])
}
