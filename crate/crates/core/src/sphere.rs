//! Round unit sphere primitives.
//!
//! Points and tangent vectors are stored in ambient `R^3`; polar charts are
//! derived views. Chart `A` is polar about `+z`, chart `B` is polar about
//! `+x`. Both are positively oriented for the outward normal, so the area
//! form is `mu(u, w) = q . (u x w)` and in either chart `mu = sin(theta)
//! dtheta ^ dphi`.

use core::f64::consts::{FRAC_PI_8, PI};

use libm::{atan2, cos, sin, sqrt};
use nalgebra::Matrix3;

use crate::{Error, Vec3};

pub use crate::dynamics::isometry_lift;

/// Ambient distance below which a point counts as sitting on a chart pole.
pub const POLE_TOLERANCE: f64 = 1e-9;

/// Hysteresis added to the `[pi/8, 7pi/8]` chart-A band while integrating.
pub const DEFAULT_SWITCH_MARGIN: f64 = PI / 16.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Chart {
    /// Polar coordinates about `+z`.
    A,
    /// Polar coordinates about `+x`.
    B,
}

impl Chart {
    pub fn other(self) -> Chart {
        match self {
            Chart::A => Chart::B,
            Chart::B => Chart::A,
        }
    }

    /// Map a chart-local vector (chart A conventions) to ambient space.
    #[inline]
    pub fn to_ambient(self, l: Vec3) -> Vec3 {
        match self {
            Chart::A => l,
            Chart::B => Vec3::new(l.z, l.x, l.y),
        }
    }

    /// Inverse of [`Chart::to_ambient`].
    #[inline]
    pub fn to_local(self, a: Vec3) -> Vec3 {
        match self {
            Chart::A => a,
            Chart::B => Vec3::new(a.y, a.z, a.x),
        }
    }

    /// The pole axis of the chart in ambient space.
    pub fn axis(self) -> Vec3 {
        self.to_ambient(Vec3::z())
    }

    /// Colatitude of an ambient unit vector in this chart.
    pub fn colatitude(self, a: &Vec3) -> f64 {
        let l = self.to_local(*a);
        atan2(sqrt(l.x * l.x + l.y * l.y), l.z)
    }
}

/// The chart prescribed for a point: A when its chart-A colatitude lies in
/// `[pi/8, 7pi/8]`, otherwise B.
pub fn preferred_chart(a: &Vec3) -> Chart {
    let t = Chart::A.colatitude(a);
    if (FRAC_PI_8..=7.0 * FRAC_PI_8).contains(&t) {
        Chart::A
    } else {
        Chart::B
    }
}

/// A point of the unit sphere with a chart view attached.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpherePoint {
    ambient: Vec3,
    chart: Chart,
    theta: f64,
    phi: f64,
    degenerate: bool,
}

impl SpherePoint {
    /// Normalizes `v` and attaches the preferred chart.
    pub fn from_ambient(v: Vec3) -> Result<Self, Error> {
        let n = v.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidPoint);
        }
        let a = v / n;
        Ok(Self::in_chart(a, preferred_chart(&a)))
    }

    /// Builds the point with the given chart coordinates.
    pub fn from_coords(chart: Chart, theta: f64, phi: f64) -> Self {
        let (st, ct) = (sin(theta), cos(theta));
        let l = Vec3::new(st * cos(phi), st * sin(phi), ct);
        Self {
            ambient: chart.to_ambient(l),
            chart,
            theta,
            phi,
            degenerate: st.abs() < POLE_TOLERANCE,
        }
    }

    fn in_chart(a: Vec3, chart: Chart) -> Self {
        let l = chart.to_local(a);
        let rho = sqrt(l.x * l.x + l.y * l.y);
        let theta = atan2(rho, l.z);
        let degenerate = rho < POLE_TOLERANCE;
        let phi = if degenerate { 0.0 } else { atan2(l.y, l.x) };
        Self {
            ambient: a,
            chart,
            theta,
            phi,
            degenerate,
        }
    }

    pub fn ambient(&self) -> Vec3 {
        self.ambient
    }

    pub fn chart(&self) -> Chart {
        self.chart
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// True when the point sits on a pole of its chart (azimuth undefined).
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Orthonormal-in-theta coordinate frame of the chart at this point.
    pub fn frame(&self) -> ChartFrame {
        ChartFrame::new(self.chart, self.theta, self.phi)
    }
}

/// Re-expresses `p` in the `target` chart; the ambient point is unchanged.
/// Points on the target chart's pole come back with `phi = 0` and
/// [`SpherePoint::is_degenerate`] set.
pub fn chart_convert(p: &SpherePoint, target: Chart) -> SpherePoint {
    SpherePoint::in_chart(p.ambient, target)
}

/// Coordinate vectors and their derivatives for a chart at `(theta, phi)`.
#[derive(Clone, Copy, Debug)]
pub struct ChartFrame {
    pub chart: Chart,
    pub sin_t: f64,
    pub cos_t: f64,
    pub sin_p: f64,
    pub cos_p: f64,
    /// The point.
    pub q: Vec3,
    /// `d q / d theta`, unit length.
    pub e_theta: Vec3,
    /// `d q / d phi`, length `sin(theta)`.
    pub e_phi: Vec3,
}

impl ChartFrame {
    pub fn new(chart: Chart, theta: f64, phi: f64) -> Self {
        let (st, ct, sp, cp) = (sin(theta), cos(theta), sin(phi), cos(phi));
        let to = |x, y, z| chart.to_ambient(Vec3::new(x, y, z));
        Self {
            chart,
            sin_t: st,
            cos_t: ct,
            sin_p: sp,
            cos_p: cp,
            q: to(st * cp, st * sp, ct),
            e_theta: to(ct * cp, ct * sp, -st),
            e_phi: to(-st * sp, st * cp, 0.0),
        }
    }

    /// Unit radial vector `(cos phi, sin phi, 0)` of the chart in ambient form.
    pub fn radial(&self) -> Vec3 {
        self.chart
            .to_ambient(Vec3::new(self.cos_p, self.sin_p, 0.0))
    }
}

/// A tangent vector to the sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentVector {
    pub base: SpherePoint,
    ambient: Vec3,
}

impl TangentVector {
    /// Projects `v` onto the tangent plane at `base`.
    pub fn new(base: SpherePoint, v: Vec3) -> Self {
        let q = base.ambient;
        Self {
            base,
            ambient: v - q * q.dot(&v),
        }
    }

    pub fn from_components(base: SpherePoint, u_theta: f64, u_phi: f64) -> Self {
        let f = base.frame();
        Self {
            base,
            ambient: f.e_theta * u_theta + f.e_phi * u_phi,
        }
    }

    pub fn ambient(&self) -> Vec3 {
        self.ambient
    }

    /// Chart components `(u_theta, u_phi)` in the base point's chart.
    pub fn components(&self) -> (f64, f64) {
        let f = self.base.frame();
        let s2 = f.sin_t * f.sin_t;
        (
            self.ambient.dot(&f.e_theta),
            self.ambient.dot(&f.e_phi) / s2,
        )
    }

    pub fn norm(&self) -> f64 {
        self.ambient.norm()
    }
}

/// Rotation axis defining `theta`, `phi`, the field `d/dphi`, its dual `beta`
/// and the height `h = cos(theta)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisFrame {
    axis: Vec3,
}

impl Default for AxisFrame {
    fn default() -> Self {
        Self { axis: Vec3::z() }
    }
}

impl AxisFrame {
    pub fn new(axis: Vec3) -> Result<Self, Error> {
        let n = axis.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidPoint);
        }
        Ok(Self { axis: axis / n })
    }

    pub fn axis(&self) -> Vec3 {
        self.axis
    }

    /// `d/dphi` at `q`, i.e. `axis x q`.
    #[inline]
    pub fn rotation_field(&self, q: &Vec3) -> Vec3 {
        self.axis.cross(q)
    }

    /// `h(q) = cos(theta) = axis . q`.
    #[inline]
    pub fn height(&self, q: &Vec3) -> f64 {
        self.axis.dot(q)
    }

    /// Unit vector of increasing azimuth at `q` (zero at the poles).
    pub fn azimuth_direction(&self, q: &Vec3) -> Vec3 {
        let r = self.rotation_field(q);
        let n = r.norm();
        if n < POLE_TOLERANCE {
            Vec3::zeros()
        } else {
            r / n
        }
    }
}

/// Values of `d/dphi`, `beta` and `h` at a point.
#[derive(Clone, Copy, Debug)]
pub struct AxisFields {
    pub rot: TangentVector,
    /// The metric dual of `beta`; equal to `rot` as an ambient vector.
    pub beta: Vec3,
    pub h: f64,
}

pub fn axis_fields(frame: &AxisFrame, p: &SpherePoint) -> AxisFields {
    let q = p.ambient();
    let rot = frame.rotation_field(&q);
    AxisFields {
        rot: TangentVector::new(*p, rot),
        beta: rot,
        h: frame.height(&q),
    }
}

/// Round metric and area form on a pair of tangent vectors.
pub fn round_pairings(
    p: &SpherePoint,
    u: &TangentVector,
    w: &TangentVector,
) -> Result<(f64, f64), Error> {
    let same = |b: &SpherePoint| (b.ambient - p.ambient).norm() < 1e-12;
    if !same(&u.base) || !same(&w.base) {
        return Err(Error::BaseMismatch);
    }
    let f = p.frame();
    let (ut, up) = u.components();
    let (wt, wp) = w.components();
    let s2 = f.sin_t * f.sin_t;
    let g = ut * wt + s2 * up * wp;
    let mu = f.sin_t * (ut * wp - up * wt);
    Ok((g, mu))
}

/// Ambient form of the round area form.
#[inline]
pub fn area_form(q: &Vec3, u: &Vec3, w: &Vec3) -> f64 {
    q.dot(&u.cross(w))
}

/// Fibrewise rotation by a quarter turn, `u -> q x u`; `mu(u, ju) = |u|^2`.
pub fn jrot(u: &TangentVector) -> TangentVector {
    TangentVector {
        base: u.base,
        ambient: u.base.ambient().cross(&u.ambient),
    }
}

/// A proper rotation of `R^3`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation(Matrix3<f64>);

impl Rotation {
    pub fn new(m: Matrix3<f64>) -> Result<Self, Error> {
        let defect = (m.transpose() * m - Matrix3::identity()).abs().max();
        if !(defect < 1e-10) {
            return Err(Error::NotOrthogonal);
        }
        if (m.determinant() - 1.0).abs() > 1e-10 {
            return Err(Error::NotProper);
        }
        Ok(Self(m))
    }

    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Right-handed rotation by `angle` about `axis`.
    pub fn about(axis: &Vec3, angle: f64) -> Self {
        let n = axis.normalize();
        let (s, c) = (sin(angle), cos(angle));
        let k = Matrix3::new(0.0, -n.z, n.y, n.z, 0.0, -n.x, -n.y, n.x, 0.0);
        Self(Matrix3::identity() + k * s + k * k * (1.0 - c))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }

    pub fn compose(&self, other: &Rotation) -> Rotation {
        Rotation(self.0 * other.0)
    }

    pub fn inverse(&self) -> Rotation {
        Rotation(self.0.transpose())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_tangent, random_unit, rng};
    use approx::assert_abs_diff_eq;

    #[test]
    fn north_pole_in_chart_a_is_degenerate() {
        let p = SpherePoint::from_ambient(Vec3::z()).unwrap();
        let a = chart_convert(&p, Chart::A);
        assert!(a.is_degenerate());
        assert_eq!(a.theta(), 0.0);
        assert_eq!(a.phi(), 0.0);
        // the preferred chart keeps it away from the pole
        assert_eq!(p.chart(), Chart::B);
        assert!(!p.is_degenerate());
    }

    #[test]
    fn x_axis_sits_on_the_chart_a_equator() {
        let p = chart_convert(&SpherePoint::from_ambient(Vec3::x()).unwrap(), Chart::A);
        assert_abs_diff_eq!(p.theta(), PI / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.phi(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn chart_roundtrip_preserves_ambient() {
        let mut r = rng(7);
        for _ in 0..1000 {
            let a = random_unit(&mut r);
            let p = SpherePoint::from_ambient(a).unwrap();
            let b = chart_convert(&p, Chart::B);
            let back = chart_convert(&b, Chart::A);
            for c in [b, back] {
                let rebuilt = SpherePoint::from_coords(c.chart(), c.theta(), c.phi());
                assert!((rebuilt.ambient() - a).norm() < 1e-12);
            }
            assert!((p.ambient().norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn preferred_chart_band() {
        let near_pole = SpherePoint::from_coords(Chart::A, 0.3, 1.0);
        assert_eq!(preferred_chart(&near_pole.ambient()), Chart::B);
        let mid = SpherePoint::from_coords(Chart::A, 1.0, 1.0);
        assert_eq!(preferred_chart(&mid.ambient()), Chart::A);
    }

    #[test]
    fn round_pairings_on_coordinate_vectors() {
        let p = SpherePoint::from_coords(Chart::A, PI / 2.0, 0.0);
        let dt = TangentVector::from_components(p, 1.0, 0.0);
        let (g, mu) = round_pairings(&p, &dt, &dt).unwrap();
        assert_abs_diff_eq!(g, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(mu, 0.0, epsilon = 1e-15);

        for theta in [0.3, 1.0, 2.5] {
            let p = SpherePoint::from_coords(Chart::A, theta, 0.4);
            let dt = TangentVector::from_components(p, 1.0, 0.0);
            let dp = TangentVector::from_components(p, 0.0, 1.0);
            let (_, mu) = round_pairings(&p, &dt, &dp).unwrap();
            assert_abs_diff_eq!(mu, sin(theta), epsilon = 1e-14);
        }
    }

    #[test]
    fn chart_and_ambient_pairings_agree() {
        let mut r = rng(11);
        for _ in 0..1000 {
            let p = SpherePoint::from_ambient(random_unit(&mut r)).unwrap();
            let u = TangentVector::new(p, random_tangent(&mut r, &p.ambient()));
            let w = TangentVector::new(p, random_tangent(&mut r, &p.ambient()));
            let (g, mu) = round_pairings(&p, &u, &w).unwrap();
            assert!((g - u.ambient().dot(&w.ambient())).abs() < 1e-10);
            assert!((mu - area_form(&p.ambient(), &u.ambient(), &w.ambient())).abs() < 1e-10);
            let (_, mu_rev) = round_pairings(&p, &w, &u).unwrap();
            assert!((mu + mu_rev).abs() < 1e-14);
        }
    }

    #[test]
    fn pairings_reject_foreign_base() {
        let p = SpherePoint::from_coords(Chart::A, 1.0, 0.0);
        let o = SpherePoint::from_coords(Chart::A, 1.2, 0.0);
        let u = TangentVector::from_components(p, 1.0, 0.0);
        let w = TangentVector::from_components(o, 1.0, 0.0);
        assert_eq!(round_pairings(&p, &u, &w), Err(Error::BaseMismatch));
    }

    #[test]
    fn axis_fields_at_pole_and_latitude() {
        let frame = AxisFrame::default();
        let np = SpherePoint::from_ambient(Vec3::z()).unwrap();
        let f = axis_fields(&frame, &np);
        assert_eq!(f.h, 1.0);
        assert_eq!(f.rot.norm(), 0.0);
        assert_eq!(f.beta.norm(), 0.0);

        let p = SpherePoint::from_coords(Chart::A, 0.9, 2.0);
        let f = axis_fields(&frame, &p);
        // beta(rot) = g(rot, rot) = sin^2
        assert_abs_diff_eq!(f.beta.dot(&f.rot.ambient()), sin(0.9).powi(2), epsilon = 1e-14);
        assert_abs_diff_eq!(f.h, cos(0.9), epsilon = 1e-15);
    }

    #[test]
    fn contraction_of_area_form_is_dh() {
        let frame = AxisFrame::new(Vec3::new(0.3, -0.2, 0.9)).unwrap();
        let mut r = rng(3);
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let q = random_unit(&mut r);
            let p = SpherePoint::from_ambient(q).unwrap();
            let w = random_tangent(&mut r, &q);
            let f = axis_fields(&frame, &p);
            let eps = 1e-6;
            let hp = frame.height(&(q + w * eps).normalize());
            let hm = frame.height(&(q - w * eps).normalize());
            let dh = (hp - hm) / (2.0 * eps);
            worst = worst.max((area_form(&q, &f.rot.ambient(), &w) - dh).abs());
        }
        assert!(worst < 1e-7, "{worst}");
    }

    #[test]
    fn jrot_is_a_quarter_turn() {
        let mut r = rng(5);
        for _ in 0..1000 {
            let p = SpherePoint::from_ambient(random_unit(&mut r)).unwrap();
            let u = TangentVector::new(p, random_tangent(&mut r, &p.ambient()));
            let ju = jrot(&u);
            let jju = jrot(&ju);
            assert!((jju.ambient() + u.ambient()).norm() < 1e-14);
            assert!((ju.norm() - u.norm()).abs() < 1e-14);
            let q = p.ambient();
            let triple = q.dot(&u.ambient().cross(&q.cross(&u.ambient())));
            let (_, mu) = round_pairings(&p, &u, &ju).unwrap();
            let (g, _) = round_pairings(&p, &u, &u).unwrap();
            assert!((mu - triple).abs() < 1e-12);
            assert!((mu - g).abs() < 1e-12);
            assert!(mu > 0.0);
        }
    }

    #[test]
    fn rotation_validation() {
        assert_eq!(
            Rotation::new(Matrix3::from_diagonal(&Vec3::new(1.0, 1.0, -1.0))),
            Err(Error::NotProper)
        );
        assert_eq!(
            Rotation::new(Matrix3::from_diagonal(&Vec3::new(1.0, 2.0, 1.0))),
            Err(Error::NotOrthogonal)
        );
        let r = Rotation::about(&Vec3::new(1.0, 2.0, 3.0), 0.7);
        assert!(Rotation::new(*r.matrix()).is_ok());
        let v = r.apply(&Vec3::new(1.0, 2.0, 3.0));
        assert!((v - Vec3::new(1.0, 2.0, 3.0)).norm() < 1e-14);
    }
}
