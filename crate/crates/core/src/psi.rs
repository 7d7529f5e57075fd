//! The symplectomorphisms `Psi_s` from `({|p| > s}, d lambda)` onto
//! `({|p| > 0}, d lambda - s pi* mu)`.

use libm::{asin, cos, fabs, sin, sqrt};
use rand::Rng;

use crate::dynamics::{isometry_lift, one_forms, omega_ambient, CotangentState, MagneticForm, PhaseTangent};
use crate::{Error, Rotation, Vec3};

/// Closest approach to the domain boundary `|p| = s` tolerated by the
/// finite-difference checks.
pub const BOUNDARY_MARGIN: f64 = 1e-4;
/// Step of the central differences in chart coordinates.
pub const FD_STEP: f64 = 1e-5;

/// The profile functions of the ansatz `Psi_s = Phi^Y_{log b_s} o Phi^{H'}_{a_s}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsiParams {
    pub s: f64,
}

impl PsiParams {
    pub fn new(s: f64) -> Result<Self, Error> {
        if s.is_nan() || s < 0.0 {
            return Err(Error::InvalidParameter("s"));
        }
        Ok(Self { s })
    }

    /// The domain threshold `rho_s = s`.
    pub fn threshold(&self) -> f64 {
        self.s
    }

    /// `a_s(m)` with `sin a_s(m) = -s/m`, valued in `(-pi/2, 0]`.
    pub fn a(&self, m: f64) -> f64 {
        -asin(self.s / m)
    }

    /// `b_s(m) = sqrt(1 - s^2/m^2)`.
    pub fn b(&self, m: f64) -> f64 {
        let r = self.s / m;
        sqrt((1.0 - r * r).max(0.0))
    }
}

/// Fibre scaling `(q, p) -> (q, e^{log b} p)`.
pub fn phi_y(log_b: f64, x: &CotangentState) -> CotangentState {
    x.with_p(x.p() * libm::exp(log_b))
}

/// Time-`a` map of `H' = |p|`: the base point turns by `a` about the unit
/// dual vector `u`, which stays fixed.
pub fn phi_hprime(a: f64, x: &CotangentState) -> Result<CotangentState, Error> {
    let v = x.p();
    let m = v.norm();
    if m == 0.0 {
        return Err(Error::ZeroCovector);
    }
    let u = v / m;
    let q = x.q();
    let q1 = q * cos(a) - q.cross(&u) * sin(a);
    CotangentState::from_ambient(q1, v)
}

/// `Pi(q, v)`: the pole of the hemisphere the oriented great circle through
/// `(q, v)` turns positively around.
pub fn hemisphere_centre(q: &Vec3, v: &Vec3) -> Result<Vec3, Error> {
    let m = v.norm();
    if m == 0.0 {
        return Err(Error::ZeroCovector);
    }
    Ok(q.cross(&(v / m)))
}

fn check_domain(s: f64, x: &CotangentState) -> Result<f64, Error> {
    let m = x.norm();
    if m < s {
        return Err(Error::OutsideDomain { threshold: s });
    }
    Ok(m)
}

/// `Psi_s` by the explicit description in the frame centred at `Pi(q, v)`.
pub fn psi_forward(s: f64, x: &CotangentState) -> Result<CotangentState, Error> {
    let params = PsiParams::new(s)?;
    let m = check_domain(s, x)?;
    if s == 0.0 {
        return Ok(*x);
    }
    let q = x.q();
    let pi = hemisphere_centre(&q, &x.p())?;
    let u = x.p() / m;
    if m == s {
        return CotangentState::from_ambient(pi, Vec3::zeros());
    }
    let b = params.b(m);
    CotangentState::from_ambient(pi * (s / m) + q * b, u * (b * m))
}

/// `Psi_s` evaluated as the composition of the two building-block flows.
pub fn psi_forward_composed(s: f64, x: &CotangentState) -> Result<CotangentState, Error> {
    let params = PsiParams::new(s)?;
    let m = check_domain(s, x)?;
    if m == s {
        return psi_forward(s, x);
    }
    let y = phi_hprime(params.a(m), x)?;
    Ok(phi_y(libm::log(params.b(m)), &y))
}

/// Inverse of `Psi_s` on `{|p| > 0}`.
pub fn psi_inverse(s: f64, x: &CotangentState) -> Result<CotangentState, Error> {
    PsiParams::new(s)?;
    let v = x.p();
    let n = v.norm();
    if n == 0.0 {
        return Err(Error::ZeroCovector);
    }
    if s == 0.0 {
        return Ok(*x);
    }
    let q = x.q();
    let u = v / n;
    let m = sqrt(n * n + s * s);
    let pi = q * (s / m) + q.cross(&u) * (n / m);
    CotangentState::from_ambient(u.cross(&pi), u * m)
}

fn random_chart_vector<R: Rng>(rng: &mut R) -> [f64; 4] {
    core::array::from_fn(|_| rng.random_range(-1.0..1.0))
}

/// Central-difference pushforward of chart vectors under `Psi_s`.
struct Differential {
    base: CotangentState,
    s: f64,
}

impl Differential {
    fn new(s: f64, x: &CotangentState) -> Result<Self, Error> {
        if x.norm() - s < BOUNDARY_MARGIN {
            return Err(Error::NearBoundary { margin: BOUNDARY_MARGIN });
        }
        let base = x.rechart();
        Ok(Self { base, s })
    }

    /// `(w, dPsi_s w)` for the chart vector `w`, both by the same central
    /// difference so that `Psi_0` reproduces `w` exactly.
    fn push(&self, w: &[f64; 4]) -> Result<(PhaseTangent, PhaseTangent), Error> {
        let x = self.base.coords();
        let chart = self.base.chart();
        let at = |sign: f64| {
            let y: [f64; 4] = core::array::from_fn(|i| x[i] + sign * FD_STEP * w[i]);
            CotangentState::from_chart(chart, &y)
        };
        let (a, b) = (at(1.0), at(-1.0));
        let (pa, pb) = (psi_forward(self.s, &a)?, psi_forward(self.s, &b)?);
        let h2 = 2.0 * FD_STEP;
        let diff = |p: &CotangentState, m: &CotangentState| {
            PhaseTangent::new((p.q() - m.q()) / h2, (p.p() - m.p()) / h2)
        };
        Ok((diff(&a, &b), diff(&pa, &pb)))
    }
}

/// `max |lambda_s(dPsi_s w) - lambda(w)| / (1 + |w|)` over random chart
/// vectors `w` at `x`.
pub fn pullback_defect<R: Rng>(s: f64, x: &CotangentState, trials: usize, rng: &mut R) -> Result<f64, Error> {
    let d = Differential::new(s, x)?;
    let image = psi_forward(s, x)?;
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let (tw, dw) = d.push(&random_chart_vector(rng))?;
        let lhs = one_forms(&image, &dw).lambda_s(s)?;
        let rhs = one_forms(&d.base, &tw).lambda;
        worst = worst.max(fabs(lhs - rhs) / (1.0 + tw.norm()));
    }
    Ok(worst)
}

/// `max |omega_{s mu}(dPsi_s w1, dPsi_s w2) - omega_0(w1, w2)|` over random
/// pairs of chart vectors.
pub fn omega_pullback_defect<R: Rng>(
    s: f64,
    x: &CotangentState,
    trials: usize,
    rng: &mut R,
) -> Result<f64, Error> {
    let d = Differential::new(s, x)?;
    let image = psi_forward(s, x)?;
    let target = MagneticForm::constant(s);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let (t1, d1) = d.push(&random_chart_vector(rng))?;
        let (t2, d2) = d.push(&random_chart_vector(rng))?;
        let lhs = omega_ambient(&target, &image.q(), &d1, &d2);
        let rhs = omega_ambient(&MagneticForm::zero(), &d.base.q(), &t1, &t2);
        worst = worst.max(fabs(lhs - rhs));
    }
    Ok(worst)
}

/// Distance between `Psi_s(R x)` and `R Psi_s(x)`.
pub fn equivariance_defect(s: f64, r: &Rotation, x: &CotangentState) -> Result<f64, Error> {
    let a = psi_forward(s, &isometry_lift(r, x))?;
    let b = isometry_lift(r, &psi_forward(s, x)?);
    Ok(a.distance(&b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::ChartJacobian;
    use rand::Rng;
    use crate::sampling::{random_rotation, random_state, random_unit, random_unit_tangent, rng};
    use approx::assert_abs_diff_eq;
    use core::f64::consts::{PI, TAU};
    use proptest::prelude::*;

    fn state_with_norm(q: Vec3, dir: Vec3, m: f64) -> CotangentState {
        CotangentState::from_ambient(q, dir * m).unwrap()
    }

    #[test]
    fn phi_y_group_law() {
        let mut r = rng(1);
        for _ in 0..100 {
            let x = random_state(&mut r, 0.1, 3.0);
            assert!(phi_y(0.0, &x).distance(&x) < 1e-15);
            let (a, b) = (r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
            assert!(phi_y(a, &phi_y(b, &x)).distance(&phi_y(a + b, &x)) < 1e-12);
        }
        let x = random_state(&mut r, 1.0, 1.0);
        let y = phi_y(libm::log(2.0), &x);
        assert_abs_diff_eq!(y.norm(), 2.0 * x.norm(), epsilon = 1e-14);
        assert_eq!(y.q(), x.q());
    }

    #[test]
    fn phi_hprime_flow_properties() {
        let mut r = rng(2);
        for _ in 0..100 {
            let x = random_state(&mut r, 0.1, 3.0);
            let a = r.random_range(-PI..PI);
            let y = phi_hprime(a, &x).unwrap();
            assert!(phi_hprime(-a, &y).unwrap().distance(&x) < 1e-12);
            assert!((y.norm() - x.norm()).abs() < 1e-12);
            let angle = libm::acos(y.q().dot(&x.q()).clamp(-1.0, 1.0));
            assert!((angle - a.abs()).abs() < 1e-7);
            // the base point stays on the great circle orthogonal to u
            assert!(y.q().dot(&x.p()).abs() < 1e-12);
        }
        let z = CotangentState::from_ambient(Vec3::x(), Vec3::zeros()).unwrap();
        assert_eq!(phi_hprime(0.3, &z), Err(Error::ZeroCovector));
    }

    #[test]
    fn profile_functions_are_monotone() {
        let p = PsiParams::new(1.5).unwrap();
        let mut prev = (-f64::INFINITY, -f64::INFINITY);
        for i in 1..=1000 {
            let m = 1.5 + 0.01 * i as f64;
            let (a, b) = (p.a(m), p.b(m));
            assert!(a > -PI / 2.0 && a < 0.0 && b > 0.0 && b < 1.0);
            assert_abs_diff_eq!(sin(a), -1.5 / m, epsilon = 1e-14);
            assert!(a > prev.0 && b > prev.1);
            prev = (a, b);
        }
    }

    #[test]
    fn psi_zero_is_identity() {
        let mut r = rng(3);
        for _ in 0..100 {
            let x = random_state(&mut r, 0.1, 3.0);
            assert_eq!(psi_forward(0.0, &x).unwrap(), x);
            assert!(psi_forward_composed(0.0, &x).unwrap().distance(&x) < 1e-15);
            assert_eq!(psi_inverse(0.0, &x).unwrap(), x);
        }
    }

    #[test]
    fn norm_and_boundary() {
        let (q, dir) = (Vec3::z(), Vec3::x());
        let y = psi_forward(3.0, &state_with_norm(q, dir, 5.0)).unwrap();
        assert_abs_diff_eq!(y.norm(), 4.0, epsilon = 1e-12);
        let edge = psi_forward(3.0, &state_with_norm(q, dir, 3.0)).unwrap();
        assert_eq!(edge.norm(), 0.0);
        assert!((edge.q() - q.cross(&dir)).norm() < 1e-14);
        // continuity at the boundary is of Hoelder type: the distance to
        // (Pi, 0) is b_s(m) sqrt(1 + m^2) with b_s(s + d) ~ sqrt(2 d / s)
        for (s, d) in [(3.0, 1e-6), (0.5, 1e-6), (0.5, 1e-10), (2.0, 1e-9)] {
            let m = s + d;
            let near = psi_forward(s, &state_with_norm(q, dir, m)).unwrap();
            let edge = psi_forward(s, &state_with_norm(q, dir, s)).unwrap();
            let bound = PsiParams::new(s).unwrap().b(m) * sqrt(1.0 + m * m);
            assert!((near.distance(&edge) - bound).abs() < 1e-3 * bound + 1e-15);
            assert!(bound < 1.01 * sqrt(2.0 * d / s) * sqrt(1.0 + m * m));
        }
        assert_eq!(
            psi_forward(3.0, &state_with_norm(q, dir, 2.0)),
            Err(Error::OutsideDomain { threshold: 3.0 })
        );
    }

    #[test]
    fn composition_matches_explicit_form() {
        let mut r = rng(4);
        for _ in 0..1000 {
            let s = r.random_range(0.0..3.0);
            let x = random_state(&mut r, s + 1e-3, s + 5.0);
            let a = psi_forward(s, &x).unwrap();
            let b = psi_forward_composed(s, &x).unwrap();
            assert!(a.distance(&b) < 1e-10);
            let expected = sqrt(x.norm().powi(2) - s * s);
            assert!((a.norm() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn explicit_form_is_the_polar_description() {
        let mut r = rng(5);
        for _ in 0..200 {
            let s = r.random_range(0.1..2.0);
            let x = random_state(&mut r, s + 0.1, s + 3.0);
            let m = x.norm();
            let pi = hemisphere_centre(&x.q(), &x.p()).unwrap();
            let y = psi_forward(s, &x).unwrap();
            // colatitude arccos(s/m) from Pi
            assert_abs_diff_eq!(y.q().dot(&pi), s / m, epsilon = 1e-12);
            // same azimuth as q in the Pi frame
            let proj = y.q() - pi * y.q().dot(&pi);
            assert!((proj.normalize() - x.q()).norm() < 1e-10);
            // covector along +d/dphi of the Pi frame
            let rot = pi.cross(&y.q());
            assert!((rot.normalize() - y.p().normalize()).norm() < 1e-10);
        }
    }

    #[test]
    fn inverse_roundtrip_and_norm() {
        let mut r = rng(6);
        for _ in 0..1000 {
            let s = r.random_range(0.0..3.0);
            let x = random_state(&mut r, 0.05, 4.0);
            let y = psi_inverse(s, &x).unwrap();
            assert!((y.norm() - sqrt(x.norm().powi(2) + s * s)).abs() < 1e-12);
            assert!(psi_forward(s, &y).unwrap().distance(&x) < 1e-10);
        }
    }

    #[test]
    fn pullback_defects_are_small() {
        let mut r = rng(7);
        for s in [0.0, 0.5] {
            for _ in 0..50 {
                let q = random_unit(&mut r);
                let m = r.random_range(1.0..3.0);
                let x = state_with_norm(q, random_unit_tangent(&mut r, &q), m);
                let d = pullback_defect(s, &x, 8, &mut r).unwrap();
                let gate = if s == 0.0 { 1e-12 } else { 1e-6 };
                assert!(d < gate, "{s} {d}");
                assert!(omega_pullback_defect(s, &x, 8, &mut r).unwrap() < 1e-5);
            }
        }
    }

    #[test]
    fn opposite_pole_convention_fails_pullback() {
        // With Pi = u x q the map is the reflection-conjugate of Psi_s and
        // lambda_s no longer pulls back to lambda.
        let s = 0.5;
        let x = state_with_norm(Vec3::x(), Vec3::y(), 1.7);
        let flipped = |x: &CotangentState| {
            let m = x.norm();
            let u = x.p() / m;
            let b = sqrt(1.0 - s * s / (m * m));
            CotangentState::from_ambient(u.cross(&x.q()) * (s / m) + x.q() * b, u * (b * m)).unwrap()
        };
        let jac = ChartJacobian::new(x.chart(), &x.coords());
        let w = [0.3, -0.2, 0.5, 0.1];
        let xc = x.coords();
        let at = |sign: f64| {
            let y: [f64; 4] = core::array::from_fn(|i| xc[i] + sign * FD_STEP * w[i]);
            flipped(&CotangentState::from_chart(x.chart(), &y))
        };
        let (p, m) = (at(1.0), at(-1.0));
        let dw = PhaseTangent::new((p.q() - m.q()) / (2.0 * FD_STEP), (p.p() - m.p()) / (2.0 * FD_STEP));
        let lhs = one_forms(&flipped(&x), &dw).lambda_s(s).unwrap();
        let rhs = one_forms(&x, &jac.push(&w)).lambda;
        assert!((lhs - rhs).abs() > 1e-2);
    }

    #[test]
    fn near_boundary_is_rejected() {
        let x = state_with_norm(Vec3::z(), Vec3::x(), 1.0 + 5e-5);
        assert_eq!(
            pullback_defect(1.0, &x, 1, &mut rng(0)),
            Err(Error::NearBoundary { margin: BOUNDARY_MARGIN })
        );
    }

    #[test]
    fn rotation_through_pole_is_natural() {
        let x = state_with_norm(Vec3::new(0.6, 0.0, 0.8), Vec3::y(), 2.0);
        let pi = hemisphere_centre(&x.q(), &x.p()).unwrap();
        // an axis in the plane of the base great circle's pole
        let axis = (pi + x.q()).normalize();
        let rot = Rotation::about(&axis, PI);
        assert!(equivariance_defect(0.7, &rot, &x).unwrap() < 1e-10);
        let y = isometry_lift(&rot, &x);
        let pi_rot = hemisphere_centre(&y.q(), &y.p()).unwrap();
        assert!((pi_rot - rot.apply(&pi)).norm() < 1e-14);
        assert_eq!(equivariance_defect(0.7, &Rotation::identity(), &x).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn equivariant_under_rotations(seed in 0u64..10_000, s in 0.0f64..3.0) {
            let mut r = rng(seed);
            let rot = random_rotation(&mut r);
            let x = random_state(&mut r, s, s + 5.0);
            prop_assert!(equivariance_defect(s, &rot, &x).unwrap() < 1e-10);
        }

        #[test]
        fn hprime_is_periodic(seed in 0u64..10_000, a in -10.0f64..10.0) {
            let mut r = rng(seed);
            let x = random_state(&mut r, 0.1, 3.0);
            let y = phi_hprime(a + TAU, &x).unwrap();
            prop_assert!(y.distance(&phi_hprime(a, &x).unwrap()) < 1e-12);
        }
    }
}
