//! The integrable Katok Hamiltonians `H_{s,alpha} = R_s + alpha Omega_s`,
//! the metrics and potentials realising their levels as magnetic flows, the
//! `W(S^2)` family and the approximating sequences.

mod metric;
mod params;
mod sequence;
mod w;

pub use metric::{
    appendix_validate, equatorial_orbits, katok_metric, kinetic_radius_defect, level_identity_defect,
    magnetic_system, shift_from_conjugate, shift_to_conjugate, AppendixReport, EquatorialOrbit, KatokMetric,
    LevelIdentity,
};
pub use params::KatokParams;
pub use sequence::{
    convergence_report, sequence_build, AlphaRule, ConvergenceRow, SequenceSpec, SequenceTerm, GOLDEN_FRACTION,
};
pub use w::{
    vertical_hessian, vertical_hessian_defect, w_convexity_scan, w_family, w_level_identity_defect, WParams,
    WScan,
};

use libm::{cos, sin, sqrt};
use nalgebra::{Matrix2, SymmetricEigen};

use crate::dynamics::{CotangentState, Hamiltonian, HamiltonianKind};
use crate::sphere::AxisFrame;
use crate::{Error, Rotation, Vec3};

/// `R_s = sqrt(|p|^2 + s^2)`.
pub fn r_s(s: f64, x: &CotangentState) -> f64 {
    sqrt(x.p().norm_squared() + s * s)
}

/// `Omega_s = p(d/dphi) + s h` about the default axis.
pub fn omega_s(s: f64, x: &CotangentState) -> f64 {
    let frame = AxisFrame::default();
    x.p().dot(&frame.rotation_field(&x.q())) + s * frame.height(&x.q())
}

/// `H_{s,alpha} = R_s + alpha Omega_s`.
pub fn h_salpha(s: f64, alpha: f64, x: &CotangentState) -> f64 {
    r_s(s, x) + alpha * omega_s(s, x)
}

/// Fibrewise coercivity of `H_{s,alpha}` holds exactly for `alpha < 1`.
pub fn coercive_fibrewise(alpha: f64) -> bool {
    (0.0..1.0).contains(&alpha)
}

/// Whether `{H_{s,alpha} = c}` avoids the closed disc bundle `{|p| <= s}`.
pub fn level_in_punctured(s: f64, alpha: f64, c: f64) -> bool {
    c > s * (1.0 + alpha)
}

/// Orthonormal basis `(e1, e2 = q x e1)` of the tangent plane at `q`.
pub fn tangent_basis(q: &Vec3) -> (Vec3, Vec3) {
    let seed = if q.x.abs() < 0.6 { Vec3::x() } else { Vec3::y() };
    let e1 = (seed - q * q.dot(&seed)).normalize();
    (e1, q.cross(&e1))
}

/// Central-difference fibre Hessian of `h` at `(q, v)` in the basis of
/// [`tangent_basis`].
pub fn fibre_hessian(h: &Hamiltonian, q: &Vec3, v: &Vec3, step: f64) -> Matrix2<f64> {
    let (e1, e2) = tangent_basis(q);
    let basis = [e1, e2];
    let f = |w: Vec3| h.value_at(q, &(v + w));
    let mut m = Matrix2::zeros();
    for i in 0..2 {
        for j in i..2 {
            let (a, b) = (basis[i] * step, basis[j] * step);
            let d = (f(a + b) - f(a - b) - f(b - a) + f(-a - b)) / (4.0 * step * step);
            m[(i, j)] = d;
            m[(j, i)] = d;
        }
    }
    m
}

pub fn min_eigenvalue(m: &Matrix2<f64>) -> f64 {
    SymmetricEigen::new(*m).eigenvalues.min()
}

/// Curvature of `h` along the tangent of its fibre level curve through `v`:
/// the second derivative in the direction `q x grad_v h`.
pub fn level_tangent_curvature(h: &Hamiltonian, q: &Vec3, v: &Vec3, step: f64) -> f64 {
    let (_, _, gv) = h.ambient_gradient(q, v);
    let t = q.cross(&gv).normalize();
    let f = |c: f64| h.value_at(q, &(v + t * c));
    (f(step) - 2.0 * f(0.0) + f(-step)) / (step * step)
}

/// The time-`t` map of `H_{s,alpha}` for `omega_{s mu}`.
///
/// For `s = 0` it is unit-speed geodesic transport composed with the lifted
/// rotation by `alpha t`; for `s > 0` it is conjugated by `Psi_s`.
pub fn closed_flow(s: f64, alpha: f64, x: &CotangentState, t: f64) -> Result<CotangentState, Error> {
    if x.norm() == 0.0 {
        return Err(Error::ZeroCovector);
    }
    if s == 0.0 {
        return Ok(closed_flow_unshifted(alpha, x, t));
    }
    let y = crate::psi::psi_inverse(s, x)?;
    crate::psi::psi_forward(s, &closed_flow_unshifted(alpha, &y, t))
}

fn closed_flow_unshifted(alpha: f64, x: &CotangentState, t: f64) -> CotangentState {
    let (q, v) = (x.q(), x.p());
    let m = v.norm();
    let u = v / m;
    let (c, s) = (cos(t), sin(t));
    let q1 = q * c + u * s;
    let v1 = (u * c - q * s) * m;
    let rot = Rotation::about(&Vec3::z(), alpha * t);
    CotangentState::from_ambient(rot.apply(&q1), rot.apply(&v1)).expect("unit base point")
}

/// The Hamiltonian `H_{s,alpha}` and its companion form `s mu`.
pub fn conjugate_system(s: f64, alpha: f64) -> (Hamiltonian, crate::MagneticForm) {
    (
        Hamiltonian::new(HamiltonianKind::KatokH { s, alpha }),
        crate::MagneticForm::constant(s),
    )
}

/// Radius `m` in `[lo, hi]` where `f(m) = target`, `f` returning value and
/// derivative and increasing through the root; bisection then Newton.
pub fn ray_level_radius<F>(f: F, target: f64, lo: f64, hi: f64) -> Result<f64, Error>
where
    F: Fn(f64) -> (f64, f64),
{
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (f(a).0 - target, f(b).0 - target);
    if !(fa <= 0.0 && fb >= 0.0) {
        return Err(Error::NoRayCrossing);
    }
    for _ in 0..200 {
        if b - a < 1e-7 * (1.0 + b) {
            break;
        }
        let mid = 0.5 * (a + b);
        if f(mid).0 - target < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let mut m = 0.5 * (a + b);
    for _ in 0..50 {
        let (val, d) = f(m);
        let g = val - target;
        if g < 0.0 {
            a = a.max(m);
        } else {
            b = b.min(m);
        }
        if g == 0.0 {
            break;
        }
        let mut next = m - g / d;
        if !(d > 0.0) || !(next >= a && next <= b) {
            next = 0.5 * (a + b);
        }
        let step = (next - m).abs();
        m = next;
        if step < 1e-14 * (1.0 + m) {
            break;
        }
    }
    Ok(m)
}

/// Radius along the fibre ray `m -> (q, m dir + offset)` where `h` reaches
/// `target`.
pub fn hamiltonian_ray_radius(
    h: &Hamiltonian,
    q: &Vec3,
    dir: &Vec3,
    offset: &Vec3,
    target: f64,
    hi: f64,
) -> Result<f64, Error> {
    ray_level_radius(
        |m| {
            let v = dir * m + offset;
            (h.value_at(q, &v), h.ray_derivative(q, &v, dir))
        },
        target,
        0.0,
        hi,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::psi::psi_forward;
    use crate::sampling::{random_state, random_unit, random_unit_tangent, rng};
    use core::f64::consts::TAU;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn rs_and_omega_values() {
        let x = CotangentState::from_ambient(Vec3::x(), Vec3::y() * 4.0).unwrap();
        assert_eq!(r_s(0.0, &x), 4.0);
        assert_eq!(r_s(3.0, &x), 5.0);
        let mut r = rng(1);
        for _ in 0..100 {
            let q = random_unit(&mut r);
            let z = CotangentState::from_ambient(q, Vec3::zeros()).unwrap();
            let s = r.random_range(0.0..3.0);
            let w = omega_s(s, &z);
            assert!(w >= -s && w <= s);
            assert!((w - s * q.z).abs() < 1e-15);
        }
    }

    #[test]
    fn conjugacy_identities() {
        let mut r = rng(2);
        for s in [0.1, 1.0, 3.0] {
            for _ in 0..1000 {
                let x = random_state(&mut r, s, s + 4.0);
                let y = psi_forward(s, &x).unwrap();
                assert!((r_s(s, &y) - r_s(0.0, &x)).abs() < 1e-10);
                assert!((omega_s(s, &y) - omega_s(0.0, &x)).abs() < 1e-10);
                assert!((h_salpha(s, 0.4, &y) - h_salpha(0.0, 0.4, &x)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn invariance_under_axis_rotation() {
        let mut r = rng(3);
        for _ in 0..100 {
            let x = random_state(&mut r, 0.1, 3.0);
            let rot = Rotation::about(&Vec3::z(), r.random_range(0.0..TAU));
            let y = crate::dynamics::isometry_lift(&rot, &x);
            assert!((omega_s(0.7, &y) - omega_s(0.7, &x)).abs() < 1e-12);
            assert!((r_s(0.7, &y) - r_s(0.7, &x)).abs() < 1e-12);
        }
    }

    #[test]
    fn fibre_image_of_sphere() {
        let mut r = rng(4);
        let (m, alpha) = (1.7, 0.35);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..20_000 {
            // equator sampled densely so the extremes are hit
            let q = if i % 2 == 0 { random_unit(&mut r) } else { Vec3::new(1.0, 0.0, 0.0) };
            let dir = random_unit_tangent(&mut r, &q);
            let v = h_salpha(0.0, alpha, &CotangentState::from_ambient(q, dir * m).unwrap());
            lo = lo.min(v);
            hi = hi.max(v);
        }
        assert!(lo >= m * (1.0 - alpha) - 1e-12 && hi <= m * (1.0 + alpha) + 1e-12);
        // the extremes are attained along +-d/dphi on the equator
        let at = |sign: f64| h_salpha(0.0, alpha, &CotangentState::from_ambient(Vec3::x(), Vec3::y() * sign * m).unwrap());
        assert!((at(1.0) - m * (1.0 + alpha)).abs() < 1e-8);
        assert!((at(-1.0) - m * (1.0 - alpha)).abs() < 1e-8);
    }

    #[test]
    fn predicates() {
        assert!(coercive_fibrewise(0.0) && coercive_fibrewise(0.99) && !coercive_fibrewise(1.0));
        assert!(level_in_punctured(1.0, 0.5, 1.6) && !level_in_punctured(1.0, 0.5, 1.5));
        let x = random_state(&mut rng(5), 0.5, 2.0);
        assert_eq!(h_salpha(0.8, 0.0, &x), r_s(0.8, &x));
    }

    #[test]
    fn fibrewise_convexity() {
        let mut r = rng(6);
        for alpha in [0.0, 0.3, 0.9] {
            for s in [0.0, 1.0] {
                let h = Hamiltonian::katok(s, alpha);
                for _ in 0..1000 {
                    let x = random_state(&mut r, 0.2, 3.0);
                    if s > 0.0 {
                        let hess = fibre_hessian(&h, &x.q(), &x.p(), 1e-4);
                        assert!(min_eigenvalue(&hess) > 0.0);
                    } else {
                        assert!(level_tangent_curvature(&h, &x.q(), &x.p(), 1e-4) > 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn closed_flow_examples() {
        let x = CotangentState::from_ambient(Vec3::new(0.3, 0.4, 0.866).normalize(), Vec3::new(1.0, -1.0, 0.1)).unwrap();
        assert!(closed_flow(0.0, 0.0, &x, TAU).unwrap().distance(&x) < 1e-12);
        let alpha = 0.3;
        let co = CotangentState::from_ambient(Vec3::x(), Vec3::y()).unwrap();
        let counter = CotangentState::from_ambient(Vec3::x(), -Vec3::y()).unwrap();
        assert!(closed_flow(0.0, alpha, &co, TAU / (1.0 + alpha)).unwrap().distance(&co) < 1e-12);
        assert!(closed_flow(0.0, alpha, &counter, TAU / (1.0 - alpha)).unwrap().distance(&counter) < 1e-12);
        assert!(closed_flow(0.0, alpha, &co, TAU).unwrap().distance(&co) > 0.1);
        let z = CotangentState::from_ambient(Vec3::x(), Vec3::zeros()).unwrap();
        assert_eq!(closed_flow(0.5, alpha, &z, 1.0), Err(Error::ZeroCovector));
    }

    proptest! {
        #[test]
        fn closed_flow_is_a_flow(seed in 0u64..10_000, s in 0.0f64..2.0, alpha in 0.0f64..0.95,
                                 t in -5.0f64..5.0, u in -5.0f64..5.0) {
            let x = random_state(&mut rng(seed), 0.2, 3.0);
            let a = closed_flow(s, alpha, &x, t + u).unwrap();
            let b = closed_flow(s, alpha, &closed_flow(s, alpha, &x, u).unwrap(), t).unwrap();
            prop_assert!(a.distance(&b) < 1e-10);
            for f in [h_salpha(s, alpha, &a) - h_salpha(s, alpha, &x), r_s(s, &a) - r_s(s, &x),
                      omega_s(s, &a) - omega_s(s, &x)] {
                prop_assert!(f.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn ray_solver_finds_radius() {
        let h = Hamiltonian::new(HamiltonianKind::Rs { s: 3.0 });
        let m = hamiltonian_ray_radius(&h, &Vec3::z(), &Vec3::x(), &Vec3::zeros(), 5.0, 50.0).unwrap();
        assert!((m - 4.0).abs() < 1e-12, "{m}");
        assert_eq!(
            hamiltonian_ray_radius(&h, &Vec3::z(), &Vec3::x(), &Vec3::zeros(), 100.0, 50.0),
            Err(Error::NoRayCrossing)
        );
    }
}
