use alloc::vec::Vec;

use libm::sqrt;
use nalgebra::Matrix2;

use super::{fibre_hessian, hamiltonian_ray_radius, min_eigenvalue};
use crate::dynamics::{CotangentState, Hamiltonian, HamiltonianKind};
use crate::sampling::{random_unit, random_unit_tangent, rng};
use crate::{Error, Vec3};

/// Step of the fibre Hessian differences at the zero section.
pub const HESSIAN_STEP: f64 = 1e-3;

/// Parameters of `H_s = (R_s - s) / (1 + eps (s - Omega_s))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WParams {
    pub s: f64,
    pub eps: f64,
    /// Radius of the shrunk domain; `delta / 2` when unset.
    pub shrink: Option<f64>,
}

impl WParams {
    pub fn new(s: f64, eps: f64) -> Result<Self, Error> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidParameter("s must be finite and > 0"));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter("epsilon must be finite and > 0"));
        }
        Ok(Self { s, eps, shrink: None })
    }

    pub fn with_shrink(mut self, radius: f64) -> Result<Self, Error> {
        if !(radius > 0.0 && radius <= self.delta()) {
            return Err(Error::InvalidParameter("shrink radius must lie in (0, delta]"));
        }
        self.shrink = Some(radius);
        Ok(self)
    }

    /// `delta` with `delta^2 = 1/eps^2 + 2 s/eps`.
    pub fn delta(&self) -> f64 {
        sqrt(1.0 / (self.eps * self.eps) + 2.0 * self.s / self.eps)
    }

    pub fn domain_radius(&self) -> f64 {
        self.shrink.unwrap_or(0.5 * self.delta())
    }

    pub fn hamiltonian(&self) -> Hamiltonian {
        Hamiltonian::new(HamiltonianKind::WFamily { s: self.s, eps: self.eps })
    }
}

pub fn w_family(wp: &WParams, x: &CotangentState) -> Result<f64, Error> {
    let delta = wp.delta();
    if x.norm() >= delta {
        return Err(Error::BeyondRadius { radius: delta });
    }
    Ok(wp.hamiltonian().value(x))
}

/// Central-difference fibre Hessian of `H_s` at `(q, 0)`.
pub fn vertical_hessian(wp: &WParams, q: &Vec3) -> Matrix2<f64> {
    fibre_hessian(&wp.hamiltonian(), q, &Vec3::zeros(), HESSIAN_STEP)
}

/// Relative deviation of [`vertical_hessian`] from
/// `g_round / (s (1 + eps s (1 - cos theta)))`.
pub fn vertical_hessian_defect(wp: &WParams, q: &Vec3) -> f64 {
    let h = wp.hamiltonian();
    let expected = 1.0 / (wp.s * (1.0 + wp.eps * wp.s * (1.0 - h.frame.height(q))));
    let m = vertical_hessian(wp, q);
    (m - Matrix2::identity() * expected).amax() / expected
}

/// Radius difference along the ray `(q, m dir)` between `{H_s = k}` and
/// `{H_{s, eps k} = s (1 + eps k) + k}`.
pub fn w_level_identity_defect(wp: &WParams, k: f64, q: &Vec3, dir: &Vec3) -> Result<f64, Error> {
    if !(k > 0.0) {
        return Err(Error::InvalidParameter("k must be > 0"));
    }
    let radius = wp.domain_radius();
    let hs = wp.hamiltonian();
    let m1 = hamiltonian_ray_radius(&hs, q, dir, &Vec3::zeros(), k, radius)
        .map_err(|_| Error::LevelEscapes { radius })?;
    let alpha = wp.eps * k;
    if alpha >= 1.0 {
        return Err(Error::InvalidParameter("eps k must be < 1"));
    }
    let hk = Hamiltonian::katok(wp.s, alpha);
    let hi = 10.0 * sqrt(2.0 * k + wp.s * wp.s);
    let m2 = hamiltonian_ray_radius(&hk, q, dir, &Vec3::zeros(), wp.s * (1.0 + alpha) + k, hi)?;
    Ok((m1 - m2).abs())
}

#[derive(Clone, Debug, PartialEq)]
pub struct WScan {
    pub domain_radius: f64,
    /// `(k, passed)` in scan order.
    pub rows: Vec<(f64, bool)>,
    /// Largest `k` of the initial run of passing levels.
    pub k_max: Option<f64>,
}

/// Samples `rays` fibre rays per level and checks that `{H_s = k}` stays in
/// the shrunk domain and that the fibre Hessian is positive definite on it.
pub fn w_convexity_scan(wp: &WParams, levels: &[f64], rays: usize, seed: u64) -> WScan {
    let h = wp.hamiltonian();
    let radius = wp.domain_radius();
    let mut r = rng(seed);
    let samples: Vec<(Vec3, Vec3)> = (0..rays)
        .map(|_| {
            let q = random_unit(&mut r);
            let d = random_unit_tangent(&mut r, &q);
            (q, d)
        })
        .collect();
    let mut rows = Vec::with_capacity(levels.len());
    let mut k_max = None;
    let mut prefix = true;
    for &k in levels {
        let ok = samples.iter().all(|(q, d)| {
            match hamiltonian_ray_radius(&h, q, d, &Vec3::zeros(), k, radius) {
                Ok(m) => {
                    let step = 1e-4 * (1.0 + m);
                    min_eigenvalue(&fibre_hessian(&h, q, &(d * m), step)) > 0.0
                }
                Err(_) => false,
            }
        });
        rows.push((k, ok));
        prefix &= ok;
        if prefix {
            k_max = Some(k);
        }
    }
    WScan {
        domain_radius: radius,
        rows,
        k_max,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::random_state;
    use rand::Rng;

    fn random_ray<R: Rng>(r: &mut R) -> (Vec3, Vec3) {
        let q = random_unit(r);
        (q, random_unit_tangent(r, &q))
    }

    #[test]
    fn vanishes_on_zero_section() {
        let wp = WParams::new(1.0, 0.5).unwrap();
        let mut r = rng(1);
        for _ in 0..100 {
            let z = CotangentState::from_ambient(random_unit(&mut r), Vec3::zeros()).unwrap();
            assert_eq!(w_family(&wp, &z).unwrap(), 0.0);
        }
        let far = random_state(&mut r, 10.0, 10.0);
        assert!(matches!(w_family(&wp, &far), Err(Error::BeyondRadius { .. })));
    }

    #[test]
    fn hessian_at_pole_and_elsewhere() {
        let wp = WParams::new(1.0, 0.5).unwrap();
        let m = vertical_hessian(&wp, &Vec3::z());
        assert!((m - Matrix2::identity()).amax() < 1e-5);
        let mut r = rng(2);
        for _ in 0..100 {
            assert!(vertical_hessian_defect(&wp, &random_unit(&mut r)) < 1e-5);
        }
    }

    #[test]
    fn level_sets_agree() {
        let wp = WParams::new(1.0, 0.5).unwrap();
        let mut r = rng(3);
        for _ in 0..100 {
            let (q, d) = random_ray(&mut r);
            assert!(w_level_identity_defect(&wp, 1e-3, &q, &d).unwrap() < 1e-8);
        }
        let (q, d) = random_ray(&mut r);
        assert!(matches!(w_level_identity_defect(&wp, 50.0, &q, &d), Err(Error::LevelEscapes { .. })));
    }

    #[test]
    fn scan_reports_small_levels() {
        let wp = WParams::new(1.0, 0.5).unwrap();
        let scan = w_convexity_scan(&wp, &[1e-3, 1e-2, 0.1], 32, 0);
        assert_eq!(scan.k_max, Some(0.1));
        assert!(WParams::new(1.0, 0.5).unwrap().with_shrink(10.0).is_err());
    }
}
