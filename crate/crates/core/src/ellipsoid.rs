//! The ellipsoid `E_alpha = {(1+alpha)|z1|^2/2 + (1-alpha)|z2|^2/2 = 1}` and
//! its Reeb flow for the restriction of the standard Liouville form.

use alloc::vec::Vec;
use core::f64::consts::{SQRT_2, TAU};

use libm::{cos, sin, sqrt};
use nalgebra::Complex;
use rand::Rng;

use crate::sampling::rng;
use crate::Error;

pub type C64 = Complex<f64>;

/// Largest constraint defect accepted as lying on the ellipsoid.
pub const SURFACE_TOLERANCE: f64 = 1e-9;
/// Return defect below which a scan polishes a near-return.
pub const CLOSURE_THRESHOLD: f64 = 0.05;
/// Residual at which a polished return counts as closed.
pub const POLISH_TOLERANCE: f64 = 1e-12;

fn modulus(z: C64) -> f64 {
    sqrt(z.norm_sqr())
}

fn polar(r: f64, a: f64) -> C64 {
    C64::new(r * cos(a), r * sin(a))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EllipsoidState {
    pub z1: C64,
    pub z2: C64,
    pub alpha: f64,
}

impl EllipsoidState {
    pub fn new(z1: C64, z2: C64, alpha: f64) -> Result<Self, Error> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::InvalidParameter("alpha must lie in [0, 1)"));
        }
        let st = Self { z1, z2, alpha };
        let defect = st.constraint_defect();
        if !(defect <= SURFACE_TOLERANCE) {
            return Err(Error::OffEllipsoid { defect });
        }
        Ok(st)
    }

    /// The point with `|z1|^2 = 2 cos^2(w) / (1+alpha)`,
    /// `|z2|^2 = 2 sin^2(w) / (1-alpha)` and phases `a1`, `a2`.
    pub fn from_angles(alpha: f64, w: f64, a1: f64, a2: f64) -> Result<Self, Error> {
        let r1 = SQRT_2 * cos(w) / sqrt(1.0 + alpha);
        let r2 = SQRT_2 * sin(w) / sqrt(1.0 - alpha);
        Self::new(polar(r1, a1), polar(r2, a2), alpha)
    }

    pub fn constraint_defect(&self) -> f64 {
        let a = self.alpha;
        ((1.0 + a) * self.z1.norm_sqr() / 2.0 + (1.0 - a) * self.z2.norm_sqr() / 2.0 - 1.0).abs()
    }

    pub fn distance(&self, o: &EllipsoidState) -> f64 {
        sqrt((self.z1 - o.z1).norm_sqr() + (self.z2 - o.z2).norm_sqr())
    }

    /// The Reeb vector field.
    pub fn velocity(&self) -> (C64, C64) {
        let i = C64::i();
        (i * (1.0 + self.alpha) * self.z1, i * (1.0 - self.alpha) * self.z2)
    }

    /// `lambda = (1/2) sum (x dy - y dx)` on `(w1, w2)`.
    pub fn liouville(&self, w: (C64, C64)) -> f64 {
        0.5 * ((self.z1.conj() * w.0).im + (self.z2.conj() * w.1).im)
    }
}

pub fn reeb_flow(x: &EllipsoidState, t: f64) -> Result<EllipsoidState, Error> {
    let defect = x.constraint_defect();
    if !(defect <= SURFACE_TOLERANCE) {
        return Err(Error::OffEllipsoid { defect });
    }
    let a = x.alpha;
    Ok(EllipsoidState {
        z1: x.z1 * polar(1.0, (1.0 + a) * t),
        z2: x.z2 * polar(1.0, (1.0 - a) * t),
        alpha: a,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReebOrbit {
    pub representative: EllipsoidState,
    pub period: f64,
    pub closure_defect: f64,
}

/// The circles `{z2 = 0}` and `{z1 = 0}`, the first with the shorter period.
pub fn reeb_periodic_orbits(alpha: f64) -> Result<[ReebOrbit; 2], Error> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter("alpha must lie in (0, 1)"));
    }
    let make = |x: EllipsoidState, period: f64| -> Result<ReebOrbit, Error> {
        Ok(ReebOrbit {
            representative: x,
            period,
            closure_defect: reeb_flow(&x, period)?.distance(&x),
        })
    };
    Ok([
        make(EllipsoidState::from_angles(alpha, 0.0, 0.0, 0.0)?, TAU / (1.0 + alpha))?,
        make(EllipsoidState::from_angles(alpha, TAU / 4.0, 0.0, 0.0)?, TAU / (1.0 - alpha))?,
    ])
}

/// Minimum of `|phi_t(x) - x|` over `t` in `(t_leave, t_max]`, where
/// `t_leave` is the first time the orbit is `leave` away from its start.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReturnScan {
    pub min_defect: f64,
    pub t_at_min: f64,
}

pub fn return_scan(x: &EllipsoidState, t_max: f64, dt: f64, leave: f64) -> Result<ReturnScan, Error> {
    let defect = |t: f64| reeb_flow(x, t).map(|y| y.distance(x));
    let mut best = ReturnScan {
        min_defect: f64::INFINITY,
        t_at_min: f64::NAN,
    };
    let mut left = false;
    let n = libm::ceil(t_max / dt) as usize;
    let mut prev = (0.0, 0.0);
    let mut prev2 = (f64::NAN, f64::NAN);
    for i in 1..=n {
        let t = (i as f64 * dt).min(t_max);
        let d = defect(t)?;
        if !left {
            left = d > leave;
        } else if prev.1 <= d && prev.1 <= prev2.1 {
            // local minimum bracketed by [t - 2 dt, t]; refine by golden section
            let (mut a, mut b) = (prev2.0, t);
            let g = 0.5 * (sqrt(5.0) - 1.0);
            for _ in 0..60 {
                let c = b - g * (b - a);
                let e = a + g * (b - a);
                if defect(c)? < defect(e)? {
                    b = e;
                } else {
                    a = c;
                }
            }
            let tm = 0.5 * (a + b);
            let dm = defect(tm)?;
            if dm < best.min_defect {
                best = ReturnScan { min_defect: dm, t_at_min: tm };
            }
        }
        if left && i == n && d < best.min_defect {
            best = ReturnScan { min_defect: d, t_at_min: t };
        }
        prev2 = prev;
        prev = (t, d);
    }
    Ok(best)
}

/// Newton polish of a near-return at time `t_guess`.
///
/// Works on the section where the phase of the larger coordinate vanishes,
/// in the complex coordinate `zeta` of the other one, with the return time
/// fixed to the whole number of turns of the section coordinate nearest to
/// `t_guess`. Returns the fixed point reached, or `None` when Newton does
/// not converge within 50 iterations.
pub fn polish_near_return(x: &EllipsoidState, t_guess: f64) -> Result<Option<EllipsoidState>, Error> {
    let a = x.alpha;
    let first = x.z1.norm_sqr() * (1.0 + a) >= x.z2.norm_sqr() * (1.0 - a);
    let (w_fix, w_free) = if first { (1.0 + a, 1.0 - a) } else { (1.0 - a, 1.0 + a) };
    let turns = libm::round(t_guess * w_fix / TAU).max(1.0);
    let period = TAU * turns / w_fix;
    let build = |zeta: C64| -> Result<EllipsoidState, Error> {
        let rest = 2.0 - w_free * zeta.norm_sqr();
        if rest <= 0.0 {
            return Err(Error::OffEllipsoid { defect: -rest });
        }
        let fixed = C64::new(sqrt(rest / w_fix), 0.0);
        let (z1, z2) = if first { (fixed, zeta) } else { (zeta, fixed) };
        EllipsoidState::new(z1, z2, a)
    };
    let ret = |zeta: C64| -> Result<C64, Error> {
        let y = reeb_flow(&build(zeta)?, period)?;
        Ok(if first { y.z2 } else { y.z1 })
    };
    let start = if first { x.z2 * (x.z1.conj() / modulus(x.z1)) } else { x.z1 * (x.z2.conj() / modulus(x.z2)) };
    let mut zeta = start;
    let h = 1e-7;
    for _ in 0..50 {
        let f = ret(zeta)? - zeta;
        if modulus(f) < POLISH_TOLERANCE {
            return Ok(Some(build(zeta)?));
        }
        let fx = (ret(zeta + h)? - (zeta + h) - f) / h;
        let fy = (ret(zeta + C64::i() * h)? - (zeta + C64::i() * h) - f) / h;
        let det = fx.re * fy.im - fy.re * fx.im;
        if det.abs() < 1e-14 {
            return Ok(None);
        }
        let dx = -(fy.im * f.re - fy.re * f.im) / det;
        let dy = -(fx.re * f.im - fx.im * f.re) / det;
        zeta += C64::new(dx, dy);
        if !(zeta.norm_sqr() * w_free < 2.0) {
            return Ok(None);
        }
    }
    Ok(None)
}

/// Return scans over random non-axis starting points.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitScan {
    pub alpha: f64,
    pub t_max: f64,
    pub samples: usize,
    pub min_defect: f64,
    /// Starting points whose return defect fell below [`CLOSURE_THRESHOLD`].
    pub near_returns: usize,
    /// Near-returns whose polish landed on one of the axis circles.
    pub axis_limits: usize,
    /// Closed orbits off the axes found by polishing.
    pub closed: Vec<EllipsoidState>,
}

/// Whether `x` lies on one of the two axis circles.
pub fn on_axis(x: &EllipsoidState) -> bool {
    modulus(x.z1) < 1e-8 || modulus(x.z2) < 1e-8
}

pub fn non_axis_scan(alpha: f64, t_max: f64, samples: usize, seed: u64) -> Result<OrbitScan, Error> {
    let mut r = rng(seed);
    let mut out = OrbitScan {
        alpha,
        t_max,
        samples,
        min_defect: f64::INFINITY,
        near_returns: 0,
        axis_limits: 0,
        closed: Vec::new(),
    };
    for _ in 0..samples {
        let w = r.random_range(0.15..(TAU / 4.0 - 0.15));
        let x = EllipsoidState::from_angles(alpha, w, r.random_range(0.0..TAU), r.random_range(0.0..TAU))?;
        let scan = return_scan(&x, t_max, 1e-2, 0.2)?;
        out.min_defect = out.min_defect.min(scan.min_defect);
        if scan.min_defect < CLOSURE_THRESHOLD {
            out.near_returns += 1;
            match polish_near_return(&x, scan.t_at_min)? {
                Some(y) if on_axis(&y) => out.axis_limits += 1,
                Some(y) => out.closed.push(y),
                None => {}
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::katok::GOLDEN_FRACTION;

    #[test]
    fn constraint_and_liouville() {
        let mut r = rng(1);
        for _ in 0..200 {
            let a = r.random_range(0.0..0.95);
            let x = EllipsoidState::from_angles(a, r.random_range(0.0..TAU), r.random_range(0.0..TAU), 1.0).unwrap();
            let t = r.random_range(-100.0..100.0);
            let y = reeb_flow(&x, t).unwrap();
            assert!(y.constraint_defect() < 1e-12);
            assert!((y.liouville(y.velocity()) - 1.0).abs() < 1e-10);
        }
        let off = EllipsoidState { z1: C64::new(2.0, 0.0), z2: C64::new(0.0, 0.0), alpha: 0.1 };
        assert!(matches!(reeb_flow(&off, 1.0), Err(Error::OffEllipsoid { .. })));
    }

    #[test]
    fn round_sphere_is_totally_periodic() {
        let mut r = rng(2);
        for _ in 0..20 {
            let x = EllipsoidState::from_angles(0.0, r.random_range(0.0..TAU), r.random_range(0.0..TAU), 0.3).unwrap();
            assert!(reeb_flow(&x, TAU).unwrap().distance(&x) < 1e-12);
        }
    }

    #[test]
    fn axis_orbits() {
        let [a, b] = reeb_periodic_orbits(0.1).unwrap();
        assert!((a.period - TAU / 1.1).abs() < 1e-15 && (b.period - TAU / 0.9).abs() < 1e-15);
        assert!(a.closure_defect < 1e-12 && b.closure_defect < 1e-12);
        assert!(reeb_periodic_orbits(0.0).is_err());
    }

    #[test]
    fn generic_orbit_never_closes() {
        let alpha = GOLDEN_FRACTION * 0.1;
        let x = EllipsoidState::from_angles(alpha, 0.7, 0.2, 1.1).unwrap();
        let scan = return_scan(&x, 100.0, 1e-2, 0.2).unwrap();
        assert!(scan.min_defect > 0.1, "{scan:?}");
        // a rational alpha closes up
        let y = EllipsoidState::from_angles(0.5, 0.7, 0.2, 1.1).unwrap();
        assert!(return_scan(&y, 30.0, 1e-2, 0.2).unwrap().min_defect < 1e-9);
    }

    #[test]
    fn polish_keeps_rational_closures() {
        // (1 + 0.2) / (1 - 0.2) = 3 / 2: every orbit closes at 5 pi.
        let x = EllipsoidState::from_angles(0.2, 0.7, 0.4, 1.9).unwrap();
        let y = polish_near_return(&x, 5.0 * core::f64::consts::PI).unwrap().unwrap();
        assert!(!on_axis(&y));
        assert!(reeb_flow(&y, 5.0 * core::f64::consts::PI).unwrap().distance(&y) < 1e-12);
    }

    #[test]
    fn irrational_near_returns_polish_to_the_axes() {
        let alpha = 0.125 * 0.125 * GOLDEN_FRACTION;
        let scan = non_axis_scan(alpha, 100.0, 16, 5).unwrap();
        assert!(scan.min_defect < CLOSURE_THRESHOLD);
        assert!(scan.near_returns > 0);
        assert_eq!(scan.axis_limits, scan.near_returns);
        assert!(scan.closed.is_empty());
    }
}
