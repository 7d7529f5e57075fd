//! Deterministic random sampling on the sphere and its cotangent bundle, and a
//! two-dimensional Sobol sequence for quasi-uniform seeding.

use core::f64::consts::TAU;

use libm::{acos, cos, sin};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{CotangentState, SpherePoint, Vec3};

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniformly distributed unit vector.
pub fn random_unit<R: Rng>(r: &mut R) -> Vec3 {
    let z: f64 = r.random_range(-1.0..1.0);
    let phi: f64 = r.random_range(0.0..TAU);
    let rho = libm::sqrt(1.0 - z * z);
    Vec3::new(rho * cos(phi), rho * sin(phi), z)
}

/// Random tangent vector at `q` with standard normal-ish components.
pub fn random_tangent<R: Rng>(r: &mut R, q: &Vec3) -> Vec3 {
    let v = Vec3::new(
        r.random_range(-1.0..1.0),
        r.random_range(-1.0..1.0),
        r.random_range(-1.0..1.0),
    );
    v - q * q.dot(&v)
}

/// Unit tangent vector at `q` with uniformly distributed direction.
pub fn random_unit_tangent<R: Rng>(r: &mut R, q: &Vec3) -> Vec3 {
    loop {
        let v = random_tangent(r, q);
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Random cotangent state with uniform base point, uniform direction and
/// `|p|` uniform in `[lo, hi]`.
pub fn random_state<R: Rng>(r: &mut R, lo: f64, hi: f64) -> CotangentState {
    let q = random_unit(r);
    let m = if hi > lo { r.random_range(lo..hi) } else { lo };
    let v = random_unit_tangent(r, &q) * m;
    CotangentState::from_ambient(q, v).expect("unit base point")
}

/// Random proper rotation.
pub fn random_rotation<R: Rng>(r: &mut R) -> crate::Rotation {
    let axis = random_unit(r);
    let angle: f64 = r.random_range(-core::f64::consts::PI..core::f64::consts::PI);
    crate::Rotation::about(&axis, angle)
}

/// Base point from a unit-square sample, area-uniform.
pub fn sphere_point_from_unit_square(u: f64, w: f64) -> SpherePoint {
    let theta = acos((1.0 - 2.0 * u).clamp(-1.0, 1.0));
    let q = SpherePoint::from_coords(crate::Chart::A, theta, TAU * w);
    SpherePoint::from_ambient(q.ambient()).expect("unit vector")
}

/// First two dimensions of the Sobol sequence (Gray-code free, direct form).
///
/// Dimension one is the base-2 van der Corput sequence; dimension two uses
/// the primitive polynomial `x + 1`, i.e. direction numbers
/// `v_k = v_{k-1} ^ (v_{k-1} >> 1)`.
#[derive(Clone, Debug)]
pub struct Sobol2 {
    directions: [[u32; 32]; 2],
}

impl Default for Sobol2 {
    fn default() -> Self {
        let mut directions = [[0u32; 32]; 2];
        for k in 0..32 {
            directions[0][k] = 1u32 << (31 - k);
        }
        directions[1][0] = 1u32 << 31;
        for k in 1..32 {
            let prev = directions[1][k - 1];
            directions[1][k] = prev ^ (prev >> 1);
        }
        Self { directions }
    }
}

impl Sobol2 {
    /// The `index`-th point in `[0, 1)^2`.
    pub fn point(&self, index: u32) -> [f64; 2] {
        let mut out = [0u32; 2];
        let mut i = index;
        let mut k = 0;
        while i != 0 {
            if i & 1 == 1 {
                out[0] ^= self.directions[0][k];
                out[1] ^= self.directions[1][k];
            }
            i >>= 1;
            k += 1;
        }
        let scale = 1.0 / 4_294_967_296.0;
        [out[0] as f64 * scale, out[1] as f64 * scale]
    }
}
