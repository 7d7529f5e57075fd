use alloc::vec::Vec;

use super::section::{Level, Section};
use crate::dynamics::{flow_to, CotangentState};
use crate::Error;

/// Samples per period used for orbit distances.
pub const SAMPLES_PER_PERIOD: usize = 256;

/// A primitive periodic orbit.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitRecord {
    pub representative: CotangentState,
    pub period: f64,
    pub energy: f64,
    /// `|phi^T(x) - x|` from an independent integration.
    pub closure_defect: f64,
    /// Period cap up to which shorter closures were looked for.
    pub multiplicity_checked: f64,
    pub section: Section,
    /// Evenly spaced points along one period, starting at the representative.
    pub samples: Vec<CotangentState>,
}

/// `n` points at times `j T / n`, each flowed from the previous one.
pub fn sample_orbit(level: &Level, x: &CotangentState, period: f64, n: usize, tol: f64) -> Result<Vec<CotangentState>, Error> {
    let dt = period / n as f64;
    let mut out = Vec::with_capacity(n);
    let mut cur = *x;
    for _ in 0..n {
        out.push(cur);
        cur = flow_to(&level.h, &level.sigma, &cur, dt, tol)?;
    }
    Ok(out)
}

/// Distance from `x` to the orbit sampled in `samples` (period `period`):
/// nearest sample, then golden-section refinement over the two adjacent
/// sample intervals.
pub fn point_orbit_distance(
    level: &Level,
    x: &CotangentState,
    samples: &[CotangentState],
    period: f64,
    refine_below: f64,
    tol: f64,
) -> Result<f64, Error> {
    let n = samples.len();
    let (mut best_i, mut best) = (0, f64::INFINITY);
    for (i, s) in samples.iter().enumerate() {
        let d = x.distance(s);
        if d < best {
            best = d;
            best_i = i;
        }
    }
    if best >= refine_below || n < 3 {
        return Ok(best);
    }
    let dt = period / n as f64;
    let from = samples[(best_i + n - 1) % n];
    let f = |t: f64| -> Result<f64, Error> { Ok(x.distance(&flow_to(&level.h, &level.sigma, &from, t, tol)?)) };
    let g = 0.5 * (libm::sqrt(5.0) - 1.0);
    let (mut a, mut b) = (0.0, 2.0 * dt);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..48 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    Ok(best.min(fc).min(fd))
}

/// Symmetric distance between two recorded orbits.
pub fn orbit_distance(level: &Level, a: &OrbitRecord, b: &OrbitRecord, refine_below: f64, tol: f64) -> Result<f64, Error> {
    let ab = point_orbit_distance(level, &a.representative, &b.samples, b.period, refine_below, tol)?;
    let ba = point_orbit_distance(level, &b.representative, &a.samples, a.period, refine_below, tol)?;
    Ok(ab.min(ba))
}
