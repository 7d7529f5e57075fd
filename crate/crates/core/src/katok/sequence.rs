use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use libm::ldexp;

use super::metric::katok_metric;
use super::params::KatokParams;
use crate::sphere::{Chart, SpherePoint};
use crate::Error;

/// `(sqrt 5 - 1) / 2`.
pub const GOLDEN_FRACTION: f64 = 0.618_033_988_749_894_8;

/// How `alpha_n` follows `k_n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlphaRule {
    /// `alpha_n = k_n^2 (sqrt 5 - 1)/2`, so that `alpha_n / k_n -> 0`.
    GoldenSquare,
    /// `alpha_n = k_n`, enough when `s = 0`.
    Linear,
}

/// The sequence `k_n = 2^-n` with `alpha_n` given by `rule`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SequenceSpec {
    pub s: f64,
    pub rule: AlphaRule,
}

impl SequenceSpec {
    pub fn new(s: f64) -> Self {
        Self {
            s,
            rule: AlphaRule::GoldenSquare,
        }
    }

    pub fn k(&self, n: u32) -> f64 {
        ldexp(1.0, -(n as i32))
    }

    pub fn alpha(&self, n: u32) -> f64 {
        let k = self.k(n);
        let a = match self.rule {
            AlphaRule::GoldenSquare => k * k * GOLDEN_FRACTION,
            AlphaRule::Linear => k,
        };
        a.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON)
    }
}

/// The `n`-th magnetic Katok system `(g_n, s mu + d(alpha_n r_n beta))` at
/// level `k_n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SequenceTerm {
    pub n: u32,
    pub k: f64,
    pub alpha: f64,
    pub params: KatokParams,
}

pub fn sequence_build(spec: &SequenceSpec, n: u32) -> Result<SequenceTerm, Error> {
    let (k, alpha) = (spec.k(n), spec.alpha(n));
    Ok(SequenceTerm {
        n,
        k,
        alpha,
        params: KatokParams::new(spec.s, alpha, k)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub n: u32,
    pub k: f64,
    pub alpha: f64,
    /// Grid supremum of the operator norm of `g_n - g_round`.
    pub sup_metric: f64,
    /// Grid supremum of `|alpha_n r_n beta|`.
    pub sup_potential: f64,
    /// `((1 - alpha_n^2 |d/dphi|^2) r_n^2 - s^2) / (2 k_n)` on the equator.
    pub ratio: f64,
    /// `r_n` on the equator.
    pub r_equator: f64,
}

/// Rows `n = 1..=n_max` over an `n_theta x n_phi` grid.
pub fn convergence_report(
    spec: &SequenceSpec,
    n_max: u32,
    n_theta: usize,
    n_phi: usize,
) -> Result<Vec<ConvergenceRow>, Error> {
    let mut points = Vec::with_capacity(n_theta * n_phi);
    for i in 0..n_theta {
        let theta = if n_theta > 1 { PI * i as f64 / (n_theta - 1) as f64 } else { PI / 2.0 };
        for j in 0..n_phi {
            let q = SpherePoint::from_coords(Chart::A, theta, TAU * j as f64 / n_phi as f64);
            points.push(SpherePoint::from_ambient(q.ambient())?);
        }
    }
    (1..=n_max)
        .map(|n| {
            let term = sequence_build(spec, n)?;
            let p = term.params;
            let mut sup_metric: f64 = 0.0;
            let mut sup_potential: f64 = 0.0;
            for q in &points {
                let m = katok_metric(&p, q)?;
                sup_metric = sup_metric.max(m.deviation_from_round());
                sup_potential = sup_potential.max(m.eta.norm());
            }
            Ok(ConvergenceRow {
                n,
                k: term.k,
                alpha: term.alpha,
                sup_metric,
                sup_potential,
                ratio: p.y2(0.0) / (2.0 * term.k),
                r_equator: p.r(0.0),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_constant() {
        assert!(((libm::sqrt(5.0) - 1.0) / 2.0 - GOLDEN_FRACTION).abs() < 1e-15);
    }

    #[test]
    fn ratio_and_potential_converge() {
        let spec = SequenceSpec::new(1.0);
        let rows = convergence_report(&spec, 16, 32, 8).unwrap();
        for row in &rows {
            if row.alpha < 1e-3 && row.k < 1e-3 {
                assert!((row.r_equator - 1.0).abs() < 1e-3);
            }
            if row.n >= 6 {
                assert!((row.ratio - 1.0).abs() < 10.0 * (row.alpha / row.k + row.k));
            }
        }
        for w in rows.windows(2).filter(|w| w[0].n >= 4) {
            assert!(w[1].sup_metric < w[0].sup_metric);
            assert!(w[1].sup_potential < w[0].sup_potential);
        }
        assert!((rows.last().unwrap().ratio - 1.0).abs() < 1e-3);
    }

    #[test]
    fn linear_rule_at_s_zero() {
        let spec = SequenceSpec { s: 0.0, rule: AlphaRule::Linear };
        let rows = convergence_report(&spec, 16, 16, 4).unwrap();
        let last = rows.last().unwrap();
        assert!(last.sup_potential < 1e-6 && last.sup_metric < 1e-3, "{last:?}");
        assert!((last.ratio - 1.0).abs() < 1e-3);
    }
}
