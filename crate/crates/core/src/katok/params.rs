use libm::sqrt;

use crate::Error;

/// Parameters `(s, alpha, k)` of a magnetic Katok system.
///
/// All derived quantities are axisymmetric and are written as functions of
/// the height `h = cos(theta)`, using `|d/dphi|^2 = 1 - h^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KatokParams {
    pub s: f64,
    pub alpha: f64,
    pub k: f64,
}

impl KatokParams {
    pub fn new(s: f64, alpha: f64, k: f64) -> Result<Self, Error> {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::InvalidParameter("s must be finite and >= 0"));
        }
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::InvalidParameter("alpha must lie in [0, 1)"));
        }
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidParameter("k must be finite and > 0"));
        }
        let p = Self { s, alpha, k };
        if !(p.c() > s * (1.0 + alpha)) {
            return Err(Error::InvalidParameter("level must satisfy c > s(1 + alpha)"));
        }
        Ok(p)
    }

    /// The level `c = sqrt(2k + s^2) + alpha s` of `H_{s,alpha}`.
    pub fn c(&self) -> f64 {
        sqrt(2.0 * self.k + self.s * self.s) + self.alpha * self.s
    }

    /// `1 - alpha^2 |d/dphi|^2`.
    #[inline]
    pub fn denom(&self, h: f64) -> f64 {
        1.0 - self.alpha * self.alpha * (1.0 - h * h)
    }

    #[inline]
    fn denom_prime(&self, h: f64) -> f64 {
        2.0 * self.alpha * self.alpha * h
    }

    /// `c - alpha s h`.
    #[inline]
    pub fn shifted_level(&self, h: f64) -> f64 {
        self.c() - self.alpha * self.s * h
    }

    /// `r = (c - alpha s h) / (1 - alpha^2 |d/dphi|^2)`.
    pub fn r(&self, h: f64) -> f64 {
        self.shifted_level(h) / self.denom(h)
    }

    pub fn r_prime(&self, h: f64) -> f64 {
        let (n, d) = (self.shifted_level(h), self.denom(h));
        (-self.alpha * self.s * d - n * self.denom_prime(h)) / (d * d)
    }

    /// `y_2 = (1 - alpha^2 |d/dphi|^2) r^2 - s^2`.
    pub fn y2(&self, h: f64) -> f64 {
        let n = self.shifted_level(h);
        n * n / self.denom(h) - self.s * self.s
    }

    /// `2k - y_2` written without cancellation:
    /// `-alpha (1 - h) [alpha R^2 (1 + h) + 2 R s + alpha s^2 (1 - h)] / d`
    /// with `R = sqrt(2k + s^2)`; `one_minus_h` is passed separately so callers
    /// can supply it accurately near the pole.
    pub fn level_gap(&self, h: f64, one_minus_h: f64) -> f64 {
        let (a, s) = (self.alpha, self.s);
        let big_r = sqrt(2.0 * self.k + s * s);
        -a * one_minus_h * (a * big_r * big_r * (1.0 + h) + 2.0 * big_r * s + a * s * s * one_minus_h) / self.denom(h)
    }

    pub fn y2_prime(&self, h: f64) -> f64 {
        let (n, d) = (self.shifted_level(h), self.denom(h));
        (2.0 * n * (-self.alpha * self.s) * d - n * n * self.denom_prime(h)) / (d * d)
    }

    /// Profile `f = alpha r` of the magnetic potential `eta = f beta`.
    pub fn eta_profile(&self, h: f64) -> f64 {
        self.alpha * self.r(h)
    }

    pub fn eta_profile_prime(&self, h: f64) -> f64 {
        self.alpha * self.r_prime(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range() {
        assert!(KatokParams::new(1.0, 1.0, 0.1).is_err());
        assert!(KatokParams::new(1.0, -0.1, 0.1).is_err());
        assert!(KatokParams::new(1.0, 0.1, 0.0).is_err());
        assert!(KatokParams::new(-1.0, 0.1, 0.1).is_err());
        assert!(KatokParams::new(2.0, 0.5, 0.01).is_ok());
    }

    #[test]
    fn derivatives_match_central_differences() {
        for (s, a, k) in [(1.0, 0.3, 0.1), (2.0, 0.5, 0.01), (0.0, 0.4, 0.5)] {
            let p = KatokParams::new(s, a, k).unwrap();
            for h in [-0.9, -0.2, 0.0, 0.4, 0.95] {
                let e = 1e-6;
                let fd_r = (p.r(h + e) - p.r(h - e)) / (2.0 * e);
                let fd_y = (p.y2(h + e) - p.y2(h - e)) / (2.0 * e);
                assert!((fd_r - p.r_prime(h)).abs() < 1e-8);
                assert!((fd_y - p.y2_prime(h)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn alpha_zero_collapses() {
        let p = KatokParams::new(1.5, 0.0, 0.2).unwrap();
        for h in [-1.0, 0.0, 0.3, 1.0] {
            assert!((p.r(h) - p.c()).abs() < 1e-15);
            assert!((p.y2(h) - 2.0 * p.k).abs() < 1e-14);
        }
    }
}
