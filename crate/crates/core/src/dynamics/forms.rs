use super::state::{ChartCoords, CotangentState, PhaseTangent};
use crate::katok::KatokParams;
use crate::sphere::{area_form, AxisFrame, Chart, ChartFrame};
use crate::{Error, Vec3};

/// Exact part `d(f beta)` of a magnetic form, `f` an axisymmetric profile
/// `f(h)` about the frame axis.
#[derive(Clone, Copy, Debug)]
pub enum ExactPart {
    /// `f = alpha r` with its closed-form differential.
    KatokShift(KatokParams),
    /// Arbitrary profile, differentiated numerically in `h`.
    Profile(fn(f64) -> f64),
}

impl PartialEq for ExactPart {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (ExactPart::KatokShift(a), ExactPart::KatokShift(b)) => a == b,
            (ExactPart::Profile(a), ExactPart::Profile(b)) => core::ptr::fn_addr_eq(*a, *b),
            _ => false,
        }
    }
}

impl ExactPart {
    pub fn profile(&self, h: f64) -> f64 {
        match self {
            ExactPart::KatokShift(kp) => kp.eta_profile(h),
            ExactPart::Profile(f) => f(h),
        }
    }

    pub fn profile_prime(&self, h: f64) -> f64 {
        match self {
            ExactPart::KatokShift(kp) => kp.eta_profile_prime(h),
            ExactPart::Profile(f) => {
                let e = 1e-6;
                (f(h + e) - f(h - e)) / (2.0 * e)
            }
        }
    }
}

/// `sigma = s mu + d(f beta)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MagneticForm {
    pub s: f64,
    pub exact: Option<ExactPart>,
    pub frame: AxisFrame,
}

impl MagneticForm {
    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn constant(s: f64) -> Self {
        Self {
            s,
            exact: None,
            frame: AxisFrame::default(),
        }
    }

    /// `s mu + d(alpha r beta)` of the magnetic Katok system.
    pub fn katok(params: KatokParams) -> Self {
        Self {
            s: params.s,
            exact: Some(ExactPart::KatokShift(params)),
            frame: AxisFrame::default(),
        }
    }

    pub fn with_frame(mut self, frame: AxisFrame) -> Self {
        self.frame = frame;
        self
    }

    /// `sigma_q(u, w)`.
    ///
    /// With `beta(w) = (a x q) . w` and `d beta = 2 h mu`,
    /// `d(f beta) = f'(h) dh ^ beta + 2 f h mu`.
    pub fn eval(&self, q: &Vec3, u: &Vec3, w: &Vec3) -> f64 {
        let mu = area_form(q, u, w);
        let mut out = self.s * mu;
        if let Some(ex) = &self.exact {
            let a = self.frame.axis();
            let h = a.dot(q);
            let rot = a.cross(q);
            out += 2.0 * ex.profile(h) * h * mu
                + ex.profile_prime(h) * (a.dot(u) * rot.dot(w) - a.dot(w) * rot.dot(u));
        }
        out
    }

    /// Coefficient of `dtheta ^ dphi` in the given chart frame.
    pub fn chart_coefficient(&self, f: &ChartFrame) -> f64 {
        self.eval(&f.q, &f.e_theta, &f.e_phi)
    }

    /// The one-form `f beta` (dual vector), zero without an exact part.
    pub fn potential(&self, q: &Vec3) -> Vec3 {
        match &self.exact {
            Some(ex) => self.frame.rotation_field(q) * ex.profile(self.frame.height(q)),
            None => Vec3::zeros(),
        }
    }
}

/// The frame one-forms evaluated on a tangent vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OneForms {
    pub lambda: f64,
    pub zeta_x: f64,
    pub zeta_v: f64,
    p2: f64,
}

impl OneForms {
    /// `lambda_s = zeta_X + s zeta_V / |p|^2`.
    pub fn lambda_s(&self, s: f64) -> Result<f64, Error> {
        if s == 0.0 {
            return Ok(self.lambda);
        }
        if self.p2 == 0.0 {
            return Err(Error::ZeroCovector);
        }
        Ok(self.zeta_x + s * self.zeta_v / self.p2)
    }
}

/// `zeta_X(w) = g(d pi w, u)` and `zeta_V(w) = g(K w, j u)` with `K` the
/// connection map (tangential part of `dp`) and `j u = q x u`.
pub fn one_forms(state: &CotangentState, w: &PhaseTangent) -> OneForms {
    let (q, v) = (state.q(), state.p());
    let zeta_x = w.dq.dot(&v);
    OneForms {
        lambda: zeta_x,
        zeta_x,
        zeta_v: w.dp.dot(&q.cross(&v)),
        p2: v.norm_squared(),
    }
}

/// `omega_sigma = dp ^ dq - pi* sigma` on chart tangent vectors at `state`,
/// expressed in the state's own chart.
pub fn omega_pairing(
    sigma: &MagneticForm,
    state: &CotangentState,
    w1: &[f64; 4],
    w2: &[f64; 4],
) -> f64 {
    let x = state.coords();
    omega_chart(sigma, state.chart(), &x, w1, w2)
}

pub fn omega_chart(sigma: &MagneticForm, chart: Chart, x: &ChartCoords, w1: &[f64; 4], w2: &[f64; 4]) -> f64 {
    let f = ChartFrame::new(chart, x[0], x[1]);
    let s12 = sigma.chart_coefficient(&f);
    let canonical = w1[2] * w2[0] - w1[0] * w2[2] + w1[3] * w2[1] - w1[1] * w2[3];
    canonical - s12 * (w1[0] * w2[1] - w1[1] * w2[0])
}

/// Ambient form of `omega_sigma`: `dp1 . dq2 - dq1 . dp2 - sigma(dq1, dq2)`.
pub fn omega_ambient(sigma: &MagneticForm, q: &Vec3, w1: &PhaseTangent, w2: &PhaseTangent) -> f64 {
    w1.dp.dot(&w2.dq) - w1.dq.dot(&w2.dp) - sigma.eval(q, &w1.dq, &w2.dq)
}
