use libm::sqrt;

use super::state::{ChartCoords, ChartJacobian, CotangentState};
use crate::katok::KatokParams;
use crate::sphere::{AxisFrame, Chart};
use crate::Vec3;

/// Riemannian metrics on `S^2` with a closed-form kinetic energy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Metric {
    /// The round metric of curvature one.
    Round,
    /// The metric `g_{s,alpha,k}` whose kinetic level `k` realises the
    /// `H_{s,alpha}` level `c` shifted by `eta = alpha r beta`.
    Katok(KatokParams),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HamiltonianKind {
    /// `H_g(q, p) = |p|_g^2 / 2`.
    Kinetic(Metric),
    /// `R_s = sqrt(|p|^2 + s^2)`.
    Rs { s: f64 },
    /// `Omega_s = p(d/dphi) + s h`.
    OmegaS { s: f64 },
    /// `H_{s,alpha} = R_s + alpha Omega_s`.
    KatokH { s: f64, alpha: f64 },
    /// `(R_s - s) / (1 + eps (s - Omega_s))`.
    WFamily { s: f64, eps: f64 },
}

/// A Hamiltonian on `T*S^2` together with the axis its rotation-dependent
/// terms refer to.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hamiltonian {
    pub kind: HamiltonianKind,
    pub frame: AxisFrame,
}

/// The rotation invariants every implemented Hamiltonian depends on:
/// `|p|^2`, `p(d/dphi)` and `h`.
#[derive(Clone, Copy, Debug)]
pub struct Invariants {
    pub p2: f64,
    pub l: f64,
    pub h: f64,
}

impl Invariants {
    pub fn of(frame: &AxisFrame, q: &Vec3, v: &Vec3) -> Self {
        Self {
            p2: v.norm_squared(),
            l: v.dot(&frame.rotation_field(q)),
            h: frame.height(q),
        }
    }
}

impl Hamiltonian {
    pub fn new(kind: HamiltonianKind) -> Self {
        Self {
            kind,
            frame: AxisFrame::default(),
        }
    }

    pub fn round_kinetic() -> Self {
        Self::new(HamiltonianKind::Kinetic(Metric::Round))
    }

    pub fn katok_kinetic(params: KatokParams) -> Self {
        Self::new(HamiltonianKind::Kinetic(Metric::Katok(params)))
    }

    pub fn katok(s: f64, alpha: f64) -> Self {
        Self::new(HamiltonianKind::KatokH { s, alpha })
    }

    pub fn with_frame(mut self, frame: AxisFrame) -> Self {
        self.frame = frame;
        self
    }

    /// Whether the Hamiltonian fails to be differentiable on the zero section.
    pub fn singular_on_zero_section(&self) -> bool {
        match self.kind {
            HamiltonianKind::Rs { s } | HamiltonianKind::KatokH { s, .. } => s == 0.0,
            _ => false,
        }
    }

    /// Value and partial derivatives with respect to `(|p|^2, p(d/dphi), h)`.
    pub fn value_grad(&self, inv: &Invariants) -> (f64, [f64; 3]) {
        let Invariants { p2, l, h } = *inv;
        match self.kind {
            HamiltonianKind::Kinetic(Metric::Round) => (0.5 * p2, [0.5, 0.0, 0.0]),
            HamiltonianKind::Kinetic(Metric::Katok(kp)) => {
                let a2 = kp.alpha * kp.alpha;
                let y2 = kp.y2(h);
                let quad = p2 - a2 * l * l;
                let scale = kp.k / y2;
                (
                    scale * quad,
                    [scale, -2.0 * a2 * l * scale, -scale / y2 * kp.y2_prime(h) * quad],
                )
            }
            HamiltonianKind::Rs { s } => {
                let r = sqrt(p2 + s * s);
                (r, [0.5 / r, 0.0, 0.0])
            }
            HamiltonianKind::OmegaS { s } => (l + s * h, [0.0, 1.0, s]),
            HamiltonianKind::KatokH { s, alpha } => {
                let r = sqrt(p2 + s * s);
                (r + alpha * (l + s * h), [0.5 / r, alpha, alpha * s])
            }
            HamiltonianKind::WFamily { s, eps } => {
                let r = sqrt(p2 + s * s);
                let num = r - s;
                let den = 1.0 + eps * (s - l - s * h);
                let d2 = den * den;
                (num / den, [0.5 / (r * den), num * eps / d2, num * eps * s / d2])
            }
        }
    }

    pub fn value_at(&self, q: &Vec3, v: &Vec3) -> f64 {
        self.value_grad(&Invariants::of(&self.frame, q, v)).0
    }

    pub fn value(&self, x: &CotangentState) -> f64 {
        self.value_at(&x.q(), &x.p())
    }

    /// Gradients `(d H / d q, d H / d u)` of the ambient extension of `H`.
    pub fn ambient_gradient(&self, q: &Vec3, v: &Vec3) -> (f64, Vec3, Vec3) {
        let a = self.frame.axis();
        let (val, [hp2, hl, hh]) = self.value_grad(&Invariants::of(&self.frame, q, v));
        let gq = v.cross(&a) * hl + a * hh;
        let gv = v * (2.0 * hp2) + a.cross(q) * hl;
        (val, gq, gv)
    }

    /// Value and partials in chart coordinates `(theta, phi, p_theta, p_phi)`.
    pub fn chart_partials(&self, chart: Chart, x: &ChartCoords) -> (f64, [f64; 4]) {
        let jac = ChartJacobian::new(chart, x);
        self.chart_partials_with(&jac)
    }

    pub fn chart_partials_with(&self, jac: &ChartJacobian) -> (f64, [f64; 4]) {
        let (val, gq, gv) = self.ambient_gradient(&jac.frame.q, &jac.v);
        let d = core::array::from_fn(|i| gq.dot(&jac.dq[i]) + gv.dot(&jac.dv[i]));
        (val, d)
    }

    /// Derivative of `m -> H(q, m dir)`.
    pub fn ray_derivative(&self, q: &Vec3, v: &Vec3, dir: &Vec3) -> f64 {
        let (_, _, gv) = self.ambient_gradient(q, v);
        gv.dot(dir)
    }
}
