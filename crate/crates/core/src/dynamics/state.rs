use libm::sqrt;

use crate::sphere::{chart_convert, preferred_chart, Chart, ChartFrame, Rotation, SpherePoint};
use crate::{Error, Vec3};

/// A point of `T*S^2`: a base point and a covector, the latter stored as its
/// round-metric dual tangent vector.
///
/// Chart components follow `p_theta = u . e_theta`, `p_phi = u . e_phi`
/// where `u` is the dual vector, so `p_phi = sin^2(theta) u_phi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CotangentState {
    q: SpherePoint,
    p: Vec3,
}

/// Chart coordinates `(theta, phi, p_theta, p_phi)`.
pub type ChartCoords = [f64; 4];

impl CotangentState {
    /// Normalizes `q`, projects `v` onto the tangent plane and attaches the
    /// preferred chart.
    pub fn from_ambient(q: Vec3, v: Vec3) -> Result<Self, Error> {
        let q = SpherePoint::from_ambient(q)?;
        let a = q.ambient();
        Ok(Self {
            q,
            p: v - a * a.dot(&v),
        })
    }

    pub fn new(q: SpherePoint, v: Vec3) -> Self {
        let a = q.ambient();
        Self {
            q,
            p: v - a * a.dot(&v),
        }
    }

    pub fn from_chart(chart: Chart, x: &ChartCoords) -> Self {
        let f = ChartFrame::new(chart, x[0], x[1]);
        let v = f.e_theta * x[2] + f.e_phi * (x[3] / (f.sin_t * f.sin_t));
        Self {
            q: SpherePoint::from_coords(chart, x[0], x[1]),
            p: v,
        }
    }

    pub fn base(&self) -> &SpherePoint {
        &self.q
    }

    pub fn q(&self) -> Vec3 {
        self.q.ambient()
    }

    /// The metric dual of the covector, an ambient vector orthogonal to `q`.
    pub fn p(&self) -> Vec3 {
        self.p
    }

    pub fn norm(&self) -> f64 {
        self.p.norm()
    }

    pub fn chart(&self) -> Chart {
        self.q.chart()
    }

    /// Same point viewed in `chart`.
    pub fn in_chart(&self, chart: Chart) -> Self {
        Self {
            q: chart_convert(&self.q, chart),
            p: self.p,
        }
    }

    /// Same point viewed in its preferred chart.
    pub fn rechart(&self) -> Self {
        self.in_chart(preferred_chart(&self.q.ambient()))
    }

    pub fn coords(&self) -> ChartCoords {
        let f = self.q.frame();
        [
            self.q.theta(),
            self.q.phi(),
            self.p.dot(&f.e_theta),
            self.p.dot(&f.e_phi),
        ]
    }

    /// Phase-space distance in ambient coordinates.
    pub fn distance(&self, other: &CotangentState) -> f64 {
        let dq = self.q() - other.q();
        let dp = self.p - other.p;
        sqrt(dq.norm_squared() + dp.norm_squared())
    }

    pub fn with_p(&self, v: Vec3) -> Self {
        Self::new(self.q, v)
    }
}

/// Cotangent lift `(q, p) -> (R q, p o (dR)^-1)` of a rotation; under metric
/// duality it rotates the dual vector with the base point.
pub fn isometry_lift(r: &Rotation, x: &CotangentState) -> CotangentState {
    let q = r.apply(&x.q());
    CotangentState {
        q: SpherePoint::from_ambient(q).expect("rotation preserves unit vectors"),
        p: r.apply(&x.p),
    }
}

/// A tangent vector to `T*S^2` in ambient form: the base displacement `dq`
/// and the ambient derivative `dp` of the dual vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseTangent {
    pub dq: Vec3,
    pub dp: Vec3,
}

impl PhaseTangent {
    pub fn new(dq: Vec3, dp: Vec3) -> Self {
        Self { dq, dp }
    }

    pub fn norm(&self) -> f64 {
        sqrt(self.dq.norm_squared() + self.dp.norm_squared())
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::new(self.dq * c, self.dp * c)
    }

    pub fn add(&self, o: &PhaseTangent) -> Self {
        Self::new(self.dq + o.dq, self.dp + o.dp)
    }
}

/// Derivatives of the chart parametrisation `(theta, phi, p_theta, p_phi) ->
/// (q, u)`.
#[derive(Clone, Copy, Debug)]
pub struct ChartJacobian {
    pub frame: ChartFrame,
    /// The dual vector.
    pub v: Vec3,
    /// `d q / d x_i`.
    pub dq: [Vec3; 4],
    /// `d u / d x_i`.
    pub dv: [Vec3; 4],
}

impl ChartJacobian {
    pub fn new(chart: Chart, x: &ChartCoords) -> Self {
        let f = ChartFrame::new(chart, x[0], x[1]);
        let (st, ct) = (f.sin_t, f.cos_t);
        let s2 = st * st;
        let (pt, pp) = (x[2], x[3]);
        let v = f.e_theta * pt + f.e_phi * (pp / s2);
        let zero = Vec3::zeros();
        let dv_theta = -f.q * pt - f.e_phi * (pp * ct / (s2 * st));
        let dv_phi = f.e_phi * (pt * ct / st) - f.radial() * (pp / st);
        Self {
            frame: f,
            v,
            dq: [f.e_theta, f.e_phi, zero, zero],
            dv: [dv_theta, dv_phi, f.e_theta, f.e_phi / s2],
        }
    }

    pub fn push(&self, w: &[f64; 4]) -> PhaseTangent {
        let mut t = PhaseTangent::new(Vec3::zeros(), Vec3::zeros());
        for i in 0..4 {
            t.dq += self.dq[i] * w[i];
            t.dp += self.dv[i] * w[i];
        }
        t
    }

    /// Chart components of an ambient tangent vector.
    pub fn pull(&self, t: &PhaseTangent) -> [f64; 4] {
        let f = &self.frame;
        let (st, ct) = (f.sin_t, f.cos_t);
        let wt = t.dq.dot(&f.e_theta);
        let wp = t.dq.dot(&f.e_phi) / (st * st);
        let v_ephi = self.v.dot(&f.e_phi);
        let wpt = t.dp.dot(&f.e_theta) + (ct / st) * v_ephi * wp;
        let wpp = t.dp.dot(&f.e_phi) + (ct / st) * v_ephi * wt - st * self.v.dot(&f.radial()) * wp;
        [wt, wp, wpt, wpp]
    }
}
