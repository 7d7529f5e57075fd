use alloc::vec::Vec;

use libm::fabs;

use crate::dynamics::{
    ChartCoords, ChartJacobian, CotangentState, Hamiltonian, IntegratorOptions, MagneticForm,
    PhaseTangent, Segment, Stepper,
};
use crate::sphere::{AxisFrame, Chart};
use crate::{Error, Vec3};

/// Largest `|H - E|` accepted for states handed to the return map.
pub const LEVEL_TOLERANCE: f64 = 1e-9;
/// Smallest `|dS/dt|` of a transverse crossing.
pub const MIN_CROSSING_RATE: f64 = 1e-6;
/// Time tolerance of crossing location.
pub const CROSSING_TIME_TOL: f64 = 1e-10;
/// Default time budget for finding a crossing.
pub const DEFAULT_BUDGET: f64 = 1e3;

/// An energy level `{H = E}` of `(T*S^2, omega_sigma)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Level {
    pub h: Hamiltonian,
    pub sigma: MagneticForm,
    pub energy: f64,
}

impl Level {
    pub fn new(h: Hamiltonian, sigma: MagneticForm, energy: f64) -> Self {
        Self { h, sigma, energy }
    }

    pub fn defect(&self, x: &CotangentState) -> f64 {
        fabs(self.h.value(x) - self.energy)
    }

    /// `X_{H,sigma}` at `x` in ambient form.
    pub fn velocity(&self, x: &CotangentState) -> Result<PhaseTangent, Error> {
        crate::dynamics::ham_vector_field(&self.h, &self.sigma, x)
    }

    /// Point of the level on the fibre ray `(q, m dir)`, `m > 0`.
    pub fn on_ray(&self, q: &Vec3, dir: &Vec3) -> Result<CotangentState, Error> {
        let mut hi = 1.0;
        let value = |m: f64| self.h.value_at(q, &(dir * m));
        let mut tries = 0;
        while value(hi) < self.energy {
            hi *= 2.0;
            tries += 1;
            if tries > 60 {
                return Err(Error::NoRayCrossing);
            }
        }
        let m = crate::katok::hamiltonian_ray_radius(&self.h, q, dir, &Vec3::zeros(), self.energy, hi)?;
        CotangentState::from_ambient(*q, dir * m)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Positive,
    Negative,
    Either,
}

impl Direction {
    fn accepts(self, s0: f64, s1: f64) -> bool {
        match self {
            Direction::Positive => s0 < 0.0 && s1 >= 0.0,
            Direction::Negative => s0 > 0.0 && s1 <= 0.0,
            Direction::Either => (s0 < 0.0 && s1 >= 0.0) || (s0 > 0.0 && s1 <= 0.0),
        }
    }

    pub fn of_rate(rate: f64) -> Self {
        if rate >= 0.0 { Direction::Positive } else { Direction::Negative }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SectionKind {
    /// `p_theta = 0` about the frame axis, as the zero set of `-p . axis`
    /// (same sign as `p_theta` off the poles).
    MomentumTheta,
    /// The half-plane `phi = 0` about the frame axis.
    Azimuth,
    /// `nq . (q - q0) + nv . (v - v0) = 0` in ambient phase coordinates.
    Hyperplane { q0: Vec3, v0: Vec3, nq: Vec3, nv: Vec3 },
}

/// The zero set of a functional `S` on `T*S^2` with a crossing direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Section {
    pub kind: SectionKind,
    pub direction: Direction,
    pub frame: AxisFrame,
}

impl Section {
    /// `p_theta = 0`, crossing upwards.
    pub fn primary() -> Self {
        Self {
            kind: SectionKind::MomentumTheta,
            direction: Direction::Positive,
            frame: AxisFrame::default(),
        }
    }

    /// `phi = 0`, either direction.
    pub fn secondary() -> Self {
        Self {
            kind: SectionKind::Azimuth,
            direction: Direction::Either,
            frame: AxisFrame::default(),
        }
    }

    /// Hyperplane through `x` orthogonal to the flow there.
    pub fn hyperplane_through(level: &Level, x: &CotangentState) -> Result<Self, Error> {
        let v = level.velocity(x)?;
        Ok(Self {
            kind: SectionKind::Hyperplane {
                q0: x.q(),
                v0: x.p(),
                nq: v.dq,
                nv: v.dp,
            },
            direction: Direction::Positive,
            frame: AxisFrame::default(),
        })
    }

    pub fn with_direction(mut self, d: Direction) -> Self {
        self.direction = d;
        self
    }

    fn reference(&self) -> Vec3 {
        let a = self.frame.axis();
        let seed = if a.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        (seed - a * a.dot(&seed)).normalize()
    }

    pub fn value(&self, q: &Vec3, v: &Vec3) -> f64 {
        match self.kind {
            SectionKind::MomentumTheta => -v.dot(&self.frame.axis()),
            SectionKind::Azimuth => q.dot(&self.frame.axis().cross(&self.reference())),
            SectionKind::Hyperplane { q0, v0, nq, nv } => nq.dot(&(q - q0)) + nv.dot(&(v - v0)),
        }
    }

    pub fn value_at(&self, x: &CotangentState) -> f64 {
        self.value(&x.q(), &x.p())
    }

    /// Ambient gradient `(dS/dq, dS/dv)`.
    pub fn gradient(&self, _q: &Vec3, _v: &Vec3) -> (Vec3, Vec3) {
        match self.kind {
            SectionKind::MomentumTheta => (Vec3::zeros(), -self.frame.axis()),
            SectionKind::Azimuth => (self.frame.axis().cross(&self.reference()), Vec3::zeros()),
            SectionKind::Hyperplane { nq, nv, .. } => (nq, nv),
        }
    }

    pub fn chart_gradient(&self, jac: &ChartJacobian) -> [f64; 4] {
        let (gq, gv) = self.gradient(&jac.frame.q, &jac.v);
        core::array::from_fn(|i| gq.dot(&jac.dq[i]) + gv.dot(&jac.dv[i]))
    }

    /// Whether a zero of `S` at `q` belongs to the section.
    pub fn admissible(&self, q: &Vec3) -> bool {
        match self.kind {
            SectionKind::Azimuth => q.dot(&self.reference()) > 0.0,
            _ => true,
        }
    }

    /// `dS/dt` along `X` and the normalised transversality
    /// `|dS/dt| / (|grad S| |X|)`.
    pub fn rate(&self, level: &Level, x: &CotangentState) -> Result<(f64, f64), Error> {
        let v = level.velocity(x)?;
        let (gq, gv) = self.gradient(&x.q(), &x.p());
        let rate = gq.dot(&v.dq) + gv.dot(&v.dp);
        let norm = libm::sqrt(gq.norm_squared() + gv.norm_squared()) * v.norm();
        Ok((rate, if norm > 0.0 { fabs(rate) / norm } else { 0.0 }))
    }
}

/// A level with a section on it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SectionSpec {
    pub level: Level,
    pub section: Section,
}

impl SectionSpec {
    pub fn new(level: Level, section: Section) -> Self {
        Self { level, section }
    }

    pub fn with_section(&self, section: Section) -> Self {
        Self {
            level: self.level,
            section,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SectionCrossing {
    pub state: CotangentState,
    /// Time since the start of the search.
    pub time: f64,
    pub rate: f64,
    pub transversality: f64,
}

/// Lazily produces successive crossings of a section along a trajectory.
pub struct CrossingFinder {
    section: Section,
    level: Level,
    stepper: Stepper,
    prev: f64,
    t_end: f64,
    /// Crossings closer than this to the start are ignored.
    min_time: f64,
    /// Number of tangential crossings passed over.
    pub tangential: usize,
}

impl CrossingFinder {
    pub fn new(spec: &SectionSpec, x: &CotangentState, t_end: f64, tol: f64) -> Result<Self, Error> {
        let opts = IntegratorOptions {
            record: false,
            h_max: 0.25,
            ..IntegratorOptions::with_tol(tol)
        };
        let stepper = Stepper::new(spec.level.h, spec.level.sigma, x, 0.0, opts)?;
        Ok(Self {
            section: spec.section,
            level: spec.level,
            prev: spec.section.value_at(x),
            stepper,
            t_end,
            min_time: 1e-8,
            tangential: 0,
        })
    }

    pub fn time(&self) -> f64 {
        self.stepper.time()
    }

    pub fn state(&self) -> CotangentState {
        self.stepper.state()
    }

    pub fn energy_drift(&self) -> f64 {
        self.stepper.energy_drift
    }

    fn value_precise(&self, seg: &Segment, t: f64) -> Result<(f64, CotangentState), Error> {
        let st = self.stepper.precise(seg, t)?;
        Ok((self.section.value_at(&st), st))
    }

    /// Locates the root of `S` in `seg`: bisection on the Hermite dense
    /// output, then Newton on single precise steps with `dS/dt` from the
    /// vector field.
    fn locate(&self, seg: &Segment) -> Result<(f64, CotangentState), Error> {
        let s_herm = |t: f64| {
            let y: ChartCoords = seg.hermite(t);
            let st = CotangentState::from_chart(seg.chart, &y);
            self.section.value_at(&st)
        };
        let (mut a, mut b) = (seg.t0, seg.t1);
        let sa = s_herm(a);
        for _ in 0..40 {
            let m = 0.5 * (a + b);
            if (s_herm(m) < 0.0) == (sa < 0.0) {
                a = m;
            } else {
                b = m;
            }
        }
        let (lo, hi) = if seg.t0 <= seg.t1 { (seg.t0, seg.t1) } else { (seg.t1, seg.t0) };
        let mut t = 0.5 * (a + b);
        let (mut s, mut st) = self.value_precise(seg, t)?;
        for _ in 0..8 {
            let (rate, _) = self.section.rate(&self.level, &st)?;
            if rate == 0.0 {
                break;
            }
            let next = (t - s / rate).clamp(lo, hi);
            let dt = fabs(next - t);
            t = next;
            (s, st) = self.value_precise(seg, t)?;
            if dt < 1e-3 * CROSSING_TIME_TOL {
                break;
            }
        }
        Ok((t, st))
    }

    /// Next transverse crossing in the section's direction, or `None` when
    /// the time limit is reached first.
    pub fn next_crossing(&mut self) -> Result<Option<SectionCrossing>, Error> {
        while self.stepper.time() < self.t_end {
            let seg = self.stepper.step_toward(self.t_end)?;
            let end = seg.end();
            let s1 = self.section.value_at(&end);
            let s0 = self.prev;
            self.prev = s1;
            if !self.section.direction.accepts(s0, s1) {
                continue;
            }
            let (t, st) = self.locate(&seg)?;
            if t < self.min_time || !self.section.admissible(&st.q()) {
                continue;
            }
            let (rate, transversality) = self.section.rate(&self.level, &st)?;
            if fabs(rate) < MIN_CROSSING_RATE {
                self.tangential += 1;
                continue;
            }
            return Ok(Some(SectionCrossing {
                state: st,
                time: t,
                rate,
                transversality,
            }));
        }
        Ok(None)
    }
}

/// Result of [`poincare_return`].
#[derive(Clone, Debug, PartialEq)]
pub struct ReturnSequence {
    pub crossings: Vec<SectionCrossing>,
    /// Tangential crossings that were skipped.
    pub tangential: usize,
}

/// The first `n_returns` crossings of the section after `x`.
pub fn poincare_return(
    spec: &SectionSpec,
    x: &CotangentState,
    n_returns: usize,
    budget: f64,
    tol: f64,
) -> Result<ReturnSequence, Error> {
    let defect = spec.level.defect(x);
    if !(defect <= LEVEL_TOLERANCE) {
        return Err(Error::OffLevel { defect });
    }
    let mut finder = CrossingFinder::new(spec, x, budget, tol)?;
    let mut crossings = Vec::with_capacity(n_returns);
    while crossings.len() < n_returns {
        match finder.next_crossing()? {
            Some(c) => crossings.push(c),
            None => return Err(Error::NoCrossing { budget }),
        }
    }
    Ok(ReturnSequence {
        crossings,
        tangential: finder.tangential,
    })
}

/// Projects chart coordinates onto `{S = 0, H = E}` by Gauss-Newton along
/// the span of the two gradients.
pub fn project_to_section(spec: &SectionSpec, chart: Chart, y: &ChartCoords) -> Result<ChartCoords, Error> {
    let mut y = *y;
    for _ in 0..12 {
        let jac = ChartJacobian::new(chart, &y);
        let gs = spec.section.chart_gradient(&jac);
        let (hv, gh) = spec.level.h.chart_partials_with(&jac);
        let r = [spec.section.value(&jac.frame.q, &jac.v), hv - spec.level.energy];
        if fabs(r[0]) < 1e-15 && fabs(r[1]) < 1e-15 {
            break;
        }
        let dot = |a: &[f64; 4], b: &[f64; 4]| (0..4).map(|i| a[i] * b[i]).sum::<f64>();
        let (a11, a12, a22) = (dot(&gs, &gs), dot(&gs, &gh), dot(&gh, &gh));
        let det = a11 * a22 - a12 * a12;
        if !(fabs(det) > 1e-14 * a11 * a22) {
            return Err(Error::Singular);
        }
        let c1 = (a22 * r[0] - a12 * r[1]) / det;
        let c2 = (a11 * r[1] - a12 * r[0]) / det;
        let step: [f64; 4] = core::array::from_fn(|i| c1 * gs[i] + c2 * gh[i]);
        for i in 0..4 {
            y[i] -= step[i];
        }
        if step.iter().all(|s| fabs(*s) < 1e-16) {
            break;
        }
    }
    Ok(y)
}
