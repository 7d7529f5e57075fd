use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_8, TAU};

use libm::{fabs, pow, sin, sqrt};

use super::field::chart_field;
use super::forms::MagneticForm;
use super::hamiltonian::Hamiltonian;
use super::state::{ChartCoords, CotangentState};
use crate::sphere::{Chart, DEFAULT_SWITCH_MARGIN};
use crate::Error;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Smallest `sin` of the chart colatitude an accepted step may end at.
const HARD_SIN_FLOOR: f64 = 0.02;
/// Norm of the dual vector below which a Hamiltonian singular on the zero
/// section is considered to have reached it.
const ZERO_SECTION: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorOptions {
    pub tol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
    /// Half-width of the hysteresis band around the nominal chart boundary
    /// colatitudes `pi/8` and `7 pi/8`.
    pub switch_margin: f64,
    /// Keep every accepted step; when false only the last one is retained.
    pub record: bool,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            h_init: 1e-2,
            h_max: 0.5,
            h_min: 1e-13,
            max_steps: 2_000_000,
            switch_margin: DEFAULT_SWITCH_MARGIN,
            record: true,
        }
    }
}

impl IntegratorOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

/// One accepted step, in the chart it was computed in.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub t0: f64,
    pub t1: f64,
    pub chart: Chart,
    pub y0: ChartCoords,
    pub y1: ChartCoords,
    pub f0: [f64; 4],
    pub f1: [f64; 4],
}

impl Segment {
    pub fn contains(&self, t: f64) -> bool {
        let (lo, hi) = if self.t0 <= self.t1 { (self.t0, self.t1) } else { (self.t1, self.t0) };
        t >= lo && t <= hi
    }

    /// Cubic Hermite interpolant in chart coordinates.
    pub fn hermite(&self, t: f64) -> ChartCoords {
        let h = self.t1 - self.t0;
        let s = (t - self.t0) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        core::array::from_fn(|i| {
            h00 * self.y0[i] + h10 * h * self.f0[i] + h01 * self.y1[i] + h11 * h * self.f1[i]
        })
    }

    /// Derivative of the Hermite interpolant.
    pub fn hermite_rate(&self, t: f64) -> [f64; 4] {
        let h = self.t1 - self.t0;
        let s = (t - self.t0) / h;
        let s2 = s * s;
        let d00 = (6.0 * s2 - 6.0 * s) / h;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = (-6.0 * s2 + 6.0 * s) / h;
        let d11 = 3.0 * s2 - 2.0 * s;
        core::array::from_fn(|i| d00 * self.y0[i] + d10 * self.f0[i] + d01 * self.y1[i] + d11 * self.f1[i])
    }

    pub fn start(&self) -> CotangentState {
        CotangentState::from_chart(self.chart, &self.y0)
    }

    pub fn end(&self) -> CotangentState {
        CotangentState::from_chart(self.chart, &self.y1)
    }

    pub fn state_hermite(&self, t: f64) -> CotangentState {
        CotangentState::from_chart(self.chart, &self.hermite(t))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowResult {
    pub start: CotangentState,
    pub segments: Vec<Segment>,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub energy0: f64,
    /// `max |H(x(t)) - H(x(0))|` over accepted steps.
    pub energy_drift: f64,
    /// Set when `energy_drift` exceeds `10 tol`.
    pub drift_flagged: bool,
}

impl FlowResult {
    pub fn t_end(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.t1)
    }

    pub fn end(&self) -> CotangentState {
        self.segments.last().map_or(self.start, |s| s.end())
    }

    /// `(t, state)` at every accepted step, the start included.
    pub fn samples(&self) -> Vec<(f64, CotangentState)> {
        let mut out = Vec::with_capacity(self.segments.len() + 1);
        out.push((self.segments.first().map_or(0.0, |s| s.t0), self.start));
        out.extend(self.segments.iter().map(|s| (s.t1, s.end())));
        out
    }

    pub fn segment_at(&self, t: f64) -> Option<&Segment> {
        let fwd = self.segments.first().is_none_or(|s| s.t1 >= s.t0);
        let idx = self.segments.partition_point(|s| if fwd { s.t1 < t } else { s.t1 > t });
        self.segments.get(idx).filter(|s| s.contains(t))
    }

    /// Dense output by cubic Hermite interpolation.
    pub fn state_at(&self, t: f64) -> Option<CotangentState> {
        self.segment_at(t).map(|s| s.state_hermite(t))
    }
}

/// An integration that stopped early, with everything computed up to the
/// failure.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowFailure {
    pub error: Error,
    pub partial: FlowResult,
}

impl core::fmt::Display for FlowFailure {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{} after {} steps", self.error, self.partial.steps_accepted)
    }
}

fn axpy(y: &[f64; 4], h: f64, terms: &[(f64, &[f64; 4])]) -> [f64; 4] {
    core::array::from_fn(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

fn wrap_phi(phi: f64) -> f64 {
    let w = phi % TAU;
    if w < 0.0 { w + TAU } else { w }
}

/// Adaptive Dormand-Prince 5(4) integration of `X_{H,sigma}` in canonical
/// chart coordinates with chart switching.
#[derive(Clone, Copy, Debug)]
pub struct Stepper {
    pub h: Hamiltonian,
    pub sigma: MagneticForm,
    pub opts: IntegratorOptions,
    chart: Chart,
    t: f64,
    y: ChartCoords,
    f: [f64; 4],
    step: f64,
    energy0: f64,
    pub energy_drift: f64,
    pub accepted: usize,
    pub rejected: usize,
}

impl Stepper {
    pub fn new(
        h: Hamiltonian,
        sigma: MagneticForm,
        start: &CotangentState,
        t0: f64,
        opts: IntegratorOptions,
    ) -> Result<Self, Error> {
        if opts.tol.is_nan() || opts.tol <= 0.0 {
            return Err(Error::InvalidParameter("tol"));
        }
        let start = start.rechart();
        let chart = start.chart();
        let y = start.coords();
        let mut s = Self {
            h,
            sigma,
            opts,
            chart,
            t: t0,
            y,
            f: [0.0; 4],
            step: opts.h_init,
            energy0: h.value(&start),
            energy_drift: 0.0,
            accepted: 0,
            rejected: 0,
        };
        s.check_zero_section(&start)?;
        s.f = s.rhs(chart, &y)?;
        Ok(s)
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> CotangentState {
        CotangentState::from_chart(self.chart, &self.y)
    }

    pub fn energy0(&self) -> f64 {
        self.energy0
    }

    fn check_zero_section(&self, st: &CotangentState) -> Result<(), Error> {
        if self.h.singular_on_zero_section() && st.norm() < ZERO_SECTION {
            return Err(Error::ZeroSection { t: self.t });
        }
        Ok(())
    }

    fn rhs(&self, chart: Chart, y: &ChartCoords) -> Result<[f64; 4], Error> {
        Ok(chart_field(&self.h, &self.sigma, chart, y)?.x_dot)
    }

    /// Runs the seven stages from `(chart, y, f)` over `h`; returns the fifth
    /// order solution, its derivative and the embedded error estimate.
    fn dp_step(
        &self,
        chart: Chart,
        y: &ChartCoords,
        k1: &[f64; 4],
        h: f64,
    ) -> Result<(ChartCoords, [f64; 4], [f64; 4]), Error> {
        let k2 = self.rhs(chart, &axpy(y, h, &[(A21, k1)]))?;
        let k3 = self.rhs(chart, &axpy(y, h, &[(A31, k1), (A32, &k2)]))?;
        let k4 = self.rhs(chart, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
        let k5 = self.rhs(chart, &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
        let k6 = self.rhs(
            chart,
            &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        )?;
        let y1 = axpy(y, h, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = self.rhs(chart, &y1)?;
        let err = core::array::from_fn(|i| {
            h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
        });
        Ok((y1, k7, err))
    }

    fn error_norm(&self, y0: &ChartCoords, y1: &ChartCoords, err: &[f64; 4]) -> f64 {
        let tol = self.opts.tol;
        let sum: f64 = (0..4)
            .map(|i| {
                let sc = tol * (1.0 + fabs(y0[i]).max(fabs(y1[i])));
                let e = err[i] / sc;
                e * e
            })
            .sum();
        sqrt(sum / 4.0)
    }

    /// Whether the current point has left the chart's hysteresis band.
    fn should_switch(&self, q: &crate::Vec3) -> bool {
        let m = self.opts.switch_margin;
        let theta_a = Chart::A.colatitude(q);
        match self.chart {
            Chart::A => theta_a < FRAC_PI_8 - m || theta_a > 7.0 * FRAC_PI_8 + m,
            Chart::B => theta_a >= FRAC_PI_8 + m && theta_a <= 7.0 * FRAC_PI_8 - m,
        }
    }

    /// Takes one accepted step toward `t_end`, never past it.
    pub fn step_toward(&mut self, t_end: f64) -> Result<Segment, Error> {
        let dir = if t_end >= self.t { 1.0 } else { -1.0 };
        loop {
            let remaining = fabs(t_end - self.t);
            let mut h = self.step.min(self.opts.h_max).min(remaining);
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            if h < self.opts.h_min && !last {
                return Err(Error::StepUnderflow { t: self.t });
            }
            let hs = dir * h;
            let attempt = self.dp_step(self.chart, &self.y, &self.f, hs);
            let (y1, f1, en) = match attempt {
                Ok((y1, f1, err)) => {
                    let en = self.error_norm(&self.y, &y1, &err);
                    (y1, f1, en)
                }
                Err(Error::ChartDegenerate) | Err(Error::Singular) => (self.y, self.f, f64::INFINITY),
                Err(e) => return Err(e),
            };
            let valid = en.is_finite()
                && y1.iter().chain(f1.iter()).all(|v| v.is_finite())
                && fabs(sin(y1[0])) >= HARD_SIN_FLOOR;
            if !valid || en > 1.0 {
                self.rejected += 1;
                let fac = if valid { (0.9 * pow(en, -0.2)).clamp(0.1, 0.9) } else { 0.25 };
                self.step = h * fac;
                if self.step < self.opts.h_min {
                    return Err(Error::StepUnderflow { t: self.t });
                }
                continue;
            }
            let t1 = if last { t_end } else { self.t + hs };
            let seg = Segment {
                t0: self.t,
                t1,
                chart: self.chart,
                y0: self.y,
                y1,
                f0: self.f,
                f1,
            };
            self.accepted += 1;
            let fac = if en == 0.0 { 5.0 } else { (0.9 * pow(en, -0.2)).clamp(0.2, 5.0) };
            if !last || fac < 1.0 {
                self.step = h * fac;
            }
            self.t = t1;
            let mut y = y1;
            y[1] = wrap_phi(y[1]);
            let mut f = f1;
            let st = CotangentState::from_chart(self.chart, &y);
            self.energy_drift = self.energy_drift.max(fabs(self.h.value(&st) - self.energy0));
            if self.should_switch(&st.q()) {
                let other = st.in_chart(self.chart.other());
                self.chart = other.chart();
                y = other.coords();
                f = self.rhs(self.chart, &y)?;
            }
            self.y = y;
            self.f = f;
            self.check_zero_section(&st)?;
            return Ok(seg);
        }
    }

    /// Single fifth-order step from the start of `seg` to `t`, at the
    /// integrator's own accuracy (the accepted step size bounds `t - t0`).
    pub fn precise(&self, seg: &Segment, t: f64) -> Result<CotangentState, Error> {
        if t == seg.t0 {
            return Ok(seg.start());
        }
        if t == seg.t1 {
            return Ok(seg.end());
        }
        let (y, _, _) = self.dp_step(seg.chart, &seg.y0, &seg.f0, t - seg.t0)?;
        Ok(CotangentState::from_chart(seg.chart, &y))
    }
}

/// Integrates `X_{H,sigma}` from `start` for the signed duration `t`.
pub fn integrate(
    h: &Hamiltonian,
    sigma: &MagneticForm,
    start: &CotangentState,
    t: f64,
    opts: &IntegratorOptions,
) -> Result<FlowResult, FlowFailure> {
    let mut result = FlowResult {
        start: start.rechart(),
        segments: Vec::new(),
        steps_accepted: 0,
        steps_rejected: 0,
        energy0: h.value(start),
        energy_drift: 0.0,
        drift_flagged: false,
    };
    let mut stepper = match Stepper::new(*h, *sigma, start, 0.0, *opts) {
        Ok(s) => s,
        Err(error) => return Err(FlowFailure { error, partial: result }),
    };
    let finish = |result: &mut FlowResult, st: &Stepper| {
        result.steps_accepted = st.accepted;
        result.steps_rejected = st.rejected;
        result.energy_drift = st.energy_drift;
        result.drift_flagged = st.energy_drift > 10.0 * opts.tol;
    };
    while stepper.time() != t {
        if stepper.accepted >= opts.max_steps {
            finish(&mut result, &stepper);
            return Err(FlowFailure {
                error: Error::StepBudget { t: stepper.time() },
                partial: result,
            });
        }
        match stepper.step_toward(t) {
            Ok(seg) => {
                if opts.record || result.segments.is_empty() {
                    result.segments.push(seg);
                } else {
                    result.segments[0] = seg;
                }
            }
            Err(error) => {
                finish(&mut result, &stepper);
                return Err(FlowFailure { error, partial: result });
            }
        }
    }
    finish(&mut result, &stepper);
    Ok(result)
}

/// Flows `start` for time `t` and returns only the end point.
pub fn flow_to(
    h: &Hamiltonian,
    sigma: &MagneticForm,
    start: &CotangentState,
    t: f64,
    tol: f64,
) -> Result<CotangentState, Error> {
    let opts = IntegratorOptions {
        record: false,
        ..IntegratorOptions::with_tol(tol)
    };
    integrate(h, sigma, start, t, &opts)
        .map(|r| r.end())
        .map_err(|f| f.error)
}
