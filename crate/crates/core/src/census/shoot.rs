use core::f64::consts::{PI, TAU};

use libm::{fabs, sqrt};

use super::section::{CrossingFinder, Direction, Section, SectionSpec, project_to_section};
use crate::dynamics::{ChartCoords, ChartJacobian, CotangentState};
use crate::sphere::Chart;
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShootOptions {
    /// Integrator tolerance used for every return.
    pub tol: f64,
    pub max_iter: usize,
    /// Forward-difference step of the return-map Jacobian.
    pub fd_step: f64,
    /// Converged once the start and its return are this close.
    pub converge: f64,
    /// Below this normalised transversality the secondary section is used.
    pub min_transversality: f64,
    /// Largest Newton step in section coordinates.
    pub max_step: f64,
    /// Iterations without residual decrease before giving up.
    pub stall_limit: usize,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 50,
            fd_step: 1e-6,
            converge: 1e-10,
            min_transversality: 0.1,
            max_step: 0.2,
            stall_limit: 6,
        }
    }
}

/// A periodic orbit found by shooting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShotOrbit {
    pub state: CotangentState,
    pub period: f64,
    /// Distance between the start and its return at the last iterate.
    pub displacement: f64,
    pub iterations: usize,
    /// The section the orbit was closed on.
    pub section: Section,
    /// A singular Jacobian forced damped steps at some iteration.
    pub singular: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ShootOutcome {
    Converged(ShotOrbit),
    Diverged { iterations: usize, residual: f64, singular: bool },
}

/// Local coordinates on `{S = 0, H = E}` around a base point: the plane
/// through `y*` spanned by an orthonormal pair orthogonal to both gradients,
/// projected back along the gradients.
struct SectionChart {
    chart: Chart,
    base: ChartCoords,
    basis: [[f64; 4]; 2],
}

fn dot4(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    (0..4).map(|i| a[i] * b[i]).sum()
}

impl SectionChart {
    fn new(spec: &SectionSpec, x: &CotangentState) -> Result<Self, Error> {
        let chart = x.chart();
        let base = x.coords();
        let jac = ChartJacobian::new(chart, &base);
        let gs = spec.section.chart_gradient(&jac);
        let (_, gh) = spec.level.h.chart_partials_with(&jac);
        // Gram-Schmidt on the gradients, then on the unit vectors.
        let mut span: [[f64; 4]; 2] = [[0.0; 4]; 2];
        for (n, g) in [gs, gh].into_iter().enumerate() {
            let mut w = g;
            for e in span.iter().take(n) {
                let c = dot4(&w, e);
                for i in 0..4 {
                    w[i] -= c * e[i];
                }
            }
            let len = sqrt(dot4(&w, &w));
            if len < 1e-12 {
                return Err(Error::Singular);
            }
            span[n] = w.map(|c| c / len);
        }
        let mut basis = [[0.0; 4]; 2];
        let mut found = 0;
        for k in 0..4 {
            if found == 2 {
                break;
            }
            let mut w = [0.0; 4];
            w[k] = 1.0;
            for e in span.iter().chain(basis.iter().take(found)) {
                let c = dot4(&w, e);
                for i in 0..4 {
                    w[i] -= c * e[i];
                }
            }
            let len = sqrt(dot4(&w, &w));
            if len > 0.3 {
                basis[found] = w.map(|c| c / len);
                found += 1;
            }
        }
        if found < 2 {
            return Err(Error::Singular);
        }
        Ok(Self { chart, base, basis })
    }

    fn state(&self, spec: &SectionSpec, xi: [f64; 2]) -> Result<CotangentState, Error> {
        let y: ChartCoords = core::array::from_fn(|i| self.base[i] + xi[0] * self.basis[0][i] + xi[1] * self.basis[1][i]);
        let y = project_to_section(spec, self.chart, &y)?;
        Ok(CotangentState::from_chart(self.chart, &y))
    }

    fn coords(&self, x: &CotangentState) -> [f64; 2] {
        let mut y = x.in_chart(self.chart).coords();
        let mut d = y[1] - self.base[1];
        d -= TAU * libm::round(d / TAU);
        if fabs(d) > PI {
            d = d.signum() * PI;
        }
        y[1] = self.base[1] + d;
        let diff: [f64; 4] = core::array::from_fn(|i| y[i] - self.base[i]);
        [dot4(&diff, &self.basis[0]), dot4(&diff, &self.basis[1])]
    }
}

/// Crossing of the section closest in time to `guess` within
/// `[guess / 2, 3 guess / 2]`.
pub fn return_near(
    spec: &SectionSpec,
    x: &CotangentState,
    guess: f64,
    tol: f64,
) -> Result<Option<(CotangentState, f64)>, Error> {
    let mut finder = CrossingFinder::new(spec, x, 1.5 * guess, tol)?;
    let mut best: Option<(CotangentState, f64)> = None;
    while let Some(c) = finder.next_crossing()? {
        if c.time < 0.5 * guess {
            continue;
        }
        let better = match best {
            Some((_, t)) => fabs(c.time - guess) < fabs(t - guess),
            None => true,
        };
        if better {
            best = Some((c.state, c.time));
        }
    }
    Ok(best)
}

/// First crossing of the secondary section after `x`, with its direction.
fn to_secondary(spec: &SectionSpec, x: &CotangentState, horizon: f64, tol: f64) -> Result<Option<(SectionSpec, CotangentState)>, Error> {
    let base = Section {
        frame: spec.section.frame,
        ..Section::secondary()
    };
    let sec = spec.with_section(base);
    let mut finder = CrossingFinder::new(&sec, x, horizon, tol)?;
    match finder.next_crossing()? {
        Some(c) => Ok(Some((spec.with_section(base.with_direction(Direction::of_rate(c.rate))), c.state))),
        None => Ok(None),
    }
}

/// Section coordinates of the return, its time, the start and the return.
type Evaluated = ([f64; 2], f64, CotangentState, CotangentState);

/// Newton shooting for a periodic orbit near `x0` with period near
/// `period_guess`, on the section of `spec` or, where that is nearly
/// tangent to the flow, on the azimuthal half-plane.
pub fn shoot(
    spec: &SectionSpec,
    x0: &CotangentState,
    period_guess: f64,
    opts: &ShootOptions,
) -> Result<ShootOutcome, Error> {
    if !(period_guess > 0.0) {
        return Err(Error::InvalidParameter("period guess must be positive"));
    }
    let diverged = |iterations, residual, singular| Ok(ShootOutcome::Diverged { iterations, residual, singular });
    let mut spec = *spec;
    let mut x = *x0;
    let transverse = spec.section.rate(&spec.level, &x).map(|r| r.1).unwrap_or(0.0);
    if transverse >= opts.min_transversality {
        // The start is on the section already; snap it exactly.
        let y = project_to_section(&spec, x.chart(), &x.coords())?;
        x = CotangentState::from_chart(x.chart(), &y);
    } else if spec.section.kind != super::section::SectionKind::Azimuth {
        match to_secondary(&spec, &x, 1.5 * period_guess, opts.tol)? {
            Some((sec, st)) => {
                spec = sec;
                x = st;
            }
            None => return diverged(0, f64::INFINITY, false),
        }
    }
    let chart = SectionChart::new(&spec, &x)?;
    let eval = |xi: [f64; 2]| -> Result<Option<Evaluated>, Error> {
        let start = chart.state(&spec, xi)?;
        Ok(return_near(&spec, &start, period_guess, opts.tol)?.map(|(end, t)| {
            let out = chart.coords(&end);
            let inn = chart.coords(&start);
            ([out[0] - inn[0], out[1] - inn[1]], t, start, end)
        }))
    };
    let mut xi = [0.0, 0.0];
    let Some(mut cur) = eval(xi)? else {
        return diverged(0, f64::INFINITY, false);
    };
    let norm2 = |f: &[f64; 2]| sqrt(f[0] * f[0] + f[1] * f[1]);
    let mut singular = false;
    let mut stall = 0;
    for iter in 0..=opts.max_iter {
        let displacement = cur.2.distance(&cur.3);
        if displacement < opts.converge {
            return Ok(ShootOutcome::Converged(ShotOrbit {
                state: cur.2,
                period: cur.1,
                displacement,
                iterations: iter,
                section: spec.section,
                singular,
            }));
        }
        if iter == opts.max_iter {
            break;
        }
        let f = cur.0;
        let mut jac = [[0.0; 2]; 2];
        for k in 0..2 {
            let mut probe = xi;
            probe[k] += opts.fd_step;
            let Some(p) = eval(probe)? else {
                return diverged(iter, norm2(&f), singular);
            };
            for i in 0..2 {
                jac[i][k] = (p.0[i] - f[i]) / opts.fd_step;
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let scale = jac.iter().flatten().map(|v| v * v).sum::<f64>();
        let mut step = if fabs(det) > 1e-10 * scale && scale > 0.0 {
            [
                -(jac[1][1] * f[0] - jac[0][1] * f[1]) / det,
                -(jac[0][0] * f[1] - jac[1][0] * f[0]) / det,
            ]
        } else {
            // Damped fixed-point iteration towards the returned point.
            singular = true;
            [0.5 * f[0], 0.5 * f[1]]
        };
        let len = norm2(&step);
        if len > opts.max_step {
            step = step.map(|c| c * opts.max_step / len);
        }
        let r0 = norm2(&f);
        let mut accepted = None;
        let mut lambda = 1.0;
        for _ in 0..6 {
            let trial = [xi[0] + lambda * step[0], xi[1] + lambda * step[1]];
            if let Some(next) = eval(trial)? {
                if norm2(&next.0) < r0 {
                    accepted = Some((trial, next));
                    break;
                }
                if accepted.is_none() {
                    accepted = Some((trial, next));
                }
            }
            lambda *= 0.5;
        }
        let Some((trial, next)) = accepted else {
            return diverged(iter + 1, r0, singular);
        };
        if norm2(&next.0) < 0.9 * r0 {
            stall = 0;
        } else {
            stall += 1;
            if stall >= opts.stall_limit {
                return diverged(iter + 1, norm2(&next.0), singular);
            }
        }
        xi = trial;
        cur = next;
        if norm2(&xi) > 1.0 {
            return diverged(iter + 1, norm2(&cur.0), singular);
        }
    }
    diverged(opts.max_iter, norm2(&cur.0), singular)
}
