//! Periodic-orbit census on an energy level: Poincaré returns, Newton
//! shooting and deduplication.

mod orbit;
mod section;
mod shoot;

use alloc::vec::Vec;
use core::f64::consts::TAU;

use libm::{acos, fabs};

pub use orbit::{orbit_distance, point_orbit_distance, sample_orbit, OrbitRecord, SAMPLES_PER_PERIOD};
pub use section::{
    poincare_return, project_to_section, CrossingFinder, Direction, Level, ReturnSequence, Section, SectionCrossing,
    SectionKind, SectionSpec, CROSSING_TIME_TOL, DEFAULT_BUDGET, LEVEL_TOLERANCE, MIN_CROSSING_RATE,
};
pub use shoot::{return_near, shoot, ShootOptions, ShootOutcome, ShotOrbit};

use crate::dynamics::{flow_to, CotangentState};
use crate::katok::{conjugate_system, shift_to_conjugate, KatokParams};
use crate::sampling::{rng, Sobol2};
use crate::sphere::SpherePoint;
use crate::{Error, Vec3};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CensusOptions {
    pub seeds: usize,
    pub period_cap: f64,
    pub rng_seed: u64,
    /// Returns closer than this to the seed are shooting candidates.
    pub near_return: f64,
    /// Integrator tolerance of the seed scans.
    pub scan_tol: f64,
    pub shoot: ShootOptions,
    /// Orbits closer than this are the same orbit.
    pub dedupe: f64,
    /// Converged periods agreeing this well count as one common period.
    pub period_agreement: f64,
}

impl Default for CensusOptions {
    fn default() -> Self {
        Self {
            seeds: 256,
            period_cap: 100.0,
            rng_seed: 0,
            near_return: 0.05,
            scan_tol: 1e-10,
            shoot: ShootOptions::default(),
            dedupe: 1e-4,
            period_agreement: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CensusReport {
    pub energy: f64,
    pub period_cap: f64,
    pub seeds: usize,
    /// Distinct primitive orbits sorted by period.
    pub orbits: Vec<OrbitRecord>,
    /// Every seed closed up and all periods agree.
    pub totally_periodic: bool,
    pub candidates: usize,
    pub converged: usize,
    pub diverged: usize,
    /// Seeds whose orbits never crossed the section within the cap.
    pub lost_seeds: usize,
    pub seeds_closed: usize,
}

/// Seed points on `{p_theta = 0}`: area-uniform base points from a shifted
/// Sobol sequence, covector along `+-d/dphi` alternately, scaled onto the
/// level.
pub fn census_seeds(level: &Level, frame_axis: &Vec3, n: usize, rng_seed: u64) -> Result<Vec<CotangentState>, Error> {
    use rand::Rng;
    let mut r = rng(rng_seed);
    let shift: [f64; 2] = [r.random(), r.random()];
    let sobol = Sobol2::default();
    let axis = *frame_axis;
    let (e1, e2) = crate::katok::tangent_basis(&axis);
    let mut out = Vec::with_capacity(n);
    let mut index = 1u32;
    while out.len() < n {
        let p = sobol.point(index);
        index += 1;
        let u = wrap_unit(p[0] + shift[0]);
        let w = wrap_unit(p[1] + shift[1]);
        let theta = acos(1.0 - 2.0 * u);
        let phi = TAU * w;
        let (st, ct) = libm::sincos(theta);
        let (sp, cp) = libm::sincos(phi);
        let q = (e1 * cp + e2 * sp) * st + axis * ct;
        let rot = axis.cross(&q);
        if rot.norm() < 1e-3 {
            continue;
        }
        let sign = if out.len() % 2 == 0 { 1.0 } else { -1.0 };
        let q = SpherePoint::from_ambient(q)?.ambient();
        out.push(level.on_ray(&q, &(rot.normalize() * sign))?);
    }
    Ok(out)
}

fn wrap_unit(x: f64) -> f64 {
    x - libm::floor(x)
}

fn is_known(
    level: &Level,
    x: &CotangentState,
    orbits: &[OrbitRecord],
    dedupe: f64,
    tol: f64,
) -> Result<Option<usize>, Error> {
    for (i, o) in orbits.iter().enumerate() {
        if point_orbit_distance(level, x, &o.samples, o.period, 0.05, tol)? < dedupe {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

/// Reduces a converged orbit to its primitive period and measures its
/// closure with an independent integration.
fn finish_record(spec: &SectionSpec, shot: &ShotOrbit, cap: f64, tol: f64) -> Result<OrbitRecord, Error> {
    let level = &spec.level;
    let sub = spec.with_section(shot.section);
    let mut period = shot.period;
    let mut finder = CrossingFinder::new(&sub, &shot.state, 0.99 * shot.period, tol)?;
    while let Some(c) = finder.next_crossing()? {
        if c.state.distance(&shot.state) < 1e-6 {
            period = c.time;
            break;
        }
    }
    let end = flow_to(&level.h, &level.sigma, &shot.state, period, tol)?;
    let samples = sample_orbit(level, &shot.state, period, SAMPLES_PER_PERIOD, tol)?;
    Ok(OrbitRecord {
        representative: shot.state,
        period,
        energy: level.h.value(&shot.state),
        closure_defect: end.distance(&shot.state),
        multiplicity_checked: cap,
        section: shot.section,
        samples,
    })
}

fn insert_distinct(level: &Level, orbits: &mut Vec<OrbitRecord>, record: OrbitRecord, opts: &CensusOptions) -> Result<(), Error> {
    for o in orbits.iter_mut() {
        if fabs(o.period - record.period) > 1e-3 * o.period.max(record.period) {
            continue;
        }
        if orbit_distance(level, o, &record, 0.05, opts.shoot.tol)? < opts.dedupe {
            if record.closure_defect < o.closure_defect {
                *o = record;
            }
            return Ok(());
        }
    }
    orbits.push(record);
    Ok(())
}

/// Runs the census: scan each seed's returns to the section and to the
/// azimuthal half-plane up to the period cap, shoot from every near-return that is a local minimum of the return distance,
/// keep distinct primitive orbits.
pub fn census(spec: &SectionSpec, opts: &CensusOptions) -> Result<CensusReport, Error> {
    if !(opts.period_cap > 0.0) || opts.seeds == 0 {
        return Err(Error::InvalidParameter("census needs seeds and a positive period cap"));
    }
    let level = spec.level;
    let seeds = census_seeds(&level, &spec.section.frame.axis(), opts.seeds, opts.rng_seed)?;
    let mut orbits: Vec<OrbitRecord> = Vec::new();
    let (mut candidates, mut converged, mut diverged, mut lost, mut closed) = (0, 0, 0, 0, 0);
    let mut periods: Vec<f64> = Vec::new();
    let mut sections = alloc::vec![*spec];
    if spec.section.kind != SectionKind::Azimuth {
        sections.push(spec.with_section(Section {
            frame: spec.section.frame,
            ..Section::secondary()
        }));
    }
    for seed in &seeds {
        let mut seed_closed = false;
        let mut seen = false;
        for sec in &sections {
            let mut finder = CrossingFinder::new(sec, seed, DEFAULT_BUDGET, opts.scan_tol)?;
            let Some(first) = finder.next_crossing()? else {
                continue;
            };
            seen = true;
            // Returns are compared in the direction of the first crossing.
            let sec = sec.with_section(sec.section.with_direction(Direction::of_rate(first.rate)));
            let x0 = first.state;
            let mut scan = CrossingFinder::new(&sec, &x0, opts.period_cap, opts.scan_tol)?;
            let mut returns: Vec<(f64, f64)> = Vec::new();
            while let Some(c) = scan.next_crossing()? {
                returns.push((c.time, c.state.distance(&x0)));
            }
            for j in 0..returns.len() {
                let d = returns[j].1;
                let prev = if j > 0 { returns[j - 1].1 } else { f64::INFINITY };
                let next = returns.get(j + 1).map_or(f64::INFINITY, |r| r.1);
                if !(d < opts.near_return && d <= prev && d <= next) {
                    continue;
                }
                candidates += 1;
                if let Some(i) = is_known(&level, &x0, &orbits, opts.dedupe, opts.shoot.tol)? {
                    let ratio = returns[j].0 / orbits[i].period;
                    if fabs(ratio - libm::round(ratio)) < 1e-3 {
                        seed_closed = true;
                        periods.push(orbits[i].period);
                        break;
                    }
                }
                match shoot(&sec, &x0, returns[j].0, &opts.shoot)? {
                    ShootOutcome::Converged(shot) => {
                        converged += 1;
                        let record = finish_record(spec, &shot, opts.period_cap, opts.shoot.tol)?;
                        seed_closed = true;
                        periods.push(record.period);
                        insert_distinct(&level, &mut orbits, record, opts)?;
                        break;
                    }
                    ShootOutcome::Diverged { .. } => diverged += 1,
                }
            }
            if seed_closed {
                break;
            }
        }
        if !seen {
            lost += 1;
        }
        if seed_closed {
            closed += 1;
        }
    }
    orbits.sort_by(|a, b| a.period.total_cmp(&b.period));
    let totally_periodic = closed == seeds.len()
        && !periods.is_empty()
        && periods.iter().all(|p| fabs(p - periods[0]) < opts.period_agreement);
    Ok(CensusReport {
        energy: level.energy,
        period_cap: opts.period_cap,
        seeds: seeds.len(),
        orbits,
        totally_periodic,
        candidates,
        converged,
        diverged,
        lost_seeds: lost,
        seeds_closed: closed,
    })
}

/// Level, primary section and frame for the magnetic Katok system at `k`.
pub fn katok_spec(params: &KatokParams) -> SectionSpec {
    let (h, sigma) = crate::katok::magnetic_system(params);
    SectionSpec::new(Level::new(h, sigma, params.k), Section::primary())
}

/// Period of the orbit through `x` of the magnetic Katok system, measured in
/// the time of `H_{s,alpha}` after the shift `p -> p - eta`: the first
/// return to the hyperplane through the shifted point.
pub fn katok_conjugate_period(params: &KatokParams, x: &CotangentState, magnetic_period: f64, tol: f64) -> Result<f64, Error> {
    let (hk, sk) = conjugate_system(params.s, params.alpha);
    let y = shift_to_conjugate(params, x);
    let level = Level::new(hk, sk, hk.value(&y));
    let dk = hk.ray_derivative(&y.q(), &y.p(), &x.p());
    let guess = magnetic_period * 2.0 * params.k / dk;
    let spec = SectionSpec::new(level, Section::hyperplane_through(&level, &y)?);
    match return_near(&spec, &y, guess, tol)? {
        Some((_, t)) => Ok(t),
        None => Err(Error::NoCrossing { budget: 1.5 * guess }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{Hamiltonian, MagneticForm};
    use crate::katok::{closed_flow, equatorial_orbits, GOLDEN_FRACTION};

    fn round_spec(s: f64, k: f64) -> SectionSpec {
        SectionSpec::new(
            Level::new(Hamiltonian::round_kinetic(), MagneticForm::constant(s), k),
            Section::primary(),
        )
    }

    fn golden_params(s: f64) -> KatokParams {
        KatokParams::new(s, 0.125f64.powi(2) * GOLDEN_FRACTION, 0.125).unwrap()
    }

    #[test]
    fn round_magnetic_first_return() {
        for (s, k) in [(1.0, 0.125), (0.3, 0.5), (2.0, 0.02)] {
            let spec = round_spec(s, k);
            let seeds = census_seeds(&spec.level, &Vec3::z(), 6, 3).unwrap();
            let expected = TAU / libm::sqrt(2.0 * k + s * s);
            for x in &seeds {
                let r = poincare_return(&spec, x, 3, DEFAULT_BUDGET, 1e-12).unwrap();
                let c = &r.crossings;
                assert!((c[2].time - c[1].time - expected).abs() < 1e-7);
                assert!((c[1].time - c[0].time - expected).abs() < 1e-7);
                assert!(c[1].state.distance(&c[0].state) < 1e-8);
            }
        }
    }

    #[test]
    fn equator_on_the_half_plane() {
        let spec = round_spec(0.0, 0.5).with_section(Section::secondary());
        let x = CotangentState::from_ambient(Vec3::y(), -Vec3::x()).unwrap();
        let r = poincare_return(&spec, &x, 2, DEFAULT_BUDGET, 1e-12).unwrap();
        assert!((r.crossings[0].time - TAU * 0.75).abs() < 1e-9);
        assert!((r.crossings[1].time - r.crossings[0].time - TAU).abs() < 1e-9);
        assert!(r.crossings[0].state.distance(&CotangentState::from_ambient(Vec3::x(), Vec3::y()).unwrap()) < 1e-9);
        assert!((r.crossings[0].transversality - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
    }

    #[test]
    fn crossings_follow_the_closed_form() {
        for s in [0.0, 1.0] {
            let (h, sigma) = conjugate_system(s, 0.2);
            let level_of = |x: &CotangentState| Level::new(h, sigma, h.value(x));
            let x = crate::psi::psi_forward(
                s,
                &CotangentState::from_ambient(Vec3::new(0.6, 0.0, 0.8), Vec3::new(0.4, 1.0, -0.3)).unwrap(),
            )
            .unwrap();
            let spec = SectionSpec::new(level_of(&x), Section::secondary());
            let r = poincare_return(&spec, &x, 4, DEFAULT_BUDGET, 1e-12).unwrap();
            for c in &r.crossings {
                let exact = closed_flow(s, 0.2, &x, c.time).unwrap();
                assert!(exact.distance(&c.state) < 1e-8, "s={s} t={}", c.time);
                assert!(spec.section.value_at(&exact).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn return_preconditions() {
        let spec = round_spec(0.0, 0.5);
        let x = CotangentState::from_ambient(Vec3::x(), Vec3::y()).unwrap();
        let off = CotangentState::from_ambient(Vec3::x(), Vec3::y() * 1.1).unwrap();
        assert!(matches!(poincare_return(&spec, &off, 1, 10.0, 1e-10), Err(Error::OffLevel { .. })));
        // The equator keeps p_theta = 0 and never crosses the primary section.
        assert!(matches!(poincare_return(&spec, &x, 1, 20.0, 1e-10), Err(Error::NoCrossing { .. })));
    }

    #[test]
    fn projection_lands_on_section_and_level() {
        let spec = round_spec(0.7, 0.3);
        let x = CotangentState::from_ambient(Vec3::new(0.3, 0.4, 0.866), Vec3::new(0.2, -0.5, 0.1)).unwrap();
        let y = project_to_section(&spec, x.chart(), &x.coords()).unwrap();
        let st = CotangentState::from_chart(x.chart(), &y);
        assert!(spec.section.value_at(&st).abs() < 1e-13);
        assert!(spec.level.defect(&st) < 1e-13);
    }

    #[test]
    fn shooting_converges_to_the_axis_orbits() {
        for s in [0.0, 1.0] {
            let p = golden_params(s);
            let spec = katok_spec(&p);
            for eq in equatorial_orbits(&p).unwrap() {
                let x = eq.magnetic_state;
                let q = (x.q() + Vec3::z() * 0.03).normalize();
                let dir = (x.p() - q * q.dot(&x.p())).normalize();
                let start = spec.level.on_ray(&q, &dir).unwrap();
                let ShootOutcome::Converged(shot) = shoot(&spec, &start, eq.magnetic_period, &ShootOptions::default()).unwrap()
                else {
                    panic!("no convergence for s={s}");
                };
                assert_eq!(shot.section.kind, SectionKind::Azimuth);
                assert!((shot.period - eq.magnetic_period).abs() < 1e-8);
                let t = katok_conjugate_period(&p, &shot.state, shot.period, 1e-12).unwrap();
                assert!((t - eq.conjugate_period).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn twist_orbits_do_not_converge() {
        let p = golden_params(0.0);
        let spec = katok_spec(&p);
        // A great circle through the poles precesses without closing.
        let x = spec.level.on_ray(&Vec3::new(0.6, 0.0, 0.8), &Vec3::y()).unwrap();
        let out = shoot(&spec, &x, 12.6, &ShootOptions::default()).unwrap();
        assert!(matches!(out, ShootOutcome::Diverged { .. }));
    }

    #[test]
    fn round_census_is_totally_periodic() {
        let spec = round_spec(1.0, 0.125);
        let r = census(&spec, &CensusOptions { seeds: 12, ..Default::default() }).unwrap();
        assert!(r.totally_periodic);
        assert_eq!(r.seeds_closed, 12);
        for o in &r.orbits {
            assert!((o.period - TAU / libm::sqrt(1.25)).abs() < 1e-7);
            assert!(o.closure_defect < 1e-8);
        }
    }

    #[test]
    fn census_is_deterministic() {
        let spec = katok_spec(&golden_params(1.0));
        let opts = CensusOptions { seeds: 24, ..Default::default() };
        let a = census(&spec, &opts).unwrap();
        let b = census(&spec, &opts).unwrap();
        assert_eq!(a, b);
        assert!(!a.totally_periodic);
    }

    #[test]
    fn seeds_sit_on_the_primary_section() {
        let spec = katok_spec(&golden_params(1.0));
        let seeds = census_seeds(&spec.level, &Vec3::z(), 40, 9).unwrap();
        let mut signs = 0.0;
        for x in &seeds {
            assert!(spec.level.defect(x) < 1e-12);
            assert!(spec.section.value_at(x).abs() < 1e-14);
            signs += x.p().dot(&Vec3::z().cross(&x.q())).signum();
        }
        assert_eq!(signs, 0.0);
        assert_ne!(seeds, census_seeds(&spec.level, &Vec3::z(), 40, 10).unwrap());
    }
}
