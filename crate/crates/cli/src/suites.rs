//! The verification suites behind each subcommand.

use std::f64::consts::TAU;

use clap::ValueEnum;
use serde_json::{json, Value};

use katok_core::census::{census, katok_conjugate_period, katok_spec, CensusOptions, Level};
use katok_core::dynamics::{flow_to, integrate, IntegratorOptions};
use katok_core::ellipsoid::{non_axis_scan, reeb_flow, reeb_periodic_orbits, EllipsoidState};
use katok_core::katok::{
    appendix_validate, closed_flow, conjugate_system, convergence_report, equatorial_orbits, kinetic_radius_defect,
    level_identity_defect, magnetic_system, omega_s, r_s, vertical_hessian_defect, w_convexity_scan,
    w_level_identity_defect, AlphaRule,
};
use katok_core::psi::{equivariance_defect, omega_pullback_defect, psi_forward, psi_forward_composed, psi_inverse, pullback_defect};
use katok_core::sampling::{random_rotation, random_state, random_unit, random_unit_tangent, rng};
use katok_core::sphere::ChartFrame;
use katok_core::{Chart, CotangentState, Error, Hamiltonian, KatokParams, MagneticForm, SequenceSpec, WParams};

use crate::config::{Command, RunConfig, SystemKind};
use crate::report::{num, Check, Report, Table};

/// Failure of a suite before any gate could be evaluated.
#[derive(Debug, thiserror::Error)]
pub enum SuiteError {
    #[error("invalid parameters: {0}")]
    Parameters(Error),
    #[error("numerical failure: {0}")]
    Numerical(Error),
}

fn params(cfg: &RunConfig) -> Result<KatokParams, SuiteError> {
    KatokParams::new(cfg.s, cfg.alpha, cfg.k).map_err(SuiteError::Parameters)
}

fn numerical<T>(r: Result<T, Error>) -> Result<T, SuiteError> {
    r.map_err(SuiteError::Numerical)
}

pub fn run(cfg: &RunConfig) -> Result<Report, SuiteError> {
    match cfg.command {
        Command::VerifyPsi => verify_psi(cfg),
        Command::Simulate => simulate(cfg),
        Command::KatokVerify => katok_verify(cfg),
        Command::Orbits => orbits(cfg),
        Command::Converge => converge(cfg),
        Command::Ellipsoid => ellipsoid(cfg),
        Command::WFamily => w_family(cfg),
    }
}

fn verify_psi(cfg: &RunConfig) -> Result<Report, SuiteError> {
    let s = cfg.s;
    let gate = |default: f64| cfg.tol.unwrap_or(default);
    let mut r = rng(cfg.rng_seed);
    let (mut lam, mut om, mut conj, mut equi, mut comp, mut inv) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..cfg.seeds {
        let x = random_state(&mut r, s + 0.1, s + 5.0);
        lam = lam.max(numerical(pullback_defect(s, &x, 2, &mut r))?);
        om = om.max(numerical(omega_pullback_defect(s, &x, 2, &mut r))?);
        let y = numerical(psi_forward(s, &x))?;
        conj = conj.max((r_s(s, &y) - r_s(0.0, &x)).abs()).max((omega_s(s, &y) - omega_s(0.0, &x)).abs());
        comp = comp.max(y.distance(&numerical(psi_forward_composed(s, &x))?));
        inv = inv.max(x.distance(&numerical(psi_inverse(s, &y))?));
        equi = equi.max(numerical(equivariance_defect(s, &random_rotation(&mut r), &x))?);
    }
    let mut rep = Report::new("verify-psi");
    rep.param("s", s);
    rep.param("samples", cfg.seeds);
    rep.param("rng_seed", cfg.rng_seed);
    rep.check(Check::below("lambda_pullback_defect", lam, gate(1e-6)));
    rep.check(Check::below("omega_pullback_defect", om, gate(1e-5)));
    rep.check(Check::below("conjugacy_defect", conj, gate(1e-10)));
    rep.check(Check::below("equivariance_defect", equi, gate(1e-10)));
    rep.check(Check::below("composition_defect", comp, gate(1e-10)));
    rep.check(Check::below("inverse_defect", inv, gate(1e-10)));
    Ok(rep)
}

fn simulate(cfg: &RunConfig) -> Result<Report, SuiteError> {
    let tol = cfg.tol.unwrap_or(1e-10);
    let (h, sigma, energy) = match cfg.system {
        SystemKind::Round => (Hamiltonian::round_kinetic(), MagneticForm::constant(cfg.s), cfg.k),
        SystemKind::Katok => {
            let p = params(cfg)?;
            let (h, sigma) = magnetic_system(&p);
            (h, sigma, p.k)
        }
        SystemKind::KatokH => {
            let p = params(cfg)?;
            let (h, sigma) = conjugate_system(p.s, p.alpha);
            (h, sigma, p.c())
        }
    };
    let f = ChartFrame::new(Chart::A, cfg.theta0, cfg.phi0);
    let q = f.q;
    let dir = f.e_phi.normalize() * cfg.heading.cos() + f.e_theta * cfg.heading.sin();
    let level = Level::new(h, sigma, energy);
    let start = numerical(level.on_ray(&q, &dir))?;
    let opts = IntegratorOptions::with_tol(tol);
    let flow = integrate(&h, &sigma, &start, cfg.t_end, &opts).map_err(|f| SuiteError::Numerical(f.error))?;
    let mut table = Table::new(&["t", "theta", "phi", "p_theta", "p_phi", "chart", "energy"]);
    let mut push = |t: f64, x: &CotangentState| {
        let y = x.coords();
        let chart = match x.chart() {
            Chart::A => "A",
            Chart::B => "B",
        };
        let mut row: Vec<String> = std::iter::once(t).chain(y).map(num).collect();
        row.insert(5, chart.to_string());
        row.push(num(h.value(x)));
        table.push(row);
    };
    push(0.0, &flow.start);
    let mut drift = 0.0f64;
    for seg in &flow.segments {
        let x = seg.end();
        drift = drift.max((h.value(&x) - energy).abs());
        push(seg.t1, &x);
    }
    let mut rep = Report::new("simulate");
    rep.param("system", cfg.system.to_possible_value().map(|v| v.get_name().to_string()));
    rep.param("s", cfg.s);
    rep.param("alpha", cfg.alpha);
    rep.param("k", cfg.k);
    rep.param("tol", tol);
    rep.param("t_end", cfg.t_end);
    rep.param("steps", flow.steps_accepted);
    rep.check(Check::below("energy_drift", drift, 10.0 * tol));
    rep.table = Some(table);
    Ok(rep)
}

fn katok_verify(cfg: &RunConfig) -> Result<Report, SuiteError> {
    let p = params(cfg)?;
    let tol = cfg.tol.unwrap_or(1e-12);
    let mut r = rng(cfg.rng_seed);
    let (mut conj, mut lev, mut rad, mut rhs) = (0.0f64, 0.0f64, 0.0f64, f64::INFINITY);
    for _ in 0..cfg.seeds {
        let x = random_state(&mut r, p.s + 1e-3, p.s + 5.0);
        let y = numerical(psi_forward(p.s, &x))?;
        conj = conj.max((r_s(p.s, &y) - r_s(0.0, &x)).abs()).max((omega_s(p.s, &y) - omega_s(0.0, &x)).abs());
        let z = random_state(&mut r, 0.05, 5.0);
        let li = numerical(level_identity_defect(&p, &z))?;
        lev = lev.max(li.defect);
        rhs = rhs.min(li.rhs);
        let q = random_unit(&mut r);
        rad = rad.max(numerical(kinetic_radius_defect(&p, &q, &random_unit_tangent(&mut r, &q)))?);
    }
    let app = numerical(appendix_validate(&p, 512, 1024, 8))?;
    let (h, sigma) = conjugate_system(p.s, p.alpha);
    let mut flow_err = 0.0f64;
    for _ in 0..4 {
        let x = random_state(&mut r, 0.2, 2.0);
        let mut cur = x;
        for i in 1..=20 {
            cur = numerical(flow_to(&h, &sigma, &cur, 0.5, tol))?;
            flow_err = flow_err.max(cur.distance(&numerical(closed_flow(p.s, p.alpha, &x, 0.5 * i as f64))?));
        }
    }
    let (hm, sm) = magnetic_system(&p);
    let mut closure = 0.0f64;
    for eq in numerical(equatorial_orbits(&p))? {
        let end = numerical(flow_to(&hm, &sm, &eq.magnetic_state, eq.magnetic_period, tol))?;
        closure = closure.max(end.distance(&eq.magnetic_state));
    }
    let mut rep = Report::new("katok-verify");
    rep.param("s", p.s);
    rep.param("alpha", p.alpha);
    rep.param("k", p.k);
    rep.param("c", p.c());
    rep.param("samples", cfg.seeds);
    rep.param("rng_seed", cfg.rng_seed);
    rep.param("appendix_grid", "512x1024x8");
    rep.check(Check::below("conjugacy_defect", conj, 1e-10));
    rep.check(Check::below("level_identity_defect", lev, 1e-9));
    rep.check(Check::above("level_identity_min_rhs", rhs, 0.0));
    rep.check(Check::below("kinetic_radius_defect", rad, 1e-9));
    rep.check(Check::above("appendix_min_y2", app.min_y2, 0.0));
    rep.check(Check::above("appendix_min_chain_slack", app.min_chain_slack, 0.0));
    rep.check(Check::above("appendix_min_aux", app.min_aux, 0.0));
    rep.check(Check::below("appendix_max_y1", app.max_y1, 1e-9));
    rep.check(Check::below("appendix_quad_residual", app.max_quad_residual, 1e-9));
    rep.check(Check::below("appendix_root_defect", app.max_root_defect, 1e-9));
    rep.check(Check::above("appendix_min_rhs_margin", app.min_rhs_margin, 0.0));
    rep.check(Check::below("closed_flow_error", flow_err, 1e-6));
    rep.check(Check::below("axis_orbit_closure", closure, 1e-8));
    Ok(rep)
}

fn orbits(cfg: &RunConfig) -> Result<Report, SuiteError> {
    let p = params(cfg)?;
    let spec = katok_spec(&p);
    let mut opts = CensusOptions {
        seeds: cfg.seeds,
        period_cap: cfg.period_cap,
        rng_seed: cfg.rng_seed,
        ..Default::default()
    };
    if let Some(t) = cfg.tol {
        opts.shoot.tol = t;
    }
    let result = numerical(census(&spec, &opts))?;
    let mut records = Vec::new();
    let mut worst_closure = 0.0f64;
    for o in &result.orbits {
        worst_closure = worst_closure.max(o.closure_defect);
        let conj = numerical(katok_conjugate_period(&p, &o.representative, o.period, opts.shoot.tol))?;
        let (q, v) = (o.representative.q(), o.representative.p());
        records.push(json!({
            "period": o.period,
            "conjugate_period": conj,
            "energy": o.energy,
            "closure_defect": o.closure_defect,
            "representative": { "q": [q.x, q.y, q.z], "p": [v.x, v.y, v.z] },
        }));
    }
    let mut rep = Report::new("orbits");
    rep.param("s", p.s);
    rep.param("alpha", p.alpha);
    rep.param("k", p.k);
    rep.param("rng_seed", cfg.rng_seed);
    rep.check(Check::below("max_closure_defect", worst_closure, 1e-8));
    if p.alpha > 0.0 {
        rep.check(Check::new("orbit_count", result.orbits.len() as f64, crate::report::Relation::Equals, 2.0));
    } else {
        rep.check(Check::holds("totally_periodic", result.totally_periodic));
    }
    rep.body.insert(
        "system".into(),
        json!({ "kind": "magnetic-katok", "s": p.s, "alpha": p.alpha, "k": p.k }),
    );
    rep.body.insert("energy".into(), json!(result.energy));
    rep.body.insert("period_cap".into(), json!(result.period_cap));
    rep.body.insert("seeds".into(), json!(result.seeds));
    rep.body.insert("orbits".into(), Value::Array(records));
    rep.body.insert("totally_periodic".into(), json!(result.totally_periodic));
    Ok(rep)
}

fn converge(cfg: &RunConfig) -> Result<Report, SuiteError> {
    let spec = SequenceSpec {
        s: cfg.s,
        rule: AlphaRule::GoldenSquare,
    };
    let rows = convergence_report(&spec, cfg.n, 33, 16).map_err(SuiteError::Parameters)?;
    let mut table = Table::new(&["n", "k", "alpha", "sup_metric", "sup_potential", "ratio", "r_equator"]);
    for r in &rows {
        table.push(vec![
            r.n.to_string(),
            num(r.k),
            num(r.alpha),
            num(r.sup_metric),
            num(r.sup_potential),
            num(r.ratio),
            num(r.r_equator),
        ]);
    }
    let tail: Vec<_> = rows.iter().filter(|r| r.n >= 4).collect();
    let decreasing = tail
        .windows(2)
        .all(|w| w[1].sup_metric < w[0].sup_metric && w[1].sup_potential < w[0].sup_potential);
    let last = rows.last().expect("n >= 1");
    let mut rep = Report::new("converge");
    rep.param("s", cfg.s);
    rep.param("N", cfg.n);
    rep.param("alpha_rule", "k^2 (sqrt5 - 1)/2");
    rep.param("grid", "33x16");
    rep.check(Check::holds("sups_strictly_decreasing_from_n4", decreasing));
    rep.check(Check::below("last_ratio_deviation", (last.ratio - 1.0).abs(), 1e-3));
    rep.table = Some(table);
    Ok(rep)
}

fn ellipsoid(cfg: &RunConfig) -> Result<Report, SuiteError> {
    let a = cfg.alpha;
    let orbits = reeb_periodic_orbits(a).map_err(SuiteError::Parameters)?;
    let mut r = rng(cfg.rng_seed);
    let (mut liou, mut surf) = (0.0f64, 0.0f64);
    for _ in 0..cfg.seeds.min(1000) {
        let x = numerical(EllipsoidState::from_angles(
            a,
            rand_in(&mut r, 0.0, TAU / 4.0),
            rand_in(&mut r, 0.0, TAU),
            rand_in(&mut r, 0.0, TAU),
        ))?;
        liou = liou.max((x.liouville(x.velocity()) - 1.0).abs());
        let y = numerical(reeb_flow(&x, rand_in(&mut r, -cfg.period_cap, cfg.period_cap)))?;
        surf = surf.max(y.constraint_defect());
    }
    let scan = numerical(non_axis_scan(a, cfg.period_cap, cfg.seeds.min(256), cfg.rng_seed))?;
    let mut rep = Report::new("ellipsoid");
    rep.param("alpha", a);
    rep.param("period_cap", cfg.period_cap);
    rep.param("rng_seed", cfg.rng_seed);
    rep.param("period_plus", orbits[0].period);
    rep.param("period_minus", orbits[1].period);
    rep.param("non_axis_near_returns", scan.near_returns);
    rep.param("non_axis_min_return_defect", scan.min_defect);
    rep.check(Check::below("period_plus_error", (orbits[0].period - TAU / (1.0 + a)).abs(), 1e-12));
    rep.check(Check::below("period_minus_error", (orbits[1].period - TAU / (1.0 - a)).abs(), 1e-12));
    rep.check(Check::below("axis_closure_defect", orbits[0].closure_defect.max(orbits[1].closure_defect), 1e-12));
    rep.check(Check::below("liouville_defect", liou, 1e-10));
    rep.check(Check::below("constraint_defect", surf, 1e-12));
    rep.check(Check::new("non_axis_closed_orbits", scan.closed.len() as f64, crate::report::Relation::Equals, 0.0));
    Ok(rep)
}

fn rand_in(r: &mut katok_core::sampling::SampleRng, lo: f64, hi: f64) -> f64 {
    use rand::Rng;
    r.random_range(lo..hi)
}

fn w_family(cfg: &RunConfig) -> Result<Report, SuiteError> {
    let mut wp = WParams::new(cfg.s, cfg.epsilon).map_err(SuiteError::Parameters)?;
    if let Some(radius) = cfg.shrink {
        wp = wp.with_shrink(radius).map_err(SuiteError::Parameters)?;
    }
    let k_level = cfg.k.min(1e-3);
    let mut r = rng(cfg.rng_seed);
    let (mut hess, mut lev) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        hess = hess.max(vertical_hessian_defect(&wp, &random_unit(&mut r)));
        let q = random_unit(&mut r);
        lev = lev.max(numerical(w_level_identity_defect(&wp, k_level, &q, &random_unit_tangent(&mut r, &q)))?);
    }
    let levels: Vec<f64> = (0..24).map(|i| 1e-4 * 2f64.powi(i)).collect();
    let scan = w_convexity_scan(&wp, &levels, 64, cfg.rng_seed);
    let mut table = Table::new(&["k", "convex_in_domain"]);
    for (k, ok) in &scan.rows {
        table.push(vec![num(*k), ok.to_string()]);
    }
    let mut rep = Report::new("w-family");
    rep.param("s", wp.s);
    rep.param("epsilon", wp.eps);
    rep.param("delta", wp.delta());
    rep.param("domain_radius", scan.domain_radius);
    rep.param("identity_level", k_level);
    rep.param("k_max", scan.k_max.map_or(Value::Null, |k| json!(k)));
    rep.check(Check::below("vertical_hessian_relative_defect", hess, 1e-5));
    rep.check(Check::below("level_identity_radius_defect", lev, 1e-8));
    rep.table = Some(table);
    Ok(rep)
}
