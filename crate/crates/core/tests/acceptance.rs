//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

use std::time::{Duration, Instant};

use burgerslab::estimate_lab::{
    burgers_exponents, check_daf_tv, check_decay, check_estfond, check_heat_linf, check_xtau, delta_reduction_defect,
    diagonal_infimum, fit_power_law, gronwall_identities_hold, log_times, monomial_constants, n_wave_reference,
    scale_grid, scaling_transform, CheckOptions, DiagonalGrid,
};
use burgerslab::exact_solutions::{n_wave_cell_average, truncate_data, DataProfile};
use burgerslab::flux_models::{EntropyId, EntropyPair, FluxSpec};
use burgerslab::fv_solver::{
    cfl_dt, entropy_residual, initialize, l1_distance, linf_norm, lp_norm, mass, run, step, AxisSpec,
    CellField, GridSpec, SolverConfig,
};
use burgerslab::moment_tensor::{det_identity_check, hilbert_det, rational, Rational};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), String>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Option<Duration>,
    run: fn() -> Outcome,
}

fn secs(s: u64) -> Option<Duration> {
    Some(Duration::from_secs(s))
}

fn sci(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn c1_determinant_identity() -> Outcome {
    let points = [
        rational(-2, 1),
        Rational::zero(),
        rational(1, 3),
        Rational::one(),
        rational(5, 1),
    ];
    let mut bad = Vec::new();
    for d in 2..=6 {
        for a in &points {
            if !det_identity_check(a, d).map_err(err)? {
                bad.push(format!("d={d}, a={a}"));
            }
        }
    }
    let h3 = hilbert_det(3).map_err(err)?;
    let ok = bad.is_empty() && h3 == rational(1, 2160);
    Ok((ok, format!("25 exact identities, failures {bad:?}; H_3 = {h3}")))
}

fn n_wave_error(h: f64) -> Result<f64, String> {
    let spec = FluxSpec::burgers(1);
    let count = (3.0 / h).round() as usize;
    let grid = GridSpec::new(vec![AxisSpec { origin: -0.5, width: h, count }]).map_err(err)?;
    let cfg = SolverConfig {
        t_end: 3.0,
        ..SolverConfig::default()
    };
    let out = run(&grid, &DataProfile::NWave { l: 1.0 }, &spec, &cfg).map_err(err)?;
    let f = &out.final_field;
    Ok((0..count)
        .map(|i| {
            let (a, b) = (grid.cell_lower(0, i), grid.cell_lower(0, i + 1));
            (f.values[i] - n_wave_cell_average(1.0, 3.0, a, b)).abs() * h
        })
        .sum())
}

fn c2_n_wave_oracle() -> Outcome {
    let hs = [1.0 / 100.0, 1.0 / 200.0, 1.0 / 400.0];
    let errs = hs.iter().map(|&h| n_wave_error(h)).collect::<Result<Vec<f64>, String>>()?;
    let lx: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ly: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / 3.0, ly.iter().sum::<f64>() / 3.0);
    let order = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / lx.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>();
    let ok = errs[2] <= 5e-3 && order >= 0.8;
    Ok((ok, format!("L1 errors {}, order {order:.3}", sci(&errs))))
}

fn c3_decay_exponent() -> Outcome {
    let spec = FluxSpec::burgers(1);
    let h = 1.0 / 400.0;
    let grid = GridSpec::new(vec![AxisSpec { origin: -0.5, width: h, count: 4200 }]).map_err(err)?;
    let cfg = SolverConfig {
        t_end: 80.0,
        output_times: log_times(0.5, 80.0, 60),
        ..SolverConfig::default()
    };
    let out = run(&grid, &DataProfile::NWave { l: 1.0 }, &spec, &cfg).map_err(err)?;
    let opts = CheckOptions {
        window: Some([5.0, 80.0]),
        time_shift: 1.0,
        expected_slope: Some(-0.375),
        slope_tol: 0.02,
        ..CheckOptions::default()
    };
    let solver = check_decay(&out.diagnostics, 2, &opts).map_err(err)?;
    let exact_run = n_wave_reference(1.0, &[vec![0.0], log_times(0.5, 80.0, 60)].concat(), &[]);
    let exact = check_decay(
        &exact_run,
        2,
        &CheckOptions {
            slope_tol: 1e-3,
            ..opts.clone()
        },
    )
    .map_err(err)?;
    let plain = fit_power_law(&out.diagnostics.norm_series(4.0).unwrap(), (5.0, 80.0)).map_err(err)?;
    let (s, e) = (solver.slope.unwrap(), exact.slope.unwrap());
    let ok = (s + 0.375).abs() <= 0.02 && (e + 0.375).abs() <= 1e-3;
    Ok((
        ok,
        format!(
            "slope in 1+t: solver {s:.4}, exact {e:.6}; slope in t without time shift {:.4}",
            plain.slope
        ),
    ))
}

fn random_profile(rng: &mut ChaCha8Rng, n: usize, signed: bool) -> DataProfile {
    let terms = (0..rng.gen_range(1..=3))
        .map(|_| {
            let height = rng.gen_range(0.2..1.2) * if signed && rng.gen_bool(0.4) { -1.0 } else { 1.0 };
            let center: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let radius = rng.gen_range(0.15..0.45);
            match rng.gen_range(0..3) {
                0 => DataProfile::Box {
                    height,
                    corner: center.iter().map(|c| c - radius).collect(),
                    widths: vec![2.0 * radius; n],
                },
                1 => DataProfile::Cone { height, center, radius },
                _ => DataProfile::Bump { height, center, radius },
            }
        })
        .collect();
    DataProfile::Sum { terms }
}

struct Trajectory {
    fields: Vec<CellField>,
    dts: Vec<f64>,
}

/// Steps several fields with a common CFL step.
fn evolve_together(init: Vec<CellField>, spec: &FluxSpec, t_end: f64) -> Result<Vec<Trajectory>, String> {
    let mut trajs: Vec<Trajectory> = init
        .into_iter()
        .map(|f| Trajectory {
            fields: vec![f],
            dts: Vec::new(),
        })
        .collect();
    let mut t = 0.0;
    while t < t_end {
        let dt = trajs
            .iter()
            .map(|tr| cfl_dt(tr.fields.last().unwrap(), spec, 0.9))
            .fold(t_end - t, f64::min);
        for tr in trajs.iter_mut() {
            let next = step(tr.fields.last().unwrap(), spec, dt).map_err(err)?;
            tr.fields.push(next);
            tr.dts.push(dt);
        }
        t += dt;
    }
    Ok(trajs)
}

struct SemigroupStats {
    contraction: f64,
    comparison: f64,
    conservation: f64,
    max_principle: f64,
    lp_growth: f64,
    kruzhkov_min: f64,
    kruzhkov_excess: f64,
    quadratic_excess: f64,
    runs: usize,
}

fn semigroup_suite() -> Result<SemigroupStats, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut st = SemigroupStats {
        contraction: f64::NEG_INFINITY,
        comparison: f64::NEG_INFINITY,
        conservation: 0.0,
        max_principle: f64::NEG_INFINITY,
        lp_growth: f64::NEG_INFINITY,
        kruzhkov_min: f64::INFINITY,
        kruzhkov_excess: f64::NEG_INFINITY,
        quadratic_excess: f64::NEG_INFINITY,
        runs: 0,
    };
    let cases: Vec<(usize, GridSpec, f64)> = (0..20)
        .map(|_| (1, GridSpec::uniform_1d(-3.0, 3.0, 600).unwrap(), 0.5))
        .chain((0..5).map(|_| {
            (
                2,
                GridSpec::new(vec![AxisSpec { origin: -2.5, width: 5.0 / 96.0, count: 96 }; 2]).unwrap(),
                0.3,
            )
        }))
        .collect();
    for (n, grid, t_end) in cases {
        let spec = FluxSpec::burgers(n);
        let u0 = initialize(&grid, &random_profile(&mut rng, n, true)).map_err(err)?;
        let v0 = initialize(&grid, &random_profile(&mut rng, n, true)).map_err(err)?;
        let bump = initialize(&grid, &random_profile(&mut rng, n, false)).map_err(err)?;
        let w0 = CellField {
            values: u0.values.iter().zip(&bump.values).map(|(a, b)| a + b).collect(),
            ..u0.clone()
        };
        let trajs = evolve_together(vec![u0, v0, w0], &spec, t_end)?;
        let (u, v, w) = (&trajs[0], &trajs[1], &trajs[2]);

        let d0 = l1_distance(&u.fields[0], &v.fields[0]).map_err(err)?;
        for (a, b) in u.fields.iter().zip(&v.fields) {
            let d = l1_distance(a, b).map_err(err)?;
            st.contraction = st.contraction.max((d - d0) / d0);
        }
        for (a, b) in u.fields.iter().zip(&w.fields) {
            let worst = a.values.iter().zip(&b.values).map(|(x, y)| x - y).fold(f64::NEG_INFINITY, f64::max);
            st.comparison = st.comparison.max(worst);
        }
        for tr in &trajs {
            st.runs += 1;
            let f0 = &tr.fields[0];
            let m0 = mass(f0);
            let scale = lp_norm(f0, 1.0).map_err(err)?;
            let (lo, hi) = f0.min_max();
            let norms0: Vec<f64> = [1.0, 2.0, 4.0].iter().map(|&p| lp_norm(f0, p).unwrap()).collect();
            let mut prev = norms0.clone();
            prev.push(linf_norm(f0));
            for f in &tr.fields[1..] {
                st.conservation = st.conservation.max((mass(f) - m0).abs() / scale);
                let (a, b) = f.min_max();
                st.max_principle = st.max_principle.max((lo - a).max(b - hi));
                let mut now: Vec<f64> = [1.0, 2.0, 4.0].iter().map(|&p| lp_norm(f, p).unwrap()).collect();
                now.push(linf_norm(f));
                for (x, y) in now.iter().zip(&prev) {
                    st.lp_growth = st.lp_growth.max((x - y) / y.max(1e-300));
                }
                prev = now;
            }
            // entropy budgets
            let vol = f0.grid.cell_volume();
            for id in [
                EntropyId::Kruzhkov { a: -1.0 },
                EntropyId::Kruzhkov { a: 0.0 },
                EntropyId::Kruzhkov { a: 0.5 },
                EntropyId::Quadratic,
            ] {
                let pair = EntropyPair::new(&spec, id).map_err(err)?;
                let budget: f64 = f0.values.iter().map(|&u| pair.eta(u).unwrap() * vol).sum();
                let mut total = 0.0;
                for (k, dt) in tr.dts.iter().enumerate() {
                    total += entropy_residual(&tr.fields[k], &tr.fields[k + 1], &spec, id, *dt).map_err(err)?.1;
                    if matches!(id, EntropyId::Kruzhkov { .. }) {
                        st.kruzhkov_min = st.kruzhkov_min.min(total);
                    }
                }
                match id {
                    EntropyId::Quadratic => st.quadratic_excess = st.quadratic_excess.max(total - budget),
                    _ => st.kruzhkov_excess = st.kruzhkov_excess.max(total - budget),
                }
            }
        }
    }
    Ok(st)
}

fn c4_semigroup(st: &SemigroupStats) -> Outcome {
    let tol = 1e-12;
    let ok = st.contraction <= tol
        && st.comparison <= 1e-13
        && st.conservation <= tol
        && st.max_principle <= 1e-13
        && st.lp_growth <= tol;
    Ok((
        ok,
        format!(
            "{} runs: contraction {:.1e}, comparison {:.1e}, mass drift {:.1e}, max principle {:.1e}, Lp growth {:.1e}",
            st.runs, st.contraction, st.comparison, st.conservation, st.max_principle, st.lp_growth
        ),
    ))
}

fn c5_entropy(st: &SemigroupStats) -> Outcome {
    let ok = st.kruzhkov_min >= -1e-10 && st.kruzhkov_excess <= 1e-6 && st.quadratic_excess <= 1e-6;
    Ok((
        ok,
        format!(
            "min cumulative Kruzhkov dissipation {:.2e}, max excess over budget: Kruzhkov {:.2e}, quadratic {:.2e}",
            st.kruzhkov_min, st.kruzhkov_excess, st.quadratic_excess
        ),
    ))
}

fn c6_dispersion() -> Outcome {
    let spec = FluxSpec::burgers(2);
    let grid = GridSpec::new(vec![AxisSpec { origin: -1.0, width: 3.0 / 256.0, count: 256 }; 2]).map_err(err)?;
    let profiles = [
        (
            "box",
            DataProfile::Box {
                height: 1.0,
                corner: vec![-0.5, -0.5],
                widths: vec![1.0, 0.8],
            },
        ),
        (
            "cone",
            DataProfile::Cone {
                height: 1.0,
                center: vec![0.0, 0.0],
                radius: 0.6,
            },
        ),
        (
            "two bumps",
            DataProfile::Sum {
                terms: vec![
                    DataProfile::Bump {
                        height: 1.0,
                        center: vec![-0.3, 0.2],
                        radius: 0.4,
                    },
                    DataProfile::Bump {
                        height: 0.7,
                        center: vec![0.35, -0.3],
                        radius: 0.3,
                    },
                ],
            },
        ),
    ];
    let t_end = 0.8;
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, p) in &profiles {
        let mut ratios = Vec::new();
        let mut worst_equivariance: f64 = 0.0;
        let mut base: Option<CellField> = None;
        for lam in [1.0, 0.5, 2.0] {
            let g = scale_grid(&grid, lam);
            let v0 = scaling_transform(p, lam).map_err(err)?;
            let cfg = SolverConfig {
                t_end: t_end / lam,
                output_times: (1..=8).map(|k| k as f64 * t_end / 8.0 / lam).collect(),
                ..SolverConfig::default()
            };
            let out = run(&g, &v0, &spec, &cfg).map_err(err)?;
            let rep = check_estfond(&out.diagnostics, 3, &CheckOptions::default()).map_err(err)?;
            ratios.push(rep.ratio);
            match &base {
                None => base = Some(out.final_field),
                Some(b) => {
                    for (x, y) in b.values.iter().zip(&out.final_field.values) {
                        worst_equivariance = worst_equivariance.max((y * lam - x).abs());
                    }
                }
            }
        }
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let spread = hi / lo - 1.0;
        ok &= ratios.iter().all(|r| r.is_finite() && *r > 0.0) && spread < 0.10;
        parts.push(format!("{name}: ratio {:.5}, spread {spread:.1e}, equivariance defect {worst_equivariance:.1e}", ratios[0]));
    }
    Ok((ok, parts.join("; ")))
}

fn c7_one_d_bounds() -> Outcome {
    let spec = FluxSpec::burgers(1);
    let h = 1.0 / 400.0;
    let cfg = SolverConfig {
        t_end: 50.0,
        output_times: log_times(0.5, 50.0, 50),
        ..SolverConfig::default()
    };
    let opts = CheckOptions {
        window: Some([0.5, 50.0]),
        bound_tol: 5e-2,
        ..CheckOptions::default()
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, p, hi) in [
        ("N-wave", DataProfile::NWave { l: 1.0 }, 8.5),
        ("box", DataProfile::box_1d(1.0, 0.0, 1.0), 11.5),
    ] {
        let count = ((hi + 0.5f64) / h).round() as usize;
        let grid = GridSpec::new(vec![AxisSpec { origin: -0.5, width: h, count }]).map_err(err)?;
        let out = run(&grid, &p, &spec, &cfg).map_err(err)?;
        let tv = check_daf_tv(&out.diagnostics, &opts).map_err(err)?;
        let heat = check_heat_linf(&out.diagnostics, &opts).map_err(err)?;
        ok &= tv.pass && heat.pass;
        parts.push(format!("{name}: TV ratio {:.4}, L-inf ratio {:.4}", tv.ratio, heat.ratio));
    }
    Ok((ok, parts.join("; ")))
}

fn c8_monomial_constants() -> Outcome {
    let c = monomial_constants(&[2, 3]).map_err(err)?;
    let e = burgers_exponents(3).map_err(err)?;
    let exact = c.big_k == 5
        && c.big_n == 9
        && c.admissible
        && c.theta == rational(1, 2)
        && c.gamma == Some(rational(5, 12))
        && c.delta == Some(rational(7, 18));
    let shared = c.gamma.as_ref() == Some(&e.gamma) && c.delta.as_ref() == Some(&e.delta) && c.p_main == e.p_star;
    let r = monomial_constants(&[2, 9, 11]).map_err(err)?;
    Ok((
        exact && shared,
        format!(
            "k=(2,3): K={}, N={}, theta={}, gamma={}, delta={}; k=(2,9,11): n*k_n={} vs N={}, admissible={}",
            c.big_k,
            c.big_n,
            c.theta,
            c.gamma.unwrap(),
            c.delta.unwrap(),
            3 * 11,
            r.big_n,
            r.admissible
        ),
    ))
}

fn c9_gronwall() -> Outcome {
    let identities = (2..=10).all(|d| gronwall_identities_hold(&burgers_exponents(d).unwrap()));
    let times = [vec![0.0], log_times(0.1, 400.0, 80)].concat();
    let run = n_wave_reference(1.0, &times, &[]);
    let taus: Vec<f64> = times.iter().copied().filter(|&t| t <= 40.0).collect();
    let opts = CheckOptions {
        time_shift: 1.0,
        ..CheckOptions::default()
    };
    let rep = check_xtau(&run, 2, &taus, &opts).map_err(err)?;
    let closed = 0.4 / (0.5f64.powf(5.0 / 3.0) * 0.2f64.powf(1.0 / 3.0));
    let dev = (rep.ratio - closed).abs() / closed;
    Ok((
        identities && dev <= 1e-6,
        format!("identities d=2..10: {identities}; xtau ratio {:.9} vs closed form {closed:.9} (rel {dev:.1e})", rep.ratio),
    ))
}

fn c10_truncation() -> Outcome {
    let spec = FluxSpec::burgers(1);
    let h = 1.0 / 1000.0;
    let grid = GridSpec::new(vec![AxisSpec { origin: -1.5, width: h, count: 5_000 }]).map_err(err)?;
    let cfg = SolverConfig {
        t_end: 1.0,
        output_times: vec![0.5],
        store_snapshots: true,
        ..SolverConfig::default()
    };
    let levels = [2.0, 4.0, 8.0, 16.0, 32.0];
    let outs = levels
        .iter()
        .map(|&m| {
            let p = truncate_data(&DataProfile::Singular, m).map_err(err)?;
            run(&grid, &p, &spec, &cfg).map_err(err)
        })
        .collect::<Result<Vec<_>, String>>()?;
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, t) in [(1usize, 0.5), (2, 1.0)] {
        let gaps: Vec<f64> = outs
            .windows(2)
            .map(|w| l1_distance(&w[0].snapshots[k], &w[1].snapshots[k]).unwrap())
            .collect();
        ok &= gaps.windows(2).all(|g| g[1] < g[0]);
        parts.push(format!("t={t}: {}", sci(&gaps)));
    }
    Ok((ok, format!("||u_m - u_2m||_1 for m = 2,4,8,16: {}", parts.join("; "))))
}

fn c11_general_flux() -> Outcome {
    let mut worst: f64 = 0.0;
    let cases = [
        (
            FluxSpec::burgers(1),
            GridSpec::uniform_1d(-0.5, 3.5, 800).unwrap(),
            DataProfile::NWave { l: 1.0 },
        ),
        (
            FluxSpec::burgers(2),
            GridSpec::new(vec![AxisSpec { origin: -1.0, width: 1.0 / 32.0, count: 96 }; 2]).unwrap(),
            DataProfile::Cone {
                height: 1.0,
                center: vec![0.0, 0.0],
                radius: 0.6,
            },
        ),
    ];
    for (spec, grid, p) in &cases {
        let cfg = SolverConfig {
            t_end: 1.0,
            output_times: vec![0.25, 0.5],
            record_delta: true,
            ..SolverConfig::default()
        };
        let out = run(grid, p, spec, &cfg).map_err(err)?;
        worst = worst.max(delta_reduction_defect(&out.diagnostics).map_err(err)?);
    }
    let spec = FluxSpec::polynomial(vec![vec![0.0, 0.0, 0.5, 0.1, -0.05]]).map_err(err)?;
    let u0 = initialize(
        &GridSpec::uniform_1d(-1.0, 2.0, 300).unwrap(),
        &DataProfile::Bump {
            height: 1.5,
            center: vec![0.4],
            radius: 0.5,
        },
    )
    .map_err(err)?;
    let inf = diagonal_infimum(&u0, &spec, &DiagonalGrid::default()).map_err(err)?;
    let ok = worst <= 1e-10 && inf.spread <= 1e-10;
    Ok((
        ok,
        format!(
            "max relative gap of ∫∫Δ(u) to H_d^(1/n) ∫∫u^p*: {worst:.1e}; n=1 diagonal scan spread {:.1e} over {} points",
            inf.spread, inf.evaluations
        ),
    ))
}

fn shared_semigroup() -> &'static Result<SemigroupStats, String> {
    static CELL: std::sync::OnceLock<Result<SemigroupStats, String>> = std::sync::OnceLock::new();
    CELL.get_or_init(semigroup_suite)
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "determinant identity", budget: secs(1), run: c1_determinant_identity },
        Criterion { id: 2, name: "1-D N-wave oracle", budget: secs(30), run: c2_n_wave_oracle },
        Criterion { id: 3, name: "decay exponent d=2", budget: secs(60), run: c3_decay_exponent },
        Criterion {
            id: 4,
            name: "semigroup properties",
            budget: secs(120),
            run: || shared_semigroup().as_ref().map_err(Clone::clone).and_then(c4_semigroup),
        },
        Criterion {
            id: 5,
            name: "entropy inequalities",
            budget: None,
            run: || shared_semigroup().as_ref().map_err(Clone::clone).and_then(c5_entropy),
        },
        Criterion { id: 6, name: "dispersion estimate d=3", budget: secs(600), run: c6_dispersion },
        Criterion { id: 7, name: "1-D TV and L-inf bounds", budget: None, run: c7_one_d_bounds },
        Criterion { id: 8, name: "monomial constants", budget: secs(1), run: c8_monomial_constants },
        Criterion { id: 9, name: "Gronwall chain", budget: None, run: c9_gronwall },
        Criterion { id: 10, name: "truncation convergence", budget: secs(60), run: c10_truncation },
        Criterion { id: 11, name: "general-flux reduction", budget: None, run: c11_general_flux },
    ];
    let results: Vec<(bool, String, Duration)> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria
            .iter()
            .map(|c| {
                s.spawn(move || {
                    let start = Instant::now();
                    let r = (c.run)();
                    (r, start.elapsed())
                })
            })
            .collect();
        handles
            .into_iter()
            .zip(&criteria)
            .map(|(h, c)| {
                let (r, el) = h.join().unwrap_or_else(|_| (Err("panicked".into()), Duration::ZERO));
                match r {
                    Ok((ok, detail)) => {
                        let in_time = c.budget.map_or(true, |b| el <= b);
                        let detail = if in_time {
                            detail
                        } else {
                            format!("{detail}; over the time budget of {:?}", c.budget.unwrap())
                        };
                        (ok && in_time, detail, el)
                    }
                    Err(e) => (false, format!("error: {e}"), el),
                }
            })
            .collect()
    });
    let mut failures = 0;
    for (c, (ok, detail, el)) in criteria.iter().zip(&results) {
        if !ok {
            failures += 1;
        }
        println!(
            "{} criterion {:>2} {} ({:.2}s): {detail}",
            if *ok { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            el.as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
