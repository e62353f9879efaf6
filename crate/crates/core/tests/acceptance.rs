//! Acceptance checks. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use common::*;
use f2bp::body_model::{build_body, octahedron};
use f2bp::dynamics::{osculating_elements, OrbitalElements};
use f2bp::lgvi::{Lgvi, LgviOptions};
use f2bp::mutual_potential::qtensor::exponents_of;
use f2bp::mutual_potential::{compute_q_tensors, MutualPotential};
use f2bp::rkf78::{PackedState, Rkf78, StepControl};
use f2bp::sim::config::IntegratorKind;
use f2bp::sim::scenarios::{scenario1, scenario2, scenario3, OCTAHEDRON1, OCTAHEDRON2};
use f2bp::sim::{Outputs, RunConfig, RunSummary, Sample, Simulation};
use f2bp::so3;
use nalgebra::Vector3;
use num_rational::Ratio;
use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn process_cpu_seconds() -> f64 {
    let mut ts = libc::timespec { tv_sec: 0, tv_nsec: 0 };
    // SAFETY: `ts` is a valid, writable timespec.
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_PROCESS_CPUTIME_ID, &mut ts) };
    assert_eq!(rc, 0, "clock_gettime failed");
    ts.tv_sec as f64 + ts.tv_nsec as f64 * 1e-9
}

fn run(cfg: RunConfig, mut observer: impl FnMut(&Sample)) -> RunSummary {
    Simulation::new(cfg).unwrap().run(Outputs::default(), |s| observer(s)).unwrap()
}

fn with_rkf(mut cfg: RunConfig, tol: f64) -> RunConfig {
    cfg.integrator.kind = IntegratorKind::Rkf78;
    cfg.integrator.h = None;
    cfg.integrator.tolerance = Some(tol);
    cfg
}

fn deg() -> f64 {
    std::f64::consts::PI / 180.0
}

fn scenario1_elements() -> OrbitalElements {
    let d = deg();
    OrbitalElements { a: 4.0, e: 0.3, i: 5.0 * d, raan: 15.0 * d, argp: 60.0 * d, nu: 10.0 * d }
}

fn table1() -> Outcome {
    let clock = Instant::now();
    let [a, b, c] = OCTAHEDRON2;
    let b2 = build_body(&octahedron(a, b, c, 2500.0)).unwrap();
    let [a, b, c] = OCTAHEDRON1;
    let b1 = build_body(&octahedron(a, b, c, 2500.0)).unwrap();
    let elapsed = clock.elapsed().as_secs_f64();
    // (body, value, table entry)
    let rows = [
        ("B2 area", b2.surface_area, 8.839),
        ("B2 volume", b2.volume, 1.800),
        ("B2 radius", b2.equiv_radius, 0.7546),
        ("B2 mass", b2.mass, 4500.0),
        ("B2 Ixx", b2.inertia[(0, 0)], 1377.0),
        ("B2 Iyy", b2.inertia[(1, 1)], 814.5),
        ("B2 Izz", b2.inertia[(2, 2)], 1462.5),
        ("B1 area", b1.surface_area, 2.002),
        ("B1 volume", b1.volume, 0.1561),
        ("B1 radius", b1.equiv_radius, 0.3340),
        ("B1 mass", b1.mass, 390.3),
        ("B1 Ixx", b1.inertia[(0, 0)], 9.24),
        ("B1 Iyy", b1.inertia[(1, 1)], 42.99),
        ("B1 Izz", b1.inertia[(2, 2)], 44.32),
    ];
    let (worst_name, worst) = rows
        .iter()
        .map(|(n, v, t)| (*n, rel_err(*v, *t)))
        .fold(("", 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    check(
        worst <= 5e-4 && elapsed < 1.0,
        format!("worst {worst_name} rel {worst:.2e} (limit 5e-4), build {elapsed:.3} s"),
    )
}

fn factorial(n: u32) -> u128 {
    (1..=n as u128).product()
}

fn simplex_moment(e: &[u32]) -> Ratio<u128> {
    let total: u32 = e.iter().sum();
    Ratio::new(e.iter().map(|&k| factorial(k)).product(), factorial(total + 3))
}

fn q_tensors() -> Outcome {
    let q = compute_q_tensors(5).unwrap();
    let mut entries = Vec::new();
    let mut mismatched = 0;
    for n in 0..=5 {
        for (idx, value) in q.rank(n) {
            let e = exponents_of(idx);
            let exact = simplex_moment(&e[..3]) * simplex_moment(&e[3..]);
            if *value != exact {
                mismatched += 1;
            }
            entries.push((e, *value.numer() as f64 / *value.denom() as f64));
        }
    }
    if q.rank(0).values().next().copied() != Some(Ratio::new(1, 36)) {
        return Err("rank-0 entry is not 1/36".into());
    }

    // Uniform samples of the product of two unit simplices (volume 1/36).
    let samples = 1_000_000;
    let mut rng = rng(2024);
    let mut sum = vec![0.0; entries.len()];
    let mut sum_sq = vec![0.0; entries.len()];
    let mut pow = [[1.0f64; 6]; 6];
    let simplex = |rng: &mut rand_chacha::ChaCha8Rng| {
        let w: [f64; 4] = std::array::from_fn(|_| -(1.0 - rng.gen::<f64>()).ln());
        let s: f64 = w.iter().sum();
        [w[0] / s, w[1] / s, w[2] / s]
    };
    for _ in 0..samples {
        let a = simplex(&mut rng);
        let b = simplex(&mut rng);
        let x = [a[0], a[1], a[2], b[0], b[1], b[2]];
        for k in 0..6 {
            for p in 1..6 {
                pow[k][p] = pow[k][p - 1] * x[k];
            }
        }
        for (i, (e, _)) in entries.iter().enumerate() {
            let v = (0..6).map(|k| pow[k][e[k] as usize]).product::<f64>() / 36.0;
            sum[i] += v;
            sum_sq[i] += v * v;
        }
    }
    let nf = samples as f64;
    let z: Vec<f64> = entries
        .iter()
        .enumerate()
        .map(|(i, (_, exact))| {
            let mean = sum[i] / nf;
            let var = (sum_sq[i] / nf - mean * mean).max(0.0);
            (mean - exact).abs() / (var / nf).sqrt().max(f64::MIN_POSITIVE)
        })
        .collect();
    let worst_z = z.iter().copied().fold(0.0, f64::max);
    let over = z.iter().filter(|&&v| v > 3.0).count();
    // 3σ applied to the family of entries: the per-entry band that keeps the
    // chance of any false exceedance at the two-sided 3σ level.
    let normal = Normal::new(0.0, 1.0).unwrap();
    let p3 = 2.0 * normal.sf(3.0);
    let z_family = normal.inverse_cdf(1.0 - 0.5 * p3 / z.len() as f64);
    let family_ok = worst_z <= z_family;
    // Named low-rank entries, each held to 3σ on its own.
    let named: [[u32; 6]; 4] = [[1, 0, 0, 0, 0, 0], [2, 0, 0, 0, 0, 0], [1, 1, 0, 0, 0, 0], [1, 0, 0, 1, 0, 0]];
    let named_z: f64 = named
        .iter()
        .map(|n| entries.iter().position(|(e, _)| e.iter().zip(n).all(|(a, b)| *a == *b)).map_or(f64::INFINITY, |i| z[i]))
        .fold(0.0, f64::max);

    let (b1, b2) = (body1(), body2());
    let q0 = compute_q_tensors(0).unwrap();
    let pot = MutualPotential::new(&b1, &b2, G, &q0, 0).unwrap();
    let x = Vector3::new(3.0, -4.0, 12.0);
    let u = pot.potential(&x, &so3::exp(&Vector3::new(0.3, 0.2, 0.1))).unwrap();
    let point_mass = -G * b1.mass * b2.mass / x.norm();
    let pm_err = rel_err(u, point_mass);

    check(
        mismatched == 0 && family_ok && named_z <= 3.0 && pm_err <= 1e-14,
        format!(
            "{} entries, {mismatched} differ from closed form; Monte Carlo worst |z| {worst_z:.2} (family 3σ band {z_family:.2}, {over} entries beyond 3σ alone), Q_1/Q_11/Q_12/Q_14 worst |z| {named_z:.2}; point-mass rel {pm_err:.1e}",
            z.len()
        ),
    )
}

fn gradients() -> Outcome {
    let clock = Instant::now();
    let (b1, b2) = (body1(), body2());
    let q = compute_q_tensors(4).unwrap();
    let pot = MutualPotential::new(&b1, &b2, G, &q, 4).unwrap();
    let mut rng = rng(77);
    let (mut worst_f, mut worst_m): (f64, f64) = (0.0, 0.0);
    for _ in 0..25 {
        let (x, r) = random_configuration(&mut rng, 3.0, 8.0);
        let g = pot.evaluate(&x, &r).unwrap();
        let u = |x: Vector3<f64>, r| pot.potential(&x, &r).unwrap();
        let dx = 1e-4 * x.norm();
        let fd = Vector3::from_fn(|i, _| {
            let e = Vector3::ith(i, dx);
            (u(x + e, r) - u(x - e, r)) / (2.0 * dx)
        });
        worst_f = worst_f.max((fd - g.du_dx).norm() / g.du_dx.norm());
        let da = 1e-4;
        let fm = Vector3::from_fn(|i, _| {
            let s = Vector3::ith(i, da);
            (u(x, so3::exp(&s) * r) - u(x, so3::exp(&-s) * r)) / (2.0 * da)
        });
        worst_m = worst_m.max((fm - g.moment).norm() / g.moment.norm());
    }
    let elapsed = clock.elapsed().as_secs_f64();
    check(
        worst_f <= 1e-6 && worst_m <= 1e-5 && elapsed < 60.0,
        format!("25 configs: dU/dX rel {worst_f:.1e} (≤1e-6), M rel {worst_m:.1e} (≤1e-5), {elapsed:.2} s"),
    )
}

fn kepler() -> Outcome {
    let mut cfg = with_rkf(scenario1(), 1e-12);
    cfg.integrator.order = 0;
    let sim = Simulation::new(cfg.clone()).unwrap();
    let mu = sim.model.mu();
    let el = scenario1_elements();
    let period = orbital_period(el.a, mu);
    cfg.integrator.tf = period;
    let mut last = None;
    run(cfg, |s| last = Some(*s));
    let end = last.unwrap();
    let (x_exact, _) = kepler_propagate(&el, mu, end.t);
    let err = (end.inertial.x1 - end.inertial.x2 - x_exact).norm() / el.a;
    check(err <= 1e-8, format!("one period ({period:.0} s): position error {err:.2e} a (≤1e-8)"))
}

/// Scenario 2 desk runs shared by several criteria.
struct Scenario2Runs {
    lgvi: RunSummary,
    rkf: RunSummary,
}

fn scenario2_runs() -> Scenario2Runs {
    let lgvi = run(scenario2(), |_| {});
    let rkf = run(with_rkf(scenario2(), 1e-8), |_| {});
    Scenario2Runs { lgvi, rkf }
}

fn conservation(runs: &Scenario2Runs) -> Outcome {
    let s = &runs.lgvi;
    let t_run = s.t_end - s.t_start;
    let drift = s.energy_trend_slope.abs() * t_run;
    let amplitude = 0.5 * s.energy_error_range;
    check(
        s.mean_abs_energy_error <= 1e-6
            && s.mean_angular_momentum_error <= 1e-10
            && s.mean_orthogonality_error <= 1e-12
            && drift < 2.0 * amplitude,
        format!(
            "mean |ΔE| {:.3e} J, mean |Δπ| {:.3e}, mean orth {:.3e}, trend·T {drift:.2e} vs 2×amplitude {:.2e}",
            s.mean_abs_energy_error,
            s.mean_angular_momentum_error,
            s.mean_orthogonality_error,
            2.0 * amplitude
        ),
    )
}

fn drift_contrast(runs: &Scenario2Runs) -> Outcome {
    let ratio = runs.rkf.mean_orthogonality_error / runs.lgvi.mean_orthogonality_error;
    check(
        ratio >= 1e4,
        format!(
            "RKF ε=1e-8 mean orth {:.3e} vs LGVI {:.3e}: ratio {ratio:.2e} (≥1e4)",
            runs.rkf.mean_orthogonality_error, runs.lgvi.mean_orthogonality_error
        ),
    )
}

fn newton(runs: &Scenario2Runs) -> Outcome {
    let s = &runs.lgvi;
    check(
        s.newton_max_iterations <= 5 && s.newton_median_iterations <= 3.0 && s.newton_max_residual <= 1e-13,
        format!(
            "max {} iterations, median {}, max residual {:.2e}",
            s.newton_max_iterations, s.newton_median_iterations, s.newton_max_residual
        ),
    )
}

fn scenario3_disruption() -> Outcome {
    let sim = Simulation::new(scenario3()).unwrap();
    let mu = sim.model.mu();
    let (_, _, i0) = sim.initial();
    let normal = (i0.x1 - i0.x2).cross(&(i0.v1 - i0.v2)).normalize();
    let mut excursion: f64 = 0.0;
    let (mut e_min, mut e_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut first_e = None;
    let summary = run(scenario3(), |s| {
        let i = &s.inertial;
        excursion = excursion.max(i.x1.dot(&normal).abs()).max(i.x2.dot(&normal).abs());
        if let Ok(el) = osculating_elements(&(i.x1 - i.x2), &(i.v1 - i.v2), mu) {
            first_e.get_or_insert(el.e);
            e_min = e_min.min(el.e);
            e_max = e_max.max(el.e);
        }
    });
    let e0 = first_e.unwrap_or(f64::NAN);
    check(
        summary.termination == "completed" && excursion <= 1e-12 && e0 < 1.0 && e_max > 1.0,
        format!(
            "out-of-plane max {excursion:.2e} m (≤1e-12), e from {e0:.4} to max {e_max:.4}, {}",
            summary.termination
        ),
    )
}

fn accounting(runs: &Scenario2Runs) -> Outcome {
    let l = &runs.lgvi;
    let lgvi_ok = l.evaluations == l.steps as u64 + 1;
    let r = &runs.rkf;
    let attempts = (r.steps + r.rejected_steps) as u64;
    let rkf_ok = r.evaluations == 13 * attempts + r.steps as u64 + 1;

    let mut plain = with_rkf(scenario2(), 1e-8);
    plain.integrator.tf = 200.0;
    plain.integrator.rkf_diagnostics = false;
    let p = run(plain, |_| {});
    let plain_ok = p.evaluations == 13 * (p.steps + p.rejected_steps) as u64;

    // Cost per evaluation across step sizes, interleaved, best of nine. The
    // scaling is judged on process CPU time, which excludes time the host
    // steals from the VM; wall time is reported alongside.
    let hs = [0.4, 0.8, 1.0];
    let mut cpu = vec![f64::INFINITY; hs.len()];
    let mut wall = vec![f64::INFINITY; hs.len()];
    for _ in 0..9 {
        for (k, &h) in hs.iter().enumerate() {
            let mut cfg = scenario2();
            cfg.integrator.tf = 4_000.0;
            cfg.integrator.h = Some(h);
            let mut sim = Simulation::new(cfg).unwrap();
            let start = process_cpu_seconds();
            let s = sim.run(Outputs::default(), |_| {}).unwrap();
            let n = s.evaluations as f64;
            cpu[k] = cpu[k].min((process_cpu_seconds() - start) / n);
            wall[k] = wall[k].min(s.wall_seconds / n);
        }
    }
    let spread = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        v.iter().copied().fold(0.0, f64::max) / lo - 1.0
    };
    let (cpu_spread, wall_spread) = (spread(&cpu), spread(&wall));
    let us = |v: &[f64]| v.iter().map(|x| format!("{:.1}", x * 1e6)).collect::<Vec<_>>().join("/");
    check(
        lgvi_ok && rkf_ok && plain_ok && cpu_spread <= 0.2,
        format!(
            "LGVI {} evals / {} steps; RKF {} evals / {} accepted + {} rejected (+diag); no-diag 13×{} = {}; per-eval CPU {} µs (spread {:.0}%), wall {} µs (spread {:.0}%)",
            l.evaluations,
            l.steps,
            r.evaluations,
            r.steps,
            r.rejected_steps,
            p.steps + p.rejected_steps,
            p.evaluations,
            us(&cpu),
            cpu_spread * 100.0,
            us(&wall),
            wall_spread * 100.0
        ),
    )
}

fn order_of_accuracy() -> Outcome {
    let end = |h: f64| {
        let mut cfg = scenario1();
        cfg.integrator.tf = 8000.0;
        cfg.integrator.h = Some(h);
        let mut last = None;
        run(cfg, |s| last = Some(*s));
        last.unwrap()
    };
    let (a, b, c) = (end(80.0), end(40.0), end(20.0));
    let diff = |p: &Sample, q: &Sample| {
        let dx = ((p.inertial.x1 - p.inertial.x2) - (q.inertial.x1 - q.inertial.x2)).norm();
        let dv = ((p.inertial.v1 - p.inertial.v2) - (q.inertial.v1 - q.inertial.v2)).norm();
        (dx, dv)
    };
    let (d1x, d1v) = diff(&a, &b);
    let (d2x, d2v) = diff(&b, &c);
    let px = (d1x / d2x).log2();
    let pv = (d1v / d2v).log2();
    let in_range = |p: f64| (1.8..=2.2).contains(&p);
    check(
        in_range(px) && in_range(pv),
        format!("h = 80/40/20 s over 8000 s: observed order {px:.3} (position), {pv:.3} (velocity)"),
    )
}

fn cross_integrator() -> Outcome {
    let cfg = scenario1();
    let sim = Simulation::new(cfg).unwrap();
    let (t0, rel, inertial) = sim.initial();
    let (m, pot) = (&sim.model, &sim.potential);
    let el = scenario1_elements();
    let tf = 5.0 * orbital_period(el.a, m.mu());
    let h = 1.0;
    let checkpoint = 1000.0;
    // After about three periods the separation drops inside the summed
    // bounding radii. Both integrators see the same truncated model, so the
    // guard is off for this comparison.
    let options = LgviOptions { contact_factor: 0.0, ..LgviOptions::default() };
    let mut lg = Lgvi::new(t0, h, rel, inertial, pot, options).unwrap();
    let mut rk = Rkf78::new(t0, PackedState::pack(&rel, &inertial, m), 10.0, StepControl::new(1e-12), false);
    rk.contact_factor = 0.0;
    let mut min_r = f64::INFINITY;
    let (mut worst_x, mut worst_att): (f64, f64) = (0.0, 0.0);
    let mut k = 0;
    let mut next = checkpoint;
    loop {
        lg.step(m, pot).map_err(|e| format!("LGVI at t={}: {e}", lg.t)).unwrap();
        min_r = min_r.min(lg.state.x.norm());
        k += 1;
        let t = t0 + k as f64 * h;
        if t < next && t < tf {
            continue;
        }
        while rk.t < t {
            rk.step(t, m, pot).map_err(|e| format!("RKF at t={}: {e}", rk.t)).unwrap();
        }
        let (_, ri) = rk.y.unpack(m);
        let li = &lg.inertial;
        let dx = ((li.x1 - li.x2) - (ri.x1 - ri.x2)).norm() / el.a;
        let att = so3::rotation_angle_between(&li.r1, &ri.r1).max(so3::rotation_angle_between(&li.r2, &ri.r2));
        worst_x = worst_x.max(dx);
        worst_att = worst_att.max(att);
        next += checkpoint;
        if t >= tf {
            break;
        }
    }
    check(
        worst_x <= 1e-5 && worst_att <= 1e-4,
        format!(
            "5 periods ({tf:.0} s), LGVI h=1 vs RKF ε=1e-12: max position diff {worst_x:.2e} a (≤1e-5), attitude {worst_att:.2e} rad (≤1e-4), min separation {min_r:.3} m"
        ),
    )
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |name: &str, f: &mut dyn FnMut() -> Outcome| {
        let clock = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = clock.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS {name}: {d} [{secs:.1} s]"),
            Err(d) => {
                failed += 1;
                println!("FAIL {name}: {d} [{secs:.1} s]");
            }
        }
    };

    report("table1_mass_properties", &mut table1);
    report("q_tensor_correctness", &mut q_tensors);
    report("gradient_consistency", &mut gradients);
    report("kepler_limit", &mut kepler);
    let runs = catch_unwind(scenario2_runs).ok();
    fn need(runs: &Option<Scenario2Runs>) -> Result<&Scenario2Runs, String> {
        runs.as_ref().ok_or_else(|| "scenario 2 runs failed".to_string())
    }
    report("scenario2_conservation", &mut || need(&runs).and_then(conservation));
    report("drift_contrast", &mut || need(&runs).and_then(drift_contrast));
    report("scenario3_planarity_disruption", &mut scenario3_disruption);
    report("implicit_solve_quality", &mut || need(&runs).and_then(newton));
    report("evaluation_accounting", &mut || need(&runs).and_then(accounting));
    report("order_of_accuracy", &mut order_of_accuracy);
    report("cross_integrator_agreement", &mut cross_integrator);

    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
