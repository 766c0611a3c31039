//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dirac_lab_core::diagnostics::{
    attraction_metrics, fit_solitary, local_norm, non_decreasing, non_increasing, split_free,
    trace_spectrum, FitOptions, SpectrumOptions,
};
use dirac_lab_core::evolution::{bessel_kernel, duhamel_solution, free_step, run, SimConfig, TraceSeries};
use dirac_lab_core::model::energy;
use dirac_lab_core::numerics::bisect;
use dirac_lab_core::solitary::{
    amplitude_roots, gap_grid, jump_residual, k_of_omega, kappa, linear_frequencies, solitary_field,
    SolitaryParams,
};
use dirac_lab_core::{Grid, ModelParams, SpinorField, SpinorValue};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn gaussian(grid: Grid, amp: f64) -> SpinorField {
    SpinorField::from_fn(grid, |x| {
        let e = amp * (-x * x / 2.0).exp();
        SpinorValue::new(Complex64::new(e, 0.0), Complex64::new(0.0, 0.5 * e))
    })
}

fn standard_solitary(grid: Grid) -> SpinorField {
    let p = ModelParams::standard();
    let c1 = amplitude_roots(&p, 0.9, 1).unwrap().roots[1];
    let c2 = amplitude_roots(&p, -0.85, 2).unwrap().roots[1];
    let sp = SolitaryParams::new(1.0, [0.9, -0.85], [Complex64::new(c1, 0.0), Complex64::new(c2, 0.0)]).unwrap();
    solitary_field(&sp, grid, 0.0)
}

fn dispersion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_sum = 0.0f64;
    let mut worst_k = 0.0f64;
    for i in 0..10_000 {
        let m = [0.5, 1.0, 2.0, 3.7][i % 4];
        let w = m * rng.random_range(-1.0..1.0);
        let kap = kappa(w, m).unwrap();
        worst_sum = worst_sum.max((kap * kap + w * w - m * m).abs() / (m * m));
        let k = k_of_omega(Complex64::new(w, 0.0), m);
        worst_k = worst_k.max((Complex64::new(kap, 0.0) + Complex64::new(0.0, 1.0) * k).norm() / m);
    }
    let tol = 1e-12;
    check(
        worst_sum < tol && worst_k < tol,
        format!("max |kappa^2 + omega^2 - m^2| = {worst_sum:.2e}, max |kappa + ik| = {worst_k:.2e} (tol {tol:.0e})"),
    )
}

fn certificates() -> Outcome {
    let p = ModelParams::standard();
    let omegas = gap_grid(1.0, 64);
    let mut worst = 0.0f64;
    let mut waves = 0usize;
    for &w1 in &omegas {
        let r1 = amplitude_roots(&p, w1, 1).unwrap();
        for &w2 in &omegas {
            let r2 = amplitude_roots(&p, w2, 2).unwrap();
            for &c1 in &r1.roots {
                for &c2 in &r2.roots {
                    if c1 == 0.0 && c2 == 0.0 {
                        continue;
                    }
                    let sp = SolitaryParams::new(1.0, [w1, w2], [Complex64::new(c1, 0.0), Complex64::new(0.0, c2)]).unwrap();
                    let r = jump_residual(&sp, &p, 0.37);
                    worst = worst.max(r[0]).max(r[1]);
                    waves += 1;
                }
            }
        }
    }
    // oracle: bisection on 2 C kappa = (1 - |C b|^2) C b with the singular form of b
    let (m, w) = (1.0f64, 0.9f64);
    let kap = (m * m - w * w).sqrt();
    let b = 1.0 + (m - kap) / w;
    let oracle = bisect(|c| 2.0 * c * kap - (1.0 - (c * b).powi(2)) * c * b, 0.1, 1.0).unwrap();
    let root = amplitude_roots(&p, w, 1).unwrap().roots[1];
    let diff = (root - oracle).abs();
    check(
        waves > 0 && worst < 1e-10 && diff < 1e-9 && (oracle - 0.41878).abs() < 1e-5,
        format!(
            "{waves} waves on a 64 x 64 frequency grid, max jump residual {worst:.2e} (tol 1e-10); C(0.9) = {root:.12} vs oracle {oracle:.12}, diff {diff:.1e} (tol 1e-9)"
        ),
    )
}

fn energy_conservation() -> Outcome {
    let p = ModelParams::standard();
    let grid = Grid::new(40.0, 4096).unwrap();
    let mut drifts = Vec::new();
    for f in [standard_solitary(grid), gaussian(grid, 1.0)] {
        let mut cfg = SimConfig::new(p.clone(), grid, 1e-3, 10.0);
        cfg.energy_tolerance = 1.0;
        cfg.record_every = 10;
        let out = run(&cfg, &f).unwrap();
        drifts.push(out.trace.max_energy_drift());
    }
    // self-convergence order of the final field under dt halving
    let f = gaussian(grid, 1.0);
    let finals: Vec<SpinorField> = [4e-3, 2e-3, 1e-3]
        .iter()
        .map(|&dt| {
            let mut cfg = SimConfig::new(p.clone(), grid, dt, 1.0);
            cfg.energy_tolerance = 1.0;
            cfg.record_every = 50;
            run(&cfg, &f).unwrap().final_field
        })
        .collect();
    let e1 = finals[0].sub(&finals[1]).l2_norm();
    let e2 = finals[1].sub(&finals[2]).l2_norm();
    let order = (e1 / e2).log2();
    check(
        drifts.iter().all(|&d| d < 1e-6) && (1.8..=2.2).contains(&order),
        format!(
            "relative drift solitary {:.2e}, Gaussian {:.2e} (tol 1e-6); Strang order {order:.3} (range [1.8, 2.2])",
            drifts[0], drifts[1]
        ),
    )
}

fn duhamel() -> Outcome {
    let p = ModelParams::standard();
    let diff = |n: usize, dt: f64| {
        let grid = Grid::new(40.0, n).unwrap();
        let f = gaussian(grid, 1.0);
        let mut cfg = SimConfig::new(p.clone(), grid, dt, 0.5);
        cfg.energy_tolerance = 1.0;
        let out = run(&cfg, &f).unwrap();
        duhamel_solution(&cfg, &f, &out.trace).unwrap().sub(&out.final_field).l2_norm()
    };
    let coarse = diff(4096, 1e-3);
    let fine = diff(8192, 5e-4);
    let ratio = coarse / fine;
    let g0 = bessel_kernel(0.0, f64::MIN_POSITIVE, 1.0);
    check(
        coarse < 1e-3 && ratio >= 3.0 && g0 == 0.5,
        format!(
            "L2 difference {coarse:.3e} at (dt 1e-3, N 4096) (tol 1e-3), {fine:.3e} at (dt 5e-4, N 8192): reduction {ratio:.2}x (required >= 3x); G(0, 0+) = {g0}"
        ),
    )
}

fn linear_case() -> Outcome {
    let p = ModelParams::linear(1.0, [1.0, 1.0]).unwrap();
    let grid = Grid::new(40.0, 2048).unwrap();
    let mut cfg = SimConfig::new(p.clone(), grid, 1e-3, 500.0).absorbing();
    cfg.record_every = 10;
    let out = run(&cfg, &gaussian(grid, 0.1)).unwrap();
    let report = trace_spectrum(&out.trace, (100.0, 500.0), 1.0, &SpectrumOptions::default()).unwrap();
    let [w1, w2] = linear_frequencies(&p).unwrap();
    let target = [w1.unwrap(), w2.unwrap()];
    let half = 0.5f64.sqrt();
    let bin = 2.0 * std::f64::consts::PI / 400.0;
    let dom = [report.components[0].dominant.unwrap_or(f64::NAN), report.components[1].dominant.unwrap_or(f64::NAN)];
    let gap = [report.components[0].gap_mass, report.components[1].gap_mass];
    check(
        (dom[0] - half).abs() <= bin
            && (dom[1] + half).abs() <= bin
            && (target[0] - half).abs() < 1e-12
            && gap.iter().all(|&g| g > 0.95),
        format!(
            "peaks {:.5} / {:.5} vs +-{half:.5} (one bin {bin:.4}); gap mass {:.5} / {:.5} (min 0.95)",
            dom[0], dom[1], gap[0], gap[1]
        ),
    )
}

fn attraction() -> Outcome {
    let p = ModelParams::standard();
    let grid = Grid::new(40.0, 2048).unwrap();
    let mut cfg = SimConfig::new(p.clone(), grid, 1e-3, 600.0).absorbing();
    cfg.record_every = 10;
    cfg.snapshot_times = vec![300.0, 450.0, 600.0];
    let out = run(&cfg, &gaussian(grid, 1.0)).unwrap();
    let windows = [(150.0, 300.0), (300.0, 450.0), (450.0, 600.0)];
    let metrics = attraction_metrics(&out.trace, &out.snapshots, &p, &windows, 5.0, &SpectrumOptions::default()).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for j in 0..2 {
        let gap: Vec<f64> = metrics.iter().map(|m| m.gap_mass[j]).collect();
        let flat: Vec<f64> = metrics.iter().map(|m| m.flatness[j]).collect();
        pass &= non_decreasing(&gap, 0.0) && gap[2] > 0.9;
        pass &= non_increasing(&flat, 0.0) && flat[2] < 0.1;
        parts.push(format!(
            "psi{}: gap mass {:.6}/{:.6}/{:.6}, flatness {:.4}/{:.4}/{:.4}",
            j + 1,
            gap[0],
            gap[1],
            gap[2],
            flat[0],
            flat[1],
            flat[2]
        ));
    }
    let res: Vec<f64> = metrics.iter().map(|m| m.fit.residual).collect();
    pass &= non_increasing(&res, 0.0);
    parts.push(format!("fit residual {:.4}/{:.4}/{:.4}", res[0], res[1], res[2]));
    check(pass, parts.join("; "))
}

fn free_decay() -> Outcome {
    let p = ModelParams::standard();
    // wide enough that the radiation does not wrap around by t = 50
    let grid = Grid::new(100.0, 4096).unwrap();
    let f = SpinorField::from_fn(grid, |x| SpinorValue::new(Complex64::new((-x * x / 2.0).exp(), 0.0), Complex64::new(0.0, 0.0)));
    let mut cfg = SimConfig::new(p.clone(), grid, 1e-3, 50.0);
    cfg.snapshot_times = vec![50.0];
    let phi = split_free(&f, &cfg);
    let n0 = local_norm(&f, 1.0, 5.0);
    let n1 = local_norm(&phi[0].field, 1.0, 5.0);
    let ratio = n1 / n0;
    check(
        ratio < 0.05,
        format!("||phi(50)||_H1(-5,5) / ||phi(0)||_H1(-5,5) = {ratio:.4} (required < 0.05)"),
    )
}

fn symmetries() -> Outcome {
    let p = ModelParams::standard();
    let grid = Grid::new(20.0, 512).unwrap();
    let f = gaussian(grid, 1.0);
    let theta = 0.731;
    let rot = Complex64::from_polar(1.0, theta);
    let mut cfg = SimConfig::new(p.clone(), grid, 1e-3, 2.0);
    cfg.energy_tolerance = 1.0;
    let a = run(&cfg, &f).unwrap();
    let b = run(&cfg, &f.scaled(rot)).unwrap();
    let cov = b.final_field.sub(&a.final_field.scaled(rot)).sup_norm();
    let de = (energy(&f.scaled(rot), &p) - energy(&f, &p)).abs();

    let sol = standard_solitary(grid);
    let sp_trace = {
        let c1 = amplitude_roots(&p, 0.9, 1).unwrap().roots[1];
        let c2 = amplitude_roots(&p, -0.85, 2).unwrap().roots[1];
        let sp = SolitaryParams::new(1.0, [0.9, -0.85], [Complex64::new(c1, 0.0), Complex64::new(c2, 0.0)]).unwrap();
        let times: Vec<f64> = (0..2048).map(|i| i as f64 * 0.1).collect();
        let y = times.iter().map(|&t| sp.origin_value(t)).collect();
        TraceSeries::from_samples(times, y).unwrap()
    };
    let snap = sol.add(&gaussian(grid, 0.05));
    let opts = FitOptions::new((0.0, 1e9));
    let r0 = fit_solitary(&snap, &sp_trace, &p, 5.0, &opts).unwrap().residual;
    let r1 = fit_solitary(&snap.scaled(rot), &sp_trace, &p, 5.0, &opts).unwrap().residual;
    let dfit = (r0 - r1).abs();

    let (s, t) = (0.37, 1.91);
    let semi = free_step(&free_step(&f, s, &p), t, &p).sub(&free_step(&f, s + t, &p)).sup_norm();
    check(
        cov < 1e-10 && de < 1e-10 && dfit < 1e-10 && semi < 1e-12,
        format!(
            "U(1) covariance {cov:.1e}, energy {de:.1e}, fit residual {dfit:.1e} (tol 1e-10); semigroup {semi:.1e} (tol 1e-12)"
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() {
    let criteria: [Criterion; 8] = [
        ("dispersion identities", dispersion, Duration::from_secs(1)),
        ("solitary-wave certificates", certificates, Duration::from_secs(5)),
        ("energy conservation", energy_conservation, Duration::from_secs(120)),
        ("Duhamel oracle equivalence", duhamel, Duration::from_secs(60)),
        ("linear case", linear_case, Duration::from_secs(180)),
        ("attraction properties", attraction, Duration::from_secs(600)),
        ("local decay of the free component", free_decay, Duration::from_secs(30)),
        ("flow symmetries", symmetries, Duration::from_secs(60)),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f, budget)) in criteria.iter().enumerate() {
        let label = format!("{} {name}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|q| label.contains(q.as_str())) {
            continue;
        }
        let start = Instant::now();
        let out = f();
        let elapsed = start.elapsed();
        let in_time = elapsed <= *budget;
        let pass = out.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {label}: {} | {} | {:.1} s (budget {} s)",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failed > 0 {
        println!("acceptance: {failed} criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
