use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use dirac_lab_core::diagnostics::{attraction_metrics, non_decreasing, non_increasing, trace_spectrum};
use dirac_lab_core::evolution::{bessel_kernel, duhamel_solution, run, Boundary, SimConfig};
use dirac_lab_core::initial::InitialSpec;
use dirac_lab_core::io::{
    fmt_f64, write_field_csv, write_metrics_csv, write_spectrum_csv, write_trace_csv, DiagnosticsSection,
    ExperimentConfig, TimeSection,
};
use dirac_lab_core::solitary::{amplitude_residual, amplitude_roots, gap_grid, linear_frequencies, profile_h1_norm};
use dirac_lab_core::{Error, Grid, ModelParams};
use num_complex::Complex64;

use crate::manifest::{Assertion, Report};
use crate::svg::{line_plot, Series};
use crate::{BoundaryFlag, Scenario};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or invalid configuration: exit 2.
    Config(String),
    /// The scenario ran but a computation failed: exit 1.
    Failure(String),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Failure(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(s) => write!(f, "configuration: {s}"),
            CliError::Failure(s) => write!(f, "{s}"),
            CliError::Io(e) => write!(f, "i/o: {e}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidMass(_)
            | Error::DegenerateNonlinearity { .. }
            | Error::LinearCouplingTooLarge { .. }
            | Error::WrongMode { .. }
            | Error::InvalidGrid(_)
            | Error::RWindowTooLarge { .. }
            | Error::OmegaOutsideGap { .. }
            | Error::UnknownSpec(_)
            | Error::InvalidConfig(_)
            | Error::TraceResolutionTooCoarse(_)
            | Error::WindowTooShort { .. } => CliError::Config(e.to_string()),
            Error::EnergyDriftExceeded { drift, tolerance, t } => {
                CliError::Failure(format!("energy_drift {drift:e} exceeds {tolerance:e} at t = {t}"))
            }
            other => CliError::Failure(other.to_string()),
        }
    }
}

pub struct Ctx {
    pub out_dir: PathBuf,
    pub config: Option<ExperimentConfig>,
    pub seed: Option<u64>,
}

impl Ctx {
    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    /// The given config, or `default`, with the seed override applied.
    fn experiment(&self, default: impl FnOnce() -> ExperimentConfig) -> ExperimentConfig {
        let mut cfg = self.config.clone().unwrap_or_else(default);
        if let (Some(seed), InitialSpec::Noise { seed: s, .. }) = (self.seed, &mut cfg.initial) {
            *s = seed;
        }
        cfg
    }
}

pub fn dispatch(s: &Scenario, ctx: &Ctx, report: &mut Report) -> Result<(), CliError> {
    match s {
        Scenario::Simulate {
            out_trace,
            out_snapshots,
            boundary,
        } => simulate(ctx, report, out_trace.clone(), out_snapshots.clone(), *boundary),
        Scenario::SolitaryScan { m, potential, omega_grid } => {
            solitary_scan(ctx, report, *m, potential.as_deref(), *omega_grid)
        }
        Scenario::LinearVerify {
            m,
            a,
            window,
            transient,
            points,
            half_length,
            dt,
        } => linear_verify(ctx, report, *m, a, *window, *transient, Grid::new(*half_length, *points)?, *dt),
        Scenario::AttractorTest { plots } => attractor_test(ctx, report, *plots),
        Scenario::DuhamelCheck {
            points,
            half_length,
            dt,
            t_final,
        } => duhamel_check(ctx, report, *points, *half_length, *dt, *t_final),
        Scenario::ConvergenceStudy {
            points,
            half_length,
            dt,
            levels,
            t_final,
        } => convergence_study(ctx, report, Grid::new(*half_length, *points)?, *dt, *levels, *t_final),
    }
}

fn packet() -> InitialSpec {
    InitialSpec::Gaussian {
        center: 0.0,
        width: 1.0,
        amplitude: 1.0,
        spinor: [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.5)],
        k0: 0.0,
    }
}

fn time(dt: f64, t_final: f64, record_every: usize) -> TimeSection {
    TimeSection {
        dt,
        t_final,
        record_every,
        snapshot_times: Vec::new(),
        energy_tolerance: 1e-6,
        kick: Default::default(),
        kernel: Default::default(),
    }
}

fn sponge(grid: Grid) -> Boundary {
    Boundary::Absorbing {
        width: 0.25 * grid.half_length(),
        strength: 2.0,
    }
}

pub fn default_simulate() -> ExperimentConfig {
    let grid = Grid::new(40.0, 1024).expect("valid grid");
    ExperimentConfig {
        model: ModelParams::standard(),
        grid,
        time: time(1e-3, 10.0, 1),
        boundary: Boundary::Conservative,
        initial: packet(),
        diagnostics: DiagnosticsSection::default(),
    }
}

pub fn default_attractor() -> ExperimentConfig {
    let grid = Grid::new(40.0, 2048).expect("valid grid");
    ExperimentConfig {
        model: ModelParams::standard(),
        grid,
        time: time(1e-3, 600.0, 10),
        boundary: sponge(grid),
        initial: packet(),
        diagnostics: DiagnosticsSection {
            window_length: Some(150.0),
            window_count: 3,
            ..DiagnosticsSection::default()
        },
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json(report: &mut Report, path: PathBuf, value: &impl Serialize) -> Result<(), CliError> {
    std::fs::write(&path, serde_json::to_string_pretty(value).expect("serialises"))?;
    report.output(path);
    Ok(())
}

fn echo(report: &mut Report, cfg: &impl Serialize) {
    report.config = serde_json::to_value(cfg).expect("serialises");
}

fn simulate(
    ctx: &Ctx,
    report: &mut Report,
    out_trace: Option<PathBuf>,
    out_snapshots: Option<PathBuf>,
    boundary: Option<BoundaryFlag>,
) -> Result<(), CliError> {
    let mut cfg = ctx.experiment(default_simulate);
    match boundary {
        Some(BoundaryFlag::Conservative) => cfg.boundary = Boundary::Conservative,
        Some(BoundaryFlag::Absorbing) if matches!(cfg.boundary, Boundary::Conservative) => {
            cfg.boundary = sponge(cfg.grid)
        }
        _ => {}
    }
    echo(report, &cfg);
    let sim = cfg.sim_config();
    sim.validate()?;
    let out = run(&sim, &cfg.initial_field()?)?;

    let trace_path = out_trace.unwrap_or_else(|| ctx.path("trace.csv"));
    write_trace_csv(&mut create(&trace_path)?, &out.trace)?;
    report.output(trace_path);
    let snap_dir = out_snapshots.unwrap_or_else(|| ctx.path("snapshots"));
    for s in &out.snapshots {
        let p = snap_dir.join(format!("snapshot_t{:012.6}.csv", s.t));
        write_field_csv(&mut create(&p)?, &s.field)?;
        report.output(p);
    }
    let final_path = ctx.path("final.csv");
    write_field_csv(&mut create(&final_path)?, &out.final_field)?;
    report.output(final_path);

    let finite = out.final_field.is_finite();
    report.check(Assertion::holds("finite", finite, "all values finite"));
    if matches!(sim.boundary, Boundary::Conservative) {
        report.check(Assertion::below("energy_drift", out.trace.max_energy_drift(), sim.energy_tolerance));
        let h0 = out.trace.h1[0];
        let hmax = out.trace.h1.iter().copied().fold(0.0, f64::max);
        let ratio = if h0 > 0.0 { hmax / h0 } else { 0.0 };
        report.check(Assertion::below("h1_growth", ratio, 2.0 + f64::EPSILON));
    }
    Ok(())
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| CliError::Config(format!("{what}: expected comma-separated numbers, got {s:?}")))
}

#[derive(Serialize)]
struct BranchSummary {
    j: usize,
    root_index: usize,
    points: usize,
    omega_first: f64,
    c_first: f64,
    omega_last: f64,
    c_last: f64,
    tangential: usize,
}

fn solitary_scan(ctx: &Ctx, report: &mut Report, m: Option<f64>, potential: Option<&str>, n: usize) -> Result<(), CliError> {
    if n == 0 {
        return Err(CliError::Config("omega-grid must be positive".into()));
    }
    let p = match (potential, &ctx.config) {
        (None, Some(cfg)) if m.is_none() => cfg.model.clone(),
        _ => {
            let mut u = vec![0.0];
            u.extend(parse_list(potential.unwrap_or("-0.5,0.25"), "potential")?);
            ModelParams::symmetric_polynomial(m.unwrap_or(1.0), u)?
        }
    };
    echo(report, &serde_json::json!({ "model": p, "omega_grid": n }));
    let omegas = gap_grid(p.m, n);
    let jobs: Vec<(usize, f64)> = (1..=2).flat_map(|j| omegas.iter().map(move |&w| (j, w))).collect();
    type Row = (usize, f64, usize, f64, f64, f64, bool);
    let rows: Vec<Vec<Row>> = jobs
        .par_iter()
        .map(|&(j, w)| -> Result<Vec<Row>, Error> {
            let r = amplitude_roots(&p, w, j)?;
            let h1 = profile_h1_norm(w, j, p.m)?;
            r.roots
                .iter()
                .zip(&r.tangential)
                .enumerate()
                .skip(1)
                .map(|(i, (&c, &tan))| Ok((j, w, i, c, amplitude_residual(&p, w, j, Complex64::new(c, 0.0))?, c * h1, tan)))
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let rows: Vec<Row> = rows.into_iter().flatten().collect();

    let csv_path = ctx.path("solitary_scan.csv");
    {
        use std::io::Write;
        let mut w = create(&csv_path)?;
        writeln!(w, "j,omega,root_index,C,residual,h1_norm")?;
        for r in &rows {
            writeln!(w, "{},{},{},{},{},{}", r.0, fmt_f64(r.1), r.2, fmt_f64(r.3), fmt_f64(r.4), fmt_f64(r.5))?;
        }
    }
    report.output(csv_path);

    let mut summary: Vec<BranchSummary> = Vec::new();
    for r in &rows {
        match summary.iter_mut().find(|b| b.j == r.0 && b.root_index == r.2) {
            Some(b) => {
                b.points += 1;
                b.omega_last = r.1;
                b.c_last = r.3;
                b.tangential += r.6 as usize;
            }
            None => summary.push(BranchSummary {
                j: r.0,
                root_index: r.2,
                points: 1,
                omega_first: r.1,
                c_first: r.3,
                omega_last: r.1,
                c_last: r.3,
                tangential: r.6 as usize,
            }),
        }
    }
    write_json(report, ctx.path("solitary_scan_summary.json"), &summary)?;
    let worst = rows.iter().map(|r| r.4).fold(0.0, f64::max);
    report.check(Assertion::below("branch_residual", worst, 1e-10));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn linear_verify(
    ctx: &Ctx,
    report: &mut Report,
    m: f64,
    a: &str,
    window: f64,
    transient: f64,
    grid: Grid,
    dt: f64,
) -> Result<(), CliError> {
    let a = parse_list(a, "a")?;
    let a: [f64; 2] = a
        .try_into()
        .map_err(|_| CliError::Config("--a needs two values".into()))?;
    let p = ModelParams::linear(m, a)?;
    let freqs = linear_frequencies(&p)?;
    let record_every = ((0.01 / dt).round() as usize).max(1);
    let cfg = ExperimentConfig {
        model: p.clone(),
        grid,
        time: time(dt, transient + window, record_every),
        boundary: sponge(grid),
        initial: InitialSpec::Gaussian {
            center: 0.0,
            width: 1.0,
            amplitude: 0.1,
            spinor: [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.5)],
            k0: 0.0,
        },
        diagnostics: DiagnosticsSection::default(),
    };
    echo(report, &cfg);
    let out = run(&cfg.sim_config(), &cfg.initial_field()?)?;
    let rep = trace_spectrum(&out.trace, (transient, transient + window), m, &cfg.spectrum_options())?;
    let spec_path = ctx.path("linear_spectrum.csv");
    write_spectrum_csv(&mut create(&spec_path)?, &rep)?;
    report.output(spec_path);
    let bin = 2.0 * std::f64::consts::PI / window;
    for j in 0..2 {
        let comp = &rep.components[j];
        if let Some(w) = freqs[j] {
            let measured = comp.dominant.unwrap_or(f64::NAN);
            report.check(Assertion::below(&format!("peak_offset_{}", j + 1), (measured - w).abs(), bin * (1.0 + 1e-9)));
            println!("component {}: peak {measured:.6}, predicted {w:.6}, bin {bin:.6}", j + 1);
        }
        report.check(Assertion::above(&format!("gap_mass_{}", j + 1), comp.gap_mass, 0.95));
    }
    Ok(())
}

fn attractor_test(ctx: &Ctx, report: &mut Report, plots: bool) -> Result<(), CliError> {
    let mut cfg = ctx.experiment(default_attractor);
    if matches!(cfg.boundary, Boundary::Conservative) {
        return Err(CliError::Config("attractor-test needs an absorbing boundary".into()));
    }
    let windows = cfg.windows();
    if windows.is_empty() {
        return Err(CliError::Config("no diagnostic window fits inside [0, T]".into()));
    }
    for w in &windows {
        if !cfg.time.snapshot_times.iter().any(|&t| (t - w.1).abs() < 1e-9) {
            cfg.time.snapshot_times.push(w.1);
        }
    }
    echo(report, &cfg);
    let sim = cfg.sim_config();
    let out = run(&sim, &cfg.initial_field()?)?;
    let opts = cfg.spectrum_options();
    let metrics = attraction_metrics(&out.trace, &out.snapshots, &cfg.model, &windows, sim.radius(), &opts)?;

    let trace_path = ctx.path("trace.csv");
    write_trace_csv(&mut create(&trace_path)?, &out.trace)?;
    report.output(trace_path);
    let plots = plots || cfg.diagnostics.plots;
    for (i, w) in windows.iter().enumerate() {
        let rep = trace_spectrum(&out.trace, *w, cfg.model.m, &opts)?;
        let p = ctx.path(&format!("spectrum_window{i}.csv"));
        write_spectrum_csv(&mut create(&p)?, &rep)?;
        report.output(p);
        if plots {
            let series: Vec<Series> = (0..2)
                .map(|j| Series {
                    label: if j == 0 { "power_1" } else { "power_2" },
                    points: rep.frequencies.iter().copied().zip(rep.components[j].power.iter().copied()).collect(),
                })
                .collect();
            let p = ctx.path(&format!("spectrum_window{i}.svg"));
            std::fs::write(&p, line_plot(&format!("trace spectrum, t in [{}, {}]", w.0, w.1), "omega", &series, true))?;
            report.output(p);
        }
    }
    let mpath = ctx.path("metrics.csv");
    write_metrics_csv(&mut create(&mpath)?, &metrics)?;
    report.output(mpath);
    if plots {
        let ends: Vec<f64> = metrics.iter().map(|m| m.window.1).collect();
        let series = vec![
            Series { label: "1 - gap_mass_1", points: ends.iter().zip(&metrics).map(|(&t, m)| (t, 1.0 - m.gap_mass[0])).collect() },
            Series { label: "flatness_1", points: ends.iter().zip(&metrics).map(|(&t, m)| (t, m.flatness[0])).collect() },
            Series { label: "flatness_2", points: ends.iter().zip(&metrics).map(|(&t, m)| (t, m.flatness[1])).collect() },
            Series { label: "fit_residual", points: ends.iter().zip(&metrics).map(|(&t, m)| (t, m.fit.residual)).collect() },
        ];
        let p = ctx.path("metrics.svg");
        std::fs::write(&p, line_plot("attraction metrics", "window end", &series, true))?;
        report.output(p);
    }

    for j in 0..2 {
        let gap: Vec<f64> = metrics.iter().map(|m| m.gap_mass[j]).collect();
        let flat: Vec<f64> = metrics.iter().map(|m| m.flatness[j]).collect();
        let k = j + 1;
        report.check(Assertion::holds(&format!("gap_mass_{k}_non_decreasing"), non_decreasing(&gap, 0.0), "non-decreasing"));
        report.check(Assertion::above(&format!("gap_mass_{k}_final"), gap[gap.len() - 1], 0.9));
        report.check(Assertion::holds(&format!("flatness_{k}_non_increasing"), non_increasing(&flat, 0.0), "non-increasing"));
        report.check(Assertion::below(&format!("flatness_{k}_final"), flat[flat.len() - 1], 0.1));
    }
    let res: Vec<f64> = metrics.iter().map(|m| m.fit.residual).collect();
    report.check(Assertion::holds("fit_residual_non_increasing", non_increasing(&res, 0.0), "non-increasing"));
    Ok(())
}

#[derive(Serialize)]
struct DuhamelSummary {
    points: [usize; 2],
    dt: [f64; 2],
    l2_difference: [f64; 2],
    ratio: f64,
    bessel_origin: f64,
}

fn duhamel_check(ctx: &Ctx, report: &mut Report, n: usize, l: f64, dt: f64, t_final: f64) -> Result<(), CliError> {
    let base = ctx.experiment(|| ExperimentConfig {
        model: ModelParams::standard(),
        grid: Grid::new(l, n).expect("checked below"),
        time: time(dt, t_final, 1),
        boundary: Boundary::Conservative,
        initial: packet(),
        diagnostics: DiagnosticsSection::default(),
    });
    let levels = [(Grid::new(l, n)?, dt), (Grid::new(l, 2 * n)?, 0.5 * dt)];
    echo(report, &base);
    let diffs: Vec<f64> = levels
        .par_iter()
        .map(|&(grid, dt)| -> Result<f64, Error> {
            let mut cfg = SimConfig::new(base.model.clone(), grid, dt, t_final);
            cfg.boundary = base.boundary;
            cfg.energy_tolerance = f64::INFINITY;
            let f = base.initial.build(&base.model, grid)?;
            let out = run(&cfg, &f)?;
            Ok(duhamel_solution(&cfg, &f, &out.trace)?.sub(&out.final_field).l2_norm())
        })
        .collect::<Result<_, _>>()?;
    let ratio = diffs[0] / diffs[1];
    let g0 = bessel_kernel(0.0, f64::MIN_POSITIVE, base.model.m);
    write_json(
        report,
        ctx.path("duhamel.json"),
        &DuhamelSummary {
            points: [n, 2 * n],
            dt: [dt, 0.5 * dt],
            l2_difference: [diffs[0], diffs[1]],
            ratio,
            bessel_origin: g0,
        },
    )?;
    report.check(Assertion::below("l2_difference", diffs[0], 1e-3));
    report.check(Assertion::at_least("refinement_ratio", ratio, 3.0));
    report.check(Assertion::holds("bessel_origin", g0 == 0.5, "G(0, 0+) = 1/2"));
    Ok(())
}

fn convergence_study(
    ctx: &Ctx,
    report: &mut Report,
    grid: Grid,
    dt: f64,
    levels: usize,
    t_final: f64,
) -> Result<(), CliError> {
    if levels < 3 {
        return Err(CliError::Config("convergence-study needs at least 3 levels".into()));
    }
    let base = ctx.experiment(|| ExperimentConfig {
        model: ModelParams::standard(),
        grid,
        time: time(dt, t_final, 1),
        boundary: Boundary::Conservative,
        initial: packet(),
        diagnostics: DiagnosticsSection::default(),
    });
    echo(report, &base);
    let f = base.initial.build(&base.model, grid)?;
    let dts: Vec<f64> = (0..levels).map(|i| dt / f64::powi(2.0, i as i32)).collect();
    let runs: Vec<(dirac_lab_core::SpinorField, f64)> = dts
        .par_iter()
        .map(|&h| -> Result<_, Error> {
            let mut cfg = SimConfig::new(base.model.clone(), grid, h, t_final);
            cfg.boundary = base.boundary;
            cfg.energy_tolerance = f64::INFINITY;
            cfg.record_every = ((0.05 / h).round() as usize).max(1);
            let out = run(&cfg, &f)?;
            let drift = out.trace.max_energy_drift();
            Ok((out.final_field, drift))
        })
        .collect::<Result<_, _>>()?;
    let diffs: Vec<f64> = runs.windows(2).map(|w| w[0].0.sub(&w[1].0).l2_norm()).collect();
    let orders: Vec<f64> = diffs.windows(2).map(|d| (d[0] / d[1]).log2()).collect();
    let path = ctx.path("convergence.csv");
    {
        use std::io::Write;
        let mut w = create(&path)?;
        writeln!(w, "dt,energy_drift,diff_to_next,order")?;
        for i in 0..levels {
            let d = diffs.get(i).copied().unwrap_or(f64::NAN);
            let o = orders.get(i).copied().unwrap_or(f64::NAN);
            writeln!(w, "{},{},{},{}", fmt_f64(dts[i]), fmt_f64(runs[i].1), fmt_f64(d), fmt_f64(o))?;
        }
    }
    report.output(path);
    report.check(Assertion::within("order", orders[orders.len() - 1], 1.8, 2.2));
    Ok(())
}
