//! Time evolution: exact free propagation in Fourier space, the point-coupled
//! nonlinear substep, Strang composition, the absorbing sponge, and the
//! integral-form (Duhamel) reconstruction used as an independent oracle.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    dirac_inverse_delta, local_h1, origin_value, weighted_spectral_sum, Grid, ModelParams,
    SpinorField, SpinorValue,
};
use crate::numerics::{bessel_j0, bessel_j1_over_z, simpson_weights};
use crate::spectral::Transform;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

type Mat2 = [[Complex64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Boundary {
    /// Periodic torus; energy is monitored.
    Conservative,
    /// Raised-cosine sponge of the given width next to `|x| = L`.
    Absorbing { width: f64, strength: f64 },
}

/// Integrator for the point system `dy/dt = i (beta/2) F(y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KickScheme {
    /// Closed form: `|y_j|` is conserved, so each component only rotates.
    #[default]
    Exact,
    /// Classical fourth-order Runge-Kutta.
    Rk4,
}

/// Discretisation of the point-source kernel `D_m^{-1} delta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKernel {
    /// `D_N^{-1} delta_N`: the grid Dirac operator inverted on the grid delta
    /// at the origin node. Together with the spectral energy this makes the
    /// semi-discrete system exactly Hamiltonian.
    #[default]
    Spectral,
    /// The closed form `(beta - alpha sgn x) e^{-m|x|} / 2` sampled on the nodes.
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub model: ModelParams,
    pub grid: Grid,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub boundary: Boundary,
    pub record_every: usize,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    /// Relative drift bound enforced in conservative mode.
    pub energy_tolerance: f64,
    /// Radius of the local `H^1` window; defaults to `min(5/m, L)`.
    #[serde(default)]
    pub local_radius: Option<f64>,
    #[serde(default)]
    pub kick: KickScheme,
    #[serde(default)]
    pub kernel: SourceKernel,
}

impl SimConfig {
    pub fn new(model: ModelParams, grid: Grid, dt: f64, t_final: f64) -> Self {
        Self {
            model,
            grid,
            dt,
            t_final,
            boundary: Boundary::Conservative,
            record_every: 1,
            snapshot_times: Vec::new(),
            energy_tolerance: 1e-6,
            local_radius: None,
            kick: KickScheme::Exact,
            kernel: SourceKernel::Spectral,
        }
    }

    /// Sponge with width `L/4` and strength 2.
    pub fn absorbing(mut self) -> Self {
        self.boundary = Boundary::Absorbing {
            width: 0.25 * self.grid.half_length(),
            strength: 2.0,
        };
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(Error::InvalidConfig(format!("T must be positive, got {}", self.t_final)));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidConfig("record_every must be at least 1".into()));
        }
        if let Boundary::Absorbing { width, strength } = self.boundary {
            let l = self.grid.half_length();
            if !(width > 0.0 && width < 0.5 * l) {
                return Err(Error::InvalidConfig(format!(
                    "absorbing width {width} must lie in (0, L/2) with L = {l}"
                )));
            }
            if !(strength.is_finite() && strength >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "absorbing strength must be nonnegative, got {strength}"
                )));
            }
        }
        let r = self.radius();
        if !(r > 0.0 && r <= self.grid.half_length()) {
            return Err(Error::RWindowTooLarge {
                r,
                half_length: self.grid.half_length(),
            });
        }
        Ok(())
    }

    pub fn radius(&self) -> f64 {
        self.local_radius
            .unwrap_or_else(|| (5.0 / self.model.m).min(self.grid.half_length()))
    }

    /// Number of steps, `T/dt` rounded to the nearest integer.
    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round().max(1.0) as usize
    }
}

/// Recorded point values and scalar diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TraceSeries {
    pub times: Vec<f64>,
    /// `psi(0, t)`.
    pub y: Vec<SpinorValue>,
    pub energy: Vec<f64>,
    pub l2: Vec<f64>,
    pub h1: Vec<f64>,
    pub h1_local: Vec<f64>,
}

impl TraceSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// A trace holding only times and point values (diagnostics set to NaN).
    pub fn from_samples(times: Vec<f64>, y: Vec<SpinorValue>) -> Result<Self> {
        if times.len() != y.len() {
            return Err(Error::LengthMismatch {
                expected: times.len(),
                got: y.len(),
            });
        }
        let n = times.len();
        Ok(Self {
            times,
            y,
            energy: vec![f64::NAN; n],
            l2: vec![f64::NAN; n],
            h1: vec![f64::NAN; n],
            h1_local: vec![f64::NAN; n],
        })
    }

    /// Samples of component `j` (zero based).
    pub fn component(&self, j: usize) -> Vec<Complex64> {
        self.y.iter().map(|v| v[j]).collect()
    }

    /// Index range of samples with `t0 <= t <= t1` (small tolerance at the ends).
    pub fn window(&self, t0: f64, t1: f64) -> std::ops::Range<usize> {
        let eps = 1e-9 * (1.0 + t1.abs());
        let start = self.times.partition_point(|&t| t < t0 - eps);
        let end = self.times.partition_point(|&t| t <= t1 + eps);
        start..end.max(start)
    }

    /// Largest relative energy excursion `|H(t) - H(0)| / max(1, |H(0)|)`.
    pub fn max_energy_drift(&self) -> f64 {
        let Some(&h0) = self.energy.first() else {
            return 0.0;
        };
        let scale = h0.abs().max(1.0);
        self.energy
            .iter()
            .map(|h| (h - h0).abs() / scale)
            .fold(0.0, f64::max)
    }
}

/// Snapshot of the field at a requested time.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub field: SpinorField,
}

/// Current time, field and trace of a simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub field: SpinorField,
    pub trace: TraceSeries,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub final_field: SpinorField,
    pub trace: TraceSeries,
    pub snapshots: Vec<Snapshot>,
    /// Per-step source integrals `int F(psi(0, s)) ds`, when recording was enabled.
    pub impulses: Option<Vec<SpinorValue>>,
}

/// `e^{-i H t}` for the symbol `H(k) = ik alpha + m beta`.
///
/// The Nyquist bin has no partner `-k`, so there the symbol is taken as
/// `w(k) beta`: same modulus, no odd part. This keeps the grid kernel's
/// value at the origin a multiple of `beta`.
fn free_matrix(grid: &Grid, i: usize, m: f64, t: f64) -> Mat2 {
    let k = grid.wavenumber(i);
    let w = (k * k + m * m).sqrt();
    let (s, c) = (w * t).sin_cos();
    if i == grid.len() / 2 {
        return [
            [Complex64::new(c, -s), ZERO],
            [ZERO, Complex64::new(c, s)],
        ];
    }
    let sw = s / w;
    [
        [Complex64::new(c, -sw * m), Complex64::new(sw * k, 0.0)],
        [Complex64::new(-sw * k, 0.0), Complex64::new(c, sw * m)],
    ]
}

fn apply_mat(a: &Mat2, v: [Complex64; 2]) -> [Complex64; 2] {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

/// Precomputed per-mode free propagators for a fixed time increment.
#[derive(Debug, Clone)]
struct FreeFactors(Vec<Mat2>);

impl FreeFactors {
    fn new(grid: &Grid, m: f64, t: f64) -> Self {
        Self(
            (0..grid.len())
                .map(|i| free_matrix(grid, i, m, t))
                .collect(),
        )
    }

    fn apply(&self, coeffs: &mut [Vec<Complex64>; 2]) {
        let [c1, c2] = coeffs;
        for ((a, b), mat) in c1.iter_mut().zip(c2.iter_mut()).zip(&self.0) {
            let [x, y] = apply_mat(mat, [*a, *b]);
            *a = x;
            *b = y;
        }
    }
}

/// Spectral machinery shared by the split-step solver and the integral oracle.
#[derive(Debug, Clone)]
pub struct Propagator {
    grid: Grid,
    model: ModelParams,
    scheme: KickScheme,
    transform: Transform,
    /// FFT of the even and odd kernel profiles `g_e`, `g_o`; the kernel
    /// matrix is `[[g_e, -g_o], [g_o, -g_e]]`.
    kernel_hat: [Vec<Complex64>; 2],
    /// `g_e` at the origin node, so that the kernel there is `gain * beta`.
    gain: f64,
}

impl Propagator {
    pub fn new(grid: Grid, model: ModelParams, scheme: KickScheme, kernel: SourceKernel) -> Self {
        let transform = Transform::new(grid.len());
        let kernel_hat = match kernel {
            SourceKernel::Sampled => {
                let sampled = dirac_inverse_delta(grid, model.m);
                let to_c = |v: &[f64]| v.iter().map(|&r| Complex64::new(r, 0.0)).collect::<Vec<_>>();
                let mut even = to_c(sampled.even());
                let mut odd = to_c(sampled.odd());
                transform.forward(&mut even);
                transform.forward(&mut odd);
                [even, odd]
            }
            SourceKernel::Spectral => spectral_kernel(&grid, model.m),
        };
        let gain = origin_value(&kernel_hat)[0].re;
        Self {
            grid,
            model,
            scheme,
            transform,
            kernel_hat,
            gain,
        }
    }

    /// The kernel at the origin node is `gain * beta`; `1/2` in the continuum.
    pub fn origin_gain(&self) -> f64 {
        self.gain
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn model(&self) -> &ModelParams {
        &self.model
    }

    pub fn to_spectral(&self, field: &SpinorField) -> [Vec<Complex64>; 2] {
        [
            self.transform.forward_copy(field.component(0)),
            self.transform.forward_copy(field.component(1)),
        ]
    }

    pub fn to_physical(&self, coeffs: &[Vec<Complex64>; 2]) -> SpinorField {
        SpinorField::from_components(
            self.grid,
            self.transform.inverse_copy(&coeffs[0]),
            self.transform.inverse_copy(&coeffs[1]),
        )
        .expect("same grid")
    }

    /// `e^{-i D_m t}` applied in place to FFT coefficients.
    pub fn free_evolve(&self, coeffs: &mut [Vec<Complex64>; 2], t: f64) {
        FreeFactors::new(&self.grid, self.model.m, t).apply(coeffs);
    }

    /// Point value after time `dt` of `dy/dt = i g beta F(y)` with `g` the origin gain.
    pub fn point_flow(&self, y: SpinorValue, dt: f64) -> SpinorValue {
        let g = self.gain;
        match self.scheme {
            KickScheme::Exact => {
                let mut out = y;
                for (j, sigma) in [(0usize, 1.0), (1, -1.0)] {
                    let a = self.model.coupling(j, y[j].norm_sqr());
                    out[j] = y[j] * Complex64::from_polar(1.0, sigma * g * a * dt);
                }
                out
            }
            KickScheme::Rk4 => {
                let rhs = |v: SpinorValue| {
                    let f = self.model.nonlinearity(v);
                    SpinorValue::new(g * I * f[0], -g * I * f[1])
                };
                let h = Complex64::new(dt, 0.0);
                let half = Complex64::new(0.5 * dt, 0.0);
                let k1 = rhs(y);
                let k2 = rhs(y + k1.scale(half));
                let k3 = rhs(y + k2.scale(half));
                let k4 = rhs(y + k3.scale(h));
                let sum = k1 + k2.scale(Complex64::new(2.0, 0.0)) + k3.scale(Complex64::new(2.0, 0.0)) + k4;
                y + sum.scale(Complex64::new(dt / 6.0, 0.0))
            }
        }
    }

    /// Adds `i G(x) v` to the field given by `coeffs`.
    fn add_source(&self, coeffs: &mut [Vec<Complex64>; 2], v: SpinorValue) {
        let (a, b) = (I * v[0], I * v[1]);
        let [ge, go] = &self.kernel_hat;
        let [c1, c2] = coeffs;
        for i in 0..self.grid.len() {
            c1[i] += ge[i] * a - go[i] * b;
            c2[i] += go[i] * a - ge[i] * b;
        }
    }

    /// The nonlinear substep `i psi_t = -G(x) F(psi(0, t))` over `dt`;
    /// returns `int F(psi(0, s)) ds` over the substep.
    ///
    /// The point value evolves autonomously; since `G(0) = g beta`,
    /// `int F(y) ds = -(i/g) beta (y(dt) - y(0))`, and the field receives
    /// `i G(x)` times that integral.
    pub fn kick(&self, coeffs: &mut [Vec<Complex64>; 2], dt: f64, t: f64) -> Result<SpinorValue> {
        let y0 = origin_value(coeffs);
        let y1 = self.point_flow(y0, dt);
        if !y1.is_finite() {
            return Err(Error::NonFiniteValue { t });
        }
        let d = y1 - y0;
        let c = I / self.gain;
        let integral = SpinorValue::new(-c * d[0], c * d[1]);
        self.add_source(coeffs, integral);
        Ok(integral)
    }

    /// Energy, `L^2` and `H^1` norms from FFT coefficients.
    fn global_diagnostics(&self, coeffs: &[Vec<Complex64>; 2]) -> (f64, f64, f64) {
        let q = weighted_spectral_sum(&self.grid, self.model.m, coeffs);
        let y = origin_value(coeffs);
        let l2sq: f64 = coeffs.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>()
            * self.grid.dx()
            / self.grid.len() as f64;
        (0.5 * q + self.model.potential(y), l2sq.sqrt(), q.sqrt())
    }

    fn local_norm(&self, coeffs: &[Vec<Complex64>; 2], r: f64) -> f64 {
        let field = self.to_physical(coeffs);
        let mut d = coeffs.clone();
        for c in d.iter_mut() {
            for (i, z) in c.iter_mut().enumerate() {
                *z *= I * self.grid.wavenumber(i);
            }
        }
        local_h1(&field, &self.to_physical(&d), self.model.m, r)
    }
}

/// FFT coefficients of `D_N^{-1} delta_N`, where `delta_N` is `1/dx` at the
/// origin node: per mode `H(k)^{-1} (-1)^i / dx`.
fn spectral_kernel(grid: &Grid, m: f64) -> [Vec<Complex64>; 2] {
    let n = grid.len();
    let dx = grid.dx();
    let mut even = vec![ZERO; n];
    let mut odd = vec![ZERO; n];
    for i in 0..n {
        let k = grid.wavenumber(i);
        let w2 = k * k + m * m;
        let phase = Grid::origin_phase(i) / dx;
        if i == n / 2 {
            even[i] = Complex64::new(phase / w2.sqrt(), 0.0);
        } else {
            even[i] = Complex64::new(phase * m / w2, 0.0);
            odd[i] = Complex64::new(0.0, -phase * k / w2);
        }
    }
    [even, odd]
}

/// Per-step sponge profile: 1 on `|x| < L - w`, raised-cosine down to
/// `e^{-strength dt}` at `|x| = L`.
pub fn absorbing_mask(grid: &Grid, width: f64, strength: f64, dt: f64) -> Vec<f64> {
    let l = grid.half_length();
    let floor = 1.0 - (-strength * dt).exp();
    grid.xs()
        .into_iter()
        .map(|x| {
            let d = x.abs() - (l - width);
            if d <= 0.0 {
                1.0
            } else {
                let ramp = 0.5 * (1.0 - (std::f64::consts::PI * d / width).cos());
                1.0 - floor * ramp
            }
        })
        .collect()
}

/// A running simulation owning its state in Fourier space.
#[derive(Debug, Clone)]
pub struct Simulation {
    cfg: SimConfig,
    prop: Propagator,
    half: FreeFactors,
    mask: Option<Vec<f64>>,
    coeffs: [Vec<Complex64>; 2],
    step: usize,
    trace: TraceSeries,
    snapshots: Vec<Snapshot>,
    snapshot_steps: Vec<(usize, f64)>,
    radius: f64,
    impulses: Option<Vec<SpinorValue>>,
}

impl Simulation {
    pub fn new(cfg: SimConfig, initial: &SpinorField) -> Result<Self> {
        cfg.validate()?;
        if initial.grid() != &cfg.grid {
            return Err(Error::InvalidConfig("initial field grid differs from config grid".into()));
        }
        if !initial.is_finite() {
            return Err(Error::NonFiniteValue { t: 0.0 });
        }
        let prop = Propagator::new(cfg.grid, cfg.model.clone(), cfg.kick, cfg.kernel);
        let half = FreeFactors::new(&cfg.grid, cfg.model.m, 0.5 * cfg.dt);
        let mask = match cfg.boundary {
            Boundary::Conservative => None,
            Boundary::Absorbing { width, strength } => {
                Some(absorbing_mask(&cfg.grid, width, strength, cfg.dt))
            }
        };
        let coeffs = prop.to_spectral(initial);
        let mut snapshot_steps: Vec<(usize, f64)> = cfg
            .snapshot_times
            .iter()
            .filter(|&&t| t >= 0.0 && t <= cfg.t_final * (1.0 + 1e-12))
            .map(|&t| ((t / cfg.dt).round() as usize, t))
            .collect();
        snapshot_steps.sort_by_key(|s| s.0);
        let radius = cfg.radius();
        let mut sim = Self {
            cfg,
            prop,
            half,
            mask,
            coeffs,
            step: 0,
            trace: TraceSeries::default(),
            snapshots: Vec::new(),
            snapshot_steps,
            radius,
            impulses: None,
        };
        sim.record();
        sim.take_snapshots();
        Ok(sim)
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    /// Keep the per-step source integrals so that the source-driven part of
    /// the solution can be replayed (see [`driven_solution`]).
    pub fn record_impulses(mut self) -> Self {
        self.impulses.get_or_insert_with(Vec::new);
        self
    }

    pub fn propagator(&self) -> &Propagator {
        &self.prop
    }

    pub fn t(&self) -> f64 {
        self.step as f64 * self.cfg.dt
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    pub fn field(&self) -> SpinorField {
        self.prop.to_physical(&self.coeffs)
    }

    pub fn origin_value(&self) -> SpinorValue {
        origin_value(&self.coeffs)
    }

    pub fn trace(&self) -> &TraceSeries {
        &self.trace
    }

    pub fn state(&self) -> SimState {
        SimState {
            t: self.t(),
            field: self.field(),
            trace: self.trace.clone(),
        }
    }

    /// One Strang step: half free, kick, half free, then the sponge.
    pub fn step(&mut self) -> Result<()> {
        let t = self.t();
        self.half.apply(&mut self.coeffs);
        let impulse = self.prop.kick(&mut self.coeffs, self.cfg.dt, t)?;
        if let Some(list) = &mut self.impulses {
            list.push(impulse);
        }
        self.half.apply(&mut self.coeffs);
        if let Some(mask) = &self.mask {
            apply_mask(&self.prop.transform, &mut self.coeffs, mask);
        }
        self.step += 1;
        let t = self.t();
        if !origin_value(&self.coeffs).is_finite() {
            return Err(Error::NonFiniteValue { t });
        }
        if self.step % self.cfg.record_every == 0 {
            self.record();
            if self.cfg.boundary == Boundary::Conservative {
                let drift = self.trace.max_energy_drift();
                let last = *self.trace.energy.last().expect("recorded");
                if !last.is_finite() {
                    return Err(Error::NonFiniteValue { t });
                }
                if drift > self.cfg.energy_tolerance {
                    return Err(Error::EnergyDriftExceeded {
                        drift,
                        tolerance: self.cfg.energy_tolerance,
                        t,
                    });
                }
            }
        }
        self.take_snapshots();
        Ok(())
    }

    fn record(&mut self) {
        let (energy, l2, h1) = self.prop.global_diagnostics(&self.coeffs);
        let local = self.prop.local_norm(&self.coeffs, self.radius);
        self.trace.times.push(self.t());
        self.trace.y.push(origin_value(&self.coeffs));
        self.trace.energy.push(energy);
        self.trace.l2.push(l2);
        self.trace.h1.push(h1);
        self.trace.h1_local.push(local);
    }

    fn take_snapshots(&mut self) {
        while let Some(&(s, t)) = self.snapshot_steps.first() {
            if s > self.step {
                break;
            }
            if s == self.step {
                self.snapshots.push(Snapshot { t, field: self.field() });
            }
            self.snapshot_steps.remove(0);
        }
    }

    /// Steps until `T`.
    pub fn run_to_end(mut self) -> Result<RunOutput> {
        let n = self.cfg.steps();
        while self.step < n {
            self.step()?;
        }
        Ok(RunOutput {
            final_field: self.field(),
            trace: self.trace,
            snapshots: self.snapshots,
            impulses: self.impulses,
        })
    }
}

fn apply_mask(transform: &Transform, coeffs: &mut [Vec<Complex64>; 2], mask: &[f64]) {
    for c in coeffs.iter_mut() {
        transform.inverse(c);
        for (z, w) in c.iter_mut().zip(mask) {
            *z *= *w;
        }
        transform.forward(c);
    }
}

/// Replays recorded per-step source integrals on zero initial data with the
/// same Strang structure and boundary as `cfg`, giving the source-driven part
/// `psi_S` of a run. For a linear boundary treatment `psi = phi + psi_S`
/// with `phi` the free evolution of the initial data.
pub fn driven_solution(cfg: &SimConfig, impulses: &[SpinorValue]) -> Result<SpinorField> {
    cfg.validate()?;
    let prop = Propagator::new(cfg.grid, cfg.model.clone(), cfg.kick, cfg.kernel);
    let half = FreeFactors::new(&cfg.grid, cfg.model.m, 0.5 * cfg.dt);
    let mask = match cfg.boundary {
        Boundary::Conservative => None,
        Boundary::Absorbing { width, strength } => Some(absorbing_mask(&cfg.grid, width, strength, cfg.dt)),
    };
    let mut coeffs = [vec![ZERO; cfg.grid.len()], vec![ZERO; cfg.grid.len()]];
    for &v in impulses {
        half.apply(&mut coeffs);
        prop.add_source(&mut coeffs, v);
        half.apply(&mut coeffs);
        if let Some(mask) = &mask {
            apply_mask(&prop.transform, &mut coeffs, mask);
        }
    }
    Ok(prop.to_physical(&coeffs))
}

/// `e^{-i D_m dt} f`, exact per Fourier mode.
pub fn free_step(f: &SpinorField, dt: f64, p: &ModelParams) -> SpinorField {
    let prop = Propagator::new(*f.grid(), p.clone(), KickScheme::Exact, SourceKernel::Spectral);
    let mut c = prop.to_spectral(f);
    prop.free_evolve(&mut c, dt);
    prop.to_physical(&c)
}

/// The nonlinear substep over `dt` with the given point integrator.
pub fn point_kick(
    f: &SpinorField,
    dt: f64,
    p: &ModelParams,
    scheme: KickScheme,
    kernel: SourceKernel,
) -> Result<SpinorField> {
    let prop = Propagator::new(*f.grid(), p.clone(), scheme, kernel);
    let mut c = prop.to_spectral(f);
    prop.kick(&mut c, dt, 0.0)?;
    Ok(prop.to_physical(&c))
}

/// Advances `state` by one Strang step of `cfg`. Builds the spectral
/// machinery on every call; long runs should use [`Simulation`].
pub fn strang_step(state: SimState, cfg: &SimConfig) -> Result<SimState> {
    let mut sim = Simulation::new(cfg.clone(), &state.field)?;
    sim.step = (state.t / cfg.dt).round() as usize;
    let mut trace = state.trace;
    let before = sim.trace.len();
    sim.step()?;
    if sim.trace.len() > before && sim.step % cfg.record_every == 0 {
        let k = sim.trace.len() - 1;
        trace.times.push(sim.trace.times[k]);
        trace.y.push(sim.trace.y[k]);
        trace.energy.push(sim.trace.energy[k]);
        trace.l2.push(sim.trace.l2[k]);
        trace.h1.push(sim.trace.h1[k]);
        trace.h1_local.push(sim.trace.h1_local[k]);
    }
    Ok(SimState {
        t: sim.t(),
        field: sim.field(),
        trace,
    })
}

/// Runs the split-step solver from `initial` to `T`.
pub fn run(cfg: &SimConfig, initial: &SpinorField) -> Result<RunOutput> {
    Simulation::new(cfg.clone(), initial)?.run_to_end()
}

/// Reconstructs `psi(T)` from the integral representation
/// `psi(T) = e^{-i D T} psi_0 + i int_0^T e^{-i D (T - s)} G F(y(s)) ds`
/// with `y` taken from a recorded trace. Each Fourier mode is propagated
/// exactly; the time integral uses composite Simpson weights.
pub fn duhamel_solution(cfg: &SimConfig, initial: &SpinorField, trace: &TraceSeries) -> Result<SpinorField> {
    let t_final = cfg.t_final;
    let n = trace.len();
    if n < 3 {
        return Err(Error::TraceResolutionTooCoarse(format!(
            "{n} samples, at least 3 required"
        )));
    }
    let h = (trace.times[n - 1] - trace.times[0]) / (n - 1) as f64;
    let uniform = trace
        .times
        .windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.max(1e-300));
    if !uniform {
        return Err(Error::TraceResolutionTooCoarse("samples are not uniformly spaced".into()));
    }
    if trace.times[0].abs() > 1e-12 || (trace.times[n - 1] - t_final).abs() > 1e-9 * t_final.max(1.0) {
        return Err(Error::TraceResolutionTooCoarse(format!(
            "trace covers [{}, {}], expected [0, {t_final}]",
            trace.times[0],
            trace.times[n - 1]
        )));
    }
    if h * cfg.model.m > 0.05 {
        return Err(Error::TraceResolutionTooCoarse(format!(
            "sample spacing {h} exceeds 0.05/m"
        )));
    }
    let prop = Propagator::new(cfg.grid, cfg.model.clone(), cfg.kick, cfg.kernel);
    let mut coeffs = prop.to_spectral(initial);
    prop.free_evolve(&mut coeffs, t_final);

    let w = simpson_weights(n, h);
    let forces: Vec<SpinorValue> = trace.y.iter().map(|&y| cfg.model.nonlinearity(y)).collect();
    let m = cfg.model.m;
    let [ge, go] = &prop.kernel_hat;
    let [c1, c2] = &mut coeffs;
    for i in 0..cfg.grid.len() {
        let mut acc = [ZERO; 2];
        for (s, (f, wt)) in trace.times.iter().zip(forces.iter().zip(&w)) {
            let src = [
                ge[i] * f[0] - go[i] * f[1],
                go[i] * f[0] - ge[i] * f[1],
            ];
            let v = apply_mat(&free_matrix(&cfg.grid, i, m, t_final - s), src);
            acc[0] += *wt * v[0];
            acc[1] += *wt * v[1];
        }
        c1[i] += I * acc[0];
        c2[i] += I * acc[1];
    }
    Ok(prop.to_physical(&coeffs))
}

/// Retarded Klein-Gordon kernel `theta(t - |x|) J_0(m sqrt(t^2 - x^2)) / 2`,
/// taking the value `1/2` on the light cone.
pub fn bessel_kernel(x: f64, t: f64, m: f64) -> f64 {
    if t <= 0.0 || x.abs() > t {
        return 0.0;
    }
    0.5 * bessel_j0(m * ((t - x) * (t + x)).max(0.0).sqrt())
}

/// `(e^{-i D_m t} psi_0)(x)` from the Bessel representation
/// `e^{-i D t} = (d/dt - i D) K(t)` with `K` the kernel above, by Simpson
/// quadrature with `nodes` points on the light cone `[x - t, x + t]`.
/// `psi0` must be smooth; `dpsi0` is its derivative.
pub fn bessel_free_value(
    psi0: impl Fn(f64) -> SpinorValue,
    x: f64,
    t: f64,
    m: f64,
    nodes: usize,
) -> SpinorValue {
    if t == 0.0 {
        return psi0(x);
    }
    let n = if nodes % 2 == 0 { nodes + 1 } else { nodes.max(3) };
    let h = 2.0 * t / (n - 1) as f64;
    let w = simpson_weights(n, h);
    // K * psi0, d/dt (K * psi0), d/dx (K * psi0)
    let mut conv = [ZERO; 2];
    let mut dt_conv = [ZERO; 2];
    let mut dx_conv = [ZERO; 2];
    for (i, wi) in w.iter().enumerate() {
        let y = x - t + i as f64 * h;
        let r = x - y;
        let z = m * ((t - r) * (t + r)).max(0.0).sqrt();
        let v = psi0(y);
        let j0 = 0.5 * bessel_j0(z);
        let j1z = 0.5 * m * m * bessel_j1_over_z(z);
        for c in 0..2 {
            conv[c] += *wi * j0 * v[c];
            dt_conv[c] -= *wi * j1z * t * v[c];
            dx_conv[c] += *wi * j1z * r * v[c];
        }
    }
    let (plus, minus) = (psi0(x + t), psi0(x - t));
    for c in 0..2 {
        dt_conv[c] += 0.5 * (plus[c] + minus[c]);
    }
    // boundary terms of d/dx: the kernel equals 1/2 on both ends
    dx_conv[0] += 0.5 * (plus[0] - minus[0]);
    dx_conv[1] += 0.5 * (plus[1] - minus[1]);
    // D u = (u_2' + m u_1, -u_1' - m u_2)
    let d = [dx_conv[1] + m * conv[0], -dx_conv[0] - m * conv[1]];
    SpinorValue::new(dt_conv[0] - I * d[0], dt_conv[1] - I * d[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{dirac_symbol, energy, norms};
    use crate::solitary::{amplitude_roots, solitary_field, SolitaryParams};

    fn gaussian(grid: Grid, amp: f64) -> SpinorField {
        SpinorField::from_fn(grid, |x| {
            let g = amp * (-x * x).exp();
            SpinorValue::new(Complex64::new(g, 0.0), Complex64::new(0.3 * g, 0.5 * g * x))
        })
    }

    #[test]
    fn zero_mode_rotates() {
        let p = ModelParams::standard();
        let grid = Grid::new(10.0, 16).unwrap();
        let f = SpinorField::from_fn(grid, |_| SpinorValue::new(Complex64::new(1.0, 0.0), ZERO));
        let g = free_step(&f, 0.7, &p);
        let e = Complex64::from_polar(1.0, -0.7);
        for n in 0..16 {
            assert!((g.at(n)[0] - e).norm() < 1e-13);
            assert!(g.at(n)[1].norm() < 1e-13);
        }
    }

    #[test]
    fn plane_wave_eigenvector() {
        let p = ModelParams::standard();
        let grid = Grid::new(8.0, 64).unwrap();
        let k = grid.wavenumber(3);
        let w = (k * k + 1.0).sqrt();
        // eigenvector of [[m, ik], [-ik, -m]] for +w
        let v = [Complex64::new(1.0 + w, 0.0), -I * k];
        let h = dirac_symbol(k, 1.0);
        let hv = apply_mat(&h, v);
        assert!((hv[0] - w * v[0]).norm() < 1e-12 && (hv[1] - w * v[1]).norm() < 1e-12);
        let f = SpinorField::from_fn(grid, |x| {
            let e = Complex64::from_polar(1.0, k * x);
            SpinorValue::new(e * v[0], e * v[1])
        });
        let t = 1.3;
        let g = free_step(&f, t, &p);
        for n in 0..64 {
            let e = Complex64::from_polar(1.0, k * grid.x(n) - w * t);
            assert!((g.at(n)[0] - e * v[0]).norm() < 1e-12);
            assert!((g.at(n)[1] - e * v[1]).norm() < 1e-12);
        }
    }

    #[test]
    fn free_step_unitary_and_semigroup() {
        let p = ModelParams::standard();
        let grid = Grid::new(20.0, 256).unwrap();
        let f = gaussian(grid, 1.0);
        let g = free_step(&f, 0.37, &p);
        assert!((g.l2_norm() - f.l2_norm()).abs() < 1e-12);
        let mut h = f.clone();
        for _ in 0..5 {
            h = free_step(&h, 0.1, &p);
        }
        let once = free_step(&f, 0.5, &p);
        assert!(h.sub(&once).sup_norm() < 1e-12);
    }

    #[test]
    fn zero_field_unchanged_by_kick() {
        let p = ModelParams::standard();
        let grid = Grid::new(10.0, 64).unwrap();
        let f = SpinorField::zeros(grid);
        assert_eq!(point_kick(&f, 0.1, &p, KickScheme::Rk4, SourceKernel::Sampled).unwrap(), f);
        assert_eq!(point_kick(&f, 0.1, &p, KickScheme::Exact, SourceKernel::Spectral).unwrap(), f);
    }

    #[test]
    fn linear_kick_matches_closed_form() {
        let p = ModelParams::linear(1.0, [1.0, 0.6]).unwrap();
        let grid = Grid::new(10.0, 128).unwrap();
        let f = gaussian(grid, 0.8);
        let y0 = f.value_at_origin();
        let dt = 0.05;
        for scheme in [KickScheme::Exact, KickScheme::Rk4] {
            let g = point_kick(&f, dt, &p, scheme, SourceKernel::Sampled).unwrap();
            let y = g.value_at_origin();
            let e1 = y0[0] * Complex64::from_polar(1.0, 0.5 * dt);
            let e2 = y0[1] * Complex64::from_polar(1.0, -0.3 * dt);
            let tol = if scheme == KickScheme::Exact { 1e-12 } else { 1e-9 };
            assert!((y[0] - e1).norm() < tol && (y[1] - e2).norm() < tol, "{scheme:?}");
        }
    }

    #[test]
    fn rk4_kick_converges_to_exact() {
        let p = ModelParams::standard();
        let grid = Grid::new(10.0, 64).unwrap();
        let prop_e = Propagator::new(grid, p.clone(), KickScheme::Exact, SourceKernel::Sampled);
        let prop_r = Propagator::new(grid, p.clone(), KickScheme::Rk4, SourceKernel::Sampled);
        let y = SpinorValue::new(Complex64::new(0.9, 0.3), Complex64::new(-0.4, 1.1));
        let err = |dt: f64| (prop_e.point_flow(y, dt) - prop_r.point_flow(y, dt)).norm();
        let (e1, e2) = (err(0.2), err(0.1));
        let order = (e1 / e2).log2();
        assert!(order > 4.5, "local order {order}");
        // two half kicks against one full kick
        let split = |prop: &Propagator, dt: f64| {
            (prop.point_flow(prop.point_flow(y, dt / 2.0), dt / 2.0) - prop.point_flow(y, dt)).norm()
        };
        assert!(split(&prop_e, 0.2) < 1e-15);
        let r = split(&prop_r, 0.2) / split(&prop_r, 0.1);
        assert!(r > 20.0, "half-kick ratio {r}");
    }

    #[test]
    fn kick_updates_origin_consistently() {
        let p = ModelParams::standard();
        let grid = Grid::new(10.0, 128).unwrap();
        let f = gaussian(grid, 1.2);
        for kernel in [SourceKernel::Spectral, SourceKernel::Sampled] {
            let prop = Propagator::new(grid, p.clone(), KickScheme::Exact, kernel);
            let g = point_kick(&f, 0.3, &p, KickScheme::Exact, kernel).unwrap();
            let expect = prop.point_flow(f.value_at_origin(), 0.3);
            assert!((g.value_at_origin() - expect).norm() < 1e-13);
        }
    }

    #[test]
    fn mask_examples() {
        let grid = Grid::new(20.0, 256).unwrap();
        let m = absorbing_mask(&grid, 5.0, 0.0, 1e-3);
        assert!(m.iter().all(|&v| v == 1.0));
        let m = absorbing_mask(&grid, 5.0, 3.0, 1e-2);
        assert!((m[0] - (-0.03f64).exp()).abs() < 1e-15);
        assert_eq!(m[grid.origin_index()], 1.0);
        assert!(m.iter().all(|&v| v <= 1.0 && v >= (-0.03f64).exp() - 1e-15));
    }

    #[test]
    fn sponge_absorbs_outgoing_packet() {
        let p = ModelParams::linear(1.0, [0.0, 0.0]).unwrap();
        let grid = Grid::new(40.0, 1024).unwrap();
        let k0 = 3.0;
        let w = (k0 * k0 + 1.0f64).sqrt();
        let v = [Complex64::new(1.0 + w, 0.0), -I * k0];
        let f = SpinorField::from_fn(grid, |x| {
            let e = Complex64::from_polar((-(x - 10.0).powi(2) / 4.0).exp(), k0 * x);
            SpinorValue::new(e * v[0], e * v[1])
        });
        let cfg = SimConfig {
            dt: 1e-2,
            ..SimConfig::new(p, grid, 1e-2, 100.0)
        }
        .absorbing();
        let out = run(&cfg, &f).unwrap();
        let ratio = out.final_field.l2_norm() / f.l2_norm();
        assert!(ratio < 1e-3, "remaining fraction {ratio}");
    }

    #[test]
    fn zero_initial_data_stays_zero() {
        let p = ModelParams::standard();
        let grid = Grid::new(10.0, 64).unwrap();
        let cfg = SimConfig::new(p.clone(), grid, 1e-2, 0.5);
        let out = run(&cfg, &SpinorField::zeros(grid)).unwrap();
        assert_eq!(out.final_field.sup_norm(), 0.0);
        assert!(out.trace.energy.iter().all(|&e| e == 0.0));
        assert_eq!(out.trace.len(), 51);
    }

    #[test]
    fn strang_step_matches_simulation() {
        let p = ModelParams::standard();
        let grid = Grid::new(10.0, 128).unwrap();
        let f = gaussian(grid, 1.0);
        let cfg = SimConfig::new(p, grid, 1e-2, 0.02);
        let s0 = SimState {
            t: 0.0,
            field: f.clone(),
            trace: TraceSeries::default(),
        };
        let s1 = strang_step(s0, &cfg).unwrap();
        let s2 = strang_step(s1, &cfg).unwrap();
        let out = run(&cfg, &f).unwrap();
        assert!((s2.t - 0.02).abs() < 1e-15);
        assert!(s2.field.sub(&out.final_field).sup_norm() < 1e-13);
        assert_eq!(s2.trace.len(), 2);
    }

    #[test]
    fn solitary_wave_is_stationary_in_modulus() {
        // The sampled profile has a kink at the origin, so the grid wave is
        // stationary only up to O(dx); the deviation must shrink with N.
        let p = ModelParams::standard();
        let c = amplitude_roots(&p, 0.9, 1).unwrap().roots[1];
        let sp = SolitaryParams::new(1.0, [0.9, -0.9], [Complex64::new(c, 0.0), ZERO]).unwrap();
        let dev = |n: usize| {
            let grid = Grid::new(40.0, n).unwrap();
            let f = solitary_field(&sp, grid, 0.0);
            let mut cfg = SimConfig::new(p.clone(), grid, 1e-2, 2.0);
            cfg.energy_tolerance = 1e-4;
            let out = run(&cfg, &f).unwrap();
            assert!((energy(&f, &p) - out.trace.energy[0]).abs() < 1e-12);
            let y0 = out.trace.y[0][0].norm();
            out.trace.y.iter().map(|y| (y[0].norm() - y0).abs()).fold(0.0, f64::max)
        };
        let (coarse, fine) = (dev(1024), dev(4096));
        assert!(fine < 2e-3, "modulus deviation {fine}");
        assert!(fine < coarse / 3.0, "{coarse} -> {fine}");
    }

    #[test]
    fn trace_norms_match_model_norms() {
        let p = ModelParams::standard();
        let grid = Grid::new(10.0, 128).unwrap();
        let f = gaussian(grid, 1.0);
        let cfg = SimConfig::new(p.clone(), grid, 1e-2, 0.01);
        let sim = Simulation::new(cfg, &f).unwrap();
        let n = norms(&f, 1.0, Some(5.0)).unwrap();
        let tr = sim.trace();
        assert!((tr.l2[0] - n.l2).abs() < 1e-12);
        assert!((tr.h1[0] - n.h1).abs() < 1e-12);
        assert!((tr.h1_local[0] - n.h1_local).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        let p = ModelParams::standard();
        let grid = Grid::new(10.0, 64).unwrap();
        let ok = SimConfig::new(p.clone(), grid, 1e-2, 1.0);
        assert!(ok.validate().is_ok());
        assert!(SimConfig { dt: 0.0, ..ok.clone() }.validate().is_err());
        assert!(SimConfig { record_every: 0, ..ok.clone() }.validate().is_err());
        let wide = SimConfig {
            boundary: Boundary::Absorbing { width: 6.0, strength: 1.0 },
            ..ok.clone()
        };
        assert!(wide.validate().is_err());
        assert!(matches!(
            SimConfig { local_radius: Some(11.0), ..ok.clone() }.validate(),
            Err(Error::RWindowTooLarge { .. })
        ));
        let json = serde_json::to_string(&ok.clone().absorbing()).unwrap();
        let back: SimConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, ok.absorbing());
    }

    #[test]
    fn bessel_kernel_values() {
        assert_eq!(bessel_kernel(0.0, 1e-300, 1.0), 0.5);
        assert_eq!(bessel_kernel(2.0, 1.0, 1.0), 0.0);
        assert_eq!(bessel_kernel(0.0, 0.0, 1.0), 0.0);
    }

    #[test]
    fn bessel_representation_matches_spectral_free_step() {
        let p = ModelParams::standard();
        let grid = Grid::new(20.0, 1024).unwrap();
        let psi0 = |x: f64| {
            let g = (-2.0 * x * x).exp();
            SpinorValue::new(Complex64::new(g, 0.2 * g * x), Complex64::new(-0.5 * g, 0.0))
        };
        let f = SpinorField::from_fn(grid, psi0);
        let t = 0.8;
        let g = free_step(&f, t, &p);
        for n in [grid.origin_index(), grid.origin_index() + 20, grid.origin_index() - 37] {
            let x = grid.x(n);
            let b = bessel_free_value(psi0, x, t, 1.0, 801);
            assert!((b - g.at(n)).norm() < 1e-10, "x = {x}: {:?} vs {:?}", b, g.at(n));
        }
    }
}
