//! Measurements on simulation output: free-part splitting, windowed trace
//! spectra, spectral-gap mass, modulus flatness and fits to the solitary
//! manifold.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{KickScheme, Propagator, SimConfig, Snapshot, SourceKernel, TraceSeries};
use crate::model::{derivative, window_weight, Grid, ModelParams, SpinorField};
use crate::numerics::golden_section;
use crate::solitary::{profile_shape, SolitaryParams};
use crate::spectral::Transform;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Free evolution `phi(t)` of `initial` at each of `cfg.snapshot_times`.
pub fn split_free(initial: &SpinorField, cfg: &SimConfig) -> Vec<Snapshot> {
    let prop = Propagator::new(cfg.grid, cfg.model.clone(), KickScheme::Exact, SourceKernel::Spectral);
    let c0 = prop.to_spectral(initial);
    cfg.snapshot_times
        .iter()
        .map(|&t| {
            let mut c = c0.clone();
            prop.free_evolve(&mut c, t);
            Snapshot {
                t,
                field: prop.to_physical(&c),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOptions {
    /// Hann taper.
    pub taper: bool,
    /// Half-width added to the gap, `[-m - delta, m + delta]`; defaults to `0.1 m`.
    pub delta: Option<f64>,
    /// Peaks must exceed this multiple of the median power.
    pub noise_factor: f64,
    pub min_samples: usize,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            taper: true,
            delta: None,
            noise_factor: 5.0,
            min_samples: 1024,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub omega: f64,
    pub power: f64,
    /// Share of the component's power within two bins of the peak.
    pub mass_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSpectrum {
    pub power: Vec<f64>,
    /// Local maxima above the noise floor, strongest first.
    pub peaks: Vec<Peak>,
    pub gap_mass: f64,
    /// Frequency of the largest bin, if the component is not identically zero.
    pub dominant: Option<f64>,
    /// Share of power within two bins of the dominant frequency.
    pub dominant_mass: f64,
}

impl ComponentSpectrum {
    /// Finite-window proxy for a one-point spectrum: at least 95% of the
    /// power within two bins of the dominant peak.
    pub fn is_singleton(&self) -> bool {
        self.dominant_mass >= 0.95
    }

    /// Strongest peak strictly inside the gap `(-m, m)`.
    pub fn gap_peak(&self, m: f64) -> Option<Peak> {
        self.peaks.iter().copied().find(|p| p.omega.abs() < m)
    }
}

/// Power spectrum of the point trace over a time window. Power at `omega`
/// corresponds to time dependence `e^{-i omega t}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub window: (f64, f64),
    pub samples: usize,
    pub m: f64,
    pub delta: f64,
    pub bin_width: f64,
    /// Ascending DFT lattice `2 pi q / (M h)`, `q = -M/2 .. M/2 - 1`.
    pub frequencies: Vec<f64>,
    pub components: [ComponentSpectrum; 2],
}

impl SpectrumReport {
    /// Gap-mass fraction for an arbitrary `delta`.
    pub fn gap_mass_with(&self, j: usize, delta: f64) -> f64 {
        gap_mass(&self.frequencies, &self.components[j].power, self.m + delta)
    }
}

fn gap_mass(freqs: &[f64], power: &[f64], edge: f64) -> f64 {
    let total: f64 = power.iter().sum();
    if total <= 0.0 {
        return 1.0;
    }
    let inside: f64 = freqs
        .iter()
        .zip(power)
        .filter(|(w, _)| w.abs() <= edge)
        .map(|(_, p)| p)
        .sum();
    (inside / total).clamp(0.0, 1.0)
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

fn mass_near(power: &[f64], q: usize, total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    let lo = q.saturating_sub(2);
    let hi = (q + 2).min(power.len() - 1);
    power[lo..=hi].iter().sum::<f64>() / total
}

pub fn trace_spectrum(trace: &TraceSeries, window: (f64, f64), m: f64, opts: &SpectrumOptions) -> Result<SpectrumReport> {
    let range = trace.window(window.0, window.1);
    let samples = range.len();
    if samples < opts.min_samples.max(3) {
        return Err(Error::WindowTooShort {
            samples,
            required: opts.min_samples.max(3),
        });
    }
    let times = &trace.times[range.clone()];
    let h = (times[samples - 1] - times[0]) / (samples - 1) as f64;
    let taper: Vec<f64> = if opts.taper {
        (0..samples)
            .map(|n| {
                let s = (std::f64::consts::PI * n as f64 / (samples - 1) as f64).sin();
                s * s
            })
            .collect()
    } else {
        vec![1.0; samples]
    };
    let wsq: f64 = taper.iter().map(|w| w * w).sum();
    let transform = Transform::new(samples);
    let half = samples / 2;
    // bin q (ascending) -> FFT index
    let index = |q: usize| (q + samples - half) % samples;
    let bin_width = 2.0 * std::f64::consts::PI / (samples as f64 * h);
    let frequencies: Vec<f64> = (0..samples)
        .map(|q| (q as f64 - half as f64) * bin_width)
        .collect();
    let delta = opts.delta.unwrap_or(0.1 * m);

    let component = |j: usize| {
        let mut data: Vec<Complex64> = trace.y[range.clone()]
            .iter()
            .zip(&taper)
            .map(|(y, w)| y[j] * *w)
            .collect();
        // sum_n y_n e^{+i omega_q t_n}: the normalised inverse DFT times M
        transform.inverse(&mut data);
        let scale = samples as f64 * samples as f64 / (samples as f64 * wsq);
        let power: Vec<f64> = (0..samples).map(|q| data[index(q)].norm_sqr() * scale).collect();
        let total: f64 = power.iter().sum();
        let floor = opts.noise_factor * median(&power);
        let mut peaks = Vec::new();
        for q in 0..samples {
            let left = if q > 0 { power[q - 1] } else { f64::NEG_INFINITY };
            let right = if q + 1 < samples { power[q + 1] } else { f64::NEG_INFINITY };
            if power[q] > floor && power[q] > left && power[q] >= right && power[q] > 0.0 {
                peaks.push(Peak {
                    omega: frequencies[q],
                    power: power[q],
                    mass_fraction: mass_near(&power, q, total),
                });
            }
        }
        peaks.sort_by(|a, b| b.power.total_cmp(&a.power));
        let (dominant, dominant_mass) = if total > 0.0 {
            let q = (0..samples)
                .max_by(|&a, &b| power[a].total_cmp(&power[b]))
                .expect("nonempty");
            (Some(frequencies[q]), mass_near(&power, q, total))
        } else {
            (None, 0.0)
        };
        ComponentSpectrum {
            gap_mass: gap_mass(&frequencies, &power, m + delta),
            power,
            peaks,
            dominant,
            dominant_mass,
        }
    };
    let components = [component(0), component(1)];
    Ok(SpectrumReport {
        window: (times[0], times[samples - 1]),
        samples,
        m,
        delta,
        bin_width,
        frequencies,
        components,
    })
}

/// `(max|y_j| - min|y_j|) / max(max|y_j|, 1e-12)` over the window, per component.
pub fn modulus_flatness(trace: &TraceSeries, window: (f64, f64)) -> [f64; 2] {
    let range = trace.window(window.0, window.1);
    let mut out = [0.0; 2];
    for (j, o) in out.iter_mut().enumerate() {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for y in &trace.y[range.clone()] {
            let a = y[j].norm();
            lo = lo.min(a);
            hi = hi.max(a);
        }
        if range.is_empty() {
            continue;
        }
        *o = (hi - lo) / hi.max(1e-12);
    }
    out
}

/// Best solitary wave in the local `H^1(-R, R)` distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttractorFit {
    pub omega: [f64; 2],
    /// Complex amplitudes at the snapshot time: the fitted field is
    /// `amp_1 phi_{omega_1} + amp_2 phi_{omega_2}` with unit-amplitude profiles.
    pub amp: [Complex64; 2],
    pub residual: f64,
    /// `residual` divided by the snapshot's local norm (0 for a zero snapshot).
    pub relative_residual: f64,
    pub radius: f64,
}

impl AttractorFit {
    /// Solitary parameters whose field at time `t` is the fitted one.
    pub fn solitary_params(&self, m: f64, t: f64) -> Result<SolitaryParams> {
        let amp = [
            self.amp[0] * Complex64::from_polar(1.0, self.omega[0] * t),
            self.amp[1] * Complex64::from_polar(1.0, self.omega[1] * t),
        ];
        SolitaryParams::new(m, self.omega, amp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Trace window whose spectrum seeds the frequencies.
    pub window: (f64, f64),
    pub spectrum: SpectrumOptions,
    /// Coordinate sweeps of golden-section refinement.
    pub sweeps: usize,
    /// Golden-section search half-width in units of the spectral bin.
    pub search_bins: f64,
}

impl FitOptions {
    pub fn new(window: (f64, f64)) -> Self {
        Self {
            window,
            spectrum: SpectrumOptions::default(),
            sweeps: 2,
            search_bins: 2.0,
        }
    }
}

/// Local `H^1` inner products on the nodes with `|x| <= R`.
struct LocalH1 {
    grid: Grid,
    m: f64,
    weights: Vec<(usize, f64)>,
    transform: Transform,
}

impl LocalH1 {
    fn new(grid: Grid, m: f64, r: f64) -> Self {
        let weights = (0..grid.len())
            .filter_map(|n| {
                let w = window_weight(grid.x(n), r);
                (w > 0.0).then_some((n, w * grid.dx()))
            })
            .collect();
        Self {
            grid,
            m,
            weights,
            transform: Transform::new(grid.len()),
        }
    }

    fn derivative(&self, f: &SpinorField) -> SpinorField {
        let mut c = [
            self.transform.forward_copy(f.component(0)),
            self.transform.forward_copy(f.component(1)),
        ];
        for comp in c.iter_mut() {
            for (i, z) in comp.iter_mut().enumerate() {
                *z *= Complex64::new(0.0, self.grid.wavenumber(i));
            }
            self.transform.inverse(comp);
        }
        let [a, b] = c;
        SpinorField::from_components(self.grid, a, b).expect("same grid")
    }

    /// `<u, v>` from values and derivatives.
    fn inner(&self, u: (&SpinorField, &SpinorField), v: (&SpinorField, &SpinorField)) -> Complex64 {
        let mut acc = ZERO;
        let m2 = self.m * self.m;
        for &(n, w) in &self.weights {
            for c in 0..2 {
                acc += w * (u.1.component(c)[n].conj() * v.1.component(c)[n]
                    + m2 * u.0.component(c)[n].conj() * v.0.component(c)[n]);
            }
        }
        acc
    }
}

fn shape_field(grid: Grid, omega: f64, j: usize, m: f64) -> SpinorField {
    SpinorField::from_fn(grid, |x| {
        let v = profile_shape(omega, j, m, x).expect("omega inside the gap");
        crate::SpinorValue::new(Complex64::new(v[0], 0.0), Complex64::new(v[1], 0.0))
    })
}

/// Least-squares amplitudes and residual for fixed frequencies.
fn fit_amplitudes(
    ip: &LocalH1,
    snap: (&SpinorField, &SpinorField),
    omega: [f64; 2],
) -> ([Complex64; 2], f64) {
    let m = ip.m;
    let shapes: Vec<(SpinorField, SpinorField)> = (0..2)
        .map(|j| {
            let s = shape_field(ip.grid, omega[j], j + 1, m);
            let d = ip.derivative(&s);
            (s, d)
        })
        .collect();
    let view = |k: usize| (&shapes[k].0, &shapes[k].1);
    let a = [
        [ip.inner(view(0), view(0)), ip.inner(view(0), view(1))],
        [ip.inner(view(1), view(0)), ip.inner(view(1), view(1))],
    ];
    let b = [ip.inner(view(0), snap), ip.inner(view(1), snap)];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let amp = if det.norm() > 1e-300 {
        [
            (b[0] * a[1][1] - a[0][1] * b[1]) / det,
            (a[0][0] * b[1] - a[1][0] * b[0]) / det,
        ]
    } else {
        [b[0] / a[0][0], ZERO]
    };
    let mut diff = snap.0.clone();
    let mut ddiff = snap.1.clone();
    for j in 0..2 {
        diff.axpy(-amp[j], &shapes[j].0);
        ddiff.axpy(-amp[j], &shapes[j].1);
    }
    let r = ip.inner((&diff, &ddiff), (&diff, &ddiff)).re.max(0.0).sqrt();
    (amp, r)
}

/// Fits `C_1 phi_{omega_1} + C_2 phi_{omega_2}` to `snapshot` in `H^1(-R, R)`.
///
/// Frequencies start from the strongest in-gap spectral peak of each trace
/// component over `opts.window`, amplitudes come from linear least squares,
/// and the frequencies are refined by coordinate golden-section search
/// within `opts.search_bins` bins, kept inside the open gap.
pub fn fit_solitary(
    snapshot: &SpinorField,
    trace: &TraceSeries,
    p: &ModelParams,
    r: f64,
    opts: &FitOptions,
) -> Result<AttractorFit> {
    let grid = *snapshot.grid();
    let m = p.m;
    if !(r > 0.0 && r <= grid.half_length()) {
        return Err(Error::RWindowTooLarge {
            r,
            half_length: grid.half_length(),
        });
    }
    let ip = LocalH1::new(grid, m, r);
    let dsnap = ip.derivative(snapshot);
    let snap = (snapshot, &dsnap);
    let norm = ip.inner(snap, snap).re.max(0.0).sqrt();
    let report = trace_spectrum(trace, opts.window, m, &opts.spectrum)?;
    let seeds = [report.components[0].gap_peak(m), report.components[1].gap_peak(m)];
    if seeds.iter().all(Option::is_none) {
        if norm == 0.0 {
            return Ok(AttractorFit {
                omega: [0.0, 0.0],
                amp: [ZERO, ZERO],
                residual: 0.0,
                relative_residual: 0.0,
                radius: r,
            });
        }
        return Err(Error::NoGapPeak);
    }
    let mut omega = [
        seeds[0].map_or(0.0, |p| p.omega),
        seeds[1].map_or(0.0, |p| p.omega),
    ];
    let edge = m * (1.0 - 1e-9);
    let span = opts.search_bins * report.bin_width;
    let objective = |w: [f64; 2]| fit_amplitudes(&ip, snap, w).1;
    for _ in 0..opts.sweeps {
        for j in 0..2 {
            if seeds[j].is_none() {
                continue;
            }
            let lo = (omega[j] - span).max(-edge);
            let hi = (omega[j] + span).min(edge);
            let (best, _) = golden_section(
                |w| {
                    let mut trial = omega;
                    trial[j] = w;
                    objective(trial)
                },
                lo,
                hi,
                1e-11 * m,
            );
            omega[j] = best;
        }
    }
    let (amp, residual) = fit_amplitudes(&ip, snap, omega);
    Ok(AttractorFit {
        omega,
        amp,
        residual,
        relative_residual: if norm > 0.0 { residual / norm } else { 0.0 },
        radius: r,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowMetrics {
    pub window: (f64, f64),
    pub gap_mass: [f64; 2],
    pub flatness: [f64; 2],
    pub dominant: [Option<f64>; 2],
    pub dominant_mass: [f64; 2],
    pub fit: AttractorFit,
    /// Time of the snapshot used for the fit.
    pub snapshot_t: f64,
}

/// Spectrum, flatness and solitary fit on each window; the fit uses the
/// snapshot closest to the window's end, which must lie inside the window.
pub fn attraction_metrics(
    trace: &TraceSeries,
    snapshots: &[Snapshot],
    p: &ModelParams,
    windows: &[(f64, f64)],
    r: f64,
    spectrum: &SpectrumOptions,
) -> Result<Vec<WindowMetrics>> {
    windows
        .iter()
        .map(|&(t0, t1)| {
            let snap = snapshots
                .iter()
                .min_by(|a, b| (a.t - t1).abs().total_cmp(&(b.t - t1).abs()))
                .filter(|s| s.t >= t0 - 1e-9 && s.t <= t1 + 1e-9)
                .ok_or_else(|| {
                    Error::InvalidConfig(format!("no snapshot inside window [{t0}, {t1}]"))
                })?;
            let report = trace_spectrum(trace, (t0, t1), p.m, spectrum)?;
            let mut fit_opts = FitOptions::new((t0, t1));
            fit_opts.spectrum = *spectrum;
            let fit = fit_solitary(&snap.field, trace, p, r, &fit_opts)?;
            Ok(WindowMetrics {
                window: (t0, t1),
                gap_mass: [report.components[0].gap_mass, report.components[1].gap_mass],
                flatness: modulus_flatness(trace, (t0, t1)),
                dominant: [report.components[0].dominant, report.components[1].dominant],
                dominant_mass: [
                    report.components[0].dominant_mass,
                    report.components[1].dominant_mass,
                ],
                fit,
                snapshot_t: snap.t,
            })
        })
        .collect()
}

/// `true` when each value is at least the previous one minus `tol`.
pub fn non_decreasing(v: &[f64], tol: f64) -> bool {
    v.windows(2).all(|w| w[1] >= w[0] - tol)
}

/// `true` when each value is at most the previous one plus `tol`.
pub fn non_increasing(v: &[f64], tol: f64) -> bool {
    v.windows(2).all(|w| w[1] <= w[0] + tol)
}

/// Local `H^1(-R, R)` norm with spectral derivatives.
pub fn local_norm(f: &SpinorField, m: f64, r: f64) -> f64 {
    let d = derivative(f);
    crate::model::local_h1(f, &d, m, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{driven_solution, run, Simulation};
    use crate::solitary::{amplitude_roots, solitary_field};
    use crate::SpinorValue;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    fn tones(tones: &[(usize, Complex64, f64)], n: usize, h: f64) -> TraceSeries {
        let times: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
        let y = times
            .iter()
            .map(|&t| {
                let mut v = SpinorValue::zero();
                for &(j, q, w) in tones {
                    v[j] += q * Complex64::from_polar(1.0, -w * t);
                }
                v
            })
            .collect();
        TraceSeries::from_samples(times, y).unwrap()
    }

    fn untapered() -> SpectrumOptions {
        SpectrumOptions {
            taper: false,
            ..SpectrumOptions::default()
        }
    }

    #[test]
    fn pure_tone_sign_convention() {
        for &w0 in &[-0.9, 0.0, 0.9, 0.7] {
            let tr = tones(&[(0, Complex64::new(1.0, 0.0), w0)], 4096, 0.05);
            let rep = trace_spectrum(&tr, (0.0, 1e9), 1.0, &SpectrumOptions::default()).unwrap();
            let d = rep.components[0].dominant.unwrap();
            assert!((d - w0).abs() <= rep.bin_width, "{w0}: {d}");
            assert!(rep.components[0].gap_mass > 0.99);
            assert_eq!(rep.components[1].gap_mass, 1.0);
            assert!(rep.components[1].dominant.is_none());
        }
    }

    #[test]
    fn two_tones_two_components() {
        let tr = tones(
            &[(0, Complex64::new(1.0, 0.0), 0.7), (1, Complex64::new(0.5, 0.0), -0.3)],
            4096,
            0.05,
        );
        let rep = trace_spectrum(&tr, (0.0, 1e9), 1.0, &SpectrumOptions::default()).unwrap();
        assert!((rep.components[0].peaks[0].omega - 0.7).abs() <= rep.bin_width);
        assert!((rep.components[1].peaks[0].omega + 0.3).abs() <= rep.bin_width);
        assert!(rep.components[0].is_singleton() && rep.components[1].is_singleton());
    }

    #[test]
    fn noisy_tone_recovered() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        // 20 dB: noise power 1/100 of the unit tone
        let normal = Normal::new(0.0, (0.01f64 / 2.0).sqrt()).unwrap();
        let mut tr = tones(&[(0, Complex64::new(1.0, 0.0), 0.45)], 4096, 0.05);
        for y in tr.y.iter_mut() {
            y[0] += Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng));
        }
        let rep = trace_spectrum(&tr, (0.0, 1e9), 1.0, &SpectrumOptions::default()).unwrap();
        assert!((rep.components[0].peaks[0].omega - 0.45).abs() <= rep.bin_width);
    }

    #[test]
    fn parseval_without_taper() {
        let tr = tones(
            &[(0, Complex64::new(0.3, 0.2), 0.41), (0, Complex64::new(-1.0, 0.5), 2.3), (1, Complex64::new(0.7, 0.0), -1.7)],
            2000,
            0.03,
        );
        let rep = trace_spectrum(&tr, (0.0, 1e9), 1.0, &untapered()).unwrap();
        for j in 0..2 {
            let total: f64 = rep.components[j].power.iter().sum();
            let mean: f64 = tr.y.iter().map(|y| y[j].norm_sqr()).sum::<f64>() / tr.len() as f64;
            assert!((total - mean).abs() < 1e-10 * mean.max(1.0));
        }
    }

    #[test]
    fn gap_mass_monotone_in_delta() {
        let tr = tones(
            &[(0, Complex64::new(1.0, 0.0), 0.5), (0, Complex64::new(0.6, 0.0), 1.3), (0, Complex64::new(0.3, 0.0), -2.5)],
            4096,
            0.05,
        );
        let rep = trace_spectrum(&tr, (0.0, 1e9), 1.0, &untapered()).unwrap();
        let mut last = 0.0;
        for k in 0..40 {
            let g = rep.gap_mass_with(0, 0.05 * k as f64);
            assert!((0.0..=1.0).contains(&g) && g >= last);
            last = g;
        }
    }

    #[test]
    fn short_window_rejected() {
        let tr = tones(&[(0, Complex64::new(1.0, 0.0), 0.5)], 500, 0.05);
        assert!(matches!(
            trace_spectrum(&tr, (0.0, 1e9), 1.0, &SpectrumOptions::default()),
            Err(Error::WindowTooShort { samples: 500, .. })
        ));
    }

    #[test]
    fn flatness_examples() {
        let tr = tones(&[(0, Complex64::new(0.8, 0.3), 0.6)], 3000, 0.01);
        assert!(modulus_flatness(&tr, (0.0, 1e9))[0] < 1e-14);
        let (q1, q2) = (1.0, 0.3);
        let tr = tones(&[(1, Complex64::new(q1, 0.0), 0.6), (1, Complex64::new(0.0, q2), -0.2)], 20000, 0.01);
        let f = modulus_flatness(&tr, (0.0, 1e9))[1];
        // dense-sampling oracle of the beat
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for i in 0..2_000_000 {
            let t = i as f64 * 1e-4;
            let a = (Complex64::new(q1, 0.0) * Complex64::from_polar(1.0, -0.6 * t)
                + Complex64::new(0.0, q2) * Complex64::from_polar(1.0, 0.2 * t))
            .norm();
            lo = lo.min(a);
            hi = hi.max(a);
        }
        let oracle = (hi - lo) / hi;
        assert!((f - oracle).abs() < 1e-3, "{f} vs {oracle}");
        assert!((oracle - 2.0 * q2 / (q1 + q2)).abs() < 1e-6);
    }

    fn solitary_setup(grid: Grid) -> (ModelParams, SolitaryParams, TraceSeries) {
        let p = ModelParams::standard();
        let c1 = amplitude_roots(&p, 0.9, 1).unwrap().roots[1];
        let c2 = amplitude_roots(&p, -0.85, 2).unwrap().roots[1];
        let sp = SolitaryParams::new(1.0, [0.9, -0.85], [Complex64::new(c1, 0.0), Complex64::new(0.0, c2)]).unwrap();
        let times: Vec<f64> = (0..4096).map(|i| i as f64 * 0.05).collect();
        let y = times.iter().map(|&t| sp.origin_value(t)).collect();
        let _ = grid;
        (p, sp, TraceSeries::from_samples(times, y).unwrap())
    }

    #[test]
    fn fit_recovers_exact_wave() {
        let grid = Grid::new(40.0, 2048).unwrap();
        let (p, sp, tr) = solitary_setup(grid);
        let t = 204.75;
        let snap = solitary_field(&sp, grid, t);
        let fit = fit_solitary(&snap, &tr, &p, 5.0, &FitOptions::new((0.0, 1e9))).unwrap();
        assert!((fit.omega[0] - 0.9).abs() < 1e-6, "{:?}", fit.omega);
        assert!((fit.omega[1] + 0.85).abs() < 1e-6, "{:?}", fit.omega);
        assert!(fit.residual < 1e-8, "{}", fit.residual);
        let back = fit.solitary_params(1.0, t).unwrap();
        assert!((back.amp[0] - sp.amp[0]).norm() < 1e-6);
        assert!((back.amp[1] - sp.amp[1]).norm() < 1e-6);
    }

    #[test]
    fn fit_tolerates_small_noise() {
        let grid = Grid::new(40.0, 2048).unwrap();
        let (p, sp, tr) = solitary_setup(grid);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let bumps: Vec<(f64, f64, f64)> = (0..6)
            .map(|_| (2.0 * normal.sample(&mut rng), normal.sample(&mut rng), normal.sample(&mut rng)))
            .collect();
        let noise = SpinorField::from_fn(grid, |x| {
            let mut v = SpinorValue::zero();
            for &(c, a, b) in &bumps {
                let g = 1e-3 * (-(x - c).powi(2)).exp();
                v[0] += Complex64::new(a * g, 0.0);
                v[1] += Complex64::new(0.0, b * g);
            }
            v
        });
        let snap = solitary_field(&sp, grid, 0.0).add(&noise);
        let fit = fit_solitary(&snap, &tr, &p, 5.0, &FitOptions::new((0.0, 1e9))).unwrap();
        assert!(fit.residual < 1e-2 && fit.residual > 1e-5, "{}", fit.residual);
        assert!((fit.omega[0] - 0.9).abs() < 1e-3 && (fit.omega[1] + 0.85).abs() < 1e-3, "{:?}", fit.omega);
    }

    #[test]
    fn fit_of_zero_snapshot() {
        let grid = Grid::new(20.0, 256).unwrap();
        let tr = TraceSeries::from_samples(
            (0..2048).map(|i| i as f64 * 0.1).collect(),
            vec![SpinorValue::zero(); 2048],
        )
        .unwrap();
        let fit = fit_solitary(&SpinorField::zeros(grid), &tr, &ModelParams::standard(), 5.0, &FitOptions::new((0.0, 1e9))).unwrap();
        assert_eq!(fit.amp, [ZERO, ZERO]);
        assert_eq!(fit.residual, 0.0);
    }

    #[test]
    fn fit_requires_gap_peak() {
        let grid = Grid::new(20.0, 256).unwrap();
        let tr = tones(&[(0, Complex64::new(1.0, 0.0), 3.0), (1, Complex64::new(1.0, 0.0), -2.0)], 2048, 0.05);
        let snap = SpinorField::from_fn(grid, |x| SpinorValue::new(Complex64::new((-x * x).exp(), 0.0), ZERO));
        assert!(matches!(
            fit_solitary(&snap, &tr, &ModelParams::standard(), 5.0, &FitOptions::new((0.0, 1e9))),
            Err(Error::NoGapPeak)
        ));
    }

    #[test]
    fn fit_residual_phase_invariant() {
        let grid = Grid::new(40.0, 1024).unwrap();
        let (p, sp, tr) = solitary_setup(grid);
        let snap = solitary_field(&sp, grid, 1.0).add(&SpinorField::from_fn(grid, |x| {
            SpinorValue::new(Complex64::new(0.05 * (-(x - 1.0).powi(2)).exp(), 0.0), ZERO)
        }));
        let opts = FitOptions::new((0.0, 1e9));
        let a = fit_solitary(&snap, &tr, &p, 5.0, &opts).unwrap();
        for &th in &[0.4, 2.0, -1.3] {
            let rot = snap.scaled(Complex64::from_polar(1.0, th));
            let b = fit_solitary(&rot, &tr, &p, 5.0, &opts).unwrap();
            assert!((a.residual - b.residual).abs() < 1e-10, "{} vs {}", a.residual, b.residual);
        }
    }

    #[test]
    fn free_part_plus_driven_part_is_the_run() {
        let p = ModelParams::standard();
        let grid = Grid::new(20.0, 256).unwrap();
        let f = SpinorField::from_fn(grid, |x| {
            let g = (-x * x).exp();
            SpinorValue::new(Complex64::new(g, 0.0), Complex64::new(0.0, 0.4 * g))
        });
        let mut cfg = SimConfig::new(p, grid, 1e-3, 1.0);
        cfg.snapshot_times = vec![1.0];
        let out = Simulation::new(cfg.clone(), &f).unwrap().record_impulses().run_to_end().unwrap();
        let phi = split_free(&f, &cfg);
        let psi_s = driven_solution(&cfg, out.impulses.as_ref().unwrap()).unwrap();
        let recon = phi[0].field.add(&psi_s);
        assert!(recon.sub(&out.final_field).sup_norm() < 1e-10);
        let again = run(&cfg, &f).unwrap();
        assert_eq!(again.final_field, out.final_field);
    }

    #[test]
    fn split_free_is_unitary_and_zero_safe() {
        let p = ModelParams::standard();
        let grid = Grid::new(20.0, 256).unwrap();
        let mut cfg = SimConfig::new(p, grid, 1e-2, 10.0);
        cfg.snapshot_times = vec![0.0, 3.0, 10.0];
        let zero = split_free(&SpinorField::zeros(grid), &cfg);
        assert!(zero.iter().all(|s| s.field.sup_norm() == 0.0));
        let f = SpinorField::from_fn(grid, |x| SpinorValue::new(Complex64::new((-x * x).exp(), 0.0), ZERO));
        for s in split_free(&f, &cfg) {
            assert!((s.field.l2_norm() - f.l2_norm()).abs() < 1e-12);
        }
    }
}
