//! Experiment configuration files and CSV output.
//!
//! All floating-point CSV fields are written with 17 significant digits so
//! that values round-trip exactly.

use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{SpectrumOptions, SpectrumReport, WindowMetrics};
use crate::error::{Error, Result};
use crate::evolution::{Boundary, KickScheme, SimConfig, SourceKernel, TraceSeries};
use crate::initial::InitialSpec;
use crate::model::{Grid, ModelParams, SpinorField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSection {
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    #[serde(default = "one")]
    pub record_every: usize,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default = "default_energy_tolerance")]
    pub energy_tolerance: f64,
    #[serde(default)]
    pub kick: KickScheme,
    #[serde(default)]
    pub kernel: SourceKernel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSection {
    /// Local window radius; defaults to `5/m`.
    #[serde(default)]
    pub radius: Option<f64>,
    /// Explicit spectral windows `[t0, t1]`. When empty, `window_count`
    /// consecutive windows of `window_length` ending at `T` are used.
    #[serde(default)]
    pub windows: Vec<(f64, f64)>,
    /// Defaults to `200/m`.
    #[serde(default)]
    pub window_length: Option<f64>,
    #[serde(default = "three")]
    pub window_count: usize,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default = "yes")]
    pub taper: bool,
    #[serde(default)]
    pub plots: bool,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        Self {
            radius: None,
            windows: Vec::new(),
            window_length: None,
            window_count: 3,
            delta: None,
            taper: true,
            plots: false,
        }
    }
}

fn one() -> usize {
    1
}

fn three() -> usize {
    3
}

fn yes() -> bool {
    true
}

fn default_energy_tolerance() -> f64 {
    1e-6
}

/// One experiment: `model`, `grid`, `time`, `boundary`, `initial` and
/// `diagnostics` sections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelParams,
    pub grid: Grid,
    pub time: TimeSection,
    #[serde(default = "conservative")]
    pub boundary: Boundary,
    pub initial: InitialSpec,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
}

fn conservative() -> Boundary {
    Boundary::Conservative
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.sim_config().validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn sim_config(&self) -> SimConfig {
        let mut c = SimConfig::new(self.model.clone(), self.grid, self.time.dt, self.time.t_final);
        c.boundary = self.boundary;
        c.record_every = self.time.record_every;
        c.snapshot_times = self.time.snapshot_times.clone();
        c.energy_tolerance = self.time.energy_tolerance;
        c.local_radius = self.diagnostics.radius;
        c.kick = self.time.kick;
        c.kernel = self.time.kernel;
        c
    }

    pub fn initial_field(&self) -> Result<SpinorField> {
        self.initial.build(&self.model, self.grid)
    }

    /// Windows for spectral diagnostics, earliest first.
    pub fn windows(&self) -> Vec<(f64, f64)> {
        if !self.diagnostics.windows.is_empty() {
            return self.diagnostics.windows.clone();
        }
        let len = self.diagnostics.window_length.unwrap_or(200.0 / self.model.m);
        let t = self.time.t_final;
        let n = self.diagnostics.window_count;
        (0..n)
            .map(|i| {
                let end = t - (n - 1 - i) as f64 * len;
                (end - len, end)
            })
            .filter(|w| w.0 >= 0.0)
            .collect()
    }

    pub fn spectrum_options(&self) -> SpectrumOptions {
        SpectrumOptions {
            taper: self.diagnostics.taper,
            delta: self.diagnostics.delta,
            ..SpectrumOptions::default()
        }
    }
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn row(w: &mut impl Write, fields: &[f64]) -> io::Result<()> {
    let s: Vec<String> = fields.iter().map(|&x| fmt_f64(x)).collect();
    writeln!(w, "{}", s.join(","))
}

/// Columns `t, re_y1, im_y1, re_y2, im_y2, energy, l2, h1, h1_local`.
pub fn write_trace_csv(w: &mut impl Write, trace: &TraceSeries) -> io::Result<()> {
    writeln!(w, "t,re_y1,im_y1,re_y2,im_y2,energy,l2,h1,h1_local")?;
    for i in 0..trace.len() {
        let y = trace.y[i];
        row(
            w,
            &[
                trace.times[i],
                y[0].re,
                y[0].im,
                y[1].re,
                y[1].im,
                trace.energy[i],
                trace.l2[i],
                trace.h1[i],
                trace.h1_local[i],
            ],
        )?;
    }
    Ok(())
}

/// Columns `x, re_psi1, im_psi1, re_psi2, im_psi2`.
pub fn write_field_csv(w: &mut impl Write, field: &SpinorField) -> io::Result<()> {
    writeln!(w, "x,re_psi1,im_psi1,re_psi2,im_psi2")?;
    let grid = field.grid();
    for n in 0..grid.len() {
        let v = field.at(n);
        row(w, &[grid.x(n), v[0].re, v[0].im, v[1].re, v[1].im])?;
    }
    Ok(())
}

/// Columns `omega, power_1, power_2`.
pub fn write_spectrum_csv(w: &mut impl Write, report: &SpectrumReport) -> io::Result<()> {
    writeln!(w, "omega,power_1,power_2")?;
    for (q, &om) in report.frequencies.iter().enumerate() {
        row(w, &[om, report.components[0].power[q], report.components[1].power[q]])?;
    }
    Ok(())
}

/// Columns `window_t0, window_t1, gap_mass_1, gap_mass_2, flatness_1,
/// flatness_2, fit_omega1, fit_omega2, fit_residual`.
pub fn write_metrics_csv(w: &mut impl Write, metrics: &[WindowMetrics]) -> io::Result<()> {
    writeln!(
        w,
        "window_t0,window_t1,gap_mass_1,gap_mass_2,flatness_1,flatness_2,fit_omega1,fit_omega2,fit_residual"
    )?;
    for m in metrics {
        row(
            w,
            &[
                m.window.0,
                m.window.1,
                m.gap_mass[0],
                m.gap_mass[1],
                m.flatness[0],
                m.flatness[1],
                m.fit.omega[0],
                m.fit.omega[1],
                m.fit.residual,
            ],
        )?;
    }
    Ok(())
}

/// Writes `bytes` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}

/// Renders a CSV writer into a string.
pub fn to_csv_string(f: impl FnOnce(&mut Vec<u8>) -> io::Result<()>) -> String {
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}
