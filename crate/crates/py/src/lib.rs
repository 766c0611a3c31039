use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use dirac_lab_core::diagnostics::{trace_spectrum as core_spectrum, SpectrumOptions};
use dirac_lab_core::evolution::{run, TraceSeries};
use dirac_lab_core::io::ExperimentConfig;
use dirac_lab_core::solitary;
use dirac_lab_core::{Error, ModelParams, SpinorValue};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::EnergyDriftExceeded { .. } | Error::NonFiniteValue { .. } | Error::NoGapPeak => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn model(m: f64, potential: Vec<f64>) -> PyResult<ModelParams> {
    let mut u = vec![0.0];
    u.extend(potential);
    ModelParams::symmetric_polynomial(m, u).map_err(to_py)
}

/// `sqrt(m^2 - omega^2)` for `|omega| <= m`.
#[pyfunction]
#[pyo3(signature = (omega, m = 1.0))]
fn kappa(omega: f64, m: f64) -> PyResult<f64> {
    solitary::kappa(omega, m).map_err(to_py)
}

/// Nonnegative amplitude roots (the first is 0) of component `j` at `omega`
/// for `U(z) = sum_n potential[n-1] |z|^{2n}`.
#[pyfunction]
#[pyo3(signature = (omega, j, m = 1.0, potential = vec![-0.5, 0.25]))]
fn amplitude_roots(omega: f64, j: usize, m: f64, potential: Vec<f64>) -> PyResult<Vec<f64>> {
    if j != 1 && j != 2 {
        return Err(PyValueError::new_err("component index must be 1 or 2"));
    }
    let p = model(m, potential)?;
    Ok(solitary::amplitude_roots(&p, omega, j).map_err(to_py)?.roots)
}

/// Jump residuals of the solitary wave with the given frequencies and amplitudes.
#[pyfunction]
#[pyo3(signature = (omega, amp, t = 0.0, m = 1.0, potential = vec![-0.5, 0.25]))]
fn jump_residual(omega: [f64; 2], amp: [Complex64; 2], t: f64, m: f64, potential: Vec<f64>) -> PyResult<[f64; 2]> {
    let p = model(m, potential)?;
    let sp = solitary::SolitaryParams::new(m, omega, amp).map_err(to_py)?;
    Ok(solitary::jump_residual(&sp, &p, t))
}

/// Bound-state frequencies for the linear coupling `F_j = a_j z`.
#[pyfunction]
#[pyo3(signature = (a, m = 1.0))]
fn linear_frequencies(a: [f64; 2], m: f64) -> PyResult<[Option<f64>; 2]> {
    let p = ModelParams::linear(m, a).map_err(to_py)?;
    solitary::linear_frequencies(&p).map_err(to_py)
}

/// Runs the experiment described by a JSON config and returns the trace and
/// final field as a dict of lists.
#[pyfunction]
fn simulate<'py>(py: Python<'py>, config_json: &str) -> PyResult<Bound<'py, PyDict>> {
    let cfg = ExperimentConfig::from_json(config_json).map_err(to_py)?;
    let initial = cfg.initial_field().map_err(to_py)?;
    let sim = cfg.sim_config();
    let out = py.detach(|| run(&sim, &initial)).map_err(to_py)?;
    let d = PyDict::new(py);
    let tr = &out.trace;
    d.set_item("t", tr.times.clone())?;
    d.set_item("y1", tr.component(0))?;
    d.set_item("y2", tr.component(1))?;
    d.set_item("energy", tr.energy.clone())?;
    d.set_item("l2", tr.l2.clone())?;
    d.set_item("h1", tr.h1.clone())?;
    d.set_item("h1_local", tr.h1_local.clone())?;
    d.set_item("x", cfg.grid.xs())?;
    d.set_item("psi1", out.final_field.component(0).to_vec())?;
    d.set_item("psi2", out.final_field.component(1).to_vec())?;
    Ok(d)
}

/// Windowed power spectrum of a sampled point trace.
#[allow(clippy::too_many_arguments)]
#[pyfunction]
#[pyo3(signature = (t, y1, y2, window, m = 1.0, taper = true, min_samples = 1024))]
fn trace_spectrum<'py>(
    py: Python<'py>,
    t: Vec<f64>,
    y1: Vec<Complex64>,
    y2: Vec<Complex64>,
    window: (f64, f64),
    m: f64,
    taper: bool,
    min_samples: usize,
) -> PyResult<Bound<'py, PyDict>> {
    if y1.len() != t.len() || y2.len() != t.len() {
        return Err(PyValueError::new_err("t, y1 and y2 must have equal length"));
    }
    let y = y1.into_iter().zip(y2).map(|(a, b)| SpinorValue::new(a, b)).collect();
    let trace = TraceSeries::from_samples(t, y).map_err(to_py)?;
    let opts = SpectrumOptions {
        taper,
        min_samples,
        ..SpectrumOptions::default()
    };
    let rep = core_spectrum(&trace, window, m, &opts).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("omega", rep.frequencies.clone())?;
    d.set_item("power_1", rep.components[0].power.clone())?;
    d.set_item("power_2", rep.components[1].power.clone())?;
    d.set_item("gap_mass", [rep.components[0].gap_mass, rep.components[1].gap_mass])?;
    d.set_item("dominant", [rep.components[0].dominant, rep.components[1].dominant])?;
    d.set_item("bin_width", rep.bin_width)?;
    Ok(d)
}

#[pymodule]
fn dirac_lab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(kappa, m)?)?;
    m.add_function(wrap_pyfunction!(amplitude_roots, m)?)?;
    m.add_function(wrap_pyfunction!(jump_residual, m)?)?;
    m.add_function(wrap_pyfunction!(linear_frequencies, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(trace_spectrum, m)?)?;
    Ok(())
}
