use num_complex::Complex64;

use super::{Grid, ModelParams, SpinorField, SpinorValue};
use crate::error::{Error, Result};
use crate::spectral::Transform;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `alpha = [[0, 1], [-1, 0]]`, `beta = diag(1, -1)`; `D_m = alpha d/dx + m beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiracMatrices {
    pub alpha: [[f64; 2]; 2],
    pub beta: [[f64; 2]; 2],
}

impl Default for DiracMatrices {
    fn default() -> Self {
        Self::STANDARD
    }
}

impl DiracMatrices {
    pub const STANDARD: Self = Self {
        alpha: [[0.0, 1.0], [-1.0, 0.0]],
        beta: [[1.0, 0.0], [0.0, -1.0]],
    };

    /// Largest entry of `alpha^2 + I`, `beta^2 - I` and `alpha beta + beta alpha`.
    pub fn identity_defect(&self) -> f64 {
        let a2 = mul(self.alpha, self.alpha);
        let b2 = mul(self.beta, self.beta);
        let ab = mul(self.alpha, self.beta);
        let ba = mul(self.beta, self.alpha);
        let mut worst: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                let id = if r == c { 1.0 } else { 0.0 };
                worst = worst
                    .max((a2[r][c] + id).abs())
                    .max((b2[r][c] - id).abs())
                    .max((ab[r][c] + ba[r][c]).abs());
            }
        }
        worst
    }
}

fn mul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            out[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    out
}

/// Fourier symbol of `D_m` for a mode `e^{ikx}`: `ik alpha + m beta`.
pub fn dirac_symbol(k: f64, m: f64) -> [[Complex64; 2]; 2] {
    [
        [Complex64::new(m, 0.0), I * k],
        [-I * k, Complex64::new(-m, 0.0)],
    ]
}

pub(crate) fn apply_symbol(k: f64, m: f64, v: [Complex64; 2]) -> [Complex64; 2] {
    [m * v[0] + I * k * v[1], -I * k * v[0] - m * v[1]]
}

/// Forward FFT of both components.
pub fn spectrum(field: &SpinorField, transform: &Transform) -> [Vec<Complex64>; 2] {
    [
        transform.forward_copy(field.component(0)),
        transform.forward_copy(field.component(1)),
    ]
}

/// Spectral derivative `d/dx` of both components.
pub fn derivative(field: &SpinorField) -> SpinorField {
    let grid = *field.grid();
    let transform = Transform::new(grid.len());
    let mut coeffs = spectrum(field, &transform);
    for c in coeffs.iter_mut() {
        for (i, z) in c.iter_mut().enumerate() {
            *z *= I * grid.wavenumber(i);
        }
        transform.inverse(c);
    }
    let [a, b] = coeffs;
    SpinorField::from_components(grid, a, b).expect("same grid")
}

/// `D_m f = alpha f' + m beta f` with the derivative taken spectrally.
pub fn dirac_apply(field: &SpinorField, m: f64) -> SpinorField {
    let grid = *field.grid();
    let transform = Transform::new(grid.len());
    let [mut c1, mut c2] = spectrum(field, &transform);
    for i in 0..grid.len() {
        let [a, b] = apply_symbol(grid.wavenumber(i), m, [c1[i], c2[i]]);
        c1[i] = a;
        c2[i] = b;
    }
    transform.inverse(&mut c1);
    transform.inverse(&mut c2);
    SpinorField::from_components(grid, c1, c2).expect("same grid")
}

/// Sampled point-source kernel `G(x) = (beta - alpha sgn x) e^{-m|x|} / 2`.
///
/// Stored as the even profile `e^{-m|x|}/2` and the odd profile
/// `sgn(x) e^{-m|x|}/2`, with `sgn(0) = 0` so that `G(0) = beta/2`.
/// The node `x = -L` is the antipode of the origin on the torus and also
/// gets `sgn = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointKernel {
    grid: Grid,
    even: Vec<f64>,
    odd: Vec<f64>,
}

impl PointKernel {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn even(&self) -> &[f64] {
        &self.even
    }

    pub fn odd(&self) -> &[f64] {
        &self.odd
    }

    /// Kernel matrix at node `n`.
    pub fn matrix_at(&self, n: usize) -> [[f64; 2]; 2] {
        let (e, o) = (self.even[n], self.odd[n]);
        [[e, -o], [o, -e]]
    }

    /// The field `G(x) v`.
    pub fn apply(&self, v: SpinorValue) -> SpinorField {
        let n = self.grid.len();
        let mut psi1 = Vec::with_capacity(n);
        let mut psi2 = Vec::with_capacity(n);
        for i in 0..n {
            let (e, o) = (self.even[i], self.odd[i]);
            psi1.push(e * v[0] - o * v[1]);
            psi2.push(o * v[0] - e * v[1]);
        }
        SpinorField::from_components(self.grid, psi1, psi2).expect("same grid")
    }
}

/// The kernel of `D_m^{-1} delta` sampled on `grid`.
pub fn dirac_inverse_delta(grid: Grid, m: f64) -> PointKernel {
    let n = grid.len();
    let mut even = Vec::with_capacity(n);
    let mut odd = Vec::with_capacity(n);
    for i in 0..n {
        let x = grid.x(i);
        let e = 0.5 * (-m * x.abs()).exp();
        let sign = if i == 0 || x == 0.0 { 0.0 } else { x.signum() };
        even.push(e);
        odd.push(sign * e);
    }
    PointKernel { grid, even, odd }
}

/// `(dx / N) sum_i (k_i^2 + m^2) |c_i|^2` over both components: twice the
/// quadratic part of the energy, expressed through FFT coefficients.
pub(crate) fn weighted_spectral_sum(grid: &Grid, m: f64, coeffs: &[Vec<Complex64>; 2]) -> f64 {
    let mut acc = 0.0;
    for i in 0..grid.len() {
        let k = grid.wavenumber(i);
        acc += (k * k + m * m) * (coeffs[0][i].norm_sqr() + coeffs[1][i].norm_sqr());
    }
    acc * grid.dx() / grid.len() as f64
}

/// Point value at `x = 0` reconstructed from FFT coefficients.
pub(crate) fn origin_value(coeffs: &[Vec<Complex64>; 2]) -> SpinorValue {
    let n = coeffs[0].len();
    let mut v = SpinorValue::zero();
    for i in 0..n {
        let s = Grid::origin_phase(i);
        v[0] += coeffs[0][i] * s;
        v[1] += coeffs[1][i] * s;
    }
    v.scale(Complex64::new(1.0 / n as f64, 0.0))
}

/// `H(f) = 1/2 <f, (-d^2/dx^2 + m^2) f> + U(f(0))`.
pub fn energy(field: &SpinorField, p: &ModelParams) -> f64 {
    let grid = *field.grid();
    let transform = Transform::new(grid.len());
    let coeffs = spectrum(field, &transform);
    0.5 * weighted_spectral_sum(&grid, p.m, &coeffs) + p.potential(field.value_at_origin())
}

/// `L^2`, weighted `H^1` and local `H^1` norms of a field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub l2: f64,
    /// `(||f'||^2 + m^2 ||f||^2)^{1/2}`.
    pub h1: f64,
    /// Same as `h1` restricted to `|x| < R` (equals `h1` when no `R` is given).
    pub h1_local: f64,
}

pub fn norms(field: &SpinorField, m: f64, radius: Option<f64>) -> Result<Norms> {
    let grid = *field.grid();
    if let Some(r) = radius {
        if !(r > 0.0 && r <= grid.half_length()) {
            return Err(Error::RWindowTooLarge {
                r,
                half_length: grid.half_length(),
            });
        }
    }
    let transform = Transform::new(grid.len());
    let coeffs = spectrum(field, &transform);
    let h1 = weighted_spectral_sum(&grid, m, &coeffs).sqrt();
    let l2 = field.l2_norm();
    let h1_local = match radius {
        None => h1,
        Some(r) => {
            let d = derivative(field);
            local_h1(field, &d, m, r)
        }
    };
    Ok(Norms { l2, h1, h1_local })
}

/// Trapezoid weight of node `x` for the window `|x| < r`.
pub(crate) fn window_weight(x: f64, r: f64) -> f64 {
    let ax = x.abs();
    if ax < r {
        1.0
    } else if ax == r {
        0.5
    } else {
        0.0
    }
}

pub(crate) fn local_h1(field: &SpinorField, deriv: &SpinorField, m: f64, r: f64) -> f64 {
    let grid = field.grid();
    let mut acc = 0.0;
    for n in 0..grid.len() {
        let w = window_weight(grid.x(n), r);
        if w == 0.0 {
            continue;
        }
        acc += w * (deriv.at(n).norm_sqr() + m * m * field.at(n).norm_sqr());
    }
    (acc * grid.dx()).sqrt()
}
