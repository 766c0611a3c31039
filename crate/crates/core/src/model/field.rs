use std::f64::consts::PI;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A point value `(z_1, z_2)` of the two-component field.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpinorValue(pub [Complex64; 2]);

impl SpinorValue {
    pub const fn new(z1: Complex64, z2: Complex64) -> Self {
        Self([z1, z2])
    }

    pub const fn zero() -> Self {
        Self([ZERO, ZERO])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0[0].norm_sqr() + self.0[1].norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(self, c: Complex64) -> Self {
        Self([self.0[0] * c, self.0[1] * c])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Index<usize> for SpinorValue {
    type Output = Complex64;
    fn index(&self, j: usize) -> &Complex64 {
        &self.0[j]
    }
}

impl IndexMut<usize> for SpinorValue {
    fn index_mut(&mut self, j: usize) -> &mut Complex64 {
        &mut self.0[j]
    }
}

impl std::ops::Add for SpinorValue {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self([self.0[0] + rhs.0[0], self.0[1] + rhs.0[1]])
    }
}

impl std::ops::Sub for SpinorValue {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self([self.0[0] - rhs.0[0], self.0[1] - rhs.0[1]])
    }
}

/// Uniform periodic grid on `[-L, L)` with `N` nodes; node `N/2` sits at `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct Grid {
    half_length: f64,
    points: usize,
}

#[derive(Serialize, Deserialize)]
struct RawGrid {
    #[serde(rename = "L")]
    half_length: f64,
    #[serde(rename = "N")]
    points: usize,
}

impl TryFrom<RawGrid> for Grid {
    type Error = Error;
    fn try_from(raw: RawGrid) -> Result<Self> {
        Grid::new(raw.half_length, raw.points)
    }
}

impl From<Grid> for RawGrid {
    fn from(g: Grid) -> Self {
        RawGrid {
            half_length: g.half_length,
            points: g.points,
        }
    }
}

impl Grid {
    pub fn new(half_length: f64, points: usize) -> Result<Self> {
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half-length must be positive, got {half_length}"
            )));
        }
        if points < 4 || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "point count must be a power of two >= 4, got {points}"
            )));
        }
        Ok(Self {
            half_length,
            points,
        })
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn len(&self) -> usize {
        self.points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_length / self.points as f64
    }

    pub fn origin_index(&self) -> usize {
        self.points / 2
    }

    /// `x_n = (n - N/2) dx`, exactly zero at the origin node.
    pub fn x(&self, n: usize) -> f64 {
        (n as f64 - self.origin_index() as f64) * self.dx()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.points).map(|n| self.x(n)).collect()
    }

    /// Wavenumber of FFT bin `i`: `pi n / L` with `n` in `-N/2..N/2`.
    pub fn wavenumber(&self, i: usize) -> f64 {
        let n = if i < self.points / 2 {
            i as f64
        } else {
            i as f64 - self.points as f64
        };
        PI * n / self.half_length
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.wavenumber(i)).collect()
    }

    /// `(-1)^i`: phase of mode `i` at the origin node `N/2`.
    pub(crate) fn origin_phase(i: usize) -> f64 {
        if i % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Two complex components sampled on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorField {
    grid: Grid,
    psi: [Vec<Complex64>; 2],
}

impl SpinorField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            psi: [vec![ZERO; grid.len()], vec![ZERO; grid.len()]],
        }
    }

    pub fn from_components(grid: Grid, psi1: Vec<Complex64>, psi2: Vec<Complex64>) -> Result<Self> {
        for c in [&psi1, &psi2] {
            if c.len() != grid.len() {
                return Err(Error::LengthMismatch {
                    expected: grid.len(),
                    got: c.len(),
                });
            }
        }
        Ok(Self {
            grid,
            psi: [psi1, psi2],
        })
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64) -> SpinorValue) -> Self {
        let mut out = Self::zeros(grid);
        for n in 0..grid.len() {
            let v = f(grid.x(n));
            out.psi[0][n] = v[0];
            out.psi[1][n] = v[1];
        }
        out
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn component(&self, j: usize) -> &[Complex64] {
        &self.psi[j]
    }

    pub fn component_mut(&mut self, j: usize) -> &mut [Complex64] {
        &mut self.psi[j]
    }

    pub fn components(&self) -> &[Vec<Complex64>; 2] {
        &self.psi
    }

    pub fn into_components(self) -> [Vec<Complex64>; 2] {
        self.psi
    }

    pub fn at(&self, n: usize) -> SpinorValue {
        SpinorValue::new(self.psi[0][n], self.psi[1][n])
    }

    pub fn value_at_origin(&self) -> SpinorValue {
        self.at(self.grid.origin_index())
    }

    pub fn is_finite(&self) -> bool {
        self.psi
            .iter()
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.psi.iter_mut().flatten().for_each(|z| *z *= c);
        out
    }

    pub fn axpy(&mut self, c: Complex64, other: &SpinorField) {
        for j in 0..2 {
            for (a, b) in self.psi[j].iter_mut().zip(&other.psi[j]) {
                *a += c * b;
            }
        }
    }

    pub fn sub(&self, other: &SpinorField) -> SpinorField {
        let mut out = self.clone();
        out.axpy(Complex64::new(-1.0, 0.0), other);
        out
    }

    pub fn add(&self, other: &SpinorField) -> SpinorField {
        let mut out = self.clone();
        out.axpy(Complex64::new(1.0, 0.0), other);
        out
    }

    /// Largest pointwise spinor modulus.
    pub fn sup_norm(&self) -> f64 {
        (0..self.grid.len())
            .map(|n| self.at(n).norm())
            .fold(0.0, f64::max)
    }

    /// `sqrt(dx * sum |psi|^2)`.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.psi.iter().flatten().map(|z| z.norm_sqr()).sum();
        (s * self.grid.dx()).sqrt()
    }
}
