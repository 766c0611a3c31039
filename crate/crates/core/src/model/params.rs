use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::SpinorValue;
use crate::error::{Error, Result};

/// Per-component nonlinearity of the point oscillator.
#[derive(Debug, Clone, PartialEq)]
pub enum Nonlinearity {
    /// `U_j(z) = sum_n u[j][n] |z|^{2n}`, `n = 0..=N_j`.
    Polynomial { u: [Vec<f64>; 2] },
    /// `F_j(z) = a_j z`, `U_j(z) = -a_j |z|^2 / 2`.
    Linear { a: [f64; 2] },
}

/// Mass and oscillator nonlinearity.
///
/// Serialises as `{ "m": .., "mode": "polynomial"|"linear", "u": [[..],[..]], "a": [a1, a2] }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct ModelParams {
    pub m: f64,
    pub nonlinearity: Nonlinearity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Polynomial,
    Linear,
}

#[derive(Serialize, Deserialize)]
struct RawModel {
    m: f64,
    mode: Mode,
    #[serde(default)]
    u: Option<[Vec<f64>; 2]>,
    #[serde(default)]
    a: Option<[f64; 2]>,
}

impl TryFrom<RawModel> for ModelParams {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        match raw.mode {
            Mode::Polynomial => {
                let u = raw.u.ok_or_else(|| {
                    Error::InvalidConfig("polynomial mode requires \"u\"".into())
                })?;
                ModelParams::polynomial(raw.m, u)
            }
            Mode::Linear => {
                let a = raw
                    .a
                    .ok_or_else(|| Error::InvalidConfig("linear mode requires \"a\"".into()))?;
                ModelParams::linear(raw.m, a)
            }
        }
    }
}

impl From<ModelParams> for RawModel {
    fn from(p: ModelParams) -> Self {
        match p.nonlinearity {
            Nonlinearity::Polynomial { u } => RawModel {
                m: p.m,
                mode: Mode::Polynomial,
                u: Some(u),
                a: None,
            },
            Nonlinearity::Linear { a } => RawModel {
                m: p.m,
                mode: Mode::Linear,
                u: None,
                a: Some(a),
            },
        }
    }
}

impl ModelParams {
    pub fn polynomial(m: f64, u: [Vec<f64>; 2]) -> Result<Self> {
        let p = Self {
            m,
            nonlinearity: Nonlinearity::Polynomial { u },
        };
        p.validate()?;
        Ok(p)
    }

    pub fn linear(m: f64, a: [f64; 2]) -> Result<Self> {
        let p = Self {
            m,
            nonlinearity: Nonlinearity::Linear { a },
        };
        p.validate()?;
        Ok(p)
    }

    /// Same polynomial potential on both components.
    pub fn symmetric_polynomial(m: f64, u: Vec<f64>) -> Result<Self> {
        Self::polynomial(m, [u.clone(), u])
    }

    /// `m = 1`, `U_j(z) = -|z|^2/2 + |z|^4/4`, i.e. `a_j(s) = 1 - s`.
    pub fn standard() -> Self {
        Self::symmetric_polynomial(1.0, vec![0.0, -0.5, 0.25]).expect("valid standard model")
    }

    pub fn mode(&self) -> Mode {
        match self.nonlinearity {
            Nonlinearity::Polynomial { .. } => Mode::Polynomial,
            Nonlinearity::Linear { .. } => Mode::Linear,
        }
    }

    /// Checks the structural assumptions that make the energy bounded below:
    /// a polynomial potential of degree `N_j >= 2` with positive leading
    /// coefficient, or linear couplings `a_j < 2m`.
    pub fn validate(&self) -> Result<()> {
        if !(self.m.is_finite() && self.m > 0.0) {
            return Err(Error::InvalidMass(self.m));
        }
        match &self.nonlinearity {
            Nonlinearity::Polynomial { u } => {
                for (j, coeffs) in u.iter().enumerate() {
                    let leading = coeffs.last().copied().unwrap_or(0.0);
                    if coeffs.len() < 3
                        || !(leading > 0.0)
                        || coeffs.iter().any(|c| !c.is_finite())
                    {
                        return Err(Error::DegenerateNonlinearity { component: j + 1 });
                    }
                }
            }
            Nonlinearity::Linear { a } => {
                for (j, &aj) in a.iter().enumerate() {
                    if !aj.is_finite() || aj >= 2.0 * self.m {
                        return Err(Error::LinearCouplingTooLarge {
                            component: j + 1,
                            a: aj,
                            two_m: 2.0 * self.m,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// `U_j` evaluated at `s = |z|^2` (component index `j` is zero based).
    pub fn potential_component(&self, j: usize, s: f64) -> f64 {
        match &self.nonlinearity {
            Nonlinearity::Polynomial { u } => horner(&u[j], s),
            Nonlinearity::Linear { a } => -0.5 * a[j] * s,
        }
    }

    /// `U(z) = U_1(z_1) + U_2(z_2)`.
    pub fn potential(&self, z: SpinorValue) -> f64 {
        (0..2)
            .map(|j| self.potential_component(j, z[j].norm_sqr()))
            .sum()
    }

    /// `a_j(s) = -sum_{n>=1} 2n u_{n,j} s^{n-1}`, or the constant `a_j` in linear mode.
    pub fn coupling(&self, j: usize, s: f64) -> f64 {
        match &self.nonlinearity {
            Nonlinearity::Polynomial { u } => {
                let mut acc = 0.0;
                for n in (1..u[j].len()).rev() {
                    acc = acc * s - 2.0 * n as f64 * u[j][n];
                }
                acc
            }
            Nonlinearity::Linear { a } => a[j],
        }
    }

    /// Coefficients of `a_j` as a polynomial in `s` (ascending powers).
    pub fn coupling_coefficients(&self, j: usize) -> Vec<f64> {
        match &self.nonlinearity {
            Nonlinearity::Polynomial { u } => (1..u[j].len())
                .map(|n| -2.0 * n as f64 * u[j][n])
                .collect(),
            Nonlinearity::Linear { a } => vec![a[j]],
        }
    }

    pub fn nonlinearity_component(&self, j: usize, z: Complex64) -> Complex64 {
        z * self.coupling(j, z.norm_sqr())
    }

    /// `F(z) = (a_1(|z_1|^2) z_1, a_2(|z_2|^2) z_2)`.
    pub fn nonlinearity(&self, z: SpinorValue) -> SpinorValue {
        SpinorValue::new(
            self.nonlinearity_component(0, z[0]),
            self.nonlinearity_component(1, z[1]),
        )
    }
}

fn horner(coeffs: &[f64], s: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * s + c)
}
