//! Initial data generators: sampled solitary waves, Gaussian packets and
//! seeded smooth noise.

use std::str::FromStr;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Grid, Mode, ModelParams, SpinorField, SpinorValue};
use crate::solitary::{amplitude_roots, solitary_field, SolitaryParams};
use crate::spectral::Transform;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InitialSpec {
    /// Solitary wave at `t = 0` with the smallest nonzero amplitude root of
    /// each component, multiplied by `scale`. In linear mode the amplitudes
    /// are `scale` itself.
    Solitary { omega: [f64; 2], scale: f64 },
    /// `amplitude * exp(-(x - center)^2 / (2 width^2) + i k0 x) * spinor`.
    Gaussian {
        center: f64,
        width: f64,
        amplitude: f64,
        #[serde(default = "first_component")]
        spinor: [Complex64; 2],
        #[serde(default)]
        k0: f64,
    },
    /// Seeded complex noise, low-pass filtered to unit correlation length
    /// and multiplied by `exp(-x^2 / (2 width^2))`.
    Noise {
        seed: u64,
        width: f64,
        #[serde(default = "unit")]
        amplitude: f64,
    },
}

fn first_component() -> [Complex64; 2] {
    [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
}

fn unit() -> f64 {
    1.0
}

impl InitialSpec {
    pub fn gaussian(center: f64, width: f64, amplitude: f64) -> Self {
        InitialSpec::Gaussian {
            center,
            width,
            amplitude,
            spinor: first_component(),
            k0: 0.0,
        }
    }

    pub fn build(&self, p: &ModelParams, grid: Grid) -> Result<SpinorField> {
        match *self {
            InitialSpec::Solitary { omega, scale } => {
                let sp = solitary_params(p, omega, scale)?;
                Ok(solitary_field(&sp, grid, 0.0))
            }
            InitialSpec::Gaussian {
                center,
                width,
                amplitude,
                spinor,
                k0,
            } => {
                if !(width > 0.0) {
                    return Err(Error::UnknownSpec(format!("gaussian width must be positive, got {width}")));
                }
                Ok(SpinorField::from_fn(grid, |x| {
                    let g = amplitude
                        * (-(x - center).powi(2) / (2.0 * width * width)).exp()
                        * Complex64::from_polar(1.0, k0 * x);
                    SpinorValue::new(g * spinor[0], g * spinor[1])
                }))
            }
            InitialSpec::Noise { seed, width, amplitude } => {
                if !(width > 0.0) {
                    return Err(Error::UnknownSpec(format!("noise width must be positive, got {width}")));
                }
                Ok(noise(grid, seed, width, amplitude))
            }
        }
    }
}

/// Parameters of the solitary wave built by [`InitialSpec::Solitary`].
pub fn solitary_params(p: &ModelParams, omega: [f64; 2], scale: f64) -> Result<SolitaryParams> {
    let mut amp = [Complex64::new(0.0, 0.0); 2];
    for j in 0..2 {
        amp[j] = match p.mode() {
            Mode::Linear => Complex64::new(scale, 0.0),
            Mode::Polynomial => {
                let roots = amplitude_roots(p, omega[j], j + 1)?;
                let c = roots.nonzero().first().copied().unwrap_or(0.0);
                Complex64::new(scale * c, 0.0)
            }
        };
    }
    SolitaryParams::new(p.m, omega, amp)
}

fn noise(grid: Grid, seed: u64, width: f64, amplitude: f64) -> SpinorField {
    let n = grid.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let transform = Transform::new(n);
    let mut comps: [Vec<Complex64>; 2] = Default::default();
    for comp in comps.iter_mut() {
        let mut v: Vec<Complex64> = (0..n)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re, im)
            })
            .collect();
        transform.forward(&mut v);
        for (i, z) in v.iter_mut().enumerate() {
            let k = grid.wavenumber(i);
            *z *= (-0.5 * k * k).exp();
        }
        transform.inverse(&mut v);
        for (i, z) in v.iter_mut().enumerate() {
            let x = grid.x(i);
            *z *= amplitude * (-x * x / (2.0 * width * width)).exp();
        }
        *comp = v;
    }
    let [a, b] = comps;
    SpinorField::from_components(grid, a, b).expect("grid length")
}

/// Compact text form, e.g. `gaussian(0, 1, 0.5)`, `gaussian(0, 1, 0.5, 1, 0, 2)`
/// (spinor as two real weights, then carrier), `solitary(0.9, -0.85, 1)`,
/// `noise(7, 3)`.
impl FromStr for InitialSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::UnknownSpec(s.to_string());
        let s = s.trim();
        let open = s.find('(').ok_or_else(bad)?;
        let inner = s[open + 1..].strip_suffix(')').ok_or_else(bad)?;
        let args: Vec<f64> = if inner.trim().is_empty() {
            Vec::new()
        } else {
            inner
                .split(',')
                .map(|a| a.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad())?
        };
        match (s[..open].trim(), args.as_slice()) {
            ("solitary", &[w1, w2]) => Ok(InitialSpec::Solitary { omega: [w1, w2], scale: 1.0 }),
            ("solitary", &[w1, w2, scale]) => Ok(InitialSpec::Solitary { omega: [w1, w2], scale }),
            ("gaussian", &[c, w, a]) => Ok(InitialSpec::gaussian(c, w, a)),
            ("gaussian", &[c, w, a, s1, s2]) | ("gaussian", &[c, w, a, s1, s2, _]) => Ok(InitialSpec::Gaussian {
                center: c,
                width: w,
                amplitude: a,
                spinor: [Complex64::new(s1, 0.0), Complex64::new(s2, 0.0)],
                k0: args.get(5).copied().unwrap_or(0.0),
            }),
            ("noise", &[seed, w]) | ("noise", &[seed, w, _]) if seed >= 0.0 && seed.fract() == 0.0 => {
                Ok(InitialSpec::Noise {
                    seed: seed as u64,
                    width: w,
                    amplitude: args.get(2).copied().unwrap_or(1.0),
                })
            }
            _ => Err(bad()),
        }
    }
}
