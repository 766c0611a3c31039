//! The solitary-wave manifold: dispersion functions, amplitude equations,
//! closed-form profiles, two-frequency fields, jump certificates and the
//! linear-coupling closed forms.
//!
//! Component `j = 1` of a solitary wave oscillates at `omega_1` at the origin
//! and component `j = 2` at `omega_2`; each profile `phi_{omega_j}` also
//! carries an odd tail in the other component that vanishes at `x = 0`.
//! Component indices in this module's public API are 1-based to match that
//! pairing.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Grid, Mode, ModelParams, SpinorField, SpinorValue};
use crate::numerics::{cauchy_bound, poly_real_roots};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `kappa(omega) = sqrt(m^2 - omega^2)` on the closed gap.
pub fn kappa(omega: f64, m: f64) -> Result<f64> {
    if omega.abs() > m || !omega.is_finite() {
        return Err(Error::OmegaOutsideGap { omega, m });
    }
    Ok(((m - omega) * (m + omega)).sqrt())
}

/// `k(omega) = sqrt(omega^2 - m^2)` on the closed upper half-plane with
/// `Im k >= 0`, continued to the real axis from above: `k = i kappa` inside
/// the gap, `k = sgn(omega) sqrt(omega^2 - m^2)` outside.
pub fn k_of_omega(omega: Complex64, m: f64) -> Complex64 {
    if omega.im == 0.0 {
        let w = omega.re;
        if w.abs() <= m {
            return I * ((m - w) * (m + w)).sqrt();
        }
        return Complex64::new(w.signum() * ((w - m) * (w + m)).sqrt(), 0.0);
    }
    let k = (omega * omega - m * m).sqrt();
    if k.im < 0.0 {
        -k
    } else {
        k
    }
}

/// A frequency together with its dispersion data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionPoint {
    pub omega: f64,
    /// `sqrt(m^2 - omega^2)` for `|omega| <= m`.
    pub kappa: Option<f64>,
    pub k: Complex64,
}

impl DispersionPoint {
    pub fn new(omega: f64, m: f64) -> Self {
        Self {
            omega,
            kappa: kappa(omega, m).ok(),
            k: k_of_omega(Complex64::new(omega, 0.0), m),
        }
    }
}

/// `e^{ik|x|} / (2ik)`, the decaying fundamental solution of
/// `G'' + (omega^2 - m^2) G = delta`.
pub fn helmholtz_green(x: f64, omega: Complex64, m: f64) -> Result<Complex64> {
    if omega.im == 0.0 && omega.re.abs() == m {
        return Err(Error::BranchPoint { omega: omega.re });
    }
    let k = k_of_omega(omega, m);
    Ok((I * k * x.abs()).exp() / (2.0 * I * k))
}

fn check_component(j: usize) {
    assert!(j == 1 || j == 2, "component index must be 1 or 2, got {j}");
}

/// `b_j(omega) = 1 + (-1)^{j+1} omega / (m + kappa)`, the value of the
/// `j`-th profile at the origin per unit amplitude. Equals
/// `1 + (-1)^{j+1} (m - kappa) / omega` away from `omega = 0`.
pub fn stable_b(omega: f64, j: usize, m: f64) -> Result<f64> {
    check_component(j);
    if !(omega.abs() < m) {
        return Err(Error::OmegaOutsideGap { omega, m });
    }
    let kap = kappa(omega, m)?;
    let sign = if j == 1 { 1.0 } else { -1.0 };
    Ok(1.0 + sign * omega / (m + kap))
}

/// Real nonnegative solutions `C` of `2 C kappa = F_j(C b_j)` at fixed `omega`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeRoots {
    pub omega: f64,
    pub j: usize,
    /// Always starts with the trivial root `0`.
    pub roots: Vec<f64>,
    /// Parallel to `roots`: true where the amplitude polynomial only touches zero.
    pub tangential: Vec<bool>,
}

impl AmplitudeRoots {
    pub fn nonzero(&self) -> &[f64] {
        &self.roots[1..]
    }
}

/// Solves the amplitude equation `2 C kappa = F_j(C b_j)` for `C >= 0`.
///
/// With `s = C^2` this becomes `b_j a_j(s b_j^2) = 2 kappa`, a polynomial of
/// degree `N_j - 1` in `s`, whose nonnegative roots are isolated and bisected.
pub fn amplitude_roots(p: &ModelParams, omega: f64, j: usize) -> Result<AmplitudeRoots> {
    check_component(j);
    if p.mode() != Mode::Polynomial {
        return Err(Error::WrongMode { expected: "polynomial" });
    }
    let b = stable_b(omega, j, p.m)?;
    let kap = kappa(omega, p.m)?;
    let poly = amplitude_polynomial(p, j, b, kap);
    let hi = cauchy_bound(&poly);
    let scale = poly.iter().map(|c| c.abs()).fold(0.0, f64::max);
    let mut roots = vec![0.0];
    let mut tangential = vec![false];
    for r in poly_real_roots(&poly, 0.0, hi, 1e-13 * scale) {
        if r.value > 0.0 {
            roots.push(r.value.sqrt());
            tangential.push(r.tangential);
        }
    }
    Ok(AmplitudeRoots {
        omega,
        j,
        roots,
        tangential,
    })
}

/// Coefficients in `s` of `b a_j(s b^2) - 2 kappa`.
fn amplitude_polynomial(p: &ModelParams, j: usize, b: f64, kap: f64) -> Vec<f64> {
    let a = p.coupling_coefficients(j - 1);
    let b2 = b * b;
    let mut pow = b;
    let mut out = Vec::with_capacity(a.len());
    for c in a {
        out.push(c * pow);
        pow *= b2;
    }
    out[0] -= 2.0 * kap;
    out
}

/// `|2 C kappa - F_j(C b_j)|` for a complex amplitude.
pub fn amplitude_residual(p: &ModelParams, omega: f64, j: usize, amp: Complex64) -> Result<f64> {
    check_component(j);
    let b = stable_b(omega, j, p.m)?;
    let kap = kappa(omega, p.m)?;
    Ok((2.0 * kap * amp - p.nonlinearity_component(j - 1, amp * b)).norm())
}

/// Frequencies, amplitudes and decay rates of a two-frequency solitary wave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolitaryParams {
    pub m: f64,
    pub omega: [f64; 2],
    pub amp: [Complex64; 2],
    pub kappa: [f64; 2],
}

impl SolitaryParams {
    pub fn new(m: f64, omega: [f64; 2], amp: [Complex64; 2]) -> Result<Self> {
        let mut kap = [0.0; 2];
        for j in 0..2 {
            if !(omega[j].abs() < m) {
                return Err(Error::OmegaOutsideGap { omega: omega[j], m });
            }
            kap[j] = kappa(omega[j], m)?;
        }
        Ok(Self {
            m,
            omega,
            amp,
            kappa: kap,
        })
    }

    /// Amplitude-equation residual per component.
    pub fn residuals(&self, p: &ModelParams) -> Result<[f64; 2]> {
        Ok([
            amplitude_residual(p, self.omega[0], 1, self.amp[0])?,
            amplitude_residual(p, self.omega[1], 2, self.amp[1])?,
        ])
    }

    /// Global phase rotation `C_j -> e^{i theta} C_j`.
    pub fn rotated(&self, theta: f64) -> Self {
        let r = Complex64::from_polar(1.0, theta);
        Self {
            amp: [self.amp[0] * r, self.amp[1] * r],
            ..*self
        }
    }

    /// Point value `psi(0, t)`.
    pub fn origin_value(&self, t: f64) -> SpinorValue {
        let b1 = stable_b(self.omega[0], 1, self.m).expect("validated");
        let b2 = stable_b(self.omega[1], 2, self.m).expect("validated");
        SpinorValue::new(
            self.amp[0] * b1 * Complex64::from_polar(1.0, -self.omega[0] * t),
            self.amp[1] * b2 * Complex64::from_polar(1.0, -self.omega[1] * t),
        )
    }
}

/// `(e^{-kappa|x|} - e^{-m|x|}) / omega`, written through `expm1` so that it
/// stays accurate (and equals 0) as `omega -> 0`.
fn e1(ax: f64, omega: f64, kap: f64, m: f64) -> f64 {
    if omega == 0.0 {
        return 0.0;
    }
    (-m * ax).exp() * (omega * omega * ax / (m + kap)).exp_m1() / omega
}

/// `(m e^{-kappa|x|} - kappa e^{-m|x|}) / omega = m e1 + omega e^{-m|x|} / (m + kappa)`.
fn e2(ax: f64, omega: f64, kap: f64, m: f64) -> f64 {
    m * e1(ax, omega, kap, m) + omega * (-m * ax).exp() / (m + kap)
}

/// `d/d|x|` of `e1`: `(m e^{-m|x|} - kappa e^{-kappa|x|}) / omega`.
fn e1_prime(ax: f64, omega: f64, kap: f64, m: f64) -> f64 {
    -m * e1(ax, omega, kap, m) + omega * (-kap * ax).exp() / (m + kap)
}

/// `d/d|x|` of `e2`: `-m kappa e1`.
fn e2_prime(ax: f64, omega: f64, kap: f64, m: f64) -> f64 {
    -m * kap * e1(ax, omega, kap, m)
}

fn sgn0(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum()
    }
}

/// Unit-amplitude profile shape of component `j` at frequency `omega`.
pub fn profile_shape(omega: f64, j: usize, m: f64, x: f64) -> Result<[f64; 2]> {
    check_component(j);
    let kap = kappa(omega, m)?;
    let ax = x.abs();
    let decay = (-kap * ax).exp();
    let odd = kap * sgn0(x) * e1(ax, omega, kap, m);
    let even = e2(ax, omega, kap, m);
    Ok(if j == 1 {
        [decay + even, odd]
    } else {
        [-odd, decay - even]
    })
}

/// One-sided spatial derivative of the unit-amplitude profile; `side` is
/// `+1` or `-1` and only matters at `x = 0`.
pub fn profile_shape_derivative(omega: f64, j: usize, m: f64, x: f64, side: f64) -> Result<[f64; 2]> {
    check_component(j);
    let kap = kappa(omega, m)?;
    let s = if x == 0.0 { side.signum() } else { x.signum() };
    let ax = x.abs();
    // d/dx f(|x|) = s f'(|x|); d/dx [sgn(x) g(|x|)] = g'(|x|) away from 0 and
    // for g(0) = 0 also at 0.
    let d_decay = -kap * (-kap * ax).exp() * s;
    let d_even = e2_prime(ax, omega, kap, m) * s;
    let d_odd = kap * e1_prime(ax, omega, kap, m);
    Ok(if j == 1 {
        [d_decay + d_even, d_odd]
    } else {
        [-d_odd, d_decay - d_even]
    })
}

/// `phi_{omega_j}(x)` including the amplitude `C_j`.
pub fn profile(sp: &SolitaryParams, j: usize, x: f64) -> SpinorValue {
    let shape = profile_shape(sp.omega[j - 1], j, sp.m, x).expect("validated");
    let c = sp.amp[j - 1];
    SpinorValue::new(c * shape[0], c * shape[1])
}

/// `phi_{omega_1}(x) e^{-i omega_1 t} + phi_{omega_2}(x) e^{-i omega_2 t}` at one point.
pub fn solitary_value(sp: &SolitaryParams, x: f64, t: f64) -> SpinorValue {
    let r1 = Complex64::from_polar(1.0, -sp.omega[0] * t);
    let r2 = Complex64::from_polar(1.0, -sp.omega[1] * t);
    profile(sp, 1, x).scale(r1) + profile(sp, 2, x).scale(r2)
}

/// The two-frequency solitary field sampled on `grid` at time `t`.
pub fn solitary_field(sp: &SolitaryParams, grid: Grid, t: f64) -> SpinorField {
    SpinorField::from_fn(grid, |x| solitary_value(sp, x, t))
}

/// `|gamma_j'(0+, t) - gamma_j'(0-, t) + F_j(gamma_j(0, t))|` for both components,
/// with the one-sided derivatives evaluated analytically.
pub fn jump_residual(sp: &SolitaryParams, p: &ModelParams, t: f64) -> [f64; 2] {
    let mut jump = [Complex64::new(0.0, 0.0); 2];
    for k in 1..=2 {
        let rot = sp.amp[k - 1] * Complex64::from_polar(1.0, -sp.omega[k - 1] * t);
        let plus = profile_shape_derivative(sp.omega[k - 1], k, sp.m, 0.0, 1.0).expect("validated");
        let minus = profile_shape_derivative(sp.omega[k - 1], k, sp.m, 0.0, -1.0).expect("validated");
        for c in 0..2 {
            jump[c] += rot * (plus[c] - minus[c]);
        }
    }
    let f = p.nonlinearity(sp.origin_value(t));
    [(jump[0] + f[0]).norm(), (jump[1] + f[1]).norm()]
}

/// Frequencies of the linear-coupling solitary waves,
/// `omega_j = (-1)^j (a_j - m - sqrt(m^2 - a_j^2 + 2 m a_j)) / 2` for `0 < a_j < 2m`.
pub fn linear_frequencies(p: &ModelParams) -> Result<[Option<f64>; 2]> {
    let a = match &p.nonlinearity {
        crate::model::Nonlinearity::Linear { a } => *a,
        _ => return Err(Error::WrongMode { expected: "linear" }),
    };
    let m = p.m;
    let mut out = [None, None];
    for j in 0..2 {
        let aj = a[j];
        if aj >= 2.0 * m {
            return Err(Error::LinearCouplingTooLarge {
                component: j + 1,
                a: aj,
                two_m: 2.0 * m,
            });
        }
        if aj <= 0.0 {
            continue;
        }
        let sign = if j == 0 { -1.0 } else { 1.0 };
        let w = sign * 0.5 * (aj - m - (m * m - aj * aj + 2.0 * m * aj).sqrt());
        debug_assert!(linear_relation_defect(w, j + 1, m, aj) < 1e-10 * m.max(1.0));
        out[j] = Some(w);
    }
    Ok(out)
}

/// `|sqrt(m^2 - w^2) + m + (-1)^j w - a_j|`.
pub fn linear_relation_defect(omega: f64, j: usize, m: f64, a: f64) -> f64 {
    let sign = if j == 1 { -1.0 } else { 1.0 };
    (((m - omega) * (m + omega)).sqrt() + m + sign * omega - a).abs()
}

/// Roots of the amplitude equation over a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SolitaryBranch {
    pub j: usize,
    pub points: Vec<AmplitudeRoots>,
}

pub fn scan_branch(p: &ModelParams, j: usize, omegas: &[f64]) -> Result<SolitaryBranch> {
    let points = omegas
        .iter()
        .map(|&w| amplitude_roots(p, w, j))
        .collect::<Result<Vec<_>>>()?;
    Ok(SolitaryBranch { j, points })
}

/// `n` midpoints of a uniform partition of the open gap `(-m, m)`.
pub fn gap_grid(m: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| -m + (i as f64 + 0.5) * 2.0 * m / n as f64)
        .collect()
}

/// Weighted `H^1` norm of a unit-amplitude profile, by composite Simpson
/// quadrature of the closed-form values and derivatives on `[0, X]`
/// (profiles have definite parity, so the full line is twice the half line).
pub fn profile_h1_norm(omega: f64, j: usize, m: f64) -> Result<f64> {
    let kap = kappa(omega, m)?;
    let rate = kap.min(m);
    if rate <= 0.0 {
        return Err(Error::OmegaOutsideGap { omega, m });
    }
    let x_max = 40.0 / rate;
    let n = 40_001;
    let h = x_max / (n - 1) as f64;
    let w = crate::numerics::simpson_weights(n, h);
    let mut acc = 0.0;
    for (i, wi) in w.iter().enumerate() {
        let x = i as f64 * h;
        let v = profile_shape(omega, j, m, x)?;
        let d = profile_shape_derivative(omega, j, m, x, 1.0)?;
        acc += wi * (d[0] * d[0] + d[1] * d[1] + m * m * (v[0] * v[0] + v[1] * v[1]));
    }
    Ok((2.0 * acc).sqrt())
}


#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn rotated_roots_stay_on_the_manifold(w1 in -0.99f64..0.99, w2 in -0.99f64..0.99, theta in -7.0f64..7.0, t in 0.0f64..50.0) {
            let p = ModelParams::standard();
            let c1 = amplitude_roots(&p, w1, 1).unwrap().roots.last().copied().unwrap();
            let c2 = amplitude_roots(&p, w2, 2).unwrap().roots.last().copied().unwrap();
            let sp = SolitaryParams::new(1.0, [w1, w2], [Complex64::new(c1, 0.0), Complex64::new(c2, 0.0)]).unwrap();
            let r = jump_residual(&sp.rotated(theta), &p, t);
            prop_assert!(r[0] < 1e-10 && r[1] < 1e-10, "{:?}", r);
        }

        #[test]
        fn kappa_on_the_circle(m in 0.1f64..10.0, u in -1.0f64..1.0) {
            let w = m * u;
            let k = kappa(w, m).unwrap();
            prop_assert!(k >= 0.0);
            prop_assert!((k * k + w * w - m * m).abs() <= 1e-13 * m * m);
        }
    }
}
