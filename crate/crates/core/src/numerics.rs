//! Small numerical building blocks: bracketing root finders, polynomial root
//! isolation, golden-section search, composite Simpson weights and Bessel
//! functions.

/// Evaluates `sum c_i s^i`.
pub fn poly_eval(coeffs: &[f64], s: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * s + c)
}

pub fn poly_derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| i as f64 * c)
        .collect()
}

/// Bisection on a sign change `f(lo) * f(hi) <= 0`, run until the bracket
/// stops shrinking in floating point.
pub fn bisect(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() || !flo.is_finite() || !fhi.is_finite() {
        return None;
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// A real root of a polynomial located inside a search interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyRoot {
    pub value: f64,
    /// The polynomial touches zero without changing sign (even multiplicity).
    pub tangential: bool,
}

/// All real roots of `coeffs` in `[lo, hi]`, sorted ascending.
///
/// Roots are isolated recursively: the critical points of the polynomial
/// split the interval into monotone pieces, and each piece holds at most one
/// simple root, found by bisection. Critical points where the polynomial
/// vanishes to within `touch_tol` are reported as tangential roots.
pub fn poly_real_roots(coeffs: &[f64], lo: f64, hi: f64, touch_tol: f64) -> Vec<PolyRoot> {
    let coeffs = trim(coeffs);
    if coeffs.len() <= 1 {
        return Vec::new();
    }
    let crit: Vec<f64> = poly_real_roots(&poly_derivative(coeffs), lo, hi, 0.0)
        .into_iter()
        .map(|r| r.value)
        .filter(|&c| c > lo && c < hi)
        .collect();
    let mut knots = Vec::with_capacity(crit.len() + 2);
    knots.push(lo);
    knots.extend(crit.iter().copied());
    knots.push(hi);

    let mut roots: Vec<PolyRoot> = Vec::new();
    let f = |s: f64| poly_eval(coeffs, s);
    // Critical points at which the polynomial vanishes: tangential when the
    // sign is the same on both neighbouring monotone pieces.
    for (i, &c) in crit.iter().enumerate() {
        if f(c).abs() <= touch_tol {
            let left = f(0.5 * (knots[i] + c));
            let right = f(0.5 * (c + knots[i + 2]));
            let tangential = left.signum() == right.signum();
            roots.push(PolyRoot { value: c, tangential });
        }
    }
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        if let Some(r) = bisect(f, a, b) {
            push_unique(&mut roots, PolyRoot { value: r, tangential: false });
        }
    }
    roots.sort_by(|a, b| a.value.total_cmp(&b.value));
    roots
}

fn push_unique(roots: &mut Vec<PolyRoot>, r: PolyRoot) {
    if !roots
        .iter()
        .any(|q| (q.value - r.value).abs() <= 1e-9 * (1.0 + r.value.abs()))
    {
        roots.push(r);
    }
}

fn trim(coeffs: &[f64]) -> &[f64] {
    let mut n = coeffs.len();
    while n > 0 && coeffs[n - 1] == 0.0 {
        n -= 1;
    }
    &coeffs[..n]
}

/// Cauchy bound: every root of the polynomial has modulus below it.
pub fn cauchy_bound(coeffs: &[f64]) -> f64 {
    let coeffs = trim(coeffs);
    match coeffs.split_last() {
        None => 0.0,
        Some((lead, rest)) => {
            1.0 + rest
                .iter()
                .map(|c| (c / lead).abs())
                .fold(0.0, f64::max)
        }
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section minimisation of a unimodal function on `[a, b]`.
/// Returns `(argmin, min)`.
pub fn golden_section(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Weights of the composite Simpson rule on `n` uniformly spaced samples
/// with spacing `h`. An odd number of intervals closes with Simpson's 3/8
/// rule on the last three intervals. Needs `n >= 3`.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    assert!(n >= 3, "Simpson quadrature needs at least three samples");
    let intervals = n - 1;
    let mut w = vec![0.0; n];
    let (simpson_end, tail) = if intervals % 2 == 0 {
        (intervals, false)
    } else if intervals >= 3 {
        (intervals - 3, true)
    } else {
        (0, true)
    };
    let mut i = 0;
    while i + 2 <= simpson_end {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
        i += 2;
    }
    if tail {
        if intervals >= 3 {
            let s = simpson_end;
            w[s] += 3.0 * h / 8.0;
            w[s + 1] += 9.0 * h / 8.0;
            w[s + 2] += 9.0 * h / 8.0;
            w[s + 3] += 3.0 * h / 8.0;
        } else {
            // two samples: trapezoid
            w[0] += h / 2.0;
            w[1] += h / 2.0;
        }
    }
    w
}

/// Bessel function of the first kind, order zero.
pub fn bessel_j0(x: f64) -> f64 {
    libm::j0(x)
}

/// Bessel function of the first kind, order one.
pub fn bessel_j1(x: f64) -> f64 {
    libm::j1(x)
}

/// `J_1(z) / z`, continuous at `z = 0` where it equals `1/2`.
pub fn bessel_j1_over_z(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        let z2 = z * z;
        0.5 - z2 / 16.0 + z2 * z2 / 384.0
    } else {
        libm::j1(z) / z
    }
}


#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn finds_every_simple_root(mut r in prop::collection::vec(0.05f64..5.0, 1..5)) {
            r.sort_by(f64::total_cmp);
            prop_assume!(r.windows(2).all(|w| w[1] - w[0] > 1e-2));
            // expand prod (s - r_i)
            let mut c = vec![1.0];
            for &ri in &r {
                let mut next = vec![0.0; c.len() + 1];
                for (i, &ci) in c.iter().enumerate() {
                    next[i] -= ri * ci;
                    next[i + 1] += ci;
                }
                c = next;
            }
            let found = poly_real_roots(&c, 0.0, cauchy_bound(&c), 0.0);
            prop_assert_eq!(found.len(), r.len());
            for (f, e) in found.iter().zip(&r) {
                prop_assert!((f.value - e).abs() < 1e-8, "{} vs {}", f.value, e);
            }
        }

        #[test]
        fn simpson_weights_sum_to_length(n in 3usize..200, h in 1e-3f64..1.0) {
            let total: f64 = simpson_weights(n, h).iter().sum();
            prop_assert!((total - (n - 1) as f64 * h).abs() < 1e-12 * n as f64);
        }
    }
}
