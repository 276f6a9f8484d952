//! The straight-line average `phi(s) = integral_0^1 exp(i lambda s) d lambda`
//! and its first two derivatives.
//!
//! The line-integral gauge reduces to these functions mode by mode: for a
//! plane wave of wavevector `k`, averaging along the segment from the origin
//! to `x` produces `phi(k.x)`.

use num_complex::Complex64;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Below this `|s|` the power series is used instead of the closed forms,
/// which lose digits to cancellation.
const SERIES_RADIUS: f64 = 0.5;

/// `[phi(s), phi'(s), phi''(s)]`.
pub fn phi_with_derivatives(s: f64) -> [Complex64; 3] {
    if s.abs() < SERIES_RADIUS {
        return [series(s, 0), series(s, 1), series(s, 2)];
    }
    let e = Complex64::from_polar(1.0, s);
    let p0 = (e - 1.0) / (I * s);
    let p1 = (e - p0) / s;
    let p2 = (I * e - 2.0 * p1) / s;
    [p0, p1, p2]
}

pub fn phi(s: f64) -> Complex64 {
    phi_with_derivatives(s)[0]
}

/// `phi^(n)(s) = sum_j i^(j+n) s^j / (j! (j+n+1))`.
fn series(s: f64, n: usize) -> Complex64 {
    let mut total = Complex64::new(0.0, 0.0);
    let mut term = 1.0_f64; // s^j / j!
    let mut ipow = I.powu(n as u32);
    for j in 0..30 {
        total += ipow * (term / (j + n + 1) as f64);
        term *= s / (j + 1) as f64;
        ipow *= I;
        if term.abs() < 1e-18 {
            break;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_legendre_unit;

    fn by_quadrature(s: f64) -> [Complex64; 3] {
        let (x, w) = gauss_legendre_unit(40);
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for (l, w) in x.iter().zip(&w) {
            let e = Complex64::from_polar(*w, l * s);
            out[0] += e;
            out[1] += I * l * e;
            out[2] += -l * l * e;
        }
        out
    }

    #[test]
    fn matches_quadrature_on_both_branches() {
        for s in [0.0, 1e-9, 0.2, -0.49, 0.51, -1.3, 4.0, 17.5] {
            let a = phi_with_derivatives(s);
            let b = by_quadrature(s);
            for n in 0..3 {
                assert!((a[n] - b[n]).norm() < 2e-15 * (1.0 + s.abs()), "s={s} n={n}");
            }
        }
    }

    #[test]
    fn series_and_closed_form_agree_at_the_switch() {
        let s = SERIES_RADIUS;
        let closed = phi_with_derivatives(s);
        for n in 0..3 {
            assert!((closed[n] - series(s, n)).norm() < 1e-15, "n={n}");
        }
    }
}
