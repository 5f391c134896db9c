//! Small numerical helpers: normalised sinc, cached FFTs, the Kaiser window
//! and Gauss–Legendre quadrature nodes.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

/// Complex sample type used throughout the crate.
pub type C64 = Complex64;

/// `e^{j2πx}` for a real `x` (argument reduced modulo one for accuracy).
#[inline]
pub fn cis2pi(x: f64) -> C64 {
    let r = x - x.round();
    C64::from_polar(1.0, 2.0 * PI * r)
}

/// Normalised sinc, `sin(πx)/(πx)` with `sinc(0) = 1` and exact zeros at
/// the non-zero integers.
#[inline]
pub fn sinc(x: f64) -> f64 {
    if x == x.round() && x != 0.0 {
        return 0.0;
    }
    if x.abs() < 1e-9 {
        1.0 - (PI * x).powi(2) / 6.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

thread_local! {
    static PLANNER: RefCell<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if let Some(f) = p.1.get(&(len, inverse)) {
            return Arc::clone(f);
        }
        let f = if inverse { p.0.plan_fft_inverse(len) } else { p.0.plan_fft_forward(len) };
        p.1.insert((len, inverse), Arc::clone(&f));
        f
    })
}

/// In-place unnormalised forward DFT: `X[k] = Σ x[n] e^{-j2πkn/L}`.
pub fn fft_forward(buf: &mut [C64]) {
    if buf.len() > 1 {
        plan(buf.len(), false).process(buf);
    }
}

/// In-place unnormalised inverse DFT: `x[n] = Σ X[k] e^{+j2πkn/L}`.
pub fn fft_inverse(buf: &mut [C64]) {
    if buf.len() > 1 {
        plan(buf.len(), true).process(buf);
    }
}

/// Modified Bessel function of the first kind, order zero (power series).
pub fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..500 {
        term *= q / (k as f64 * k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Kaiser window evaluated at `u ∈ [-1, 1]` (zero outside).
pub fn kaiser(u: f64, beta: f64) -> f64 {
    if u.abs() > 1.0 {
        return 0.0;
    }
    bessel_i0(beta * (1.0 - u * u).max(0.0).sqrt()) / bessel_i0(beta)
}

/// Gauss–Legendre nodes and weights on `[a, b]` with `n` points.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    for i in 0..n {
        // Initial guess (Tricomi) then Newton iterations on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 {
                1.0
            } else if n == 1 {
                x
            } else {
                p1
            };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pnm1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((mid + half * x, half * w));
    }
    out
}

/// Euclidean-style modulo returning a value in `[0, m)`.
#[inline]
pub fn modi(a: i64, m: i64) -> i64 {
    a.rem_euclid(m)
}

/// Floor division consistent with [`modi`].
#[inline]
pub fn floordiv(a: i64, m: i64) -> i64 {
    a.div_euclid(m)
}

/// Sum of squared magnitudes.
pub fn energy(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinc_zeros_and_peak() {
        assert_eq!(sinc(0.0), 1.0);
        for k in 1..10 {
            assert!(sinc(k as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let nodes = gauss_legendre(6, -1.0, 2.0);
        // ∫_{-1}^{2} x^10 dx = (2^11 + 1)/11 requires degree ≤ 11.
        let s: f64 = nodes.iter().map(|(x, w)| w * x.powi(10)).sum();
        assert!((s - (2048.0 + 1.0) / 11.0).abs() < 1e-10);
    }

    #[test]
    fn bessel_i0_reference_values() {
        // Abramowitz & Stegun table values.
        assert!((bessel_i0(0.0) - 1.0).abs() < 1e-15);
        assert!((bessel_i0(1.0) - 1.266_065_877_752_008_4).abs() < 1e-14);
        assert!((bessel_i0(5.0) - 27.239_871_823_604_44).abs() < 1e-10);
    }

    #[test]
    fn fft_roundtrip() {
        let mut v: Vec<C64> = (0..12).map(|i| C64::new(i as f64, -(i as f64) * 0.5)).collect();
        let orig = v.clone();
        fft_forward(&mut v);
        fft_inverse(&mut v);
        for (a, b) in v.iter().zip(orig.iter()) {
            assert!((a / 12.0 - b).norm() < 1e-12);
        }
    }
}
