//! Separable delay-Doppler pulse-shaping filters (sinc and root raised cosine).
//!
//! A filter is `w(τ, ν) = √(BT) · g_τ(Bτ) · g_ν(Tν)` with unit energy.  Acting
//! on a time-domain signal it factors into a multiplication by a time window
//! followed by a convolution with a delay pulse:
//!
//! ```text
//! (W s)(t) = ∫ a(t − u) · β(u) · s(u) du,
//! a(τ) = √B · g_τ(Bτ),          â(f) = (1/√B) · P_{β_τ}(f/B)
//! β(u) = (1/√T) · P_{β_ν}(u/T)
//! ```
//!
//! where `P_β` is the square-root raised-cosine spectrum (the Fourier transform
//! of `rrc_β`; a rectangle for the sinc filter).

use crate::dd_core::{DDTapSet, FrameParams};
use crate::error::{Error, Result};
use crate::numeric::{sinc, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Half-width of the neighbourhood of a removable singularity inside which the
/// RRC value is interpolated from its analytic limit.
const RRC_SINGULAR_EPS: f64 = 1e-6;

/// Filter family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FilterKind {
    /// `sinc` in both delay and Doppler.
    Sinc,
    /// Root raised cosine with separate roll-offs in delay and Doppler.
    Rrc {
        /// Delay roll-off (bandwidth expansion factor `1 + β_τ`).
        beta_tau: f64,
        /// Doppler roll-off (duration expansion factor `1 + β_ν`).
        beta_nu: f64,
    },
}

impl FilterKind {
    /// `(β_τ, β_ν)`; zero for sinc.
    pub fn betas(&self) -> (f64, f64) {
        match *self {
            FilterKind::Sinc => (0.0, 0.0),
            FilterKind::Rrc { beta_tau, beta_nu } => (beta_tau, beta_nu),
        }
    }

    /// Default tap-window guard (half-width beyond the channel spread).
    pub fn default_guard(&self) -> i64 {
        match self {
            FilterKind::Sinc => 16,
            FilterKind::Rrc { .. } => 8,
        }
    }
}

/// A separable, unit-energy delay-Doppler filter tied to a bandwidth and duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparableFilter {
    /// Filter family and roll-offs.
    pub kind: FilterKind,
    /// Bandwidth `B` in hertz (delay scale `1/B`).
    pub b: f64,
    /// Duration `T` in seconds (Doppler scale `1/T`).
    pub t: f64,
    /// Amplitude `√(BT)` that makes the filter unit energy.
    pub amplitude: f64,
}

/// Root raised cosine `rrc_β(x)` with unit energy and unit symbol spacing.
///
/// Uses the standard denominator `πx(1 − (4βx)²)`; removable singularities at
/// `x = 0` and `x = ±1/(4β)` are replaced by their analytic limits, linearly
/// interpolated within `1e-6` of the singular point.
pub fn rrc_scalar(beta: f64, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidParameter(format!("roll-off must lie in [0, 1], got {beta}")));
    }
    Ok(rrc_unchecked(beta, x))
}

pub(crate) fn rrc_unchecked(beta: f64, x: f64) -> f64 {
    if beta == 0.0 {
        return sinc(x);
    }
    let x = x.abs();
    let xs = 1.0 / (4.0 * beta);
    if x < RRC_SINGULAR_EPS {
        let v0 = 1.0 - beta + 4.0 * beta / PI;
        let v1 = rrc_formula(beta, RRC_SINGULAR_EPS);
        return v0 + (v1 - v0) * x / RRC_SINGULAR_EPS;
    }
    if (x - xs).abs() < RRC_SINGULAR_EPS {
        let a = PI / (4.0 * beta);
        let lim = beta / 2f64.sqrt() * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
        let d = x - xs;
        let side = if d >= 0.0 { xs + RRC_SINGULAR_EPS } else { xs - RRC_SINGULAR_EPS };
        let v1 = rrc_formula(beta, side);
        return lim + (v1 - lim) * d.abs() / RRC_SINGULAR_EPS;
    }
    rrc_formula(beta, x)
}

fn rrc_formula(beta: f64, x: f64) -> f64 {
    let num = (PI * x * (1.0 - beta)).sin() + 4.0 * beta * x * (PI * x * (1.0 + beta)).cos();
    let den = PI * x * (1.0 - (4.0 * beta * x).powi(2));
    num / den
}

/// Square-root raised-cosine spectrum `P_β(f)`, the Fourier transform of `rrc_β`.
///
/// Flat (1) for `|f| ≤ (1−β)/2`, cosine roll-off to zero at `(1+β)/2`.  For
/// `β = 0` the rectangle takes the value ½ exactly at `|f| = ½`.
pub fn rrc_spectrum(beta: f64, f: f64) -> f64 {
    let f = f.abs();
    if beta == 0.0 {
        return if f < 0.5 {
            1.0
        } else if f == 0.5 {
            0.5
        } else {
            0.0
        };
    }
    let lo = 0.5 * (1.0 - beta);
    let hi = 0.5 * (1.0 + beta);
    if f <= lo {
        1.0
    } else if f < hi {
        (PI / (2.0 * beta) * (f - lo)).cos()
    } else {
        0.0
    }
}

/// The sinc filter `√(BT) sinc(Bτ) sinc(Tν)`.
pub fn sinc_filter(b: f64, t: f64) -> Result<SeparableFilter> {
    check_bt(b, t)?;
    Ok(SeparableFilter { kind: FilterKind::Sinc, b, t, amplitude: (b * t).sqrt() })
}

/// The RRC filter `√(BT) rrc_{β_τ}(Bτ) rrc_{β_ν}(Tν)`.
pub fn rrc_filter(b: f64, t: f64, beta_tau: f64, beta_nu: f64) -> Result<SeparableFilter> {
    check_bt(b, t)?;
    for beta in [beta_tau, beta_nu] {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::InvalidParameter(format!("roll-off must lie in [0, 1], got {beta}")));
        }
    }
    Ok(SeparableFilter { kind: FilterKind::Rrc { beta_tau, beta_nu }, b, t, amplitude: (b * t).sqrt() })
}

fn check_bt(b: f64, t: f64) -> Result<()> {
    if !(b.is_finite() && b > 0.0 && t.is_finite() && t > 0.0) {
        return Err(Error::InvalidParameter(format!("B and T must be positive, got B={b}, T={t}")));
    }
    Ok(())
}

impl SeparableFilter {
    /// Builds a filter of the given family for a frame.
    pub fn for_frame(kind: FilterKind, params: &FrameParams) -> Result<Self> {
        match kind {
            FilterKind::Sinc => sinc_filter(params.b, params.t),
            FilterKind::Rrc { beta_tau, beta_nu } => rrc_filter(params.b, params.t, beta_tau, beta_nu),
        }
    }

    /// Normalised delay profile `g_τ(x)`.
    pub fn g_tau(&self, x: f64) -> f64 {
        rrc_unchecked(self.kind.betas().0, x)
    }

    /// Normalised Doppler profile `g_ν(x)`.
    pub fn g_nu(&self, x: f64) -> f64 {
        rrc_unchecked(self.kind.betas().1, x)
    }

    /// Filter value `w(τ, ν)`.
    pub fn eval(&self, tau: f64, nu: f64) -> f64 {
        self.amplitude * self.g_tau(self.b * tau) * self.g_nu(self.t * nu)
    }

    /// Delay pulse `a(τ) = √B g_τ(Bτ)` (unit energy).
    pub fn delay_pulse(&self, tau: f64) -> f64 {
        self.b.sqrt() * self.g_tau(self.b * tau)
    }

    /// Fourier transform of the delay pulse, `(1/√B) P_{β_τ}(f/B)`.
    pub fn delay_pulse_spectrum(&self, f: f64) -> f64 {
        rrc_spectrum(self.kind.betas().0, f / self.b) / self.b.sqrt()
    }

    /// Time window `β(u) = (1/√T) P_{β_ν}(u/T)` (unit energy).
    pub fn time_window(&self, u: f64) -> f64 {
        rrc_spectrum(self.kind.betas().1, u / self.t) / self.t.sqrt()
    }

    /// Half-length of the time-window support, `(1 + β_ν) T / 2`.
    pub fn time_window_half_span(&self) -> f64 {
        0.5 * (1.0 + self.kind.betas().1) * self.t
    }

    /// Occupied bandwidth `B (1 + β_τ)`.
    pub fn occupied_bandwidth(&self) -> f64 {
        self.b * (1.0 + self.kind.betas().0)
    }

    /// Occupied duration `T (1 + β_ν)`.
    pub fn occupied_duration(&self) -> f64 {
        self.t * (1.0 + self.kind.betas().1)
    }
}

/// Samples `f` on the information grid: `taps[(k,l)] = f(k/B, l/T)` for
/// `|k| ≤ K_τ`, `|l| ≤ K_ν`.
pub fn sample_filter(f: &SeparableFilter, params: &FrameParams, k_tau: i64, k_nu: i64) -> DDTapSet {
    let mut taps = DDTapSet::new();
    for k in -k_tau..=k_tau {
        let a = f.g_tau(k as f64 * f.b / params.b);
        for l in -k_nu..=k_nu {
            let v = f.amplitude * a * f.g_nu(l as f64 * f.t / params.t);
            if v != 0.0 {
                taps.insert(k, l, C64::new(v, 0.0));
            }
        }
    }
    taps
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::cis2pi;
    use proptest::prelude::*;

    /// Inverse Fourier transform of the square-root raised-cosine spectrum by
    /// dense midpoint quadrature: an oracle independent of the closed form.
    fn rrc_from_spectrum(beta: f64, x: f64) -> f64 {
        let hi = 0.5 * (1.0 + beta);
        let n = 200_000;
        let df = 2.0 * hi / n as f64;
        (0..n)
            .map(|i| {
                let f = -hi + (i as f64 + 0.5) * df;
                rrc_spectrum(beta, f) * cis2pi(f * x).re * df
            })
            .sum()
    }

    #[test]
    fn rrc_reduces_to_sinc_for_zero_rolloff() {
        for x in [-3.3, -1.0, 0.0, 0.2, 0.5, 2.75] {
            assert!((rrc_scalar(0.0, x).unwrap() - sinc(x)).abs() < 1e-15);
        }
    }

    #[test]
    fn rrc_limit_at_origin() {
        for beta in [0.1, 0.2, 0.5, 1.0] {
            let v = rrc_scalar(beta, 0.0).unwrap();
            assert!((v - (1.0 - beta + 4.0 * beta / PI)).abs() < 1e-15);
        }
    }

    #[test]
    fn rrc_matches_spectrum_oracle() {
        for (beta, x) in [(0.5, 0.37), (0.5, 0.5), (0.25, 1.0), (0.3, 2.2), (0.9, 0.0)] {
            let got = rrc_scalar(beta, x).unwrap();
            let want = rrc_from_spectrum(beta, x);
            assert!((got - want).abs() < 1e-8, "β={beta} x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn rrc_rejects_bad_rolloff() {
        assert!(rrc_scalar(-0.1, 0.0).is_err());
        assert!(rrc_scalar(1.1, 0.0).is_err());
        assert!(rrc_filter(1.0, 1.0, 0.1, 2.0).is_err());
        assert!(sinc_filter(0.0, 1.0).is_err());
    }

    #[test]
    fn rrc_continuous_at_singularities() {
        for beta in [0.1, 0.2, 0.5, 0.9] {
            for x0 in [0.0, 1.0 / (4.0 * beta)] {
                let v0 = rrc_scalar(beta, x0).unwrap();
                for d in [1e-8, -1e-8, 5e-7, 2e-6] {
                    assert!((rrc_scalar(beta, x0 + d).unwrap() - v0).abs() < 1e-5);
                }
                assert!((rrc_scalar(beta, x0 + 1e-8).unwrap() - v0).abs() < 1e-6);
                assert!((rrc_scalar(beta, x0 - 1e-8).unwrap() - v0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn sinc_filter_examples() {
        let (b, t) = (0.96e6, 1.6e-3);
        let f = sinc_filter(b, t).unwrap();
        assert!((f.eval(0.0, 0.0) - (b * t).sqrt()).abs() < 1e-9);
        for k in 1..5 {
            assert!(f.eval(k as f64 / b, 0.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sinc_filter_energy_by_quadrature() {
        // Separable: energy = (∫ B sinc²(Bτ) dτ) (∫ T sinc²(Tν) dν); each factor on
        // [−32, 32] in normalised units at 64 points per unit.
        let f = sinc_filter(0.96e6, 1.6e-3).unwrap();
        let h = 1.0 / 64.0;
        let one_d: f64 = (-32 * 64..=32 * 64).map(|i| f.g_tau(i as f64 * h).powi(2) * h).sum();
        let e = one_d * one_d;
        assert!((e - 1.0).abs() < 1e-2, "energy {e}");
    }

    #[test]
    fn rrc_filter_energy_by_quadrature() {
        let f = rrc_filter(1.0, 1.0, 0.1, 0.2).unwrap();
        let h = 1.0 / 64.0;
        let et: f64 = (-200 * 64..=200 * 64).map(|i| f.g_tau(i as f64 * h).powi(2) * h).sum();
        let en: f64 = (-200 * 64..=200 * 64).map(|i| f.g_nu(i as f64 * h).powi(2) * h).sum();
        assert!((et * en - 1.0).abs() < 1e-3, "energy {}", et * en);
    }

    #[test]
    fn rrc_filter_examples() {
        let (b, t) = (0.96e6, 1.6e-3);
        let f = rrc_filter(b, t, 0.1, 0.2).unwrap();
        let want = (b * t).sqrt() * (1.0 - 0.1 + 0.4 / PI) * (1.0 - 0.2 + 0.8 / PI);
        assert!((f.eval(0.0, 0.0) - want).abs() < 1e-9 * want);
        assert!((f.occupied_bandwidth() - 1.1 * b).abs() < 1e-6);
        assert!((f.occupied_duration() - 1.2 * t).abs() < 1e-15);
        let s = sinc_filter(b, t).unwrap();
        let r0 = rrc_filter(b, t, 0.0, 0.0).unwrap();
        for (tau, nu) in [(0.3e-6, 100.0), (-2.2e-6, -731.0), (5.1e-6, 2000.0)] {
            assert!((s.eval(tau, nu) - r0.eval(tau, nu)).abs() < 1e-12);
        }
    }

    #[test]
    fn sample_filter_examples() {
        let p = FrameParams::new(64, 24, 15e3).unwrap();
        let s = sinc_filter(p.b, p.t).unwrap();
        let taps = sample_filter(&s, &p, 4, 4);
        assert_eq!(taps.len(), 1);
        assert!((taps.get(0, 0).re - (p.b * p.t).sqrt()).abs() < 1e-9);
        let r = rrc_filter(p.b, p.t, 0.5, 0.5).unwrap();
        let taps = sample_filter(&r, &p, 3, 3);
        let want = (p.b * p.t).sqrt() * rrc_scalar(0.5, 1.0).unwrap() * rrc_scalar(0.5, 0.0).unwrap();
        assert!((taps.get(1, 0).re - want).abs() < 1e-9);
        let single = sample_filter(&r, &p, 0, 0);
        assert_eq!(single.len(), 1);
        assert!((single.get(0, 0).re - r.eval(0.0, 0.0)).abs() < 1e-12);
    }

    #[test]
    fn doppler_tail_energy_decreases_with_rolloff() {
        let mut prev = f64::INFINITY;
        for beta_nu in [0.0, 0.3, 0.6, 0.9] {
            let f = rrc_filter(1.0, 1.0, 0.1, beta_nu).unwrap();
            // Sampled at integer l the sinc tail vanishes identically, so the
            // continuous tail energy beyond |Tν| = 2 is compared instead.
            let h = 1e-2;
            let tail: f64 = (200..100_000).map(|i| 2.0 * f.eval(0.0, i as f64 * h).powi(2) * h).sum();
            assert!(tail < prev, "β_ν={beta_nu}: {tail} ≥ {prev}");
            prev = tail;
        }
    }

    #[test]
    fn window_and_pulse_have_unit_energy() {
        let f = rrc_filter(2.0, 3.0, 0.25, 0.4).unwrap();
        let h = 1e-3;
        let e: f64 = (-3000..=3000).map(|i| f.time_window(i as f64 * h).powi(2) * h).sum();
        assert!((e - 1.0).abs() < 1e-6);
        let e: f64 = (-2000..=2000).map(|i| f.delay_pulse_spectrum(i as f64 * h).powi(2) * h).sum();
        assert!((e - 1.0).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn filter_is_even_in_each_coordinate(tau in -20.0f64..20.0, nu in -20.0f64..20.0,
                                             bt in 0.0f64..1.0, bn in 0.0f64..1.0) {
            let f = rrc_filter(1.0, 1.0, bt, bn).unwrap();
            let v = f.eval(tau, nu);
            prop_assert!((f.eval(-tau, nu) - v).abs() <= 1e-12);
            prop_assert!((f.eval(tau, -nu) - v).abs() <= 1e-12);
        }
    }
}
