//! Radar ambiguity analysis: closed-form ambiguity functions of the TDM pulse,
//! the FDM pulse and the Zak-OTFS pulsone, numeric cross-ambiguity of sampled
//! waveforms, Moyal's volume, radar scene responses and ML target estimation.
//!
//! All ambiguity functions follow
//! `A_{r,s}(τ, ν) = ∫ r(t) s*(t − τ) e^{−j2πν(t − τ)} dt`.

use crate::channel::paths::{interp_weights, INTERP_HALF};
use crate::channel::{PathChannel, TdSeries};
use crate::dd_core::FrameParams;
use crate::error::{Error, Result};
use crate::numeric::{cis2pi, sinc, C64};
use rayon::prelude::*;

/// Sampled ambiguity surface on a uniform delay-Doppler grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbiguitySurface {
    /// Values at `i_τ · nu_axis.len() + i_ν`.
    pub values: Vec<C64>,
    /// Delay axis in seconds (uniform).
    pub tau_axis: Vec<f64>,
    /// Doppler axis in hertz (uniform).
    pub nu_axis: Vec<f64>,
}

/// ML delay-Doppler estimate: the grid argmax of `|A_{r,s}|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetEstimate {
    /// Estimated delay in seconds.
    pub tau_hat: f64,
    /// Estimated Doppler in hertz.
    pub nu_hat: f64,
    /// `|A_{r,s}(τ̂, ν̂)|`.
    pub peak: f64,
}

/// Uniform axis `start + i·step`, `i = 0..len`.
pub fn uniform_axis(start: f64, step: f64, len: usize) -> Vec<f64> {
    (0..len).map(|i| start + i as f64 * step).collect()
}

/// Symmetric axis `{i·step : −half ≤ i ≤ half}`.
pub fn symmetric_axis(half: usize, step: f64) -> Vec<f64> {
    uniform_axis(-(half as f64) * step, step, 2 * half + 1)
}

fn axis_step(axis: &[f64]) -> f64 {
    if axis.len() > 1 {
        axis[1] - axis[0]
    } else {
        1.0
    }
}

impl AmbiguitySurface {
    /// Evaluates `f(τ, ν)` on the given axes (in parallel).
    pub fn from_fn<F>(tau_axis: Vec<f64>, nu_axis: Vec<f64>, f: F) -> Self
    where
        F: Fn(f64, f64) -> C64 + Sync,
    {
        let nn = nu_axis.len();
        let values = (0..tau_axis.len() * nn).into_par_iter().map(|i| f(tau_axis[i / nn], nu_axis[i % nn])).collect();
        Self { values, tau_axis, nu_axis }
    }

    /// Value at grid indices `(i_τ, i_ν)`.
    pub fn get(&self, it: usize, inu: usize) -> C64 {
        self.values[it * self.nu_axis.len() + inu]
    }

    /// Delay spacing `dτ`.
    pub fn d_tau(&self) -> f64 {
        axis_step(&self.tau_axis)
    }

    /// Doppler spacing `dν`.
    pub fn d_nu(&self) -> f64 {
        axis_step(&self.nu_axis)
    }

    /// Largest magnitude on the surface.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Grid index nearest to `(τ, ν)`, if inside the surface.
    pub fn index_of(&self, tau: f64, nu: f64) -> Option<(usize, usize)> {
        let it = ((tau - self.tau_axis[0]) / self.d_tau()).round();
        let inu = ((nu - self.nu_axis[0]) / self.d_nu()).round();
        if it < 0.0 || inu < 0.0 || it as usize >= self.tau_axis.len() || inu as usize >= self.nu_axis.len() {
            return None;
        }
        Some((it as usize, inu as usize))
    }

    /// Rows of `(tau_s, nu_hz, mag2, phase_rad)`.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        let nn = self.nu_axis.len();
        self.values.iter().enumerate().map(move |(i, v)| (self.tau_axis[i / nn], self.nu_axis[i % nn], v.norm_sqr(), v.arg()))
    }
}

/// Closed-form ambiguity of the unit-energy TDM pulse `√B sinc(Bt)`:
/// `(1 − |ν|/B) e^{jπντ} sinc((B − |ν|)τ)` for `|ν| < B`, zero otherwise.
pub fn ambiguity_tdm(tau: f64, nu: f64, b: f64) -> C64 {
    if nu.abs() >= b {
        return C64::new(0.0, 0.0);
    }
    cis2pi(0.5 * nu * tau) * ((1.0 - nu.abs() / b) * sinc((b - nu.abs()) * tau))
}

/// Closed-form ambiguity of the unit-energy FDM pulse `T^{−1/2} 1[|t| < T/2]`
/// (spectrum `√T sinc(fT)`): `(1 − |τ|/T) e^{jπντ} sinc((T − |τ|)ν)` for `|τ| < T`.
pub fn ambiguity_fdm(tau: f64, nu: f64, t: f64) -> C64 {
    if tau.abs() >= t {
        return C64::new(0.0, 0.0);
    }
    cis2pi(0.5 * nu * tau) * ((1.0 - tau.abs() / t) * sinc((t - tau.abs()) * nu))
}

/// Closed-form ambiguity of the sinc-shaped pulsone at the origin (N even):
/// `((1 − |ν|/B)/N) Σ_{n₁,n₂} e^{jπν(τ − (n₁ + n₂)τ_p)} sinc((B − |ν|)(τ + (n₁ − n₂)τ_p))`.
///
/// Evaluated in `O(N)` by summing the geometric series over pairs with a
/// common difference `n₁ − n₂`.
pub fn ambiguity_pulsone(tau: f64, nu: f64, params: &FrameParams) -> C64 {
    let b = params.b;
    if nu.abs() >= b {
        return C64::new(0.0, 0.0);
    }
    let n = params.n as i64;
    let tp = params.tau_p;
    let lo = -n / 2;
    let hi = n / 2 - 1;
    let ratio = cis2pi(-nu * tp);
    let mut acc = C64::new(0.0, 0.0);
    for d in -(n - 1)..n {
        // Pairs (n₁, n₂) = (n₂ + d, n₂) with both in [lo, hi].
        let a = lo.max(lo - d);
        let z = hi.min(hi - d);
        if a > z {
            continue;
        }
        let count = (z - a + 1) as f64;
        // Σ_{n₂=a}^{z} e^{−jπν(2n₂ + d)τ_p} = e^{−jπν d τ_p} Σ ratio^{n₂}.
        let geo = if (ratio - 1.0).norm() < 1e-12 {
            cis2pi(-nu * tp * a as f64) * count
        } else {
            (cis2pi(-nu * tp * a as f64) - cis2pi(-nu * tp * (z + 1) as f64)) / (C64::new(1.0, 0.0) - ratio)
        };
        let phase = cis2pi(-0.5 * nu * d as f64 * tp);
        acc += geo * phase * sinc((b - nu.abs()) * (tau + d as f64 * tp));
    }
    acc * cis2pi(0.5 * nu * tau) * ((1.0 - nu.abs() / b) / n as f64)
}

/// Sampled TDM pulse `√B sinc(Bt)` on `|t| ≤ half_span/B` at rate `qB`.
pub fn tdm_pulse_td(b: f64, half_span: usize, q: usize) -> TdSeries {
    let rate = b * q as f64;
    let len = 2 * half_span * q + 1;
    let t0 = -(half_span as f64) / b;
    let samples = (0..len).map(|j| C64::new(b.sqrt() * sinc(b * (t0 + j as f64 / rate)), 0.0)).collect();
    TdSeries { rate, t0, samples }
}

/// Sampled FDM pulse `T^{−1/2} 1[|t| < T/2]` at rate `rate` with a margin of
/// `margin` zero seconds on each side; the two edge samples carry the mean
/// value `½ T^{−1/2}` so that the Riemann sum integrates the jump accurately.
pub fn fdm_pulse_td(t: f64, rate: f64, margin: f64) -> TdSeries {
    let t0 = -0.5 * t - margin;
    let len = ((t + 2.0 * margin) * rate).round() as usize + 1;
    let amp = 1.0 / t.sqrt();
    let samples = (0..len)
        .map(|j| {
            let x = t0 + j as f64 / rate;
            let edge = ((x.abs() - 0.5 * t) * rate).abs() < 1e-6;
            if edge {
                C64::new(0.5 * amp, 0.0)
            } else if x.abs() < 0.5 * t {
                C64::new(amp, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();
    TdSeries { rate, t0, samples }
}

/// Sinc-shaped TD pulsone for a DD impulse at `(τ0, ν0)`:
/// `s(t) = (B/N)^{½} Σ_{n=−N/2}^{N/2−1} sinc(B(t − nτ_p − τ0)) e^{j2πnν0τ_p}`,
/// sampled at rate `qB` on `[−(N/2)τ_p − margin/B, (N/2)τ_p + margin/B]`.
pub fn pulsone_td(params: &FrameParams, tau0: f64, nu0: f64, q: usize, margin: usize) -> Result<TdSeries> {
    if !params.n.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("the pulsone needs an even N, got {}", params.n)));
    }
    let n = params.n as i64;
    let b = params.b;
    let tp = params.tau_p;
    let rate = b * q as f64;
    let t0 = -(n / 2) as f64 * tp - margin as f64 / b;
    let len = (params.m * params.n + 2 * margin) * q + 1;
    let amp = (b / n as f64).sqrt();
    let coeffs: Vec<(f64, C64)> = (-n / 2..n / 2).map(|k| (k as f64 * tp + tau0, cis2pi(k as f64 * nu0 * tp))).collect();
    let samples = (0..len)
        .into_par_iter()
        .map(|j| {
            let t = t0 + j as f64 / rate;
            coeffs.iter().map(|(c, ph)| ph * sinc(b * (t - c))).sum::<C64>() * amp
        })
        .collect();
    Ok(TdSeries { rate, t0, samples })
}

/// Value of `s` at an arbitrary time by band-limited interpolation of its
/// samples (zero outside the support).
fn interp_at(s: &TdSeries, t: f64) -> C64 {
    let x = (t - s.t0) * s.rate;
    let base = x.floor();
    let frac = x - base;
    let len = s.samples.len() as i64;
    let base = base as i64;
    if frac.abs() < 1e-9 || (1.0 - frac) < 1e-9 {
        let i = x.round() as i64;
        return if (0..len).contains(&i) { s.samples[i as usize] } else { C64::new(0.0, 0.0) };
    }
    // s(base + frac) = Σ_j w[j] s[base + frac − j − frac]... with the delay
    // convention of `interp_weights`: value at (base + 1) − (1 − frac).
    let w = interp_weights(1.0 - frac);
    let anchor = base + 1;
    let mut acc = C64::new(0.0, 0.0);
    for (idx, j) in (-INTERP_HALF + 1..=INTERP_HALF).enumerate() {
        let m = anchor - j;
        if (0..len).contains(&m) {
            acc += s.samples[m as usize] * w[idx];
        }
    }
    acc
}

/// Numeric cross-ambiguity `A_{r,s}(τ, ν)` on the given axes by the Riemann
/// sum at the common sample rate; fractional delays of `s` use the same
/// Kaiser-windowed sinc interpolator as the channel simulator.
pub fn cross_ambiguity_numeric(r: &TdSeries, s: &TdSeries, tau_axis: &[f64], nu_axis: &[f64]) -> Result<AmbiguitySurface> {
    if ((r.rate - s.rate) / r.rate).abs() > 1e-12 {
        return Err(Error::InvalidParameter("the two series must share a sample rate".into()));
    }
    if tau_axis.is_empty() || nu_axis.is_empty() {
        return Err(Error::InvalidParameter("empty ambiguity window".into()));
    }
    let rate = r.rate;
    let rows: Vec<Vec<C64>> = tau_axis
        .par_iter()
        .map(|&tau| {
            // Conjugated delayed copy of s on r's sample instants.
            let shifted: Vec<C64> = (0..r.samples.len()).map(|i| interp_at(s, r.time(i) - tau).conj()).collect();
            let prod: Vec<(f64, C64)> = r
                .samples
                .iter()
                .zip(&shifted)
                .enumerate()
                .filter(|(_, (_, u))| u.norm_sqr() > 0.0)
                .map(|(i, (a, u))| (r.time(i) - tau, a * u))
                .collect();
            nu_axis.iter().map(|&nu| prod.iter().map(|(t, p)| p * cis2pi(-nu * t)).sum::<C64>() / rate).collect()
        })
        .collect();
    Ok(AmbiguitySurface { values: rows.concat(), tau_axis: tau_axis.to_vec(), nu_axis: nu_axis.to_vec() })
}

/// Doppler resolution finer than `1/(2·duration)` cannot be resolved by the
/// waveform and coarser spacing aliases the Doppler response; returns a
/// diagnostic when `d_nu` exceeds `1/(2·duration)`.
pub fn doppler_aliasing_warning(s: &TdSeries, d_nu: f64) -> Option<String> {
    let duration = s.samples.len() as f64 / s.rate;
    (d_nu > 0.5 / duration)
        .then(|| format!("Doppler spacing {d_nu:.3e} Hz is coarser than 1/(2·duration) = {:.3e} Hz; the surface may alias", 0.5 / duration))
}

/// `∬ |A|² dτ dν` by the rectangle rule on the surface grid.
pub fn moyal_volume(a: &AmbiguitySurface) -> f64 {
    a.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * a.d_tau() * a.d_nu()
}

/// Band-limited interpolation weights for a real offset `x` (in grid steps).
fn kernel_1d(x: f64) -> Vec<(i64, f64)> {
    let base = x.floor() as i64;
    let frac = x - base as f64;
    if frac.abs() < 1e-9 {
        return vec![(base, 1.0)];
    }
    if 1.0 - frac < 1e-9 {
        return vec![(base + 1, 1.0)];
    }
    let half = 16i64;
    (base - half + 1..=base + half)
        .map(|i| {
            let d = x - i as f64;
            (i, sinc(d) * crate::numeric::kaiser(d / half as f64, 8.0))
        })
        .collect()
}

/// Noise-free cross-ambiguity of a radar scene:
/// `A_{r,s}(τ, ν) = Σ_i h_i A_{s,s}(τ − τ_i, ν − ν_i) e^{j2πν_i(τ − τ_i)}` on the
/// grid of `a_ss`.  Grid-aligned shifts are exact; other shifts use separable
/// Kaiser-windowed sinc interpolation of the sampled surface.
pub fn scene_response(ch: &PathChannel, a_ss: &AmbiguitySurface) -> Result<AmbiguitySurface> {
    let (nt, nn) = (a_ss.tau_axis.len(), a_ss.nu_axis.len());
    let (dt, dn) = (a_ss.d_tau(), a_ss.d_nu());
    let (t_lo, t_hi) = (a_ss.tau_axis[0], a_ss.tau_axis[nt - 1]);
    let (n_lo, n_hi) = (a_ss.nu_axis[0], a_ss.nu_axis[nn - 1]);
    for p in &ch.paths {
        if p.delay < t_lo || p.delay > t_hi || p.doppler < n_lo || p.doppler > n_hi {
            return Err(Error::InvalidParameter(format!(
                "target at ({:.3e} s, {:.3e} Hz) lies outside the surface window",
                p.delay, p.doppler
            )));
        }
    }
    let values = (0..nt * nn)
        .into_par_iter()
        .map(|i| {
            let (it, inu) = (i / nn, i % nn);
            let (tau, nu) = (a_ss.tau_axis[it], a_ss.nu_axis[inu]);
            let mut acc = C64::new(0.0, 0.0);
            for p in &ch.paths {
                let xt = (tau - p.delay - t_lo) / dt;
                let xn = (nu - p.doppler - n_lo) / dn;
                let kt = kernel_1d(xt);
                let kn = kernel_1d(xn);
                let mut v = C64::new(0.0, 0.0);
                for &(a, wa) in &kt {
                    if a < 0 || a >= nt as i64 {
                        continue;
                    }
                    for &(b, wb) in &kn {
                        if b < 0 || b >= nn as i64 {
                            continue;
                        }
                        v += a_ss.get(a as usize, b as usize) * (wa * wb);
                    }
                }
                acc += p.gain * v * cis2pi(p.doppler * (tau - p.delay));
            }
            acc
        })
        .collect();
    Ok(AmbiguitySurface { values, tau_axis: a_ss.tau_axis.clone(), nu_axis: a_ss.nu_axis.clone() })
}

/// Grid argmax of `|A_{r,s}|`; ties (within 1e-12 relative) go to the
/// smallest `|τ|`, then the smallest `|ν|`.
pub fn ml_delay_doppler(a: &AmbiguitySurface) -> Result<TargetEstimate> {
    let peak = a.max_abs();
    if a.values.is_empty() || peak == 0.0 {
        return Err(Error::InvalidParameter("the ambiguity surface is empty or identically zero".into()));
    }
    let nn = a.nu_axis.len();
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in a.values.iter().enumerate() {
        let mag = v.norm();
        match best {
            None => best = Some((i, mag)),
            Some((j, bm)) => {
                let key = |k: usize| (a.tau_axis[k / nn].abs(), a.nu_axis[k % nn].abs());
                if mag > bm * (1.0 + 1e-12) || ((mag - bm).abs() <= 1e-12 * peak && key(i) < key(j)) {
                    best = Some((i, mag.max(bm)));
                }
            }
        }
    }
    let (i, _) = best.expect("non-empty surface");
    Ok(TargetEstimate { tau_hat: a.tau_axis[i / nn], nu_hat: a.nu_axis[i % nn], peak: a.values[i].norm() })
}

/// Default radar window `[−2τ_p, 2τ_p] × [−2ν_p, 2ν_p]` at resolution
/// `(1/(4B), 1/(4T))`.
pub fn default_window(params: &FrameParams) -> (Vec<f64>, Vec<f64>) {
    (symmetric_axis(8 * params.m, 0.25 / params.b), symmetric_axis(8 * params.n, 0.25 / params.t))
}

/// Fraction of the surface energy within `|τ − nτ_p| ≤ half_tau`,
/// `|ν − mν_p| ≤ half_nu` of the period lattice.
pub fn lattice_concentration(a: &AmbiguitySurface, params: &FrameParams, half_tau: f64, half_nu: f64) -> f64 {
    let near = |x: f64, p: f64, h: f64| (x - (x / p).round() * p).abs() <= h * (1.0 + 1e-9);
    let nn = a.nu_axis.len();
    let mut inside = 0.0;
    let mut total = 0.0;
    for (i, v) in a.values.iter().enumerate() {
        let e = v.norm_sqr();
        total += e;
        if near(a.tau_axis[i / nn], params.tau_p, half_tau) && near(a.nu_axis[i % nn], params.nu_p, half_nu) {
            inside += e;
        }
    }
    inside / total
}

/// Whether two targets are resolved on the surface: the magnitude midway
/// between them is at least 3 dB below the smaller of the two target peaks.
pub fn targets_resolved(a: &AmbiguitySurface, t1: (f64, f64), t2: (f64, f64)) -> Result<bool> {
    let at = |tau: f64, nu: f64| -> Result<f64> {
        let (i, j) = a.index_of(tau, nu).ok_or_else(|| Error::InvalidParameter("point outside the surface window".into()))?;
        Ok(a.get(i, j).norm())
    };
    let p1 = at(t1.0, t1.1)?;
    let p2 = at(t2.0, t2.1)?;
    let mid = at(0.5 * (t1.0 + t2.0), 0.5 * (t1.1 + t2.1))?;
    Ok(mid < p1.min(p2) / 2f64.sqrt())
}
