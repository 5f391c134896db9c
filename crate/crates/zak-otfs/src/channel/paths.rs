//! Path channels (delay-Doppler spreading functions made of point scatterers)
//! and their action on oversampled time series.

use crate::error::{Error, Result};
use crate::numeric::{cis2pi, kaiser, sinc, C64};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// One propagation path: complex gain, delay (s) and Doppler shift (Hz).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Path {
    /// Complex gain `h_i`.
    pub gain: C64,
    /// Delay `τ_i` in seconds.
    pub delay: f64,
    /// Doppler shift `ν_i` in hertz.
    pub doppler: f64,
}

/// A finite sum of weighted delay-Doppler impulses,
/// `h(τ, ν) = Σ_i h_i δ(τ − τ_i) δ(ν − ν_i)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PathChannel {
    /// The propagation paths.
    pub paths: Vec<Path>,
}

/// Delays of the vehicular-A power-delay profile, in seconds.
pub const VEH_A_DELAYS: [f64; 6] = [0.0, 0.31e-6, 0.71e-6, 1.09e-6, 1.73e-6, 2.51e-6];
/// Relative powers of the vehicular-A profile, in dB.
pub const VEH_A_POWERS_DB: [f64; 6] = [0.0, -1.0, -9.0, -10.0, -15.0, -20.0];
/// Relative powers of the resolvable five-path profile, in dB.
pub const RESOLVABLE_POWERS_DB: [f64; 5] = [0.0, -1.0, -9.0, -10.0, -13.0];
/// Delays of the resolvable five-path profile in units of `1/B`.
pub const RESOLVABLE_DELAY_BINS: [i64; 5] = [0, 1, 2, 4, 7];
/// Dopplers of the resolvable five-path profile in units of `1/T`.
pub const RESOLVABLE_DOPPLER_BINS: [i64; 5] = [1, -2, -3, 3, 4];

/// Linear powers for a dB profile, scaled to sum to one.
pub fn normalized_powers(db: &[f64]) -> Vec<f64> {
    let lin: Vec<f64> = db.iter().map(|d| 10f64.powf(d / 10.0)).collect();
    let s: f64 = lin.iter().sum();
    lin.into_iter().map(|p| p / s).collect()
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> C64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re * s, im * s)
}

/// Which dimensions of the vehicular-A profile are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VehAVariant {
    /// Table delays and Doppler `ν_max cos θ_i`.
    DoublySpread,
    /// Table delays, all Dopplers zero.
    DelayOnly,
    /// All delays zero, Doppler `ν_max cos θ_i`.
    DopplerOnly,
}

/// Draws a vehicular-A channel: Rayleigh gains `h_i ~ CN(0, p_i)` with
/// `Σ p_i = 1`, and Dopplers `ν_i = ν_max cos θ_i` with `θ_i` uniform on `[0, 2π)`.
pub fn veh_a<R: Rng + ?Sized>(nu_max: f64, rng: &mut R) -> Result<PathChannel> {
    veh_a_variant(nu_max, VehAVariant::DoublySpread, rng)
}

/// Vehicular-A draw restricted to delay-only or Doppler-only spreading.
pub fn veh_a_variant<R: Rng + ?Sized>(nu_max: f64, variant: VehAVariant, rng: &mut R) -> Result<PathChannel> {
    if !(nu_max >= 0.0 && nu_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("nu_max must be non-negative, got {nu_max}")));
    }
    let p = normalized_powers(&VEH_A_POWERS_DB);
    let mut paths = Vec::with_capacity(6);
    for i in 0..6 {
        let gain = complex_gaussian(rng, p[i]);
        let theta: f64 = rng.random_range(0.0..2.0 * PI);
        let nu = nu_max * theta.cos();
        let (delay, doppler) = match variant {
            VehAVariant::DoublySpread => (VEH_A_DELAYS[i], nu),
            VehAVariant::DelayOnly => (VEH_A_DELAYS[i], 0.0),
            VehAVariant::DopplerOnly => (0.0, nu),
        };
        paths.push(Path { gain, delay, doppler });
    }
    Ok(PathChannel { paths })
}

/// The two-path channel: `(1/√2, 0, 815 Hz)` and `(1/√2, 5 μs, −815 Hz)`.
pub fn two_path() -> PathChannel {
    let g = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    PathChannel { paths: vec![Path { gain: g, delay: 0.0, doppler: 815.0 }, Path { gain: g, delay: 5e-6, doppler: -815.0 }] }
}

/// The resolvable five-path channel: delays `[0,1,2,4,7]/B`, Dopplers
/// `[1,−2,−3,3,4]/T`, magnitudes fixed by the power profile (total power one)
/// and independent uniform phases.
pub fn resolvable_5path<R: Rng + ?Sized>(b: f64, t: f64, rng: &mut R) -> Result<PathChannel> {
    if !(b > 0.0 && t > 0.0) {
        return Err(Error::InvalidParameter("B and T must be positive".into()));
    }
    let p = normalized_powers(&RESOLVABLE_POWERS_DB);
    let paths = (0..5)
        .map(|i| {
            let phase: f64 = rng.random_range(0.0..1.0);
            Path {
                gain: cis2pi(phase) * p[i].sqrt(),
                delay: RESOLVABLE_DELAY_BINS[i] as f64 / b,
                doppler: RESOLVABLE_DOPPLER_BINS[i] as f64 / t,
            }
        })
        .collect();
    Ok(PathChannel { paths })
}

impl PathChannel {
    /// Single path channel.
    pub fn single(gain: C64, delay: f64, doppler: f64) -> Self {
        Self { paths: vec![Path { gain, delay, doppler }] }
    }

    /// Identity channel `{(1, 0, 0)}`.
    pub fn identity() -> Self {
        Self::single(C64::new(1.0, 0.0), 0.0, 0.0)
    }

    /// `max τ_i − min τ_i`.
    pub fn delay_spread(&self) -> f64 {
        spread(self.paths.iter().map(|p| p.delay))
    }

    /// `max ν_i − min ν_i`.
    pub fn doppler_spread(&self) -> f64 {
        spread(self.paths.iter().map(|p| p.doppler))
    }

    /// `Σ |h_i|²`.
    pub fn total_power(&self) -> f64 {
        self.paths.iter().map(|p| p.gain.norm_sqr()).sum()
    }

    /// Copy with every gain multiplied by `a`.
    pub fn scaled(&self, a: C64) -> Self {
        Self { paths: self.paths.iter().map(|p| Path { gain: p.gain * a, ..*p }).collect() }
    }

    /// `(min τ, max τ, min ν, max ν)`; zeros for an empty channel.
    pub fn extent(&self) -> (f64, f64, f64, f64) {
        if self.paths.is_empty() {
            return (0.0, 0.0, 0.0, 0.0);
        }
        let mut e = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in &self.paths {
            e.0 = e.0.min(p.delay);
            e.1 = e.1.max(p.delay);
            e.2 = e.2.min(p.doppler);
            e.3 = e.3.max(p.doppler);
        }
        e
    }
}

fn spread(it: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo.is_finite() {
        hi - lo
    } else {
        0.0
    }
}

/// A uniformly sampled complex time series: sample `n` is taken at `t0 + n/rate`.
#[derive(Debug, Clone, PartialEq)]
pub struct TdSeries {
    /// Sample rate in hertz.
    pub rate: f64,
    /// Time of sample zero in seconds.
    pub t0: f64,
    /// The samples.
    pub samples: Vec<C64>,
}

impl TdSeries {
    /// Time instant of sample `n`.
    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 / self.rate
    }

    /// Energy `Σ |s_n|² / rate` (Riemann approximation of `∫|s|² dt`).
    pub fn energy(&self) -> f64 {
        crate::numeric::energy(&self.samples) / self.rate
    }
}

/// Half-length (in samples) of the fractional-delay interpolation kernel.
pub const INTERP_HALF: i64 = 32;
/// Kaiser shape parameter of the fractional-delay interpolation kernel.
pub const INTERP_KAISER_BETA: f64 = 12.0;

/// Kaiser-windowed sinc interpolation weights for a delay of `frac ∈ [0, 1)`
/// samples: `s(n − D_int − frac) = Σ_j w[j] s[n − D_int − j]`, `j ∈ [−31, 32]`.
pub(crate) fn interp_weights(frac: f64) -> Vec<f64> {
    (-INTERP_HALF + 1..=INTERP_HALF)
        .map(|j| {
            let x = j as f64 - frac;
            sinc(x) * kaiser(x / INTERP_HALF as f64, INTERP_KAISER_BETA)
        })
        .collect()
}

/// Passes `s` through the channel:
/// `r(t) = Σ_i h_i s(t − τ_i) e^{j2πν_i (t − τ_i)}` at the sample instants of `s`.
///
/// Fractional delays use a 64-tap Kaiser-windowed sinc interpolator (β = 12);
/// the input is treated as zero outside its support.  `q` is the oversampling
/// factor of the series relative to the signal bandwidth and must be at least 4.
pub fn apply_td_channel(ch: &PathChannel, s: &TdSeries, q: usize) -> Result<TdSeries> {
    if q < 4 {
        return Err(Error::InvalidParameter(format!("oversampling factor must be ≥ 4, got {q}")));
    }
    let len = s.samples.len() as i64;
    let mut out = vec![C64::new(0.0, 0.0); s.samples.len()];
    for p in &ch.paths {
        let mut d = p.delay * s.rate;
        if (d - d.round()).abs() < 1e-9 {
            d = d.round();
        }
        let d_int = d.floor() as i64;
        let frac = d - d_int as f64;
        if d_int.abs() >= len {
            return Err(Error::GuardOverflow(format!("delay of {:.3e} s spans {} samples but the series has only {len}", p.delay, d_int)));
        }
        let exact = frac.abs() < 1e-12;
        let w = if exact { Vec::new() } else { interp_weights(frac) };
        for n in 0..len {
            let t = s.t0 + n as f64 / s.rate;
            let rot = p.gain * cis2pi(p.doppler * (t - p.delay));
            let base = n - d_int;
            let v = if exact {
                if (0..len).contains(&base) {
                    s.samples[base as usize]
                } else {
                    continue;
                }
            } else {
                let mut acc = C64::new(0.0, 0.0);
                for (idx, j) in (-INTERP_HALF + 1..=INTERP_HALF).enumerate() {
                    let m = base - j;
                    if (0..len).contains(&m) {
                        acc += s.samples[m as usize] * w[idx];
                    }
                }
                acc
            };
            out[n as usize] += rot * v;
        }
    }
    Ok(TdSeries { rate: s.rate, t0: s.t0, samples: out })
}
