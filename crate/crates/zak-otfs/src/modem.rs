//! Symbol mapping, the Zak-OTFS time-domain transceiver, AWGN, LMMSE
//! detection and single Monte Carlo frames for Zak-OTFS, TDM and FDM.
//!
//! Power convention: every modulation carries unit-energy symbols at `BT`
//! degrees of freedom per frame, so the average transmit power is `P_T = B`
//! and `γ = P_T / (N0 B)` gives a per-sample noise variance `N0 = 1/γ` in the
//! discrete domains.

use crate::channel::{
    apply_td_channel, build_hfd_banded, build_htd_banded, effective_dd_filter_on, BandedMatrix, EffectiveDDFilter, PathChannel, TapWindow,
    TdSeries, ZakOperator, DEFAULT_TF_GUARD,
};
use crate::dd_core::{dzt, idzt, FrameParams, QuasiPeriodicSignal};
use crate::error::{Error, Result};
use crate::filters::{FilterKind, SeparableFilter};
use crate::linalg::{lmmse_dense, lmmse_iterative, LinearOperator};
use crate::numeric::{fft_forward, fft_inverse, C64};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

/// Supported constellation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Constellation {
    /// Gray-labelled 4-QAM with unit energy.
    Qam4,
}

/// A frame of unit-energy symbols with its bit payload.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolFrame {
    /// Constellation used.
    pub constellation: Constellation,
    /// Symbols.
    pub symbols: Vec<C64>,
    /// Bits, two per symbol (first bit on the in-phase rail).
    pub bits: Vec<u8>,
}

/// Gray 4-QAM mapping: bit pair `(b0, b1)` ↦ `((1 − 2b0) + j(1 − 2b1))/√2`,
/// so `00 ↦ (1 + j)/√2`.
pub fn qam4_map(bits: &[u8]) -> Result<SymbolFrame> {
    if !bits.len().is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("bit count must be even, got {}", bits.len())));
    }
    let symbols = bits.chunks(2).map(|b| C64::new(1.0 - 2.0 * b[0] as f64, 1.0 - 2.0 * b[1] as f64) * FRAC_1_SQRT_2).collect();
    Ok(SymbolFrame { constellation: Constellation::Qam4, symbols, bits: bits.to_vec() })
}

/// Nearest-neighbour 4-QAM demapping (sign slicing), returning the sliced frame.
pub fn qam4_demap(symbols: &[C64]) -> SymbolFrame {
    let mut bits = Vec::with_capacity(2 * symbols.len());
    let mut hard = Vec::with_capacity(symbols.len());
    for s in symbols {
        let b0 = (s.re < 0.0) as u8;
        let b1 = (s.im < 0.0) as u8;
        bits.push(b0);
        bits.push(b1);
        hard.push(C64::new(1.0 - 2.0 * b0 as f64, 1.0 - 2.0 * b1 as f64) * FRAC_1_SQRT_2);
    }
    SymbolFrame { constellation: Constellation::Qam4, symbols: hard, bits }
}

/// Uniform random bits.
pub fn random_bits<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<u8> {
    (0..n).map(|_| rng.random_range(0..2u8)).collect()
}

/// Noise bookkeeping: `γ = P_T / (N0 B)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// One-sided noise power spectral density.
    pub n0: f64,
    /// Signal-to-noise ratio (linear).
    pub gamma: f64,
    /// Average transmit power.
    pub p_t: f64,
}

impl NoiseSpec {
    /// Noise level for SNR `γ` (linear) at bandwidth `b` with `P_T = B`.
    pub fn for_gamma(gamma: f64, b: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::InvalidParameter(format!("SNR must be positive, got {gamma}")));
        }
        let p_t = b;
        Ok(Self { n0: p_t / (gamma * b), gamma, p_t })
    }

    /// Noise level for an SNR given in dB.
    pub fn for_gamma_db(gamma_db: f64, b: f64) -> Result<Self> {
        Self::for_gamma(10f64.powf(gamma_db / 10.0), b)
    }

    /// Noise variance per discrete sample after a unit-energy receive filter.
    pub fn sample_variance(&self) -> f64 {
        self.n0
    }
}

fn cn<R: Rng + ?Sized>(rng: &mut R, var: f64) -> C64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re * s, im * s)
}

/// Adds circularly-symmetric white noise of PSD `n0` (variance `n0 · rate` per sample).
pub fn add_awgn<R: Rng + ?Sized>(s: &TdSeries, n0: f64, rng: &mut R) -> Result<TdSeries> {
    if !(n0 >= 0.0) {
        return Err(Error::InvalidParameter(format!("N0 must be non-negative, got {n0}")));
    }
    if n0 == 0.0 {
        return Ok(s.clone());
    }
    let var = n0 * s.rate;
    Ok(TdSeries { rate: s.rate, t0: s.t0, samples: s.samples.iter().map(|&v| v + cn(rng, var)).collect() })
}

/// Adds discrete white noise of variance `var` to every entry.
pub fn add_discrete_noise<R: Rng + ?Sized>(y: &mut [C64], var: f64, rng: &mut R) {
    if var > 0.0 {
        for v in y.iter_mut() {
            *v += cn(rng, var);
        }
    }
}

/// Transmit/receive shaping for the Zak-OTFS time-domain chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shaping {
    /// No pulse shaping: the rate-`B` samples of the inverse Zak transform.
    Ideal,
    /// A separable delay-Doppler filter realised at oversampling `q`.
    Filter {
        /// The filter.
        filter: SeparableFilter,
        /// Oversampling factor relative to `B`.
        q: usize,
    },
}

fn delay_pulse_span(f: &SeparableFilter) -> i64 {
    if f.kind.betas().0 == 0.0 {
        256
    } else {
        64
    }
}

/// Zak-OTFS transmitter.
///
/// The inverse Zak transform of the discrete DD signal is the impulse train
/// `Σ_q td[q mod MN] δ(t − q/B)` with `td = idzt(x)`; the transmit filter
/// windows it by `β_t` and convolves with the delay pulse `a_t`:
/// `s(t) = Σ_q P_{β_ν}(q/MN) td[q mod MN] a_t(t − q/B)`.  The amplitude is
/// such that the average energy per frame is `MN·Es`, i.e. `P_T = B`.
pub fn zak_otfs_tx(x: &QuasiPeriodicSignal, shaping: &Shaping) -> Result<TdSeries> {
    let p = x.params;
    let td = idzt(x);
    match *shaping {
        Shaping::Ideal => Ok(TdSeries { rate: p.b, t0: 0.0, samples: td }),
        Shaping::Filter { filter, q } => {
            if q < 4 {
                return Err(Error::InvalidParameter(format!("oversampling factor must be ≥ 4, got {q}")));
            }
            let mn = p.mn() as i64;
            let qi = q as i64;
            let half = filter.time_window_half_span() * p.b;
            let q_lo = -(half.floor() as i64);
            let q_hi = half.floor() as i64;
            let span = delay_pulse_span(&filter) * qi;
            let n_lo = q_lo * qi - span;
            let n_hi = q_hi * qi + span;
            let len = (n_hi - n_lo + 1) as usize;
            let rate = qi as f64 * p.b;
            let tab: Vec<f64> = (-span..=span).map(|m| filter.delay_pulse(m as f64 / rate)).collect();
            let mut out = vec![C64::new(0.0, 0.0); len];
            let norm = filter.t.sqrt();
            for qq in q_lo..=q_hi {
                let w = filter.time_window(qq as f64 / p.b) * norm;
                if w == 0.0 {
                    continue;
                }
                let c = td[qq.rem_euclid(mn) as usize] * w;
                let base = qq * qi - span - n_lo;
                for (i, &a) in tab.iter().enumerate() {
                    out[(base + i as i64) as usize] += c * a;
                }
            }
            Ok(TdSeries { rate, t0: n_lo as f64 / rate, samples: out })
        }
    }
}

/// Zak-OTFS receiver: receive filter, Zak transform and grid sampling.
///
/// With `ỹ = a_r * (β_r r)` the output is
/// `y[k, l] = √τ_p Σ_n ỹ((k + nM)/B) e^{−j2πnl/N} = √(τ_p N) · dzt(F)[k, l]`
/// where `F[q] = Σ_m ỹ((q + m MN)/B)`.  `F` is computed from the Fourier
/// series of the windowed received signal: `F[q] = (1/T) Σ_m â_r(m/T) Ĝ(m/T) e^{j2πmq/MN}`.
pub fn zak_otfs_rx(r: &TdSeries, params: &FrameParams, shaping: &Shaping) -> Result<QuasiPeriodicSignal> {
    let mn = params.mn();
    match *shaping {
        Shaping::Ideal => {
            if r.samples.len() != mn || ((r.rate - params.b) / params.b).abs() > 1e-12 {
                return Err(Error::Dimension { expected: mn, got: r.samples.len() });
            }
            dzt(&r.samples, *params)
        }
        Shaping::Filter { filter, q } => {
            let rate = q as f64 * params.b;
            if ((r.rate - rate) / rate).abs() > 1e-12 {
                return Err(Error::InvalidParameter("received series rate does not match the shaping".into()));
            }
            let big = q * mn;
            let n0 = (r.t0 * rate).round() as i64;
            if ((r.t0 * rate) - n0 as f64).abs() > 1e-6 {
                return Err(Error::InvalidParameter("received series is not aligned to the sample grid".into()));
            }
            // Ĝ(m/T) by a Riemann sum over samples folded modulo q·MN.
            let mut fold = vec![C64::new(0.0, 0.0); big];
            let dt = 1.0 / rate;
            for (i, &v) in r.samples.iter().enumerate() {
                let n = n0 + i as i64;
                let w = filter.time_window(n as f64 * dt);
                if w != 0.0 {
                    fold[n.rem_euclid(big as i64) as usize] += v * (w * dt);
                }
            }
            fft_forward(&mut fold);
            let mut f = vec![C64::new(0.0, 0.0); mn];
            let mmax = (0.5 * (1.0 + filter.kind.betas().0) * mn as f64).ceil() as i64 + 1;
            for m in -mmax..=mmax {
                let a = filter.delay_pulse_spectrum(m as f64 / params.t);
                if a == 0.0 {
                    continue;
                }
                let g = fold[m.rem_euclid(big as i64) as usize];
                f[m.rem_euclid(mn as i64) as usize] += g * a;
            }
            fft_inverse(&mut f);
            let scale = (params.tau_p * params.n as f64).sqrt() / params.t;
            for v in f.iter_mut() {
                *v *= scale;
            }
            dzt(&f, *params)
        }
    }
}

/// LMMSE detection followed by 4-QAM slicing.
pub fn lmmse_detect(op: &dyn LinearOperator, y: &[C64], noise_var: f64, es: f64) -> Result<SymbolFrame> {
    let x = lmmse_iterative(op, y, noise_var, es)?;
    Ok(qam4_demap(&x))
}

/// LMMSE detection with a dense matrix (exact Cholesky solve).
pub fn lmmse_detect_dense(h: &DMatrix<C64>, y: &[C64], noise_var: f64, es: f64) -> Result<SymbolFrame> {
    let x = lmmse_dense(h, y, noise_var, es)?;
    Ok(qam4_demap(&x))
}

/// Modulation scheme of a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Modulation {
    /// Zak-OTFS on the configured DD grid.
    ZakOtfs,
    /// Time-division multiplexing with sinc pulses.
    Tdm,
    /// Frequency-division multiplexing with rectangular pulses.
    Fdm,
}

/// How the received signal is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fidelity {
    /// Discrete I/O relation with white noise of variance `1/γ`.
    Matrix,
    /// Oversampled time-domain simulation (Zak-OTFS only).
    TimeDomain,
}

/// Channel knowledge used by the detector.
#[derive(Debug, Clone)]
pub enum Csi {
    /// The true I/O relation.
    Perfect,
    /// A caller-supplied effective DD filter (Zak-OTFS).
    ZakFilter(EffectiveDDFilter),
    /// A caller-supplied banded matrix (TDM or FDM).
    Matrix(BandedMatrix),
}

/// Static configuration of a link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkConfig {
    /// Modulation scheme.
    pub modulation: Modulation,
    /// DD grid (TDM/FDM use only `B` and `T`).
    pub params: FrameParams,
    /// Zak-OTFS transmit/receive filter family.
    pub filter: FilterKind,
    /// Tap-window guard beyond the channel spread (delay, Doppler).
    pub guard: (i64, i64),
    /// Band truncation beyond the channel spread for TDM/FDM.
    pub tf_guard: i64,
    /// Signal model fidelity.
    pub fidelity: Fidelity,
    /// Oversampling factor of the time-domain fidelity.
    pub q: usize,
}

impl LinkConfig {
    /// Defaults: filter guard from the family, band guard 16, matrix fidelity, `q = 16`.
    pub fn new(modulation: Modulation, params: FrameParams, filter: FilterKind) -> Self {
        let g = filter.default_guard();
        Self { modulation, params, filter, guard: (g, g), tf_guard: DEFAULT_TF_GUARD, fidelity: Fidelity::Matrix, q: 16 }
    }

    /// Transmit/receive filter of the Zak-OTFS link.
    pub fn shaping_filter(&self) -> Result<SeparableFilter> {
        SeparableFilter::for_frame(self.filter, &self.params)
    }

    /// The true effective DD filter of `ch` for this link.
    pub fn true_filter(&self, ch: &PathChannel) -> Result<EffectiveDDFilter> {
        let f = self.shaping_filter()?;
        let win = TapWindow::for_channel(ch, &self.params, self.guard.0, self.guard.1);
        effective_dd_filter_on(ch, &f, &f, &self.params, &win)
    }

    /// The true TDM/FDM banded matrix of `ch`.
    pub fn true_matrix(&self, ch: &PathChannel) -> Result<BandedMatrix> {
        match self.modulation {
            Modulation::Tdm => build_htd_banded(ch, self.params.b, self.params.t, self.tf_guard),
            Modulation::Fdm => build_hfd_banded(ch, self.params.b, self.params.t, self.tf_guard),
            Modulation::ZakOtfs => Err(Error::InvalidParameter("Zak-OTFS has no banded TF matrix".into())),
        }
    }
}

/// Result of one Monte Carlo frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameOutcome {
    /// Bits transmitted.
    pub bits: u64,
    /// Bit errors.
    pub errors: u64,
    /// Received signal energy (noise-free part).
    pub signal_energy: f64,
    /// Noise energy added.
    pub noise_energy: f64,
}

/// Runs one frame: random bits → modulation → channel → noise → LMMSE with
/// the designated channel knowledge → bit errors.
///
/// `true_filter` may pass a precomputed true Zak-OTFS filter of `ch` (it is
/// computed when absent).
pub fn run_frame<R: Rng + ?Sized>(
    cfg: &LinkConfig,
    ch: &PathChannel,
    gamma_db: f64,
    csi: &Csi,
    true_filter: Option<&EffectiveDDFilter>,
    rng: &mut R,
) -> Result<FrameOutcome> {
    let p = cfg.params;
    let noise = NoiseSpec::for_gamma_db(gamma_db, p.b)?;
    let var = noise.sample_variance();
    let n_sym = p.mn();
    let bits = random_bits(2 * n_sym, rng);
    let frame = qam4_map(&bits)?;
    let (sig_e, noise_e, detected) = match cfg.modulation {
        Modulation::ZakOtfs => {
            let x = QuasiPeriodicSignal { params: p, samples: frame.symbols.clone() };
            let owned;
            let h_true = match true_filter {
                Some(h) => h,
                None => {
                    owned = cfg.true_filter(ch)?;
                    &owned
                }
            };
            let (y, se, ne) = match cfg.fidelity {
                Fidelity::Matrix => {
                    let clean = ZakOperator::new(h_true).apply(&x.samples);
                    let se = crate::numeric::energy(&clean);
                    let mut y = clean.clone();
                    add_discrete_noise(&mut y, var, rng);
                    let ne = y.iter().zip(&clean).map(|(a, b)| (a - b).norm_sqr()).sum();
                    (y, se, ne)
                }
                Fidelity::TimeDomain => {
                    let shaping = Shaping::Filter { filter: cfg.shaping_filter()?, q: cfg.q };
                    let s = zak_otfs_tx(&x, &shaping)?;
                    let guard = ((ch.extent().1.max(0.0)) * s.rate).ceil() as usize + 64;
                    let mut padded = s.samples.clone();
                    padded.extend(std::iter::repeat_n(C64::new(0.0, 0.0), guard));
                    let s = TdSeries { samples: padded, ..s };
                    let r = apply_td_channel(ch, &s, cfg.q)?;
                    let clean = zak_otfs_rx(&r, &p, &shaping)?.samples;
                    let rn = add_awgn(&r, noise.n0, rng)?;
                    let y = zak_otfs_rx(&rn, &p, &shaping)?.samples;
                    let se = crate::numeric::energy(&clean);
                    let ne = y.iter().zip(&clean).map(|(a, b)| (a - b).norm_sqr()).sum();
                    (y, se, ne)
                }
            };
            let det = match csi {
                Csi::Perfect => lmmse_detect(&ZakOperator::new(h_true), &y, var, 1.0)?,
                Csi::ZakFilter(h) => lmmse_detect(&ZakOperator::new(h), &y, var, 1.0)?,
                Csi::Matrix(_) => return Err(Error::InvalidParameter("Zak-OTFS needs a DD filter estimate".into())),
            };
            (se, ne, det)
        }
        Modulation::Tdm | Modulation::Fdm => {
            if cfg.fidelity != Fidelity::Matrix {
                return Err(Error::InvalidParameter("TDM/FDM frames use the matrix model".into()));
            }
            let h = cfg.true_matrix(ch)?;
            let clean = h.apply(&frame.symbols);
            let se = crate::numeric::energy(&clean);
            let mut y = clean.clone();
            add_discrete_noise(&mut y, var, rng);
            let ne = y.iter().zip(&clean).map(|(a, b)| (a - b).norm_sqr()).sum();
            let det = match csi {
                Csi::Perfect => lmmse_detect(&h, &y, var, 1.0)?,
                Csi::Matrix(m) => lmmse_detect(m, &y, var, 1.0)?,
                Csi::ZakFilter(_) => return Err(Error::InvalidParameter("TDM/FDM need a matrix estimate".into())),
            };
            (se, ne, det)
        }
    };
    let errors = detected.bits.iter().zip(&bits).filter(|(a, b)| a != b).count() as u64;
    Ok(FrameOutcome { bits: bits.len() as u64, errors, signal_energy: sig_e, noise_energy: noise_e })
}
