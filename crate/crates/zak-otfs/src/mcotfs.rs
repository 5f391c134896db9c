//! MC-OTFS: the two-step (ISFFT + Heisenberg) multicarrier approximation to
//! Zak-OTFS with a rectangular prototype pulse of duration `τ_p`.
//!
//! Three evaluations of the same input-output map are provided:
//!
//! * [`McOperator`]: the time-frequency relation in closed form.  For a path
//!   channel and rectangular pulses every inner product
//!   `⟨H g_{n',m'}, g_{n,m}⟩` is an integral of a complex exponential over the
//!   overlap of two blocks.  Used for detection and prediction experiments.
//! * [`mc_tx_two_step`] → [`apply_td_channel`] → [`mc_rx_two_step`]: the
//!   oversampled time-domain chain.
//! * [`mc_io_zak_form`]: `y = w_rx ⋆ [G*·(h *σ {G·[w_tx ⋆ x]})]` evaluated on a
//!   `P`-times oversampled delay-Doppler grid.
//!
//! Index conventions: DD samples are stored at `k·N + l`; TF samples
//! `X[n, m]` at `n_i·M + m_i` with `n_i = n mod N`, `m_i = m mod M`.  Physical
//! block and subcarrier indices are centred, `n ∈ [−⌊N/2⌋, N − ⌊N/2⌋)` (block
//! `n` occupies `[nτ_p, (n + 1)τ_p)`) and likewise for `m`.

use crate::channel::{apply_td_channel, PathChannel, TdSeries};
use crate::dd_core::FrameParams;
use crate::error::{Error, Result};
use crate::linalg::{lmmse_iterative, LinearOperator};
use crate::modem::{add_discrete_noise, qam4_demap, qam4_map, random_bits, FrameOutcome, NoiseSpec};
use crate::numeric::{cis2pi, energy, fft_forward, fft_inverse, C64};
use crate::predict::{RpeHeatmap, RPE_FLOOR_DB};
use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Centred physical index of storage index `i` on a length-`len` axis.
pub fn centred(i: usize, len: usize) -> i64 {
    let lo = len - len / 2;
    if i < lo {
        i as i64
    } else {
        i as i64 - len as i64
    }
}

/// Bi-periodic DD signal: `x[k + nM, l + mN] = x[k, l]` (no phase).
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicDDSignal {
    /// Grid.
    pub params: FrameParams,
    /// Fundamental-domain samples at `k·N + l`.
    pub samples: Vec<C64>,
}

impl PeriodicDDSignal {
    /// All-zero signal.
    pub fn zeros(params: FrameParams) -> Self {
        Self { params, samples: vec![C64::new(0.0, 0.0); params.mn()] }
    }

    /// Value at any integer `(k, l)` through the periodic extension.
    pub fn get(&self, k: i64, l: i64) -> C64 {
        let (m, n) = (self.params.m as i64, self.params.n as i64);
        self.samples[(k.rem_euclid(m) * n + l.rem_euclid(n)) as usize]
    }
}

/// The multicarrier generator `G_dd = Z_g` of the rectangular prototype
/// `g(t) = τ_p^{−1/2} 1[0 ≤ t < τ_p]`: `G(τ, ν) = e^{j2π q ν τ_p}` for
/// `τ ∈ [qτ_p, (q + 1)τ_p)`, so `|G| = 1` everywhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McGenerator {
    /// Grid.
    pub params: FrameParams,
}

/// Which one-sided limit to take at a discontinuity of the generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Limit {
    /// Value just left of the jump.
    Left,
    /// Value just right of the jump (the right-continuous definition).
    Right,
    /// Mean of the two one-sided limits.
    Mean,
}

impl McGenerator {
    /// Generator of the rectangular prototype on `params`.
    pub fn rect(params: FrameParams) -> Self {
        Self { params }
    }

    /// `G(τ, ν)` with the chosen limit at the jumps `τ ∈ τ_p ℤ`.
    pub fn eval(&self, tau: f64, nu: f64, limit: Limit) -> C64 {
        let x = tau / self.params.tau_p;
        let q = x.floor();
        let on_jump = (x - x.round()).abs() < 1e-9;
        let at = |q: f64| cis2pi(q * nu * self.params.tau_p);
        if !on_jump {
            return at(q);
        }
        let r = x.round();
        match limit {
            Limit::Right => at(r),
            Limit::Left => at(r - 1.0),
            Limit::Mean => (at(r) + at(r - 1.0)) * 0.5,
        }
    }

    /// Samples `G(k/B, l/T)` on the fundamental domain (`k·N + l`).
    pub fn sample(&self) -> Vec<C64> {
        let p = self.params;
        (0..p.mn()).map(|i| self.eval((i / p.n) as f64 / p.b, (i % p.n) as f64 / p.t, Limit::Right)).collect()
    }
}

/// Real TF window `W[n, m]` applied to transmitted or received TF symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct TfWindow {
    /// Weights at `n_i·M + m_i`.
    pub weights: Vec<f64>,
}

impl TfWindow {
    /// All-ones window (its SFFT is the sinc DD filter).
    pub fn rect(params: &FrameParams) -> Self {
        Self { weights: vec![1.0; params.mn()] }
    }

    fn is_rect(&self) -> bool {
        self.weights.iter().all(|&w| w == 1.0)
    }
}

/// Unitary ISFFT: `X[n, m] = (MN)^{−1/2} Σ_{k,l} x[k, l] e^{j2π(nl/N − mk/M)}`.
pub fn isfft(x: &[C64], params: &FrameParams) -> Vec<C64> {
    let (m, n) = (params.m, params.n);
    let mut tmp = x.to_vec();
    // Over l (inverse DFT), rows of length N.
    for row in tmp.chunks_mut(n) {
        fft_inverse(row);
    }
    // Over k (forward DFT), per column l; output to X[n_i·M + m_i].
    let mut out = vec![C64::new(0.0, 0.0); m * n];
    let mut col = vec![C64::new(0.0, 0.0); m];
    let s = 1.0 / ((m * n) as f64).sqrt();
    for l in 0..n {
        for k in 0..m {
            col[k] = tmp[k * n + l];
        }
        fft_forward(&mut col);
        for mi in 0..m {
            out[l * m + mi] = col[mi] * s;
        }
    }
    out
}

/// Unitary SFFT, the inverse of [`isfft`].
pub fn sfft(x_tf: &[C64], params: &FrameParams) -> Vec<C64> {
    let (m, n) = (params.m, params.n);
    let mut out = vec![C64::new(0.0, 0.0); m * n];
    let mut col = vec![C64::new(0.0, 0.0); m];
    for ni in 0..n {
        col.copy_from_slice(&x_tf[ni * m..(ni + 1) * m]);
        fft_inverse(&mut col);
        for k in 0..m {
            out[k * n + ni] = col[k];
        }
    }
    let s = 1.0 / ((m * n) as f64).sqrt();
    for row in out.chunks_mut(n) {
        fft_forward(row);
        for v in row.iter_mut() {
            *v *= s;
        }
    }
    out
}

/// `(1/τ_p) ∫_a^b e^{j2πft} dt`.
fn int_exp(f: f64, a: f64, b: f64, tau_p: f64) -> C64 {
    let d = b - a;
    let x = f * d;
    let s = if x.abs() < 1e-12 { 1.0 } else { (PI * x).sin() / (PI * x) };
    cis2pi(0.5 * f * (a + b)) * (d * s / tau_p)
}

/// The MC-OTFS input-output map `y = SFFT(W_rx · A · (W_tx · ISFFT(x)))`
/// with the TF relation `A` in closed form.
///
/// `A[(n, m), (n', m')] = Σ_i h_i e^{−j2π(m'ν_p + ν_i)τ_i} (1/τ_p) ∫_I e^{j2πft} dt`
/// with `f = (m' − m)ν_p + ν_i` and `I` the overlap of the receive block
/// `[nτ_p, (n + 1)τ_p)` with the delayed transmit block `[n'τ_p + τ_i, (n' + 1)τ_p + τ_i)`.
#[derive(Debug, Clone)]
pub struct McOperator {
    params: FrameParams,
    /// `(n_i, n'_i, M × M block)`, block rows `m_i`, columns `m'_i`.
    blocks: Vec<(usize, usize, DMatrix<C64>)>,
    w_tx: TfWindow,
    w_rx: TfWindow,
}

impl McOperator {
    /// Builds the map for `ch` with TF windows `w_tx`, `w_rx`.
    pub fn new(ch: &PathChannel, params: &FrameParams, w_tx: &TfWindow, w_rx: &TfWindow) -> Result<Self> {
        let (m, n) = (params.m, params.n);
        if w_tx.weights.len() != m * n || w_rx.weights.len() != m * n {
            return Err(Error::Dimension { expected: m * n, got: w_tx.weights.len().min(w_rx.weights.len()) });
        }
        let tp = params.tau_p;
        let nup = params.nu_p;
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for ni in 0..n {
            let nr = centred(ni, n);
            for nj in 0..n {
                let nt = centred(nj, n);
                let hit = ch.paths.iter().any(|p| {
                    let a = (nr as f64 * tp).max(nt as f64 * tp + p.delay);
                    let b = ((nr + 1) as f64 * tp).min((nt + 1) as f64 * tp + p.delay);
                    b > a + 1e-15 * tp
                });
                if hit {
                    pairs.push((ni, nj));
                }
            }
        }
        let blocks = pairs
            .par_iter()
            .map(|&(ni, nj)| {
                let nr = centred(ni, n) as f64;
                let nt = centred(nj, n) as f64;
                let mut blk = DMatrix::zeros(m, m);
                for p in &ch.paths {
                    let a = (nr * tp).max(nt * tp + p.delay);
                    let b = ((nr + 1.0) * tp).min((nt + 1.0) * tp + p.delay);
                    if b <= a {
                        continue;
                    }
                    for mj in 0..m {
                        let mt = centred(mj, m) as f64;
                        let c = p.gain * cis2pi(-(mt * nup + p.doppler) * p.delay);
                        for mi in 0..m {
                            let mr = centred(mi, m) as f64;
                            let f = (mt - mr) * nup + p.doppler;
                            blk[(mi, mj)] += c * int_exp(f, a, b, tp);
                        }
                    }
                }
                (ni, nj, blk)
            })
            .collect();
        Ok(Self { params: *params, blocks, w_tx: w_tx.clone(), w_rx: w_rx.clone() })
    }

    /// Grid of the operator.
    pub fn params(&self) -> FrameParams {
        self.params
    }

    fn tf_apply(&self, x_tf: &[C64], adjoint: bool) -> Vec<C64> {
        let m = self.params.m;
        let mut out = vec![C64::new(0.0, 0.0); x_tf.len()];
        for (ni, nj, blk) in &self.blocks {
            let (src, dst) = if adjoint { (*ni, *nj) } else { (*nj, *ni) };
            let xs = &x_tf[src * m..(src + 1) * m];
            let ys = &mut out[dst * m..(dst + 1) * m];
            for r in 0..m {
                let mut acc = C64::new(0.0, 0.0);
                for c in 0..m {
                    acc += if adjoint { blk[(c, r)].conj() * xs[c] } else { blk[(r, c)] * xs[c] };
                }
                ys[r] += acc;
            }
        }
        out
    }
}

impl LinearOperator for McOperator {
    fn nrows(&self) -> usize {
        self.params.mn()
    }
    fn ncols(&self) -> usize {
        self.params.mn()
    }
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut xt = isfft(x, &self.params);
        for (v, w) in xt.iter_mut().zip(&self.w_tx.weights) {
            *v *= *w;
        }
        let mut yt = self.tf_apply(&xt, false);
        for (v, w) in yt.iter_mut().zip(&self.w_rx.weights) {
            *v *= *w;
        }
        sfft(&yt, &self.params)
    }
    fn apply_adjoint(&self, y: &[C64]) -> Vec<C64> {
        // SFFT and ISFFT are unitary and mutually inverse, hence adjoint.
        let mut yt = isfft(y, &self.params);
        for (v, w) in yt.iter_mut().zip(&self.w_rx.weights) {
            *v *= *w;
        }
        let mut xt = self.tf_apply(&yt, true);
        for (v, w) in xt.iter_mut().zip(&self.w_tx.weights) {
            *v *= *w;
        }
        sfft(&xt, &self.params)
    }
}

/// Two-step transmitter at oversampling `q`:
/// `s(t) = Σ_{n,m} W[n,m] X[n,m] g(t − nτ_p) e^{j2πmν_p (t − nτ_p)}`, `X = ISFFT(x)`.
///
/// The frame `[−⌊N/2⌋τ_p, (N − ⌊N/2⌋)τ_p)` is sampled at the cell midpoints
/// `t_j = t_start + (j + ½)/(qB)`, so no sample sits on a block boundary and a
/// delay by a whole number of samples keeps every discontinuity on a cell
/// edge, where the midpoint rule of the receiver stays second-order accurate.
pub fn mc_tx_two_step(x: &[C64], params: &FrameParams, w_tx: &TfWindow, q: usize) -> Result<TdSeries> {
    let (m, n) = (params.m, params.n);
    if x.len() != m * n {
        return Err(Error::Dimension { expected: m * n, got: x.len() });
    }
    if q < 4 {
        return Err(Error::InvalidParameter(format!("oversampling factor must be ≥ 4, got {q}")));
    }
    let xt = isfft(x, params);
    let per_block = q * m;
    let rate = params.b * q as f64;
    let n_first = -((n / 2) as i64);
    let t0 = n_first as f64 * params.tau_p + 0.5 / rate;
    let amp = 1.0 / params.tau_p.sqrt();
    let samples = (0..n * per_block)
        .map(|j| {
            let t = t0 + j as f64 / rate;
            let ni = (n_first + (j / per_block) as i64).rem_euclid(n as i64) as usize;
            let mut acc = C64::new(0.0, 0.0);
            for mi in 0..m {
                let w = w_tx.weights[ni * m + mi];
                if w != 0.0 {
                    acc += xt[ni * m + mi] * w * cis2pi(centred(mi, m) as f64 * params.nu_p * t);
                }
            }
            acc * amp
        })
        .collect();
    Ok(TdSeries { rate, t0, samples })
}

/// Matched two-step receiver: `Y[n, m] = W_rx[n,m] ∫ r(t) g*(t − nτ_p)
/// e^{−j2πmν_p(t − nτ_p)} dt` by the midpoint rule on each block, then
/// `y = SFFT(Y)`.  `r` must be sampled on the transmitter's grid.
pub fn mc_rx_two_step(r: &TdSeries, params: &FrameParams, w_rx: &TfWindow, q: usize) -> Result<Vec<C64>> {
    let (m, n) = (params.m, params.n);
    let rate = params.b * q as f64;
    if ((r.rate - rate) / rate).abs() > 1e-12 {
        return Err(Error::InvalidParameter("received series rate does not match".into()));
    }
    let per_block = q * m;
    let n_first = -((n / 2) as i64);
    let first = n_first as f64 * params.tau_p + 0.5 / rate;
    let start = ((first - r.t0) * rate).round() as i64;
    if start < 0 || (start as usize + n * per_block) > r.samples.len() {
        return Err(Error::Dimension { expected: start.max(0) as usize + n * per_block, got: r.samples.len() });
    }
    let dt = 1.0 / rate;
    let amp = 1.0 / params.tau_p.sqrt();
    let mut yt = vec![C64::new(0.0, 0.0); m * n];
    for j in 0..n {
        let ni = (n_first + j as i64).rem_euclid(n as i64) as usize;
        let block = &r.samples[start as usize + j * per_block..start as usize + (j + 1) * per_block];
        for mi in 0..m {
            let f = centred(mi, m) as f64 * params.nu_p;
            let mut acc = C64::new(0.0, 0.0);
            for (s, v) in block.iter().enumerate() {
                let t = r.t0 + (start as usize + j * per_block + s) as f64 * dt;
                acc += v * cis2pi(-f * t);
            }
            yt[ni * m + mi] = acc * (dt * amp * w_rx.weights[ni * m + mi]);
        }
    }
    Ok(sfft(&yt, params))
}

/// Full two-step route: transmitter, channel (series padded for the largest
/// delay) and receiver at oversampling `q`.
pub fn mc_two_step_route(
    x: &[C64],
    ch: &PathChannel,
    params: &FrameParams,
    w_tx: &TfWindow,
    w_rx: &TfWindow,
    q: usize,
) -> Result<Vec<C64>> {
    let s = mc_tx_two_step(x, params, w_tx, q)?;
    let (lo, hi, _, _) = ch.extent();
    let pre = ((-lo).max(0.0) * s.rate).ceil() as usize + 64;
    let post = (hi.max(0.0) * s.rate).ceil() as usize + 64;
    let mut samples = vec![C64::new(0.0, 0.0); pre];
    samples.extend_from_slice(&s.samples);
    samples.extend(std::iter::repeat_n(C64::new(0.0, 0.0), post));
    let padded = TdSeries { rate: s.rate, t0: s.t0 - pre as f64 / s.rate, samples };
    let r = apply_td_channel(ch, &padded, q)?;
    mc_rx_two_step(&r, params, w_rx, q)
}

/// Zak-form evaluation `y = w_rx ⋆ [G*·(h *σ {G·[w_tx ⋆ x]})]` sampled on the
/// information grid.
///
/// The periodic function `F = w_tx ⋆ x = Σ W X[n,m] e^{j2π(mν_pτ − nτ_pν)}` and
/// its channel-shifted copies are evaluated exactly on a grid of `PM × PN`
/// points per period, placed at the delay midpoints `(a + ½)τ_p/(PM)`; the
/// generator is applied pointwise (mean limit at any jump hit exactly); the
/// receive filter is the projection onto the same exponentials, integrated by
/// the midpoint rule in delay and the (exact) periodic rule in Doppler.
pub fn mc_io_zak_form(
    x: &PeriodicDDSignal,
    ch: &PathChannel,
    w_tx: &TfWindow,
    w_rx: &TfWindow,
    g: &McGenerator,
    p_over: usize,
) -> Result<Vec<C64>> {
    let params = x.params;
    let (m, n) = (params.m, params.n);
    if p_over < 2 {
        return Err(Error::InvalidParameter(format!("oversampling factor must be ≥ 2, got {p_over}")));
    }
    let (pm, pn) = (p_over * m, p_over * n);
    let tp = params.tau_p;
    let nup = params.nu_p;
    let half = 0.5 / pm as f64;
    let mut xt = isfft(&x.samples, &params);
    for (v, w) in xt.iter_mut().zip(&w_tx.weights) {
        *v *= *w;
    }
    // Exact evaluation of a trigonometric polynomial with TF coefficients
    // `c[n_i·M + m_i]` on the fine grid (a over delay, b over Doppler).
    let eval_fine = |c: &[C64]| -> Vec<C64> {
        let mut grid = vec![C64::new(0.0, 0.0); pm * pn];
        for ni in 0..n {
            let bi = centred(ni, n).rem_euclid(pn as i64) as usize;
            for mi in 0..m {
                let mp = centred(mi, m);
                let ai = mp.rem_euclid(pm as i64) as usize;
                // e^{j2π m (a + ½)/(PM)} over a, e^{−j2π n b/(PN)} over b.
                grid[ai * pn + bi] = c[ni * m + mi] * cis2pi(mp as f64 * half);
            }
        }
        let mut col = vec![C64::new(0.0, 0.0); pm];
        for b in 0..pn {
            for a in 0..pm {
                col[a] = grid[a * pn + b];
            }
            fft_inverse(&mut col);
            for a in 0..pm {
                grid[a * pn + b] = col[a];
            }
        }
        for row in grid.chunks_mut(pn) {
            fft_forward(row);
        }
        grid
    };
    let mut psi = vec![C64::new(0.0, 0.0); pm * pn];
    for path in &ch.paths {
        let shifted: Vec<C64> = (0..m * n)
            .map(|i| {
                let (ni, mi) = (i / m, i % m);
                let (np, mp) = (centred(ni, n) as f64, centred(mi, m) as f64);
                xt[i] * cis2pi(-mp * nup * path.delay + np * tp * path.doppler)
            })
            .collect();
        let f = eval_fine(&shifted);
        for a in 0..pm {
            let tau = (a as f64 + 0.5) * tp / pm as f64;
            for b in 0..pn {
                let nu = b as f64 * nup / pn as f64;
                let gv = g.eval(tau - path.delay, nu - path.doppler, Limit::Mean);
                psi[a * pn + b] += path.gain * gv * f[a * pn + b] * cis2pi(path.doppler * (tau - path.delay));
            }
        }
    }
    for a in 0..pm {
        let tau = (a as f64 + 0.5) * tp / pm as f64;
        for b in 0..pn {
            let nu = b as f64 * nup / pn as f64;
            psi[a * pn + b] *= g.eval(tau, nu, Limit::Mean).conj();
        }
    }
    // Y[n, m] = (τ_p ν_p / (PM PN)) Σ_{a,b} Ψ e^{−j2π(m (a + ½)/(PM) − n b/(PN))}.
    let mut col = vec![C64::new(0.0, 0.0); pm];
    for b in 0..pn {
        for a in 0..pm {
            col[a] = psi[a * pn + b];
        }
        fft_forward(&mut col);
        for a in 0..pm {
            psi[a * pn + b] = col[a];
        }
    }
    for row in psi.chunks_mut(pn) {
        fft_inverse(row);
    }
    let scale = tp * nup / (pm * pn) as f64;
    let mut yt = vec![C64::new(0.0, 0.0); m * n];
    for ni in 0..n {
        let bi = centred(ni, n).rem_euclid(pn as i64) as usize;
        for mi in 0..m {
            let mp = centred(mi, m);
            let ai = mp.rem_euclid(pm as i64) as usize;
            yt[ni * m + mi] = psi[ai * pn + bi] * cis2pi(-(mp as f64) * half) * (scale * w_rx.weights[ni * m + mi]);
        }
    }
    Ok(sfft(&yt, &params))
}

/// Periodic 2-D convolution `y[k, l] = Σ κ[k', l'] x[k − k', l − l']`
/// (the MC-OTFS model-free I/O model), applied in the 2-D DFT domain.
#[derive(Debug, Clone)]
pub struct PeriodicConvOperator {
    params: FrameParams,
    eig: Vec<C64>,
}

fn dft2(v: &mut [C64], m: usize, n: usize, inverse: bool) {
    let step = |buf: &mut [C64]| if inverse { fft_inverse(buf) } else { fft_forward(buf) };
    for row in v.chunks_mut(n) {
        step(row);
    }
    let mut col = vec![C64::new(0.0, 0.0); m];
    for l in 0..n {
        for k in 0..m {
            col[k] = v[k * n + l];
        }
        step(&mut col);
        for k in 0..m {
            v[k * n + l] = col[k];
        }
    }
}

impl PeriodicConvOperator {
    /// Operator for kernel `κ`.
    pub fn new(kernel: &PeriodicDDSignal) -> Self {
        let p = kernel.params;
        let mut eig = kernel.samples.clone();
        dft2(&mut eig, p.m, p.n, false);
        Self { params: p, eig }
    }

    fn run(&self, x: &[C64], conj: bool) -> Vec<C64> {
        let (m, n) = (self.params.m, self.params.n);
        let mut v = x.to_vec();
        dft2(&mut v, m, n, false);
        for (a, e) in v.iter_mut().zip(&self.eig) {
            *a *= if conj { e.conj() } else { *e };
        }
        dft2(&mut v, m, n, true);
        let s = 1.0 / (m * n) as f64;
        v.iter_mut().for_each(|a| *a *= s);
        v
    }
}

impl LinearOperator for PeriodicConvOperator {
    fn nrows(&self) -> usize {
        self.params.mn()
    }
    fn ncols(&self) -> usize {
        self.params.mn()
    }
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        self.run(x, false)
    }
    fn apply_adjoint(&self, y: &[C64]) -> Vec<C64> {
        self.run(y, true)
    }
}

fn unit(params: &FrameParams, k: usize, l: usize) -> Vec<C64> {
    let mut e = vec![C64::new(0.0, 0.0); params.mn()];
    e[k * params.n + l] = C64::new(1.0, 0.0);
    e
}

/// Result of the MC-OTFS single-pilot prediction experiment.
#[derive(Debug, Clone)]
pub struct McPrediction {
    /// Response to the centre pilot re-centred as a periodic convolution kernel.
    pub kernel: PeriodicDDSignal,
    /// RPE at every target location.
    pub heatmap: RpeHeatmap,
}

/// Re-centres the response `y` to a pilot at `(k0, l0)` as a periodic kernel
/// `κ[k, l] = y[k + k0, l + l0]` (plain periodic shift invariance; the
/// generator phases are not modelled).
pub fn mc_kernel_from_pilot(y: &[C64], params: &FrameParams, k0: usize, l0: usize) -> PeriodicDDSignal {
    let yp = PeriodicDDSignal { params: *params, samples: y.to_vec() };
    let mut kernel = PeriodicDDSignal::zeros(*params);
    for k in 0..params.m {
        for l in 0..params.n {
            kernel.samples[k * params.n + l] = yp.get((k + k0) as i64, (l + l0) as i64);
        }
    }
    kernel
}

/// MC-OTFS model-free prediction: response to the pilot at `(M/2, N/2)`,
/// re-centred kernel, predicted responses at all targets, RPE as for Zak-OTFS.
pub fn mc_pilot_estimate_and_predict(ch: &PathChannel, w_tx: &TfWindow, w_rx: &TfWindow, params: &FrameParams) -> Result<McPrediction> {
    if !params.m.is_multiple_of(2) || !params.n.is_multiple_of(2) {
        return Err(Error::InvalidParameter("the centre pilot needs even M and N".into()));
    }
    let op = McOperator::new(ch, params, w_tx, w_rx)?;
    let (k0, l0) = (params.m / 2, params.n / 2);
    let y0 = op.apply(&unit(params, k0, l0));
    let kernel = mc_kernel_from_pilot(&y0, params, k0, l0);
    let n = params.n;
    let rpe_db = (0..params.mn())
        .into_par_iter()
        .map(|i| {
            let (kg, lg) = (i / n, i % n);
            let y = op.apply(&unit(params, kg, lg));
            let den = energy(&y);
            if den == 0.0 {
                return Err(Error::UndefinedRpe);
            }
            let mut num = 0.0;
            for k in 0..params.m {
                for l in 0..n {
                    let pred = kernel.get(k as i64 - kg as i64, l as i64 - lg as i64);
                    num += (y[k * n + l] - pred).norm_sqr();
                }
            }
            let e = num / den;
            Ok(if e <= 0.0 { RPE_FLOOR_DB } else { (10.0 * e.log10()).max(RPE_FLOOR_DB) })
        })
        .collect::<Result<Vec<f64>>>()?;
    let pilot = crate::predict::PilotSpec { k0, l0 };
    Ok(McPrediction { kernel, heatmap: RpeHeatmap { params: *params, pilot, rpe_db } })
}

/// Channel knowledge for an MC-OTFS frame.
#[derive(Debug, Clone)]
pub enum McCsi {
    /// The exact MC-OTFS map.
    Perfect,
    /// A periodic-convolution kernel estimated from a pilot.
    Kernel(PeriodicDDSignal),
}

/// One MC-OTFS Monte Carlo frame with LMMSE detection.
///
/// `op` may pass the precomputed true map of `ch`.
pub fn mc_run_frame<R: Rng + ?Sized>(
    ch: &PathChannel,
    params: &FrameParams,
    gamma_db: f64,
    csi: &McCsi,
    op: Option<&McOperator>,
    rng: &mut R,
) -> Result<FrameOutcome> {
    let noise = NoiseSpec::for_gamma_db(gamma_db, params.b)?;
    let var = noise.sample_variance();
    let owned;
    let op = match op {
        Some(o) => o,
        None => {
            let w = TfWindow::rect(params);
            owned = McOperator::new(ch, params, &w, &w)?;
            &owned
        }
    };
    let bits = random_bits(2 * params.mn(), rng);
    let frame = qam4_map(&bits)?;
    let clean = op.apply(&frame.symbols);
    let mut y = clean.clone();
    add_discrete_noise(&mut y, var, rng);
    let noise_energy = y.iter().zip(&clean).map(|(a, b)| (a - b).norm_sqr()).sum();
    let x_hat = match csi {
        McCsi::Perfect => lmmse_iterative(op, &y, var, 1.0)?,
        McCsi::Kernel(k) => lmmse_iterative(&PeriodicConvOperator::new(k), &y, var, 1.0)?,
    };
    let det = qam4_demap(&x_hat);
    let errors = det.bits.iter().zip(&bits).filter(|(a, b)| a != b).count() as u64;
    Ok(FrameOutcome { bits: bits.len() as u64, errors, signal_energy: energy(&clean), noise_energy })
}

/// Whether a TF window is the all-ones (sinc-filter) window.
pub fn is_rect_window(w: &TfWindow) -> bool {
    w.is_rect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{two_path, veh_a, Path};
    use crate::linalg::to_dense;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small() -> FrameParams {
        FrameParams::new(8, 4, 15e3).unwrap()
    }

    fn rand_vec(len: usize, seed: u64) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
    }

    /// Channel with delays on the `1/(16B)` grid so both routes are exact in delay.
    fn on_grid_channel(p: &FrameParams) -> PathChannel {
        let d = 1.0 / (16.0 * p.b);
        PathChannel {
            paths: vec![
                Path { gain: C64::new(0.8, 0.1), delay: 0.0, doppler: 700.0 },
                Path { gain: C64::new(-0.3, 0.4), delay: 21.0 * d, doppler: -1900.0 },
                Path { gain: C64::new(0.2, -0.25), delay: 53.0 * d, doppler: 2500.0 },
            ],
        }
    }

    #[test]
    fn generator_has_unit_modulus_and_is_quasi_periodic() {
        let p = FrameParams::new(64, 24, 15e3).unwrap();
        let g = McGenerator::rect(p);
        assert!(g.sample().iter().all(|v| (v.norm() - 1.0).abs() < 1e-15));
        let (tau, nu) = (0.3 * p.tau_p, 0.7 * p.nu_p);
        let shifted = g.eval(tau + p.tau_p, nu, Limit::Right);
        assert!((shifted - g.eval(tau, nu, Limit::Right) * cis2pi(nu * p.tau_p)).norm() < 1e-12);
        assert!((g.eval(tau, nu + p.nu_p, Limit::Right) - g.eval(tau, nu, Limit::Right)).norm() < 1e-12);
    }

    #[test]
    fn isfft_is_unitary_and_inverted_by_sfft() {
        let p = FrameParams::new(6, 4, 1e3).unwrap();
        let x = rand_vec(24, 1);
        let xt = isfft(&x, &p);
        assert!((energy(&xt) - energy(&x)).abs() < 1e-12);
        let back = sfft(&xt, &p);
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).norm() < 1e-12);
        }
        // Direct definition at one point.
        let (ni, mi) = (3usize, 5usize);
        let mut want = C64::new(0.0, 0.0);
        for k in 0..6 {
            for l in 0..4 {
                want += x[k * 4 + l] * cis2pi(ni as f64 * l as f64 / 4.0 - mi as f64 * k as f64 / 6.0);
            }
        }
        assert!((xt[ni * 6 + mi] - want / 24f64.sqrt()).norm() < 1e-12);
    }

    #[test]
    fn single_symbol_tx_matches_double_sum() {
        let p = small();
        let mut x = vec![C64::new(0.0, 0.0); p.mn()];
        x[3 * p.n + 1] = C64::new(1.0, 0.0);
        let w = TfWindow::rect(&p);
        let s = mc_tx_two_step(&x, &p, &w, 8).unwrap();
        let xt = isfft(&x, &p);
        for (j, v) in s.samples.iter().enumerate() {
            let t = s.t0 + j as f64 / s.rate;
            let mut want = C64::new(0.0, 0.0);
            for ni in 0..p.n {
                let np = centred(ni, p.n) as f64;
                if t < np * p.tau_p || t >= (np + 1.0) * p.tau_p {
                    continue;
                }
                for mi in 0..p.m {
                    let mp = centred(mi, p.m) as f64;
                    want += xt[ni * p.m + mi] * cis2pi(mp * p.nu_p * (t - np * p.tau_p)) / p.tau_p.sqrt();
                }
            }
            assert!((v - want).norm() < 1e-12);
        }
        // Duration T; unit energy (midpoint rule is exact for the block tones).
        assert!((s.samples.len() as f64 / s.rate - p.t).abs() < 1e-12);
        assert!((s.energy() - 1.0).abs() < 1e-12, "energy {}", s.energy());
    }

    #[test]
    fn identity_channel_is_identity() {
        let p = small();
        let w = TfWindow::rect(&p);
        let x = rand_vec(p.mn(), 2);
        let op = McOperator::new(&PathChannel::identity(), &p, &w, &w).unwrap();
        for (a, b) in op.apply(&x).iter().zip(&x) {
            assert!((a - b).norm() < 1e-12);
        }
        let xs = PeriodicDDSignal { params: p, samples: x.clone() };
        let z = mc_io_zak_form(&xs, &PathChannel::identity(), &w, &w, &McGenerator::rect(p), 4).unwrap();
        for (a, b) in z.iter().zip(&x) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn closed_form_matches_both_routes() {
        let p = small();
        let w = TfWindow::rect(&p);
        let ch = on_grid_channel(&p);
        let x = rand_vec(p.mn(), 3);
        let xs = PeriodicDDSignal { params: p, samples: x.clone() };
        let y_ts = mc_two_step_route(&x, &ch, &p, &w, &w, 16).unwrap();
        let y_zak = mc_io_zak_form(&xs, &ch, &w, &w, &McGenerator::rect(p), 16).unwrap();
        let max_diff = |a: &[C64], b: &[C64]| a.iter().zip(b).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max);
        // The two discretised routes share one quadrature and agree exactly.
        assert!(max_diff(&y_ts, &y_zak) < 1e-10);
        // Both converge quadratically to the closed form.
        let y_cf = McOperator::new(&ch, &p, &w, &w).unwrap().apply(&x);
        let e16 = max_diff(&y_cf, &y_ts);
        let e32 = max_diff(&y_cf, &mc_two_step_route(&x, &ch, &p, &w, &w, 32).unwrap());
        assert!(e16 < 2e-3 && e32 < 5e-4, "closed form mismatch {e16} {e32}");
        assert!(e32 < e16 / 3.0);
    }

    #[test]
    fn operator_adjoint_and_dense_agree() {
        let p = small();
        let w = TfWindow::rect(&p);
        let op = McOperator::new(&on_grid_channel(&p), &p, &w, &w).unwrap();
        let d = to_dense(&op);
        let y = rand_vec(p.mn(), 4);
        let a = op.apply_adjoint(&y);
        let b = d.adjoint() * nalgebra::DVector::from_column_slice(&y);
        for (u, v) in a.iter().zip(b.iter()) {
            assert!((u - v).norm() < 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn zak_form_is_linear(seed in 0u64..1000, ar in -2.0f64..2.0, ai in -2.0f64..2.0) {
            let p = small();
            let w = TfWindow::rect(&p);
            let g = McGenerator::rect(p);
            let ch = on_grid_channel(&p);
            let x1 = rand_vec(p.mn(), seed);
            let x2 = rand_vec(p.mn(), seed + 7);
            let a = C64::new(ar, ai);
            let comb: Vec<C64> = x1.iter().zip(&x2).map(|(u, v)| u * a + v).collect();
            let f = |x: &Vec<C64>| mc_io_zak_form(&PeriodicDDSignal { params: p, samples: x.clone() }, &ch, &w, &w, &g, 4).unwrap();
            let (y1, y2, y) = (f(&x1), f(&x2), f(&comb));
            for i in 0..p.mn() {
                prop_assert!((y[i] - y1[i] * a - y2[i]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn periodic_convolution_operator() {
        let p = FrameParams::new(6, 4, 1e3).unwrap();
        let k = PeriodicDDSignal { params: p, samples: rand_vec(24, 5) };
        let op = PeriodicConvOperator::new(&k);
        let x = rand_vec(24, 6);
        let y = op.apply(&x);
        let xs = PeriodicDDSignal { params: p, samples: x };
        for kk in 0..6i64 {
            for ll in 0..4i64 {
                let mut want = C64::new(0.0, 0.0);
                for a in 0..6i64 {
                    for b in 0..4i64 {
                        want += k.get(a, b) * xs.get(kk - a, ll - b);
                    }
                }
                assert!((y[(kk * 4 + ll) as usize] - want).norm() < 1e-12);
            }
        }
        let d = to_dense(&op);
        let z = op.apply_adjoint(&y);
        let zz = d.adjoint() * nalgebra::DVector::from_column_slice(&y);
        for (u, v) in z.iter().zip(zz.iter()) {
            assert!((u - v).norm() < 1e-10);
        }
    }

    #[test]
    fn identity_channel_prediction_is_exact() {
        let p = FrameParams::new(8, 6, 15e3).unwrap();
        let w = TfWindow::rect(&p);
        let pred = mc_pilot_estimate_and_predict(&PathChannel::identity(), &w, &w, &p).unwrap();
        assert!(pred.heatmap.rpe_db.iter().all(|&v| v == RPE_FLOOR_DB));
    }

    #[test]
    fn noiseless_mc_frame_is_error_free() {
        let p = FrameParams::new(16, 8, 15e3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ch = veh_a(815.0, &mut rng).unwrap();
        let out = mc_run_frame(&ch, &p, 300.0, &McCsi::Perfect, None, &mut rng).unwrap();
        assert_eq!(out.errors, 0);
        let out = mc_run_frame(&two_path(), &p, 300.0, &McCsi::Perfect, None, &mut rng).unwrap();
        assert_eq!(out.errors, 0);
    }
}
