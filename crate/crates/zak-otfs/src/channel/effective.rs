//! The effective delay-Doppler channel filter
//! `h_dd = w_rx *σ h *σ w_tx` sampled on the information grid.
//!
//! Two independent routes are provided.
//!
//! * **Semi-analytic.**  For separable filters the continuous effective filter
//!   of a path channel reduces to a single delay integral
//!
//!   ```text
//!   h_dd(τ, ν) = Σ_i h_i ∫ ds a_r(τ − s) a_t(s − τ_i) e^{j2πν_i (s − τ_i)} G(ν − ν_i, s)
//!   G(μ, s)    = ∫ du β_t(u) β_r(u + s) e^{−j2πμu}
//!   ```
//!
//!   where `a` are the delay pulses and `β` the time windows of the filters.
//!   `G` is evaluated exactly (the windows are piecewise sums of complex
//!   exponentials) and the `s` integral by a Riemann sum at step `1/(4B)`,
//!   which is exact for the band-limited delay-pulse product.
//!
//! * **Time-domain oracle.**  The cascade `W_rx H W_tx` is simulated on an
//!   oversampled time grid for a bank of probe impulses; the resulting kernel
//!   `K(t, t')` is converted to its spreading function
//!   `h(τ, ν) = ∫ K(t' + τ, t') e^{−j2πνt'} dt'`.

use super::paths::{apply_td_channel, PathChannel, TdSeries};
use crate::dd_core::{DDTapSet, FrameParams};
use crate::error::{Error, Result};
use crate::filters::SeparableFilter;
use crate::numeric::{cis2pi, sinc, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// How a filter estimate was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Semi-analytic quadrature of the continuous cascade.
    SemiAnalytic,
    /// Brute-force oversampled time-domain simulation.
    TdOracle,
    /// Read off a received pilot response (model-free).
    PilotEstimate,
    /// Rebuilt from a fitted path model (model-dependent).
    ModelFit,
}

/// Sampled effective channel filter `h_dd[k, l]` on a finite tap window.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveDDFilter {
    /// Tap values.
    pub taps: DDTapSet,
    /// Grid on which the taps are sampled.
    pub params: FrameParams,
    /// Route that produced the taps.
    pub provenance: Provenance,
}

impl EffectiveDDFilter {
    /// Ratio of the largest tap on the window border to the largest tap overall;
    /// a measure of the truncation committed by the finite window.
    pub fn edge_ratio(&self) -> f64 {
        let max = self.taps.max_abs();
        let Some((k0, k1, l0, l1)) = self.window_bounds() else { return 0.0 };
        let edge = self
            .taps
            .taps
            .iter()
            .filter(|(&(k, l), _)| k == k0 || k == k1 || l == l0 || l == l1)
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max);
        if max == 0.0 {
            0.0
        } else {
            edge / max
        }
    }

    fn window_bounds(&self) -> Option<(i64, i64, i64, i64)> {
        let mut it = self.taps.taps.keys();
        let &(k, l) = it.next()?;
        Some(it.fold((k, k, l, l), |(a, b, c, d), &(k, l)| (a.min(k), b.max(k), c.min(l), d.max(l))))
    }

    /// Identity filter (a single unit tap at the origin).
    pub fn delta(params: FrameParams) -> Self {
        Self { taps: DDTapSet::delta(), params, provenance: Provenance::SemiAnalytic }
    }
}

/// Rectangular tap window `[k_lo, k_hi] × [l_lo, l_hi]` (inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TapWindow {
    /// Smallest delay index.
    pub k_lo: i64,
    /// Largest delay index.
    pub k_hi: i64,
    /// Smallest Doppler index.
    pub l_lo: i64,
    /// Largest Doppler index.
    pub l_hi: i64,
}

impl TapWindow {
    /// The channel's delay-Doppler extent on the grid, widened by `guard_tau`
    /// delay bins and `guard_nu` Doppler bins on every side.
    pub fn for_channel(ch: &PathChannel, params: &FrameParams, guard_tau: i64, guard_nu: i64) -> Self {
        let (t0, t1, n0, n1) = ch.extent();
        Self {
            k_lo: (t0 * params.b - 1e-9).floor() as i64 - guard_tau,
            k_hi: (t1 * params.b + 1e-9).ceil() as i64 + guard_tau,
            l_lo: (n0 * params.t - 1e-9).floor() as i64 - guard_nu,
            l_hi: (n1 * params.t + 1e-9).ceil() as i64 + guard_nu,
        }
    }

    /// Default window: the larger of the two filters' default guards.
    pub fn default_for(ch: &PathChannel, params: &FrameParams, w_tx: &SeparableFilter, w_rx: &SeparableFilter) -> Self {
        let g = w_tx.kind.default_guard().max(w_rx.kind.default_guard());
        Self::for_channel(ch, params, g, g)
    }

    /// Number of delay indices.
    pub fn n_k(&self) -> usize {
        (self.k_hi - self.k_lo + 1) as usize
    }

    /// Number of Doppler indices.
    pub fn n_l(&self) -> usize {
        (self.l_hi - self.l_lo + 1) as usize
    }
}

/// Piece of a piecewise exponential function: on `[a, b]` the value is
/// `Σ c e^{jωu}` over `terms`.
#[derive(Debug, Clone)]
struct ExpPiece {
    a: f64,
    b: f64,
    terms: Vec<(C64, f64)>,
}

/// `β(u) = (1/√T) P_β(u/T)` as a piecewise exponential sum.
fn window_pieces(f: &SeparableFilter) -> Vec<ExpPiece> {
    let t = f.t;
    let beta = f.kind.betas().1;
    let amp = 1.0 / t.sqrt();
    if beta == 0.0 {
        return vec![ExpPiece { a: -0.5 * t, b: 0.5 * t, terms: vec![(C64::new(amp, 0.0), 0.0)] }];
    }
    let lo = 0.5 * (1.0 - beta) * t;
    let hi = 0.5 * (1.0 + beta) * t;
    let c = PI / (2.0 * beta * t);
    let e = C64::from_polar(0.5 * amp, c * lo);
    let mut out = vec![ExpPiece { a: -hi, b: -lo, terms: vec![(e, c), (e.conj(), -c)] }];
    if lo > 0.0 {
        out.push(ExpPiece { a: -lo, b: lo, terms: vec![(C64::new(amp, 0.0), 0.0)] });
    }
    out.push(ExpPiece { a: lo, b: hi, terms: vec![(e.conj(), c), (e, -c)] });
    out
}

/// `∫_a^b e^{jωu} du`.
#[inline]
fn int_exp(omega: f64, a: f64, b: f64) -> C64 {
    let len = b - a;
    C64::from_polar(len * sinc(omega * len / (2.0 * PI)), omega * 0.5 * (a + b))
}

/// Products `β_t(u) β_r(u + s)` as a list of intervals with exponential terms.
fn window_product(pt: &[ExpPiece], pr: &[ExpPiece], s: f64) -> Vec<ExpPiece> {
    let mut out = Vec::new();
    for x in pt {
        for y in pr {
            let a = x.a.max(y.a - s);
            let b = x.b.min(y.b - s);
            if b <= a {
                continue;
            }
            let mut terms = Vec::with_capacity(x.terms.len() * y.terms.len());
            for &(cx, wx) in &x.terms {
                for &(cy, wy) in &y.terms {
                    terms.push((cx * cy * C64::from_polar(1.0, wy * s), wx + wy));
                }
            }
            out.push(ExpPiece { a, b, terms });
        }
    }
    out
}

/// `G(μ, s) = ∫ β_t(u) β_r(u + s) e^{−j2πμu} du` evaluated exactly.
pub fn window_cross_correlation(w_tx: &SeparableFilter, w_rx: &SeparableFilter, mu: f64, s: f64) -> C64 {
    let prod = window_product(&window_pieces(w_tx), &window_pieces(w_rx), s);
    eval_product(&prod, mu)
}

fn eval_product(prod: &[ExpPiece], mu: f64) -> C64 {
    let w0 = -2.0 * PI * mu;
    let mut acc = C64::new(0.0, 0.0);
    for p in prod {
        for &(c, w) in &p.terms {
            acc += c * int_exp(w + w0, p.a, p.b);
        }
    }
    acc
}

/// Delay-domain truncation of the `s` integral, in units of `1/B`.
fn delay_span(w_tx: &SeparableFilter, w_rx: &SeparableFilter) -> f64 {
    if w_tx.kind.betas().0 == 0.0 || w_rx.kind.betas().0 == 0.0 {
        256.0
    } else {
        48.0
    }
}

fn check_filters(w_tx: &SeparableFilter, w_rx: &SeparableFilter, params: &FrameParams) -> Result<()> {
    for f in [w_tx, w_rx] {
        if ((f.b - params.b) / params.b).abs() > 1e-12 || ((f.t - params.t) / params.t).abs() > 1e-12 {
            return Err(Error::ParameterMismatch);
        }
    }
    Ok(())
}

/// Semi-analytic effective filter on the default tap window.
pub fn effective_dd_filter(
    ch: &PathChannel,
    w_tx: &SeparableFilter,
    w_rx: &SeparableFilter,
    params: &FrameParams,
) -> Result<EffectiveDDFilter> {
    let win = TapWindow::default_for(ch, params, w_tx, w_rx);
    effective_dd_filter_on(ch, w_tx, w_rx, params, &win)
}

/// Semi-analytic effective filter evaluated on an explicit tap window.
pub fn effective_dd_filter_on(
    ch: &PathChannel,
    w_tx: &SeparableFilter,
    w_rx: &SeparableFilter,
    params: &FrameParams,
    win: &TapWindow,
) -> Result<EffectiveDDFilter> {
    check_filters(w_tx, w_rx, params)?;
    let b = params.b;
    let t = params.t;
    let h = 1.0 / (4.0 * b);
    let span = delay_span(w_tx, w_rx) / b;
    let support = w_tx.time_window_half_span() + w_rx.time_window_half_span();
    let (nk, nl) = (win.n_k(), win.n_l());
    let mut acc = vec![C64::new(0.0, 0.0); nk * nl];
    let pt = window_pieces(w_tx);
    let pr = window_pieces(w_rx);

    for path in &ch.paths {
        let lo = (win.k_lo as f64 / b).min(path.delay) - span;
        let hi = (win.k_hi as f64 / b).max(path.delay) + span;
        let lo = lo.max(-support);
        let hi = hi.min(support);
        if hi <= lo {
            continue;
        }
        let j0 = (lo / h).ceil() as i64;
        let j1 = (hi / h).floor() as i64;
        for j in j0..=j1 {
            let s = j as f64 * h;
            let at = w_tx.delay_pulse(s - path.delay);
            if at == 0.0 {
                continue;
            }
            let prod = window_product(&pt, &pr, s);
            if prod.is_empty() {
                continue;
            }
            let common = path.gain * cis2pi(path.doppler * (s - path.delay)) * (h * at);
            let g: Vec<C64> = (win.l_lo..=win.l_hi).map(|l| eval_product(&prod, l as f64 / t - path.doppler)).collect();
            for (ki, k) in (win.k_lo..=win.k_hi).enumerate() {
                let ar = w_rx.delay_pulse(k as f64 / b - s);
                if ar == 0.0 {
                    continue;
                }
                let pk = common * ar;
                let row = &mut acc[ki * nl..(ki + 1) * nl];
                for (r, gv) in row.iter_mut().zip(&g) {
                    *r += pk * gv;
                }
            }
        }
    }
    Ok(EffectiveDDFilter { taps: window_to_taps(win, &acc), params: *params, provenance: Provenance::SemiAnalytic })
}

fn window_to_taps(win: &TapWindow, acc: &[C64]) -> DDTapSet {
    let nl = win.n_l();
    let mut taps = DDTapSet::new();
    for (ki, k) in (win.k_lo..=win.k_hi).enumerate() {
        for (li, l) in (win.l_lo..=win.l_hi).enumerate() {
            taps.insert(k, l, acc[ki * nl + li]);
        }
    }
    taps
}

/// Truncation half-span (in units of `1/B`) of the probe delay pulse used by
/// the oracle: sinc pulses decay as `1/x` and need the longer span.
fn oracle_pulse_span(w_tx: &SeparableFilter) -> i64 {
    if w_tx.kind.betas().0 == 0.0 {
        160
    } else {
        64
    }
}

/// Effective filter by brute-force time-domain simulation at oversampling `q`.
///
/// Each probe is the transmit filter's response to a time impulse at `t'`,
/// `β_t(t') a_t(t − t')`, sampled at rate `qB`.  It is passed through
/// [`apply_td_channel`], multiplied by the receive window and convolved with
/// the receive delay pulse (Riemann sum at rate `qB`), giving the cascade
/// kernel `K(t' + k/B, t')`.  The taps follow from
/// `h_dd[k, l] = Σ_{t'} Δt' K(t' + k/B, t') e^{−j2π l t'/T}` with probes every
/// `Δt' = 1/(2B)`.
pub fn effective_dd_filter_td_oracle(
    ch: &PathChannel,
    w_tx: &SeparableFilter,
    w_rx: &SeparableFilter,
    params: &FrameParams,
    q: usize,
    win: &TapWindow,
) -> Result<EffectiveDDFilter> {
    check_filters(w_tx, w_rx, params)?;
    if q < 8 || !q.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("oracle oversampling must be even and ≥ 8, got {q}")));
    }
    let b = params.b;
    let rate = q as f64 * b;
    let dt = 1.0 / rate;
    let step = (q / 2) as i64;
    let hp = step as f64 * dt;
    let qi = q as i64;
    let (t0, t1, _, _) = ch.extent();
    let pre = ((-t0).max(0.0) * rate).ceil() as i64;
    let post = (t1.max(0.0) * rate).ceil() as i64;
    let l_pulse = oracle_pulse_span(w_tx) * qi;
    let n_before = l_pulse + pre;
    let n_after = l_pulse + post + 1;
    let len = (n_before + n_after + 1) as usize;
    // Pulse tables indexed by offset in samples.
    let at_tab: Vec<f64> = (-l_pulse..=l_pulse).map(|m| w_tx.delay_pulse(m as f64 * dt)).collect();
    let kmax = win.k_lo.abs().max(win.k_hi.abs());
    let rspan = len as i64 + kmax * qi + 1;
    let ar_tab: Vec<f64> = (-rspan..=rspan).map(|m| w_rx.delay_pulse(m as f64 * dt)).collect();

    let half = w_tx.time_window_half_span();
    let jmax = (half / hp).floor() as i64;
    let (nk, nl) = (win.n_k(), win.n_l());
    let mut acc = vec![C64::new(0.0, 0.0); nk * nl];
    let mut buf = vec![C64::new(0.0, 0.0); len];
    let mut kvals = vec![C64::new(0.0, 0.0); nk];
    for j in -jmax..=jmax {
        let c = j * step;
        let tp = c as f64 * dt;
        let wt = w_tx.time_window(tp);
        if wt == 0.0 {
            continue;
        }
        let n_lo = c - n_before;
        for (i, v) in buf.iter_mut().enumerate() {
            let m = n_lo + i as i64 - c;
            *v = if m.abs() <= l_pulse { C64::new(at_tab[(m + l_pulse) as usize], 0.0) } else { C64::new(0.0, 0.0) };
        }
        let series = TdSeries { rate, t0: n_lo as f64 * dt, samples: std::mem::take(&mut buf) };
        let r = apply_td_channel(ch, &series, q)?;
        buf = series.samples;
        let weighted: Vec<C64> = r.samples.iter().enumerate().map(|(i, &v)| v * w_rx.time_window((n_lo + i as i64) as f64 * dt)).collect();
        for (ki, k) in (win.k_lo..=win.k_hi).enumerate() {
            let target = c + k * qi;
            let mut y = C64::new(0.0, 0.0);
            for (i, &v) in weighted.iter().enumerate() {
                if v == C64::new(0.0, 0.0) {
                    continue;
                }
                let m = target - (n_lo + i as i64);
                y += v * ar_tab[(m + rspan) as usize];
            }
            kvals[ki] = y * (wt * dt);
        }
        for (li, l) in (win.l_lo..=win.l_hi).enumerate() {
            let ph = cis2pi(-(l as f64) * tp / params.t) * hp;
            for ki in 0..nk {
                acc[ki * nl + li] += kvals[ki] * ph;
            }
        }
    }
    Ok(EffectiveDDFilter { taps: window_to_taps(win, &acc), params: *params, provenance: Provenance::TdOracle })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::paths::two_path;
    use crate::filters::{rrc_filter, sinc_filter};

    /// Direct quadrature of the window cross-correlation on a fine midpoint grid.
    fn gw_numeric(w_tx: &SeparableFilter, w_rx: &SeparableFilter, mu: f64, s: f64) -> C64 {
        let n = 400_000;
        let span = w_tx.time_window_half_span();
        let du = 2.0 * span / n as f64;
        (0..n)
            .map(|i| {
                let u = -span + (i as f64 + 0.5) * du;
                cis2pi(-mu * u) * (w_tx.time_window(u) * w_rx.time_window(u + s) * du)
            })
            .sum()
    }

    #[test]
    fn window_correlation_sinc_closed_form() {
        let f = sinc_filter(1.0e3, 2.0).unwrap();
        for (mu, s) in [(0.0, 0.0), (0.7, 0.3), (-2.3, -1.1), (5.0, 1.9), (1.0, 2.5)] {
            let got = window_cross_correlation(&f, &f, mu, s);
            let want = if s.abs() >= 2.0 {
                C64::new(0.0, 0.0)
            } else {
                C64::from_polar((2.0 - s.abs()) / 2.0 * sinc(mu * (2.0 - s.abs())), PI * mu * s)
            };
            assert!((got - want).norm() < 1e-12, "μ={mu} s={s}: {got} vs {want}");
        }
    }

    #[test]
    fn window_correlation_rrc_matches_quadrature() {
        let a = rrc_filter(1.0e3, 1.0, 0.1, 0.3).unwrap();
        let b = rrc_filter(1.0e3, 1.0, 0.1, 0.6).unwrap();
        for (mu, s) in [(0.0, 0.0), (1.5, 0.2), (-3.2, -0.45), (7.0, 0.05)] {
            let got = window_cross_correlation(&a, &b, mu, s);
            let want = gw_numeric(&a, &b, mu, s);
            assert!((got - want).norm() < 1e-7, "μ={mu} s={s}: {got} vs {want}");
        }
    }

    #[test]
    fn identity_channel_sinc_gives_unit_centre_tap() {
        let p = FrameParams::from_bandwidth(0.96e6, 1.6e-3, 15e3).unwrap();
        let f = sinc_filter(p.b, p.t).unwrap();
        let h = effective_dd_filter(&PathChannel::identity(), &f, &f, &p).unwrap();
        assert!((h.taps.get(0, 0) - C64::new(1.0, 0.0)).norm() < 1e-2);
        for (&(k, l), v) in &h.taps.taps {
            if (k, l) != (0, 0) {
                assert!(v.norm() < 1e-2, "tap ({k},{l}) = {v}");
            }
        }
    }

    #[test]
    fn integer_delay_path_moves_the_peak() {
        let p = FrameParams::from_bandwidth(0.96e6, 1.6e-3, 15e3).unwrap();
        let f = sinc_filter(p.b, p.t).unwrap();
        let ch = PathChannel::single(C64::new(1.0, 0.0), 3.0 / p.b, 0.0);
        let h = effective_dd_filter(&ch, &f, &f, &p).unwrap();
        let (&(k, l), v) = h.taps.taps.iter().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).unwrap();
        assert_eq!((k, l), (3, 0));
        assert!((v.norm() - 1.0).abs() < 1e-2);
    }

    #[test]
    fn semi_analytic_is_linear_in_gains() {
        let p = FrameParams::new(16, 8, 30e3).unwrap();
        let f = rrc_filter(p.b, p.t, 0.1, 0.2).unwrap();
        let ch = two_path();
        let win = TapWindow::for_channel(&ch, &p, 4, 4);
        let a = effective_dd_filter_on(&ch, &f, &f, &p, &win).unwrap();
        let b2 = effective_dd_filter_on(&ch.scaled(C64::new(2.0, 0.0)), &f, &f, &p, &win).unwrap();
        for (key, v) in &a.taps.taps {
            assert!((b2.taps.taps[key] - v * 2.0).norm() < 1e-13);
        }
    }

    #[test]
    fn oracle_agrees_on_small_grid() {
        let p = FrameParams::new(16, 8, 30e3).unwrap();
        let f = sinc_filter(p.b, p.t).unwrap();
        let ch = two_path();
        let win = TapWindow::for_channel(&ch, &p, 6, 3);
        let a = effective_dd_filter_on(&ch, &f, &f, &p, &win).unwrap();
        let o = effective_dd_filter_td_oracle(&ch, &f, &f, &p, 16, &win).unwrap();
        let e = a.taps.rel_diff(&o.taps);
        assert!(e < 1e-2, "relative error {e}");
        let o2 = effective_dd_filter_td_oracle(&ch.scaled(C64::new(2.0, 0.0)), &f, &f, &p, 16, &win).unwrap();
        for (key, v) in &o.taps.taps {
            assert!((o2.taps.taps[key] - v * 2.0).norm() < 1e-12);
        }
        assert!(effective_dd_filter_td_oracle(&ch, &f, &f, &p, 7, &win).is_err());
    }
}
