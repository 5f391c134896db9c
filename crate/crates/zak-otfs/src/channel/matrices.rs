//! Matrix forms of the input-output relations of Zak-OTFS, TDM and FDM, and
//! the structured operators used to apply them cheaply.

use super::effective::EffectiveDDFilter;
use super::paths::PathChannel;
use crate::dd_core::{dzt, idzt, FrameParams, QuasiPeriodicSignal};
use crate::error::{Error, Result};
use crate::linalg::LinearOperator;
use crate::numeric::{cis2pi, fft_inverse, floordiv, modi, sinc, C64};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Which modulation an I/O matrix describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IoKind {
    /// Square `MN × MN` Zak-OTFS relation on vectorised DD signals.
    ZakOtfs,
    /// `(BT + K1 + K2) × BT` time-division relation.
    Tdm,
    /// `(BT + L1 + L2) × BT` frequency-division relation.
    Fdm,
}

/// A dense input-output matrix with its guard sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct IOMatrix {
    /// Modulation the matrix belongs to.
    pub kind: IoKind,
    /// Matrix entries.
    pub entries: DMatrix<C64>,
    /// Guard rows before the first symbol (`K1` or `L1`; zero for Zak-OTFS).
    pub guard_before: usize,
    /// Guard rows after the last symbol (`K2` or `L2`; zero for Zak-OTFS).
    pub guard_after: usize,
}

/// Dense `H_dd` from the double-sum entry formula:
///
/// `H[(k'N + l'), (kN + l)] = Σ_{n,m} h[k' − k − nM, l' − l − mN] · e^{j2πnl/N} · e^{j2π(l' − l − mN)(k + nM)/(MN)}`.
pub fn build_hdd(h: &EffectiveDDFilter) -> IOMatrix {
    let p = h.params;
    let (m, n) = (p.m as i64, p.n as i64);
    let mn = m * n;
    let mut a = DMatrix::zeros(p.mn(), p.mn());
    for k in 0..m {
        for l in 0..n {
            let col = (k * n + l) as usize;
            for (&(dk, dl), &v) in &h.taps.taps {
                // Output (k', l') = (k + dk + nM, l + dl + mN) folded into the fundamental domain.
                let nn = -floordiv(k + dk, m);
                let mm = -floordiv(l + dl, n);
                let kp = k + dk + nn * m;
                let lp = l + dl + mm * n;
                let phase = cis2pi(modi(nn * l, n) as f64 / n as f64) * cis2pi(modi(dl * (k + nn * m), mn) as f64 / mn as f64);
                a[((kp * n + lp) as usize, col)] += v * phase;
            }
        }
    }
    IOMatrix { kind: IoKind::ZakOtfs, entries: a, guard_before: 0, guard_after: 0 }
}

/// The Zak-OTFS relation applied through its exact banded time-domain form.
///
/// With `x_td = idzt(x)`, the twisted convolution becomes
/// `y_td[q] = Σ_{k'} g_{k'}[q − k'] x_td[q − k']` (indices mod `MN`) where
/// `g_{k'}[p] = Σ_{l'} h[k', l'] e^{j2π l' p/(MN)}`, and `y = dzt(y_td)`.
pub struct ZakOperator {
    params: FrameParams,
    /// `(k', g_{k'})` for every delay index carrying taps.
    rows: Vec<(i64, Vec<C64>)>,
}

impl ZakOperator {
    /// Precomputes the delay-indexed modulation sequences of `h`.
    pub fn new(h: &EffectiveDDFilter) -> Self {
        let p = h.params;
        let mn = p.mn();
        let mut by_k: std::collections::BTreeMap<i64, Vec<C64>> = Default::default();
        for (&(k, l), &v) in &h.taps.taps {
            if v == C64::new(0.0, 0.0) {
                continue;
            }
            let e = by_k.entry(k).or_insert_with(|| vec![C64::new(0.0, 0.0); mn]);
            e[modi(l, mn as i64) as usize] += v;
        }
        let rows = by_k
            .into_iter()
            .map(|(k, mut g)| {
                fft_inverse(&mut g);
                (k, g)
            })
            .collect();
        Self { params: p, rows }
    }

    /// Grid of the operator.
    pub fn params(&self) -> FrameParams {
        self.params
    }

    fn td_apply(&self, x: &[C64]) -> Vec<C64> {
        let mn = x.len() as i64;
        let mut y = vec![C64::new(0.0, 0.0); x.len()];
        for (k, g) in &self.rows {
            let shift = modi(*k, mn) as usize;
            let len = x.len();
            for q in 0..len {
                let src = if q >= shift { q - shift } else { q + len - shift };
                y[q] += g[src] * x[src];
            }
        }
        y
    }

    fn td_adjoint(&self, y: &[C64]) -> Vec<C64> {
        let mn = y.len() as i64;
        let mut x = vec![C64::new(0.0, 0.0); y.len()];
        for (k, g) in &self.rows {
            let shift = modi(*k, mn) as usize;
            let len = y.len();
            for p in 0..len {
                let dst = if p + shift < len { p + shift } else { p + shift - len };
                x[p] += g[p].conj() * y[dst];
            }
        }
        x
    }
}

impl LinearOperator for ZakOperator {
    fn nrows(&self) -> usize {
        self.params.mn()
    }
    fn ncols(&self) -> usize {
        self.params.mn()
    }
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        let sig = QuasiPeriodicSignal { params: self.params, samples: x.to_vec() };
        let y = self.td_apply(&idzt(&sig));
        dzt(&y, self.params).expect("length preserved").samples
    }
    fn apply_adjoint(&self, y: &[C64]) -> Vec<C64> {
        let sig = QuasiPeriodicSignal { params: self.params, samples: y.to_vec() };
        let x = self.td_adjoint(&idzt(&sig));
        dzt(&x, self.params).expect("length preserved").samples
    }
}

/// Column-banded rectangular matrix: column `c` is non-zero only on rows
/// `c + offset + d`, `d ∈ [d_lo, d_hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    rows: usize,
    cols: usize,
    offset: i64,
    d_lo: i64,
    d_hi: i64,
    data: Vec<C64>,
}

impl BandedMatrix {
    /// Builds the matrix from an entry function `f(c, d)` giving the value at
    /// row `c + offset + d` of column `c`.
    pub fn from_fn(rows: usize, cols: usize, offset: i64, d_lo: i64, d_hi: i64, f: impl Fn(usize, i64) -> C64) -> Self {
        let w = (d_hi - d_lo + 1) as usize;
        let mut data = vec![C64::new(0.0, 0.0); cols * w];
        for c in 0..cols {
            for d in d_lo..=d_hi {
                let r = c as i64 + offset + d;
                if r >= 0 && (r as usize) < rows {
                    data[c * w + (d - d_lo) as usize] = f(c, d);
                }
            }
        }
        Self { rows, cols, offset, d_lo, d_hi, data }
    }

    /// Dense copy.
    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut a = DMatrix::zeros(self.rows, self.cols);
        let w = (self.d_hi - self.d_lo + 1) as usize;
        for c in 0..self.cols {
            for (i, d) in (self.d_lo..=self.d_hi).enumerate() {
                let r = c as i64 + self.offset + d;
                if r >= 0 && (r as usize) < self.rows {
                    a[(r as usize, c)] = self.data[c * w + i];
                }
            }
        }
        a
    }

    /// Column `c` of the matrix as a dense vector.
    pub fn column(&self, c: usize) -> Vec<C64> {
        let mut e = vec![C64::new(0.0, 0.0); self.cols];
        e[c] = C64::new(1.0, 0.0);
        self.apply(&e)
    }

    /// Band limits `(offset, d_lo, d_hi)`.
    pub fn band(&self) -> (i64, i64, i64) {
        (self.offset, self.d_lo, self.d_hi)
    }
}

impl LinearOperator for BandedMatrix {
    fn nrows(&self) -> usize {
        self.rows
    }
    fn ncols(&self) -> usize {
        self.cols
    }
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        let w = (self.d_hi - self.d_lo + 1) as usize;
        let mut y = vec![C64::new(0.0, 0.0); self.rows];
        for c in 0..self.cols {
            let xv = x[c];
            for (i, d) in (self.d_lo..=self.d_hi).enumerate() {
                let r = c as i64 + self.offset + d;
                if r >= 0 && (r as usize) < self.rows {
                    y[r as usize] += self.data[c * w + i] * xv;
                }
            }
        }
        y
    }
    fn apply_adjoint(&self, y: &[C64]) -> Vec<C64> {
        let w = (self.d_hi - self.d_lo + 1) as usize;
        (0..self.cols)
            .map(|c| {
                let mut acc = C64::new(0.0, 0.0);
                for (i, d) in (self.d_lo..=self.d_hi).enumerate() {
                    let r = c as i64 + self.offset + d;
                    if r >= 0 && (r as usize) < self.rows {
                        acc += self.data[c * w + i].conj() * y[r as usize];
                    }
                }
                acc
            })
            .collect()
    }
}

/// Default truncation of the TDM/FDM band beyond the channel spread (in samples).
pub const DEFAULT_TF_GUARD: i64 = 16;

fn symbol_count(b: f64, t: f64) -> Result<usize> {
    let bt = b * t;
    let n = bt.round();
    if n < 1.0 || (bt - n).abs() > 1e-9 * bt {
        return Err(Error::InvalidParameter(format!("B·T = {bt} must be a positive integer")));
    }
    Ok(n as usize)
}

/// TDM relation with sinc transmit pulse `√B sinc(Bt)` and matched receive
/// filter sampled at rate `B`.  Entry for output slot `k` and symbol `k'`:
///
/// `Σ_i h_i e^{j2πν_i k'/B} (1 − |ν_i|/B) e^{jπν_i d} sinc((B − |ν_i|) d)`,
/// `d = (k − k')/B − τ_i`.
///
/// Rows cover slots `[−K1, BT + K2)` where `K1, K2` extend the channel's
/// delay extent by `guard` samples.
pub fn build_htd_banded(ch: &PathChannel, b: f64, t: f64, guard: i64) -> Result<BandedMatrix> {
    let n = symbol_count(b, t)?;
    let (t0, t1, _, _) = ch.extent();
    let d_lo = (t0 * b - 1e-9).floor() as i64 - guard;
    let d_hi = (t1 * b + 1e-9).ceil() as i64 + guard;
    let k1 = (-d_lo).max(0);
    let k2 = d_hi.max(0);
    let rows = n + (k1 + k2) as usize;
    if ch.paths.iter().any(|p| p.doppler.abs() >= b) {
        return Err(Error::InvalidParameter("Doppler shift exceeds the bandwidth".into()));
    }
    Ok(BandedMatrix::from_fn(rows, n, k1, d_lo, d_hi, |c, d| {
        let mut v = C64::new(0.0, 0.0);
        for p in &ch.paths {
            let dd = d as f64 / b - p.delay;
            let bw = b - p.doppler.abs();
            v += p.gain
                * cis2pi(p.doppler * c as f64 / b)
                * C64::from_polar((bw / b) * sinc(bw * dd), std::f64::consts::PI * p.doppler * dd);
        }
        v
    }))
}

/// FDM relation with rectangular time pulse of duration `T` (sinc spectrum
/// `√T sinc(fT)`) and matched receiver sampled every `1/T` in frequency.
/// Entry for output subcarrier `k` and symbol `k'`:
///
/// `Σ_i h_i e^{−j2π(k'/T + ν_i)τ_i} e^{jπfτ_i} (1 − |τ_i|/T) sinc(f (T − |τ_i|))`,
/// `f = (k' − k)/T + ν_i`.
pub fn build_hfd_banded(ch: &PathChannel, b: f64, t: f64, guard: i64) -> Result<BandedMatrix> {
    let n = symbol_count(b, t)?;
    let (_, _, n0, n1) = ch.extent();
    let d_lo = (n0 * t - 1e-9).floor() as i64 - guard;
    let d_hi = (n1 * t + 1e-9).ceil() as i64 + guard;
    let l1 = (-d_lo).max(0);
    let l2 = d_hi.max(0);
    let rows = n + (l1 + l2) as usize;
    if ch.paths.iter().any(|p| p.delay.abs() >= t) {
        return Err(Error::InvalidParameter("delay exceeds the frame duration".into()));
    }
    Ok(BandedMatrix::from_fn(rows, n, l1, d_lo, d_hi, |c, d| {
        let mut v = C64::new(0.0, 0.0);
        for p in &ch.paths {
            let f = -(d as f64) / t + p.doppler;
            let dur = t - p.delay.abs();
            v += p.gain
                * cis2pi(-(c as f64 / t + p.doppler) * p.delay)
                * C64::from_polar((dur / t) * sinc(f * dur), std::f64::consts::PI * f * p.delay);
        }
        v
    }))
}

/// Dense `H_td` (see [`build_htd_banded`]).
pub fn build_htd(ch: &PathChannel, b: f64, t: f64, guard: i64) -> Result<IOMatrix> {
    let m = build_htd_banded(ch, b, t, guard)?;
    let (k1, _, d_hi) = m.band();
    Ok(IOMatrix { kind: IoKind::Tdm, entries: m.to_dense(), guard_before: k1 as usize, guard_after: d_hi.max(0) as usize })
}

/// Dense `H_fd` (see [`build_hfd_banded`]).
pub fn build_hfd(ch: &PathChannel, b: f64, t: f64, guard: i64) -> Result<IOMatrix> {
    let m = build_hfd_banded(ch, b, t, guard)?;
    let (l1, _, d_hi) = m.band();
    Ok(IOMatrix { kind: IoKind::Fdm, entries: m.to_dense(), guard_before: l1 as usize, guard_after: d_hi.max(0) as usize })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::effective::Provenance;
    use crate::dd_core::{twisted_conv, vectorize, DDTapSet};
    use crate::linalg::to_dense;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_filter(p: FrameParams, seed: u64) -> EffectiveDDFilter {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut taps = DDTapSet::new();
        for _ in 0..6 {
            taps.insert(
                rng.random_range(-10..10),
                rng.random_range(-6..6),
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            );
        }
        EffectiveDDFilter { taps, params: p, provenance: Provenance::SemiAnalytic }
    }

    #[test]
    fn hdd_delta_is_identity_and_shift_is_permutation() {
        let p = FrameParams::new(6, 4, 1.0).unwrap();
        let h = build_hdd(&EffectiveDDFilter::delta(p));
        assert!((h.entries.clone() - DMatrix::<C64>::identity(24, 24)).norm() < 1e-15);
        let mut taps = DDTapSet::new();
        taps.insert(1, 0, C64::new(1.0, 0.0));
        let h = build_hdd(&EffectiveDDFilter { taps, params: p, provenance: Provenance::SemiAnalytic });
        for c in 0..24 {
            let nz: Vec<_> = (0..24).filter(|&r| h.entries[(r, c)].norm() > 1e-14).collect();
            assert_eq!(nz.len(), 1);
            assert!((h.entries[(nz[0], c)].norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn hdd_matches_twisted_convolution() {
        let p = FrameParams::new(8, 4, 1.0).unwrap();
        for seed in 0..5 {
            let h = rand_filter(p, seed);
            let x = QuasiPeriodicSignal::from_fn(p, |k, l| C64::new(k as f64 - 0.3 * l as f64, 0.1 * (k * l) as f64));
            let y = twisted_conv(&h.taps, &x);
            let hx = &build_hdd(&h).entries * nalgebra::DVector::from_column_slice(&vectorize(&x));
            for (a, b) in hx.iter().zip(vectorize(&y).iter()) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn zak_operator_matches_dense_matrix() {
        let p = FrameParams::new(8, 6, 1.0).unwrap();
        let h = rand_filter(p, 9);
        let op = ZakOperator::new(&h);
        let dense = to_dense(&op);
        assert!((dense.clone() - build_hdd(&h).entries).norm() < 1e-11);
        let adj = to_dense_adjoint(&op);
        assert!((adj - dense.adjoint()).norm() < 1e-11);
    }

    fn to_dense_adjoint(op: &dyn LinearOperator) -> DMatrix<C64> {
        let n = op.nrows();
        let mut out = DMatrix::zeros(op.ncols(), n);
        for r in 0..n {
            let mut e = vec![C64::new(0.0, 0.0); n];
            e[r] = C64::new(1.0, 0.0);
            let col = op.apply_adjoint(&e);
            for (c, v) in col.into_iter().enumerate() {
                out[(c, r)] = v;
            }
        }
        out
    }

    #[test]
    fn htd_identity_and_delay_shift() {
        let (b, t) = (64e3, 1e-3);
        let h = build_htd(&PathChannel::identity(), b, t, 8).unwrap();
        let k1 = h.guard_before;
        for c in 0..64 {
            for r in 0..h.entries.nrows() {
                let want = if r == c + k1 { 1.0 } else { 0.0 };
                assert!((h.entries[(r, c)] - C64::new(want, 0.0)).norm() < 1e-3);
            }
        }
        let k0 = 3;
        let h = build_htd(&PathChannel::single(C64::new(1.0, 0.0), k0 as f64 / b, 0.0), b, t, 8).unwrap();
        for c in 0..64 {
            assert!((h.entries[(c + h.guard_before + k0, c)] - C64::new(1.0, 0.0)).norm() < 1e-12);
        }
        let nu = 150.0;
        let h = build_htd(&PathChannel::single(C64::new(1.0, 0.0), 0.0, nu), b, t, 8).unwrap();
        let k1 = h.guard_before;
        for c in 0..64 {
            let want = cis2pi(nu * c as f64 / b) * (1.0 - nu / b);
            assert!((h.entries[(c + k1, c)] - want).norm() < 1e-9);
        }
    }

    #[test]
    fn hfd_identity_doppler_shift_and_delay_ramp() {
        let (b, t) = (64e3, 1e-3);
        let h = build_hfd(&PathChannel::identity(), b, t, 8).unwrap();
        let l1 = h.guard_before;
        for c in 0..64 {
            assert!((h.entries[(c + l1, c)] - C64::new(1.0, 0.0)).norm() < 1e-12);
        }
        let h = build_hfd(&PathChannel::single(C64::new(1.0, 0.0), 0.0, 2.0 / t), b, t, 8).unwrap();
        for c in 0..64 {
            assert!((h.entries[(c + h.guard_before + 2, c)] - C64::new(1.0, 0.0)).norm() < 1e-12);
        }
        let tau = 2e-6;
        let h = build_hfd(&PathChannel::single(C64::new(1.0, 0.0), tau, 0.0), b, t, 8).unwrap();
        for c in 0..64 {
            let want = cis2pi(-tau * c as f64 / t) * (1.0 - tau / t);
            assert!((h.entries[(c + h.guard_before, c)] - want).norm() < 1e-9);
        }
    }

    #[test]
    fn matrices_are_linear_in_gains() {
        let ch = crate::channel::paths::two_path();
        let (b, t) = (480e3, 8.0 / 30e3);
        let a = build_htd(&ch, b, t, 4).unwrap();
        let a2 = build_htd(&ch.scaled(C64::new(0.0, 3.0)), b, t, 4).unwrap();
        assert!((a2.entries - a.entries * C64::new(0.0, 3.0)).norm() < 1e-10);
        let f = build_hfd(&ch, b, t, 4).unwrap();
        let f2 = build_hfd(&ch.scaled(C64::new(0.0, 3.0)), b, t, 4).unwrap();
        assert!((f2.entries - f.entries * C64::new(0.0, 3.0)).norm() < 1e-10);
    }
}
