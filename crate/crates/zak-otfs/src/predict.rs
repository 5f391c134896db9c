//! Pilots, model-free estimation of the effective channel filter, response
//! prediction, the relative prediction error (RPE), the crystalline
//! decomposition and the model-dependent (least-squares path) estimator.

use crate::channel::{
    effective_dd_filter, effective_dd_filter_on, BandedMatrix, EffectiveDDFilter, IoKind, PathChannel, Provenance, TapWindow,
};
use crate::dd_core::{DDTapSet, FrameParams, QuasiPeriodicSignal};
use crate::error::{Error, Result};
use crate::filters::SeparableFilter;
use crate::numeric::{cis2pi, floordiv, modi, C64};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Floor reported for a vanishing prediction error.
pub const RPE_FLOOR_DB: f64 = -120.0;

/// Default support threshold (relative to the peak magnitude).
pub const DEFAULT_SUPPORT_EPS: f64 = 1e-3;

/// Fraction of the peak power above which a grid point is a path candidate.
pub const PATH_DETECTION_FRACTION: f64 = 0.01;

/// Location of a discrete DD pilot in the fundamental domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PilotSpec {
    /// Delay index in `[0, M)`.
    pub k0: usize,
    /// Doppler index in `[0, N)`.
    pub l0: usize,
}

impl PilotSpec {
    /// A pilot at `(k0, l0)`, validated against the grid.
    pub fn new(k0: usize, l0: usize, params: &FrameParams) -> Result<Self> {
        if k0 >= params.m || l0 >= params.n {
            return Err(Error::InvalidParameter(format!("pilot ({k0}, {l0}) outside the {}×{} fundamental domain", params.m, params.n)));
        }
        Ok(Self { k0, l0 })
    }

    /// The centre pilot `(M/2, N/2)`; requires even `M` and `N`.
    pub fn center(params: &FrameParams) -> Result<Self> {
        if !params.m.is_multiple_of(2) || !params.n.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!("the centre pilot needs even M and N, got {}×{}", params.m, params.n)));
        }
        Ok(Self { k0: params.m / 2, l0: params.n / 2 })
    }

    fn check(&self, params: &FrameParams) -> Result<()> {
        Self::new(self.k0, self.l0, params).map(|_| ())
    }
}

/// Discrete DD impulse at the pilot location (unit energy in the fundamental domain).
pub fn make_pilot(spec: PilotSpec, params: &FrameParams) -> Result<QuasiPeriodicSignal> {
    spec.check(params)?;
    let mut x = QuasiPeriodicSignal::zeros(*params);
    *x.get_mut(spec.k0, spec.l0) = C64::new(1.0, 0.0);
    Ok(x)
}

/// Response `h *σ pilot` on the fundamental domain.
///
/// Evaluated tap by tap: tap `(k', l')` lands on the single fundamental-domain
/// point `(k0 + k' − nM, l0 + l' − mN)` with weight
/// `h[k', l'] e^{j2πn l0/N} e^{j2π(k0 + nM) l'/(MN)}`, which is exactly the
/// twisted convolution with the quasi-periodic pilot.
pub fn pilot_response(h: &EffectiveDDFilter, spec: PilotSpec) -> Result<QuasiPeriodicSignal> {
    taps_pilot_response(&h.taps, &h.params, spec)
}

fn taps_pilot_response(taps: &DDTapSet, p: &FrameParams, spec: PilotSpec) -> Result<QuasiPeriodicSignal> {
    spec.check(p)?;
    let (m, n) = (p.m as i64, p.n as i64);
    let mn = m * n;
    let (k0, l0) = (spec.k0 as i64, spec.l0 as i64);
    let mut y = QuasiPeriodicSignal::zeros(*p);
    for (&(kp, lp), &hv) in &taps.taps {
        let n_rep = -floordiv(k0 + kp, m);
        let k = modi(k0 + kp, m);
        let l = modi(l0 + lp, n);
        let phase = modi(n_rep * l0, n) as f64 / n as f64 + modi((k0 + n_rep * m) * lp, mn) as f64 / mn as f64;
        *y.get_mut(k as usize, l as usize) += hv * cis2pi(phase);
    }
    Ok(y)
}

/// Model-free estimate of the effective filter from the response `y` to the
/// pilot `spec`: `ĥ[k, l] = y[k + k0, l + l0] e^{−j2π k0 l/(MN)}` on the window
/// `−M/2 ≤ k < M/2`, `−N/2 ≤ l < N/2`, zero elsewhere.  For the centre pilot
/// the phase is `e^{−jπl/N}`.
pub fn estimate_hdd_from_pilot(y: &QuasiPeriodicSignal, spec: PilotSpec) -> Result<EffectiveDDFilter> {
    let p = y.params;
    spec.check(&p)?;
    let (m, n) = (p.m as i64, p.n as i64);
    let mn = (m * n) as f64;
    let (k0, l0) = (spec.k0 as i64, spec.l0 as i64);
    let mut taps = DDTapSet::new();
    for k in -(m / 2)..(m - m / 2) {
        for l in -(n / 2)..(n - n / 2) {
            let v = crate::dd_core::qp_extend(y, k + k0, l + l0);
            let ph = -((k0 * l).rem_euclid(m * n) as f64) / mn;
            taps.insert(k, l, v * cis2pi(ph));
        }
    }
    Ok(EffectiveDDFilter { taps, params: p, provenance: Provenance::PilotEstimate })
}

/// Predicted response to a pilot at `target`: `ĥ *σ pilot`.
pub fn predict_response(h_est: &EffectiveDDFilter, target: PilotSpec) -> Result<QuasiPeriodicSignal> {
    pilot_response(h_est, target)
}

fn to_db(e: f64) -> f64 {
    if e <= 0.0 {
        RPE_FLOOR_DB
    } else {
        (10.0 * e.log10()).max(RPE_FLOOR_DB)
    }
}

/// Relative prediction error (dB) at a target pilot:
/// `10 log10(Σ|ŷ − y|² / Σ|y|²)` over the fundamental domain, floored at −120 dB.
pub fn rpe(h_true: &EffectiveDDFilter, h_est: &EffectiveDDFilter, target: PilotSpec) -> Result<f64> {
    if !h_true.params.same_grid(&h_est.params) {
        return Err(Error::ParameterMismatch);
    }
    let y = pilot_response(h_true, target)?;
    let yh = pilot_response(h_est, target)?;
    rpe_of(&y, &yh)
}

fn rpe_of(y: &QuasiPeriodicSignal, yh: &QuasiPeriodicSignal) -> Result<f64> {
    let den = y.energy();
    if den == 0.0 {
        return Err(Error::UndefinedRpe);
    }
    let num: f64 = y.samples.iter().zip(&yh.samples).map(|(a, b)| (a - b).norm_sqr()).sum();
    Ok(to_db(num / den))
}

/// RPE for every target location on the `M × N` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RpeHeatmap {
    /// Grid.
    pub params: FrameParams,
    /// Pilot used for estimation.
    pub pilot: PilotSpec,
    /// `rpe_db[k_g · N + l_g]`.
    pub rpe_db: Vec<f64>,
}

impl RpeHeatmap {
    /// RPE at target `(k_g, l_g)`.
    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.rpe_db[k * self.params.n + l]
    }

    /// Percentile (0–100, nearest rank) of the RPE values.
    pub fn percentile(&self, pct: f64) -> f64 {
        percentile(&self.rpe_db, pct)
    }

    /// Median RPE.
    pub fn median(&self) -> f64 {
        self.percentile(50.0)
    }

    /// Fraction of targets with RPE at or above `level` dB.
    pub fn fraction_at_least(&self, level: f64) -> f64 {
        self.rpe_db.iter().filter(|&&v| v >= level).count() as f64 / self.rpe_db.len() as f64
    }
}

/// Nearest-rank percentile of a non-empty sample (`pct` in `[0, 100]`).
pub fn percentile(values: &[f64], pct: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    if v.is_empty() {
        return f64::NAN;
    }
    let rank = ((pct / 100.0) * v.len() as f64).ceil().max(1.0) as usize;
    v[rank.min(v.len()) - 1]
}

/// RPE heatmap against an explicit true filter, predicting from `h_est`.
pub fn rpe_heatmap_from(h_true: &EffectiveDDFilter, h_est: &EffectiveDDFilter, pilot: PilotSpec) -> Result<RpeHeatmap> {
    let p = h_true.params;
    if !p.same_grid(&h_est.params) {
        return Err(Error::ParameterMismatch);
    }
    let rpe_db =
        (0..p.mn()).into_par_iter().map(|i| rpe(h_true, h_est, PilotSpec { k0: i / p.n, l0: i % p.n })).collect::<Result<Vec<f64>>>()?;
    Ok(RpeHeatmap { params: p, pilot, rpe_db })
}

/// Tap window used for the reference ("true") filter of prediction
/// experiments: the family's default guard widened to at least one full period
/// in each direction, so that filter tails leaking past the estimator window
/// are represented in the reference responses.
pub fn reference_window(ch: &PathChannel, params: &FrameParams, w_tx: &SeparableFilter, w_rx: &SeparableFilter) -> TapWindow {
    let g = w_tx.kind.default_guard().max(w_rx.kind.default_guard());
    TapWindow::for_channel(ch, params, g.max(params.m as i64), g.max(params.n as i64))
}

/// Full prediction experiment: the true effective filter of `ch` (on
/// [`reference_window`]), a noise-free pilot at `pilot`, the model-free
/// estimate and the RPE at every target.
pub fn rpe_heatmap(
    ch: &PathChannel,
    w_tx: &SeparableFilter,
    w_rx: &SeparableFilter,
    params: &FrameParams,
    pilot: PilotSpec,
) -> Result<RpeHeatmap> {
    let h = effective_dd_filter_on(ch, w_tx, w_rx, params, &reference_window(ch, params, w_tx, w_rx))?;
    let y = pilot_response(&h, pilot)?;
    let est = estimate_hdd_from_pilot(&y, pilot)?;
    rpe_heatmap_from(&h, &est, pilot)
}

/// Predictable (`P`) and non-predictable (`Pᶜ`) tap offsets of a filter.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportSets {
    /// Support taps with no aliased partner.
    pub p: BTreeSet<(i64, i64)>,
    /// Support taps that alias onto another support tap.
    pub pc: BTreeSet<(i64, i64)>,
    /// Relative magnitude threshold.
    pub eps: f64,
}

impl SupportSets {
    /// `true` when no support tap aliases (crystallization).
    pub fn is_crystalline(&self) -> bool {
        self.pc.is_empty()
    }

    /// Splits `h` into `(χ_P h, χ_Pᶜ h)`; taps outside the support are dropped.
    pub fn split(&self, h: &DDTapSet) -> (DDTapSet, DDTapSet) {
        let mut a = DDTapSet::new();
        let mut b = DDTapSet::new();
        for (&(k, l), &v) in &h.taps {
            if self.p.contains(&(k, l)) {
                a.insert(k, l, v);
            } else if self.pc.contains(&(k, l)) {
                b.insert(k, l, v);
            }
        }
        (a, b)
    }
}

/// Crystalline decomposition: the support `{|h| > ε max|h|}` split into taps
/// with an aliased partner `(k − nM, l − mN)`, `(n, m) ≠ (0, 0)`, also in the
/// support (`Pᶜ`) and the rest (`P`).
pub fn crystalline_decomposition(h: &EffectiveDDFilter, eps: f64) -> Result<SupportSets> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("threshold must lie in (0, 1), got {eps}")));
    }
    let max = h.taps.max_abs();
    let support: BTreeSet<(i64, i64)> = h.taps.taps.iter().filter(|(_, v)| v.norm() > eps * max).map(|(&kl, _)| kl).collect();
    let (m, n) = (h.params.m as i64, h.params.n as i64);
    let mut p = BTreeSet::new();
    let mut pc = BTreeSet::new();
    for &(k, l) in &support {
        let aliased = support.iter().any(|&(k2, l2)| (k2, l2) != (k, l) && (k - k2).rem_euclid(m) == 0 && (l - l2).rem_euclid(n) == 0);
        if aliased {
            pc.insert((k, l));
        } else {
            p.insert((k, l));
        }
    }
    Ok(SupportSets { p, pc, eps })
}

/// Model-dependent estimation: every grid point of the model-free estimate
/// whose power is at least 1% of the peak becomes a path candidate
/// `(k/B, l/T)`; complex gains follow by least squares against the
/// semi-analytic single-path responses seen through the same pilot/estimator
/// chain.  Candidates whose fitted power is below `10⁻⁶` of the strongest are
/// pruned and the fit repeated.
///
/// No local-maximum selection is applied: diagonally adjacent paths of
/// different strength (as in the resolvable five-path profile) would otherwise
/// be missed, and spurious candidates are removed by the pruning step.
pub fn model_dependent_estimate(
    y: &QuasiPeriodicSignal,
    spec: PilotSpec,
    w_tx: &SeparableFilter,
    w_rx: &SeparableFilter,
) -> Result<PathChannel> {
    let p = y.params;
    let est = estimate_hdd_from_pilot(y, spec)?;
    let peak = est.taps.taps.values().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(Error::Detection("pilot response has no energy".into()));
    }
    let mut cands = Vec::new();
    for (&(k, l), v) in &est.taps.taps {
        let pw = v.norm_sqr();
        if pw < PATH_DETECTION_FRACTION * peak {
            continue;
        }
        cands.push((k, l));
    }
    if cands.is_empty() {
        return Err(Error::Detection("no path candidate above the detection threshold".into()));
    }
    let target: Vec<C64> = est.taps.taps.values().copied().collect();
    let keys: Vec<(i64, i64)> = est.taps.taps.keys().copied().collect();
    let column = |k: i64, l: i64| -> Result<Vec<C64>> {
        let single = PathChannel::single(C64::new(1.0, 0.0), k as f64 / p.b, l as f64 / p.t);
        let h = effective_dd_filter(&single, w_tx, w_rx, &p)?;
        let r = pilot_response(&h, spec)?;
        let e = estimate_hdd_from_pilot(&r, spec)?;
        Ok(keys.iter().map(|kl| e.taps.taps[kl]).collect())
    };
    let cols: Vec<Vec<C64>> = cands.par_iter().map(|&(k, l)| column(k, l)).collect::<Result<_>>()?;
    let mut active: Vec<usize> = (0..cands.len()).collect();
    loop {
        let a = DMatrix::from_fn(target.len(), active.len(), |r, c| cols[active[c]][r]);
        let g = least_squares(&a, &target)?;
        let gmax = g.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
        let keep: Vec<usize> = (0..active.len()).filter(|&i| g[i].norm_sqr() >= 1e-6 * gmax).collect();
        if keep.len() == active.len() {
            let paths = active
                .iter()
                .zip(&g)
                .map(|(&i, &gain)| crate::channel::Path { gain, delay: cands[i].0 as f64 / p.b, doppler: cands[i].1 as f64 / p.t })
                .collect();
            return Ok(PathChannel { paths });
        }
        active = keep.into_iter().map(|i| active[i]).collect();
    }
}

fn least_squares(a: &DMatrix<C64>, b: &[C64]) -> Result<Vec<C64>> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let x = svd.solve(&DVector::from_column_slice(b), 1e-12 * smax).map_err(|e| Error::Numerical(format!("least squares failed: {e}")))?;
    Ok(x.as_slice().to_vec())
}

/// Stationarity-based TDM/FDM estimate: the column measured for the symbol
/// at `c0 = BT/2` is translated to every symbol index.  `band` is the
/// `(offset, d_lo, d_hi)` layout of the measured column (see
/// [`BandedMatrix::band`]) and `h_col` the full measured column.
pub fn reuse_stationary_estimate(h_col: &[C64], kind: IoKind, b: f64, t: f64, band: (i64, i64, i64)) -> Result<BandedMatrix> {
    if kind == IoKind::ZakOtfs {
        return Err(Error::InvalidParameter("stationary reuse applies to TDM and FDM only".into()));
    }
    let n = (b * t).round() as usize;
    let (offset, d_lo, d_hi) = band;
    let rows = h_col.len();
    let c0 = (n / 2) as i64;
    for d in d_lo..=d_hi {
        let r = c0 + offset + d;
        if r < 0 || r as usize >= rows {
            return Err(Error::Dimension { expected: (c0 + offset + d_hi + 1).max(0) as usize, got: rows });
        }
    }
    Ok(BandedMatrix::from_fn(rows, n, offset, d_lo, d_hi, |_, d| h_col[(c0 + offset + d) as usize]))
}
