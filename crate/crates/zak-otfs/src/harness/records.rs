//! Result records, confidence intervals and summaries.

use super::config::ExperimentKind;
use crate::modem::FrameOutcome;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959963984540054;

/// Bit-error counts of one configuration point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BerCounts {
    /// Bit errors.
    pub errors: u64,
    /// Bits transmitted.
    pub bits: u64,
    /// Frames simulated.
    pub frames: u64,
    /// Sum over frames of the squared per-frame BER (for the frame-level variance).
    pub frame_ber_sq: f64,
}

impl BerCounts {
    /// Accumulates the outcomes of frames in order.
    pub fn from_frames(frames: &[FrameOutcome]) -> Self {
        let mut c = Self::default();
        for f in frames {
            c.errors += f.errors;
            c.bits += f.bits;
            c.frames += 1;
            let b = f.errors as f64 / f.bits as f64;
            c.frame_ber_sq += b * b;
        }
        c
    }

    /// Pools two independent sets of frames.
    pub fn pooled(&self, other: &Self) -> Self {
        Self {
            errors: self.errors + other.errors,
            bits: self.bits + other.bits,
            frames: self.frames + other.frames,
            frame_ber_sq: self.frame_ber_sq + other.frame_ber_sq,
        }
    }

    /// Point estimate `errors / bits`.
    pub fn ber(&self) -> f64 {
        if self.bits == 0 {
            0.0
        } else {
            self.errors as f64 / self.bits as f64
        }
    }

    /// Half-width of the 95% confidence interval.
    ///
    /// Normal approximation over the recorded frames (frames are the
    /// independent units: bits within a frame share one channel draw), never
    /// narrower than the bit-level binomial interval.  With zero errors the
    /// rule of three applies and the one-sided upper bound `3/bits` is
    /// returned.
    pub fn ci95(&self) -> f64 {
        if self.bits == 0 {
            return f64::INFINITY;
        }
        if self.errors == 0 {
            return 3.0 / self.bits as f64;
        }
        let p = self.ber();
        let binom = (p * (1.0 - p) / self.bits as f64).sqrt();
        let n = self.frames as f64;
        let frame = if self.frames > 1 {
            // Per-frame BERs share the bit count, so their mean equals `p`.
            let var = ((self.frame_ber_sq - n * p * p) / (n - 1.0)).max(0.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Z95 * binom.max(frame)
    }

    /// `[ber − ci, ber + ci]` clipped at zero.
    pub fn interval(&self) -> (f64, f64) {
        let (p, h) = (self.ber(), self.ci95());
        if self.errors == 0 {
            (0.0, h)
        } else {
            ((p - h).max(0.0), p + h)
        }
    }

    /// Whether the 95% intervals of `self` and `other` overlap.
    pub fn overlaps(&self, other: &Self) -> bool {
        let (a0, a1) = self.interval();
        let (b0, b1) = other.interval();
        a0 <= b1 && b0 <= a1
    }
}

/// Mean and 95% half-width of the per-frame BER difference `a − b` for two
/// links evaluated on the same frames (common random numbers).  Pairing
/// removes the channel-draw variance shared by both links.
pub fn paired_difference(a: &[FrameOutcome], b: &[FrameOutcome]) -> (f64, f64) {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x.errors as f64 / x.bits as f64 - y.errors as f64 / y.bits as f64).collect();
    let n = d.len() as f64;
    if d.is_empty() {
        return (0.0, f64::INFINITY);
    }
    let mean = d.iter().sum::<f64>() / n;
    if d.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Z95 * (var / n).sqrt())
}

/// One result of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    /// Experiment kind.
    pub kind: ExperimentKind,
    /// Name of the independent variable (`gamma_db`, `nu_max_hz`, `nu_p_hz`, `tau_s`).
    pub variable: String,
    /// Value of the independent variable.
    pub value: f64,
    /// SNR in dB of BER points (`NaN` otherwise).
    pub gamma_db: f64,
    /// Link or panel label.
    pub label: String,
    /// CSI mode (empty for non-BER records).
    pub csi_mode: String,
    /// BER counts (absent for RPE and radar records).
    pub ber: Option<BerCounts>,
    /// Median and 90th-percentile RPE in dB (RPE records).
    pub rpe_db: Option<(f64, f64)>,
    /// ML delay (s), Doppler (Hz), peak magnitude and Moyal volume (radar records).
    pub radar: Option<[f64; 4]>,
    /// Wall-clock time of the point in seconds (not part of any CSV).
    pub wall_time_s: f64,
    /// Configuration hash.
    pub config_hash: String,
    /// Master seed.
    pub seed: u64,
}

/// One line of a summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    /// Label, CSI mode and independent variable.
    pub key: String,
    /// Rendered statistic.
    pub value: String,
}

/// Summarises records: pooled BER with 95% CI per configuration (records of
/// several seeds with the same key are pooled), RPE median/p90 and the radar
/// peak table.
pub fn summarize(records: &[ResultRecord]) -> Vec<SummaryRow> {
    let mut pooled: BTreeMap<(String, String, String), BerCounts> = BTreeMap::new();
    let mut order: Vec<(String, String, String)> = Vec::new();
    let mut rows = Vec::new();
    for r in records {
        if let Some(c) = r.ber {
            let key = (format!("{}={}", r.variable, r.value), r.label.clone(), r.csi_mode.clone());
            let key = if r.variable == "gamma_db" { key } else { (format!("{} gamma_db={}", key.0, r.gamma_db), key.1, key.2) };
            if !pooled.contains_key(&key) {
                order.push(key.clone());
            }
            let e = pooled.entry(key).or_default();
            *e = e.pooled(&c);
        }
    }
    for k in order {
        let c = pooled[&k];
        let value = if c.errors == 0 {
            format!("BER 0 (< {:.2e}, rule of three) over {} bits", c.ci95(), c.bits)
        } else {
            format!("BER {:.3e} ± {:.2e} ({} / {} bits)", c.ber(), c.ci95(), c.errors, c.bits)
        };
        rows.push(SummaryRow { key: format!("{} {} {}", k.1, k.2, k.0), value });
    }
    for r in records {
        if let Some((med, p90)) = r.rpe_db {
            rows.push(SummaryRow {
                key: format!("{} {}={}", r.label, r.variable, r.value),
                value: format!("RPE median {med:.2} dB, p90 {p90:.2} dB"),
            });
        }
        if let Some([tau, nu, peak, vol]) = r.radar {
            rows.push(SummaryRow {
                key: r.label.clone(),
                value: format!("peak |A| {peak:.4} at τ = {tau:.4e} s, ν = {nu:.2} Hz; ∬|A|² = {vol:.4}"),
            });
        }
    }
    rows
}
