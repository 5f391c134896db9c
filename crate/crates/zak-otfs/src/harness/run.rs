//! Experiment execution: seeded frame-parallel Monte Carlo with an ordered
//! reduction, and incremental CSV output.

use super::config::{CsiMode, ExperimentConfig, ExperimentKind, LinkKind, ResolvedLink, Waveform};
use super::records::{BerCounts, ResultRecord};
use crate::channel::{IoKind, Path as ChannelPath, PathChannel};
use crate::dd_core::FrameParams;
use crate::error::{Error, Result};
use crate::filters::{FilterKind, SeparableFilter};
use crate::linalg::LinearOperator;
use crate::mcotfs::{mc_kernel_from_pilot, mc_pilot_estimate_and_predict, mc_run_frame, McCsi, McOperator, TfWindow};
use crate::modem::{run_frame, Csi, FrameOutcome, LinkConfig, Modulation};
use crate::numeric::C64;
use crate::predict::{
    estimate_hdd_from_pilot, model_dependent_estimate, pilot_response, reuse_stationary_estimate, rpe_heatmap, PilotSpec, RpeHeatmap,
};
use crate::radar::{
    ambiguity_fdm, ambiguity_pulsone, ambiguity_tdm, ml_delay_doppler, moyal_volume, scene_response, symmetric_axis, AmbiguitySurface,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Independent random streams of one frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RngStream {
    /// Channel realisation (shared by every link, SNR and CSI mode).
    Channel,
    /// Information bits and noise (shared by every link and CSI mode).
    Data,
}

/// The counter-based generator of one frame: ChaCha8 keyed by
/// SHA-256(master seed, stream, experiment index) with the frame index as the
/// stream number.  Results therefore do not depend on which worker runs which
/// frame or in what order.
pub fn frame_rng(seed: u64, stream: RngStream, experiment: u64, frame: u64) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(b"zak-otfs frame rng v1");
    h.update(seed.to_le_bytes());
    h.update([stream as u8]);
    h.update(experiment.to_le_bytes());
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(frame);
    rng
}

/// Shared context of an experiment run.
pub struct Runner<'a> {
    cfg: &'a ExperimentConfig,
    pool: rayon::ThreadPool,
    hash: String,
}

impl<'a> Runner<'a> {
    /// Validates `cfg` and builds the worker pool.
    pub fn new(cfg: &'a ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build().map_err(|e| Error::Config(format!("workers: {e}")))?;
        Ok(Self { cfg, pool, hash: cfg.hash() })
    }

    fn record(&self, variable: &str, value: f64, label: &str) -> ResultRecord {
        ResultRecord {
            kind: self.cfg.kind,
            variable: variable.into(),
            value,
            gamma_db: f64::NAN,
            label: label.into(),
            csi_mode: String::new(),
            ber: None,
            rpe_db: None,
            radar: None,
            wall_time_s: 0.0,
            config_hash: self.hash.clone(),
            seed: self.cfg.seed,
        }
    }

    /// BER of one link, CSI mode and SNR over the configured frames.
    ///
    /// Frame `f` draws its channel from `(seed, Channel, 0, f)` and its bits
    /// and noise from `(seed, Data, gamma_index, f)`, so every link and CSI
    /// mode sees the same realisations (common random numbers).
    pub fn ber_point(&self, link: &ResolvedLink, csi: CsiMode, gamma_db: f64, gamma_index: usize, nu_max: f64) -> Result<BerCounts> {
        Ok(BerCounts::from_frames(&self.frame_outcomes(link, csi, gamma_db, gamma_index, nu_max)?))
    }

    /// Per-frame outcomes of [`Runner::ber_point`], in frame order (for
    /// paired comparisons between links that share channel draws).
    pub fn frame_outcomes(
        &self,
        link: &ResolvedLink,
        csi: CsiMode,
        gamma_db: f64,
        gamma_index: usize,
        nu_max: f64,
    ) -> Result<Vec<FrameOutcome>> {
        let cfg = self.cfg;
        self.pool.install(|| {
            (0..cfg.frames as u64)
                .into_par_iter()
                .map(|f| {
                    let mut ch_rng = frame_rng(cfg.seed, RngStream::Channel, 0, f);
                    let ch = cfg.channel.draw(nu_max, &link.params, &mut ch_rng)?;
                    let mut rng = frame_rng(cfg.seed, RngStream::Data, gamma_index as u64, f);
                    simulate_frame(link, csi, cfg.fidelity, &ch, gamma_db, &mut rng)
                })
                .collect::<Result<Vec<_>>>()
        })
    }

    /// Runs the experiment, writing CSV output; returns the records.
    pub fn run(&self) -> Result<Vec<ResultRecord>> {
        let out = self.cfg.output_path();
        if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        match self.cfg.kind {
            ExperimentKind::BerSnr => self.run_ber(&out, false),
            ExperimentKind::BerDopplerSweep => self.run_ber(&out, true),
            ExperimentKind::RpeHeatmap => self.run_rpe(&out),
            ExperimentKind::RadarAmbiguity => self.run_radar(&out),
            ExperimentKind::McotfsCompare => {
                let mut recs = self.run_ber(&out, false)?;
                recs.extend(self.run_mc_rpe(&out)?);
                Ok(recs)
            }
        }
    }

    fn run_ber(&self, out: &Path, sweep: bool) -> Result<Vec<ResultRecord>> {
        let cfg = self.cfg;
        let links = cfg.resolved_links()?;
        let mut w = csv::Writer::from_path(out)?;
        let mut header = vec!["gamma_db", "modulation", "csi_mode", "bits", "errors", "ber", "ci95"];
        if sweep {
            header.insert(0, "nu_max_hz");
        }
        w.write_record(&header)?;
        w.flush()?;
        let gammas: Vec<f64> = if sweep { vec![cfg.gamma_db[0]] } else { cfg.gamma_db.clone() };
        let nu_maxes: Vec<f64> = if sweep { cfg.sweep_points() } else { vec![cfg.channel.nu_max] };
        let mut recs = Vec::new();
        for &nu_max in &nu_maxes {
            for (gi, &gamma) in gammas.iter().enumerate() {
                for link in &links {
                    for &csi in &cfg.csi {
                        let t0 = Instant::now();
                        let c = self.ber_point(link, csi, gamma, gi, nu_max)?;
                        let mut row = vec![
                            gamma.to_string(),
                            link.label.clone(),
                            csi.name().to_string(),
                            c.bits.to_string(),
                            c.errors.to_string(),
                            c.ber().to_string(),
                            c.ci95().to_string(),
                        ];
                        if sweep {
                            row.insert(0, nu_max.to_string());
                        }
                        w.write_record(&row)?;
                        w.flush()?;
                        let (var, val) = if sweep { ("nu_max_hz", nu_max) } else { ("gamma_db", gamma) };
                        let mut r = self.record(var, val, &link.label);
                        r.gamma_db = gamma;
                        r.csi_mode = csi.name().into();
                        r.ber = Some(c);
                        r.wall_time_s = t0.elapsed().as_secs_f64();
                        recs.push(r);
                    }
                }
            }
        }
        Ok(recs)
    }

    fn rpe_channel(&self, params: &FrameParams) -> Result<PathChannel> {
        let mut rng = frame_rng(self.cfg.seed, RngStream::Channel, 0, 0);
        self.cfg.channel.draw(self.cfg.channel.nu_max, params, &mut rng)
    }

    fn run_rpe(&self, out: &Path) -> Result<Vec<ResultRecord>> {
        let panels = self.cfg.rpe_panels();
        let kind = self.cfg.filter.kind()?;
        let mut recs = Vec::new();
        for &nu_p in &panels {
            let t0 = Instant::now();
            let params = self.cfg.grid.params_at(nu_p)?;
            let ch = self.rpe_channel(&params)?;
            let f = SeparableFilter::for_frame(kind, &params)?;
            let pilot = PilotSpec::center(&params)?;
            let map = self.pool.install(|| rpe_heatmap(&ch, &f, &f, &params, pilot))?;
            let path = if panels.len() == 1 { out.to_path_buf() } else { suffixed(out, &format!("nu_p{nu_p}")) };
            write_heatmap(&path, &map)?;
            let mut r = self.record("nu_p_hz", nu_p, &format!("zak-otfs/{}", self.cfg.filter.label()));
            r.rpe_db = Some((map.median(), map.percentile(90.0)));
            r.wall_time_s = t0.elapsed().as_secs_f64();
            recs.push(r);
        }
        Ok(recs)
    }

    fn run_mc_rpe(&self, out: &Path) -> Result<Vec<ResultRecord>> {
        // Prediction panels always use the fixed two-path channel.
        let ch = crate::channel::two_path();
        let mut recs = Vec::new();
        for &nu_p in &self.cfg.rpe_panels() {
            let params = self.cfg.grid.params_at(nu_p)?;
            let pilot = PilotSpec::center(&params)?;
            let f = SeparableFilter::for_frame(FilterKind::Sinc, &params)?;
            let t0 = Instant::now();
            let zak = self.pool.install(|| rpe_heatmap(&ch, &f, &f, &params, pilot))?;
            write_heatmap(&suffixed(out, &format!("rpe_zak_nu_p{nu_p}")), &zak)?;
            let mut r = self.record("nu_p_hz", nu_p, "zak-otfs/sinc");
            r.rpe_db = Some((zak.median(), zak.percentile(90.0)));
            r.wall_time_s = t0.elapsed().as_secs_f64();
            recs.push(r);
            let t0 = Instant::now();
            let w = TfWindow::rect(&params);
            let mc = self.pool.install(|| mc_pilot_estimate_and_predict(&ch, &w, &w, &params))?;
            write_heatmap(&suffixed(out, &format!("rpe_mc_nu_p{nu_p}")), &mc.heatmap)?;
            let mut r = self.record("nu_p_hz", nu_p, "mc-otfs/sinc");
            r.rpe_db = Some((mc.heatmap.median(), mc.heatmap.percentile(90.0)));
            r.wall_time_s = t0.elapsed().as_secs_f64();
            recs.push(r);
        }
        Ok(recs)
    }

    fn run_radar(&self, out: &Path) -> Result<Vec<ResultRecord>> {
        let t0 = Instant::now();
        let a = radar_surface(self.cfg)?;
        let mut w = csv::Writer::from_path(out)?;
        w.write_record(["tau_s", "nu_hz", "mag2", "phase_rad"])?;
        for (tau, nu, mag2, phase) in a.rows() {
            w.write_record([tau.to_string(), nu.to_string(), mag2.to_string(), phase.to_string()])?;
        }
        w.flush()?;
        let est = ml_delay_doppler(&a)?;
        let label = format!("{:?}", self.cfg.radar.waveform).to_lowercase();
        let mut r = self.record("tau_s", est.tau_hat, &label);
        r.radar = Some([est.tau_hat, est.nu_hat, est.peak, moyal_volume(&a)]);
        r.wall_time_s = t0.elapsed().as_secs_f64();
        Ok(vec![r])
    }
}

/// Closed-form auto-ambiguity of the configured waveform on the configured
/// window, passed through the target scene when targets are given.
pub fn radar_surface(cfg: &ExperimentConfig) -> Result<AmbiguitySurface> {
    let p = cfg.grid.params()?;
    let r = &cfg.radar;
    let half_tau = (r.tau_periods * p.m as f64 * r.tau_oversampling as f64).round() as usize;
    let half_nu = (r.nu_periods * p.n as f64 * r.nu_oversampling as f64).round() as usize;
    let ta = symmetric_axis(half_tau, 1.0 / (p.b * r.tau_oversampling as f64));
    let na = symmetric_axis(half_nu, 1.0 / (p.t * r.nu_oversampling as f64));
    let a = match r.waveform {
        Waveform::Pulsone => AmbiguitySurface::from_fn(ta, na, |t, n| ambiguity_pulsone(t, n, &p)),
        Waveform::Tdm => AmbiguitySurface::from_fn(ta, na, |t, n| ambiguity_tdm(t, n, p.b)),
        Waveform::Fdm => AmbiguitySurface::from_fn(ta, na, |t, n| ambiguity_fdm(t, n, p.t)),
    };
    if r.targets.is_empty() {
        return Ok(a);
    }
    let ch = PathChannel {
        paths: r
            .targets
            .iter()
            .map(|t| ChannelPath { gain: C64::new(t.gain_re, t.gain_im), delay: t.delay_s, doppler: t.doppler_hz })
            .collect(),
    };
    scene_response(&ch, &a).map_err(|e| Error::Config(format!("radar.targets: {e}")))
}

/// One frame of `link` with the given channel-knowledge mode.
pub fn simulate_frame(
    link: &ResolvedLink,
    csi: CsiMode,
    fidelity: crate::modem::Fidelity,
    ch: &PathChannel,
    gamma_db: f64,
    rng: &mut ChaCha8Rng,
) -> Result<FrameOutcome> {
    let p = link.params;
    match link.kind {
        LinkKind::McOtfs => {
            let w = TfWindow::rect(&p);
            let op = McOperator::new(ch, &p, &w, &w)?;
            let mc = match csi {
                CsiMode::Perfect => McCsi::Perfect,
                CsiMode::ModelFree => {
                    let (k0, l0) = (p.m / 2, p.n / 2);
                    let mut e = vec![C64::new(0.0, 0.0); p.mn()];
                    e[k0 * p.n + l0] = C64::new(1.0, 0.0);
                    McCsi::Kernel(mc_kernel_from_pilot(&op.apply(&e), &p, k0, l0))
                }
                CsiMode::ModelDependent => return Err(Error::Config("model-dependent operation is defined for zak-otfs only".into())),
            };
            mc_run_frame(ch, &p, gamma_db, &mc, Some(&op), rng)
        }
        LinkKind::ZakOtfs => {
            let mut lc = LinkConfig::new(Modulation::ZakOtfs, p, link.filter);
            lc.fidelity = fidelity;
            let h = lc.true_filter(ch)?;
            let c = match csi {
                CsiMode::Perfect => Csi::Perfect,
                CsiMode::ModelFree => {
                    let pilot = PilotSpec::center(&p)?;
                    Csi::ZakFilter(estimate_hdd_from_pilot(&pilot_response(&h, pilot)?, pilot)?)
                }
                CsiMode::ModelDependent => {
                    let pilot = PilotSpec::center(&p)?;
                    let f = lc.shaping_filter()?;
                    let fitted = model_dependent_estimate(&pilot_response(&h, pilot)?, pilot, &f, &f)?;
                    Csi::ZakFilter(lc.true_filter(&fitted)?)
                }
            };
            run_frame(&lc, ch, gamma_db, &c, Some(&h), rng)
        }
        LinkKind::Tdm | LinkKind::Fdm => {
            let (m, io) = if link.kind == LinkKind::Tdm { (Modulation::Tdm, IoKind::Tdm) } else { (Modulation::Fdm, IoKind::Fdm) };
            let lc = LinkConfig::new(m, p, link.filter);
            let c = match csi {
                CsiMode::Perfect => Csi::Perfect,
                CsiMode::ModelFree => {
                    let h = lc.true_matrix(ch)?;
                    let c0 = p.mn() / 2;
                    Csi::Matrix(reuse_stationary_estimate(&h.column(c0), io, p.b, p.t, h.band())?)
                }
                CsiMode::ModelDependent => return Err(Error::Config("model-dependent operation is defined for zak-otfs only".into())),
            };
            run_frame(&lc, ch, gamma_db, &c, None, rng)
        }
    }
}

/// `dir/stem_<suffix>.ext` for `dir/stem.ext`.
pub fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    let ext = path.extension().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "csv".into());
    path.with_file_name(format!("{stem}_{suffix}.{ext}"))
}

/// Writes a heatmap as `k_g, l_g, rpe_db`.
pub fn write_heatmap(path: &Path, map: &RpeHeatmap) -> Result<()> {
    let mut w = csv::Writer::from_writer(File::create(path)?);
    w.write_record(["k_g", "l_g", "rpe_db"])?;
    let n = map.params.n;
    for (i, v) in map.rpe_db.iter().enumerate() {
        w.write_record([(i / n).to_string(), (i % n).to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Validates `cfg`, runs it and writes its CSV output.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    Runner::new(cfg)?.run()
}

/// Writes the summary table of `records` to `w`.
pub fn write_summary(records: &[ResultRecord], w: &mut dyn Write) -> std::io::Result<()> {
    for row in super::records::summarize(records) {
        writeln!(w, "{:<48} {}", row.key, row.value)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn frame_rng_is_keyed_by_all_inputs() {
        let a: u64 = frame_rng(1, RngStream::Data, 0, 5).random();
        assert_eq!(a, frame_rng(1, RngStream::Data, 0, 5).random::<u64>());
        assert_ne!(a, frame_rng(2, RngStream::Data, 0, 5).random::<u64>());
        assert_ne!(a, frame_rng(1, RngStream::Channel, 0, 5).random::<u64>());
        assert_ne!(a, frame_rng(1, RngStream::Data, 1, 5).random::<u64>());
        assert_ne!(a, frame_rng(1, RngStream::Data, 0, 6).random::<u64>());
    }

    #[test]
    fn suffix_paths() {
        assert_eq!(suffixed(Path::new("out/rpe.csv"), "nu_p30000"), PathBuf::from("out/rpe_nu_p30000.csv"));
    }

    #[test]
    fn noiseless_links_are_error_free() {
        let mut cfg = ExperimentConfig::default_for(ExperimentKind::BerSnr);
        cfg.grid.m = Some(16);
        cfg.grid.n = Some(8);
        cfg.frames = 2;
        let runner = Runner::new(&cfg).unwrap();
        let mut links = cfg.resolved_links().unwrap();
        links.push(ResolvedLink { kind: LinkKind::McOtfs, params: links[0].params, filter: FilterKind::Sinc, label: "mc".into() });
        for link in &links {
            let c = runner.ber_point(link, CsiMode::Perfect, 200.0, 0, 100.0).unwrap();
            assert_eq!(c.errors, 0, "{}", link.label);
            assert_eq!(c.frames, 2);
        }
    }
}
