//! Experiment configuration: a versioned TOML schema with documented
//! defaults for every field; unknown keys are rejected.

use crate::channel::{resolvable_5path, two_path, veh_a_variant, PathChannel, VehAVariant};
use crate::dd_core::FrameParams;
use crate::error::{Error, Result};
use crate::filters::FilterKind;
use crate::modem::Fidelity;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// The configuration schema version understood by this build.
pub const SCHEMA_VERSION: u32 = 1;

/// Experiment kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Relative prediction error heatmap (one CSV per Doppler period).
    RpeHeatmap,
    /// BER against SNR.
    BerSnr,
    /// BER against maximum Doppler shift at a fixed SNR.
    BerDopplerSweep,
    /// Ambiguity / cross-ambiguity surface of a radar waveform.
    RadarAmbiguity,
    /// Zak-OTFS against MC-OTFS: BER and prediction error.
    McotfsCompare,
}

impl ExperimentKind {
    /// The CLI subcommand running this kind.
    pub fn subcommand(self) -> &'static str {
        match self {
            Self::RpeHeatmap => "rpe",
            Self::BerSnr => "ber",
            Self::BerDopplerSweep => "doppler-sweep",
            Self::RadarAmbiguity => "radar",
            Self::McotfsCompare => "mc-compare",
        }
    }
}

/// Modulation of one link in a BER experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkKind {
    /// Zak-OTFS.
    ZakOtfs,
    /// Time-division multiplexing.
    Tdm,
    /// Frequency-division multiplexing.
    Fdm,
    /// Two-step multicarrier OTFS (rectangular pulse, sinc filters only).
    McOtfs,
}

impl LinkKind {
    /// Lower-case name used in CSV output.
    pub fn name(self) -> &'static str {
        match self {
            Self::ZakOtfs => "zak-otfs",
            Self::Tdm => "tdm",
            Self::Fdm => "fdm",
            Self::McOtfs => "mc-otfs",
        }
    }
}

/// How the receiver acquires the I/O relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CsiMode {
    /// The exact I/O relation.
    Perfect,
    /// Read from the noise-free response to one pilot (no channel model).
    ModelFree,
    /// Paths fitted to the pilot response, then the relation rebuilt (Zak-OTFS only).
    ModelDependent,
}

impl CsiMode {
    /// Lower-case name used in CSV output.
    pub fn name(self) -> &'static str {
        match self {
            Self::Perfect => "perfect",
            Self::ModelFree => "model-free",
            Self::ModelDependent => "model-dependent",
        }
    }
}

/// Channel profile drawn afresh for every frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelProfile {
    /// Six-path vehicular-A, Rayleigh gains, Doppler `ν_max cos θ`.
    VehA,
    /// Vehicular-A with all Doppler shifts zero.
    VehADelayOnly,
    /// Vehicular-A with all delays zero.
    VehADopplerOnly,
    /// Fixed two-path channel (5 μs, ±815 Hz).
    TwoPath,
    /// Five paths on the information grid with random phases.
    Resolvable5path,
}

/// Radar waveform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Waveform {
    /// Sinc-shaped Zak-OTFS pulsone at the origin.
    Pulsone,
    /// `√B sinc(Bt)`.
    Tdm,
    /// Rectangular pulse of duration `T`.
    Fdm,
}

/// DD grid: either `(m, n)` or `(b, t)` plus the Doppler period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Delay bins per period (with `n`); overrides `b`/`t` when given.
    pub m: Option<usize>,
    /// Doppler bins per period (with `m`).
    pub n: Option<usize>,
    /// Bandwidth in Hz (default 0.96 MHz).
    #[serde(default = "default_b")]
    pub b: f64,
    /// Frame duration in s (default 1.6 ms).
    #[serde(default = "default_t")]
    pub t: f64,
    /// Doppler period in Hz (default 15 kHz).
    #[serde(default = "default_nu_p")]
    pub nu_p: f64,
}

fn default_b() -> f64 {
    0.96e6
}
fn default_t() -> f64 {
    1.6e-3
}
fn default_nu_p() -> f64 {
    15e3
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { m: None, n: None, b: default_b(), t: default_t(), nu_p: default_nu_p() }
    }
}

impl GridConfig {
    /// Grid with the Doppler period replaced by `nu_p`.
    pub fn params_at(&self, nu_p: f64) -> Result<FrameParams> {
        let r = match (self.m, self.n) {
            (Some(m), Some(n)) => FrameParams::new(m, n, nu_p),
            (None, None) => FrameParams::from_bandwidth(self.b, self.t, nu_p),
            _ => return Err(Error::Config("grid: give both `m` and `n`, or neither".into())),
        };
        r.map_err(|e| Error::Config(format!("grid: {e}")))
    }

    /// The configured grid.
    pub fn params(&self) -> Result<FrameParams> {
        self.params_at(self.nu_p)
    }
}

/// Filter family and roll-offs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    /// `"sinc"` (default) or `"rrc"`.
    #[serde(default = "default_filter_kind")]
    pub kind: FilterFamily,
    /// Delay roll-off of the RRC filter (default 0.1).
    #[serde(default = "default_beta_tau")]
    pub beta_tau: f64,
    /// Doppler roll-off of the RRC filter (default 0.2).
    #[serde(default = "default_beta_nu")]
    pub beta_nu: f64,
}

/// Filter family names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterFamily {
    /// Sinc filters.
    Sinc,
    /// Root-raised-cosine filters.
    Rrc,
}

fn default_filter_kind() -> FilterFamily {
    FilterFamily::Sinc
}
fn default_beta_tau() -> f64 {
    0.1
}
fn default_beta_nu() -> f64 {
    0.2
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self { kind: default_filter_kind(), beta_tau: default_beta_tau(), beta_nu: default_beta_nu() }
    }
}

impl FilterConfig {
    /// The filter family.
    pub fn kind(&self) -> Result<FilterKind> {
        match self.kind {
            FilterFamily::Sinc => Ok(FilterKind::Sinc),
            FilterFamily::Rrc => {
                for (name, v) in [("beta_tau", self.beta_tau), ("beta_nu", self.beta_nu)] {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(Error::Config(format!("filter.{name} must lie in [0, 1], got {v}")));
                    }
                }
                Ok(FilterKind::Rrc { beta_tau: self.beta_tau, beta_nu: self.beta_nu })
            }
        }
    }

    /// Short label, e.g. `sinc` or `rrc(0.1,0.3)`.
    pub fn label(&self) -> String {
        match self.kind {
            FilterFamily::Sinc => "sinc".into(),
            FilterFamily::Rrc => format!("rrc({},{})", self.beta_tau, self.beta_nu),
        }
    }
}

/// Channel profile and its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    /// Profile (default `veh-a`).
    #[serde(default = "default_profile")]
    pub profile: ChannelProfile,
    /// Maximum Doppler shift in Hz (default 815 Hz).
    #[serde(default = "default_nu_max")]
    pub nu_max: f64,
}

fn default_profile() -> ChannelProfile {
    ChannelProfile::VehA
}
fn default_nu_max() -> f64 {
    815.0
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self { profile: default_profile(), nu_max: default_nu_max() }
    }
}

impl ChannelConfig {
    /// Draws one channel realisation with maximum Doppler `nu_max`.
    pub fn draw<R: Rng + ?Sized>(&self, nu_max: f64, params: &FrameParams, rng: &mut R) -> Result<PathChannel> {
        match self.profile {
            ChannelProfile::VehA => veh_a_variant(nu_max, VehAVariant::DoublySpread, rng),
            ChannelProfile::VehADelayOnly => veh_a_variant(nu_max, VehAVariant::DelayOnly, rng),
            ChannelProfile::VehADopplerOnly => veh_a_variant(nu_max, VehAVariant::DopplerOnly, rng),
            ChannelProfile::TwoPath => Ok(two_path()),
            ChannelProfile::Resolvable5path => resolvable_5path(params.b, params.t, rng),
        }
    }
}

/// One link of a BER experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    /// Modulation.
    pub modulation: LinkKind,
    /// Doppler period override (default: `grid.nu_p`).
    pub nu_p: Option<f64>,
    /// Filter override (default: `filter`).
    pub filter: Option<FilterConfig>,
    /// CSV label (default: the modulation name, plus `@<ν_p> Hz` for Zak-OTFS
    /// and MC-OTFS and the filter when it is not sinc).
    pub label: Option<String>,
}

impl LinkSpec {
    /// A link with all defaults.
    pub fn plain(modulation: LinkKind) -> Self {
        Self { modulation, nu_p: None, filter: None, label: None }
    }
}

/// One radar target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    /// Delay in seconds.
    pub delay_s: f64,
    /// Doppler shift in hertz.
    pub doppler_hz: f64,
    /// Real part of the reflection gain (default 1).
    #[serde(default = "one")]
    pub gain_re: f64,
    /// Imaginary part of the reflection gain (default 0).
    #[serde(default)]
    pub gain_im: f64,
}

fn one() -> f64 {
    1.0
}

/// Radar experiment settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadarConfig {
    /// Waveform (default pulsone).
    #[serde(default = "default_waveform")]
    pub waveform: Waveform,
    /// Targets of the scene; empty (default) gives the auto-ambiguity.
    #[serde(default)]
    pub targets: Vec<TargetSpec>,
    /// Half-width of the delay window in delay periods (default 2).
    #[serde(default = "two")]
    pub tau_periods: f64,
    /// Half-width of the Doppler window in Doppler periods (default 2).
    #[serde(default = "two")]
    pub nu_periods: f64,
    /// Delay samples per `1/B` (default 4).
    #[serde(default = "four")]
    pub tau_oversampling: usize,
    /// Doppler samples per `1/T` (default 4).
    #[serde(default = "four")]
    pub nu_oversampling: usize,
}

fn default_waveform() -> Waveform {
    Waveform::Pulsone
}
fn two() -> f64 {
    2.0
}
fn four() -> usize {
    4
}

impl Default for RadarConfig {
    fn default() -> Self {
        Self {
            waveform: default_waveform(),
            targets: Vec::new(),
            tau_periods: 2.0,
            nu_periods: 2.0,
            tau_oversampling: 4,
            nu_oversampling: 4,
        }
    }
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must equal [`SCHEMA_VERSION`].
    pub schema_version: u32,
    /// Experiment kind.
    pub kind: ExperimentKind,
    /// Master seed (default 1).
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Monte Carlo frames per point (default 200).
    #[serde(default = "default_frames")]
    pub frames: usize,
    /// Worker threads; 0 (default) uses every available core.
    #[serde(default)]
    pub workers: usize,
    /// Output CSV path (default `results/<kind>.csv`).
    pub output: Option<PathBuf>,
    /// DD grid.
    #[serde(default)]
    pub grid: GridConfig,
    /// Shaping filter.
    #[serde(default)]
    pub filter: FilterConfig,
    /// Channel profile.
    #[serde(default)]
    pub channel: ChannelConfig,
    /// Links compared (default: Zak-OTFS, TDM, FDM; for `mcotfs-compare`: Zak-OTFS and MC-OTFS).
    #[serde(default)]
    pub links: Vec<LinkSpec>,
    /// CSI modes (default: perfect).
    #[serde(default = "default_csi")]
    pub csi: Vec<CsiMode>,
    /// SNR points in dB (default 6, 8, …, 18; the sweep uses the first).
    #[serde(default = "default_gamma")]
    pub gamma_db: Vec<f64>,
    /// Maximum Doppler shifts of the sweep in Hz (default: `channel.nu_max`).
    #[serde(default)]
    pub nu_max_hz: Vec<f64>,
    /// Doppler periods of the RPE panels in Hz (default: `grid.nu_p`).
    #[serde(default)]
    pub nu_p_list: Vec<f64>,
    /// Signal model (default `matrix`).
    #[serde(default = "default_fidelity")]
    pub fidelity: Fidelity,
    /// Radar settings.
    #[serde(default)]
    pub radar: RadarConfig,
}

fn default_seed() -> u64 {
    1
}
fn default_frames() -> usize {
    200
}
fn default_csi() -> Vec<CsiMode> {
    vec![CsiMode::Perfect]
}
fn default_gamma() -> Vec<f64> {
    vec![6.0, 8.0, 10.0, 12.0, 14.0, 16.0, 18.0]
}
fn default_fidelity() -> Fidelity {
    Fidelity::Matrix
}

/// A link with every default resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedLink {
    /// Modulation.
    pub kind: LinkKind,
    /// Grid of the link.
    pub params: FrameParams,
    /// Filter family.
    pub filter: FilterKind,
    /// CSV label.
    pub label: String,
}

impl ExperimentConfig {
    /// Default configuration of `kind`.
    pub fn default_for(kind: ExperimentKind) -> Self {
        let mut cfg: Self = toml::from_str(&format!("schema_version = {SCHEMA_VERSION}\nkind = \"{}\"", kind_name(kind)))
            .expect("the default configuration parses");
        if kind == ExperimentKind::RpeHeatmap {
            cfg.channel.profile = ChannelProfile::TwoPath;
        }
        cfg
    }

    /// Parses and validates TOML text.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads, parses and validates a TOML file.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Field-level validation of the configuration.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("schema_version: expected {SCHEMA_VERSION}, got {}", self.schema_version));
        }
        if self.frames == 0 {
            return bad("frames: must be at least 1".into());
        }
        self.grid.params()?;
        self.filter.kind()?;
        for &nu in &self.nu_p_list {
            self.grid.params_at(nu)?;
        }
        if self.channel.nu_max < 0.0 || self.nu_max_hz.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return bad("channel.nu_max / nu_max_hz: Doppler shifts must be non-negative".into());
        }
        if self.gamma_db.is_empty() {
            return bad("gamma_db: at least one SNR point is required".into());
        }
        if self.gamma_db.iter().any(|g| !g.is_finite()) {
            return bad("gamma_db: SNR values must be finite".into());
        }
        if self.csi.is_empty() {
            return bad("csi: at least one CSI mode is required".into());
        }
        for link in self.resolved_links()? {
            for &csi in &self.csi {
                if csi == CsiMode::ModelDependent && link.kind != LinkKind::ZakOtfs {
                    return bad(format!("csi: model-dependent operation is defined for zak-otfs only, not {}", link.label));
                }
            }
            if link.kind == LinkKind::McOtfs && link.filter != FilterKind::Sinc {
                return bad(format!("links: {} supports the rectangular TF window (sinc filter) only", link.label));
            }
            if link.kind == LinkKind::McOtfs && self.fidelity != Fidelity::Matrix {
                return bad("fidelity: mc-otfs links use the matrix model".into());
            }
            if link.kind == LinkKind::McOtfs && self.csi.contains(&CsiMode::ModelFree) && (link.params.m % 2 != 0 || link.params.n % 2 != 0)
            {
                return bad(format!("links: {} model-free operation needs even M and N", link.label));
            }
        }
        if self.fidelity == Fidelity::TimeDomain && self.links().iter().any(|l| l.modulation != LinkKind::ZakOtfs) {
            return bad("fidelity: time-domain simulation is available for zak-otfs links only".into());
        }
        let r = &self.radar;
        if r.tau_periods <= 0.0 || r.nu_periods <= 0.0 || r.tau_oversampling == 0 || r.nu_oversampling == 0 {
            return bad("radar: window half-widths and oversampling factors must be positive".into());
        }
        if self.kind == ExperimentKind::RadarAmbiguity && r.waveform == Waveform::Pulsone && self.grid.params()?.n % 2 != 0 {
            return bad("radar: the pulsone needs an even number of Doppler bins".into());
        }
        Ok(())
    }

    /// The configured links (or the defaults of the kind).
    pub fn links(&self) -> Vec<LinkSpec> {
        if !self.links.is_empty() {
            return self.links.clone();
        }
        match self.kind {
            ExperimentKind::McotfsCompare => vec![LinkSpec::plain(LinkKind::ZakOtfs), LinkSpec::plain(LinkKind::McOtfs)],
            ExperimentKind::BerDopplerSweep => vec![LinkSpec::plain(LinkKind::ZakOtfs)],
            _ => vec![LinkSpec::plain(LinkKind::ZakOtfs), LinkSpec::plain(LinkKind::Tdm), LinkSpec::plain(LinkKind::Fdm)],
        }
    }

    /// Links with grids, filters and labels resolved.
    pub fn resolved_links(&self) -> Result<Vec<ResolvedLink>> {
        let links = self.links();
        let mut out: Vec<ResolvedLink> = Vec::with_capacity(links.len());
        for l in &links {
            let nu_p = l.nu_p.unwrap_or(self.grid.nu_p);
            let params = self.grid.params_at(nu_p)?;
            let fc = l.filter.unwrap_or(self.filter);
            let filter = fc.kind()?;
            let label = l.label.clone().unwrap_or_else(|| {
                let mut s = l.modulation.name().to_string();
                if matches!(l.modulation, LinkKind::ZakOtfs | LinkKind::McOtfs) {
                    s.push_str(&format!("@{nu_p}"));
                    if fc.kind != FilterFamily::Sinc {
                        s.push_str(&format!("/{}", fc.label()));
                    }
                }
                s
            });
            if out.iter().any(|o| o.label == label) {
                return Err(Error::Config(format!("links: duplicate label `{label}`")));
            }
            out.push(ResolvedLink { kind: l.modulation, params, filter, label });
        }
        Ok(out)
    }

    /// Doppler periods of the RPE panels.
    pub fn rpe_panels(&self) -> Vec<f64> {
        if self.nu_p_list.is_empty() {
            vec![self.grid.nu_p]
        } else {
            self.nu_p_list.clone()
        }
    }

    /// Maximum Doppler shifts of the sweep.
    pub fn sweep_points(&self) -> Vec<f64> {
        if self.nu_max_hz.is_empty() {
            vec![self.channel.nu_max]
        } else {
            self.nu_max_hz.clone()
        }
    }

    /// Output path (default `results/<subcommand>.csv`).
    pub fn output_path(&self) -> PathBuf {
        self.output.clone().unwrap_or_else(|| PathBuf::from(format!("results/{}.csv", self.kind.subcommand())))
    }

    /// SHA-256 of the canonical TOML form with `workers` and `output` cleared
    /// (neither affects the results).
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.workers = 0;
        c.output = None;
        let text = toml::to_string(&c).expect("configuration serialises");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn kind_name(kind: ExperimentKind) -> &'static str {
    match kind {
        ExperimentKind::RpeHeatmap => "rpe-heatmap",
        ExperimentKind::BerSnr => "ber-snr",
        ExperimentKind::BerDopplerSweep => "ber-doppler-sweep",
        ExperimentKind::RadarAmbiguity => "radar-ambiguity",
        ExperimentKind::McotfsCompare => "mcotfs-compare",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_for_every_kind() {
        for kind in [
            ExperimentKind::RpeHeatmap,
            ExperimentKind::BerSnr,
            ExperimentKind::BerDopplerSweep,
            ExperimentKind::RadarAmbiguity,
            ExperimentKind::McotfsCompare,
        ] {
            let c = ExperimentConfig::default_for(kind);
            c.validate().unwrap();
            assert_eq!(c.frames, 200);
            let p = c.grid.params().unwrap();
            assert_eq!((p.m, p.n), (64, 24));
        }
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        let e = ExperimentConfig::from_toml_str("schema_version = 1\nkind = \"ber-snr\"\nframez = 3").unwrap_err();
        assert!(matches!(e, Error::Config(ref m) if m.contains("framez")), "{e}");
        let e = ExperimentConfig::from_toml_str("schema_version = 2\nkind = \"ber-snr\"").unwrap_err();
        assert!(matches!(e, Error::Config(ref m) if m.contains("schema_version")));
        let e = ExperimentConfig::from_toml_str("schema_version = 1\nkind = \"ber-snr\"\nframes = 0").unwrap_err();
        assert!(matches!(e, Error::Config(ref m) if m.contains("frames")));
        let e = ExperimentConfig::from_toml_str("schema_version = 1\nkind = \"ber-snr\"\n[grid]\nm = 64").unwrap_err();
        assert!(matches!(e, Error::Config(ref m) if m.contains("grid")));
        let e = ExperimentConfig::from_toml_str("schema_version = 1\nkind = \"ber-snr\"\n[grid]\nnu_p = 7000").unwrap_err();
        assert!(matches!(e, Error::Config(_)));
        let e = ExperimentConfig::from_toml_str(
            "schema_version = 1\nkind = \"ber-snr\"\ncsi = [\"model-dependent\"]\n[[links]]\nmodulation = \"tdm\"",
        )
        .unwrap_err();
        assert!(matches!(e, Error::Config(ref m) if m.contains("model-dependent")));
    }

    #[test]
    fn links_resolve_with_labels() {
        let c = ExperimentConfig::from_toml_str(
            r#"
schema_version = 1
kind = "ber-snr"
[[links]]
modulation = "zak-otfs"
nu_p = 960000
[[links]]
modulation = "zak-otfs"
filter = { kind = "rrc", beta_tau = 0.1, beta_nu = 0.3 }
[[links]]
modulation = "tdm"
"#,
        )
        .unwrap();
        let l = c.resolved_links().unwrap();
        assert_eq!(l[0].label, "zak-otfs@960000");
        assert_eq!((l[0].params.m, l[0].params.n), (1, 1536));
        assert_eq!(l[1].label, "zak-otfs@15000/rrc(0.1,0.3)");
        assert_eq!(l[2].label, "tdm");
    }

    #[test]
    fn hash_ignores_workers_and_output() {
        let mut a = ExperimentConfig::default_for(ExperimentKind::BerSnr);
        let h = a.hash();
        a.workers = 7;
        a.output = Some("x.csv".into());
        assert_eq!(a.hash(), h);
        a.seed = 2;
        assert_ne!(a.hash(), h);
    }
}
