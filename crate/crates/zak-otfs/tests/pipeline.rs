//! End-to-end link properties: SNR calibration, noise statistics after the
//! receiver, monotone BER and error-free noiseless detection.

use proptest::prelude::*;
use zak_otfs::channel::{veh_a, Path, PathChannel};
use zak_otfs::dd_core::FrameParams;
use zak_otfs::filters::FilterKind;
use zak_otfs::harness::{frame_rng, simulate_frame, BerCounts, CsiMode, LinkKind, ResolvedLink, RngStream};
use zak_otfs::modem::{run_frame, Csi, Fidelity, LinkConfig, Modulation};
use zak_otfs::C64;

fn small() -> FrameParams {
    FrameParams::new(16, 8, 15e3).unwrap()
}

#[test]
fn received_snr_matches_configured_snr() {
    // Veh-A has unit average power, so over many frames the received signal
    // energy per transmitted symbol divided by N0 is the configured SNR. TDM
    // and FDM observe guard samples beyond the frame, so the noise energy is
    // normalised per observed sample rather than per symbol.
    let p = small();
    let frames = 1000;
    for m in [Modulation::ZakOtfs, Modulation::Tdm, Modulation::Fdm] {
        let cfg = LinkConfig::new(m, p, FilterKind::Sinc);
        for gamma_db in [0.0, 12.0] {
            let mut se = 0.0;
            for f in 0..frames {
                let ch = veh_a(815.0, &mut frame_rng(3, RngStream::Channel, 0, f)).unwrap();
                let o = run_frame(&cfg, &ch, gamma_db, &Csi::Perfect, None, &mut frame_rng(3, RngStream::Data, 0, f)).unwrap();
                se += o.signal_energy;
            }
            let es = se / (frames as f64 * p.mn() as f64);
            let n0 = 10f64.powf(-gamma_db / 10.0);
            let measured = 10.0 * (es / n0).log10();
            assert!((measured - gamma_db).abs() < 0.2, "{m:?} at {gamma_db} dB: measured {measured:.3} dB");
        }
    }
}

#[test]
fn time_domain_receiver_noise_has_variance_n0_per_sample() {
    let p = FrameParams::new(8, 4, 15e3).unwrap();
    let mut cfg = LinkConfig::new(Modulation::ZakOtfs, p, FilterKind::Sinc);
    cfg.fidelity = Fidelity::TimeDomain;
    let gamma_db = 10.0;
    let mut ne = 0.0;
    let frames = 200;
    for f in 0..frames {
        let o = run_frame(&cfg, &PathChannel::identity(), gamma_db, &Csi::Perfect, None, &mut frame_rng(5, RngStream::Data, 0, f)).unwrap();
        ne += o.noise_energy;
    }
    let per_sample = ne / (frames as f64 * p.mn() as f64);
    let n0 = 10f64.powf(-gamma_db / 10.0);
    assert!((per_sample / n0 - 1.0).abs() < 0.05, "noise variance {per_sample} vs N0 {n0}");
}

#[test]
fn ber_does_not_increase_with_snr() {
    let p = small();
    for kind in [LinkKind::ZakOtfs, LinkKind::Tdm, LinkKind::Fdm, LinkKind::McOtfs] {
        let link = ResolvedLink { kind, params: p, filter: FilterKind::Sinc, label: String::new() };
        let mut prev: Option<BerCounts> = None;
        for (gi, gamma_db) in [0.0, 6.0, 12.0, 18.0].into_iter().enumerate() {
            let outcomes: Vec<_> = (0..40)
                .map(|f| {
                    let ch = veh_a(815.0, &mut frame_rng(9, RngStream::Channel, 0, f)).unwrap();
                    let mut rng = frame_rng(9, RngStream::Data, gi as u64, f);
                    simulate_frame(&link, CsiMode::Perfect, Fidelity::Matrix, &ch, gamma_db, &mut rng).unwrap()
                })
                .collect();
            let c = BerCounts::from_frames(&outcomes);
            if let Some(q) = prev {
                assert!(c.ber() <= q.ber() || c.overlaps(&q), "{kind:?}: BER rose at {gamma_db} dB");
            }
            prev = Some(c);
        }
    }
}

#[test]
fn model_free_estimate_is_exact_on_a_single_on_grid_path() {
    // One path on the grid: the effective filter fits inside one period, so
    // the pilot estimate equals the true filter on the estimator window.
    let p = small();
    let ch = PathChannel::single(C64::new(0.6, 0.8), 2.0 / p.b, 1.0 / p.t);
    let link =
        ResolvedLink { kind: LinkKind::ZakOtfs, params: p, filter: FilterKind::Rrc { beta_tau: 0.1, beta_nu: 0.2 }, label: String::new() };
    for csi in [CsiMode::Perfect, CsiMode::ModelFree, CsiMode::ModelDependent] {
        let o = simulate_frame(&link, csi, Fidelity::Matrix, &ch, 300.0, &mut frame_rng(1, RngStream::Data, 0, 0)).unwrap();
        assert_eq!(o.errors, 0, "{csi:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn noiseless_perfect_csi_detection_is_error_free(
        d in 0.0f64..4.0, nu in -1500.0f64..1500.0, re in -1.0f64..1.0, im in -1.0f64..1.0, seed in 0u64..1000,
    ) {
        let p = small();
        let ch = PathChannel {
            paths: vec![
                Path { gain: C64::new(1.0, 0.0), delay: 0.0, doppler: 0.0 },
                Path { gain: C64::new(re, im) * 0.5, delay: d / p.b, doppler: nu },
            ],
        };
        for kind in [LinkKind::ZakOtfs, LinkKind::Tdm, LinkKind::Fdm] {
            let link = ResolvedLink { kind, params: p, filter: FilterKind::Sinc, label: String::new() };
            let o = simulate_frame(&link, CsiMode::Perfect, Fidelity::Matrix, &ch, 300.0, &mut frame_rng(seed, RngStream::Data, 0, 0)).unwrap();
            prop_assert_eq!(o.errors, 0, "{:?}", kind);
        }
    }
}
