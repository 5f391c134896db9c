use zak_otfs_web::{ambiguity_dims_impl, ambiguity_impl, ber_impl, rpe_heatmap_impl};

#[test]
fn rpe_heatmap_has_one_value_per_grid_point() {
    let v = rpe_heatmap_impl(8, 4, 30e3, "sinc", 0.0, 0.0).unwrap();
    assert_eq!(v.len(), 32);
    assert!(v.iter().all(|x| x.is_finite()));
    let r = rpe_heatmap_impl(8, 4, 30e3, "rrc", 0.1, 0.2).unwrap();
    assert_eq!(r.len(), 32);
    assert!(rpe_heatmap_impl(8, 4, 30e3, "gauss", 0.0, 0.0).is_err());
    assert!(rpe_heatmap_impl(64, 64, 30e3, "sinc", 0.0, 0.0).is_err());
}

#[test]
fn ambiguity_peaks_at_origin_with_unit_value() {
    for w in ["pulsone", "tdm", "fdm"] {
        let (nt, nn) = ambiguity_dims_impl(8, 4, 2);
        let v = ambiguity_impl(w, 8, 4, 15e3, 2).unwrap();
        assert_eq!(v.len(), nt * nn);
        let centre = v[(nt / 2) * nn + nn / 2];
        assert!((centre - 1.0).abs() < 1e-9, "{w}: {centre}");
        assert!(v.iter().all(|&x| x <= 1.0 + 1e-9));
    }
    assert!(ambiguity_impl("chirp", 8, 4, 15e3, 2).is_err());
}

#[test]
fn ber_is_small_at_high_snr_and_reproducible() {
    let a = ber_impl("zak-otfs", 16, 8, 15e3, 40.0, 815.0, 2, 7).unwrap();
    assert_eq!(a.len(), 2);
    assert!(a[0] < 1e-2, "{a:?}");
    assert_eq!(a, ber_impl("zak-otfs", 16, 8, 15e3, 40.0, 815.0, 2, 7).unwrap());
    assert!(ber_impl("ofdm", 16, 8, 15e3, 10.0, 815.0, 2, 7).is_err());
    assert!(ber_impl("tdm", 16, 8, 15e3, 10.0, 815.0, 0, 7).is_err());
}
