//! Exact equivalences against independently coded references.

mod common;

use common::*;

#[test]
fn identity_link_matches_least_squares() {
    for seed in [1, 2, 3] {
        let d = identity_link_vs_least_squares(seed);
        assert!(d < 1e-8, "seed {seed}: {d:e}");
    }
}

#[test]
fn logistic_link_matches_irls() {
    for seed in [4, 5, 6] {
        let d = logistic_link_vs_irls(seed);
        assert!(d < 1e-6, "seed {seed}: {d:e}");
    }
}

#[test]
fn unit_weight_vhat_is_one_minus_kappa() {
    assert!(vhat_unit_weights(7) < 1e-10);
}

#[test]
fn noise_free_deconvolution_is_plain_nadaraya_watson() {
    let d = deconv_noise_free_vs_nw(8);
    assert!(d < 1e-6, "{d:e}");
}

#[test]
fn closed_form_kernel_matches_series_boundary() {
    // the two branches of j_3 agree where they meet
    let below = spherical_j3(1.0 - 1e-12);
    let above = spherical_j3(1.0 + 1e-12);
    assert!((below - above).abs() < 1e-10);
    assert!((closed_form_kernel(0.0) - 16.0 / (35.0 * std::f64::consts::PI)).abs() < 1e-15);
}

#[test]
fn all_covering_window_equals_uncensored() {
    assert!(censored_all_covering_is_exact(9));
}
