//! Cross-checks every quality metric against independent brute-force
//! reimplementations on a batch of random images, plus the exact
//! identities that need no oracle. The oracle code lives in
//! `support/metric_oracle_defs.rs` so the acceptance suite can run the
//! same checks.

#[path = "support/metric_oracle_defs.rs"]
mod defs;

#[test]
fn full_reference_metrics_match_oracles() {
    defs::check_full_reference_metrics_match_oracles();
}

#[test]
fn auxiliary_full_reference_metrics_match_oracles() {
    defs::check_auxiliary_full_reference_metrics_match_oracles();
}

#[test]
fn no_reference_metrics_match_oracles() {
    defs::check_no_reference_metrics_match_oracles();
}

#[test]
fn trivial_identities_hold_exactly() {
    defs::check_trivial_identities_hold_exactly();
}
