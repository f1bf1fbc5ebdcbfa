//! NDCG, NERR and AP against brute-force evaluators.

mod support;

use support::metrics::{ap_binary_lists, length_three_enumeration, random_pools};

#[test]
fn full_length_three_enumeration() {
    assert_eq!(length_three_enumeration().unwrap(), 125 * 6);
}

#[test]
fn random_lists_up_to_four() {
    assert!(random_pools(20_240_601, 2_000).unwrap() >= 2_000);
}

#[test]
fn average_precision_binary_lists() {
    ap_binary_lists(7, 2_000).unwrap();
}
