//! Analyzer outputs against the brute-force oracle on every small family.

mod common;

use common::{small_spaces, Oracle};

fn each(check: fn(&str, &geocontract::MarkedSpace, &Oracle, bool) -> Result<(), String>) {
    for (name, s, exact) in small_spaces() {
        let o = Oracle::new(&s);
        if let Err(e) = check(name, &s, &o, exact) {
            panic!("{e}");
        }
    }
}

#[test]
fn distances_and_projections() {
    each(common::compare_distances);
}

#[test]
fn contraction_profiles() {
    each(common::compare_contraction);
}

#[test]
fn geodesics_and_images() {
    each(common::compare_geodesics);
}

#[test]
fn divergence_profiles() {
    each(common::compare_divergence);
}

#[test]
fn detour_bounds() {
    each(common::compare_detours);
}

#[test]
fn morse_profiles() {
    each(common::compare_morse);
}
