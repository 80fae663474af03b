//! Fixtures shared by the criterion benches.

use masklab_core::masks::{comb_mask, random_mask, singer_mask};
use masklab_core::Mask;

/// The three N = 63 masks of the reference comparison.
pub fn reference_masks() -> Vec<(&'static str, Mask)> {
    vec![
        ("singer", singer_mask(6).expect("m = 6 is supported")),
        ("random", random_mask(63, 31, 7).expect("0 < 31 < 63")),
        ("comb", comb_mask(63, 3).expect("3 divides 63")),
    ]
}
