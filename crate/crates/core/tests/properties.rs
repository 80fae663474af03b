use proptest::prelude::*;

use masklab_core::galois::{BinaryField, FieldElement};
use masklab_core::masks::{parse_mask, random_mask, serialize_mask, verify_cds, Mask, MaskFamily};
use masklab_core::metrics::{self, doppler_sidelobe_sum};
use masklab_core::response::{expected_response, ScenarioParams};
use masklab_core::spectra::{self, SpectralSummary};

fn arb_mask() -> impl Strategy<Value = Mask> {
    (5usize..=64)
        .prop_flat_map(|n| (Just(n), 1..n, any::<u64>()))
        .prop_map(|(n, w, seed)| random_mask(n, w, seed).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn autocorr_sums(mask in arb_mask()) {
        let a = spectra::autocorr(&mask);
        let (n, w) = (mask.period(), mask.weight());
        prop_assert_eq!(a[0], w);
        prop_assert_eq!(a.iter().sum::<usize>(), w * w);
        prop_assert_eq!(a[1..].iter().sum::<usize>(), w * (w - 1));
        for k in 1..n {
            prop_assert_eq!(a[k], a[n - k]);
            prop_assert_eq!(spectra::gamma(&mask, k).count(), w - a[k]);
        }
    }

    #[test]
    fn cross_term_sum_is_mask_independent(mask in arb_mask()) {
        let s = SpectralSummary::new(&mask);
        prop_assert_eq!(
            s.off_diagonal_cross_sum(),
            spectra::off_diagonal_cross_sum_formula(mask.period(), mask.weight())
        );
    }

    #[test]
    fn weights_and_shifts(mask in arb_mask(), shift in -200i64..200) {
        prop_assert_eq!(mask.reception().weight() + mask.weight(), mask.period());
        let shifted = mask.cyclic_shift(shift);
        prop_assert_eq!(shifted.weight(), mask.weight());
        prop_assert_eq!(spectra::autocorr(&shifted), spectra::autocorr(&mask));
    }

    #[test]
    fn text_round_trip(mask in arb_mask()) {
        let text = serialize_mask(&mask);
        let back = parse_mask(&text).unwrap();
        prop_assert_eq!(back.bits(), mask.bits());
        prop_assert_eq!(back.family(), MaskFamily::Custom);
        prop_assert_eq!(serialize_mask(&back), text);
    }

    #[test]
    fn responses_are_nonnegative_and_flat_off_mainlobe(
        mask in arb_mask(), pulses in 1usize..6, mu4 in 1.0f64..2.0, seed in any::<u64>()
    ) {
        let p = ScenarioParams::new(mask.clone(), pulses, mu4).unwrap();
        let n = mask.period();
        let k = 1 + (seed as usize) % (n - 1);
        let l = 1 + (seed as usize / 97) % (n - 1);
        let mut spread = (f64::INFINITY, f64::NEG_INFINITY);
        for nu in 0..p.cpi_len() {
            let v = expected_response(&p, k, l, nu).unwrap();
            prop_assert!(v >= 0.0);
            spread = (spread.0.min(v), spread.1.max(v));
        }
        if k != l {
            prop_assert_eq!(spread.0, spread.1);
        }
    }

    #[test]
    fn bounds_bracket_every_mask(mask in arb_mask(), q16 in any::<bool>()) {
        let mu4 = if q16 { 1.32 } else { 1.0 };
        let s = doppler_sidelobe_sum(&mask, mu4);
        let tol = 1e-9 * s.upper.abs().max(1.0);
        prop_assert!(s.lower <= s.value + tol, "{:?}", s);
        prop_assert!(s.value <= s.upper + tol, "{:?}", s);
        prop_assert_eq!(s.attains_upper, verify_cds(&mask).is_cds);
        if s.attains_upper {
            prop_assert!((s.value - s.upper).abs() <= tol);
        } else {
            prop_assert!(s.value < s.upper);
        }
        if s.attains_lower {
            prop_assert!((s.value - s.lower).abs() <= tol);
        }
    }

    #[test]
    fn jensen_step(mask in arb_mask()) {
        // replacing a[k] by its mean never lowers sum f
        let s = SpectralSummary::new(&mask);
        let (n, w) = (mask.period() as f64, mask.weight() as f64);
        let mean_a = w * (w - 1.0) / (n - 1.0);
        let flat = (n - 1.0) * (w - mean_a) * (n - w + mean_a);
        let actual: u64 = (1..mask.period()).map(|k| s.doppler_energy(k)).sum();
        prop_assert!(actual as f64 <= flat + 1e-9 * flat.max(1.0));
    }

    #[test]
    fn rho_at_most_half_is_always_monotone(mask in arb_mask()) {
        if 2 * mask.weight() <= mask.period() {
            prop_assert!(metrics::monotonicity_check(&mask));
        }
    }

    #[test]
    fn field_arithmetic_laws(m in 2u32..=20, a in any::<u32>(), b in any::<u32>(), c in any::<u32>()) {
        let f = BinaryField::new(m).unwrap();
        let mask = (1u32 << m) - 1;
        let (a, b, c) = (f.element(a & mask).unwrap(), f.element(b & mask).unwrap(), f.element(c & mask).unwrap());
        prop_assert_eq!(f.mul(a, b).unwrap(), f.mul(b, a).unwrap());
        prop_assert_eq!(f.mul(a, b + c).unwrap(), f.mul(a, b).unwrap() + f.mul(a, c).unwrap());
        prop_assert_eq!(f.trace(a + b).unwrap(), f.trace(a).unwrap() ^ f.trace(b).unwrap());
        if !a.is_zero() {
            prop_assert_eq!(f.pow(a, f.group_order()).unwrap(), FieldElement::ONE);
        }
    }
}
