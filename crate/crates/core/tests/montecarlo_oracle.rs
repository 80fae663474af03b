//! Simulated correlator output against the closed-form second moment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use masklab_core::masks::{random_mask, singer_mask, Mask};
use masklab_core::montecarlo::{self, estimate, simulate_grid, validate_grid, EchoScenario, ValidationConfig};
use masklab_core::response::ScenarioParams;
use masklab_core::Constellation;

fn desk_masks() -> Vec<Mask> {
    vec![singer_mask(3).unwrap(), random_mask(15, 6, 3).unwrap(), singer_mask(5).unwrap()]
}

#[test]
fn desk_grid_agrees_with_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut flagged = 0;
    let mut total = 0;
    for mask in desk_masks() {
        let n = mask.period();
        for pulses in [2, 4, 8] {
            for c in [Constellation::qpsk(), Constellation::qam16()] {
                let p = ScenarioParams::with_constellation(mask.clone(), pulses, &c).unwrap();
                let k = rng.gen_range(1..n);
                let l_set = [k, rng.gen_range(1..n)];
                let nu_set: Vec<usize> = (0..3).map(|_| rng.gen_range(0..n * pulses)).chain([0]).collect();
                let cfg = ValidationConfig { trials: 10_000, seed: rng.gen(), ..ValidationConfig::default() };
                let report = validate_grid(&p, &c, &[k], &l_set, &nu_set, cfg).unwrap();
                flagged += report.flagged();
                total += report.points.len();
                assert!(report.max_abs_z() < 6.0, "N={n} M={pulses} {:?}: {:?}", c.name(), report.points);
            }
        }
    }
    assert!((flagged as f64) < 0.02 * total as f64, "{flagged} of {total} flagged");
}

#[test]
fn constant_modulus_diagonal_is_deterministic() {
    let mask = singer_mask(3).unwrap();
    let p = ScenarioParams::with_constellation(mask.clone(), 4, &Constellation::qpsk()).unwrap();
    let cfg = ValidationConfig { trials: 50, ..ValidationConfig::default() };
    let report = validate_grid(&p, &Constellation::qpsk(), &[1, 2, 3], &[1, 2, 3], &[0, 1, 4, 9], cfg).unwrap();
    for pt in report.points.iter().filter(|pt| pt.k == pt.l) {
        assert!(pt.mc_se < 1e-9, "{pt:?}");
        assert_eq!(pt.z, 0.0);
    }
    assert!(report.passed());
}

#[test]
fn only_the_doppler_difference_matters() {
    let mask = singer_mask(4).unwrap();
    let c = Constellation::qam16();
    let base = EchoScenario::new(mask.clone(), 4, c.clone(), 3, 0, 7).unwrap();
    let moved = EchoScenario::new(mask, 4, c, 3, 20, 27).unwrap();
    assert_eq!(base.mismatch(), moved.mismatch());
    assert_eq!(estimate(&base, 5, 200, 9).unwrap(), estimate(&moved, 5, 200, 9).unwrap());
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let mask = singer_mask(4).unwrap();
    let c = Constellation::qam16();
    let p = ScenarioParams::with_constellation(mask, 2, &c).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate_grid(&p, &c, &[1, 6], &[1, 2], &[0, 5], 500, 77, u64::MAX).unwrap())
    };
    let one = run(1);
    let four = run(4);
    assert_eq!(one.values, four.values);
    assert_eq!(one.se, four.se);
}

#[test]
fn streams_start_before_the_cpi() {
    let mask = singer_mask(3).unwrap();
    let s = montecarlo::draw_stream(&mask, 2, &Constellation::qpsk(), 1);
    assert_eq!(s.start(), -6);
    assert_eq!(s.len(), 6 + 14);
}

#[test]
fn budget_is_enforced() {
    let mask = singer_mask(5).unwrap();
    let c = Constellation::qpsk();
    let p = ScenarioParams::with_constellation(mask, 8, &c).unwrap();
    let err = simulate_grid(&p, &c, &[1], &[1], &[0, 1], 1000, 0, 1000).unwrap_err();
    assert!(matches!(err, montecarlo::MonteCarloError::BudgetExceeded { required: 496_000, budget: 1000 }));
}
