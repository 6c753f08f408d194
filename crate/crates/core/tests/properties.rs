use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{One, Signed};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use urnmix::combinatorics::{binomial, char_ratio_two_row, dim_two_row};
use urnmix::exact::evolve_path;
use urnmix::model::{full_mask, Mask};
use urnmix::montecarlo::{self, SimConfig};
use urnmix::spectral::{l2n_sq_bound, moment_s1};
use urnmix::{catalog_for, kernel_row, ChainModel, Family, ModelSpec, State};

fn family() -> impl Strategy<Value = Family> {
    prop::sample::select(Family::ALL.to_vec())
}

/// `(n, r)` with `n` in `lo..=hi`.
fn params(lo: usize, hi: usize) -> impl Strategy<Value = (usize, usize)> {
    (lo..=hi).prop_flat_map(|n| (Just(n), 1..=n / 2))
}

/// A uniformly shuffled `r`-subset of `n` balls plus arbitrary charges.
fn random_state(n: usize, r: usize, signed: bool, seed: u64) -> State {
    use rand::seq::SliceRandom;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut balls: Vec<usize> = (0..n).collect();
    balls.shuffle(&mut rng);
    let rack1 = balls[..r].iter().fold(0 as Mask, |m, &b| m | 1 << b);
    let signs = if signed {
        (rand::Rng::gen::<u128>(&mut rng)) & full_mask(n)
    } else {
        0
    };
    State { rack1, signs }
}

fn chain(f: Family, n: usize, r: usize) -> Box<dyn ChainModel> {
    ModelSpec::new(f, n, r).unwrap().build().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn catalog_dimensions_sum_to_state_count(f in family(), (n, r) in params(2, 40)) {
        prop_assume!(!f.is_signed() || n <= 24);
        let cat = catalog_for(f, n, r).unwrap();
        let mut want = binomial(n as u64, r as i64);
        if f.is_signed() {
            want <<= n;
        }
        prop_assert_eq!(cat.total_dimension(), want);
    }

    #[test]
    fn one_unit_eigenvalue_and_bounded_spectrum(f in family(), (n, r) in params(2, 30)) {
        let cat = catalog_for(f, n, r).unwrap();
        let one = Ratio::<i64>::one();
        let units: Vec<_> = cat.entries.iter().filter(|e| e.eigenvalue == one).collect();
        prop_assert_eq!(units.len(), 1);
        prop_assert!(cat.is_trivial(&units[0].label));
        for e in cat.nontrivial() {
            prop_assert!(e.eigenvalue.abs() <= one);
            if f != Family::Classical {
                prop_assert!(e.eigenvalue.abs() < one);
            }
        }
    }

    #[test]
    fn bound_is_nonincreasing(f in family(), (n, r) in params(2, 40), k in 1u64..400) {
        let cat = catalog_for(f, n, r).unwrap();
        prop_assert!(l2n_sq_bound(&cat, k) <= l2n_sq_bound(&cat, k - 1));
    }

    #[test]
    fn two_row_basics(n in 2i64..60) {
        prop_assert_eq!(char_ratio_two_row(n, 0).unwrap(), Ratio::one());
        for i in 0..=n / 2 {
            prop_assert!(dim_two_row(n as u64, i as u64).unwrap() >= BigUint::one());
        }
    }

    #[test]
    fn kernel_rows_are_distributions(f in family(), (n, r) in params(2, 12), seed in any::<u64>()) {
        let c = chain(f, n, r);
        let state = random_state(n, r, f.is_signed(), seed);
        let row = kernel_row(c.as_ref(), state).unwrap();
        prop_assert_eq!(row.total(), Ratio::one());
        for (target, w) in &row.entries {
            prop_assert!(c.is_valid_state(*target));
            prop_assert!(*w > Ratio::from_integer(0));
        }
        if f == Family::Classical {
            let unit = Ratio::new(1, (r * (n - r)) as i64);
            prop_assert!(row.entries.len() <= r * (n - r));
            for (_, w) in &row.entries {
                prop_assert!((w / unit).is_integer());
            }
        }
    }

    #[test]
    fn sampled_steps_stay_in_the_space(f in family(), (n, r) in params(2, 64), seed in any::<u64>()) {
        let c = chain(f, n, r);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = c.initial_state();
        for _ in 0..50 {
            s = c.step(s, &mut rng);
            prop_assert!(c.is_valid_state(s));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn evolution_keeps_mass_and_contracts(f in family(), (n, r) in params(2, 8)) {
        prop_assume!(!f.is_signed() || n <= 6);
        let c = chain(f, n, r);
        let path = evolve_path(c.as_ref(), 12).unwrap();
        for d in &path {
            prop_assert!((d.total_mass() - 1.0).abs() < 1e-12);
        }
        for w in path.windows(2) {
            prop_assert!(w[1].tv_distance() <= w[0].tv_distance() + 1e-15);
        }
    }
}

#[test]
fn simulated_s1_mean_matches_moment_for_every_family() {
    for (f, n, r) in [
        (Family::Variant, 20, 7),
        (Family::IndependentFlips, 20, 7),
        (Family::PairedFlips, 20, 10),
        (Family::Variant, 64, 32),
    ] {
        let c = chain(f, n, r);
        let k = n as u64;
        let cfg = SimConfig {
            model: c.spec(),
            k,
            walkers: 20_000,
            seed: 5,
        };
        let s = montecarlo::run(c.as_ref(), &cfg).unwrap();
        let z = (s.mean_s1 - moment_s1(n, k)).abs() / s.stderr_s1;
        assert!(z <= 4.0, "{}: {} standard errors", c.spec(), z);
    }
}
