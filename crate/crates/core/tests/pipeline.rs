use proptest::prelude::*;
use x0n_core::arith::{self, invariants_of};
use x0n_core::divisors::{closed_form_vm, solve_vm, verify_closed_form, ClosedFormVector, CuspSide};
use x0n_core::fiber::{build_edixhoven, fiber_canonical_degree_check};
use x0n_core::linalg::{kernel_basis, rat, ratio};
use x0n_core::minimal::{blow_down_iterative, find_exceptional, minimal_fiber};
use x0n_core::selfint::{closed_form_coefficient, combine_pairings, finite_part, pair_vertical};
use x0n_core::{FiberModel, VerticalDivisor};

const PRIMES: [u64; 12] = [5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43];
const COFACTORS: [u64; 8] = [1, 7, 11, 13, 35, 77, 5 * 13, 7 * 11 * 13];

fn block() -> impl Strategy<Value = (u64, u32, u64)> {
    (
        prop::sample::select(PRIMES.to_vec()),
        1u32..=4,
        prop::sample::select(COFACTORS.to_vec()),
    )
        .prop_filter("p must not divide M", |(p, _, m)| m % p != 0)
        .prop_filter("skip genus-zero levels", |(p, n, m)| {
            !arith::EXCLUDED_LEVELS.contains(&(p.pow(*n) * m))
        })
}

fn correct_model(p: u64, n: u32, m: u64) -> FiberModel {
    minimal_fiber(p.pow(n) * m, p).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fibres_are_zariski_lattices((p, n, m) in block()) {
        let g = invariants_of(p.pow(n) * m).unwrap().g;
        for f in [build_edixhoven(p, n, m).unwrap(), correct_model(p, n, m)] {
            prop_assert!(f.matrix.is_symmetric());
            prop_assert!(f.row_sums().is_zero());
            prop_assert_eq!(kernel_basis(&f.matrix), vec![f.multiplicities().normalized_integral()]);
            prop_assert_eq!(fiber_canonical_degree_check(&f), rat(2 * g as i64 - 2));
            prop_assert!(verify_closed_form(&f, g).unwrap());
        }
    }

    #[test]
    fn minimal_model_is_a_fixpoint((p, n, m) in block()) {
        let f = correct_model(p, n, m);
        prop_assert!(find_exceptional(&f).is_empty());
        prop_assert_eq!(blow_down_iterative(&f).matrix, f.matrix);
    }

    #[test]
    fn solve_matches_closed_form((p, n, m) in block()) {
        let f = correct_model(p, n, m);
        let g = invariants_of(p.pow(n) * m).unwrap().g;
        for side in [CuspSide::Zero, CuspSide::Infinity] {
            prop_assert_eq!(solve_vm(&f, g, side).unwrap(), closed_form_vm(&f, ClosedFormVector::Particular(side)).unwrap());
        }
    }

    #[test]
    fn finite_part_identity_and_gauge((p, n, m) in block(), t_num in -20i64..20, t_den in 1i64..7) {
        let level = p.pow(n) * m;
        let g = invariants_of(level).unwrap().g;
        prop_assume!(g >= 2);
        let f = correct_model(p, n, m);
        let v0 = solve_vm(&f, g, CuspSide::Zero).unwrap();
        let vinf = solve_vm(&f, g, CuspSide::Infinity).unwrap();
        let base = combine_pairings(&f, g, &v0, &vinf).unwrap();
        prop_assert_eq!(&base, &closed_form_coefficient(p, n, m).unwrap());
        let t = ratio(t_num, t_den);
        let moved = combine_pairings(&f, g, &v0.shifted(&f, &t).unwrap(), &vinf.shifted(&f, &-t).unwrap()).unwrap();
        prop_assert_eq!(moved, base);
        // negative semidefinite, zero exactly on multiples of w
        prop_assert!(pair_vertical(&v0, &v0, &f).unwrap().coeff < rat(0));
        let w = VerticalDivisor { p, coefficients: f.multiplicities() };
        prop_assert_eq!(pair_vertical(&w, &w, &f).unwrap().coeff, rat(0));
    }
}

#[test]
fn finite_part_is_additive_over_primes() {
    for level in [385u64, 5005, 1225, 8575] {
        let r = finite_part(level).unwrap();
        let factored = arith::factor_level(level).unwrap();
        assert_eq!(r.primes.len(), factored.blocks.len());
        for (c, b) in r.primes.iter().zip(&factored.blocks) {
            assert_eq!((c.p, c.n, c.m), (b.p, b.n, b.m));
            assert_eq!(c.coeff, closed_form_coefficient(b.p, b.n, b.m).unwrap());
        }
        let float: f64 = r.log_weighted().iter().map(|x| x.to_f64()).sum();
        assert!((float - r.float_value).abs() < 1e-9);
    }
}

#[test]
fn serialized_types_round_trip() {
    let f = correct_model(13, 2, 1);
    let text = serde_json::to_string(&f).unwrap();
    assert_eq!(serde_json::from_str::<FiberModel>(&text).unwrap(), f);
    let v = solve_vm(&f, 8, CuspSide::Infinity).unwrap();
    let text = serde_json::to_string(&v).unwrap();
    assert_eq!(serde_json::from_str::<VerticalDivisor>(&text).unwrap(), v);
    let r = finite_part(169).unwrap();
    let back: x0n_core::FinitePartResult = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
    assert_eq!(back.primes, r.primes);
}
