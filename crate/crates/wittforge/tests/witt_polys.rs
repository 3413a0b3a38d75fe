use num_bigint::BigInt;
use proptest::prelude::*;
use wittforge::witt_core::{witt_poly, WittKind, WittVector};

fn ints(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

/// `(p, i, kind, terms, sum of |coefficients|, point, value)`.
type Reference = (u64, usize, WittKind, usize, i64, &'static [i64], i64);

// Term count, sum of absolute coefficients and value at a fixed point,
// taken from an independent computer-algebra expansion of the ghost
// recursion.
#[test]
fn universal_polynomials_match_reference_expansion() {
    let cases: [Reference; 4] = [
        (
            2,
            3,
            WittKind::Sum,
            40,
            93,
            &[2, -1, 3, 1, -2, 4, 1, 5],
            -469,
        ),
        (3, 2, WittKind::Sum, 24, 74, &[2, -1, 3, 1, -2, 4], -1883),
        (2, 2, WittKind::Product, 9, 16, &[2, -1, 3, 1, -2, 4], 171),
        (5, 1, WittKind::Product, 3, 7, &[2, -1, 3, 1], -216),
    ];
    for (p, i, kind, terms, abs_sum, point, value) in cases {
        let poly = witt_poly(p, i, kind).unwrap();
        assert_eq!(poly.terms.len(), terms, "p={p} i={i} {kind:?}");
        let s: BigInt = poly
            .terms
            .iter()
            .map(|(_, c)| BigInt::from(c.magnitude().clone()))
            .sum();
        assert_eq!(s, BigInt::from(abs_sum), "p={p} i={i} {kind:?}");
        assert_eq!(
            poly.eval_int(&ints(point)),
            BigInt::from(value),
            "p={p} i={i} {kind:?}"
        );
    }
}

#[test]
fn first_sum_polynomial_for_two() {
    // S_1 = X_1 + Y_1 - X_0 Y_0 when p = 2.
    let s1 = witt_poly(2, 1, WittKind::Sum).unwrap();
    let text = s1.serialize();
    assert_eq!(
        text,
        "wittforge-cache v1 p=2 kind=sum i=1\n\
         1 X0^0 X1^0 Y0^0 Y1^1\n\
         1 X0^0 X1^1 Y0^0 Y1^0\n\
         -1 X0^1 X1^0 Y0^1 Y1^0\n"
    );
}

#[test]
fn sum_polynomials_are_weighted_homogeneous() {
    for p in [2, 3] {
        for i in 0..=3 {
            assert!(witt_poly(p, i, WittKind::Sum)
                .unwrap()
                .is_weighted_homogeneous());
            assert!(witt_poly(p, i, WittKind::Product)
                .unwrap()
                .is_weighted_homogeneous());
        }
    }
}

fn vector(p: u64, v: &[i64]) -> WittVector<BigInt> {
    WittVector::new(p, ints(v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ghost_map_is_a_ring_map(
        p in prop::sample::select(vec![2u64, 3, 5]),
        x in prop::collection::vec(-50i64..50, 3),
        y in prop::collection::vec(-50i64..50, 3),
    ) {
        let (a, b) = (vector(p, &x), vector(p, &y));
        let (ga, gb) = (a.ghost().unwrap(), b.ghost().unwrap());
        let sum = a.add(&b).unwrap().ghost().unwrap();
        let prod = a.mul(&b).unwrap().ghost().unwrap();
        let neg = a.neg().unwrap().ghost().unwrap();
        for k in 0..3 {
            prop_assert_eq!(&sum[k], &(&ga[k] + &gb[k]));
            prop_assert_eq!(&prod[k], &(&ga[k] * &gb[k]));
            prop_assert_eq!(&neg[k], &(-&ga[k]));
        }
    }

    #[test]
    fn subtraction_inverts_addition(
        p in prop::sample::select(vec![2u64, 3]),
        x in prop::collection::vec(-30i64..30, 3),
        y in prop::collection::vec(-30i64..30, 3),
    ) {
        let (a, b) = (vector(p, &x), vector(p, &y));
        prop_assert_eq!(a.add(&b).unwrap().sub(&b).unwrap().coords, a.coords);
    }
}
