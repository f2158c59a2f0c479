use std::sync::Arc;

use kp_core::opcalc::{weierstrass, DiffOp, Direction};
use kp_core::ring::{int, rat, Matrix, Rational, Series, VarTable};
use proptest::prelude::*;

fn table() -> Arc<VarTable> {
    VarTable::builder().var("x", 4).var("y", 3).build().unwrap()
}

fn small_rat() -> impl Strategy<Value = Rational> {
    (-4i64..=4, 1i64..=3).prop_map(|(p, q)| rat(p, q))
}

/// Random series over `x^a y^b`, `a <= 4`, `b <= 3`.
fn series() -> impl Strategy<Value = Series<Rational>> {
    prop::collection::vec(((0i32..=4, 0i32..=3), small_rat()), 0..8).prop_map(|terms| {
        let vars = table();
        let mut s = Series::zero(&vars);
        for ((a, b), c) in terms {
            s.add_term(vec![a, b], c);
        }
        s
    })
}

fn without_constant(s: Series<Rational>) -> Series<Rational> {
    s.filter(|e| e.iter().any(|&k| k != 0))
}

fn with_constant(s: Series<Rational>, c: Rational) -> Series<Rational> {
    without_constant(s).add(&Series::constant(&table(), c))
}

fn nonzero_rat() -> impl Strategy<Value = Rational> {
    small_rat().prop_filter("nonzero", |r| *r != int(0))
}

/// Matrix whose constant part is diagonal and invertible.
fn matrix() -> impl Strategy<Value = Matrix<Series<Rational>>> {
    (1usize..=3).prop_flat_map(|n| {
        (
            prop::collection::vec(series(), n * n),
            prop::collection::vec(nonzero_rat(), n),
        )
            .prop_map(move |(entries, diag)| {
                Matrix::from_fn(n, |i, j| {
                    let e = without_constant(entries[i * n + j].clone());
                    if i == j {
                        with_constant(e, diag[i].clone())
                    } else {
                        e
                    }
                })
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trace_log_determinant_matches_cofactor(a in matrix()) {
        prop_assert_eq!(a.det_trlog().unwrap(), a.det_cofactor());
    }

    #[test]
    fn sqrt_squares_back(f in series(), p in 1i64..=5, q in 1i64..=4) {
        let f = with_constant(f, rat(p * p, q * q));
        let r = f.sqrt().unwrap();
        prop_assert_eq!(r.constant_term(), rat(p, q));
        prop_assert_eq!(r.mul(&r), f);
    }

    #[test]
    fn exp_and_log_are_inverse(g in series()) {
        let g = without_constant(g);
        let e = g.exp().unwrap();
        prop_assert_eq!(e.log().unwrap(), g.clone());
        let f = with_constant(g, int(1));
        prop_assert_eq!(f.log().unwrap().exp().unwrap(), f);
    }

    #[test]
    fn inverse_and_rational_powers(f in series(), c in nonzero_rat()) {
        let f = with_constant(f, c);
        prop_assert_eq!(f.mul(&f.inv().unwrap()), Series::one(&table()));
        let u = f.scale(&f.constant_term().recip());
        let third = u.pow_rational(&rat(1, 3)).unwrap();
        prop_assert_eq!(third.pow(3), u);
    }

    /// Computing under large caps and then truncating agrees with truncating
    /// the factors first.
    #[test]
    fn truncation_is_coherent(f in series(), g in series(), cx in 0i32..=4, cy in 0i32..=3) {
        let small = VarTable::builder().var("x", cx).var("y", cy).build().unwrap();
        let big = f.mul(&g).embed(&small).unwrap();
        let early = f.embed(&small).unwrap().mul(&g.embed(&small).unwrap());
        prop_assert_eq!(big, early);
        prop_assert_eq!(
            f.truncate(&[("x", cx), ("y", cy)]).unwrap().embed(&small).unwrap(),
            f.embed(&small).unwrap()
        );
    }

    #[test]
    fn lowering_operators_certified_iff_a_variable_is_always_lowered(words in prop::collection::vec(prop::collection::vec(0usize..2, 1..3), 1..4), c in nonzero_rat()) {
        let vars = table();
        let names = ["x", "y"];
        let mut op = DiffOp::zero(&vars);
        for w in &words {
            let w: Vec<&str> = w.iter().map(|&i| names[i]).collect();
            op = op.plus(DiffOp::partials(&vars, c.clone(), &w).unwrap());
        }
        // a certificate exists exactly when some variable is lowered by every word
        let common = (0..2).find(|k| words.iter().all(|w| w.contains(k)));
        match (op.certificate(), common) {
            (Ok(cert), Some(_)) => {
                prop_assert_eq!(cert.direction, -1);
                let k = names.iter().position(|n| *n == cert.var).unwrap();
                prop_assert!(words.iter().all(|w| w.contains(&k)));
            }
            (Err(_), None) => {}
            (cert, common) => prop_assert!(false, "{:?} vs {:?}", cert, common),
        }
    }

    #[test]
    fn mixed_direction_operators_are_rejected(f in series()) {
        let vars = table();
        let raise = DiffOp::term(Series::var(&vars, "x").unwrap().pow(2), vec![]);
        let op = raise.plus(DiffOp::partials(&vars, int(1), &["x"]).unwrap());
        prop_assert!(op.certificate().is_err());
        prop_assert!(op.exp_apply(&f).is_err());
    }

    #[test]
    fn heat_transform_roundtrip(f in series()) {
        let vars = VarTable::builder().var("x", 4).var("y", 3).build().unwrap();
        let f = f.embed(&vars).unwrap();
        let fwd = weierstrass(&f, "x", "y", Direction::Forward).unwrap();
        prop_assert_eq!(weierstrass(&fwd, "x", "y", Direction::Inverse).unwrap(), f);
    }
}
