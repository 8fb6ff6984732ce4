//! The bracket route to `k` against its printed closed formula.
//!
//! Oracle values come from an independent symbolic computation of
//! `-l21 / l11` and of the closed formula exactly as printed.

use crparallax_core::dsl::parse;
use crparallax_core::frame::{build_frame, k_closed_form, Tolerances};
use crparallax_core::{Base, GaussRational};
use num_bigint::BigInt;
use num_rational::BigRational;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn g(re: (i64, i64), im: (i64, i64)) -> GaussRational {
    GaussRational::new(q(re.0, re.1), q(im.0, im.1))
}

fn unit_point() -> Base<GaussRational> {
    Base {
        z1: g((1, 1), (0, 1)),
        z2: g((1, 1), (0, 1)),
        v: g((0, 1), (0, 1)),
    }
}

#[test]
fn routes_agree_without_v_dependence() {
    let expr = parse("re(z1)^4 / re(z2)^3").unwrap();
    let fr = build_frame(&expr, &unit_point(), 4, &Tolerances::default(), true).unwrap();
    let kc = k_closed_form(&expr, &unit_point(), 4).unwrap();
    assert_eq!(fr.k.value(), &g((1, 1), (0, 1)));
    assert_eq!(kc.value(), fr.k.value());
}

#[test]
fn printed_formula_departs_once_f_depends_on_v() {
    // Image of the quartic cone tube under z1 -> z1 + (i/2) w.
    let expr = parse("(re(z1) + v/2)^4 / re(z2)^3").unwrap();
    let fr = build_frame(&expr, &unit_point(), 4, &Tolerances::default(), true).unwrap();
    assert!(fr.admissible.is_admissible());
    let kc = k_closed_form(&expr, &unit_point(), 4).unwrap();
    assert_eq!(fr.k.value(), &g((1, 1), (1, 2)));
    assert_eq!(kc.value(), &g((-2, 1), (1, 1)));
}
