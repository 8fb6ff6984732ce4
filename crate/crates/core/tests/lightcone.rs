//! End-to-end checks on the light-cone model.

use std::time::Instant;

use crparallax_core::dsl::parse;
use crparallax_core::frame::{build_frame, Tolerances};
use crparallax_core::invariants::{Invariants, PointClass};
use crparallax_core::verify::check_model_algebra;
use crparallax_core::{Base, GaussRational, Scalar, C64};
use num_bigint::BigInt;
use num_rational::BigRational;

const MODEL: &str = "(z1*conj(z1) + (1/2)*z1^2*conj(z2) + (1/2)*conj(z1)^2*z2) / (1 - z2*conj(z2))";

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[test]
fn exact_flatness_at_rational_points() {
    let expr = parse(MODEL).unwrap();
    let t = Instant::now();
    for (a, b, c) in [(1, 5, 1), (-1, 7, 2), (2, 9, -1)] {
        let base = Base {
            z1: GaussRational::new(q(a, 10), q(b, 10)),
            z2: GaussRational::new(q(b, 11), q(-a, 13)),
            v: GaussRational::new(q(c, 9), q(0, 1)),
        };
        let fr = build_frame(&expr, &base, 6, &Tolerances::default(), true).unwrap();
        let inv = Invariants::compute(&fr).unwrap();
        assert!(Scalar::is_zero(inv.j.value()));
        assert!(Scalar::is_zero(inv.w.value()));
    }
    eprintln!("exact: {:?}", t.elapsed());
}

#[test]
fn floating_flatness_order_eight() {
    let expr = parse(MODEL).unwrap();
    let t = Instant::now();
    let base = Base {
        z1: C64::new(0.21, -0.13),
        z2: C64::new(-0.08, 0.27),
        v: C64::new(0.11, 0.0),
    };
    let fr = build_frame(&expr, &base, 8, &Tolerances::default(), true).unwrap();
    let inv = Invariants::compute(&fr).unwrap();
    assert_eq!(inv.point_class(&Tolerances::default()), PointClass::Flat);
    eprintln!("floating: {:?}", t.elapsed());
}

#[test]
fn flat_model_table_closes() {
    assert!(check_model_algebra().passed);
}
