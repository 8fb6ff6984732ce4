//! The adapted frame `L1, L2, K, T` of a graphed hypersurface and the
//! scalars `k, l, P` obtained from its brackets.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::sync::Arc;

use crate::dsl::{eval_germ, Expr};
use crate::error::{EvalError, SeriesError};
use crate::field::FieldGerm;
use crate::scalar::Scalar;
use crate::series::{Base, Context, Germ, Var};

/// Thresholds for the floating backend. The exact backend replaces every
/// comparison by an exact zero test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub pivot: f64,
    pub rank: f64,
    pub two_nondeg: f64,
    pub flat: f64,
    pub identity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            pivot: 1e-9,
            rank: 1e-8,
            two_nondeg: 1e-9,
            flat: 1e-6,
            identity: 1e-7,
        }
    }
}

/// Pointwise admissibility data.
#[derive(Clone, Debug, PartialEq)]
pub struct Admissibility {
    pub levi_rank: u8,
    pub two_nondegenerate: bool,
    pub pivot_ok: bool,
    pub realness_ok: bool,
    pub residuals: BTreeMap<String, f64>,
}

impl Admissibility {
    pub fn is_admissible(&self) -> bool {
        self.levi_rank == 1 && self.pivot_ok && self.two_nondegenerate
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum FrameError {
    #[error("Levi form does not have rank 1 (rank {})", flags.levi_rank)]
    NotRankOne { flags: Admissibility },
    #[error("Levi entry l11 vanishes while the rank is 1; retry with z1 and z2 swapped (--swap-z)")]
    PivotDegenerate { flags: Admissibility },
    #[error("L1bar(k) vanishes: the hypersurface is not 2-nondegenerate here")]
    NotTwoNondegenerate { flags: Admissibility },
    #[error("cannot expand F at this point: {0}")]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

impl FrameError {
    pub fn flags(&self) -> Option<&Admissibility> {
        match self {
            FrameError::NotRankOne { flags }
            | FrameError::PivotDegenerate { flags }
            | FrameError::NotTwoNondegenerate { flags } => Some(flags),
            _ => None,
        }
    }

    /// Short machine-readable reason.
    pub fn reason(&self) -> &'static str {
        match self {
            FrameError::NotRankOne { .. } => "NotRankOne",
            FrameError::PivotDegenerate { .. } => "PivotDegenerate",
            FrameError::NotTwoNondegenerate { .. } => "NotTwoNondegenerate",
            FrameError::Eval(EvalError::DivisionByZeroGerm { .. }) => "DivisionByZeroGerm",
            FrameError::Eval(EvalError::Series(SeriesError::OrderExhausted { .. }))
            | FrameError::Series(SeriesError::OrderExhausted { .. }) => "OrderExhausted",
            FrameError::Eval(_) | FrameError::Series(_) => "SeriesError",
        }
    }
}

/// `sigma(Y) = Y^v - A1 Y^z1 - A2 Y^z2 - A1bar Y^zb1 - A2bar Y^zb2`.
pub fn sigma<S: Scalar>(a: &[Germ<S>; 4], y: &FieldGerm<S>) -> Result<Germ<S>, SeriesError> {
    let mut acc = y.coeff(Var::V).clone();
    for (ai, var) in a.iter().zip([Var::Z1, Var::Z2, Var::Z1Bar, Var::Z2Bar]) {
        let c = y.coeff(var);
        if !c.is_identically_zero() {
            acc = acc.try_sub(&ai.try_mul(c)?)?;
        }
    }
    Ok(acc)
}

/// Everything the invariants need at one point.
#[derive(Clone, Debug)]
pub struct FramePacket<S> {
    pub ctx: Arc<Context<S>>,
    pub f: Germ<S>,
    pub a1: Germ<S>,
    pub a2: Germ<S>,
    pub l1: FieldGerm<S>,
    pub l2: FieldGerm<S>,
    pub l1bar: FieldGerm<S>,
    pub l2bar: FieldGerm<S>,
    pub k_field: FieldGerm<S>,
    pub kbar_field: FieldGerm<S>,
    pub t: FieldGerm<S>,
    /// `levi[i][j] = sigma(i [L_{i+1}, conj L_{j+1}])` at the base.
    pub levi: [[S; 2]; 2],
    pub k: Germ<S>,
    pub l: Germ<S>,
    pub p: Germ<S>,
    pub admissible: Admissibility,
}

impl<S: Scalar> FramePacket<S> {
    pub fn base(&self) -> &Base<S> {
        self.ctx.base()
    }

    pub fn order(&self) -> usize {
        self.f.order()
    }

    /// Rebuilds `K` and `conj K` from a replacement `k`. Used for negative
    /// controls; admissibility flags are kept as they were.
    pub fn with_k(&self, k: Germ<S>) -> Result<Self, SeriesError> {
        let k_field = self.l1.scale_by(&k)?.try_add(&self.l2)?;
        let mut out = self.clone();
        out.kbar_field = k_field.conjugate();
        out.k_field = k_field;
        out.k = k;
        Ok(out)
    }
}

/// Pieces shared by [`build_frame`] and [`k_closed_form`].
fn expand<S: Scalar>(expr: &Expr, base: &Base<S>, order: usize) -> Result<(Arc<Context<S>>, Germ<S>), FrameError> {
    if order < 2 {
        return Err(SeriesError::OrderExhausted {
            needed: 2,
            available: order,
        }
        .into());
    }
    let ctx = Context::new(base.clone(), order);
    let f = eval_germ(expr, &ctx, order)?;
    Ok((ctx, f))
}

struct LeviData<S> {
    ctx: Arc<Context<S>>,
    f: Germ<S>,
    a: [Germ<S>; 4],
    l1: FieldGerm<S>,
    l2: FieldGerm<S>,
    l1bar: FieldGerm<S>,
    l2bar: FieldGerm<S>,
    t: FieldGerm<S>,
    l11: Germ<S>,
    l21: Germ<S>,
    levi: [[S; 2]; 2],
}

fn levi_data<S: Scalar>(expr: &Expr, base: &Base<S>, order: usize) -> Result<LeviData<S>, FrameError> {
    let (ctx, f) = expand(expr, base, order)?;
    let n1 = order - 1;
    let i = S::imag_unit();
    let fv = f.partial(Var::V)?;
    let denom = fv.scale(&i).add_scalar(&S::one());
    let a1 = f.partial(Var::Z1)?.scale(&-i.clone()).try_div(&denom)?;
    let a2 = f.partial(Var::Z2)?.scale(&-i.clone()).try_div(&denom)?;
    let a = [a1.clone(), a2.clone(), a1.involute(), a2.involute()];

    let mut c1 = FieldGerm::coordinate(&ctx, n1, Var::Z1).coeffs().clone();
    c1[Var::V.index()] = a1.clone();
    let l1 = FieldGerm::new(c1);
    let mut c2 = FieldGerm::coordinate(&ctx, n1, Var::Z2).coeffs().clone();
    c2[Var::V.index()] = a2.clone();
    let l2 = FieldGerm::new(c2);
    let l1bar = l1.conjugate();
    let l2bar = l2.conjugate();

    let t = l1.bracket(&l1bar)?.scale(&i);
    let l11 = sigma(&a, &t)?;
    let l12 = sigma(&a, &l1.bracket(&l2bar)?.scale(&i))?;
    let l21 = sigma(&a, &l2.bracket(&l1bar)?.scale(&i))?;
    let l22 = sigma(&a, &l2.bracket(&l2bar)?.scale(&i))?;
    let levi = [
        [l11.value().clone(), l12.value().clone()],
        [l21.value().clone(), l22.value().clone()],
    ];
    Ok(LeviData {
        ctx,
        f,
        a,
        l1,
        l2,
        l1bar,
        l2bar,
        t,
        l11,
        l21,
        levi,
    })
}

/// The Levi matrix `sigma(i [L_i, conj L_j])` at the base.
pub fn levi_matrix<S: Scalar>(expr: &Expr, base: &Base<S>, order: usize) -> Result<[[S; 2]; 2], FrameError> {
    Ok(levi_data(expr, base, order)?.levi)
}

/// Builds the frame at `base` from an F expanded to `order`.
///
/// Checks run in this order: Levi rank, pivot `l11`, then `L1bar(k)`.
pub fn build_frame<S: Scalar>(
    expr: &Expr,
    base: &Base<S>,
    order: usize,
    tol: &Tolerances,
    realness_ok: bool,
) -> Result<FramePacket<S>, FrameError> {
    let LeviData {
        ctx,
        f,
        a,
        l1,
        l2,
        l1bar,
        l2bar,
        t,
        l11,
        l21,
        levi,
    } = levi_data(expr, base, order)?;
    let a1 = a[0].clone();
    let a2 = a[1].clone();

    let mut flags = Admissibility {
        levi_rank: 0,
        two_nondegenerate: false,
        pivot_ok: false,
        realness_ok,
        residuals: BTreeMap::new(),
    };
    let det = levi[0][0].clone() * levi[1][1].clone() - levi[0][1].clone() * levi[1][0].clone();
    let norm2: f64 = levi.iter().flatten().map(|x| x.modulus() * x.modulus()).sum();
    let norm = libm::sqrt(norm2);
    let det_ratio = det.modulus() / (norm2 + tol.rank);
    flags.residuals.insert("levi_norm".into(), norm);
    flags.residuals.insert("rank_det".into(), det_ratio);
    let all_zero = levi.iter().flatten().all(|x| x.is_negligible(tol.pivot));
    flags.levi_rank = if all_zero {
        0
    } else if (S::EXACT && det.is_zero()) || (!S::EXACT && det_ratio < tol.rank) {
        1
    } else {
        2
    };
    if flags.levi_rank != 1 {
        return Err(FrameError::NotRankOne { flags });
    }
    let pivot_scale = tol.pivot * norm.max(1.0);
    flags.pivot_ok = !levi[0][0].is_negligible(pivot_scale);
    flags.residuals.insert("pivot".into(), levi[0][0].modulus());
    if !flags.pivot_ok {
        return Err(FrameError::PivotDegenerate { flags });
    }

    let k = -&l21.try_div(&l11)?;
    let elim2 = k.value().clone() * levi[0][1].clone() + levi[1][1].clone();
    flags.residuals.insert("elim_second_row".into(), elim2.modulus() / norm.max(f64::MIN_POSITIVE));
    let k_field = l1.scale_by(&k)?.try_add(&l2)?;
    let kbar_field = k_field.conjugate();

    let lbk = l1bar.apply(&k)?;
    flags.residuals.insert("l1bar_k".into(), lbk.value().modulus());
    flags.two_nondegenerate = !lbk.value().is_negligible(tol.two_nondeg * k.value().modulus().max(1.0));
    if !flags.two_nondegenerate {
        return Err(FrameError::NotTwoNondegenerate { flags });
    }

    let sig_res = [&l1, &l2, &l1bar, &l2bar]
        .iter()
        .map(|x| sigma(&a, x).map(|g| g.value().modulus()))
        .try_fold(0.0f64, |m, r| r.map(|r| m.max(r)))?;
    flags.residuals.insert("sigma_annihilates".into(), sig_res);

    let l = sigma(&a, &t)?;
    let lt = l1.bracket(&t)?;
    let p = sigma(&a, &lt)?.try_div(&l)?;

    Ok(FramePacket {
        ctx,
        f,
        a1,
        a2,
        l1,
        l2,
        l1bar,
        l2bar,
        k_field,
        kbar_field,
        t,
        levi,
        k,
        l,
        p,
        admissible: flags,
    })
}

/// The slope `k` from its closed expression in the partials of F (with
/// `w` standing for `zb`):
///
/// ```text
/// num = F_{z2 w1}(1 + F_v^2) - i F_{w1} F_{z2 v} - F_{w1} F_v F_{v z2}
///       + i F_{z2} F_{w1} F_{vv} - F_{z2} F_v F_{v w1}
/// den = F_{z1 w1}(1 + F_v^2) - i F_{w1} F_{z1 v} - F_{w1} F_v F_{z1 v}
///       + i F_{z1} F_{w1 v} + F_{z1} F_{w1} F_{vv} - F_{z1} F_v F_{v w1}
/// k = -num / den
/// ```
///
/// Kept only as a cross-check of the bracket-based `k`.
pub fn k_closed_form<S: Scalar>(expr: &Expr, base: &Base<S>, order: usize) -> Result<Germ<S>, FrameError> {
    let (_, f) = expand(expr, base, order)?;
    let i = S::imag_unit();
    let d = |a: Var| f.partial(a);
    let dd = |a: Var, b: Var| f.partial(a).and_then(|g| g.partial(b));
    let (fz1, fz2, fw1, fv) = (d(Var::Z1)?, d(Var::Z2)?, d(Var::Z1Bar)?, d(Var::V)?);
    let fz2w1 = dd(Var::Z2, Var::Z1Bar)?;
    let fz1w1 = dd(Var::Z1, Var::Z1Bar)?;
    let fz2v = dd(Var::Z2, Var::V)?;
    let fz1v = dd(Var::Z1, Var::V)?;
    let fw1v = dd(Var::Z1Bar, Var::V)?;
    let fvv = dd(Var::V, Var::V)?;
    let fv2 = &fv * &fv;
    let num = &(&(&fz2w1 + &(&fz2w1 * &fv2)) - &(&fw1 * &fz2v).scale(&i))
        - &(&(&fw1 * &fv) * &fz2v)
        + (&(&fz2 * &fw1) * &fvv).scale(&i)
        - &(&fz2 * &fv) * &fw1v;
    let den = &(&(&fz1w1 + &(&fz1w1 * &fv2)) - &(&fw1 * &fz1v).scale(&i))
        - &(&(&fw1 * &fv) * &fz1v)
        + (&fz1 * &fw1v).scale(&i)
        + &(&fz1 * &fw1) * &fvv
        - &(&fz1 * &fv) * &fw1v;
    Ok(-&num.try_div(&den)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;
    use alloc::string::ToString;
    use crate::scalar::{GaussRational, C64};
    use num_bigint::BigInt;
    use num_rational::BigRational;

    const MODEL: &str =
        "(z1*conj(z1) + (1/2)*z1^2*conj(z2) + (1/2)*conj(z1)^2*z2) / (1 - z2*conj(z2))";

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn gq(a: (i64, i64), b: (i64, i64)) -> GaussRational {
        GaussRational::new(q(a.0, a.1), q(b.0, b.1))
    }

    fn origin<S: Scalar>() -> Base<S> {
        Base {
            z1: S::zero(),
            z2: S::zero(),
            v: S::zero(),
        }
    }

    fn build<S: Scalar>(text: &str, base: &Base<S>, order: usize) -> Result<FramePacket<S>, FrameError> {
        build_frame(&parse(text).unwrap(), base, order, &Tolerances::default(), true)
    }

    #[test]
    fn sphere_like_has_full_rank() {
        let err = build::<GaussRational>("z1*conj(z1) + z2*conj(z2)", &origin(), 4).unwrap_err();
        let FrameError::NotRankOne { flags } = err else { panic!("{err:?}") };
        assert_eq!(flags.levi_rank, 2);
        // The floating backend agrees.
        let err = build::<C64>("z1*conj(z1) + z2*conj(z2)", &origin(), 4).unwrap_err();
        assert_eq!(err.reason(), "NotRankOne");
    }

    #[test]
    fn sphere_like_levi_entries() {
        // Hand computation: l11 = l22 = -2, l12 = l21 = 0.
        let e = parse("z1*conj(z1) + z2*conj(z2)").unwrap();
        let levi = levi_matrix::<GaussRational>(&e, &origin(), 3).unwrap();
        assert_eq!(levi[0][0], GaussRational::from_int(-2));
        assert_eq!(levi[1][1], GaussRational::from_int(-2));
        assert!(levi[0][1].is_zero() && levi[1][0].is_zero());
    }

    #[test]
    fn cylinder_like_is_two_degenerate() {
        let err = build::<GaussRational>("z1*conj(z1)", &origin(), 4).unwrap_err();
        assert_eq!(err.reason(), "NotTwoNondegenerate");
        let f = err.flags().unwrap();
        assert_eq!(f.levi_rank, 1);
        assert!(f.pivot_ok);
    }

    #[test]
    fn levi_flat_is_rank_zero() {
        let err = build::<C64>("re(z1) + im(z2)", &origin(), 3).unwrap_err();
        assert_eq!(err.flags().unwrap().levi_rank, 0);
    }

    #[test]
    fn pivot_degenerate_when_z1_is_in_the_kernel() {
        let err = build::<GaussRational>("z2*conj(z2) + z1*conj(z2)^2 + conj(z1)*z2^2", &origin(), 4)
            .unwrap_err();
        assert_eq!(err.reason(), "PivotDegenerate");
        assert!(err.to_string().contains("--swap-z"));
    }

    #[test]
    fn model_at_origin() {
        let fr = build::<GaussRational>(MODEL, &origin(), 4).unwrap();
        assert!(fr.k.value().is_zero());
        assert!(fr.admissible.is_admissible());
        let lbk = fr.l1bar.apply(&fr.k).unwrap();
        assert!(!lbk.value().is_zero());
    }

    #[test]
    fn model_at_rational_point_matches_oracle() {
        // Independent symbolic evaluation at z1 = 1/10 + i/5, z2 = -1/5 + i/10, v = 1/7.
        let base = Base {
            z1: gq((1, 10), (1, 5)),
            z2: gq((-1, 5), (1, 10)),
            v: gq((1, 7), (0, 1)),
        };
        let fr = build::<GaussRational>(MODEL, &base, 4).unwrap();
        assert_eq!(*fr.k.value(), gq((-2, 19), (5, 19)));
        assert_eq!(*fr.l1bar.apply(&fr.k).unwrap().value(), gq((-20, 19), (0, 1)));
        assert_eq!(*fr.l.value(), gq((-40, 19), (0, 1)));
        assert!(fr.p.value().is_zero());
    }

    #[test]
    fn cone_quartic_at_unit_point_matches_oracle() {
        let base = Base {
            z1: GaussRational::from_int(1),
            z2: GaussRational::from_int(1),
            v: GaussRational::from_int(0),
        };
        let fr = build::<GaussRational>("re(z1)^4 / re(z2)^3", &base, 4).unwrap();
        assert_eq!(*fr.k.value(), GaussRational::from_int(1));
        assert_eq!(*fr.l1bar.apply(&fr.k).unwrap().value(), gq((1, 2), (0, 1)));
        assert_eq!(*fr.p.value(), GaussRational::from_int(1));
        assert_eq!(*fr.l.value(), GaussRational::from_int(-6));
    }

    #[test]
    fn frame_identities_at_a_generic_point() {
        let base = Base {
            z1: C64::new(0.12, -0.2),
            z2: C64::new(0.05, 0.21),
            v: C64::new(-0.1, 0.0),
        };
        let fr = build::<C64>(MODEL, &base, 5).unwrap();
        assert!(fr.admissible.residuals["sigma_annihilates"] < 1e-10);
        assert!(fr.admissible.residuals["elim_second_row"] < 1e-8);
        // T is real and purely along d/dv.
        let tb = fr.t.conjugate();
        for v in Var::ALL {
            assert!(tb.coeff(v).approx_eq(fr.t.coeff(v), 1e-10));
        }
        for v in [Var::Z1, Var::Z2, Var::Z1Bar, Var::Z2Bar] {
            assert!(fr.t.coeff(v).max_abs() < 1e-10);
        }
        // [L1, T] = P T.
        let lt = fr.l1.bracket(&fr.t).unwrap();
        let pt = fr.t.scale_by(&fr.p).unwrap();
        assert!(lt.try_sub(&pt).unwrap().max_abs() < 1e-9 * lt.max_abs().max(1.0));
    }

    #[test]
    fn closed_form_k_on_model() {
        let k0 = k_closed_form::<GaussRational>(&parse(MODEL).unwrap(), &origin(), 3).unwrap();
        assert!(k0.value().is_zero());
        let kc = k_closed_form::<GaussRational>(&parse("z1*conj(z1)").unwrap(), &origin(), 3).unwrap();
        assert!(kc.value().is_zero());
    }

    #[test]
    fn order_below_two_is_rejected() {
        let err = build::<C64>(MODEL, &origin(), 1).unwrap_err();
        assert_eq!(err.reason(), "OrderExhausted");
    }

    #[test]
    fn singular_denominator_in_f() {
        let base = Base {
            z1: C64::new(0.0, 0.0),
            z2: C64::new(1.0, 0.0),
            v: C64::new(0.0, 0.0),
        };
        let err = build::<C64>(MODEL, &base, 4).unwrap_err();
        assert_eq!(err.reason(), "DivisionByZeroGerm");
    }
}
