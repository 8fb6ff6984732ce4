//! Complex vector fields with germ coefficients in the basis
//! `d/dz1, d/dz2, d/dzb1, d/dzb2, d/dv`.

use alloc::sync::Arc;

use crate::error::SeriesError;
use crate::scalar::Scalar;
use crate::series::{Context, Germ, Var, NVARS};

#[derive(Clone, Debug)]
pub struct FieldGerm<S> {
    coeffs: [Germ<S>; NVARS],
}

impl<S: Scalar> FieldGerm<S> {
    /// Coefficients are truncated to their common order.
    pub fn new(coeffs: [Germ<S>; NVARS]) -> Self {
        let n = coeffs.iter().map(Germ::order).min().unwrap();
        FieldGerm {
            coeffs: coeffs.map(|g| g.truncate(n)),
        }
    }

    pub fn zero(ctx: &Arc<Context<S>>, order: usize) -> Self {
        FieldGerm {
            coeffs: core::array::from_fn(|_| Germ::zero(ctx, order)),
        }
    }

    /// The coordinate field `d/d var`.
    pub fn coordinate(ctx: &Arc<Context<S>>, order: usize, var: Var) -> Self {
        let mut f = Self::zero(ctx, order);
        f.coeffs[var.index()] = Germ::constant(ctx, order, S::one());
        f
    }

    pub fn coeff(&self, var: Var) -> &Germ<S> {
        &self.coeffs[var.index()]
    }

    pub fn coeffs(&self) -> &[Germ<S>; NVARS] {
        &self.coeffs
    }

    pub fn order(&self) -> usize {
        self.coeffs[0].order()
    }

    /// `X(f) = sum_i X^i df/dx_i`. The order is `min(order X, order f - 1)`.
    pub fn apply(&self, f: &Germ<S>) -> Result<Germ<S>, SeriesError> {
        Ok(self.apply_with_scale(f)?.0)
    }

    /// `X(f)` together with the largest magnitude among the summands
    /// `X^i df/dx_i`.
    pub fn apply_with_scale(&self, f: &Germ<S>) -> Result<(Germ<S>, f64), SeriesError> {
        if f.order() == 0 {
            return Err(SeriesError::OrderExhausted {
                needed: 1,
                available: 0,
            });
        }
        let n = self.order().min(f.order() - 1);
        let mut acc = Germ::zero(f.context(), n);
        let mut scale: f64 = 0.0;
        for var in Var::ALL {
            let c = &self.coeffs[var.index()];
            if c.is_identically_zero() {
                continue;
            }
            let term = c.try_mul(&f.partial(var)?)?;
            scale = scale.max(term.max_abs());
            acc = acc.try_add(&term)?;
        }
        Ok((acc, scale))
    }

    /// Lie bracket `[X, Y]^i = X(Y^i) - Y(X^i)`.
    pub fn bracket(&self, other: &Self) -> Result<Self, SeriesError> {
        Ok(self.bracket_halves(other)?.0)
    }

    /// The bracket together with the largest magnitude among the summands
    /// `X^j d_j Y^i` and `Y^j d_j X^i`, used to scale residuals.
    pub fn bracket_halves(&self, other: &Self) -> Result<(Self, f64), SeriesError> {
        let mut scale: f64 = 0.0;
        let mut out = alloc::vec::Vec::with_capacity(NVARS);
        for i in 0..NVARS {
            let (xy, sx) = self.apply_with_scale(&other.coeffs[i])?;
            let (yx, sy) = other.apply_with_scale(&self.coeffs[i])?;
            scale = scale.max(sx).max(sy);
            out.push(xy.try_sub(&yx)?);
        }
        let coeffs: [Germ<S>; NVARS] = out.try_into().ok().unwrap();
        Ok((FieldGerm::new(coeffs), scale))
    }

    /// Complex conjugate field: the `d/dzbj` coefficient is the involute of
    /// the `d/dzj` coefficient and vice versa; the `d/dv` coefficient is
    /// involuted in place.
    pub fn conjugate(&self) -> Self {
        let c = &self.coeffs;
        FieldGerm {
            coeffs: [
                c[2].involute(),
                c[3].involute(),
                c[0].involute(),
                c[1].involute(),
                c[4].involute(),
            ],
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, SeriesError> {
        let mut out = self.coeffs.clone();
        for (o, c) in out.iter_mut().zip(&other.coeffs) {
            *o = o.try_add(c)?;
        }
        Ok(FieldGerm::new(out))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, SeriesError> {
        let mut out = self.coeffs.clone();
        for (o, c) in out.iter_mut().zip(&other.coeffs) {
            *o = o.try_sub(c)?;
        }
        Ok(FieldGerm::new(out))
    }

    /// Multiplies every coefficient by the function `g`.
    pub fn scale_by(&self, g: &Germ<S>) -> Result<Self, SeriesError> {
        let mut out = self.coeffs.clone();
        for o in out.iter_mut() {
            *o = if o.is_identically_zero() {
                o.truncate(g.order())
            } else {
                o.try_mul(g)?
            };
        }
        Ok(FieldGerm::new(out))
    }

    pub fn scale(&self, s: &S) -> Self {
        FieldGerm {
            coeffs: self.coeffs.clone().map(|g| g.scale(s)),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(Germ::max_abs).fold(0.0, f64::max)
    }

    pub fn is_identically_zero(&self) -> bool {
        self.coeffs.iter().all(Germ::is_identically_zero)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{eval_germ, parse};
    use crate::scalar::C64;
    use crate::series::{count_up_to, Base};
    use proptest::prelude::*;

    fn ctx(order: usize) -> Arc<Context<C64>> {
        Context::new(
            Base {
                z1: C64::new(0.2, -0.1),
                z2: C64::new(0.1, 0.3),
                v: C64::new(-0.15, 0.0),
            },
            order,
        )
    }

    fn origin(order: usize) -> Arc<Context<C64>> {
        let z = C64::new(0.0, 0.0);
        Context::new(Base { z1: z, z2: z, v: z }, order)
    }

    #[test]
    fn d_dv_of_v_squared() {
        let c = origin(3);
        let v = Germ::var(&c, 3, Var::V);
        let dv = FieldGerm::coordinate(&c, 3, Var::V);
        let out = dv.apply(&(&v * &v)).unwrap();
        assert!(out.approx_eq(&v.scale(&C64::new(2.0, 0.0)), 0.0));
    }

    #[test]
    fn coefficient_times_d_dv() {
        let c = origin(3);
        let mut coeffs: [Germ<C64>; NVARS] = core::array::from_fn(|_| Germ::zero(&c, 3));
        coeffs[4] = Germ::var(&c, 3, Var::Z1);
        let x = FieldGerm::new(coeffs);
        let out = x.apply(&Germ::var(&c, 3, Var::V)).unwrap();
        assert!(out.approx_eq(&Germ::var(&c, 3, Var::Z1), 0.0));
    }

    #[test]
    fn coordinate_fields_commute() {
        let c = ctx(3);
        let b = FieldGerm::coordinate(&c, 3, Var::Z1)
            .bracket(&FieldGerm::coordinate(&c, 3, Var::V))
            .unwrap();
        assert!(b.is_identically_zero());
    }

    #[test]
    fn conjugate_of_coordinate_field() {
        let c = ctx(2);
        let x = FieldGerm::coordinate(&c, 2, Var::Z1).conjugate();
        let expect = FieldGerm::coordinate(&c, 2, Var::Z1Bar);
        for v in Var::ALL {
            assert!(x.coeff(v).approx_eq(expect.coeff(v), 0.0));
        }
    }

    #[test]
    fn abs_squared_frame_by_hand() {
        // F = z1 zb1 gives A1 = -i zb1, so L1 = d/dz1 - i zb1 d/dv,
        // conj(L1) = d/dzb1 + i z1 d/dv and [L1, conj L1] = 2i d/dv.
        let c = origin(4);
        let i = C64::new(0.0, 1.0);
        let mut l1: [Germ<C64>; NVARS] = core::array::from_fn(|_| Germ::zero(&c, 3));
        l1[0] = Germ::constant(&c, 3, C64::new(1.0, 0.0));
        l1[4] = Germ::var(&c, 3, Var::Z1Bar).scale(&-i);
        let l1 = FieldGerm::new(l1);
        let l1b = l1.conjugate();
        assert!(l1b.coeff(Var::V).approx_eq(&Germ::var(&c, 3, Var::Z1).scale(&i), 0.0));
        let br = l1.bracket(&l1b).unwrap();
        assert!(br.coeff(Var::V).approx_eq(&Germ::constant(&c, 2, i.scale(2.0)), 0.0));
        for v in [Var::Z1, Var::Z2, Var::Z1Bar, Var::Z2Bar] {
            assert!(br.coeff(v).is_identically_zero());
        }
        // At base (a, 0, 0): L1(F) = zb1 there.
        let c2 = Context::new(
            Base {
                z1: C64::new(0.5, 0.25),
                z2: C64::new(0.0, 0.0),
                v: C64::new(0.0, 0.0),
            },
            3,
        );
        let f2 = eval_germ::<C64>(&parse("z1*conj(z1)").unwrap(), &c2, 3).unwrap();
        let mut m: [Germ<C64>; NVARS] = core::array::from_fn(|_| Germ::zero(&c2, 2));
        m[0] = Germ::constant(&c2, 2, C64::new(1.0, 0.0));
        m[4] = Germ::var(&c2, 2, Var::Z1Bar).scale(&-i);
        let val = FieldGerm::new(m).apply(&f2).unwrap();
        assert_eq!(*val.value(), C64::new(0.5, -0.25));
    }

    fn arb_field(order: usize) -> impl Strategy<Value = alloc::vec::Vec<alloc::vec::Vec<(f64, f64)>>> {
        proptest::collection::vec(
            proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), count_up_to(order)),
            NVARS,
        )
    }

    fn build(c: &Arc<Context<C64>>, order: usize, raw: alloc::vec::Vec<alloc::vec::Vec<(f64, f64)>>) -> FieldGerm<C64> {
        let mut it = raw.into_iter().map(|v| {
            Germ::from_coeffs(c, order, v.into_iter().map(|(a, b)| C64::new(a, b)).collect())
        });
        FieldGerm::new(core::array::from_fn(|_| it.next().unwrap()))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn bracket_is_antisymmetric(x in arb_field(3), y in arb_field(3)) {
            let c = ctx(3);
            let (x, y) = (build(&c, 3, x), build(&c, 3, y));
            let s = x.bracket(&y).unwrap().try_add(&y.bracket(&x).unwrap()).unwrap();
            prop_assert!(s.max_abs() < 1e-12);
        }

        #[test]
        fn jacobi_identity(x in arb_field(4), y in arb_field(4), z in arb_field(4)) {
            let c = ctx(4);
            let (x, y, z) = (build(&c, 4, x), build(&c, 4, y), build(&c, 4, z));
            let a = x.bracket(&y.bracket(&z).unwrap()).unwrap();
            let b = y.bracket(&z.bracket(&x).unwrap()).unwrap();
            let d = z.bracket(&x.bracket(&y).unwrap()).unwrap();
            let sum = a.try_add(&b).unwrap().try_add(&d).unwrap();
            let scale = a.max_abs().max(b.max_abs()).max(d.max_abs()).max(1.0);
            prop_assert!(sum.max_abs() / scale < 1e-9);
        }

        #[test]
        fn conjugation_is_involutive(x in arb_field(2)) {
            let c = ctx(2);
            let x = build(&c, 2, x);
            let back = x.conjugate().conjugate();
            for v in Var::ALL {
                prop_assert!(back.coeff(v).approx_eq(x.coeff(v), 0.0));
            }
        }
    }
}
