//! Truncated multivariate power series ("germs") in the five polarized
//! variables `(z1, z2, zb1, zb2, v)`.
//!
//! Coefficients are stored densely in graded-lex order. Within one degree,
//! exponents are sorted lexicographically descending, so `z1^d` comes first
//! and `v^d` last. The rank of a monomial does not depend on the truncation
//! order, which lets germs of different orders share one [`Layout`].
//!
//! The conjugate variables are independent: a germ at base `p` expands around
//! `(z1, z2, conj z1, conj z2, v)`. [`Germ::involute`] implements complex
//! conjugation of the represented function.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use crate::error::SeriesError;
use crate::scalar::Scalar;

pub const NVARS: usize = 5;

/// Hard cap on the truncation order.
pub const MAX_ORDER: usize = 24;

/// One of the five expansion variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    Z1 = 0,
    Z2 = 1,
    Z1Bar = 2,
    Z2Bar = 3,
    V = 4,
}

impl Var {
    pub const ALL: [Var; NVARS] = [Var::Z1, Var::Z2, Var::Z1Bar, Var::Z2Bar, Var::V];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    /// The variable that plays this one's role after conjugation.
    pub fn conj(self) -> Var {
        match self {
            Var::Z1 => Var::Z1Bar,
            Var::Z2 => Var::Z2Bar,
            Var::Z1Bar => Var::Z1,
            Var::Z2Bar => Var::Z2,
            Var::V => Var::V,
        }
    }
}

pub type Exponent = [u8; NVARS];

const BINOM_N: usize = MAX_ORDER + NVARS + 2;

const BINOM: [[usize; NVARS + 1]; BINOM_N] = {
    let mut t = [[0usize; NVARS + 1]; BINOM_N];
    let mut n = 0;
    while n < BINOM_N {
        t[n][0] = 1;
        let mut k = 1;
        while k <= NVARS && k <= n {
            t[n][k] = t[n - 1][k - 1] + if k < n { t[n - 1][k] } else { 0 };
            k += 1;
        }
        n += 1;
    }
    t
};

#[inline]
fn binom(n: usize, k: usize) -> usize {
    if k > n {
        0
    } else {
        BINOM[n][k]
    }
}

/// Number of monomials of degree at most `order`.
#[inline]
pub fn count_up_to(order: usize) -> usize {
    binom(order + NVARS, NVARS)
}

#[inline]
pub fn degree(e: &Exponent) -> usize {
    e.iter().map(|&x| x as usize).sum()
}

/// Graded-lex rank of an exponent.
#[inline]
pub fn rank(e: &Exponent) -> usize {
    let d = degree(e);
    let mut idx = if d == 0 { 0 } else { binom(d + NVARS - 1, NVARS) };
    let mut rem = d;
    for (i, &ei) in e.iter().enumerate().take(NVARS - 1) {
        let ei = ei as usize;
        let tail = NVARS - i - 1;
        if rem > ei {
            idx += binom(rem - ei - 1 + tail, tail);
        }
        rem -= ei;
    }
    idx
}

/// Monomial table shared by all germs of one context.
#[derive(Debug)]
pub struct Layout {
    order: usize,
    exps: Vec<Exponent>,
}

impl Layout {
    pub fn new(order: usize) -> Self {
        assert!(order <= MAX_ORDER, "order {order} exceeds MAX_ORDER");
        let mut exps = Vec::with_capacity(count_up_to(order));
        for d in 0..=order {
            push_degree(&mut exps, [0; NVARS], 0, d);
        }
        Layout { order, exps }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn exponents(&self) -> &[Exponent] {
        &self.exps
    }
}

fn push_degree(out: &mut Vec<Exponent>, mut cur: Exponent, pos: usize, rem: usize) {
    if pos == NVARS - 1 {
        cur[pos] = rem as u8;
        out.push(cur);
        return;
    }
    for x in (0..=rem).rev() {
        cur[pos] = x as u8;
        push_degree(out, cur, pos + 1, rem - x);
    }
}

/// Expansion point `(z1, z2, v)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Base<S> {
    pub z1: S,
    pub z2: S,
    pub v: S,
}

impl<S: Scalar> Base<S> {
    /// Value of a polarized variable at the base.
    pub fn value(&self, var: Var) -> S {
        match var {
            Var::Z1 => self.z1.clone(),
            Var::Z2 => self.z2.clone(),
            Var::Z1Bar => self.z1.conj(),
            Var::Z2Bar => self.z2.conj(),
            Var::V => self.v.clone(),
        }
    }
}

/// Base point plus the monomial layout for the largest order in use.
#[derive(Debug)]
pub struct Context<S> {
    base: Base<S>,
    layout: Layout,
}

impl<S: Scalar> Context<S> {
    pub fn new(base: Base<S>, order: usize) -> Arc<Self> {
        Arc::new(Context {
            base,
            layout: Layout::new(order),
        })
    }

    pub fn base(&self) -> &Base<S> {
        &self.base
    }

    pub fn max_order(&self) -> usize {
        self.layout.order
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }
}

/// A power series truncated after total degree `order`.
#[derive(Clone, Debug)]
pub struct Germ<S> {
    ctx: Arc<Context<S>>,
    order: usize,
    coeffs: Vec<S>,
}

fn same_base<S: Scalar>(a: &Arc<Context<S>>, b: &Arc<Context<S>>) -> bool {
    Arc::ptr_eq(a, b) || a.base == b.base
}

impl<S: Scalar> Germ<S> {
    pub fn zero(ctx: &Arc<Context<S>>, order: usize) -> Self {
        Self::constant(ctx, order, S::zero())
    }

    pub fn constant(ctx: &Arc<Context<S>>, order: usize, value: S) -> Self {
        assert!(order <= ctx.max_order(), "order beyond context layout");
        let mut coeffs = vec![S::zero(); count_up_to(order)];
        coeffs[0] = value;
        Germ {
            ctx: ctx.clone(),
            order,
            coeffs,
        }
    }

    /// The coordinate function `var`, expanded at the base.
    pub fn var(ctx: &Arc<Context<S>>, order: usize, var: Var) -> Self {
        let mut g = Self::constant(ctx, order, ctx.base.value(var));
        if order >= 1 {
            let mut e = [0u8; NVARS];
            e[var.index()] = 1;
            g.coeffs[rank(&e)] = S::one();
        }
        g
    }

    /// Builds a germ from raw graded-lex coefficients.
    pub fn from_coeffs(ctx: &Arc<Context<S>>, order: usize, coeffs: Vec<S>) -> Self {
        assert_eq!(coeffs.len(), count_up_to(order));
        assert!(order <= ctx.max_order());
        Germ {
            ctx: ctx.clone(),
            order,
            coeffs,
        }
    }

    pub fn context(&self) -> &Arc<Context<S>> {
        &self.ctx
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    /// Value at the base point.
    pub fn value(&self) -> &S {
        &self.coeffs[0]
    }

    pub fn coeff(&self, e: &Exponent) -> Option<&S> {
        if degree(e) > self.order {
            None
        } else {
            self.coeffs.get(rank(e))
        }
    }

    /// Builds a germ coefficient by coefficient from its exponents.
    pub fn from_fn(ctx: &Arc<Context<S>>, order: usize, rule: impl Fn(&Exponent) -> S) -> Self {
        assert!(order <= ctx.max_order());
        let coeffs = ctx.layout.exponents()[..count_up_to(order)].iter().map(rule).collect();
        Germ {
            ctx: ctx.clone(),
            order,
            coeffs,
        }
    }

    pub fn is_identically_zero(&self) -> bool {
        self.coeffs.iter().all(Scalar::is_zero)
    }

    /// True when every non-constant coefficient vanishes.
    pub fn is_constant(&self) -> bool {
        self.coeffs[1..].iter().all(Scalar::is_zero)
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.modulus()).fold(0.0, f64::max)
    }

    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order);
        Germ {
            ctx: self.ctx.clone(),
            order,
            coeffs: self.coeffs[..count_up_to(order)].to_vec(),
        }
    }

    fn check(&self, other: &Self) -> Result<(), SeriesError> {
        if same_base(&self.ctx, &other.ctx) {
            Ok(())
        } else {
            Err(SeriesError::BaseMismatch)
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check(other)?;
        let n = self.order.min(other.order);
        let coeffs = (0..count_up_to(n))
            .map(|i| self.coeffs[i].clone() + other.coeffs[i].clone())
            .collect();
        Ok(Germ {
            ctx: self.ctx.clone(),
            order: n,
            coeffs,
        })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check(other)?;
        let n = self.order.min(other.order);
        let coeffs = (0..count_up_to(n))
            .map(|i| self.coeffs[i].clone() - other.coeffs[i].clone())
            .collect();
        Ok(Germ {
            ctx: self.ctx.clone(),
            order: n,
            coeffs,
        })
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check(other)?;
        let n = self.order.min(other.order);
        if self.is_constant() {
            return Ok(other.truncate(n).scale(&self.coeffs[0]));
        }
        if other.is_constant() {
            return Ok(self.truncate(n).scale(&other.coeffs[0]));
        }
        let exps = self.ctx.layout.exponents();
        let mut out = vec![S::zero(); count_up_to(n)];
        for (i, a) in self.coeffs[..count_up_to(n)].iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let ei = exps[i];
            let room = n - degree(&ei);
            for (j, b) in other.coeffs[..count_up_to(room)].iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let ej = exps[j];
                let mut e = ei;
                for k in 0..NVARS {
                    e[k] += ej[k];
                }
                out[rank(&e)].add_mul_assign(a, b);
            }
        }
        Ok(Germ {
            ctx: self.ctx.clone(),
            order: n,
            coeffs: out,
        })
    }

    /// Multiplicative inverse. Fails when the value at the base vanishes
    /// (exactly, or below `1e-12 * (1 + |self|_inf)` in floating point).
    pub fn recip(&self) -> Result<Self, SeriesError> {
        let b0 = self.coeffs[0].clone();
        let tol = 1e-12 * (1.0 + self.max_abs());
        if b0.is_zero() || (!S::EXACT && b0.modulus() <= tol) {
            return Err(SeriesError::DivisionByZeroGerm);
        }
        let inv0 = S::one() / b0;
        // 1/b = inv0 / (1 + u) with u = b*inv0 - 1, and u(base) = 0.
        let mut u = self.scale(&inv0);
        u.coeffs[0] = S::zero();
        let one = Germ::constant(&self.ctx, self.order, S::one());
        let mut acc = one.clone();
        for _ in 0..self.order {
            acc = one.try_sub(&u.try_mul(&acc)?)?;
        }
        Ok(acc.scale(&inv0))
    }

    pub fn try_div(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check(other)?;
        self.try_mul(&other.recip()?)
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut acc = Germ::constant(&self.ctx, self.order, S::one());
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    pub fn scale(&self, s: &S) -> Self {
        Germ {
            ctx: self.ctx.clone(),
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c.mul_ref(s)).collect(),
        }
    }

    pub fn add_scalar(&self, s: &S) -> Self {
        let mut g = self.clone();
        g.coeffs[0].add_assign_ref(s);
        g
    }

    /// Partial derivative with respect to one polarized variable.
    /// The order drops by one.
    pub fn partial(&self, var: Var) -> Result<Self, SeriesError> {
        if self.order == 0 {
            return Err(SeriesError::OrderExhausted {
                needed: 1,
                available: 0,
            });
        }
        let n = self.order - 1;
        let exps = self.ctx.layout.exponents();
        let k = var.index();
        let coeffs = exps[..count_up_to(n)]
            .iter()
            .map(|e| {
                let mut up = *e;
                up[k] += 1;
                self.coeffs[rank(&up)].scale_int(up[k] as i64)
            })
            .collect();
        Ok(Germ {
            ctx: self.ctx.clone(),
            order: n,
            coeffs,
        })
    }

    /// Complex conjugate of the represented function: swap `z` and `zb`
    /// exponents and conjugate coefficients.
    pub fn involute(&self) -> Self {
        let exps = self.ctx.layout.exponents();
        let mut out = vec![S::zero(); self.coeffs.len()];
        for (i, c) in self.coeffs.iter().enumerate() {
            let e = exps[i];
            let sw = [e[2], e[3], e[0], e[1], e[4]];
            out[rank(&sw)] = c.conj();
        }
        Germ {
            ctx: self.ctx.clone(),
            order: self.order,
            coeffs: out,
        }
    }

    /// Exact or tolerance-based equality up to the common order.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let n = self.order.min(other.order);
        (0..count_up_to(n)).all(|i| {
            let d = self.coeffs[i].clone() - other.coeffs[i].clone();
            d.is_negligible(tol)
        })
    }
}

impl<S: Scalar> Neg for &Germ<S> {
    type Output = Germ<S>;
    fn neg(self) -> Germ<S> {
        Germ {
            ctx: self.ctx.clone(),
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| -c.clone()).collect(),
        }
    }
}

// Operator forms panic on a base mismatch, which is a programming error
// inside one frame. Use the `try_*` methods at API boundaries.
macro_rules! germ_binop {
    ($tr:ident, $m:ident, $tm:ident) => {
        impl<S: Scalar> $tr<&Germ<S>> for &Germ<S> {
            type Output = Germ<S>;
            fn $m(self, rhs: &Germ<S>) -> Germ<S> {
                self.$tm(rhs).expect("germ operands expanded at different base points")
            }
        }
        impl<S: Scalar> $tr<Germ<S>> for Germ<S> {
            type Output = Germ<S>;
            fn $m(self, rhs: Germ<S>) -> Germ<S> {
                (&self).$m(&rhs)
            }
        }
    };
}

germ_binop!(Add, add, try_add);
germ_binop!(Sub, sub, try_sub);
germ_binop!(Mul, mul, try_mul);
