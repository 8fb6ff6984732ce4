//! Residual checks for the frame identities and for the constant structure
//! equations of the flat model.
//!
//! Every identity is evaluated as a germ (or vector field germ) and compared
//! against the largest magnitude among its constituent terms, so the
//! residual is relative. In the exact backend a check passes only when the
//! residual germ is identically zero.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_rational::BigRational;

use crate::error::SeriesError;
use crate::field::FieldGerm;
use crate::frame::FramePacket;
use crate::invariants::{require_order, Invariants, ORDER_J_RELATION};
use crate::scalar::{GaussRational, Scalar, C64};
use crate::series::{Base, Germ};

/// F-order needed by the bracket and Jacobi suites.
pub const ORDER_SUITES: usize = 5;
/// F-order needed by the W probe.
pub const ORDER_W_PROBE: usize = 6;

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityResult {
    pub name: String,
    /// Residual divided by `scale` (or the raw residual when `scale` is 0).
    pub residual: f64,
    pub scale: f64,
    pub passed: bool,
    pub tolerance: f64,
    /// Where the identity was evaluated; `None` for pure data checks.
    pub point: Option<Base<C64>>,
    /// Value of a scalar residual at the base point, rendered exactly in the
    /// exact backend.
    pub raw: Option<(String, String)>,
}

fn base_c64<S: Scalar>(b: &Base<S>) -> Base<C64> {
    Base {
        z1: b.z1.to_c64(),
        z2: b.z2.to_c64(),
        v: b.v.to_c64(),
    }
}

fn finish<S: Scalar>(
    name: &str,
    zero: bool,
    abs: f64,
    scale: f64,
    tol: f64,
    point: &Base<S>,
    raw: Option<(String, String)>,
) -> IdentityResult {
    let residual = if zero && S::EXACT {
        0.0
    } else if scale > 0.0 {
        abs / scale
    } else {
        abs
    };
    let passed = if S::EXACT { zero } else { residual < tol };
    IdentityResult {
        name: name.to_string(),
        residual,
        scale,
        passed,
        tolerance: tol,
        point: Some(base_c64(point)),
        raw,
    }
}

/// A scalar identity `sum(terms) = 0`. `floor` bounds the scale from below
/// for relations whose terms may all vanish, such as those built on `W`.
fn germ_identity<S: Scalar>(
    name: &str,
    terms: &[Germ<S>],
    floor: f64,
    tol: f64,
) -> Result<IdentityResult, SeriesError> {
    let n = terms.iter().map(Germ::order).min().unwrap();
    let terms: Vec<Germ<S>> = terms.iter().map(|t| t.truncate(n)).collect();
    let mut acc = terms[0].clone();
    for t in &terms[1..] {
        acc = acc.try_add(t)?;
    }
    let scale = terms.iter().map(Germ::max_abs).fold(floor, f64::max);
    let ctx = acc.context().clone();
    Ok(finish::<S>(
        name,
        acc.is_identically_zero(),
        acc.max_abs(),
        scale,
        tol,
        ctx.base(),
        Some(acc.value().render()),
    ))
}

/// A field identity `[x, y] + sum(terms) = 0`.
fn field_identity<S: Scalar>(
    name: &str,
    x: &FieldGerm<S>,
    y: &FieldGerm<S>,
    terms: &[FieldGerm<S>],
    base: &Base<S>,
    tol: f64,
) -> Result<IdentityResult, SeriesError> {
    let (mut acc, mut scale) = x.bracket_halves(y)?;
    for t in terms {
        scale = scale.max(t.max_abs());
        acc = acc.try_add(t)?;
    }
    Ok(finish::<S>(name, acc.is_identically_zero(), acc.max_abs(), scale, tol, base, None))
}

/// The bracket table of the adapted frame plus `[L1, L2] = 0`.
pub fn run_bracket_suite<S: Scalar>(fr: &FramePacket<S>, tol: f64) -> Result<Vec<IdentityResult>, SeriesError> {
    require_order(fr, ORDER_SUITES)?;
    let b = fr.base();
    let i = S::imag_unit();
    let (l1, l1b, k, kb, t) = (&fr.l1, &fr.l1bar, &fr.k_field, &fr.kbar_field, &fr.t);
    let kbar = fr.k.involute();
    let l1k = l1.apply(&fr.k)?;
    let tk = t.apply(&fr.k)?;
    let lbkb = l1b.apply(&kbar)?;
    let tkb = t.apply(&kbar)?;
    let l1kb = l1.apply(&kbar)?;
    let lbk = l1b.apply(&fr.k)?;
    let neg = |f: FieldGerm<S>| f.scale(&-S::one());

    Ok(vec![
        field_identity("[T,L1]+P*T", t, l1, &[t.scale_by(&fr.p)?], b, tol)?,
        field_identity("[T,L1b]+Pb*T", t, l1b, &[t.scale_by(&fr.p.involute())?], b, tol)?,
        field_identity(
            "[T,K]-L1(k)*T-T(k)*L1",
            t,
            k,
            &[neg(t.scale_by(&l1k)?), neg(l1.scale_by(&tk)?)],
            b,
            tol,
        )?,
        field_identity(
            "[T,Kb]-L1b(kb)*T-T(kb)*L1b",
            t,
            kb,
            &[neg(t.scale_by(&lbkb)?), neg(l1b.scale_by(&tkb)?)],
            b,
            tol,
        )?,
        field_identity("[L1,L1b]+i*T", l1, l1b, &[t.scale(&i)], b, tol)?,
        field_identity("[L1,K]-L1(k)*L1", l1, k, &[neg(l1.scale_by(&l1k)?)], b, tol)?,
        field_identity("[L1,Kb]-L1(kb)*L1b", l1, kb, &[neg(l1b.scale_by(&l1kb)?)], b, tol)?,
        field_identity("[L1b,K]-L1b(k)*L1", l1b, k, &[neg(l1.scale_by(&lbk)?)], b, tol)?,
        field_identity("[L1b,Kb]-L1b(kb)*L1b", l1b, kb, &[neg(l1b.scale_by(&lbkb)?)], b, tol)?,
        field_identity("[K,Kb]", k, kb, &[], b, tol)?,
        field_identity("[L1,L2]", l1, &fr.l2, &[], b, tol)?,
    ])
}

/// `K(conj k) = 0` and the two relations for `K(P)` and `K(conj P)`.
pub fn run_jacobi_suite<S: Scalar>(fr: &FramePacket<S>, tol: f64) -> Result<Vec<IdentityResult>, SeriesError> {
    require_order(fr, ORDER_SUITES)?;
    let kbar = fr.k.involute();
    let pbar = fr.p.involute();
    let l1k = fr.l1.apply(&fr.k)?;
    let lbk = fr.l1bar.apply(&fr.k)?;
    let tk = fr.t.apply(&fr.k)?;
    Ok(vec![
        // K = k L1 + L2, split so the residual has a scale.
        germ_identity(
            "K(kb)",
            &[&fr.k * &fr.l1.apply(&kbar)?, fr.l2.apply(&kbar)?],
            0.0,
            tol,
        )?,
        germ_identity(
            "K(P)+P*L1(k)+L1(L1(k))",
            &[fr.k_field.apply(&fr.p)?, &fr.p * &l1k, fr.l1.apply(&l1k)?],
            0.0,
            tol,
        )?,
        germ_identity(
            "K(Pb)+P*L1b(k)+L1b(L1(k))+i*T(k)",
            &[
                fr.k_field.apply(&pbar)?,
                &fr.p * &lbk,
                fr.l1bar.apply(&l1k)?,
                tk.scale(&S::imag_unit()),
            ],
            0.0,
            tol,
        )?,
    ])
}

/// `Kb(H) + 2 L1b(kb) H = 0`, and `(1/3) Kb(Jb) + L1b(kb) Jb = 0` when the
/// order allows it.
pub fn run_invariant_relations<S: Scalar>(
    fr: &FramePacket<S>,
    inv: &Invariants<S>,
    tol: f64,
) -> Result<Vec<IdentityResult>, SeriesError> {
    let lbkb = fr.l1bar.apply(&inv.kb)?;
    let mut out = vec![germ_identity(
        "Kb(H)+2*L1b(kb)*H",
        &[fr.kbar_field.apply(&inv.h)?, (&lbkb * &inv.h).scale(&S::from_int(2))],
        inv.h_terms_scale,
        tol,
    )?];
    if fr.order() >= ORDER_J_RELATION {
        out.push(j_relation(fr, inv, tol)?);
    }
    Ok(out)
}

pub fn j_relation<S: Scalar>(fr: &FramePacket<S>, inv: &Invariants<S>, tol: f64) -> Result<IdentityResult, SeriesError> {
    require_order(fr, ORDER_J_RELATION)?;
    let lbkb = fr.l1bar.apply(&inv.kb)?;
    let third = S::one() / S::from_int(3);
    germ_identity(
        "(1/3)*Kb(Jb)+L1b(kb)*Jb",
        &[fr.kbar_field.apply(&inv.jbar)?.scale(&third), &lbkb * &inv.jbar],
        inv.j_terms_scale,
        tol,
    )
}

pub const W_RELATION_FIRST: &str = "Kb(W)+2*L1b(k)*Wb";
pub const W_RELATION_SECOND: &str = "Kb(W)+2*L1(kb)*Wb+2i*T(kb)";

/// Evaluates both stated forms of the `Kb(W)` relation side by side. The
/// `passed` flags say which one holds at this point; neither is assumed.
pub fn run_w_relation_probe<S: Scalar>(
    fr: &FramePacket<S>,
    inv: &Invariants<S>,
    tol: f64,
) -> Result<Vec<IdentityResult>, SeriesError> {
    require_order(fr, ORDER_W_PROBE)?;
    let kbw = fr.kbar_field.apply(&inv.w)?;
    let wb = inv.w.involute();
    let lbk = fr.l1bar.apply(&fr.k)?;
    let tkb = fr.t.apply(&inv.kb)?;
    let two_i = S::imag_unit().scale_int(2);
    // W can vanish term by term, so the flatness scale bounds the floor
    // from below; it is the same yardstick the classifier applies to W.
    let floor = inv.w_terms_scale.max(inv.flat_scale);
    Ok(vec![
        germ_identity(
            W_RELATION_FIRST,
            &[kbw.clone(), (&lbk * &wb).scale(&S::from_int(2))],
            floor,
            tol,
        )?,
        germ_identity(
            W_RELATION_SECOND,
            &[kbw, (&inv.l1kb * &wb).scale(&S::from_int(2)), tkb.scale(&two_i)],
            floor,
            tol,
        )?,
    ])
}

/// Summary of a W probe: which of the two relations held.
pub fn w_probe_verdict(results: &[IdentityResult]) -> &'static str {
    let held = |n: &str| results.iter().any(|r| r.name == n && r.passed);
    match (held(W_RELATION_FIRST), held(W_RELATION_SECOND)) {
        (true, true) => "both",
        (true, false) => "first",
        (false, true) => "second",
        (false, false) => "neither",
    }
}

/// Number of basis forms in the flat model.
pub const MODEL_DIM: usize = 10;

/// Basis labels in table order.
pub const MODEL_BASIS: [&str; MODEL_DIM] = ["rho", "kappa", "zeta", "kappab", "zetab", "pi1", "pi2", "pi1b", "pi2b", "Lambda"];

const RHO: usize = 0;
const KAPPA: usize = 1;
const ZETA: usize = 2;
const KAPPAB: usize = 3;
const ZETAB: usize = 4;
const PI1: usize = 5;
const PI2: usize = 6;
const PI1B: usize = 7;
const PI2B: usize = 8;
const LAMBDA: usize = 9;

/// Index of the conjugate basis form.
pub const MODEL_CONJ: [usize; MODEL_DIM] = [RHO, KAPPAB, ZETAB, KAPPA, ZETA, PI1B, PI2B, PI1, PI2, LAMBDA];

/// One displayed term `coef * w^i ^ w^j` of `d w^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureTerm {
    pub target: usize,
    pub left: usize,
    pub right: usize,
    pub coef: GaussRational,
}

/// Constant structure equations of the flat model, kept in the displayed
/// form. `constant(k, i, j)` gives the antisymmetric coefficient with
/// `d w^k = sum_{i<j} c^k_ij w^i ^ w^j`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelStructureConstants {
    terms: Vec<StructureTerm>,
}

fn gauss(re: i64, im: i64) -> GaussRational {
    GaussRational::new(BigRational::from_integer(re.into()), BigRational::from_integer(im.into()))
}

impl ModelStructureConstants {
    pub fn flat_model() -> Self {
        let one = || gauss(1, 0);
        let t = |target, left, right, coef| StructureTerm { target, left, right, coef };
        let terms = vec![
            t(RHO, PI1, RHO, one()),
            t(RHO, PI1B, RHO, one()),
            t(RHO, KAPPA, KAPPAB, gauss(0, 1)),
            t(KAPPA, PI1, KAPPA, one()),
            t(KAPPA, PI2, RHO, one()),
            t(KAPPA, ZETA, KAPPAB, one()),
            t(ZETA, PI2, KAPPA, gauss(0, 1)),
            t(ZETA, PI1, ZETA, one()),
            t(ZETA, PI1B, ZETA, gauss(-1, 0)),
            t(KAPPAB, PI1B, KAPPAB, one()),
            t(KAPPAB, PI2B, RHO, one()),
            t(KAPPAB, KAPPA, ZETAB, gauss(-1, 0)),
            t(ZETAB, PI2B, KAPPAB, gauss(0, -1)),
            t(ZETAB, PI1B, ZETAB, one()),
            t(ZETAB, PI1, ZETAB, gauss(-1, 0)),
            t(PI1, KAPPA, PI2B, gauss(0, 1)),
            t(PI1, ZETA, ZETAB, one()),
            t(PI1, LAMBDA, RHO, one()),
            t(PI2, PI2, PI1B, one()),
            t(PI2, ZETA, PI2B, one()),
            t(PI2, LAMBDA, KAPPA, one()),
            t(PI1B, KAPPAB, PI2, gauss(0, -1)),
            t(PI1B, ZETAB, ZETA, one()),
            t(PI1B, LAMBDA, RHO, one()),
            t(PI2B, PI2B, PI1, one()),
            t(PI2B, ZETAB, PI2, one()),
            t(PI2B, LAMBDA, KAPPAB, one()),
            t(LAMBDA, PI2, PI2B, gauss(0, 1)),
            t(LAMBDA, LAMBDA, PI1, one()),
            t(LAMBDA, LAMBDA, PI1B, one()),
        ];
        ModelStructureConstants { terms }
    }

    pub fn terms(&self) -> &[StructureTerm] {
        &self.terms
    }

    /// The table with one displayed term deleted.
    pub fn without_term(&self, index: usize) -> Self {
        let mut terms = self.terms.clone();
        terms.remove(index);
        ModelStructureConstants { terms }
    }

    /// Dense antisymmetric coefficients `c[k][i][j]`.
    pub fn dense(&self) -> Vec<Vec<Vec<GaussRational>>> {
        let mut c = vec![vec![vec![gauss(0, 0); MODEL_DIM]; MODEL_DIM]; MODEL_DIM];
        for t in &self.terms {
            c[t.target][t.left][t.right] = c[t.target][t.left][t.right].clone() + t.coef.clone();
            c[t.target][t.right][t.left] = c[t.target][t.right][t.left].clone() - t.coef.clone();
        }
        c
    }

    pub fn constant(&self, k: usize, i: usize, j: usize) -> GaussRational {
        self.dense()[k][i][j].clone()
    }

    /// Coefficients of `d(d w^k)` on sorted triples, nonzero entries only.
    pub fn d_squared(&self) -> BTreeMap<(usize, [usize; 3]), GaussRational> {
        let c = self.dense();
        let mut out: BTreeMap<(usize, [usize; 3]), GaussRational> = BTreeMap::new();
        let mut push = |k: usize, idx: [usize; 3], coef: GaussRational| {
            if let Some((sorted, sign)) = sort_triple(idx) {
                let e = out.entry((k, sorted)).or_insert_with(|| gauss(0, 0));
                *e = e.clone() + coef.scale_int(sign);
            }
        };
        for k in 0..MODEL_DIM {
            for i in 0..MODEL_DIM {
                for j in (i + 1)..MODEL_DIM {
                    let ckij = &c[k][i][j];
                    if Scalar::is_zero(ckij) {
                        continue;
                    }
                    // d(w^i ^ w^j) = dw^i ^ w^j - w^i ^ dw^j
                    for a in 0..MODEL_DIM {
                        for b in (a + 1)..MODEL_DIM {
                            if !Scalar::is_zero(&c[i][a][b]) {
                                push(k, [a, b, j], ckij.mul_ref(&c[i][a][b]));
                            }
                            if !Scalar::is_zero(&c[j][a][b]) {
                                push(k, [i, a, b], -ckij.mul_ref(&c[j][a][b]));
                            }
                        }
                    }
                }
            }
        }
        out.retain(|_, v| !Scalar::is_zero(v));
        out
    }

    /// True when relabelling barred and unbarred forms and conjugating the
    /// constants maps the table to itself.
    pub fn is_conjugation_symmetric(&self) -> bool {
        let c = self.dense();
        let s = MODEL_CONJ;
        (0..MODEL_DIM).all(|k| {
            (0..MODEL_DIM).all(|i| (0..MODEL_DIM).all(|j| c[s[k]][s[i]][s[j]] == Scalar::conj(&c[k][i][j])))
        })
    }
}

fn sort_triple(mut t: [usize; 3]) -> Option<([usize; 3], i64)> {
    if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
        return None;
    }
    let mut sign = 1;
    for _ in 0..2 {
        for p in 0..2 {
            if t[p] > t[p + 1] {
                t.swap(p, p + 1);
                sign = -sign;
            }
        }
    }
    Some((t, sign))
}

/// `d^2 = 0` for the given table, checked exactly.
pub fn check_structure_table(table: &ModelStructureConstants) -> IdentityResult {
    let d2 = table.d_squared();
    let worst = d2.values().map(Scalar::modulus).fold(0.0, f64::max);
    IdentityResult {
        name: "d^2=0 (flat model)".to_string(),
        residual: worst,
        scale: 1.0,
        passed: d2.is_empty(),
        tolerance: 0.0,
        point: None,
        raw: None,
    }
}

pub fn check_model_algebra() -> IdentityResult {
    check_structure_table(&ModelStructureConstants::flat_model())
}
