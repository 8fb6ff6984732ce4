//! The invariants `H`, `W`, `J`, the normalized structure-group parameters
//! and the flat/branch classification.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::SeriesError;
use crate::frame::{build_frame, FrameError, FramePacket, Tolerances};
use crate::dsl::Expr;
use crate::scalar::{principal_cbrt, Scalar, C64};
use crate::series::{Base, Germ};

/// F-order needed for each quantity.
pub const ORDER_K: usize = 2;
pub const ORDER_P: usize = 3;
pub const ORDER_H: usize = 5;
pub const ORDER_W: usize = 5;
pub const ORDER_J: usize = 6;
pub const ORDER_J_RELATION: usize = 7;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum InvariantError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("branch {0} unavailable: the invariant vanishes at the base point")]
    BranchUnavailable(&'static str),
}

pub fn require_order<S: Scalar>(frame: &FramePacket<S>, needed: usize) -> Result<(), SeriesError> {
    if frame.order() < needed {
        Err(SeriesError::OrderExhausted {
            needed,
            available: frame.order(),
        })
    } else {
        Ok(())
    }
}

pub(crate) fn frac<S: Scalar>(n: i64, d: i64) -> S {
    S::from_int(n) / S::from_int(d)
}

/// Sum of germs plus the largest term magnitude at the base.
pub(crate) fn sum_terms<S: Scalar>(terms: &[Germ<S>]) -> (Germ<S>, f64) {
    let mut acc = terms[0].clone();
    let mut scale = terms[0].value().modulus();
    for t in &terms[1..] {
        acc = &acc + t;
        scale = scale.max(t.value().modulus());
    }
    (acc, scale)
}

/// Derived germs shared by `H`, `W`, `J` and the identity suites.
#[derive(Clone, Debug)]
pub struct Invariants<S> {
    /// `conj k`
    pub kb: Germ<S>,
    /// `L1bar(k)`, `L1bar^2(k)`, `L1bar^3(k)`
    pub lbk: Germ<S>,
    pub lb2k: Germ<S>,
    pub lb3k: Germ<S>,
    /// `conj P`
    pub pb: Germ<S>,
    /// `L1(conj k)`
    pub l1kb: Germ<S>,
    pub h: Germ<S>,
    pub w: Germ<S>,
    /// Largest term magnitude at the base in the formulas for `H` and `W`.
    pub h_terms_scale: f64,
    pub w_terms_scale: f64,
    pub jbar: Germ<S>,
    /// `J` is the involute of `jbar`; its value is the conjugate of `jbar`'s.
    pub j: Germ<S>,
    /// Expanded closed formula for `J`, kept as a cross-check.
    pub j_expanded: Germ<S>,
    /// Largest term magnitude of each route, used to scale the cross-check.
    pub j_terms_scale: f64,
    pub j_expanded_terms_scale: f64,
    /// `max(1, |L1bar^2 k / L1bar k|, |conj P|)^3` at the base.
    pub flat_scale: f64,
}

impl<S: Scalar> Invariants<S> {
    pub fn compute(fr: &FramePacket<S>) -> Result<Self, SeriesError> {
        require_order(fr, ORDER_J)?;
        let kb = fr.k.involute();
        let lbk = fr.l1bar.apply(&fr.k)?;
        let lb2k = fr.l1bar.apply(&lbk)?;
        let lb3k = fr.l1bar.apply(&lb2k)?;
        let pb = fr.p.involute();
        let l1kb = fr.l1.apply(&kb)?;
        let r = lb2k.try_div(&lbk)?;

        let (h, h_terms_scale) = sum_terms(&[
            (&r * &r).scale(&frac(2, 9)),
            (&r * &pb).scale(&frac(1, 18)),
            (&pb * &pb).scale(&frac(-1, 9)),
            fr.l1bar.apply(&pb)?.scale(&frac(1, 6)),
            lb3k.try_div(&lbk)?.scale(&frac(-1, 6)),
        ]);

        let lbk2 = &lbk * &lbk;
        let lbk3 = &lbk2 * &lbk;
        let (w, w_terms_scale) = sum_terms(&[
            fr.l1.apply(&lbk)?.try_div(&lbk)?.scale(&frac(2, 3)),
            fr.l1.apply(&l1kb)?.try_div(&l1kb)?.scale(&frac(2, 3)),
            (&lb2k * &fr.k_field.apply(&lbk)?).try_div(&lbk3)?.scale(&frac(1, 3)),
            fr.k_field.apply(&lb2k)?.try_div(&lbk2)?.scale(&frac(-1, 3)),
            fr.t.apply(&fr.k)?.try_div(&lbk)?.scale(&(S::imag_unit() * frac(1, 3))),
        ]);

        let (jbar, j_terms_scale) = sum_terms(&[
            (&(&r.scale(&S::from_int(2)) + &pb) * &h).scale(&frac(2, 3)),
            -&fr.l1bar.apply(&h)?,
        ]);
        let j = jbar.involute();

        let (j_expanded, j_expanded_terms_scale) = j_expanded(fr, &l1kb)?;

        let rv = r.value().modulus();
        let flat_scale = libm::pow(1f64.max(rv).max(pb.value().modulus()), 3.0);

        Ok(Invariants {
            kb,
            lbk,
            lb2k,
            lb3k,
            pb,
            l1kb,
            h,
            w,
            h_terms_scale,
            w_terms_scale,
            jbar,
            j,
            j_expanded,
            j_terms_scale,
            j_expanded_terms_scale,
            flat_scale,
        })
    }

    /// Relative disagreement between the two routes to `J` at the base.
    pub fn j_cross_residual(&self) -> f64 {
        let diff = self.j.value().clone() - self.j_expanded.value().clone();
        relative(&diff, self.j_terms_scale.max(self.j_expanded_terms_scale))
    }

    pub fn point_class(&self, tol: &Tolerances) -> PointClass {
        let limit = tol.flat * self.flat_scale;
        let j_small = self.j.value().is_negligible(limit);
        let w_small = self.w.value().is_negligible(limit);
        match (j_small, w_small) {
            (true, true) => PointClass::Flat,
            (false, _) => PointClass::JNonzero,
            (true, false) => PointClass::WNonzero,
        }
    }
}

/// `|x| / scale`, with `0/0 = 0`. Exact zeros stay zero.
pub fn relative<S: Scalar>(x: &S, scale: f64) -> f64 {
    if x.is_zero() {
        0.0
    } else if scale > 0.0 {
        x.modulus() / scale
    } else {
        f64::INFINITY
    }
}

/// The expanded expression for `J` in `a = L1(conj k)`, its iterated
/// `L1`-derivatives `b, c, d`, and `P`.
fn j_expanded<S: Scalar>(fr: &FramePacket<S>, a: &Germ<S>) -> Result<(Germ<S>, f64), SeriesError> {
    let b = fr.l1.apply(a)?;
    let c = fr.l1.apply(&b)?;
    let d = fr.l1.apply(&c)?;
    let p = &fr.p;
    let lp = fr.l1.apply(p)?;
    let llp = fr.l1.apply(&lp)?;
    let ba = b.try_div(a)?;
    let ca = c.try_div(a)?;
    let p2 = p * p;
    let ba2 = &ba * &ba;
    Ok(sum_terms(&[
        (&ba2 * p).scale(&frac(5, 18)),
        (p * &lp).scale(&frac(1, 3)),
        (&ba * &p2).scale(&frac(-1, 9)),
        (&ba2 * &ba).scale(&frac(20, 27)),
        (&ba * &ca).scale(&frac(-5, 6)),
        (&ba * &lp).scale(&frac(1, 6)),
        (&ca * p).scale(&frac(-1, 6)),
        (&p2 * p).scale(&frac(-2, 27)),
        llp.scale(&frac(-1, 6)),
        d.try_div(a)?.scale(&frac(1, 6)),
    ]))
}

/// Verdict at a single admissible point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointClass {
    Flat,
    JNonzero,
    WNonzero,
}

/// Verdict over a set of samples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Classification {
    FlatLightConeTube,
    BranchJ,
    BranchW,
    Undetermined,
    Inadmissible(String),
}

impl Classification {
    pub fn label(&self) -> &'static str {
        match self {
            Classification::FlatLightConeTube => "FLAT_LIGHT_CONE_TUBE",
            Classification::BranchJ => "BRANCH_J",
            Classification::BranchW => "BRANCH_W",
            Classification::Undetermined => "UNDETERMINED",
            Classification::Inadmissible(_) => "INADMISSIBLE",
        }
    }
}

/// Combines per-sample outcomes; an `Err` carries the inadmissibility reason.
pub fn combine(samples: &[Result<PointClass, String>]) -> Classification {
    if let Some(Err(reason)) = samples.iter().find(|s| s.is_err()) {
        return Classification::Inadmissible(reason.clone());
    }
    let classes: Vec<PointClass> = samples.iter().filter_map(|s| s.clone().ok()).collect();
    let Some(first) = classes.first() else {
        return Classification::Inadmissible(String::from("no samples"));
    };
    if classes.iter().any(|c| c != first) {
        return Classification::Undetermined;
    }
    match first {
        PointClass::Flat => Classification::FlatLightConeTube,
        PointClass::JNonzero => Classification::BranchJ,
        PointClass::WNonzero => Classification::BranchW,
    }
}

/// Builds frames at every sample and combines the verdicts.
pub fn classify<S: Scalar>(expr: &Expr, samples: &[Base<S>], order: usize, tol: &Tolerances) -> Classification {
    let outcomes: Vec<Result<PointClass, String>> = samples
        .iter()
        .map(|b| {
            let fr = build_frame(expr, b, order, tol, true).map_err(|e: FrameError| String::from(e.reason()))?;
            let inv = Invariants::compute(&fr).map_err(|_| String::from("OrderExhausted"))?;
            Ok(inv.point_class(tol))
        })
        .collect();
    combine(&outcomes)
}

/// Which normalization of `c` is in force.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    /// `c = 1`, `e = 0`.
    Unnormalized,
    /// `c^3 = J`.
    J,
    /// `c = W`.
    W,
}

impl Branch {
    pub fn label(self) -> &'static str {
        match self {
            Branch::Unnormalized => "unnormalized",
            Branch::J => "J",
            Branch::W => "W",
        }
    }
}

/// Group parameters at the identity section, as binary64 values.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedGroupParams {
    pub branch: Branch,
    pub f: C64,
    pub b: C64,
    pub d: C64,
    pub e: C64,
    pub c: C64,
    /// How the cube root was chosen (J branch only).
    pub root_branch: Option<&'static str>,
    /// Relative residual of the coefficient whose vanishing fixed `e` (J branch).
    pub consistency_residual: Option<f64>,
}

/// Parameter values for `branch` at the frame's base point.
pub fn normalize_params<S: Scalar>(
    fr: &FramePacket<S>,
    inv: &Invariants<S>,
    branch: Branch,
) -> Result<NormalizedGroupParams, InvariantError> {
    let i = C64::new(0.0, 1.0);
    let lbk = inv.lbk.value().to_c64();
    let r = inv.lb2k.value().to_c64() / lbk;
    let pb = inv.pb.value().to_c64();
    let h = inv.h.value().to_c64();
    let mut root_branch = None;
    let mut consistency = None;
    let (c, e) = match branch {
        Branch::Unnormalized => (C64::new(1.0, 0.0), C64::new(0.0, 0.0)),
        Branch::J => {
            if inv.j.value().is_zero() {
                return Err(InvariantError::BranchUnavailable("J"));
            }
            let j = inv.j.value().to_c64();
            let jb = inv.jbar.value().to_c64();
            let c = principal_cbrt(j);
            // The root of conj J is taken as the conjugate of the chosen root.
            let cb = c.conj();
            let lb_jb = fr.l1bar.apply(&inv.jbar)?.value().to_c64();
            let e = c / cb / 3.0 * (-lb_jb / jb + r * 2.0 + pb);
            root_branch = Some("principal");
            if fr.order() >= ORDER_J_RELATION {
                let kb_jb = fr.kbar_field.apply(&inv.jbar)?.value().to_c64();
                let lb_kb = fr.l1bar.apply(&inv.kb)?.value().to_c64();
                let l1kb = inv.l1kb.value().to_c64();
                let terms = [
                    e * 2.0 / c,
                    -(e.conj() * 2.0 * c / (cb * cb)) / l1kb * (lb_kb + kb_jb / jb / 3.0),
                    (lb_jb / jb - r * 2.0 - pb) * 2.0 / 3.0 / cb,
                ];
                let sum: C64 = terms.iter().sum();
                let scale = terms.iter().map(|t| t.norm()).fold(0.0, f64::max);
                consistency = Some(relative(&sum, scale));
            }
            (c, e)
        }
        Branch::W => {
            if inv.w.value().is_zero() {
                return Err(InvariantError::BranchUnavailable("W"));
            }
            let w = inv.w.value().to_c64();
            let wb = w.conj();
            let lb_w = fr.l1bar.apply(&inv.w)?.value().to_c64();
            let eps_bar = (-lb_w / (w * wb) - r / (w * 3.0) + pb / (wb * 3.0)) / 2.0;
            (w, w * eps_bar.conj())
        }
    };
    let cb = c.conj();
    let f = c / cb * lbk;
    let b = -i * cb * e + i * c / 3.0 * (r - pb);
    let d = -i / 2.0 * e * e * cb / c + i * c / cb * h;
    Ok(NormalizedGroupParams {
        branch,
        f,
        b,
        d,
        e,
        c,
        root_branch,
        consistency_residual: consistency,
    })
}
