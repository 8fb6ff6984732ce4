//! Per-point analysis, sampling with rejection, and report assembly.

use std::collections::BTreeMap;

use crparallax_core::dsl::{check_realness, SurfaceSpec};
use crparallax_core::frame::{build_frame, k_closed_form, Tolerances};
use crparallax_core::invariants::{
    combine, normalize_params, relative, Branch, Invariants, PointClass,
};
use crparallax_core::verify::{
    check_model_algebra, run_bracket_suite, run_invariant_relations, run_jacobi_suite, run_w_relation_probe,
    w_probe_verdict, IdentityResult,
};
use crparallax_core::{GaussRational, Scalar, SeriesError, C64};
use rayon::prelude::*;

use crate::points::{sample, PointSpec};
use crate::report::{
    AdmissibleRecord, BranchRecord, ComplexValue, CrossCheck, Discrepancy, IdentityRecord, PointRecord,
    ReportDocument, SamplingEcho, SurfaceEcho, Values, WProbeRecord, VERSION,
};

/// Agreement required between the two routes to `k` and to `J`.
pub const CROSS_TOL: f64 = 1e-8;
/// Draws allowed per requested sample before giving up.
pub const OVERSAMPLING: usize = 10;
const REALNESS_PROBES: usize = 3;
const REALNESS_ORDER: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Floating,
    Exact,
}

impl Backend {
    pub fn label(self) -> &'static str {
        match self {
            Backend::Floating => "floating",
            Backend::Exact => "exact",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Suites {
    pub brackets: bool,
    pub jacobi: bool,
    pub wprobe: bool,
    pub model_algebra: bool,
}

impl Suites {
    pub fn all() -> Self {
        Suites {
            brackets: true,
            jacobi: true,
            wprobe: true,
            model_algebra: true,
        }
    }

    pub fn needs_surface(&self) -> bool {
        self.brackets || self.jacobi || self.wprobe
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Analyze,
    Classify,
    Verify(Suites),
}

impl Command {
    fn label(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Classify => "classify",
            Command::Verify(_) => "verify",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PointSource {
    Explicit(Vec<PointSpec>),
    Sampled {
        seed: u64,
        count: usize,
        radius: f64,
        center: PointSpec,
    },
}

#[derive(Clone, Debug)]
pub struct Plan {
    pub command: Command,
    /// Already relabelled when `swap_z` is set.
    pub surface: Option<SurfaceSpec>,
    pub points: PointSource,
    pub order: usize,
    pub backend: Backend,
    pub swap_z: bool,
    pub tol: Tolerances,
    pub allow_nonreal: bool,
    pub workers: Option<usize>,
}

/// How the run ended, mapped to the process exit code by the binary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// No point was admissible.
    Inadmissible,
    /// The requested order was too low for some quantity.
    OrderExhausted,
    /// `verify` found a failing check.
    ChecksFailed,
}

#[derive(Debug)]
pub struct Outcome {
    pub report: ReportDocument,
    pub status: Status,
    /// Realness failed but `--allow-nonreal` let the run continue.
    pub nonreal_warning: Option<String>,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("surface is not real: conj(F) != F at {point} (residual {residual:e}); pass --allow-nonreal to continue")]
pub struct NonRealSurface {
    pub point: String,
    pub residual: f64,
}

struct PointOutcome {
    record: PointRecord,
    class: Result<PointClass, String>,
    frame_ok: bool,
    discrepancies: Vec<Discrepancy>,
    checks_passed: bool,
    w_holds: Option<&'static str>,
}

fn identity_records(rs: &[IdentityResult], all_passed: &mut bool) -> Vec<IdentityRecord> {
    rs.iter()
        .map(|r| {
            *all_passed &= r.passed;
            IdentityRecord::from(r)
        })
        .collect()
}

fn analyze_point<S: Scalar>(plan: &Plan, spec: &SurfaceSpec, realness_ok: bool, index: usize, p: &PointSpec) -> PointOutcome {
    let work = if plan.swap_z { p.swapped() } else { p.clone() };
    let base = work.base::<S>();
    let mut out = PointOutcome {
        record: PointRecord {
            index,
            point: p.to_string(),
            admissible: AdmissibleRecord::unknown(realness_ok, String::new()),
            class: None,
            values: None,
            identities: Vec::new(),
            cross_checks: Vec::new(),
            w_probe: None,
            branch_params: None,
            order_exhausted: None,
        },
        class: Err(String::new()),
        frame_ok: false,
        discrepancies: Vec::new(),
        checks_passed: true,
        w_holds: None,
    };

    let fr = match build_frame(&spec.expr, &base, plan.order, &plan.tol, realness_ok) {
        Ok(fr) => fr,
        Err(e) => {
            let reason = e.reason().to_owned();
            out.record.admissible = match e.flags() {
                Some(flags) => AdmissibleRecord::from_flags(flags, Some(reason.clone())),
                None => AdmissibleRecord::unknown(realness_ok, format!("{reason}: {e}")),
            };
            if reason == "OrderExhausted" {
                out.record.order_exhausted = Some(e.to_string());
            }
            out.class = Err(reason);
            return out;
        }
    };
    out.frame_ok = true;
    out.record.admissible = AdmissibleRecord::from_flags(&fr.admissible, None);
    let mut values = Values {
        k: Some(ComplexValue::of(fr.k.value())),
        l: Some(ComplexValue::of(fr.l.value())),
        p: Some(ComplexValue::of(fr.p.value())),
        ..Values::default()
    };

    let mut passed = true;
    let run_frame_suites = match plan.command {
        Command::Analyze => Suites {
            brackets: true,
            jacobi: true,
            ..Suites::default()
        },
        Command::Classify => Suites::default(),
        Command::Verify(s) => s,
    };
    let mut push = |r: Result<Vec<IdentityResult>, SeriesError>, out: &mut PointOutcome| match r {
        Ok(rs) => out.record.identities.extend(identity_records(&rs, &mut passed)),
        Err(e) => out.record.order_exhausted = Some(e.to_string()),
    };
    if run_frame_suites.brackets {
        push(run_bracket_suite(&fr, plan.tol.identity), &mut out);
    }
    if run_frame_suites.jacobi {
        push(run_jacobi_suite(&fr, plan.tol.identity), &mut out);
    }

    // Second route to k.
    if let Ok(kc) = k_closed_form(&spec.expr, &base, plan.order) {
        let diff = fr.k.value().clone() - kc.value().clone();
        let residual = relative(&diff, fr.k.value().modulus().max(kc.value().modulus()));
        out.record.cross_checks.push(cross("k closed form", residual, index, &mut out.discrepancies));
    }

    let inv = match Invariants::compute(&fr) {
        Ok(inv) => inv,
        Err(e) => {
            out.record.order_exhausted = Some(e.to_string());
            out.record.values = Some(values);
            out.class = Err("OrderExhausted".to_owned());
            out.checks_passed = passed;
            return out;
        }
    };
    values.h = Some(ComplexValue::of(inv.h.value()));
    values.w = Some(ComplexValue::of(inv.w.value()));
    values.j = Some(ComplexValue::of(inv.j.value()));
    values.j_expanded = Some(ComplexValue::of(inv.j_expanded.value()));
    out.record.values = Some(values);
    let jres = inv.j_cross_residual();
    out.record.cross_checks.push(cross("J expanded", jres, index, &mut out.discrepancies));

    if run_frame_suites.jacobi {
        push(run_invariant_relations(&fr, &inv, plan.tol.identity), &mut out);
    }
    if run_frame_suites.wprobe {
        match run_w_relation_probe(&fr, &inv, plan.tol.identity) {
            Ok(rs) => {
                let holds = w_probe_verdict(&rs);
                out.w_holds = Some(holds);
                out.record.w_probe = Some(WProbeRecord {
                    relations: rs.iter().map(IdentityRecord::from).collect(),
                    holds: holds.to_owned(),
                });
            }
            Err(e) => out.record.order_exhausted = Some(e.to_string()),
        }
    }

    let class = inv.point_class(&plan.tol);
    out.record.class = Some(format!("{class:?}"));
    out.class = Ok(class);
    let branch = match class {
        PointClass::Flat => None,
        PointClass::JNonzero => Some(Branch::J),
        PointClass::WNonzero => Some(Branch::W),
    };
    if let Some(Ok(params)) = branch.map(|b| normalize_params(&fr, &inv, b)) {
        out.record.branch_params = Some(BranchRecord::from(&params));
    }
    out.checks_passed = passed;
    out
}

fn cross(formula: &str, residual: f64, index: usize, sink: &mut Vec<Discrepancy>) -> CrossCheck {
    let agrees = residual < CROSS_TOL;
    if !agrees {
        sink.push(Discrepancy {
            formula: formula.to_owned(),
            point_index: index,
            residual,
            tolerance: CROSS_TOL,
        });
    }
    CrossCheck {
        formula: formula.to_owned(),
        residual,
        tolerance: CROSS_TOL,
        agrees,
    }
}

fn realness<S: Scalar>(spec: &SurfaceSpec, probes: &[PointSpec], swap: bool) -> Result<(), NonRealSurface> {
    let bases: Vec<_> = probes
        .iter()
        .take(REALNESS_PROBES)
        .map(|p| if swap { p.swapped() } else { p.clone() }.base::<S>())
        .collect();
    let rep = check_realness(&spec.expr, &bases, REALNESS_ORDER);
    match rep.witness {
        Some(w) if !rep.real => Err(NonRealSurface {
            point: probes[w].to_string(),
            residual: rep.max_residual,
        }),
        _ => Ok(()),
    }
}

fn pool(workers: Option<usize>) -> rayon::ThreadPool {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        b = b.num_threads(n.max(1));
    }
    b.build().expect("thread pool")
}

pub fn run(plan: &Plan) -> Result<Outcome, NonRealSurface> {
    match plan.backend {
        Backend::Floating => run_with::<C64>(plan),
        Backend::Exact => run_with::<GaussRational>(plan),
    }
}

fn run_with<S: Scalar>(plan: &Plan) -> Result<Outcome, NonRealSurface> {
    let mut report = ReportDocument {
        version: VERSION.to_owned(),
        command: plan.command.label().to_owned(),
        backend: plan.backend.label().to_owned(),
        order: plan.order,
        swap_z: plan.swap_z,
        surface: plan.surface.as_ref().map(|s| SurfaceEcho {
            name: s.name.clone(),
            text: s.source_text.clone(),
        }),
        sampling: None,
        points: Vec::new(),
        discrepancies: Vec::new(),
        model_algebra: None,
        w_probe: None,
        verdict: String::new(),
    };
    let mut checks_passed = true;
    if let Command::Verify(s) = plan.command {
        if s.model_algebra {
            let r = check_model_algebra();
            checks_passed &= r.passed;
            report.model_algebra = Some(IdentityRecord::from(&r));
        }
    }

    let mut outcomes = Vec::new();
    let mut nonreal_warning = None;
    if let Some(spec) = &plan.surface {
        let candidates = match &plan.points {
            PointSource::Explicit(ps) => ps.clone(),
            PointSource::Sampled {
                seed,
                count,
                radius,
                center,
            } => sample(*seed, count * OVERSAMPLING, *radius, center),
        };
        let realness_ok = match realness::<S>(spec, &candidates, plan.swap_z) {
            Ok(()) => true,
            Err(e) if plan.allow_nonreal => {
                nonreal_warning = Some(e.to_string());
                false
            }
            Err(e) => return Err(e),
        };
        let pool = pool(plan.workers);
        let eval = |chunk: &[PointSpec], first: usize| -> Vec<PointOutcome> {
            pool.install(|| {
                chunk
                    .par_iter()
                    .enumerate()
                    .map(|(i, p)| analyze_point::<S>(plan, spec, realness_ok, first + i, p))
                    .collect()
            })
        };
        match &plan.points {
            PointSource::Explicit(ps) => outcomes = eval(ps, 0),
            PointSource::Sampled {
                seed,
                count,
                radius,
                center,
            } => {
                let mut rejected: BTreeMap<String, usize> = BTreeMap::new();
                let mut first_rejects = Vec::new();
                let mut drawn = 0;
                for chunk in candidates.chunks((*count).max(1)) {
                    if outcomes.len() >= *count {
                        break;
                    }
                    for o in eval(chunk, 0) {
                        drawn += 1;
                        if o.frame_ok {
                            if outcomes.len() < *count {
                                outcomes.push(o);
                            }
                        } else {
                            let reason = o.class.clone().err().unwrap_or_default();
                            *rejected.entry(reason).or_default() += 1;
                            if first_rejects.len() < *count {
                                first_rejects.push(o);
                            }
                        }
                    }
                }
                if outcomes.is_empty() {
                    outcomes = first_rejects;
                }
                for (i, o) in outcomes.iter_mut().enumerate() {
                    o.record.index = i;
                    for d in &mut o.discrepancies {
                        d.point_index = i;
                    }
                }
                report.sampling = Some(SamplingEcho {
                    seed: *seed,
                    box_radius: *radius,
                    center: center.to_string(),
                    requested: *count,
                    accepted: outcomes.iter().filter(|o| o.frame_ok).count(),
                    drawn,
                    rejected,
                });
            }
        }
    }

    let any_exhausted = outcomes.iter().any(|o| o.record.order_exhausted.is_some());
    let none_admissible = !outcomes.is_empty() && outcomes.iter().all(|o| !o.frame_ok);
    let classes: Vec<_> = outcomes.iter().map(|o| o.class.clone()).collect();
    let holds: Vec<_> = outcomes.iter().filter_map(|o| o.w_holds).collect();
    if let Some(first) = holds.first() {
        report.w_probe = Some(if holds.iter().all(|h| h == first) { first.to_string() } else { "mixed".to_owned() });
    }
    for o in outcomes {
        checks_passed &= o.checks_passed && (o.frame_ok || !matches!(plan.command, Command::Verify(_)));
        report.discrepancies.extend(o.discrepancies);
        report.points.push(o.record);
    }

    report.verdict = match plan.command {
        Command::Verify(_) => if checks_passed { "PASS" } else { "FAIL" }.to_owned(),
        _ => combine(&classes).label().to_owned(),
    };
    let status = if any_exhausted {
        Status::OrderExhausted
    } else if none_admissible {
        Status::Inadmissible
    } else if !checks_passed {
        Status::ChecksFailed
    } else {
        Status::Ok
    };
    Ok(Outcome {
        report,
        status,
        nonreal_warning,
    })
}
