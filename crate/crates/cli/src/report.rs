//! The JSON report document.
//!
//! Documents are serialized through `serde_json::Value`, whose maps are
//! ordered, so keys come out sorted and identical requests give identical
//! bytes.

use std::collections::BTreeMap;

use crparallax_core::frame::Admissibility;
use crparallax_core::invariants::NormalizedGroupParams;
use crparallax_core::verify::IdentityResult;
use crparallax_core::{Scalar, C64};
use serde::Serialize;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComplexValue {
    pub re: String,
    pub im: String,
}

impl ComplexValue {
    pub fn of<S: Scalar>(x: &S) -> Self {
        let (re, im) = x.render();
        ComplexValue { re, im }
    }

    fn pair((re, im): (String, String)) -> Self {
        ComplexValue { re, im }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SurfaceEcho {
    pub name: String,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SamplingEcho {
    pub seed: u64,
    #[serde(rename = "box")]
    pub box_radius: f64,
    pub center: String,
    pub requested: usize,
    pub accepted: usize,
    pub drawn: usize,
    /// Rejected draws by reason.
    pub rejected: BTreeMap<String, usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdmissibleRecord {
    pub rank: Option<u8>,
    pub two_nondeg: bool,
    pub pivot: bool,
    pub realness: bool,
    pub residuals: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl AdmissibleRecord {
    pub fn from_flags(a: &Admissibility, reason: Option<String>) -> Self {
        AdmissibleRecord {
            rank: Some(a.levi_rank),
            two_nondeg: a.two_nondegenerate,
            pivot: a.pivot_ok,
            realness: a.realness_ok,
            residuals: a.residuals.clone(),
            reason,
        }
    }

    /// For failures that happen before the Levi form is known.
    pub fn unknown(realness: bool, reason: String) -> Self {
        AdmissibleRecord {
            rank: None,
            two_nondeg: false,
            pivot: false,
            realness,
            residuals: BTreeMap::new(),
            reason: Some(reason),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Values {
    pub k: Option<ComplexValue>,
    pub l: Option<ComplexValue>,
    #[serde(rename = "P")]
    pub p: Option<ComplexValue>,
    #[serde(rename = "H")]
    pub h: Option<ComplexValue>,
    #[serde(rename = "W")]
    pub w: Option<ComplexValue>,
    #[serde(rename = "J")]
    pub j: Option<ComplexValue>,
    #[serde(rename = "J_expanded")]
    pub j_expanded: Option<ComplexValue>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityRecord {
    pub name: String,
    pub residual: f64,
    pub scale: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw: Option<ComplexValue>,
}

impl From<&IdentityResult> for IdentityRecord {
    fn from(r: &IdentityResult) -> Self {
        IdentityRecord {
            name: r.name.clone(),
            residual: r.residual,
            scale: r.scale,
            tolerance: r.tolerance,
            passed: r.passed,
            raw: r.raw.clone().map(ComplexValue::pair),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossCheck {
    pub formula: String,
    pub residual: f64,
    pub tolerance: f64,
    pub agrees: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WProbeRecord {
    pub relations: Vec<IdentityRecord>,
    /// Which stated relation held: `first`, `second`, `both` or `neither`.
    pub holds: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchRecord {
    pub branch: String,
    pub f: ComplexValue,
    pub b: ComplexValue,
    pub d: ComplexValue,
    pub e: ComplexValue,
    pub c: ComplexValue,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub root_branch: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub consistency_residual: Option<f64>,
}

impl From<&NormalizedGroupParams> for BranchRecord {
    fn from(p: &NormalizedGroupParams) -> Self {
        let c = |x: C64| ComplexValue::of(&x);
        BranchRecord {
            branch: p.branch.label().to_owned(),
            f: c(p.f),
            b: c(p.b),
            d: c(p.d),
            e: c(p.e),
            c: c(p.c),
            root_branch: p.root_branch.map(str::to_owned),
            consistency_residual: p.consistency_residual,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointRecord {
    pub index: usize,
    pub point: String,
    pub admissible: AdmissibleRecord,
    /// `Flat`, `JNonzero` or `WNonzero` when the invariants were computed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Values>,
    pub identities: Vec<IdentityRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub cross_checks: Vec<CrossCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_probe: Option<WProbeRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub branch_params: Option<BranchRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order_exhausted: Option<String>,
}

/// A formula whose two evaluation routes disagreed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Discrepancy {
    pub formula: String,
    pub point_index: usize,
    pub residual: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportDocument {
    pub version: String,
    pub command: String,
    pub backend: String,
    pub order: usize,
    pub swap_z: bool,
    pub surface: Option<SurfaceEcho>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampling: Option<SamplingEcho>,
    pub points: Vec<PointRecord>,
    pub discrepancies: Vec<Discrepancy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model_algebra: Option<IdentityRecord>,
    /// Aggregate of the per-point W probe outcomes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_probe: Option<String>,
    pub verdict: String,
}

impl ReportDocument {
    pub fn to_json(&self) -> String {
        let v = serde_json::to_value(self).expect("report serializes");
        let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc() -> ReportDocument {
        ReportDocument {
            version: VERSION.to_owned(),
            command: "analyze".to_owned(),
            backend: "floating".to_owned(),
            order: 8,
            swap_z: false,
            surface: Some(SurfaceEcho {
                name: "s".to_owned(),
                text: "z1".to_owned(),
            }),
            sampling: None,
            points: vec![],
            discrepancies: vec![],
            model_algebra: None,
            w_probe: None,
            verdict: "FLAT_LIGHT_CONE_TUBE".to_owned(),
        }
    }

    #[test]
    fn keys_are_sorted() {
        let s = doc().to_json();
        let pos = |k: &str| s.find(&format!("\"{k}\"")).unwrap();
        assert!(pos("backend") < pos("command"));
        assert!(pos("surface") < pos("verdict"));
        assert!(pos("verdict") < pos("version"));
        assert_eq!(s, doc().to_json());
    }

    #[test]
    fn value_names_follow_schema() {
        let v = serde_json::to_value(Values::default()).unwrap();
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys, ["H", "J", "J_expanded", "P", "W", "k", "l"]);
    }
}
