//! JSON pair specifications. Unknown keys are rejected everywhere.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{PairSpec, Tolerances, DEFAULT_SAMPLES};
use crate::error::{Error, Result};
use crate::family::{BaseMeasure, CarrierSpec, FamilySpec};
use crate::group::{CharacterBasis, ChartKind, GroupChart, RepSpec, RepTemplate, SubgroupSpec};
use crate::numkernel::Vector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupField {
    pub kind: ChartKind,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SubgroupField {
    #[default]
    Trivial,
    FiniteList {
        elements: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RepField {
    DiagonalWeights { weights: Vec<f64> },
    Rotation { frequencies: Vec<f64> },
    LogUnipotent,
    DirectSum { summands: Vec<RepField> },
}

impl RepField {
    fn template(&self) -> RepTemplate {
        match self {
            RepField::DiagonalWeights { weights } => RepTemplate::DiagonalWeights(weights.clone()),
            RepField::Rotation { frequencies } => RepTemplate::Rotation(frequencies.clone()),
            RepField::LogUnipotent => RepTemplate::LogUnipotent,
            RepField::DirectSum { summands } => {
                RepTemplate::DirectSum(summands.iter().map(RepField::template).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharactersField {
    pub kind: CharacterBasis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplesField {
    pub count: usize,
    pub seed: u64,
}

impl Default for SamplesField {
    fn default() -> Self {
        Self { count: DEFAULT_SAMPLES, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarrierField {
    pub base: BaseMeasureField,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseMeasureField {
    Haar,
    Lebesgue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub group: GroupField,
    #[serde(default)]
    pub subgroup: SubgroupField,
    pub representation: RepField,
    pub v0: Vec<f64>,
    #[serde(default)]
    pub characters: CharactersField,
    #[serde(default)]
    pub samples: SamplesField,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Base measure of the family; Haar when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub carrier: Option<CarrierField>,
}

impl SpecFile {
    pub fn parse(text: &str) -> Result<Self> {
        let spec: SpecFile = serde_json::from_str(text).map_err(|e| Error::invalid(format!("spec: {e}")))?;
        spec.tolerances.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::InvalidInput(msg) => Error::InvalidInput(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn chart(&self) -> GroupChart {
        GroupChart::new(self.group.kind)
    }

    pub fn subgroup(&self) -> SubgroupSpec {
        match &self.subgroup {
            SubgroupField::Trivial => SubgroupSpec::Trivial,
            SubgroupField::FiniteList { elements } => SubgroupSpec::FiniteList(elements.clone()),
        }
    }

    pub fn pair(&self) -> Result<PairSpec> {
        let rep = RepSpec::new(self.representation.template(), self.chart())?.shared();
        PairSpec::new(rep, Vector::from_column_slice(&self.v0), self.subgroup(), self.characters.kind)
    }

    pub fn family(&self) -> Result<FamilySpec> {
        let base = match self.carrier.as_ref().map(|c| c.base) {
            Some(BaseMeasureField::Lebesgue) => BaseMeasure::Lebesgue,
            _ => BaseMeasure::Haar,
        };
        FamilySpec::new(self.pair()?, CarrierSpec { chart: self.chart(), base })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GIG: &str = r#"{
        "group": {"kind": "positive_reals"},
        "subgroup": {"kind": "trivial"},
        "representation": {"kind": "diagonal_weights", "weights": [1, -1]},
        "v0": [0.5, 0.5],
        "characters": {"kind": "power"}
    }"#;

    #[test]
    fn parses_the_gig_spec() {
        let s = SpecFile::parse(GIG).unwrap();
        assert_eq!(s.samples, SamplesField::default());
        assert_eq!(s.tolerances, Tolerances::default());
        let p = s.pair().unwrap();
        assert_eq!(p.dim(), 2);
        s.family().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let extra = GIG.replace("\"v0\"", "\"extra\": 1, \"v0\"");
        assert!(SpecFile::parse(&extra).is_err());
        let nested = GIG.replace("\"weights\"", "\"scale\": 2, \"weights\"");
        assert!(SpecFile::parse(&nested).is_err());
        let bad_kind = GIG.replace("diagonal_weights", "diagonal");
        assert!(SpecFile::parse(&bad_kind).is_err());
    }

    #[test]
    fn errors_carry_positions() {
        let msg = SpecFile::parse("{\n \"group\": {\"kind\": 3}\n}").unwrap_err().to_string();
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn nested_and_finite_subgroups() {
        let s = SpecFile::parse(
            r#"{"group": {"kind": "circle"},
                "subgroup": {"kind": "finite_list", "elements": [3.141592653589793]},
                "representation": {"kind": "direct_sum", "summands": [
                    {"kind": "rotation", "frequencies": [2]},
                    {"kind": "diagonal_weights", "weights": [0]}]},
                "v0": [1, 0, 1],
                "tolerances": {"rank_rel": 1e-10}}"#,
        )
        .unwrap();
        assert_eq!(s.tolerances.rank_rel, 1e-10);
        assert_eq!(s.tolerances.quad_tol, Tolerances::default().quad_tol);
        assert_eq!(s.pair().unwrap().dim(), 3);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let s = SpecFile::parse(&GIG.replace("[0.5, 0.5]", "[0.5, 0.5, 1]")).unwrap();
        assert!(s.pair().is_err());
    }
}
