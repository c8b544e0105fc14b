//! Finitely presented σ-subfield sequences.
//!
//! A scenario materializes at any horizon N as one ambient space, partitions
//! B_1..B_N, a limit candidate B_0, and optional test events. Materialization
//! is a pure function of (scenario, N); measures of named partitions and
//! events must agree across horizons (projective consistency), which the
//! detector checks for the built-in gallery.

use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::{Partition, PartitionDoc};
use crate::space::{Event, FiniteSpace, SpaceDoc};

/// Declared behavior of the infinite tail, if any. A declaration upgrades
/// windowed set-theoretic limits to exact ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum TailDeclaration {
    #[default]
    #[serde(rename = "none")]
    None,
    #[serde(rename = "constant")]
    EventuallyConstant,
    #[serde(rename = "inc")]
    MonotoneIncreasing,
    #[serde(rename = "dec")]
    MonotoneDecreasing,
}

impl FromStr for TailDeclaration {
    type Err = Error;
    fn from_str(s: &str) -> Result<TailDeclaration> {
        match s {
            "none" => Ok(TailDeclaration::None),
            "constant" => Ok(TailDeclaration::EventuallyConstant),
            "inc" => Ok(TailDeclaration::MonotoneIncreasing),
            "dec" => Ok(TailDeclaration::MonotoneDecreasing),
            other => Err(Error::Parse(format!("unknown tail declaration `{other}`"))),
        }
    }
}

/// One ambient space, the stage partitions B_1..B_N, the limit candidate
/// B_0, and named test events.
#[derive(Clone, Debug)]
pub struct Materialization {
    pub space: Arc<FiniteSpace>,
    pub b0: Partition,
    pub stages: Vec<Partition>,
    pub test_events: Vec<(String, Event)>,
    pub tail: TailDeclaration,
}

impl Materialization {
    pub fn horizon(&self) -> usize {
        self.stages.len()
    }

    /// stage partitions are 1-indexed
    pub fn stage(&self, n: usize) -> &Partition {
        &self.stages[n - 1]
    }
}

/// A scenario is anything that can materialize at a horizon.
pub trait Scenario {
    fn name(&self) -> &str;
    fn materialize(&self, horizon: usize) -> Result<Materialization>;
}

/// A scenario given extensionally by documents (already at one horizon).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExplicitScenario {
    pub space: SpaceDoc,
    pub b0: PartitionDoc,
    pub stages: Vec<PartitionDoc>,
    #[serde(default)]
    pub test_events: Vec<NamedEventDoc>,
    #[serde(default)]
    pub tail: TailDeclaration,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NamedEventDoc {
    pub name: String,
    pub outcomes: Vec<String>,
}

impl ExplicitScenario {
    pub fn build(&self) -> Result<Materialization> {
        let space = self.space.clone().build()?;
        let b0 = self.b0.build(&space)?;
        let stages = self
            .stages
            .iter()
            .map(|doc| doc.build(&space))
            .collect::<Result<Vec<_>>>()?;
        if stages.is_empty() {
            return Err(Error::Scenario("no stage partitions given".into()));
        }
        let test_events = self
            .test_events
            .iter()
            .map(|doc| {
                let ids: Vec<&str> = doc.outcomes.iter().map(|s| s.as_str()).collect();
                Ok((doc.name.clone(), Event::from_ids(&space, &ids)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Materialization {
            space,
            b0,
            stages,
            test_events,
            tail: self.tail,
        })
    }
}

impl Scenario for ExplicitScenario {
    fn name(&self) -> &str {
        "explicit"
    }

    fn materialize(&self, horizon: usize) -> Result<Materialization> {
        let mut m = self.build()?;
        if horizon > m.stages.len() {
            return Err(Error::Scenario(format!(
                "explicit scenario has {} stages, horizon {horizon} requested",
                m.stages.len()
            )));
        }
        m.stages.truncate(horizon);
        Ok(m)
    }
}

/// Document form of a scenario request:
/// `{"type":"gallery:<name>"|"explicit", "params":{…}, "tail":"none|constant|inc|dec"}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioDoc {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default)]
    pub params: serde_json::Value,
    #[serde(default)]
    pub tail: Option<String>,
}

pub fn scenario_from_json(bytes: &[u8]) -> Result<Box<dyn Scenario>> {
    let doc: ScenarioDoc = serde_json::from_slice(bytes)
        .map_err(|e| Error::Parse(format!("scenario document: {e}")))?;
    scenario_from_doc(&doc)
}

pub fn scenario_from_doc(doc: &ScenarioDoc) -> Result<Box<dyn Scenario>> {
    if doc.kind == "explicit" {
        let mut explicit: ExplicitScenario = serde_json::from_value(doc.params.clone())
            .map_err(|e| Error::Parse(format!("explicit scenario params: {e}")))?;
        if let Some(t) = &doc.tail {
            explicit.tail = t.parse()?;
        }
        return Ok(Box::new(explicit));
    }
    if let Some(name) = doc.kind.strip_prefix("gallery:") {
        return crate::gallery::by_name(name, &doc.params);
    }
    Err(Error::Parse(format!("unknown scenario type `{}`", doc.kind)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Scalar;

    #[test]
    fn explicit_scenario_builds_and_truncates() {
        let json = serde_json::json!({
            "space": {"outcomes": [
                {"id": "w1", "mass": "1/4"}, {"id": "w2", "mass": "1/4"},
                {"id": "w3", "mass": "1/4"}, {"id": "w4", "mass": "1/4"}
            ]},
            "b0": {"space": "S", "atoms": [["w1","w2","w3","w4"]]},
            "stages": [
                {"space": "S", "atoms": [["w1","w2"],["w3","w4"]]},
                {"space": "S", "atoms": [["w1","w3"],["w2","w4"]]}
            ],
            "test_events": [{"name": "A", "outcomes": ["w1"]}],
            "tail": "none"
        });
        let sc: ExplicitScenario = serde_json::from_value(json).unwrap();
        let m = sc.materialize(2).unwrap();
        assert_eq!(m.horizon(), 2);
        assert!(m.b0.is_trivial());
        assert_eq!(m.test_events[0].1.measure(), Scalar::from_ratio(1, 4).unwrap());
        let m1 = sc.materialize(1).unwrap();
        assert_eq!(m1.horizon(), 1);
        assert!(sc.materialize(3).is_err());
    }

    #[test]
    fn scenario_doc_dispatch() {
        let doc = serde_json::json!({
            "type": "explicit",
            "params": {
                "space": {"outcomes": [
                    {"id": "a", "mass": "1/2"}, {"id": "b", "mass": "1/2"}
                ]},
                "b0": {"atoms": [["a","b"]]},
                "stages": [{"atoms": [["a"],["b"]]}]
            },
            "tail": "constant"
        });
        let sc = scenario_from_json(serde_json::to_vec(&doc).unwrap().as_slice()).unwrap();
        let m = sc.materialize(1).unwrap();
        assert_eq!(m.tail, TailDeclaration::EventuallyConstant);
    }
}
