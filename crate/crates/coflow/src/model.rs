//! Problem and solution data types, cost accounting, and the schedule
//! validator every allocator output must pass.
//!
//! Time slots are 1-indexed; a release date `r` blocks slots `1..=r`, so
//! the earliest slot for a coflow with release `r` is `r + 1`.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::rational::{format_rational, parse_rational, rat_u64, Rational};

/// A flow: a bipartite edge with an integer multiplicity of unit transfers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flow {
    pub u: usize,
    pub v: usize,
    #[serde(rename = "mult")]
    pub multiplicity: u64,
}

/// A weighted multiset of flows, optionally held back by a release date.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Coflow {
    #[serde(with = "weight_serde")]
    pub weight: Rational,
    #[serde(default)]
    pub release: u64,
    pub flows: Vec<Flow>,
}

/// A bipartite coflow scheduling instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Instance {
    #[serde(rename = "left")]
    pub left_count: usize,
    #[serde(rename = "right")]
    pub right_count: usize,
    pub coflows: Vec<Coflow>,
}

mod weight_serde {
    use super::*;
    use serde::de::Error;

    pub fn serialize<S: serde::Serializer>(w: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(w))
    }

    pub fn deserialize<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(i64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Int(n) => Ok(crate::rational::rat_int(n)),
            Repr::Str(s) => parse_rational(&s).map_err(D::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelError {
    /// Instance violates a structural invariant.
    BadInstance(String),
    /// Schedule references things the instance does not have.
    Structural(String),
    /// Schedule is structurally fine but breaks a validity rule.
    Invalid(Vec<Violation>),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::BadInstance(s) => write!(f, "bad instance: {s}"),
            ModelError::Structural(s) => write!(f, "structural error: {s}"),
            ModelError::Invalid(vs) => {
                write!(f, "invalid schedule ({} violations)", vs.len())?;
                for v in vs {
                    write!(f, "\n  {v}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for ModelError {}

impl Instance {
    pub fn validate_instance(&self) -> Result<(), ModelError> {
        if self.left_count == 0 || self.right_count == 0 {
            return Err(ModelError::BadInstance("empty vertex side".into()));
        }
        if self.coflows.is_empty() {
            return Err(ModelError::BadInstance("no coflows".into()));
        }
        for (j, c) in self.coflows.iter().enumerate() {
            if c.weight <= Rational::zero() {
                return Err(ModelError::BadInstance(format!("coflow {j} has weight <= 0")));
            }
            if c.flows.is_empty() {
                return Err(ModelError::BadInstance(format!("coflow {j} has no flows")));
            }
            for fl in &c.flows {
                if fl.multiplicity == 0 {
                    return Err(ModelError::BadInstance(format!(
                        "coflow {j} flow ({},{}) has multiplicity 0",
                        fl.u, fl.v
                    )));
                }
                if fl.u >= self.left_count || fl.v >= self.right_count {
                    return Err(ModelError::BadInstance(format!(
                        "coflow {j} flow ({},{}) endpoint out of range",
                        fl.u, fl.v
                    )));
                }
            }
        }
        Ok(())
    }

    /// Total multiplicity of flows with endpoints (u, v) in coflow j.
    /// Duplicate flow records are treated as interchangeable copies.
    pub fn flow_multiplicity(&self, j: usize, u: usize, v: usize) -> u64 {
        self.coflows[j]
            .flows
            .iter()
            .filter(|f| f.u == u && f.v == v)
            .map(|f| f.multiplicity)
            .sum()
    }

    /// All flows of the instance as one multiset.
    pub fn all_flows(&self) -> Vec<Flow> {
        self.coflows.iter().flat_map(|c| c.flows.iter().copied()).collect()
    }

    pub fn max_release(&self) -> u64 {
        self.coflows.iter().map(|c| c.release).max().unwrap_or(0)
    }

    pub fn has_releases(&self) -> bool {
        self.coflows.iter().any(|c| c.release > 0)
    }

    pub fn total_copies(&self) -> u64 {
        self.coflows
            .iter()
            .flat_map(|c| c.flows.iter())
            .map(|f| f.multiplicity)
            .sum()
    }

    pub fn total_weight(&self) -> Rational {
        self.coflows
            .iter()
            .map(|c| &c.weight)
            .fold(Rational::zero(), |acc, w| acc + w)
    }
}

/// One scheduled edge copy: coflow index plus the flow endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub coflow: usize,
    pub u: usize,
    pub v: usize,
}

/// Map from 1-indexed time slot to the edge copies scheduled in it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Schedule {
    pub slots: BTreeMap<u64, Vec<ScheduleEntry>>,
}

impl Schedule {
    pub fn push(&mut self, slot: u64, entry: ScheduleEntry) {
        self.slots.entry(slot).or_default().push(entry);
    }

    pub fn last_slot(&self) -> u64 {
        self.slots.keys().next_back().copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// A left or right vertex carries two edges in one slot.
    VertexConflict { slot: u64, side: Side, vertex: usize },
    /// An edge sits in a slot at or before its coflow's release date.
    ReleaseDate { slot: u64, coflow: usize, release: u64 },
    /// Scheduled copies of a flow do not match its multiplicity.
    FlowCount { coflow: usize, u: usize, v: usize, scheduled: u64, required: u64 },
    /// Slot 0 does not exist; slots are 1-indexed.
    ZeroSlot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::VertexConflict { slot, side, vertex } => {
                let s = match side {
                    Side::Left => "left",
                    Side::Right => "right",
                };
                write!(f, "vertex conflict: slot {slot}, {s} vertex {vertex}")
            }
            Violation::ReleaseDate { slot, coflow, release } => write!(
                f,
                "release date: coflow {coflow} (release {release}) has an edge in slot {slot}"
            ),
            Violation::FlowCount { coflow, u, v, scheduled, required } => write!(
                f,
                "flow count: coflow {coflow} flow ({u},{v}) scheduled {scheduled} of {required}"
            ),
            Violation::ZeroSlot => write!(f, "slot 0 used; slots are 1-indexed"),
        }
    }
}

/// Checks a schedule against all validity rules.
///
/// `Ok(vec![])` means valid; a nonempty vector lists every broken rule.
/// References to flows the instance does not have are structural errors,
/// reported separately from validity violations.
pub fn validate(instance: &Instance, schedule: &Schedule) -> Result<Vec<Violation>, ModelError> {
    instance.validate_instance()?;
    let mut violations = Vec::new();
    let mut counts: BTreeMap<(usize, usize, usize), u64> = BTreeMap::new();

    for (&slot, entries) in &schedule.slots {
        if slot == 0 {
            violations.push(Violation::ZeroSlot);
        }
        let mut left_seen: BTreeMap<usize, u32> = BTreeMap::new();
        let mut right_seen: BTreeMap<usize, u32> = BTreeMap::new();
        for e in entries {
            if e.coflow >= instance.coflows.len() {
                return Err(ModelError::Structural(format!(
                    "slot {slot}: coflow {} does not exist",
                    e.coflow
                )));
            }
            if instance.flow_multiplicity(e.coflow, e.u, e.v) == 0 {
                return Err(ModelError::Structural(format!(
                    "slot {slot}: coflow {} has no flow ({},{})",
                    e.coflow, e.u, e.v
                )));
            }
            *left_seen.entry(e.u).or_insert(0) += 1;
            *right_seen.entry(e.v).or_insert(0) += 1;
            let release = instance.coflows[e.coflow].release;
            if slot <= release {
                violations.push(Violation::ReleaseDate { slot, coflow: e.coflow, release });
            }
            *counts.entry((e.coflow, e.u, e.v)).or_insert(0) += 1;
        }
        for (&vertex, &n) in &left_seen {
            if n > 1 {
                violations.push(Violation::VertexConflict { slot, side: Side::Left, vertex });
            }
        }
        for (&vertex, &n) in &right_seen {
            if n > 1 {
                violations.push(Violation::VertexConflict { slot, side: Side::Right, vertex });
            }
        }
    }

    // Every flow must be scheduled exactly `multiplicity` times, with
    // duplicate flow records inside a coflow merged.
    let mut required: BTreeMap<(usize, usize, usize), u64> = BTreeMap::new();
    for (j, c) in instance.coflows.iter().enumerate() {
        for fl in &c.flows {
            *required.entry((j, fl.u, fl.v)).or_insert(0) += fl.multiplicity;
        }
    }
    for (&(j, u, v), &req) in &required {
        let got = counts.get(&(j, u, v)).copied().unwrap_or(0);
        if got != req {
            violations.push(Violation::FlowCount { coflow: j, u, v, scheduled: got, required: req });
        }
    }

    Ok(violations)
}

/// Per-coflow finishing times and the weighted total.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostReport {
    pub completion: Vec<u64>,
    pub total: Rational,
}

/// Weighted completion time of a schedule. Refuses invalid schedules.
pub fn cost(instance: &Instance, schedule: &Schedule) -> Result<CostReport, ModelError> {
    let violations = validate(instance, schedule)?;
    if !violations.is_empty() {
        return Err(ModelError::Invalid(violations));
    }
    let mut completion = vec![0u64; instance.coflows.len()];
    for (&slot, entries) in &schedule.slots {
        for e in entries {
            completion[e.coflow] = completion[e.coflow].max(slot);
        }
    }
    let total = instance
        .coflows
        .iter()
        .zip(&completion)
        .map(|(c, &t)| &c.weight * rat_u64(t))
        .fold(Rational::zero(), |acc, x| acc + x);
    Ok(CostReport { completion, total })
}

/// Maximum vertex degree of a flow multiset, multiplicities included.
pub fn max_degree(flows: &[Flow]) -> u64 {
    let mut left: BTreeMap<usize, u64> = BTreeMap::new();
    let mut right: BTreeMap<usize, u64> = BTreeMap::new();
    for f in flows {
        *left.entry(f.u).or_insert(0) += f.multiplicity;
        *right.entry(f.v).or_insert(0) += f.multiplicity;
    }
    left.values().chain(right.values()).copied().max().unwrap_or(0)
}

/// JSON wire form of a schedule: `{"slots": {"<t>": [{coflow,u,v}, ..]}}`.
#[derive(Serialize, Deserialize)]
struct ScheduleWire {
    slots: BTreeMap<String, Vec<ScheduleEntry>>,
}

pub fn schedule_to_json(schedule: &Schedule) -> String {
    let wire = ScheduleWire {
        slots: schedule
            .slots
            .iter()
            .map(|(t, es)| (t.to_string(), es.clone()))
            .collect(),
    };
    serde_json::to_string_pretty(&wire).expect("schedule serialization")
}

pub fn schedule_from_json(s: &str) -> Result<Schedule, String> {
    let wire: ScheduleWire = serde_json::from_str(s).map_err(|e| e.to_string())?;
    let mut slots = BTreeMap::new();
    for (t, es) in wire.slots {
        let slot: u64 = t.parse().map_err(|_| format!("bad slot key {t:?}"))?;
        slots.insert(slot, es);
    }
    Ok(Schedule { slots })
}

pub fn instance_to_json(instance: &Instance) -> String {
    serde_json::to_string_pretty(instance).expect("instance serialization")
}

pub fn instance_from_json(s: &str) -> Result<Instance, String> {
    let inst: Instance = serde_json::from_str(s).map_err(|e| e.to_string())?;
    inst.validate_instance().map_err(|e| e.to_string())?;
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat_int;

    pub fn unit_instance() -> Instance {
        Instance {
            left_count: 1,
            right_count: 1,
            coflows: vec![Coflow {
                weight: rat_int(1),
                release: 0,
                flows: vec![Flow { u: 0, v: 0, multiplicity: 1 }],
            }],
        }
    }

    #[test]
    fn single_edge_in_slot_one_is_valid() {
        let inst = unit_instance();
        let mut s = Schedule::default();
        s.push(1, ScheduleEntry { coflow: 0, u: 0, v: 0 });
        assert_eq!(validate(&inst, &s).unwrap(), vec![]);
        let report = cost(&inst, &s).unwrap();
        assert_eq!(report.total, rat_int(1));
        assert_eq!(report.completion, vec![1]);
    }

    #[test]
    fn shared_left_vertex_in_one_slot_is_a_conflict() {
        let inst = Instance {
            left_count: 1,
            right_count: 2,
            coflows: vec![Coflow {
                weight: rat_int(1),
                release: 0,
                flows: vec![
                    Flow { u: 0, v: 0, multiplicity: 1 },
                    Flow { u: 0, v: 1, multiplicity: 1 },
                ],
            }],
        };
        let mut s = Schedule::default();
        s.push(1, ScheduleEntry { coflow: 0, u: 0, v: 0 });
        s.push(1, ScheduleEntry { coflow: 0, u: 0, v: 1 });
        let violations = validate(&inst, &s).unwrap();
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::VertexConflict { slot: 1, side: Side::Left, vertex: 0 })));
        assert!(cost(&inst, &s).is_err());
    }

    #[test]
    fn release_date_blocks_early_slots() {
        let mut inst = unit_instance();
        inst.coflows[0].release = 2;
        let mut s = Schedule::default();
        s.push(2, ScheduleEntry { coflow: 0, u: 0, v: 0 });
        let violations = validate(&inst, &s).unwrap();
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::ReleaseDate { slot: 2, coflow: 0, release: 2 })));
        // slot r+1 is fine
        let mut s = Schedule::default();
        s.push(3, ScheduleEntry { coflow: 0, u: 0, v: 0 });
        assert_eq!(validate(&inst, &s).unwrap(), vec![]);
    }

    #[test]
    fn unknown_flow_is_structural_not_invalid() {
        let inst = unit_instance();
        let mut s = Schedule::default();
        s.push(1, ScheduleEntry { coflow: 0, u: 0, v: 0 });
        s.push(2, ScheduleEntry { coflow: 3, u: 0, v: 0 });
        assert!(matches!(validate(&inst, &s), Err(ModelError::Structural(_))));
    }

    #[test]
    fn weighted_total_sums_completions() {
        let inst = Instance {
            left_count: 1,
            right_count: 1,
            coflows: vec![
                Coflow {
                    weight: rat_int(1),
                    release: 0,
                    flows: vec![Flow { u: 0, v: 0, multiplicity: 1 }],
                },
                Coflow {
                    weight: rat_int(2),
                    release: 0,
                    flows: vec![Flow { u: 0, v: 0, multiplicity: 1 }],
                },
            ],
        };
        let mut s = Schedule::default();
        s.push(1, ScheduleEntry { coflow: 0, u: 0, v: 0 });
        s.push(2, ScheduleEntry { coflow: 1, u: 0, v: 0 });
        assert_eq!(cost(&inst, &s).unwrap().total, rat_int(5));
    }

    #[test]
    fn max_degree_examples() {
        assert_eq!(max_degree(&[Flow { u: 0, v: 0, multiplicity: 3 }]), 3);
        let k22: Vec<Flow> = (0..2)
            .flat_map(|u| (0..2).map(move |v| Flow { u, v, multiplicity: 1 }))
            .collect();
        assert_eq!(max_degree(&k22), 2);
        assert_eq!(max_degree(&[]), 0);
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"left":2,"right":2,"coflows":[
            {"weight":"3/2","release":1,"flows":[{"u":0,"v":1,"mult":2}]},
            {"weight":4,"flows":[{"u":1,"v":0,"mult":1}]}
        ]}"#;
        let inst = instance_from_json(text).unwrap();
        assert_eq!(inst.coflows[0].weight, crate::rational::rat(3, 2));
        assert_eq!(inst.coflows[1].weight, rat_int(4));
        assert_eq!(inst.coflows[1].release, 0);
        let back = instance_from_json(&instance_to_json(&inst)).unwrap();
        assert_eq!(instance_to_json(&back), instance_to_json(&inst));

        let mut s = Schedule::default();
        s.push(2, ScheduleEntry { coflow: 0, u: 0, v: 1 });
        let s2 = schedule_from_json(&schedule_to_json(&s)).unwrap();
        assert_eq!(s, s2);
    }
}
