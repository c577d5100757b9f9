//! Work-conserving greedy edge allocation in deadline order.
//!
//! Copies go to the earliest slot (after the release date) where both
//! endpoints are free. Occupancy is kept as per-vertex interval sets and a
//! flow's copies are placed as a batch — the first p free common slots —
//! which is exactly what placing the copies one at a time does, so unit
//! and high-multiplicity instances share one code path and the runtime
//! depends on the number of flow records, not the multiplicities.

use std::fmt;

use num_traits::Zero;

use crate::deadlines::DeadlineProfile;
use crate::model::{Instance, Schedule, ScheduleEntry};
use crate::rational::{rat_u64, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GreedyError {
    ReleasesPresent,
    /// A finishing time exceeded the guaranteed bound, which certifies
    /// that the profile was not feasible for the block LP.
    BoundViolated { coflow: usize, finish: u64, bound: Rational },
}

impl fmt::Display for GreedyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GreedyError::ReleasesPresent => {
                write!(f, "greedy without release support got a released instance")
            }
            GreedyError::BoundViolated { coflow, finish, bound } => write!(
                f,
                "coflow {coflow} finished at {finish}, past its bound {}; profile was not LP-feasible",
                crate::rational::format_rational(bound)
            ),
        }
    }
}

impl std::error::Error for GreedyError {}

/// Sorted, disjoint, non-adjacent busy intervals, inclusive on both ends.
#[derive(Debug, Clone, Default)]
struct IntervalSet {
    ivs: Vec<(u64, u64)>,
}

impl IntervalSet {
    fn insert(&mut self, start: u64, end: u64) {
        debug_assert!(start <= end);
        let pos = self.ivs.partition_point(|&(_, e)| e + 1 < start);
        let mut new_start = start;
        let mut new_end = end;
        let mut remove_until = pos;
        while remove_until < self.ivs.len() && self.ivs[remove_until].0 <= end + 1 {
            new_start = new_start.min(self.ivs[remove_until].0);
            new_end = new_end.max(self.ivs[remove_until].1);
            remove_until += 1;
        }
        self.ivs.splice(pos..remove_until, [(new_start, new_end)]);
    }
}

/// Busy-union iterator: free gaps common to two interval sets, from
/// `min_slot` upward.
fn take_common_free(
    a: &IntervalSet,
    b: &IntervalSet,
    min_slot: u64,
    mut count: u64,
) -> Vec<(u64, u64)> {
    // merge the two busy lists into a sorted union walk
    let mut merged: Vec<(u64, u64)> = Vec::with_capacity(a.ivs.len() + b.ivs.len());
    let (mut i, mut j) = (0, 0);
    while i < a.ivs.len() || j < b.ivs.len() {
        let next = if j >= b.ivs.len() || (i < a.ivs.len() && a.ivs[i].0 <= b.ivs[j].0) {
            let x = a.ivs[i];
            i += 1;
            x
        } else {
            let x = b.ivs[j];
            j += 1;
            x
        };
        match merged.last_mut() {
            Some((_, e)) if next.0 <= *e + 1 => *e = (*e).max(next.1),
            _ => merged.push(next),
        }
    }

    let mut taken = Vec::new();
    let mut cursor = min_slot;
    let mut k = 0;
    while count > 0 {
        // advance cursor past busy intervals
        while k < merged.len() && merged[k].1 < cursor {
            k += 1;
        }
        let gap_end = if k < merged.len() && merged[k].0 <= cursor {
            cursor = merged[k].1 + 1;
            k += 1;
            continue;
        } else if k < merged.len() {
            merged[k].0 - 1
        } else {
            u64::MAX
        };
        let len = (gap_end - cursor + 1).min(count);
        taken.push((cursor, cursor + len - 1));
        count -= len;
        cursor += len;
    }
    taken
}

/// Compact allocation result: per flow record, the busy intervals holding
/// its copies; per coflow, the finishing slot.
#[derive(Debug, Clone)]
pub struct GreedyPlan {
    /// Indexed like the instance: per coflow, per flow record.
    pub placements: Vec<Vec<Vec<(u64, u64)>>>,
    pub finish: Vec<u64>,
}

/// Per-coflow finishing slots observed by the allocator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GreedyTrace {
    pub finish: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct GreedyOutcome {
    pub schedule: Schedule,
    pub trace: GreedyTrace,
}

/// First-fit allocation: coflows in profile order (ties by index), flow
/// records in input order, copies batched.
pub fn greedy_plan(instance: &Instance, profile: &DeadlineProfile) -> GreedyPlan {
    let mut left: Vec<IntervalSet> = vec![IntervalSet::default(); instance.left_count];
    let mut right: Vec<IntervalSet> = vec![IntervalSet::default(); instance.right_count];
    let mut placements: Vec<Vec<Vec<(u64, u64)>>> =
        instance.coflows.iter().map(|c| vec![Vec::new(); c.flows.len()]).collect();
    let mut finish = vec![0u64; instance.coflows.len()];

    for &j in &profile.order {
        let coflow = &instance.coflows[j];
        for (fi, flow) in coflow.flows.iter().enumerate() {
            let taken = take_common_free(
                &left[flow.u],
                &right[flow.v],
                coflow.release + 1,
                flow.multiplicity,
            );
            for &(s, e) in &taken {
                left[flow.u].insert(s, e);
                right[flow.v].insert(s, e);
                finish[j] = finish[j].max(e);
            }
            placements[j][fi] = taken;
        }
    }
    GreedyPlan { placements, finish }
}

pub fn expand_plan(instance: &Instance, plan: &GreedyPlan) -> Schedule {
    let mut schedule = Schedule::default();
    for (j, coflow) in instance.coflows.iter().enumerate() {
        for (fi, flow) in coflow.flows.iter().enumerate() {
            for &(s, e) in &plan.placements[j][fi] {
                for slot in s..=e {
                    schedule.push(slot, ScheduleEntry { coflow: j, u: flow.u, v: flow.v });
                }
            }
        }
    }
    schedule
}

fn check_bounds(
    instance: &Instance,
    profile: &DeadlineProfile,
    plan: &GreedyPlan,
    with_release: bool,
) -> Result<(), GreedyError> {
    for (j, &finish) in plan.finish.iter().enumerate() {
        let mut bound = rat_u64(2) * &profile.deadlines[j] - rat_u64(1);
        if with_release {
            bound += rat_u64(instance.coflows[j].release);
        }
        if rat_u64(finish) > bound {
            return Err(GreedyError::BoundViolated { coflow: j, finish, bound });
        }
    }
    Ok(())
}

/// Greedy for release-free instances; every coflow finishes by 2*C_j - 1.
pub fn greedy(instance: &Instance, profile: &DeadlineProfile) -> Result<GreedyOutcome, GreedyError> {
    if instance.has_releases() {
        return Err(GreedyError::ReleasesPresent);
    }
    let plan = greedy_plan(instance, profile);
    check_bounds(instance, profile, &plan, false)?;
    Ok(GreedyOutcome {
        schedule: expand_plan(instance, &plan),
        trace: GreedyTrace { finish: plan.finish },
    })
}

/// Greedy with release dates; every coflow finishes by r_j + 2*C_j - 1.
pub fn greedy_r(instance: &Instance, profile: &DeadlineProfile) -> Result<GreedyOutcome, GreedyError> {
    let plan = greedy_plan(instance, profile);
    check_bounds(instance, profile, &plan, true)?;
    Ok(GreedyOutcome {
        schedule: expand_plan(instance, &plan),
        trace: GreedyTrace { finish: plan.finish },
    })
}

/// Multiplicity-aware greedy. The allocation itself never expands copies,
/// so it is polynomial in the number of flow records and the bit length
/// of the multiplicities; only the returned `Schedule` is materialized.
pub fn greedy_multiplicity(
    instance: &Instance,
    profile: &DeadlineProfile,
) -> Result<GreedyOutcome, GreedyError> {
    let plan = greedy_plan(instance, profile);
    check_bounds(instance, profile, &plan, instance.has_releases())?;
    Ok(GreedyOutcome {
        schedule: expand_plan(instance, &plan),
        trace: GreedyTrace { finish: plan.finish },
    })
}

/// Weighted cost of a plan without materializing a schedule.
pub fn plan_cost(instance: &Instance, plan: &GreedyPlan) -> Rational {
    instance
        .coflows
        .iter()
        .zip(&plan.finish)
        .map(|(c, &t)| &c.weight * rat_u64(t))
        .fold(Rational::zero(), |a, b| a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{cost, validate, Coflow, Flow};
    use crate::rational::{rat, rat_int};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    fn inst(coflows: Vec<Coflow>, left: usize, right: usize) -> Instance {
        Instance { left_count: left, right_count: right, coflows }
    }

    fn profile(instance: &Instance, deadlines: Vec<Rational>) -> DeadlineProfile {
        DeadlineProfile::new(instance, deadlines, None).unwrap()
    }

    /// Slot-by-slot reference implementation: one copy at a time into the
    /// first slot where both endpoints are free.
    fn brute_greedy(instance: &Instance, profile: &DeadlineProfile) -> Vec<u64> {
        let mut left: Vec<BTreeSet<u64>> = vec![BTreeSet::new(); instance.left_count];
        let mut right: Vec<BTreeSet<u64>> = vec![BTreeSet::new(); instance.right_count];
        let mut finish = vec![0u64; instance.coflows.len()];
        for &j in &profile.order {
            let c = &instance.coflows[j];
            for f in &c.flows {
                for _ in 0..f.multiplicity {
                    let mut slot = c.release + 1;
                    while left[f.u].contains(&slot) || right[f.v].contains(&slot) {
                        slot += 1;
                    }
                    left[f.u].insert(slot);
                    right[f.v].insert(slot);
                    finish[j] = finish[j].max(slot);
                }
            }
        }
        finish
    }

    #[test]
    fn single_unit_coflow_finishes_in_slot_one() {
        let instance = inst(
            vec![Coflow { weight: rat_int(1), release: 0, flows: vec![Flow { u: 0, v: 0, multiplicity: 1 }] }],
            1,
            1,
        );
        let p = profile(&instance, vec![rat_int(1)]);
        let out = greedy(&instance, &p).unwrap();
        assert_eq!(out.trace.finish, vec![1]);
        assert_eq!(cost(&instance, &out.schedule).unwrap().total, rat_int(1));
    }

    #[test]
    fn forced_conflict_respects_bound() {
        // E2 shares the left vertex with E1, deadlines (1, 2)
        let instance = inst(
            vec![
                Coflow { weight: rat_int(1), release: 0, flows: vec![Flow { u: 0, v: 0, multiplicity: 1 }] },
                Coflow { weight: rat_int(1), release: 0, flows: vec![Flow { u: 0, v: 1, multiplicity: 1 }] },
            ],
            1,
            2,
        );
        let p = profile(&instance, vec![rat_int(1), rat_int(2)]);
        let out = greedy(&instance, &p).unwrap();
        assert_eq!(out.trace.finish, vec![1, 2]);
        assert!(rat_u64(out.trace.finish[1]) <= rat_int(3));
    }

    #[test]
    fn release_shifts_start() {
        let instance = inst(
            vec![Coflow { weight: rat_int(1), release: 3, flows: vec![Flow { u: 0, v: 0, multiplicity: 1 }] }],
            1,
            1,
        );
        let p = profile(&instance, vec![rat_int(4)]);
        let out = greedy_r(&instance, &p).unwrap();
        assert_eq!(out.trace.finish, vec![4]);
        assert!(greedy(&instance, &p).is_err(), "plain greedy rejects releases");
        assert_eq!(validate(&instance, &out.schedule).unwrap(), vec![]);
    }

    #[test]
    fn two_coflows_one_pair_stack_in_order() {
        let instance = inst(
            vec![
                Coflow { weight: rat_int(1), release: 0, flows: vec![Flow { u: 0, v: 0, multiplicity: 1 }] },
                Coflow { weight: rat_int(1), release: 0, flows: vec![Flow { u: 0, v: 0, multiplicity: 1 }] },
            ],
            1,
            1,
        );
        let p = profile(&instance, vec![rat_int(1), rat_int(2)]);
        let out = greedy_r(&instance, &p).unwrap();
        assert_eq!(out.trace.finish, vec![1, 2]);
    }

    #[test]
    fn infeasible_profile_is_rejected_via_bound() {
        // two parallel copies cannot meet deadline 1; bound 2*1-1 = 1 < 2
        let instance = inst(
            vec![Coflow { weight: rat_int(1), release: 0, flows: vec![Flow { u: 0, v: 0, multiplicity: 2 }] }],
            1,
            1,
        );
        let p = profile(&instance, vec![rat_int(1)]);
        assert!(matches!(
            greedy(&instance, &p),
            Err(GreedyError::BoundViolated { coflow: 0, finish: 2, .. })
        ));
    }

    #[test]
    fn batched_allocation_matches_per_copy_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..150 {
            let left = rng.gen_range(1..=4);
            let right = rng.gen_range(1..=4);
            let n = rng.gen_range(1..=4);
            let coflows: Vec<Coflow> = (0..n)
                .map(|_| {
                    let k = rng.gen_range(1..=3);
                    Coflow {
                        weight: rat_int(rng.gen_range(1..=5)),
                        release: rng.gen_range(0..=3),
                        flows: (0..k)
                            .map(|_| Flow {
                                u: rng.gen_range(0..left),
                                v: rng.gen_range(0..right),
                                multiplicity: rng.gen_range(1..=4),
                            })
                            .collect(),
                    }
                })
                .collect();
            let instance = inst(coflows, left, right);
            // deadlines irrelevant for allocation order determinism: use
            // large ones so the bound check cannot fire
            let deadlines: Vec<Rational> = instance
                .coflows
                .iter()
                .map(|c| rat_u64(c.release) + rat_int(40))
                .collect();
            let p = profile(&instance, deadlines);
            let plan = greedy_plan(&instance, &p);
            assert_eq!(plan.finish, brute_greedy(&instance, &p));
            let schedule = expand_plan(&instance, &plan);
            assert_eq!(validate(&instance, &schedule).unwrap(), vec![]);
        }
    }

    #[test]
    fn high_multiplicity_plan_avoids_expansion() {
        let instance = inst(
            vec![Coflow {
                weight: rat_int(1),
                release: 0,
                flows: vec![Flow { u: 0, v: 0, multiplicity: 1_000_000 }],
            }],
            1,
            1,
        );
        let p = profile(&instance, vec![rat_int(1_000_000)]);
        let plan = greedy_plan(&instance, &p);
        assert_eq!(plan.finish, vec![1_000_000]);
        assert_eq!(plan.placements[0][0], vec![(1, 1_000_000)]);
        assert_eq!(plan_cost(&instance, &plan), rat_int(1_000_000));
    }

    #[test]
    fn interval_set_merges_neighbors() {
        let mut s = IntervalSet::default();
        s.insert(5, 7);
        s.insert(1, 2);
        s.insert(3, 4); // adjacent to both sides of (1,2) and (5,7)? joins 1..4
        assert_eq!(s.ivs, vec![(1, 7)]);
        s.insert(10, 10);
        s.insert(8, 9);
        assert_eq!(s.ivs, vec![(1, 10)]);
    }

    #[test]
    fn deadline_ties_break_by_index() {
        let instance = inst(
            vec![
                Coflow { weight: rat_int(1), release: 0, flows: vec![Flow { u: 0, v: 0, multiplicity: 1 }] },
                Coflow { weight: rat_int(1), release: 0, flows: vec![Flow { u: 0, v: 0, multiplicity: 1 }] },
            ],
            1,
            1,
        );
        let p = profile(&instance, vec![rat(3, 2), rat(3, 2)]);
        let out = greedy_r(&instance, &p).unwrap();
        assert_eq!(out.trace.finish, vec![1, 2], "earlier index goes first on ties");
    }
}
