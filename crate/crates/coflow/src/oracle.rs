//! Exact optimal scheduler for desk-scale instances, plus an exhaustive
//! deadline-feasibility search and the half-integral gadget fixture.
//!
//! The optimum is found by memoized search over per-slot matchings. Only
//! maximal matchings of the currently eligible edges need considering:
//! moving any copy into an earlier slot with both endpoints free never
//! hurts a completion time, so some optimal schedule is maximal in every
//! slot. Idle slots are skipped straight to the next release.

use std::collections::HashMap;
use std::fmt;

use num_traits::Zero;

use crate::deadlines::{merged_flows, DeadlineProfile, FracFlow};
use crate::model::{CostReport, Instance, Schedule, ScheduleEntry};
use crate::rational::{floor_u64, rat_int, rat_u64, Rational};

pub const DEFAULT_COPY_LIMIT: u64 = 10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleError {
    TooLarge { copies: u64, limit: u64 },
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::TooLarge { copies, limit } => {
                write!(f, "instance has {copies} edge copies, oracle limit is {limit}")
            }
        }
    }
}

impl std::error::Error for OracleError {}

#[derive(Debug, Clone)]
pub struct OptResult {
    pub report: CostReport,
    pub schedule: Schedule,
}

struct SearchCtx {
    flows: Vec<FracFlow>,
    weights: Vec<Rational>,
    coflow_of: Vec<usize>,
    n_coflows: usize,
    horizon: u64,
    /// maximal matchings, cached per eligible-flow bitmask
    matchings: HashMap<u64, Vec<u64>>,
    /// all matchings (including non-maximal), for the exhaustive variant
    all_matchings: HashMap<u64, Vec<u64>>,
    memo: HashMap<(u64, Vec<u64>), (Rational, u64)>,
}

impl SearchCtx {
    fn new(instance: &Instance, horizon: u64) -> Self {
        let flows = merged_flows(instance);
        let coflow_of = flows.iter().map(|f| f.coflow).collect();
        SearchCtx {
            weights: instance.coflows.iter().map(|c| c.weight.clone()).collect(),
            coflow_of,
            n_coflows: instance.coflows.len(),
            flows,
            horizon,
            matchings: HashMap::new(),
            all_matchings: HashMap::new(),
            memo: HashMap::new(),
        }
    }

    fn conflict(&self, a: usize, b: usize) -> bool {
        self.flows[a].u == self.flows[b].u || self.flows[a].v == self.flows[b].v
    }

    fn enumerate_matchings(&mut self, mask: u64, maximal_only: bool) -> Vec<u64> {
        let cache = if maximal_only { &self.matchings } else { &self.all_matchings };
        if let Some(v) = cache.get(&mask) {
            return v.clone();
        }
        let members: Vec<usize> =
            (0..self.flows.len()).filter(|i| mask & (1 << i) != 0).collect();
        let mut out = Vec::new();
        let mut chosen: Vec<usize> = Vec::new();
        self.rec_matchings(&members, 0, &mut chosen, &mut out, maximal_only);
        if maximal_only {
            self.matchings.insert(mask, out.clone());
        } else {
            self.all_matchings.insert(mask, out.clone());
        }
        out
    }

    fn rec_matchings(
        &self,
        members: &[usize],
        idx: usize,
        chosen: &mut Vec<usize>,
        out: &mut Vec<u64>,
        maximal_only: bool,
    ) {
        if idx == members.len() {
            let m: u64 = chosen.iter().map(|&i| 1u64 << i).sum();
            if maximal_only {
                // maximal: every eligible flow conflicts with the set
                let ok = members.iter().all(|&i| {
                    m & (1 << i) != 0 || chosen.iter().any(|&c| self.conflict(c, i))
                });
                if ok {
                    out.push(m);
                }
            } else {
                out.push(m);
            }
            return;
        }
        let f = members[idx];
        let compatible = chosen.iter().all(|&c| !self.conflict(c, f));
        if compatible {
            chosen.push(f);
            self.rec_matchings(members, idx + 1, chosen, out, maximal_only);
            chosen.pop();
        }
        self.rec_matchings(members, idx + 1, chosen, out, maximal_only);
    }

    fn eligible_mask(&self, slot: u64, remaining: &[u64]) -> u64 {
        let mut mask = 0u64;
        for (i, f) in self.flows.iter().enumerate() {
            if remaining[i] > 0 && slot > f.release {
                mask |= 1 << i;
            }
        }
        mask
    }

    /// Cost strictly above any schedule finishing within the horizon;
    /// marks branches that idle past it.
    fn infeasible_sentinel(&self) -> Rational {
        let total_weight = self
            .weights
            .iter()
            .fold(Rational::zero(), |a, w| a + w);
        total_weight * rat_u64(self.horizon + 1) + rat_int(1)
    }

    /// Minimum cost-to-go from `slot` with the given remaining copies.
    /// Returns the value and the matching chosen at this slot.
    fn best(&mut self, slot: u64, remaining: &[u64], maximal_only: bool) -> (Rational, u64) {
        if remaining.iter().all(|&r| r == 0) {
            return (Rational::zero(), 0);
        }
        // jump idle stretches straight to the next release
        let mut slot = slot;
        let mut mask = self.eligible_mask(slot, remaining);
        if mask == 0 {
            let next = self
                .flows
                .iter()
                .enumerate()
                .filter(|(i, _)| remaining[*i] > 0)
                .map(|(_, f)| f.release + 1)
                .filter(|&s| s > slot)
                .min()
                .expect("work remains, so a release lies ahead");
            slot = next;
            mask = self.eligible_mask(slot, remaining);
        }
        if slot > self.horizon {
            // only reachable through voluntarily idle branches of the
            // exhaustive variant
            return (self.infeasible_sentinel(), 0);
        }

        let key = (slot, remaining.to_vec());
        if let Some(hit) = self.memo.get(&key) {
            return hit.clone();
        }

        let matchings = self.enumerate_matchings(mask, maximal_only);
        let mut best: Option<(Rational, u64)> = None;
        for m in matchings {
            let mut rem = remaining.to_vec();
            let mut newly_done = Vec::new();
            for (i, r) in rem.iter_mut().enumerate() {
                if m & (1 << i) != 0 {
                    *r -= 1;
                }
            }
            for j in 0..self.n_coflows {
                let done = (0..self.flows.len())
                    .filter(|&i| self.coflow_of[i] == j)
                    .all(|i| rem[i] == 0);
                let was_done = (0..self.flows.len())
                    .filter(|&i| self.coflow_of[i] == j)
                    .all(|i| remaining[i] == 0);
                if done && !was_done {
                    newly_done.push(j);
                }
            }
            let mut value = newly_done
                .iter()
                .map(|&j| &self.weights[j] * rat_u64(slot))
                .fold(Rational::zero(), |a, b| a + b);
            value += self.best(slot + 1, &rem, maximal_only).0;
            let better = match &best {
                None => true,
                Some((v, _)) => value < *v,
            };
            if better {
                best = Some((value, m));
            }
        }
        let best = best.expect("eligible mask nonempty gives at least one matching");
        self.memo.insert(key, best.clone());
        best
    }

    fn reconstruct(&mut self, maximal_only: bool) -> Schedule {
        let mut schedule = Schedule::default();
        let mut remaining: Vec<u64> = self.flows.iter().map(|f| f.multiplicity).collect();
        let mut slot = 1;
        while remaining.iter().any(|&r| r > 0) {
            if self.eligible_mask(slot, &remaining) == 0 {
                slot += 1;
                continue;
            }
            let (_, m) = self.best(slot, &remaining, maximal_only);
            for (i, f) in self.flows.iter().enumerate() {
                if m & (1 << i) != 0 {
                    remaining[i] -= 1;
                    schedule.push(slot, ScheduleEntry { coflow: f.coflow, u: f.u, v: f.v });
                }
            }
            slot += 1;
        }
        schedule
    }
}

fn check_limit(instance: &Instance, limit: u64) -> Result<(), OracleError> {
    let copies = instance.total_copies();
    if copies > limit {
        return Err(OracleError::TooLarge { copies, limit });
    }
    Ok(())
}

fn run_opt(
    instance: &Instance,
    horizon: Option<u64>,
    limit: u64,
    maximal_only: bool,
) -> Result<OptResult, OracleError> {
    check_limit(instance, limit)?;
    let horizon = horizon.unwrap_or_else(|| instance.max_release() + instance.total_copies());
    let mut ctx = SearchCtx::new(instance, horizon);
    let remaining: Vec<u64> = ctx.flows.iter().map(|f| f.multiplicity).collect();
    let (total, _) = ctx.best(1, &remaining, maximal_only);
    let schedule = ctx.reconstruct(maximal_only);
    let report = crate::model::cost(instance, &schedule).expect("oracle schedule is valid");
    assert_eq!(report.total, total, "reconstruction must match the DP value");
    Ok(OptResult { report, schedule })
}

/// Provably minimal weighted completion time, by memoized search over
/// maximal matchings per slot. Refuses instances above the copy limit.
pub fn opt(instance: &Instance, horizon: Option<u64>) -> Result<OptResult, OracleError> {
    run_opt(instance, horizon, DEFAULT_COPY_LIMIT, true)
}

pub fn opt_with_limit(
    instance: &Instance,
    horizon: Option<u64>,
    limit: u64,
) -> Result<OptResult, OracleError> {
    run_opt(instance, horizon, limit, true)
}

/// Plain exhaustive variant considering every (not only maximal) matching
/// per slot; cross-checks `opt` on tiny instances.
pub fn opt_exhaustive(instance: &Instance, limit: u64) -> Result<OptResult, OracleError> {
    check_limit(instance, limit)?;
    let horizon = instance.max_release() + instance.total_copies();
    let mut ctx = SearchCtx::new(instance, horizon);
    let remaining: Vec<u64> = ctx.flows.iter().map(|f| f.multiplicity).collect();
    let (total, _) = ctx.best(1, &remaining, false);
    // the exhaustive variant can idle voluntarily, which reconstruct's
    // slot loop already covers (empty matchings advance the slot)
    let schedule = ctx.reconstruct(false);
    let report = crate::model::cost(instance, &schedule).expect("oracle schedule is valid");
    assert_eq!(report.total, total);
    Ok(OptResult { report, schedule })
}

/// Exhaustive search for an integral schedule meeting every coflow's
/// (floored) deadline.
pub fn deadline_feasible_integral(
    instance: &Instance,
    profile: &DeadlineProfile,
    limit: u64,
) -> Result<bool, OracleError> {
    check_limit(instance, limit)?;
    let floors: Vec<u64> = profile.deadlines.iter().map(floor_u64).collect();
    let flows = merged_flows(instance);
    let mut memo: HashMap<(u64, Vec<u64>), bool> = HashMap::new();
    let remaining: Vec<u64> = flows.iter().map(|f| f.multiplicity).collect();

    fn conflict(flows: &[FracFlow], a: usize, b: usize) -> bool {
        flows[a].u == flows[b].u || flows[a].v == flows[b].v
    }

    fn rec(
        flows: &[FracFlow],
        floors: &[u64],
        memo: &mut HashMap<(u64, Vec<u64>), bool>,
        slot: u64,
        remaining: &[u64],
    ) -> bool {
        if remaining.iter().all(|&r| r == 0) {
            return true;
        }
        // expired deadline with work left
        if remaining
            .iter()
            .zip(flows)
            .any(|(&r, f)| r > 0 && floors[f.coflow] < slot)
        {
            return false;
        }
        let eligible: Vec<usize> = (0..flows.len())
            .filter(|&i| remaining[i] > 0 && slot > flows[i].release)
            .collect();
        if eligible.is_empty() {
            return rec(flows, floors, memo, slot + 1, remaining);
        }
        let key = (slot, remaining.to_vec());
        if let Some(&hit) = memo.get(&key) {
            return hit;
        }
        // enumerate maximal matchings of the eligible set
        let mut out = Vec::new();
        let mut chosen = Vec::new();
        fn gen(
            flows: &[FracFlow],
            eligible: &[usize],
            idx: usize,
            chosen: &mut Vec<usize>,
            out: &mut Vec<Vec<usize>>,
        ) {
            if idx == eligible.len() {
                let maximal = eligible.iter().all(|&i| {
                    chosen.contains(&i) || chosen.iter().any(|&c| conflict(flows, c, i))
                });
                if maximal {
                    out.push(chosen.clone());
                }
                return;
            }
            let f = eligible[idx];
            if chosen.iter().all(|&c| !conflict(flows, c, f)) {
                chosen.push(f);
                gen(flows, eligible, idx + 1, chosen, out);
                chosen.pop();
            }
            gen(flows, eligible, idx + 1, chosen, out);
        }
        gen(flows, &eligible, 0, &mut chosen, &mut out);
        let ok = out.iter().any(|m| {
            let mut rem = remaining.to_vec();
            for &i in m {
                rem[i] -= 1;
            }
            rec(flows, floors, memo, slot + 1, &rem)
        });
        memo.insert(key, ok);
        ok
    }

    Ok(rec(&flows, &floors, &mut memo, 1, &remaining))
}

/// The 7+7-vertex four-coflow gadget whose block LP admits a fractional
/// point but no integral one at deadlines (1, 2, 3, 3). Vertex labels are
/// zero-based; all weights are 1.
pub fn a1_fixture() -> (Instance, DeadlineProfile) {
    use crate::model::{Coflow, Flow};
    let edges = |list: &[(usize, usize)]| -> Vec<Flow> {
        list.iter().map(|&(u, v)| Flow { u, v, multiplicity: 1 }).collect()
    };
    let instance = Instance {
        left_count: 7,
        right_count: 7,
        coflows: vec![
            Coflow { weight: rat_int(1), release: 0, flows: edges(&[(5, 1), (6, 6)]) },
            Coflow { weight: rat_int(1), release: 0, flows: edges(&[(5, 3), (6, 4)]) },
            Coflow { weight: rat_int(1), release: 0, flows: edges(&[(5, 0), (6, 2)]) },
            Coflow {
                weight: rat_int(1),
                release: 0,
                flows: edges(&[
                    // first part: eight edges over two integral layouts
                    (0, 0),
                    (1, 0),
                    (2, 2),
                    (3, 2),
                    (0, 3),
                    (2, 3),
                    (1, 4),
                    (3, 4),
                    // second part: the two edges no integral layout fits
                    (1, 1),
                    (2, 1),
                ]),
            },
        ],
    };
    let profile = DeadlineProfile::new(
        &instance,
        vec![rat_int(1), rat_int(2), rat_int(3), rat_int(3)],
        None,
    )
    .expect("fixture profile");
    (instance, profile)
}
