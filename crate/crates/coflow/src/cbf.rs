//! Iterated-rounding edge allocation: deadlines round onto a lattice
//! {lambda + i*tau}, blocks form between consecutive rounded deadlines,
//! and a Beck-Fiala style rounding turns the fractional block LP into an
//! integral assignment that overruns each block's nominal size by at most
//! 2. Blocks then become slots through the König decomposition.
//!
//! Variants: plain (trial-minimized over the lambda offsets), release
//! dates (releases round onto the same lattice, deadlines get one extra
//! tau of slack), and a König prefix handling all coflows with deadlines
//! below a threshold in the first b slots.

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::coloring;
use crate::deadlines::{merged_flows, DeadlineProfile, FracFlow};
use crate::lp::{LinearProgram, LpResult, Relation};
use crate::model::{cost, CostReport, Instance, Schedule, ScheduleEntry};
use crate::rational::{ceil_u64, format_rational, is_integral, rat_u64, Rational};

pub const ROUNDING_DEGREE_THRESHOLD: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CbfError {
    ReleasesPresent,
    BadParam(String),
    /// The initial block LP was infeasible: the caller's profile did not
    /// pass the feasibility check it was required to.
    Structural(String),
    /// A guaranteed bound failed, certifying a precondition violation.
    BoundViolated { what: String },
}

impl fmt::Display for CbfError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CbfError::ReleasesPresent => write!(f, "release dates need the release variant"),
            CbfError::BadParam(s) => write!(f, "bad parameter: {s}"),
            CbfError::Structural(s) => write!(f, "structural error: {s}"),
            CbfError::BoundViolated { what } => write!(f, "bound violated: {what}"),
        }
    }
}

impl std::error::Error for CbfError {}

/// Valid first-block offsets for a given tau: {0, 2, .., tau-1, tau+1}.
pub fn trial_lambdas(tau: u64) -> Vec<u64> {
    let mut out = vec![0];
    out.extend(2..tau);
    out.push(tau + 1);
    out
}

fn validate_params(tau: u64, lambda: u64) -> Result<(), CbfError> {
    if tau < 2 {
        return Err(CbfError::BadParam(format!("tau must be >= 2, got {tau}")));
    }
    if !(lambda == 0 || (2..tau).contains(&lambda) || lambda == tau + 1) {
        return Err(CbfError::BadParam(format!(
            "lambda {lambda} not in {{0}} u {{2..{}}} u {{{}}}",
            tau - 1,
            tau + 1
        )));
    }
    Ok(())
}

/// Smallest lattice point lambda + i*tau (i >= 0) that is >= x and > 0.
fn round_to_lattice(x: &Rational, tau: u64, lambda: u64) -> u64 {
    debug_assert!(x.is_positive());
    if lambda > 0 && *x <= rat_u64(lambda) {
        return lambda;
    }
    let shifted = x - rat_u64(lambda);
    let i = ceil_u64(&(shifted / rat_u64(tau))).max(if lambda == 0 { 1 } else { 0 });
    lambda + i * tau
}

/// Lattice point for a release date; zero stays zero.
fn round_release_to_lattice(r: u64, tau: u64, lambda: u64) -> u64 {
    if r == 0 {
        0
    } else {
        round_to_lattice(&rat_u64(r), tau, lambda)
    }
}

/// Deadline blocks after rounding: distinct boundaries ascending, plus
/// the block index of every included coflow.
#[derive(Debug, Clone)]
pub struct BlockStructure {
    pub tau: u64,
    pub lambda: u64,
    /// Block b spans (boundaries[b-1], boundaries[b]] with an implicit 0.
    pub boundaries: Vec<u64>,
    /// Per coflow: its block position, or None when not part of this
    /// structure (König-prefix coflows).
    pub coflow_block: Vec<Option<usize>>,
    /// Rounded deadline per included coflow.
    pub rounded: Vec<Option<u64>>,
}

impl BlockStructure {
    pub fn block_count(&self) -> usize {
        self.boundaries.len()
    }

    pub fn start(&self, b: usize) -> u64 {
        if b == 0 {
            0
        } else {
            self.boundaries[b - 1]
        }
    }

    pub fn nominal(&self, b: usize) -> u64 {
        self.boundaries[b] - self.start(b)
    }
}

fn build_structure(
    profile: &DeadlineProfile,
    included: &[bool],
    tau: u64,
    lambda: u64,
    extra_tau: bool,
    release_boundaries: &[u64],
) -> Result<BlockStructure, CbfError> {
    validate_params(tau, lambda)?;
    let n = profile.deadlines.len();
    let mut rounded = vec![None; n];
    let mut boundaries: Vec<u64> = Vec::new();
    for j in 0..n {
        if !included[j] {
            continue;
        }
        let mut r = round_to_lattice(&profile.deadlines[j], tau, lambda);
        if extra_tau {
            r += tau;
        }
        debug_assert!(rat_u64(r) >= profile.deadlines[j]);
        rounded[j] = Some(r);
        boundaries.push(r);
    }
    boundaries.extend(release_boundaries.iter().copied().filter(|&r| r > 0));
    boundaries.sort_unstable();
    boundaries.dedup();
    let coflow_block = rounded
        .iter()
        .map(|r| r.map(|r| boundaries.binary_search(&r).expect("rounded deadline is a boundary")))
        .collect();
    Ok(BlockStructure { tau, lambda, boundaries, coflow_block, rounded })
}

/// Rounds every coflow's deadline up to the lattice {lambda + i*tau} and
/// merges equal rounded deadlines into single blocks.
pub fn build_blocks(
    profile: &DeadlineProfile,
    tau: u64,
    lambda: u64,
) -> Result<BlockStructure, CbfError> {
    let included = vec![true; profile.deadlines.len()];
    build_structure(profile, &included, tau, lambda, false, &[])
}

/// Integral edge-to-block assignment.
#[derive(Debug, Clone)]
pub struct BlockAssignment {
    pub flows: Vec<FracFlow>,
    /// counts[f][b]: copies of flow f assigned to block b.
    pub counts: Vec<Vec<u64>>,
    pub boundaries: Vec<u64>,
    /// Realized maximum vertex load per block.
    pub realized: Vec<u64>,
    /// max over blocks and vertices of load minus nominal size.
    pub violation: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationAudit {
    pub iteration: usize,
    pub free_vars: usize,
    pub rows: usize,
    pub fixed: usize,
    /// Fractional incidence count of each constraint dropped this round.
    pub dropped: Vec<usize>,
    pub shifted: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct RoundingAudit {
    /// Copies fixed directly by the integral parts of the merged solve.
    pub merged_fixed: u64,
    pub iterations: Vec<IterationAudit>,
    pub max_violation: u64,
}

impl RoundingAudit {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for it in &self.iterations {
            out.push_str(&serde_json::to_string(it).expect("audit serialization"));
            out.push('\n');
        }
        out
    }
}

struct RoundingProblem<'a> {
    instance: &'a Instance,
    structure: &'a BlockStructure,
    flows: Vec<FracFlow>,
    first_block: Vec<usize>,
    last_block: Vec<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum UnitVar {
    Free,
    FixedZero,
    FixedOne,
}

/// Beck-Fiala style iterated rounding of the block LP.
///
/// A merged solve fixes the integral part of every flow-to-block value;
/// the fractional remainder expands into unit copies and the loop then
/// alternates: solve a vertex, fix integral variables, drop degree
/// constraints with at most 3 fractional incidences, and when rows would
/// match variables, shift the lexicographically first surviving degree
/// constraint into a minimization objective.
fn round_problem(problem: &RoundingProblem) -> Result<(BlockAssignment, RoundingAudit), CbfError> {
    let st = problem.structure;
    let k = st.block_count();
    let flows = &problem.flows;
    let nominal: Vec<u64> = (0..k).map(|b| st.nominal(b)).collect();

    // stage 1: merged LP, integral parts fixed
    let var = |fi: usize, b: usize| fi * k + b;
    let mut lp = LinearProgram::new(flows.len() * k);
    for (fi, f) in flows.iter().enumerate() {
        for (b, size) in nominal.iter().enumerate() {
            let allowed = b >= problem.first_block[fi] && b <= problem.last_block[fi];
            let ub = if allowed { rat_u64(f.multiplicity.min(*size)) } else { Rational::zero() };
            lp.set_upper(var(fi, b), ub);
        }
    }
    for (fi, f) in flows.iter().enumerate() {
        let coeffs = (0..k).map(|b| (var(fi, b), Rational::one())).collect();
        lp.add_row(coeffs, Relation::Eq, rat_u64(f.multiplicity));
    }
    for (b, size) in nominal.iter().enumerate() {
        for side in 0..2 {
            let count = if side == 0 { problem.instance.left_count } else { problem.instance.right_count };
            for vertex in 0..count {
                let coeffs: Vec<(usize, Rational)> = flows
                    .iter()
                    .enumerate()
                    .filter(|(_, f)| if side == 0 { f.u == vertex } else { f.v == vertex })
                    .map(|(fi, _)| (var(fi, b), Rational::one()))
                    .collect();
                if !coeffs.is_empty() {
                    lp.add_row(coeffs, Relation::Le, rat_u64(*size));
                }
            }
        }
    }
    let merged = match lp.feasible() {
        LpResult::Feasible(v) => v,
        _ => {
            return Err(CbfError::Structural(
                "block LP infeasible; profile did not pass its feasibility check".into(),
            ))
        }
    };

    let mut counts: Vec<Vec<u64>> = vec![vec![0; k]; flows.len()];
    let mut audit = RoundingAudit::default();
    // residual fractional parts become unit copies
    struct Copy {
        flow: usize,
        vars: Vec<UnitVar>, // per block
    }
    let mut copies: Vec<Copy> = Vec::new();
    for (fi, f) in flows.iter().enumerate() {
        let mut fixed_total = 0u64;
        let mut frac_blocks: Vec<usize> = Vec::new();
        for (b, count) in counts[fi].iter_mut().enumerate() {
            let val = &merged.values[var(fi, b)];
            let fl = val.floor().to_integer();
            let fl64: u64 = fl.try_into().unwrap_or(0);
            *count += fl64;
            fixed_total += fl64;
            if !is_integral(val) {
                frac_blocks.push(b);
            }
        }
        audit.merged_fixed += fixed_total;
        let residual = f.multiplicity - fixed_total;
        for _ in 0..residual {
            let mut vars = vec![UnitVar::FixedZero; k];
            for &b in &frac_blocks {
                vars[b] = UnitVar::Free;
            }
            copies.push(Copy { flow: fi, vars });
        }
    }

    // live degree constraints with residual capacities
    #[derive(Clone)]
    struct Degree {
        block: usize,
        side: usize,
        vertex: usize,
        residual: i64,
        live: bool,
    }
    let mut degrees: Vec<Degree> = Vec::new();
    for b in 0..k {
        for side in 0..2 {
            let count = if side == 0 { problem.instance.left_count } else { problem.instance.right_count };
            for vertex in 0..count {
                let incident = |f: &FracFlow| if side == 0 { f.u == vertex } else { f.v == vertex };
                if !flows.iter().any(&incident) {
                    continue;
                }
                let fixed_load: u64 = flows
                    .iter()
                    .enumerate()
                    .filter(|(_, f)| incident(f))
                    .map(|(fi, _)| counts[fi][b])
                    .sum();
                degrees.push(Degree {
                    block: b,
                    side,
                    vertex,
                    residual: nominal[b] as i64 - fixed_load as i64,
                    live: true,
                });
            }
        }
    }

    let touches = |d: &Degree, copy: &Copy| {
        let f = &flows[copy.flow];
        let v = if d.side == 0 { f.u } else { f.v };
        v == d.vertex && copy.vars[d.block] == UnitVar::Free
    };

    // initial drop pass mirrors the loop's rule: degree constraints with
    // few fractional incidences never enter the LP
    let mut iteration = 0;
    loop {
        // count free vars and prune resolved copies
        for copy in copies.iter_mut() {
            if copy.vars.contains(&UnitVar::FixedOne) {
                for v in copy.vars.iter_mut() {
                    if *v == UnitVar::Free {
                        *v = UnitVar::FixedZero;
                    }
                }
            }
        }
        let active: Vec<usize> = copies
            .iter()
            .enumerate()
            .filter(|(_, c)| c.vars.iter().all(|v| *v != UnitVar::FixedOne))
            .map(|(i, _)| i)
            .collect();
        if active.is_empty() {
            break;
        }

        let mut dropped_now = Vec::new();
        for d in degrees.iter_mut().filter(|d| d.live) {
            let incidences = copies.iter().filter(|c| touches(d, c)).count();
            if incidences < ROUNDING_DEGREE_THRESHOLD {
                d.live = false;
                dropped_now.push(incidences);
            }
        }

        // free variable index
        let mut free_index: Vec<(usize, usize)> = Vec::new(); // (copy, block)
        for &ci in &active {
            for b in 0..k {
                if copies[ci].vars[b] == UnitVar::Free {
                    free_index.push((ci, b));
                }
            }
        }
        let lookup = |ci: usize, b: usize| free_index.iter().position(|&(c, bb)| c == ci && bb == b);

        let live_rows: Vec<usize> = degrees
            .iter()
            .enumerate()
            .filter(|(_, d)| d.live)
            .map(|(i, _)| i)
            .collect();
        let row_count = active.len() + live_rows.len();

        // counting invariant with k = 4: rows never exceed variables
        assert!(
            row_count <= free_index.len(),
            "counting invariant failed: {row_count} rows, {} vars",
            free_index.len()
        );
        let shift = row_count == free_index.len();

        let mut lp = LinearProgram::new(free_index.len());
        for i in 0..free_index.len() {
            lp.set_upper(i, Rational::one());
        }
        for &ci in &active {
            let coeffs: Vec<(usize, Rational)> = (0..k)
                .filter_map(|b| lookup(ci, b).map(|i| (i, Rational::one())))
                .collect();
            lp.add_row(coeffs, Relation::Eq, Rational::one());
        }
        let mut shift_taken = false;
        for &di in &live_rows {
            let d = &degrees[di];
            let coeffs: Vec<(usize, Rational)> = free_index
                .iter()
                .enumerate()
                .filter(|(_, &(ci, b))| b == d.block && touches(d, &copies[ci]))
                .map(|(i, _)| (i, Rational::one()))
                .collect();
            if shift && !shift_taken {
                // lexicographically first live constraint becomes the
                // objective; minimality keeps it satisfied
                lp.set_objective(coeffs);
                shift_taken = true;
                continue;
            }
            lp.add_row(coeffs, Relation::Le, rat_u64(d.residual.max(0) as u64));
        }
        let shifted_desc = if shift_taken {
            let d = &degrees[live_rows[0]];
            Some(format!("block {} side {} vertex {}", d.block, d.side, d.vertex))
        } else {
            None
        };

        let solution = match lp.solve() {
            LpResult::Optimal(v) | LpResult::Feasible(v) => v,
            other => {
                return Err(CbfError::Structural(format!(
                    "rounding LP lost feasibility: {other:?} (iteration {iteration})"
                )))
            }
        };

        // fix integral variables
        let mut fixed = 0;
        for (i, &(ci, b)) in free_index.iter().enumerate() {
            let val = &solution.values[i];
            if val.is_zero() {
                copies[ci].vars[b] = UnitVar::FixedZero;
                fixed += 1;
            } else if *val == Rational::one() {
                copies[ci].vars[b] = UnitVar::FixedOne;
                counts[copies[ci].flow][b] += 1;
                for d in degrees.iter_mut() {
                    let f = &flows[copies[ci].flow];
                    let v = if d.side == 0 { f.u } else { f.v };
                    if d.block == b && v == d.vertex {
                        d.residual -= 1;
                    }
                }
                fixed += 1;
            }
        }
        audit.iterations.push(IterationAudit {
            iteration,
            free_vars: free_index.len(),
            rows: row_count,
            fixed,
            dropped: dropped_now,
            shifted: shifted_desc,
        });
        assert!(fixed >= 1, "iterated rounding made no progress");
        iteration += 1;
        assert!(iteration <= copies.len() * k + 2, "rounding loop ran away");
    }

    // realized loads and violation
    let mut realized = vec![0u64; k];
    let mut violation = 0i64;
    for b in 0..k {
        for side in 0..2 {
            let count = if side == 0 { problem.instance.left_count } else { problem.instance.right_count };
            for vertex in 0..count {
                let load: u64 = flows
                    .iter()
                    .enumerate()
                    .filter(|(_, f)| if side == 0 { f.u == vertex } else { f.v == vertex })
                    .map(|(fi, _)| counts[fi][b])
                    .sum();
                realized[b] = realized[b].max(load);
                violation = violation.max(load as i64 - nominal[b] as i64);
            }
        }
    }
    audit.max_violation = violation.max(0) as u64;

    Ok((
        BlockAssignment {
            flows: flows.clone(),
            counts,
            boundaries: st.boundaries.clone(),
            realized,
            violation: audit.max_violation,
        },
        audit,
    ))
}

/// Rounds the block LP of a prepared structure into an integral
/// assignment. `rounded_releases`, when given, confines each coflow's
/// flows to blocks starting at or after its entry; the values must be
/// boundaries of the structure.
pub fn iterated_round(
    instance: &Instance,
    structure: &BlockStructure,
    rounded_releases: Option<&[u64]>,
) -> Result<(BlockAssignment, RoundingAudit), CbfError> {
    let flows: Vec<FracFlow> = merged_flows(instance)
        .into_iter()
        .filter(|f| structure.coflow_block[f.coflow].is_some())
        .collect();
    let first_block: Vec<usize> = flows
        .iter()
        .map(|f| match rounded_releases {
            None => Ok(0),
            Some(rs) => {
                let rb = rs[f.coflow];
                if rb == 0 {
                    return Ok(0);
                }
                (0..structure.block_count())
                    .find(|&b| structure.start(b) >= rb)
                    .ok_or_else(|| {
                        CbfError::BadParam(format!(
                            "rounded release {rb} beyond the last block boundary"
                        ))
                    })
            }
        })
        .collect::<Result<_, _>>()?;
    let last_block: Vec<usize> = flows
        .iter()
        .map(|f| structure.coflow_block[f.coflow].expect("flow's coflow is included"))
        .collect();
    let problem = RoundingProblem { instance, structure, flows, first_block, last_block };
    round_problem(&problem)
}

/// Lays blocks out as consecutive slot ranges via the König
/// decomposition. Block b takes exactly its realized maximum degree in
/// slots and never starts before its nominal start, so rounded release
/// dates stay respected.
pub fn schedule_blocks(assignment: &BlockAssignment, start_offset: u64) -> Schedule {
    let mut schedule = Schedule::default();
    let mut prev_end = 0u64;
    for b in 0..assignment.boundaries.len() {
        let nominal_start = if b == 0 { 0 } else { assignment.boundaries[b - 1] };
        let start = prev_end.max(nominal_start);
        let mut items: Vec<(usize, usize, u64)> = Vec::new();
        let mut owners: Vec<usize> = Vec::new();
        for (fi, f) in assignment.flows.iter().enumerate() {
            if assignment.counts[fi][b] > 0 {
                items.push((f.u, f.v, assignment.counts[fi][b]));
                owners.push(fi);
            }
        }
        let deco = coloring::decompose(&items);
        debug_assert_eq!(deco.degree, assignment.realized[b]);
        let mut slot = start;
        for class in &deco.classes {
            for _ in 0..class.count {
                slot += 1;
                for &it in &class.items {
                    let f = &assignment.flows[owners[it]];
                    schedule.push(
                        slot + start_offset,
                        ScheduleEntry { coflow: f.coflow, u: f.u, v: f.v },
                    );
                }
            }
        }
        prev_end = start + deco.degree;
    }
    schedule
}

/// Piecewise delay guarantee of the offset variant: the latest slot by
/// which a coflow with deadline x finishes, as a function of (tau,
/// lambda). Integer-valued on the lattice.
pub fn cbf_delay_bound(tau: u64, lambda: u64, x: &Rational) -> Rational {
    let t2 = rat_u64(tau + 2);
    if lambda == 0 {
        return t2 * rat_u64(ceil_u64(&(x / rat_u64(tau))).max(1));
    }
    if *x <= rat_u64(lambda) {
        return rat_u64(lambda + 2);
    }
    let steps = ceil_u64(&((x - rat_u64(lambda)) / rat_u64(tau)));
    t2 * rat_u64(steps) + rat_u64(lambda + 2)
}

/// Weighted delay guarantee of the trial-minimized variant:
/// (tau+2)/tau * x + tau/2 + 5/2 - 2/tau.
pub fn cbf_weighted_bound(tau: u64, x: &Rational) -> Rational {
    rat_u64(tau + 2) / rat_u64(tau) * x + rat_u64(tau) / rat_u64(2) + crate::rational::rat(5, 2)
        - rat_u64(2) / rat_u64(tau)
}

/// Release-variant weighted guarantee:
/// (tau+2)/tau * x + 3*tau/2 + 9/2 - 2/tau.
pub fn cbf_release_weighted_bound(tau: u64, x: &Rational) -> Rational {
    rat_u64(tau + 2) / rat_u64(tau) * x
        + crate::rational::rat(3, 2) * rat_u64(tau)
        + crate::rational::rat(9, 2)
        - rat_u64(2) / rat_u64(tau)
}

#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub lambda: u64,
    pub cost: Rational,
}

#[derive(Debug, Clone)]
pub struct CbfOutcome {
    pub schedule: Schedule,
    pub report: CostReport,
    pub lambda: u64,
    pub trials: Vec<TrialRecord>,
    pub audits: Vec<RoundingAudit>,
}

fn run_trial(
    instance: &Instance,
    profile: &DeadlineProfile,
    included: &[bool],
    tau: u64,
    lambda: u64,
    with_releases: bool,
    start_offset: u64,
) -> Result<(Schedule, RoundingAudit), CbfError> {
    // per-coflow rounded releases; included coflows contribute block
    // separators
    let rounded_releases: Vec<u64> = instance
        .coflows
        .iter()
        .map(|c| if with_releases { round_release_to_lattice(c.release, tau, lambda) } else { 0 })
        .collect();
    let separators: Vec<u64> = rounded_releases
        .iter()
        .enumerate()
        .filter(|(j, _)| included[*j])
        .map(|(_, &r)| r)
        .collect();
    let structure = build_structure(profile, included, tau, lambda, with_releases, &separators)?;
    let releases_arg = if with_releases { Some(rounded_releases.as_slice()) } else { None };
    let (assignment, audit) = iterated_round(instance, &structure, releases_arg)?;
    let schedule = schedule_blocks(&assignment, start_offset);
    Ok((schedule, audit))
}

fn merge_schedules(a: &Schedule, b: &Schedule) -> Schedule {
    let mut out = a.clone();
    for (&slot, entries) in &b.slots {
        for e in entries {
            out.push(slot, *e);
        }
    }
    out
}

fn completed_report(instance: &Instance, schedule: &Schedule) -> Result<CostReport, CbfError> {
    cost(instance, schedule).map_err(|e| CbfError::BoundViolated {
        what: format!("allocator produced an invalid schedule: {e}"),
    })
}

/// CBF with lambda-trial minimization, for release-free profiles that
/// pass the block-LP feasibility check.
///
/// Hard guarantees, checked on every run: per trial every coflow finishes
/// by the piecewise delay bound, and the returned schedule's weighted
/// cost obeys the averaged guarantee.
pub fn cbf(instance: &Instance, profile: &DeadlineProfile, tau: u64) -> Result<CbfOutcome, CbfError> {
    if instance.has_releases() {
        return Err(CbfError::ReleasesPresent);
    }
    run_cbf_family(instance, profile, tau, false)
}

/// Release-date variant: releases round up onto the same lattice as the
/// deadlines, deadlines take one extra tau of slack.
pub fn cbf_r(instance: &Instance, profile: &DeadlineProfile, tau: u64) -> Result<CbfOutcome, CbfError> {
    run_cbf_family(instance, profile, tau, true)
}

fn run_cbf_family(
    instance: &Instance,
    profile: &DeadlineProfile,
    tau: u64,
    with_releases: bool,
) -> Result<CbfOutcome, CbfError> {
    validate_params(tau, 0)?;
    let included = vec![true; instance.coflows.len()];
    let mut best: Option<CbfOutcome> = None;
    let mut trials = Vec::new();
    let mut audits = Vec::new();
    for lambda in trial_lambdas(tau) {
        let (schedule, audit) =
            run_trial(instance, profile, &included, tau, lambda, with_releases, 0)?;
        let report = completed_report(instance, &schedule)?;
        // per-trial hard bound: piecewise delay (plus one block of slack
        // in the release variant, whose deadlines round one tau higher)
        for (j, c) in instance.coflows.iter().enumerate() {
            let mut bound = cbf_delay_bound(tau, lambda, &profile.deadlines[j]);
            if with_releases {
                bound += rat_u64(tau + 2);
            }
            if rat_u64(report.completion[j]) > bound {
                return Err(CbfError::BoundViolated {
                    what: format!(
                        "coflow {j} (weight {}) finished {} past delay bound {} (tau={tau}, lambda={lambda})",
                        format_rational(&c.weight),
                        report.completion[j],
                        format_rational(&bound),
                    ),
                });
            }
        }
        let cost_total = report.total.clone();
        trials.push(TrialRecord { lambda, cost: cost_total.clone() });
        audits.push(audit);
        let better = match &best {
            None => true,
            Some(b) => cost_total < b.report.total,
        };
        if better {
            best = Some(CbfOutcome {
                schedule,
                report,
                lambda,
                trials: Vec::new(),
                audits: Vec::new(),
            });
        }
    }
    let mut best = best.expect("trial set nonempty");
    best.trials = trials;
    best.audits = audits;

    // weighted guarantee on the returned schedule
    let rhs = instance
        .coflows
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let per = if with_releases {
                cbf_release_weighted_bound(tau, &profile.deadlines[j])
            } else {
                cbf_weighted_bound(tau, &profile.deadlines[j])
            };
            &c.weight * per
        })
        .fold(Rational::zero(), |a, b| a + b);
    if best.report.total > rhs {
        return Err(CbfError::BoundViolated {
            what: format!(
                "weighted cost {} exceeds the averaged guarantee {} (tau={tau})",
                format_rational(&best.report.total),
                format_rational(&rhs)
            ),
        });
    }
    Ok(best)
}

#[derive(Debug, Clone)]
pub struct CkbfOutcome {
    pub schedule: Schedule,
    pub report: CostReport,
    pub lambda: u64,
    pub prefix_coflows: Vec<usize>,
    pub trials: Vec<TrialRecord>,
}

/// König-prefix hybrid: coflows with deadlines below b+1 occupy the first
/// b slots via the matching decomposition, everything else runs through
/// the trial-minimized rounding shifted by b slots.
pub fn ckbf(
    instance: &Instance,
    profile: &DeadlineProfile,
    tau: u64,
    b: u64,
) -> Result<CkbfOutcome, CbfError> {
    if instance.has_releases() {
        return Err(CbfError::ReleasesPresent);
    }
    validate_params(tau, 0)?;
    if b < 1 {
        return Err(CbfError::BadParam("prefix length b must be >= 1".into()));
    }
    let threshold = rat_u64(b + 1);
    let prefix: Vec<usize> = (0..instance.coflows.len())
        .filter(|&j| profile.deadlines[j] < threshold)
        .collect();
    let included: Vec<bool> = (0..instance.coflows.len())
        .map(|j| !prefix.contains(&j))
        .collect();

    // prefix: all early coflows fit b slots because their union's degree
    // is capped by the block LP's feasibility
    let all_flows = merged_flows(instance);
    let mut items = Vec::new();
    let mut owners = Vec::new();
    for f in all_flows.iter().filter(|f| prefix.contains(&f.coflow)) {
        items.push((f.u, f.v, f.multiplicity));
        owners.push((f.coflow, f.u, f.v));
    }
    let deco = coloring::decompose(&items);
    if deco.degree > b {
        return Err(CbfError::Structural(format!(
            "prefix degree {} exceeds b = {b}; profile was not feasible",
            deco.degree
        )));
    }
    let mut prefix_schedule = Schedule::default();
    let mut slot = 0;
    for class in &deco.classes {
        for _ in 0..class.count {
            slot += 1;
            for &it in &class.items {
                let (coflow, u, v) = owners[it];
                prefix_schedule.push(slot, ScheduleEntry { coflow, u, v });
            }
        }
    }

    if included.iter().all(|&i| !i) {
        let report = completed_report(instance, &prefix_schedule)?;
        return Ok(CkbfOutcome {
            schedule: prefix_schedule,
            report,
            lambda: 0,
            prefix_coflows: prefix,
            trials: Vec::new(),
        });
    }

    let mut best: Option<(Schedule, CostReport, u64)> = None;
    let mut trials = Vec::new();
    for lambda in trial_lambdas(tau) {
        let (rest, _) = run_trial(instance, profile, &included, tau, lambda, false, b)?;
        let combined = merge_schedules(&prefix_schedule, &rest);
        let report = completed_report(instance, &combined)?;
        for (j, _) in instance.coflows.iter().enumerate() {
            let bound = if prefix.contains(&j) {
                rat_u64(b)
            } else {
                rat_u64(b) + cbf_delay_bound(tau, lambda, &profile.deadlines[j])
            };
            if rat_u64(report.completion[j]) > bound {
                return Err(CbfError::BoundViolated {
                    what: format!(
                        "coflow {j} finished {} past the prefix bound {} (lambda={lambda})",
                        report.completion[j],
                        format_rational(&bound)
                    ),
                });
            }
        }
        trials.push(TrialRecord { lambda, cost: report.total.clone() });
        let better = match &best {
            None => true,
            Some((_, r, _)) => report.total < r.total,
        };
        if better {
            best = Some((combined, report, lambda));
        }
    }
    let (schedule, report, lambda) = best.expect("trial set nonempty");

    // weighted guarantee: b for the prefix, shifted averaged bound for
    // the rest
    let rhs = instance
        .coflows
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let per = if prefix.contains(&j) {
                rat_u64(b)
            } else {
                cbf_weighted_bound(tau, &profile.deadlines[j]) + rat_u64(b)
            };
            &c.weight * per
        })
        .fold(Rational::zero(), |a, b| a + b);
    if report.total > rhs {
        return Err(CbfError::BoundViolated {
            what: format!(
                "weighted cost {} exceeds the prefix guarantee {}",
                format_rational(&report.total),
                format_rational(&rhs)
            ),
        });
    }

    Ok(CkbfOutcome { schedule, report, lambda, prefix_coflows: prefix, trials })
}
