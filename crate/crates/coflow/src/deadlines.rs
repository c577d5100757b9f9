//! Deadline generation and feasibility checking.
//!
//! A time-indexed LP assigns fractional flow to slots; completion curves
//! of that fractional schedule are rounded into per-coflow deadlines by
//! sampling a stretch factor θ with density 2x (or by minimizing over a
//! deterministic candidate set). Profiles are then certified against the
//! block-structured feasibility LPs, without and with release dates.

use std::fmt;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::lp::{LinearProgram, LpResult, Relation, VertexSolution};
use crate::model::{max_degree, Instance};
use crate::rational::{
    format_rational, parse_rational, rat_u64, sqrt_trunc, Rational, SQRT_FRACTIONAL_BITS,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeadlineError {
    ThetaOutOfRange,
    ZeroCandidates,
    BadEpsilon,
    ReleasesPresent,
    BadProfile(String),
    LpFailure(String),
}

impl fmt::Display for DeadlineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeadlineError::ThetaOutOfRange => write!(f, "theta must lie in (0, 1]"),
            DeadlineError::ZeroCandidates => write!(f, "candidate count must be positive"),
            DeadlineError::BadEpsilon => write!(f, "epsilon must be positive"),
            DeadlineError::ReleasesPresent => {
                write!(f, "operation requires all release dates to be zero")
            }
            DeadlineError::BadProfile(s) => write!(f, "bad deadline profile: {s}"),
            DeadlineError::LpFailure(s) => write!(f, "lp failure: {s}"),
        }
    }
}

impl std::error::Error for DeadlineError {}

/// Per-coflow rational deadlines plus the order sorting them ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeadlineProfile {
    pub deadlines: Vec<Rational>,
    /// Coflow indices sorted by (deadline, index).
    pub order: Vec<usize>,
    pub releases: Vec<u64>,
    /// The stretch factor used, when one was drawn.
    pub theta: Option<Rational>,
}

impl DeadlineProfile {
    pub fn new(
        instance: &Instance,
        deadlines: Vec<Rational>,
        theta: Option<Rational>,
    ) -> Result<Self, DeadlineError> {
        if deadlines.len() != instance.coflows.len() {
            return Err(DeadlineError::BadProfile("deadline count mismatch".into()));
        }
        let releases: Vec<u64> = instance.coflows.iter().map(|c| c.release).collect();
        for (j, d) in deadlines.iter().enumerate() {
            if *d <= rat_u64(releases[j]) {
                return Err(DeadlineError::BadProfile(format!(
                    "coflow {j}: deadline {} not after release {}",
                    format_rational(d),
                    releases[j]
                )));
            }
        }
        let mut order: Vec<usize> = (0..deadlines.len()).collect();
        order.sort_by(|&a, &b| deadlines[a].cmp(&deadlines[b]).then(a.cmp(&b)));
        Ok(DeadlineProfile { deadlines, order, releases, theta })
    }

    pub fn weighted_total(&self, instance: &Instance) -> Rational {
        instance
            .coflows
            .iter()
            .zip(&self.deadlines)
            .map(|(c, d)| &c.weight * d)
            .fold(Rational::zero(), |a, b| a + b)
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Wire {
            theta: Option<String>,
            deadlines: Vec<String>,
        }
        serde_json::to_string_pretty(&Wire {
            theta: self.theta.as_ref().map(format_rational),
            deadlines: self.deadlines.iter().map(format_rational).collect(),
        })
        .expect("profile serialization")
    }

    pub fn from_json(instance: &Instance, s: &str) -> Result<Self, DeadlineError> {
        #[derive(Deserialize)]
        struct Wire {
            #[serde(default)]
            theta: Option<String>,
            deadlines: Vec<String>,
        }
        let wire: Wire =
            serde_json::from_str(s).map_err(|e| DeadlineError::BadProfile(e.to_string()))?;
        let deadlines = wire
            .deadlines
            .iter()
            .map(|d| parse_rational(d).map_err(DeadlineError::BadProfile))
            .collect::<Result<Vec<_>, _>>()?;
        let theta = match wire.theta {
            Some(t) => Some(parse_rational(&t).map_err(DeadlineError::BadProfile)?),
            None => None,
        };
        DeadlineProfile::new(instance, deadlines, theta)
    }
}

/// One distinct flow of the instance with merged multiplicity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FracFlow {
    pub coflow: usize,
    pub u: usize,
    pub v: usize,
    pub multiplicity: u64,
    pub release: u64,
}

/// Fractional slot assignment from the time-indexed LP, in the continuous
/// view where slot t covers the real interval (t-1, t].
#[derive(Debug, Clone)]
pub struct FractionalSchedule {
    pub flows: Vec<FracFlow>,
    /// Per flow: (slot, amount) with positive amounts, slots ascending.
    pub assignment: Vec<Vec<(u64, Rational)>>,
    pub horizon: u64,
    /// Optimal objective of the deadline LP.
    pub lp_cost: Rational,
}

/// Duplicate (u, v) records inside one coflow merge into a single flow.
pub fn merged_flows(instance: &Instance) -> Vec<FracFlow> {
    let mut out: Vec<FracFlow> = Vec::new();
    for (j, c) in instance.coflows.iter().enumerate() {
        for f in &c.flows {
            match out
                .iter_mut()
                .find(|g| g.coflow == j && g.u == f.u && g.v == f.v)
            {
                Some(g) => g.multiplicity += f.multiplicity,
                None => out.push(FracFlow {
                    coflow: j,
                    u: f.u,
                    v: f.v,
                    multiplicity: f.multiplicity,
                    release: c.release,
                }),
            }
        }
    }
    out
}

/// Slot horizon sufficient for any schedule: max release plus twice the
/// union maximum degree.
pub fn horizon(instance: &Instance) -> u64 {
    instance.max_release() + 2 * max_degree(&instance.all_flows())
}

pub struct TimeIndexedLayout {
    pub flows: Vec<FracFlow>,
    pub horizon: u64,
    num_x: usize,
    refined: bool,
}

impl TimeIndexedLayout {
    pub fn x_var(&self, flow: usize, slot: u64) -> usize {
        debug_assert!(slot >= 1 && slot <= self.horizon);
        flow * self.horizon as usize + (slot - 1) as usize
    }

    pub fn c_var(&self, coflow: usize) -> usize {
        self.num_x + coflow
    }

    /// Slowest-cumulative-fraction variable (refined LP only).
    fn z_var(&self, n_coflows: usize, coflow: usize, slot: u64) -> usize {
        debug_assert!(self.refined);
        self.num_x + n_coflows + coflow * self.horizon as usize + (slot - 1) as usize
    }
}

fn build_time_indexed(instance: &Instance, refined: bool) -> (LinearProgram, TimeIndexedLayout) {
    let flows = merged_flows(instance);
    let horizon = horizon(instance);
    let t_total = horizon as usize;
    let num_x = flows.len() * t_total;
    let n_coflows = instance.coflows.len();
    let num_z = if refined { n_coflows * t_total } else { 0 };
    let mut lp = LinearProgram::new(num_x + n_coflows + num_z);
    let layout = TimeIndexedLayout { flows: flows.clone(), horizon, num_x, refined };

    for (fi, f) in flows.iter().enumerate() {
        for t in 1..=horizon {
            let ub = if t <= f.release { Rational::zero() } else { Rational::one() };
            lp.set_upper(layout.x_var(fi, t), ub);
        }
    }

    // (1) completion dominates the average slot of each flow:
    //     sum_t t*x_{t,f} <= p_f * c_j
    for (fi, f) in flows.iter().enumerate() {
        let mut coeffs: Vec<(usize, Rational)> = (1..=horizon)
            .map(|t| (layout.x_var(fi, t), rat_u64(t)))
            .collect();
        coeffs.push((layout.c_var(f.coflow), -rat_u64(f.multiplicity)));
        lp.add_row(coeffs, Relation::Le, Rational::zero());
    }

    // (2) per-slot fractional matching
    for t in 1..=horizon {
        for side in 0..2 {
            let count = if side == 0 { instance.left_count } else { instance.right_count };
            for vertex in 0..count {
                let coeffs: Vec<(usize, Rational)> = flows
                    .iter()
                    .enumerate()
                    .filter(|(_, f)| if side == 0 { f.u == vertex } else { f.v == vertex })
                    .map(|(fi, _)| (layout.x_var(fi, t), Rational::one()))
                    .collect();
                if !coeffs.is_empty() {
                    lp.add_row(coeffs, Relation::Le, Rational::one());
                }
            }
        }
    }

    // (3) every flow fully scheduled
    for (fi, f) in flows.iter().enumerate() {
        let coeffs: Vec<(usize, Rational)> = (1..=horizon)
            .map(|t| (layout.x_var(fi, t), Rational::one()))
            .collect();
        lp.add_row(coeffs, Relation::Eq, rat_u64(f.multiplicity));
    }

    if refined {
        // Completion also dominates one plus the area above the coflow's
        // slowest cumulative curve: z_{j,t} is capped by every flow's
        // completed fraction through slot t, and
        //     c_j >= 1 + sum_t (1 - z_{j,t}).
        // Any schedule's completion satisfies this (slots at or past it
        // contribute zero area), and it pins the completion curves so
        // that the stretched deadlines keep their expectation guarantee
        // no matter which optimal vertex the solver picks.
        for (j, _) in instance.coflows.iter().enumerate() {
            for t in 1..=horizon {
                lp.set_upper(layout.z_var(n_coflows, j, t), Rational::one());
            }
            for (fi, f) in flows.iter().enumerate() {
                if f.coflow != j {
                    continue;
                }
                let p = rat_u64(f.multiplicity);
                for t in 1..=horizon {
                    // z_{j,t} - (1/p) * sum_{s<=t} x_{s,f} <= 0
                    let mut coeffs: Vec<(usize, Rational)> =
                        vec![(layout.z_var(n_coflows, j, t), Rational::one())];
                    for s in 1..=t {
                        coeffs.push((layout.x_var(fi, s), -(Rational::one() / &p)));
                    }
                    lp.add_row(coeffs, Relation::Le, Rational::zero());
                }
            }
            // -c_j - sum_t z_{j,t} <= -(1 + horizon)
            let mut coeffs: Vec<(usize, Rational)> = vec![(layout.c_var(j), -Rational::one())];
            for t in 1..=horizon {
                coeffs.push((layout.z_var(n_coflows, j, t), -Rational::one()));
            }
            lp.add_row(coeffs, Relation::Le, -rat_u64(1 + horizon));
        }
    }

    let objective: Vec<(usize, Rational)> = instance
        .coflows
        .iter()
        .enumerate()
        .map(|(j, c)| (layout.c_var(j), c.weight.clone()))
        .collect();
    lp.set_objective(objective);

    (lp, layout)
}

/// Time-indexed deadline LP: flow-to-slot variables under per-slot
/// matching constraints, a completion variable per coflow, objective
/// min sum of weighted completions.
pub fn build_lp_d(instance: &Instance) -> (LinearProgram, TimeIndexedLayout) {
    build_time_indexed(instance, false)
}

/// Solves the deadline LP and repackages the optimum as a fractional
/// schedule plus its cost. Uses the refined variant whose completion
/// variables also dominate the slowest-curve area, so the stretched
/// deadlines average at most twice the cost minus the total weight.
pub fn solve_lp_d(instance: &Instance) -> Result<FractionalSchedule, DeadlineError> {
    let (lp, layout) = build_time_indexed(instance, true);
    let vertex = match lp.solve() {
        LpResult::Optimal(v) => v,
        other => {
            return Err(DeadlineError::LpFailure(format!(
                "time-indexed LP did not reach an optimum: {other:?}"
            )))
        }
    };
    let mut assignment = Vec::with_capacity(layout.flows.len());
    for fi in 0..layout.flows.len() {
        let mut per_flow = Vec::new();
        for t in 1..=layout.horizon {
            let val = &vertex.values[layout.x_var(fi, t)];
            if !val.is_zero() {
                per_flow.push((t, val.clone()));
            }
        }
        assignment.push(per_flow);
    }
    Ok(FractionalSchedule {
        flows: layout.flows,
        assignment,
        horizon: layout.horizon,
        lp_cost: vertex.objective_value.expect("objective present"),
    })
}

pub struct IntervalLayout {
    pub flows: Vec<FracFlow>,
    /// Interval i covers slots starts[i] ..= ends[i].
    pub starts: Vec<u64>,
    pub ends: Vec<u64>,
    num_x: usize,
}

impl IntervalLayout {
    pub fn x_var(&self, flow: usize, interval: usize) -> usize {
        flow * self.starts.len() + interval
    }

    pub fn c_var(&self, coflow: usize) -> usize {
        self.num_x + coflow
    }
}

/// Interval-indexed variant of the deadline LP for large multiplicities:
/// geometrically growing intervals with endpoints floor((1+eps)^i),
/// flow in an interval costed at the interval's last slot. Overestimates
/// the time-indexed optimum by at most a factor (1+eps).
pub fn build_lp_d_intervals(
    instance: &Instance,
    epsilon: &Rational,
) -> Result<(LinearProgram, IntervalLayout), DeadlineError> {
    if !epsilon.is_positive() {
        return Err(DeadlineError::BadEpsilon);
    }
    let flows = merged_flows(instance);
    let t_max = instance.max_release() + 2 * max_degree(&instance.all_flows());

    // Interval start points: 1 together with all floor((1+eps)^i) <= t_max.
    let mut starts: Vec<u64> = vec![1];
    let base = Rational::one() + epsilon;
    let mut power = base.clone();
    loop {
        let p = crate::rational::floor_u64(&power);
        if p > t_max {
            break;
        }
        if p > *starts.last().unwrap() {
            starts.push(p);
        }
        power = &power * &base;
        if starts.len() > 4 * 64 + t_max as usize {
            break; // defensive cap; never hit for epsilon > 0
        }
    }
    let ends: Vec<u64> = starts
        .iter()
        .enumerate()
        .map(|(i, _)| if i + 1 < starts.len() { starts[i + 1] - 1 } else { t_max })
        .collect();

    let k = starts.len();
    let num_x = flows.len() * k;
    let n_coflows = instance.coflows.len();
    let mut lp = LinearProgram::new(num_x + n_coflows);
    let layout = IntervalLayout { flows: flows.clone(), starts, ends, num_x };

    for (fi, f) in flows.iter().enumerate() {
        for i in 0..k {
            // capacity of the interval for this flow: slots after release
            let lo = layout.starts[i].max(f.release + 1);
            let cap = if layout.ends[i] >= lo { layout.ends[i] - lo + 1 } else { 0 };
            lp.set_upper(layout.x_var(fi, i), rat_u64(cap.min(f.multiplicity)));
        }
    }

    for (fi, f) in flows.iter().enumerate() {
        let mut coeffs: Vec<(usize, Rational)> = (0..k)
            .map(|i| (layout.x_var(fi, i), rat_u64(layout.ends[i])))
            .collect();
        coeffs.push((layout.c_var(f.coflow), -rat_u64(f.multiplicity)));
        lp.add_row(coeffs, Relation::Le, Rational::zero());
    }

    for i in 0..k {
        let len = rat_u64(layout.ends[i] - layout.starts[i] + 1);
        for side in 0..2 {
            let count = if side == 0 { instance.left_count } else { instance.right_count };
            for vertex in 0..count {
                let coeffs: Vec<(usize, Rational)> = flows
                    .iter()
                    .enumerate()
                    .filter(|(_, f)| if side == 0 { f.u == vertex } else { f.v == vertex })
                    .map(|(fi, _)| (layout.x_var(fi, i), Rational::one()))
                    .collect();
                if !coeffs.is_empty() {
                    lp.add_row(coeffs, Relation::Le, len.clone());
                }
            }
        }
    }

    for (fi, f) in flows.iter().enumerate() {
        let coeffs: Vec<(usize, Rational)> = (0..k)
            .map(|i| (layout.x_var(fi, i), Rational::one()))
            .collect();
        lp.add_row(coeffs, Relation::Eq, rat_u64(f.multiplicity));
    }

    let objective: Vec<(usize, Rational)> = instance
        .coflows
        .iter()
        .enumerate()
        .map(|(j, c)| (layout.c_var(j), c.weight.clone()))
        .collect();
    lp.set_objective(objective);

    Ok((lp, layout))
}

/// Optimal cost of the interval-indexed LP.
pub fn solve_lp_d_intervals(
    instance: &Instance,
    epsilon: &Rational,
) -> Result<Rational, DeadlineError> {
    let (lp, _) = build_lp_d_intervals(instance, epsilon)?;
    match lp.solve() {
        LpResult::Optimal(v) => Ok(v.objective_value.expect("objective present")),
        other => Err(DeadlineError::LpFailure(format!(
            "interval LP did not reach an optimum: {other:?}"
        ))),
    }
}

/// Time at which a flow's continuous assignment reaches `target` units.
fn flow_completion_time(assignment: &[(u64, Rational)], target: &Rational) -> Rational {
    debug_assert!(target.is_positive());
    let mut cum = Rational::zero();
    for (t, x) in assignment {
        let next = &cum + x;
        if next >= *target {
            // inside slot t: spans (t-1, t] at rate x
            return rat_u64(t - 1) + (target - &cum) / x;
        }
        cum = next;
    }
    panic!("completion target exceeds total assigned flow");
}

/// Earliest time at which every flow of coflow `j` has completed a theta
/// fraction of its demand, in the continuous view.
pub fn completion_curve(
    frac: &FractionalSchedule,
    j: usize,
    theta: &Rational,
) -> Result<Rational, DeadlineError> {
    if !theta.is_positive() || *theta > Rational::one() {
        return Err(DeadlineError::ThetaOutOfRange);
    }
    let mut best: Option<Rational> = None;
    for (fi, f) in frac.flows.iter().enumerate() {
        if f.coflow != j {
            continue;
        }
        let target = theta * rat_u64(f.multiplicity);
        let t = flow_completion_time(&frac.assignment[fi], &target);
        best = Some(match best {
            Some(b) => b.max(t),
            None => t,
        });
    }
    best.ok_or_else(|| DeadlineError::BadProfile(format!("coflow {j} has no flows")))
}

/// Breakpoints of every completion curve: the theta values at which some
/// flow's cumulative assignment crosses a slot boundary.
pub fn curve_breakpoints(frac: &FractionalSchedule) -> Vec<Rational> {
    let mut points = Vec::new();
    for (fi, f) in frac.flows.iter().enumerate() {
        let p = rat_u64(f.multiplicity);
        let mut cum = Rational::zero();
        for (_, x) in &frac.assignment[fi] {
            cum = &cum + x;
            let theta = &cum / &p;
            if theta.is_positive() && theta <= Rational::one() {
                points.push(theta);
            }
        }
    }
    points.sort();
    points.dedup();
    points
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundingMode {
    /// Draw theta with density 2x: theta = sqrt(U), truncated.
    SeededRandom(u64),
    /// Minimize the weighted deadline sum over sqrt(k/N) quantiles plus
    /// all curve breakpoints.
    CandidateMin(usize),
}

fn profile_for_theta(
    instance: &Instance,
    frac: &FractionalSchedule,
    theta: &Rational,
) -> Result<DeadlineProfile, DeadlineError> {
    let deadlines = (0..instance.coflows.len())
        .map(|j| Ok(completion_curve(frac, j, theta)? / theta))
        .collect::<Result<Vec<_>, DeadlineError>>()?;
    DeadlineProfile::new(instance, deadlines, Some(theta.clone()))
}

/// Stretch-factor rounding of the fractional schedule into deadlines
/// C_j = C_j(theta) / theta. The result is always feasible for the block
/// LP (without releases when none are present, with them otherwise).
pub fn round_deadlines(
    instance: &Instance,
    frac: &FractionalSchedule,
    mode: RoundingMode,
) -> Result<DeadlineProfile, DeadlineError> {
    match mode {
        RoundingMode::SeededRandom(seed) => {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let theta = draw_theta(&mut rng);
            profile_for_theta(instance, frac, &theta)
        }
        RoundingMode::CandidateMin(n) => {
            if n == 0 {
                return Err(DeadlineError::ZeroCandidates);
            }
            let mut candidates: Vec<Rational> = (1..=n as u64)
                .map(|k| sqrt_trunc(&(rat_u64(k) / rat_u64(n as u64))))
                .collect();
            candidates.extend(curve_breakpoints(frac));
            candidates.sort();
            candidates.dedup();
            let mut best: Option<(Rational, Rational)> = None; // (cost, theta)
            for theta in &candidates {
                let cost = (0..instance.coflows.len())
                    .map(|j| {
                        Ok(&instance.coflows[j].weight * (completion_curve(frac, j, theta)? / theta))
                    })
                    .try_fold(Rational::zero(), |acc, x: Result<_, DeadlineError>| {
                        Ok::<_, DeadlineError>(acc + x?)
                    })?;
                let better = match &best {
                    None => true,
                    Some((c, t)) => cost < *c || (cost == *c && theta < t),
                };
                if better {
                    best = Some((cost, theta.clone()));
                }
            }
            let (_, theta) = best.expect("candidate set nonempty");
            profile_for_theta(instance, frac, &theta)
        }
    }
}

/// theta = sqrt(U) with U uniform on (0, 1], truncated to 64 fractional
/// bits; the truncation keeps theta in (0, 1].
pub fn draw_theta<R: Rng>(rng: &mut R) -> Rational {
    let raw: u64 = rng.gen();
    let numer = rat_u64(raw) + Rational::one();
    let denom = Rational::new(
        num_bigint::BigInt::one() << SQRT_FRACTIONAL_BITS as usize,
        num_bigint::BigInt::one(),
    );
    sqrt_trunc(&(numer / denom))
}

/// Fractional block assignment certifying LP feasibility of a profile.
#[derive(Debug, Clone)]
pub struct BlockCheck {
    pub feasible: bool,
    /// Block upper boundaries, ascending (block s spans (b_{s-1}, b_s]).
    pub boundaries: Vec<Rational>,
    /// On success: per (flow, block) fractional assignment.
    pub assignment: Option<Vec<Vec<Rational>>>,
    pub vertex: Option<VertexSolution>,
    pub lp: LinearProgram,
    pub flows: Vec<FracFlow>,
}

fn block_lp(
    flows: &[FracFlow],
    instance: &Instance,
    boundaries: &[Rational],
    allowed: impl Fn(usize, &FracFlow, usize) -> bool,
) -> LinearProgram {
    let k = boundaries.len();
    let mut lp = LinearProgram::new(flows.len() * k);
    let var = |fi: usize, s: usize| fi * k + s;
    let mut widths = Vec::with_capacity(k);
    for (s, bound) in boundaries.iter().enumerate() {
        let prev = if s == 0 { Rational::zero() } else { boundaries[s - 1].clone() };
        widths.push(bound - &prev);
    }

    for (fi, f) in flows.iter().enumerate() {
        for (s, width) in widths.iter().enumerate() {
            let ub = if allowed(fi, f, s) {
                rat_u64(f.multiplicity).min(width.clone())
            } else {
                Rational::zero()
            };
            lp.set_upper(var(fi, s), ub);
        }
    }
    for (fi, f) in flows.iter().enumerate() {
        let coeffs = (0..k).map(|s| (var(fi, s), Rational::one())).collect();
        lp.add_row(coeffs, Relation::Eq, rat_u64(f.multiplicity));
    }
    for (s, width) in widths.iter().enumerate() {
        for side in 0..2 {
            let count = if side == 0 { instance.left_count } else { instance.right_count };
            for vertex in 0..count {
                let coeffs: Vec<(usize, Rational)> = flows
                    .iter()
                    .enumerate()
                    .filter(|(_, f)| if side == 0 { f.u == vertex } else { f.v == vertex })
                    .map(|(fi, _)| (var(fi, s), Rational::one()))
                    .collect();
                if !coeffs.is_empty() {
                    lp.add_row(coeffs, Relation::Le, width.clone());
                }
            }
        }
    }
    lp
}

fn run_block_check(
    flows: Vec<FracFlow>,
    instance: &Instance,
    boundaries: Vec<Rational>,
    allowed: impl Fn(usize, &FracFlow, usize) -> bool,
) -> BlockCheck {
    let lp = block_lp(&flows, instance, &boundaries, allowed);
    let k = boundaries.len();
    match lp.feasible() {
        LpResult::Feasible(v) => {
            let assignment = flows
                .iter()
                .enumerate()
                .map(|(fi, _)| (0..k).map(|s| v.values[fi * k + s].clone()).collect())
                .collect();
            BlockCheck {
                feasible: true,
                boundaries,
                assignment: Some(assignment),
                vertex: Some(v),
                lp,
                flows,
            }
        }
        _ => BlockCheck { feasible: false, boundaries, assignment: None, vertex: None, lp, flows },
    }
}

/// Feasibility of the block LP for a release-free profile: one block per
/// coflow in deadline order, edges confined to blocks up to their own.
pub fn check_lp_i(instance: &Instance, profile: &DeadlineProfile) -> Result<BlockCheck, DeadlineError> {
    if instance.has_releases() {
        return Err(DeadlineError::ReleasesPresent);
    }
    let flows = merged_flows(instance);
    let boundaries: Vec<Rational> = profile
        .order
        .iter()
        .map(|&j| profile.deadlines[j].clone())
        .collect();
    // block index of each coflow = its position in the sorted order
    let mut position = vec![0usize; instance.coflows.len()];
    for (pos, &j) in profile.order.iter().enumerate() {
        position[j] = pos;
    }
    Ok(run_block_check(flows, instance, boundaries, move |_, f, s| s <= position[f.coflow]))
}

/// Feasibility of the block LP with release-date separators: block
/// boundaries are the merged chain of all deadlines and positive releases,
/// and each flow is confined to blocks inside (release, deadline].
pub fn check_lp_r(instance: &Instance, profile: &DeadlineProfile) -> Result<BlockCheck, DeadlineError> {
    let flows = merged_flows(instance);
    let mut boundaries: Vec<Rational> = profile.deadlines.clone();
    boundaries.extend(
        profile
            .releases
            .iter()
            .filter(|&&r| r > 0)
            .map(|&r| rat_u64(r)),
    );
    boundaries.sort();
    boundaries.dedup();

    // index of the first block strictly after each flow's release, and of
    // the block ending at its deadline
    let first_block: Vec<usize> = flows
        .iter()
        .map(|f| boundaries.partition_point(|b| *b <= rat_u64(f.release)))
        .collect();
    let last_block: Vec<usize> = flows
        .iter()
        .map(|f| {
            boundaries
                .iter()
                .position(|b| *b == profile.deadlines[f.coflow])
                .expect("deadline present in chain")
        })
        .collect();
    Ok(run_block_check(flows, instance, boundaries, move |fi, _, s| {
        s >= first_block[fi] && s <= last_block[fi]
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Coflow, Flow};
    use crate::rational::{rat, rat_int};

    fn inst(coflows: Vec<Coflow>, left: usize, right: usize) -> Instance {
        Instance { left_count: left, right_count: right, coflows }
    }

    fn unit_coflow(u: usize, v: usize) -> Coflow {
        Coflow { weight: rat_int(1), release: 0, flows: vec![Flow { u, v, multiplicity: 1 }] }
    }

    #[test]
    fn unit_flow_lp_d_has_cost_one() {
        let instance = inst(vec![unit_coflow(0, 0)], 1, 1);
        let frac = solve_lp_d(&instance).unwrap();
        assert_eq!(frac.horizon, 2);
        assert_eq!(frac.lp_cost, rat_int(1));
        // the whole unit sits in slot 1
        assert_eq!(frac.assignment[0], vec![(1, rat_int(1))]);
    }

    #[test]
    fn completion_curve_continuous_view() {
        let instance = inst(vec![unit_coflow(0, 0)], 1, 1);
        let frac = solve_lp_d(&instance).unwrap();
        assert_eq!(completion_curve(&frac, 0, &rat(1, 2)).unwrap(), rat(1, 2));
        assert_eq!(completion_curve(&frac, 0, &rat_int(1)).unwrap(), rat_int(1));
        assert!(completion_curve(&frac, 0, &rat_int(2)).is_err());
        assert!(completion_curve(&frac, 0, &rat_int(0)).is_err());
    }

    #[test]
    fn split_flow_curve_interpolates() {
        // half in slot 1, half in slot 2; three quarters done at 3/2
        let frac = FractionalSchedule {
            flows: vec![FracFlow { coflow: 0, u: 0, v: 0, multiplicity: 1, release: 0 }],
            assignment: vec![vec![(1, rat(1, 2)), (2, rat(1, 2))]],
            horizon: 2,
            lp_cost: rat_int(0),
        };
        assert_eq!(completion_curve(&frac, 0, &rat(3, 4)).unwrap(), rat(3, 2));
        assert_eq!(completion_curve(&frac, 0, &rat(1, 2)).unwrap(), rat_int(1));
        let bps = curve_breakpoints(&frac);
        assert_eq!(bps, vec![rat(1, 2), rat_int(1)]);
    }

    #[test]
    fn unit_flow_rounds_to_deadline_one_for_any_theta() {
        let instance = inst(vec![unit_coflow(0, 0)], 1, 1);
        let frac = solve_lp_d(&instance).unwrap();
        for seed in 0..20 {
            let p = round_deadlines(&instance, &frac, RoundingMode::SeededRandom(seed)).unwrap();
            assert_eq!(p.deadlines[0], rat_int(1), "curve is theta -> theta");
        }
        let p = round_deadlines(&instance, &frac, RoundingMode::CandidateMin(8)).unwrap();
        assert_eq!(p.deadlines[0], rat_int(1));
    }

    #[test]
    fn zero_candidates_rejected() {
        let instance = inst(vec![unit_coflow(0, 0)], 1, 1);
        let frac = solve_lp_d(&instance).unwrap();
        assert_eq!(
            round_deadlines(&instance, &frac, RoundingMode::CandidateMin(0)),
            Err(DeadlineError::ZeroCandidates)
        );
    }

    #[test]
    fn lp_i_single_edge_deadline_one_feasible() {
        let instance = inst(vec![unit_coflow(0, 0)], 1, 1);
        let profile = DeadlineProfile::new(&instance, vec![rat_int(1)], None).unwrap();
        let check = check_lp_i(&instance, &profile).unwrap();
        assert!(check.feasible);
    }

    #[test]
    fn lp_i_two_parallel_edges_deadline_one_infeasible() {
        // one coflow holding (0,0) twice cannot fit a width-1 block
        let instance = inst(
            vec![Coflow {
                weight: rat_int(1),
                release: 0,
                flows: vec![Flow { u: 0, v: 0, multiplicity: 2 }],
            }],
            1,
            1,
        );
        let profile = DeadlineProfile::new(&instance, vec![rat_int(1)], None).unwrap();
        let check = check_lp_i(&instance, &profile).unwrap();
        assert!(!check.feasible);
    }

    #[test]
    fn lp_r_release_two_deadline_three_feasible() {
        let mut c = unit_coflow(0, 0);
        c.release = 2;
        let instance = inst(vec![c], 1, 1);
        let profile = DeadlineProfile::new(&instance, vec![rat_int(3)], None).unwrap();
        assert!(check_lp_r(&instance, &profile).unwrap().feasible);
        // deadline 2 leaves no block after the release
        assert!(DeadlineProfile::new(&instance, vec![rat_int(2)], None).is_err());
    }

    #[test]
    fn lp_r_release_blocks_capacity() {
        // deadline barely above the release leaves a block of width 1/2,
        // too small for a unit flow
        let mut c = unit_coflow(0, 0);
        c.release = 2;
        let instance = inst(vec![c], 1, 1);
        let profile = DeadlineProfile::new(&instance, vec![rat(5, 2)], None).unwrap();
        assert!(!check_lp_r(&instance, &profile).unwrap().feasible);
    }

    #[test]
    fn interval_lp_matches_unit_optimum() {
        let instance = inst(vec![unit_coflow(0, 0)], 1, 1);
        let cost = solve_lp_d_intervals(&instance, &rat_int(1)).unwrap();
        assert_eq!(cost, rat_int(1));
        assert!(solve_lp_d_intervals(&instance, &rat_int(0)).is_err());
    }

    #[test]
    fn profile_json_round_trip() {
        let instance = inst(vec![unit_coflow(0, 0), unit_coflow(0, 0)], 1, 1);
        let profile = DeadlineProfile::new(
            &instance,
            vec![rat(3, 2), rat_int(3)],
            Some(rat(1, 2)),
        )
        .unwrap();
        let json = profile.to_json();
        let back = DeadlineProfile::from_json(&instance, &json).unwrap();
        assert_eq!(profile, back);
    }

    #[test]
    fn theta_draws_lie_in_unit_interval() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for _ in 0..200 {
            let theta = draw_theta(&mut rng);
            assert!(theta.is_positive() && theta <= Rational::one());
        }
    }
}
