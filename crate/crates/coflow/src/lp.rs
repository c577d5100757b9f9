//! Exact rational LP solver returning basic feasible (vertex) solutions.
//!
//! Bounded-variable primal simplex over `BigRational`, two phases, Bland's
//! rule for anti-cycling. Variable bounds `[0, u_i]` are handled natively
//! rather than as rows, so a vertex has at most `m` variables strictly
//! between their bounds — the counting property the iterated rounding
//! relies on. No floating point anywhere.

use std::fmt::Write as _;

use num_traits::{One, Signed, Zero};

use crate::rational::{format_rational, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub coeffs: Vec<(usize, Rational)>,
    pub relation: Relation,
    pub rhs: Rational,
}

/// An LP of the form `min c·x  s.t. rows, 0 <= x_i <= u_i`, where `u_i`
/// may be absent (unbounded above). The objective is optional; without
/// one, `solve` only looks for a feasible vertex.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub upper: Vec<Option<Rational>>,
    pub rows: Vec<Row>,
    pub objective: Option<Vec<(usize, Rational)>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisVar {
    Structural(usize),
    Slack(usize),
    Artificial(usize),
}

#[derive(Debug, Clone)]
pub struct VertexSolution {
    pub values: Vec<Rational>,
    /// Basic variable per solved row.
    pub basis: Vec<BasisVar>,
    /// Objective value when the LP had an objective.
    pub objective_value: Option<Rational>,
}

#[derive(Debug, Clone)]
pub enum LpResult {
    Optimal(VertexSolution),
    /// Feasible vertex (feasibility-only run or no objective given).
    Feasible(VertexSolution),
    /// No feasible point; the positive phase-1 optimum certifies it.
    Infeasible { phase1_value: Rational },
    Unbounded,
}

impl LpResult {
    pub fn vertex(&self) -> Option<&VertexSolution> {
        match self {
            LpResult::Optimal(v) | LpResult::Feasible(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.vertex().is_some()
    }
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            num_vars,
            upper: vec![None; num_vars],
            rows: Vec::new(),
            objective: None,
        }
    }

    pub fn set_upper(&mut self, var: usize, bound: Rational) {
        assert!(var < self.num_vars);
        assert!(!bound.is_negative(), "upper bound below lower bound 0");
        self.upper[var] = Some(bound);
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, Rational)>, relation: Relation, rhs: Rational) {
        let mut sorted = coeffs;
        sorted.sort_by_key(|&(i, _)| i);
        let mut merged: Vec<(usize, Rational)> = Vec::with_capacity(sorted.len());
        for (i, c) in sorted {
            assert!(i < self.num_vars, "coefficient index out of range");
            match merged.last_mut() {
                Some((j, acc)) if *j == i => *acc += c,
                _ => merged.push((i, c)),
            }
        }
        merged.retain(|(_, c)| !c.is_zero());
        self.rows.push(Row { coeffs: merged, relation, rhs });
    }

    pub fn set_objective(&mut self, coeffs: Vec<(usize, Rational)>) {
        for &(i, _) in &coeffs {
            assert!(i < self.num_vars, "objective index out of range");
        }
        self.objective = Some(coeffs);
    }

    /// Solves the LP: optimal vertex, `Unbounded`, or `Infeasible` when an
    /// objective is present; feasible vertex or `Infeasible` otherwise.
    pub fn solve(&self) -> LpResult {
        Simplex::run(self, true)
    }

    /// Phase-1 only: feasibility plus a witness vertex.
    pub fn feasible(&self) -> LpResult {
        Simplex::run(self, false)
    }

    /// Plain-text equation dump for debugging.
    pub fn dump_text(&self) -> String {
        let mut out = String::new();
        match &self.objective {
            Some(obj) => {
                let _ = write!(out, "min");
                for (i, c) in obj {
                    let _ = write!(out, " {}*x{}", format_rational(c), i);
                }
                let _ = writeln!(out);
            }
            None => {
                let _ = writeln!(out, "feasibility");
            }
        }
        for row in &self.rows {
            let mut first = true;
            for (i, c) in &row.coeffs {
                let _ = write!(out, "{}{}*x{}", if first { "" } else { " + " }, format_rational(c), i);
                first = false;
            }
            if first {
                let _ = write!(out, "0");
            }
            let rel = match row.relation {
                Relation::Le => "<=",
                Relation::Eq => "=",
            };
            let _ = writeln!(out, " {} {}", rel, format_rational(&row.rhs));
        }
        for (i, u) in self.upper.iter().enumerate() {
            match u {
                Some(u) => {
                    let _ = writeln!(out, "0 <= x{} <= {}", i, format_rational(u));
                }
                None => {
                    let _ = writeln!(out, "0 <= x{}", i);
                }
            }
        }
        out
    }

    /// Exact residual check: does `values` satisfy every row and bound?
    pub fn satisfied_by(&self, values: &[Rational]) -> bool {
        if values.len() != self.num_vars {
            return false;
        }
        for (i, v) in values.iter().enumerate() {
            if v.is_negative() {
                return false;
            }
            if let Some(u) = &self.upper[i] {
                if v > u {
                    return false;
                }
            }
        }
        self.rows.iter().all(|row| {
            let lhs = row
                .coeffs
                .iter()
                .map(|(i, c)| c * &values[*i])
                .fold(Rational::zero(), |a, b| a + b);
            match row.relation {
                Relation::Le => lhs <= row.rhs,
                Relation::Eq => lhs == row.rhs,
            }
        })
    }

    /// Number of variables strictly between their bounds; at a vertex this
    /// never exceeds the number of nonempty rows.
    pub fn strictly_interior_count(&self, values: &[Rational]) -> usize {
        values
            .iter()
            .enumerate()
            .filter(|(i, v)| {
                !v.is_zero()
                    && match &self.upper[*i] {
                        Some(u) => *v < u,
                        None => true,
                    }
            })
            .count()
    }

    pub fn active_row_count(&self) -> usize {
        self.rows.iter().filter(|r| !r.coeffs.is_empty()).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
}

/// Augmented system state. Columns in index order: structural variables,
/// then one slack per Le row, then artificials.
struct Simplex {
    cols: Vec<Vec<(usize, Rational)>>,
    upper: Vec<Option<Rational>>,
    kind: Vec<BasisVar>,
    state: Vec<VarState>,
    values: Vec<Rational>,
    basic: Vec<usize>,
    binv: Vec<Vec<Rational>>,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl Simplex {
    fn run(lp: &LinearProgram, use_objective: bool) -> LpResult {
        // Rows without coefficients are checked directly and dropped.
        for row in &lp.rows {
            if row.coeffs.is_empty() {
                let ok = match row.relation {
                    Relation::Le => !row.rhs.is_negative(),
                    Relation::Eq => row.rhs.is_zero(),
                };
                if !ok {
                    return LpResult::Infeasible { phase1_value: row.rhs.abs() };
                }
            }
        }
        let active_rows: Vec<&Row> = lp.rows.iter().filter(|r| !r.coeffs.is_empty()).collect();
        let m = active_rows.len();
        let n = lp.num_vars;

        let mut cols: Vec<Vec<(usize, Rational)>> = vec![Vec::new(); n];
        for (r, row) in active_rows.iter().enumerate() {
            for (i, c) in &row.coeffs {
                cols[*i].push((r, c.clone()));
            }
        }
        let mut kind: Vec<BasisVar> = (0..n).map(BasisVar::Structural).collect();
        let mut upper = lp.upper.clone();

        let mut slack_of_row = vec![usize::MAX; m];
        for (r, row) in active_rows.iter().enumerate() {
            if row.relation == Relation::Le {
                slack_of_row[r] = cols.len();
                cols.push(vec![(r, Rational::one())]);
                kind.push(BasisVar::Slack(r));
                upper.push(None);
            }
        }

        // Initial basis: structurals nonbasic at 0, slacks absorb
        // nonnegative residuals, artificials cover the rest.
        let mut state = vec![VarState::AtLower; cols.len()];
        let mut values = vec![Rational::zero(); cols.len()];
        let mut basic = vec![usize::MAX; m];
        let mut artificials = Vec::new();

        for (r, row) in active_rows.iter().enumerate() {
            let residual = row.rhs.clone();
            if slack_of_row[r] != usize::MAX && !residual.is_negative() {
                let s = slack_of_row[r];
                basic[r] = s;
                state[s] = VarState::Basic(r);
                values[s] = residual;
            } else {
                let sign = if residual.is_negative() { -Rational::one() } else { Rational::one() };
                let a = cols.len();
                cols.push(vec![(r, sign)]);
                kind.push(BasisVar::Artificial(r));
                upper.push(None);
                state.push(VarState::Basic(r));
                values.push(residual.abs());
                basic[r] = a;
                artificials.push(a);
            }
        }

        // B is diagonal (+-1) at the start.
        let binv: Vec<Vec<Rational>> = (0..m)
            .map(|i| {
                let mut row = vec![Rational::zero(); m];
                let (r, c) = &cols[basic[i]][0];
                debug_assert_eq!(*r, i);
                row[i] = Rational::one() / c;
                row
            })
            .collect();

        let mut sx = Simplex { cols, upper, kind, state, values, basic, binv };

        if !artificials.is_empty() {
            let phase1: Vec<Rational> = sx
                .kind
                .iter()
                .map(|k| match k {
                    BasisVar::Artificial(_) => Rational::one(),
                    _ => Rational::zero(),
                })
                .collect();
            match sx.optimize(&phase1) {
                Outcome::Optimal => {}
                Outcome::Unbounded => unreachable!("phase-1 objective is bounded below by 0"),
            }
            let p1: Rational = artificials
                .iter()
                .map(|&a| sx.values[a].clone())
                .fold(Rational::zero(), |acc, v| acc + v);
            if p1.is_positive() {
                return LpResult::Infeasible { phase1_value: p1 };
            }
            // Artificials stay pinned at zero; degenerate pivots may still
            // move them out of the basis.
            for &a in &artificials {
                sx.upper[a] = Some(Rational::zero());
            }
        }

        let objective = if use_objective { lp.objective.as_ref() } else { None };
        if let Some(obj) = objective {
            let mut c = vec![Rational::zero(); sx.cols.len()];
            for (i, coef) in obj {
                c[*i] += coef.clone();
            }
            match sx.optimize(&c) {
                Outcome::Optimal => {}
                Outcome::Unbounded => return LpResult::Unbounded,
            }
        }

        let values: Vec<Rational> = sx.values[..n].to_vec();
        let basis: Vec<BasisVar> = sx.basic.iter().map(|&b| sx.kind[b]).collect();
        let objective_value = objective.map(|obj| {
            obj.iter()
                .map(|(i, c)| c * &values[*i])
                .fold(Rational::zero(), |a, b| a + b)
        });
        let solution = VertexSolution { values, basis, objective_value };
        if objective.is_some() {
            LpResult::Optimal(solution)
        } else {
            LpResult::Feasible(solution)
        }
    }

    fn is_fixed(&self, j: usize) -> bool {
        matches!(&self.upper[j], Some(u) if u.is_zero())
    }

    /// Primal simplex minimizing `c` (one entry per column), Bland's rule.
    fn optimize(&mut self, c: &[Rational]) -> Outcome {
        let m = self.basic.len();
        loop {
            // y = c_B * B^-1
            let mut y = vec![Rational::zero(); m];
            for (i, &b) in self.basic.iter().enumerate() {
                if c[b].is_zero() {
                    continue;
                }
                for (k, yk) in y.iter_mut().enumerate() {
                    if !self.binv[i][k].is_zero() {
                        *yk += &c[b] * &self.binv[i][k];
                    }
                }
            }

            // Entering variable: smallest eligible index (Bland).
            let mut entering = None;
            for (j, col) in self.cols.iter().enumerate() {
                let st = self.state[j];
                if matches!(st, VarState::Basic(_)) || self.is_fixed(j) {
                    continue;
                }
                let mut d = c[j].clone();
                for (r, a) in col {
                    if !y[*r].is_zero() {
                        d -= &y[*r] * a;
                    }
                }
                let eligible = match st {
                    VarState::AtLower => d.is_negative(),
                    VarState::AtUpper => d.is_positive(),
                    VarState::Basic(_) => false,
                };
                if eligible {
                    entering = Some((j, st == VarState::AtLower));
                    break;
                }
            }
            let Some((j, increasing)) = entering else {
                return Outcome::Optimal;
            };

            // w = B^-1 * A_j
            let mut w = vec![Rational::zero(); m];
            for (r, a) in &self.cols[j] {
                for (i, wi) in w.iter_mut().enumerate() {
                    if !self.binv[i][*r].is_zero() {
                        *wi += &self.binv[i][*r] * a;
                    }
                }
            }

            // Ratio test. The entering variable's own bound gap caps the
            // step (bound flip); rows cap it where a basic variable hits a
            // bound. Ties among rows break to the smallest basic var index.
            let bound_gap = self.upper[j].clone();
            let mut best_t = bound_gap;
            let mut leaving: Option<usize> = None;
            for (i, wi) in w.iter().enumerate() {
                if wi.is_zero() {
                    continue;
                }
                let b = self.basic[i];
                let drops = if increasing { wi.is_positive() } else { wi.is_negative() };
                let limit = if drops {
                    Some(&self.values[b] / wi.abs())
                } else {
                    self.upper[b].as_ref().map(|u| (u - &self.values[b]) / wi.abs())
                };
                if let Some(limit) = limit {
                    let replace = match &best_t {
                        None => true,
                        Some(t) => {
                            limit < *t
                                || (limit == *t
                                    && leaving.is_some_and(|prev| b < self.basic[prev]))
                        }
                    };
                    if replace {
                        best_t = Some(limit);
                        leaving = Some(i);
                    }
                }
            }

            let Some(t) = best_t else {
                return Outcome::Unbounded;
            };

            let delta = if increasing { t.clone() } else { -t.clone() };
            for (i, wi) in w.iter().enumerate() {
                if !wi.is_zero() {
                    let b = self.basic[i];
                    self.values[b] -= &delta * wi;
                }
            }
            self.values[j] = if increasing {
                t.clone()
            } else {
                self.upper[j].clone().expect("decreasing from upper") - &t
            };

            match leaving {
                // Capped by the entering variable's own bound: state flip,
                // basis unchanged. t > 0 here, so the objective strictly
                // drops and no cycling can pass through flips.
                None => {
                    self.state[j] = if increasing { VarState::AtUpper } else { VarState::AtLower };
                }
                Some(r) => {
                    let out = self.basic[r];
                    let drops = if increasing { w[r].is_positive() } else { w[r].is_negative() };
                    self.state[out] = if drops { VarState::AtLower } else { VarState::AtUpper };
                    self.values[out] = if drops {
                        Rational::zero()
                    } else {
                        self.upper[out].clone().expect("leaving variable at upper")
                    };
                    self.state[j] = VarState::Basic(r);
                    self.basic[r] = j;

                    // binv <- E * binv with the eta column from w.
                    let pivot = w[r].clone();
                    for k in 0..m {
                        if !self.binv[r][k].is_zero() {
                            let v = &self.binv[r][k] / &pivot;
                            self.binv[r][k] = v;
                        }
                    }
                    let pivot_row = self.binv[r].clone();
                    for (i, wi) in w.iter().enumerate() {
                        if i != r && !wi.is_zero() {
                            for (k, pk) in pivot_row.iter().enumerate() {
                                if !pk.is_zero() {
                                    let d = wi * pk;
                                    self.binv[i][k] -= d;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}
