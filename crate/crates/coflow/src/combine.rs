//! Algorithm combination: run several allocators and keep the cheapest
//! schedule, and mechanically verify the delay-function certificates
//! that turn per-allocator guarantees into an approximation ratio.
//!
//! A certificate states sum_i w_i * f_i(x) <= alpha*(x+1) for all x >= 1
//! (release form: <= a*(x+1) + b*(r+1) for r in [0, x-1]). All functions
//! involved are piecewise affine with jumps on lattices {lambda + i*tau},
//! so exact verification needs only the breakpoints of one tail period
//! plus a drift comparison; everything is rational arithmetic.

use std::fmt;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::cbf::{self, CbfError};
use crate::deadlines::DeadlineProfile;
use crate::greedy::{self, GreedyError};
use crate::model::{cost, max_degree, CostReport, Instance, Schedule};
use crate::oracle;
use crate::rational::{format_rational, parse_rational, rat, rat_u64, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CombineError {
    BadCertificate(String),
    Member { name: String, error: String },
    EmptyPortfolio,
}

impl fmt::Display for CombineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CombineError::BadCertificate(s) => write!(f, "bad certificate: {s}"),
            CombineError::Member { name, error } => write!(f, "allocator {name} failed: {error}"),
            CombineError::EmptyPortfolio => write!(f, "portfolio is empty"),
        }
    }
}

impl std::error::Error for CombineError {}

/// Bound on an allocator's (weighted) finishing time as a function of
/// the deadline x, and optionally the release date r.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DelayFunction {
    /// a*x + c
    Linear { slope: Rational, intercept: Rational },
    /// a*x + b*r + c
    AffineRelease { x_coeff: Rational, r_coeff: Rational, intercept: Rational },
    /// lambda = 0: (tau+2)*ceil(x/tau);
    /// lambda > 0: lambda+2 for x <= lambda, else
    ///             (tau+2)*ceil((x-lambda)/tau) + lambda + 2
    CeilingPeriodic { tau: u64, lambda: u64 },
    /// b for x < b+1, else b + slope*x + intercept
    KonigPrefix { b: u64, slope: Rational, intercept: Rational },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ReleaseMode {
    /// r = 0
    Zero,
    /// r = x - 1, the largest release compatible with the deadline
    Max,
}

impl DelayFunction {
    fn eval(&self, x: &Rational, mode: ReleaseMode) -> Rational {
        match self {
            DelayFunction::Linear { slope, intercept } => slope * x + intercept,
            DelayFunction::AffineRelease { x_coeff, r_coeff, intercept } => {
                let r = match mode {
                    ReleaseMode::Zero => Rational::zero(),
                    ReleaseMode::Max => x - Rational::one(),
                };
                x_coeff * x + r_coeff * r + intercept
            }
            DelayFunction::CeilingPeriodic { tau, lambda } => {
                cbf::cbf_delay_bound(*tau, *lambda, x)
            }
            DelayFunction::KonigPrefix { b, slope, intercept } => {
                if *x < rat_u64(b + 1) {
                    rat_u64(*b)
                } else {
                    slope * x + intercept + rat_u64(*b)
                }
            }
        }
    }

    /// Average growth per unit of x, far to the right.
    fn tail_rate(&self, mode: ReleaseMode) -> Rational {
        match self {
            DelayFunction::Linear { slope, .. } => slope.clone(),
            DelayFunction::AffineRelease { x_coeff, r_coeff, .. } => match mode {
                ReleaseMode::Zero => x_coeff.clone(),
                ReleaseMode::Max => x_coeff + r_coeff,
            },
            DelayFunction::CeilingPeriodic { tau, .. } => rat_u64(tau + 2) / rat_u64(*tau),
            DelayFunction::KonigPrefix { slope, .. } => slope.clone(),
        }
    }

    /// Points at or before which the function changes shape.
    fn case_splits(&self) -> Vec<Rational> {
        match self {
            DelayFunction::Linear { .. } | DelayFunction::AffineRelease { .. } => vec![],
            DelayFunction::CeilingPeriodic { lambda, .. } => vec![rat_u64(*lambda)],
            DelayFunction::KonigPrefix { b, .. } => vec![rat_u64(b + 1)],
        }
    }

    fn period(&self) -> Option<u64> {
        match self {
            DelayFunction::CeilingPeriodic { tau, .. } => Some(*tau),
            _ => None,
        }
    }

    /// Jump points of the function inside [1, limit].
    fn breakpoints(&self, limit: &Rational) -> Vec<Rational> {
        match self {
            DelayFunction::Linear { .. } | DelayFunction::AffineRelease { .. } => vec![],
            DelayFunction::CeilingPeriodic { tau, lambda } => {
                let mut out = Vec::new();
                let mut p = rat_u64(*lambda);
                while p <= *limit {
                    if p >= Rational::one() {
                        out.push(p.clone());
                    }
                    p += rat_u64(*tau);
                }
                out
            }
            DelayFunction::KonigPrefix { b, .. } => vec![rat_u64(b + 1)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CertificateTarget {
    /// alpha*(x+1), proving a 2*alpha approximation
    Plain { alpha: Rational },
    /// a*(x+1) + b*(r+1), proving a 2a+b approximation
    Release { a: Rational, b: Rational },
}

impl CertificateTarget {
    pub fn final_ratio(&self) -> Rational {
        match self {
            CertificateTarget::Plain { alpha } => rat(2, 1) * alpha,
            CertificateTarget::Release { a, b } => rat(2, 1) * a + b,
        }
    }

    fn eval(&self, x: &Rational, mode: ReleaseMode) -> Rational {
        match self {
            CertificateTarget::Plain { alpha } => alpha * (x + Rational::one()),
            CertificateTarget::Release { a, b } => {
                let r = match mode {
                    ReleaseMode::Zero => Rational::zero(),
                    ReleaseMode::Max => x - Rational::one(),
                };
                a * (x + Rational::one()) + b * (r + Rational::one())
            }
        }
    }

    fn tail_rate(&self, mode: ReleaseMode) -> Rational {
        match self {
            CertificateTarget::Plain { alpha } => alpha.clone(),
            CertificateTarget::Release { a, b } => match mode {
                ReleaseMode::Zero => a.clone(),
                ReleaseMode::Max => a + b,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub members: Vec<(DelayFunction, Rational)>,
    pub target: CertificateTarget,
}

#[derive(Debug, Clone)]
pub struct CertificateVerdict {
    pub ok: bool,
    /// On failure: an x (and r) where the combination exceeds the target.
    pub witness: Option<(Rational, Option<Rational>)>,
    /// Points where the combination meets the target exactly.
    pub tight_points: Vec<Rational>,
    /// True when the combination equals the target everywhere checked.
    pub tight_everywhere: bool,
    pub final_ratio: Rational,
}

fn combination_value(cert: &Certificate, x: &Rational, mode: ReleaseMode) -> Rational {
    cert.members
        .iter()
        .map(|(f, w)| w * f.eval(x, mode))
        .fold(Rational::zero(), |a, b| a + b)
}

/// Proves (or refutes, with a witness) the certificate inequality for
/// all real x >= 1. Release-form targets are affine in r on both sides,
/// so only the extreme releases r = 0 and r = x-1 need checking.
pub fn verify_certificate(cert: &Certificate) -> Result<CertificateVerdict, CombineError> {
    let weight_sum = cert
        .members
        .iter()
        .map(|(_, w)| w.clone())
        .fold(Rational::zero(), |a, b| a + b);
    if cert.members.iter().any(|(_, w)| w.is_negative()) {
        return Err(CombineError::BadCertificate("negative weight".into()));
    }
    if weight_sum != Rational::one() {
        return Err(CombineError::BadCertificate(format!(
            "weights sum to {}, not 1",
            format_rational(&weight_sum)
        )));
    }

    let modes: &[ReleaseMode] = match cert.target {
        CertificateTarget::Plain { .. } => &[ReleaseMode::Zero],
        CertificateTarget::Release { .. } => &[ReleaseMode::Zero, ReleaseMode::Max],
    };

    // scan limit: one full common period past the last case split
    let period = cert
        .members
        .iter()
        .filter_map(|(f, _)| f.period())
        .fold(1u64, |acc, p| acc.lcm(&p));
    let last_split = cert
        .members
        .iter()
        .flat_map(|(f, _)| f.case_splits())
        .fold(Rational::one(), |acc, s| acc.max(s));
    let limit = &last_split + rat_u64(2 * period);

    let mut tight_points = Vec::new();
    let mut tight_everywhere = true;
    for &mode in modes {
        // candidate knots: domain edge, case splits, lattice jumps
        let mut knots: Vec<Rational> = vec![Rational::one()];
        for (f, _) in &cert.members {
            knots.extend(f.breakpoints(&limit));
            knots.extend(f.case_splits().into_iter().filter(|s| *s >= Rational::one()));
        }
        knots.push(limit.clone());
        knots.sort();
        knots.dedup();
        knots.retain(|p| *p >= Rational::one());

        let h = |x: &Rational| combination_value(cert, x, mode) - cert.target.eval(x, mode);

        for p in &knots {
            let v = h(p);
            if v.is_positive() {
                return Ok(CertificateVerdict {
                    ok: false,
                    witness: Some(witness_for(p, mode)),
                    tight_points,
                    tight_everywhere: false,
                    final_ratio: cert.target.final_ratio(),
                });
            }
            if v.is_zero() {
                if mode == ReleaseMode::Zero && !tight_points.contains(p) {
                    tight_points.push(p.clone());
                }
            } else {
                tight_everywhere = false;
            }
        }

        // between consecutive knots h is affine; its one-sided limits are
        // recovered from two interior samples
        for w in knots.windows(2) {
            let (p, q) = (&w[0], &w[1]);
            let width = q - p;
            if width.is_zero() {
                continue;
            }
            let m1 = p + &width * rat(1, 3);
            let m2 = p + &width * rat(2, 3);
            let (v1, v2) = (h(&m1), h(&m2));
            let slope = (&v2 - &v1) / (&m2 - &m1);
            let at_p = &v1 - &slope * (&m1 - p);
            let at_q = &v1 + &slope * (q - &m1);
            if at_p.is_positive() || at_q.is_positive() {
                // interior witness: midpoint of the positive part of the
                // affine piece
                let x = if at_p.is_positive() && at_q.is_positive() {
                    (p + q) * rat(1, 2)
                } else {
                    let root = p + (-&at_p) / &slope;
                    if at_q.is_positive() {
                        (&root + q) * rat(1, 2)
                    } else {
                        (p + &root) * rat(1, 2)
                    }
                };
                debug_assert!(h(&x).is_positive());
                return Ok(CertificateVerdict {
                    ok: false,
                    witness: Some(witness_for(&x, mode)),
                    tight_points,
                    tight_everywhere: false,
                    final_ratio: cert.target.final_ratio(),
                });
            }
            if !v1.is_zero() || !v2.is_zero() {
                tight_everywhere = false;
            }
        }

        // tail: past the last case split, h changes by drift*period per
        // period, so positive drift eventually violates the bound
        let drift = cert
            .members
            .iter()
            .map(|(f, w)| w * f.tail_rate(mode))
            .fold(Rational::zero(), |a, b| a + b)
            - cert.target.tail_rate(mode);
        if drift.is_positive() {
            let at_limit = h(&limit);
            let steps = if at_limit.is_negative() {
                let needed = -&at_limit / (&drift * rat_u64(period));
                crate::rational::ceil_u64(&needed) + 1
            } else {
                1
            };
            let x = &limit + rat_u64(steps * period);
            debug_assert!(h(&x).is_positive());
            return Ok(CertificateVerdict {
                ok: false,
                witness: Some(witness_for(&x, mode)),
                tight_points,
                tight_everywhere: false,
                final_ratio: cert.target.final_ratio(),
            });
        }
        if drift.is_negative() {
            tight_everywhere = false;
        }
    }

    tight_points.sort();
    Ok(CertificateVerdict {
        ok: true,
        witness: None,
        tight_points,
        tight_everywhere,
        final_ratio: cert.target.final_ratio(),
    })
}

fn witness_for(x: &Rational, mode: ReleaseMode) -> (Rational, Option<Rational>) {
    match mode {
        ReleaseMode::Zero => (x.clone(), None),
        ReleaseMode::Max => (x.clone(), Some(x - Rational::one())),
    }
}

/// The combination behind the 140/41 approximation: greedy together with
/// the tau = 6 rounding allocator.
pub fn certificate_main() -> Certificate {
    Certificate {
        members: vec![
            (DelayFunction::Linear { slope: rat(2, 1), intercept: rat(-1, 1) }, rat(23, 41)),
            (DelayFunction::Linear { slope: rat(4, 3), intercept: rat(31, 6) }, rat(18, 41)),
        ],
        target: CertificateTarget::Plain { alpha: rat(70, 41) },
    }
}

/// The 4.36 release-date combination: greedy (delay r + 2x - 1) with the
/// tau = 4 release-variant allocator.
pub fn certificate_release() -> Certificate {
    Certificate {
        members: vec![
            (
                DelayFunction::AffineRelease {
                    x_coeff: rat(2, 1),
                    r_coeff: rat(1, 1),
                    intercept: rat(-1, 1),
                },
                rat(17, 25),
            ),
            (
                DelayFunction::AffineRelease {
                    x_coeff: rat(3, 2),
                    r_coeff: rat(0, 1),
                    intercept: rat(10, 1),
                },
                rat(8, 25),
            ),
        ],
        target: CertificateTarget::Release { a: rat(46, 25), b: rat(17, 25) },
    }
}

/// The 109/28 integrality-gap combination: the existential 2x+1 schedule
/// with the tau = 5 release-variant allocator.
pub fn certificate_intgap() -> Certificate {
    Certificate {
        members: vec![
            (DelayFunction::Linear { slope: rat(2, 1), intercept: rat(1, 1) }, rat(51, 56)),
            (DelayFunction::Linear { slope: rat(7, 5), intercept: rat(58, 5) }, rat(5, 56)),
        ],
        target: CertificateTarget::Plain { alpha: rat(109, 56) },
    }
}

/// The 497/146 combination: greedy, the König-prefix hybrid at (6, 1),
/// and five fixed-offset tau = 5 allocators.
pub fn certificate_improved() -> Certificate {
    let mut members = vec![
        (DelayFunction::Linear { slope: rat(2, 1), intercept: rat(-1, 1) }, rat(749, 1460)),
        (
            DelayFunction::KonigPrefix { b: 1, slope: rat(4, 3), intercept: rat(31, 6) },
            rat(126, 1460),
        ),
    ];
    for lambda in [0u64, 3, 4, 6, 7] {
        members.push((DelayFunction::CeilingPeriodic { tau: 5, lambda }, rat(117, 1460)));
    }
    Certificate { members, target: CertificateTarget::Plain { alpha: rat(2485, 1460) } }
}

pub fn builtin_certificate(name: &str) -> Option<Certificate> {
    match name {
        "main" => Some(certificate_main()),
        "release" => Some(certificate_release()),
        "intgap" => Some(certificate_intgap()),
        "improved" => Some(certificate_improved()),
        _ => None,
    }
}

// ---- certificate JSON -------------------------------------------------

#[derive(Serialize, Deserialize)]
struct CertWire {
    target: TargetWire,
    members: Vec<MemberWire>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "form")]
enum TargetWire {
    #[serde(rename = "plain")]
    Plain { alpha: String },
    #[serde(rename = "release")]
    Release { a: String, b: String },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "form")]
enum MemberWire {
    #[serde(rename = "linear")]
    Linear { slope: String, intercept: String, weight: String },
    #[serde(rename = "affine-release")]
    AffineRelease { x: String, r: String, intercept: String, weight: String },
    #[serde(rename = "ceiling-periodic")]
    CeilingPeriodic { tau: u64, lambda: u64, weight: String },
    #[serde(rename = "konig-prefix")]
    KonigPrefix { b: u64, slope: String, intercept: String, weight: String },
}

pub fn certificate_to_json(cert: &Certificate) -> String {
    let target = match &cert.target {
        CertificateTarget::Plain { alpha } => TargetWire::Plain { alpha: format_rational(alpha) },
        CertificateTarget::Release { a, b } => {
            TargetWire::Release { a: format_rational(a), b: format_rational(b) }
        }
    };
    let members = cert
        .members
        .iter()
        .map(|(f, w)| {
            let weight = format_rational(w);
            match f {
                DelayFunction::Linear { slope, intercept } => MemberWire::Linear {
                    slope: format_rational(slope),
                    intercept: format_rational(intercept),
                    weight,
                },
                DelayFunction::AffineRelease { x_coeff, r_coeff, intercept } => {
                    MemberWire::AffineRelease {
                        x: format_rational(x_coeff),
                        r: format_rational(r_coeff),
                        intercept: format_rational(intercept),
                        weight,
                    }
                }
                DelayFunction::CeilingPeriodic { tau, lambda } => {
                    MemberWire::CeilingPeriodic { tau: *tau, lambda: *lambda, weight }
                }
                DelayFunction::KonigPrefix { b, slope, intercept } => MemberWire::KonigPrefix {
                    b: *b,
                    slope: format_rational(slope),
                    intercept: format_rational(intercept),
                    weight,
                },
            }
        })
        .collect();
    serde_json::to_string_pretty(&CertWire { target, members }).expect("certificate serialization")
}

pub fn certificate_from_json(s: &str) -> Result<Certificate, CombineError> {
    let wire: CertWire =
        serde_json::from_str(s).map_err(|e| CombineError::BadCertificate(e.to_string()))?;
    let parse = |s: &str| parse_rational(s).map_err(CombineError::BadCertificate);
    let target = match wire.target {
        TargetWire::Plain { alpha } => CertificateTarget::Plain { alpha: parse(&alpha)? },
        TargetWire::Release { a, b } => CertificateTarget::Release { a: parse(&a)?, b: parse(&b)? },
    };
    let mut members = Vec::new();
    for m in wire.members {
        let (f, w) = match m {
            MemberWire::Linear { slope, intercept, weight } => (
                DelayFunction::Linear { slope: parse(&slope)?, intercept: parse(&intercept)? },
                parse(&weight)?,
            ),
            MemberWire::AffineRelease { x, r, intercept, weight } => (
                DelayFunction::AffineRelease {
                    x_coeff: parse(&x)?,
                    r_coeff: parse(&r)?,
                    intercept: parse(&intercept)?,
                },
                parse(&weight)?,
            ),
            MemberWire::CeilingPeriodic { tau, lambda, weight } => {
                if tau < 2 {
                    return Err(CombineError::BadCertificate("tau must be >= 2".into()));
                }
                (DelayFunction::CeilingPeriodic { tau, lambda }, parse(&weight)?)
            }
            MemberWire::KonigPrefix { b, slope, intercept, weight } => (
                DelayFunction::KonigPrefix {
                    b,
                    slope: parse(&slope)?,
                    intercept: parse(&intercept)?,
                },
                parse(&weight)?,
            ),
        };
        members.push((f, w));
    }
    Ok(Certificate { members, target })
}

// ---- portfolios -------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AllocatorSpec {
    Greedy,
    GreedyR,
    Cbf { tau: u64 },
    CbfR { tau: u64 },
    Ckbf { tau: u64, b: u64 },
}

impl AllocatorSpec {
    pub fn name(&self) -> String {
        match self {
            AllocatorSpec::Greedy => "greedy".into(),
            AllocatorSpec::GreedyR => "greedy-r".into(),
            AllocatorSpec::Cbf { tau } => format!("cbf{tau}"),
            AllocatorSpec::CbfR { tau } => format!("cbf-r{tau}"),
            AllocatorSpec::Ckbf { tau, b } => format!("ckbf{tau}-{b}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MemberRun {
    pub name: String,
    pub cost: Rational,
    /// Offset chosen by trial minimization, where applicable.
    pub lambda: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct CombinedOutcome {
    pub schedule: Schedule,
    pub report: CostReport,
    pub members: Vec<MemberRun>,
    pub winner: usize,
}

fn greedy_err(name: &str, e: GreedyError) -> CombineError {
    CombineError::Member { name: name.into(), error: e.to_string() }
}

fn cbf_err(name: &str, e: CbfError) -> CombineError {
    CombineError::Member { name: name.into(), error: e.to_string() }
}

/// Runs every portfolio member and returns the cheapest valid schedule,
/// ties broken by portfolio order.
pub fn combined(
    instance: &Instance,
    profile: &DeadlineProfile,
    portfolio: &[AllocatorSpec],
) -> Result<CombinedOutcome, CombineError> {
    if portfolio.is_empty() {
        return Err(CombineError::EmptyPortfolio);
    }
    let mut members = Vec::new();
    let mut best: Option<(usize, Schedule, CostReport)> = None;
    for (idx, spec) in portfolio.iter().enumerate() {
        let name = spec.name();
        let (schedule, lambda) = match spec {
            AllocatorSpec::Greedy => {
                (greedy::greedy(instance, profile).map_err(|e| greedy_err(&name, e))?.schedule, None)
            }
            AllocatorSpec::GreedyR => (
                greedy::greedy_r(instance, profile).map_err(|e| greedy_err(&name, e))?.schedule,
                None,
            ),
            AllocatorSpec::Cbf { tau } => {
                let out = cbf::cbf(instance, profile, *tau).map_err(|e| cbf_err(&name, e))?;
                (out.schedule, Some(out.lambda))
            }
            AllocatorSpec::CbfR { tau } => {
                let out = cbf::cbf_r(instance, profile, *tau).map_err(|e| cbf_err(&name, e))?;
                (out.schedule, Some(out.lambda))
            }
            AllocatorSpec::Ckbf { tau, b } => {
                let out = cbf::ckbf(instance, profile, *tau, *b).map_err(|e| cbf_err(&name, e))?;
                (out.schedule, Some(out.lambda))
            }
        };
        let report = cost(instance, &schedule).map_err(|e| CombineError::Member {
            name: name.clone(),
            error: format!("invalid schedule: {e}"),
        })?;
        members.push(MemberRun { name, cost: report.total.clone(), lambda });
        let better = match &best {
            None => true,
            Some((_, _, r)) => report.total < r.total,
        };
        if better {
            best = Some((idx, schedule, report));
        }
    }
    let (winner, schedule, report) = best.expect("portfolio nonempty");
    Ok(CombinedOutcome { schedule, report, members, winner })
}

/// Exact optimum from the oracle when the instance is small enough,
/// otherwise the per-coflow degree/release lower bound
/// sum_j w_j * max(degree(E_j), r_j + 1).
pub fn opt_lower_bound(instance: &Instance) -> (Rational, bool) {
    if let Ok(r) = oracle::opt(instance, None) {
        return (r.report.total, true);
    }
    let lb = instance
        .coflows
        .iter()
        .map(|c| {
            let d = max_degree(&c.flows).max(c.release + 1);
            &c.weight * rat_u64(d)
        })
        .fold(Rational::zero(), |a, b| a + b);
    (lb, false)
}

#[derive(Debug, Clone)]
pub struct AsymptoticReport {
    pub cost: Rational,
    pub opt_lower_bound: Rational,
    pub opt_is_exact: bool,
    pub ratio: Rational,
    /// total weight over the optimum lower bound
    pub epsilon_hat: Rational,
    /// 2 + 4/tau + epsilon_hat*(2*tau + 2)
    pub bound: Rational,
    /// whether the profile satisfied sum w_j C_j <= 2 * opt_lower_bound
    pub deadline_bound_ok: bool,
    pub holds: bool,
}

/// Runs the release-variant allocator and reports its cost against the
/// asymptotic guarantee. Callers assert `holds` only when
/// `deadline_bound_ok` is true; the optimum reference is a lower bound,
/// so both checks are conservative.
pub fn asymptotic_check(
    instance: &Instance,
    profile: &DeadlineProfile,
    tau: u64,
) -> Result<AsymptoticReport, CombineError> {
    let out = cbf::cbf_r(instance, profile, tau).map_err(|e| cbf_err("cbf-r", e))?;
    let (opt_lb, opt_is_exact) = opt_lower_bound(instance);
    let total_weight = instance.total_weight();
    let epsilon_hat = &total_weight / &opt_lb;
    let bound = rat(2, 1) + rat(4, 1) / rat_u64(tau) + &epsilon_hat * rat_u64(2 * tau + 2);
    let ratio = &out.report.total / &opt_lb;
    let deadline_bound_ok = profile.weighted_total(instance) <= rat(2, 1) * &opt_lb;
    let holds = ratio <= bound;
    Ok(AsymptoticReport {
        cost: out.report.total,
        opt_lower_bound: opt_lb,
        opt_is_exact,
        ratio,
        epsilon_hat,
        bound,
        deadline_bound_ok,
        holds,
    })
}
