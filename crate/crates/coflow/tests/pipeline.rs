//! End-to-end pipeline checks: deadline generation feeds every allocator,
//! outputs validate, and the per-coflow / weighted guarantees hold with
//! exact arithmetic.

use coflow::cbf::{build_blocks, cbf, cbf_delay_bound, cbf_r, ckbf, trial_lambdas, CbfError};
use coflow::combine::{combined, AllocatorSpec};
use coflow::deadlines::{
    check_lp_i, check_lp_r, round_deadlines, solve_lp_d, DeadlineProfile, RoundingMode,
};
use coflow::generate::{generate, GenSpec};
use coflow::greedy::{greedy, greedy_r};
use coflow::model::{cost, validate, Coflow, Flow, Instance};
use coflow::oracle;
use coflow::rational::{rat, rat_int, rat_u64, Rational};
use num_traits::Zero;

fn unit_instance() -> Instance {
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
fn block_rounding_examples() {
    let instance = Instance {
        left_count: 1,
        right_count: 2,
        coflows: vec![
            Coflow {
                weight: rat_int(1),
                release: 0,
                flows: vec![Flow { u: 0, v: 0, multiplicity: 1 }],
            },
            Coflow {
                weight: rat_int(1),
                release: 0,
                flows: vec![Flow { u: 0, v: 1, multiplicity: 1 }],
            },
        ],
    };
    // tau = 6, lambda = 0: deadlines (1, 7) round to (6, 12)
    let p = DeadlineProfile::new(&instance, vec![rat_int(1), rat_int(7)], None).unwrap();
    let st = build_blocks(&p, 6, 0).unwrap();
    assert_eq!(st.boundaries, vec![6, 12]);
    assert_eq!((st.nominal(0), st.nominal(1)), (6, 6));

    // equal rounded deadlines merge: (5.5, 6) -> one block at 6
    let p = DeadlineProfile::new(&instance, vec![rat(11, 2), rat_int(6)], None).unwrap();
    let st = build_blocks(&p, 6, 0).unwrap();
    assert_eq!(st.boundaries, vec![6]);
    assert_eq!(st.coflow_block, vec![Some(0), Some(0)]);

    // lambda = 2 lattice {2, 8, 14, ..}: deadline 7 rounds to 8
    let p = DeadlineProfile::new(&instance, vec![rat_int(7), rat_int(7)], None).unwrap();
    let st = build_blocks(&p, 6, 2).unwrap();
    assert_eq!(st.boundaries, vec![8]);

    // bad parameters are rejected
    assert!(matches!(build_blocks(&p, 1, 0), Err(CbfError::BadParam(_))));
    assert!(matches!(build_blocks(&p, 6, 1), Err(CbfError::BadParam(_))));
    assert!(matches!(build_blocks(&p, 6, 6), Err(CbfError::BadParam(_))));
    assert!(build_blocks(&p, 6, 7).is_ok());
}

#[test]
fn trial_lambda_sets() {
    assert_eq!(trial_lambdas(2), vec![0, 3]);
    assert_eq!(trial_lambdas(3), vec![0, 2, 4]);
    assert_eq!(trial_lambdas(6), vec![0, 2, 3, 4, 5, 7]);
    assert_eq!(trial_lambdas(6).len(), 6, "tau trials per tau");
}

#[test]
fn single_edge_cbf_finishes_immediately() {
    let instance = unit_instance();
    let profile = DeadlineProfile::new(&instance, vec![rat_int(1)], None).unwrap();
    let out = cbf(&instance, &profile, 2).unwrap();
    assert_eq!(out.report.completion, vec![1]);
    assert_eq!(out.report.total, rat_int(1));
    // weak per-coflow form: (tau+2)/tau * C + tau + 2 = 6
    assert!(rat_u64(out.report.completion[0]) <= rat_int(6));
    // already integral: no unit rounding iterations, no violation
    for audit in &out.audits {
        assert_eq!(audit.max_violation, 0);
        assert!(audit.iterations.is_empty());
    }
}

#[test]
fn fixture_rounding_respects_degree_slack() {
    let (instance, profile) = oracle::a1_fixture();
    let check = check_lp_i(&instance, &profile).unwrap();
    assert!(check.feasible, "the gadget profile is fractionally feasible");
    let out = cbf(&instance, &profile, 2).unwrap();
    assert!(validate(&instance, &out.schedule).unwrap().is_empty());
    for audit in &out.audits {
        assert!(audit.max_violation <= 2, "degree constraints exceeded by more than 2");
        for it in &audit.iterations {
            assert!(it.fixed >= 1);
            assert!(it.rows <= it.free_vars);
            assert!(it.dropped.iter().all(|&d| d <= 3));
        }
    }
}

#[test]
fn cbf_weighted_bound_is_checked_internally() {
    // the averaged weighted guarantee is asserted inside cbf(); a
    // run that returns Ok has passed it
    let (instance, profile) = oracle::a1_fixture();
    for tau in 2..=8 {
        let out = cbf(&instance, &profile, tau).unwrap();
        let rhs: Rational = instance
            .coflows
            .iter()
            .zip(&profile.deadlines)
            .map(|(c, d)| &c.weight * coflow::cbf::cbf_weighted_bound(tau, d))
            .fold(Rational::zero(), |a, b| a + b);
        assert!(out.report.total <= rhs);
    }
}

#[test]
fn deadline_multiples_of_tau_get_tight_bound() {
    // deadlines already multiples of tau: lambda = 0 trial must finish by
    // (tau+2)/tau * C_j exactly
    let tau = 3;
    let instance = Instance {
        left_count: 2,
        right_count: 2,
        coflows: vec![
            Coflow {
                weight: rat_int(2),
                release: 0,
                flows: vec![Flow { u: 0, v: 0, multiplicity: 3 }],
            },
            Coflow {
                weight: rat_int(1),
                release: 0,
                flows: vec![Flow { u: 1, v: 1, multiplicity: 6 }],
            },
        ],
    };
    let profile =
        DeadlineProfile::new(&instance, vec![rat_int(3), rat_int(6)], None).unwrap();
    assert!(check_lp_i(&instance, &profile).unwrap().feasible);
    let out = cbf(&instance, &profile, tau).unwrap();
    for (j, d) in profile.deadlines.iter().enumerate() {
        let tight = rat_u64(tau + 2) / rat_u64(tau) * d;
        assert!(
            rat_u64(out.report.completion[j]) <= tight,
            "multiple-of-tau deadline exceeded the tight bound"
        );
        assert_eq!(cbf_delay_bound(tau, 0, d), tight);
    }
}

#[test]
fn release_variant_example() {
    // one coflow, release 1, deadline 2, tau = 2: release rounds to 2,
    // deadline to 6; finish stays within (tau+2)/tau*C + 2tau + 4 = 12
    let instance = Instance {
        left_count: 1,
        right_count: 1,
        coflows: vec![Coflow {
            weight: rat_int(1),
            release: 1,
            flows: vec![Flow { u: 0, v: 0, multiplicity: 1 }],
        }],
    };
    let profile = DeadlineProfile::new(&instance, vec![rat_int(2)], None).unwrap();
    assert!(check_lp_r(&instance, &profile).unwrap().feasible);
    let out = cbf_r(&instance, &profile, 2).unwrap();
    assert!(validate(&instance, &out.schedule).unwrap().is_empty());
    assert!(out.report.completion[0] <= 12);
    assert!(out.report.completion[0] >= 2, "release forbids slot 1");
}

#[test]
fn ckbf_prefix_takes_early_coflows() {
    // deadline below b+1 = 2 forms a matching in slot 1
    let instance = Instance {
        left_count: 2,
        right_count: 2,
        coflows: vec![
            Coflow {
                weight: rat_int(5),
                release: 0,
                flows: vec![
                    Flow { u: 0, v: 0, multiplicity: 1 },
                    Flow { u: 1, v: 1, multiplicity: 1 },
                ],
            },
            Coflow {
                weight: rat_int(1),
                release: 0,
                flows: vec![Flow { u: 0, v: 1, multiplicity: 1 }],
            },
        ],
    };
    let profile =
        DeadlineProfile::new(&instance, vec![rat(3, 2), rat_int(2)], None).unwrap();
    let out = ckbf(&instance, &profile, 6, 1).unwrap();
    assert_eq!(out.prefix_coflows, vec![0]);
    assert_eq!(out.report.completion[0], 1, "prefix coflow fits slot 1");
    assert!(validate(&instance, &out.schedule).unwrap().is_empty());
}

#[test]
fn ckbf_without_early_coflows_reduces_to_shifted_cbf() {
    let instance = unit_instance();
    let profile = DeadlineProfile::new(&instance, vec![rat_int(4)], None).unwrap();
    let out = ckbf(&instance, &profile, 2, 1).unwrap();
    assert!(out.prefix_coflows.is_empty());
    let plain = cbf(&instance, &profile, 2).unwrap();
    assert_eq!(out.report.completion[0], plain.report.completion[0] + 1);
}

#[test]
fn a1_block_lp_admits_a_half_integral_vertex() {
    // the solver's deterministic vertex for the gadget happens to be
    // half-integral, witnessing that a feasible {0, 1/2, 1} point exists
    let (instance, profile) = oracle::a1_fixture();
    let check = check_lp_i(&instance, &profile).unwrap();
    let vertex = check.vertex.expect("feasible");
    assert!(vertex
        .values
        .iter()
        .all(|x| { x.denom() == &num_bigint::BigInt::from(1) || x.denom() == &num_bigint::BigInt::from(2) }));
}

#[test]
fn completions_dominate_per_coflow_degree() {
    // without releases, a coflow can never finish before its own maximum
    // degree
    for seed in 60..80u64 {
        let instance = generate(&GenSpec {
            seed,
            left: 3,
            right: 3,
            coflows: 3,
            max_flows: 2,
            max_mult: 3,
            release_max: 0,
            max_total_copies: Some(8),
        });
        let frac = solve_lp_d(&instance).unwrap();
        let profile =
            round_deadlines(&instance, &frac, RoundingMode::CandidateMin(16)).unwrap();
        let g = greedy(&instance, &profile).unwrap();
        let report = cost(&instance, &g.schedule).unwrap();
        for (j, c) in instance.coflows.iter().enumerate() {
            let degree = coflow::model::max_degree(&c.flows);
            assert!(report.completion[j] >= degree, "completion below coflow degree");
        }
    }
}

#[test]
fn infeasible_profile_is_a_structural_error() {
    // four parallel copies cannot fit the rounded block of size 2
    let instance = Instance {
        left_count: 1,
        right_count: 1,
        coflows: vec![Coflow {
            weight: rat_int(1),
            release: 0,
            flows: vec![Flow { u: 0, v: 0, multiplicity: 4 }],
        }],
    };
    let profile = DeadlineProfile::new(&instance, vec![rat_int(1)], None).unwrap();
    assert!(!check_lp_i(&instance, &profile).unwrap().feasible);
    assert!(matches!(cbf(&instance, &profile, 2), Err(CbfError::Structural(_))));
}

#[test]
fn ckbf_rejects_overloaded_prefixes() {
    // both edges share a vertex, so the prefix degree 2 exceeds b = 1
    let instance = Instance {
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
    let profile = DeadlineProfile::new(&instance, vec![rat(3, 2)], None).unwrap();
    assert!(matches!(ckbf(&instance, &profile, 6, 1), Err(CbfError::Structural(_))));
}

#[test]
fn iterated_round_direct_api() {
    use coflow::cbf::{iterated_round, schedule_blocks};
    // single edge, one block: integral at the first vertex, zero
    // violation, no unit iterations needed
    let instance = unit_instance();
    let profile = DeadlineProfile::new(&instance, vec![rat_int(1)], None).unwrap();
    let structure = build_blocks(&profile, 2, 0).unwrap();
    let (assignment, audit) = iterated_round(&instance, &structure, None).unwrap();
    assert_eq!(assignment.violation, 0);
    assert_eq!(assignment.counts, vec![vec![1]]);
    assert!(audit.iterations.is_empty());
    assert_eq!(audit.merged_fixed, 1);
    let schedule = schedule_blocks(&assignment, 0);
    assert_eq!(cost(&instance, &schedule).unwrap().total, rat_int(1));
    // shifted layout respects the offset
    let shifted = schedule_blocks(&assignment, 3);
    assert_eq!(cost(&instance, &shifted).unwrap().completion, vec![4]);
}

#[test]
fn combined_returns_cheapest_member() {
    let (instance, profile) = oracle::a1_fixture();
    let out = combined(
        &instance,
        &profile,
        &[AllocatorSpec::Greedy, AllocatorSpec::Cbf { tau: 6 }],
    )
    .unwrap();
    let min = out.members.iter().map(|m| m.cost.clone()).min().unwrap();
    assert_eq!(out.report.total, min);
    assert!(out.members.iter().any(|m| m.cost == out.report.total));
}

#[test]
fn random_release_free_pipeline_obeys_all_bounds() {
    for seed in 0..25u64 {
        let instance = generate(&GenSpec {
            seed,
            left: 3,
            right: 3,
            coflows: 3,
            max_flows: 2,
            max_mult: 2,
            release_max: 0,
            max_total_copies: Some(7),
        });
        let frac = solve_lp_d(&instance).unwrap();
        let profile =
            round_deadlines(&instance, &frac, RoundingMode::SeededRandom(seed ^ 0xabcd)).unwrap();
        // rounded profiles always pass the block feasibility LP
        assert!(check_lp_i(&instance, &profile).unwrap().feasible, "seed {seed}");

        let g = greedy(&instance, &profile).unwrap();
        assert!(validate(&instance, &g.schedule).unwrap().is_empty());
        for (j, d) in profile.deadlines.iter().enumerate() {
            assert!(rat_u64(g.trace.finish[j]) <= rat_int(2) * d - rat_int(1));
        }

        for tau in [2u64, 6] {
            let out = cbf(&instance, &profile, tau).unwrap();
            assert!(validate(&instance, &out.schedule).unwrap().is_empty());
        }
        let k = ckbf(&instance, &profile, 6, 1).unwrap();
        assert!(validate(&instance, &k.schedule).unwrap().is_empty());
    }
}

#[test]
fn random_release_pipeline_obeys_all_bounds() {
    for seed in 0..25u64 {
        let instance = generate(&GenSpec {
            seed: seed.wrapping_add(1000),
            left: 3,
            right: 3,
            coflows: 3,
            max_flows: 2,
            max_mult: 2,
            release_max: 3,
            max_total_copies: Some(7),
        });
        let frac = solve_lp_d(&instance).unwrap();
        let profile =
            round_deadlines(&instance, &frac, RoundingMode::SeededRandom(seed ^ 0x77)).unwrap();
        assert!(check_lp_r(&instance, &profile).unwrap().feasible, "seed {seed}");

        let g = greedy_r(&instance, &profile).unwrap();
        assert!(validate(&instance, &g.schedule).unwrap().is_empty());
        for (j, d) in profile.deadlines.iter().enumerate() {
            let bound = rat_u64(instance.coflows[j].release) + rat_int(2) * d - rat_int(1);
            assert!(rat_u64(g.trace.finish[j]) <= bound);
        }

        let out = cbf_r(&instance, &profile, 4).unwrap();
        assert!(validate(&instance, &out.schedule).unwrap().is_empty());
    }
}

#[test]
fn candidate_min_never_beats_seeded_average() {
    // the deterministic minimizer evaluates every curve breakpoint plus
    // the quantile grid, so it stays at or below the seeded draws' mean
    for i in 0..10u64 {
        let instance = generate(&GenSpec {
            seed: 90 + i,
            left: 3,
            right: 3,
            coflows: 3,
            max_flows: 2,
            max_mult: 2,
            release_max: 0,
            max_total_copies: Some(8),
        });
        let frac = solve_lp_d(&instance).unwrap();
        let best = round_deadlines(&instance, &frac, RoundingMode::CandidateMin(64))
            .unwrap()
            .weighted_total(&instance);
        let mut sum = Rational::zero();
        let n = 200u64;
        for s in 0..n {
            let p =
                round_deadlines(&instance, &frac, RoundingMode::SeededRandom(i * 1000 + s))
                    .unwrap();
            sum += p.weighted_total(&instance);
        }
        let mean = sum / rat_u64(n);
        assert!(best <= mean, "instance {i}: candidate-min {best} above seeded mean");
    }
}

#[test]
fn release_variant_still_works_without_releases() {
    // with all releases zero the release variant stays correct; its
    // weighted guarantee is strictly weaker than the plain one
    for seed in 30..40u64 {
        let instance = generate(&GenSpec {
            seed,
            left: 3,
            right: 3,
            coflows: 3,
            max_flows: 2,
            max_mult: 2,
            release_max: 0,
            max_total_copies: Some(8),
        });
        let frac = solve_lp_d(&instance).unwrap();
        let profile =
            round_deadlines(&instance, &frac, RoundingMode::CandidateMin(16)).unwrap();
        let tau = 4;
        let plain = cbf(&instance, &profile, tau).unwrap();
        let release = cbf_r(&instance, &profile, tau).unwrap();
        assert!(validate(&instance, &release.schedule).unwrap().is_empty());
        let plain_rhs: Rational = instance
            .coflows
            .iter()
            .zip(&profile.deadlines)
            .map(|(c, d)| &c.weight * coflow::cbf::cbf_weighted_bound(tau, d))
            .fold(Rational::zero(), |a, b| a + b);
        let release_rhs: Rational = instance
            .coflows
            .iter()
            .zip(&profile.deadlines)
            .map(|(c, d)| &c.weight * coflow::cbf::cbf_release_weighted_bound(tau, d))
            .fold(Rational::zero(), |a, b| a + b);
        assert!(plain.report.total <= plain_rhs);
        assert!(release.report.total <= release_rhs);
        assert!(plain_rhs < release_rhs, "release guarantee is the weaker one");
    }
}

#[test]
fn lp_d_cost_never_exceeds_oracle_opt() {
    for seed in 40..55u64 {
        let instance = generate(&GenSpec {
            seed,
            left: 2,
            right: 2,
            coflows: 2,
            max_flows: 2,
            max_mult: 2,
            release_max: 1,
            max_total_copies: Some(5),
        });
        let frac = solve_lp_d(&instance).unwrap();
        let opt = oracle::opt(&instance, None).unwrap();
        assert!(frac.lp_cost <= opt.report.total, "relaxation above optimum, seed {seed}");
        // and the optimum never beats any valid allocator output
        let profile =
            round_deadlines(&instance, &frac, RoundingMode::CandidateMin(16)).unwrap();
        let g = greedy_r(&instance, &profile).unwrap();
        let c = cost(&instance, &g.schedule).unwrap();
        assert!(c.total >= opt.report.total);
    }
}

#[test]
fn two_same_pair_coflows_lp_matches_oracle_example() {
    // LP D cost <= oracle OPT = 3 for two unit coflows on one pair
    let instance = Instance {
        left_count: 1,
        right_count: 1,
        coflows: vec![
            Coflow {
                weight: rat_int(1),
                release: 0,
                flows: vec![Flow { u: 0, v: 0, multiplicity: 1 }],
            },
            Coflow {
                weight: rat_int(1),
                release: 0,
                flows: vec![Flow { u: 0, v: 0, multiplicity: 1 }],
            },
        ],
    };
    let frac = solve_lp_d(&instance).unwrap();
    let opt = oracle::opt(&instance, None).unwrap();
    assert_eq!(opt.report.total, rat_int(3));
    assert!(frac.lp_cost <= rat_int(3));
}

#[test]
fn a1_fixture_lp_cost_below_opt() {
    let (instance, _) = oracle::a1_fixture();
    let frac = solve_lp_d(&instance).unwrap();
    let opt = oracle::opt_with_limit(&instance, None, 16).unwrap();
    assert!(frac.lp_cost <= opt.report.total);
}
