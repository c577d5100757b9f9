//! Deterministic pseudo-random instance generation for benchmarks and
//! property tests. Flows are drawn uniformly over vertex pairs, weights
//! uniformly over 1..=10, so benchmark populations are reproducible from
//! the seed alone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::model::{Coflow, Flow, Instance};
use crate::rational::rat_u64;

#[derive(Debug, Clone, Copy)]
pub struct GenSpec {
    pub seed: u64,
    pub left: usize,
    pub right: usize,
    pub coflows: usize,
    pub max_flows: usize,
    pub max_mult: u64,
    pub release_max: u64,
    /// Hard cap on total edge copies; flows are trimmed to respect it.
    pub max_total_copies: Option<u64>,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            seed: 0,
            left: 3,
            right: 3,
            coflows: 3,
            max_flows: 2,
            max_mult: 2,
            release_max: 0,
            max_total_copies: None,
        }
    }
}

pub fn generate(spec: &GenSpec) -> Instance {
    assert!(spec.left > 0 && spec.right > 0 && spec.coflows > 0);
    assert!(spec.max_flows > 0 && spec.max_mult > 0);
    if let Some(cap) = spec.max_total_copies {
        assert!(cap >= spec.coflows as u64, "copy budget below one copy per coflow");
    }
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let mut budget = spec.max_total_copies.unwrap_or(u64::MAX);

    let mut coflows = Vec::with_capacity(spec.coflows);
    for c in 0..spec.coflows {
        let weight = rat_u64(rng.gen_range(1..=10));
        let release = if spec.release_max == 0 { 0 } else { rng.gen_range(0..=spec.release_max) };
        // later coflows each still need one copy out of the budget
        let reserve = (spec.coflows - c - 1) as u64;
        let n_flows = rng.gen_range(1..=spec.max_flows);
        let mut flows: Vec<Flow> = Vec::with_capacity(n_flows);
        for _ in 0..n_flows {
            let spendable = budget.saturating_sub(reserve);
            if spendable == 0 {
                break;
            }
            let mult = rng.gen_range(1..=spec.max_mult).min(spendable);
            flows.push(Flow {
                u: rng.gen_range(0..spec.left),
                v: rng.gen_range(0..spec.right),
                multiplicity: mult,
            });
            budget -= mult;
        }
        debug_assert!(!flows.is_empty(), "budget reservation keeps coflows nonempty");
        coflows.push(Coflow { weight, release, flows });
    }
    let instance =
        Instance { left_count: spec.left, right_count: spec.right, coflows };
    instance.validate_instance().expect("generated instance is well formed");
    instance
}
