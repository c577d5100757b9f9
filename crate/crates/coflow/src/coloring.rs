//! Constructive König decomposition: a bipartite multigraph of maximum
//! degree Δ splits into exactly Δ matchings.
//!
//! Works on the distinct-edge graph with multiplicities as weights: the
//! graph is padded to Δ-regular form and perfect matchings are peeled off
//! with a bottleneck count, so runs of identical matchings come out
//! run-length encoded. Each peel zeroes at least one weighted edge, so the
//! number of rounds is polynomial in the number of distinct edges and
//! vertices, independent of the multiplicities themselves.

use std::collections::BTreeMap;

/// One color class repeated `count` times: `items` indexes into the input
/// edge list and forms a matching.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchingClass {
    pub items: Vec<usize>,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchingDecomposition {
    pub classes: Vec<MatchingClass>,
    /// Maximum degree of the input; equals the total matching count.
    pub degree: u64,
}

impl MatchingDecomposition {
    /// Total number of matchings, counting repetitions.
    pub fn len(&self) -> u64 {
        self.classes.iter().map(|c| c.count).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Item multiset restored from the classes: index -> total count.
    pub fn flatten(&self) -> BTreeMap<usize, u64> {
        let mut out = BTreeMap::new();
        for class in &self.classes {
            for &item in &class.items {
                *out.entry(item).or_insert(0) += class.count;
            }
        }
        out
    }

    /// Expands to one item list per matching; only sensible for small Δ.
    pub fn expand(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for class in &self.classes {
            for _ in 0..class.count {
                out.push(class.items.clone());
            }
        }
        out
    }
}

struct Cell {
    u: usize,
    v: usize,
    value: u64,
    /// Input item index for real cells; padding cells have none.
    item: Option<usize>,
}

/// Decomposes a bipartite edge multiset, given as (left, right,
/// multiplicity) items, into exactly Δ matchings. Items with equal
/// endpoints stay distinct so callers can track ownership.
pub fn decompose(items: &[(usize, usize, u64)]) -> MatchingDecomposition {
    let live: Vec<(usize, &(usize, usize, u64))> = items
        .iter()
        .enumerate()
        .filter(|(_, it)| it.2 > 0)
        .collect();
    if live.is_empty() {
        return MatchingDecomposition { classes: Vec::new(), degree: 0 };
    }

    let nl = live.iter().map(|(_, it)| it.0 + 1).max().unwrap();
    let nr = live.iter().map(|(_, it)| it.1 + 1).max().unwrap();
    let n = nl.max(nr);

    let mut left_deg = vec![0u64; n];
    let mut right_deg = vec![0u64; n];
    let mut cells: Vec<Cell> = Vec::with_capacity(live.len() + 2 * n);
    for (idx, &(u, v, m)) in &live {
        left_deg[u] += m;
        right_deg[v] += m;
        cells.push(Cell { u, v, value: m, item: Some(*idx) });
    }
    let degree = left_deg.iter().chain(right_deg.iter()).copied().max().unwrap();

    // Pad to a degree-regular square multigraph. Padding cells may run in
    // parallel to real ones; they are dropped from the output.
    let mut lu = 0;
    let mut rv = 0;
    let mut ldef: Vec<u64> = left_deg.iter().map(|d| degree - d).collect();
    let mut rdef: Vec<u64> = right_deg.iter().map(|d| degree - d).collect();
    while lu < n && rv < n {
        if ldef[lu] == 0 {
            lu += 1;
            continue;
        }
        if rdef[rv] == 0 {
            rv += 1;
            continue;
        }
        let m = ldef[lu].min(rdef[rv]);
        cells.push(Cell { u: lu, v: rv, value: m, item: None });
        ldef[lu] -= m;
        rdef[rv] -= m;
    }
    debug_assert!(ldef.iter().all(|&d| d == 0) && rdef.iter().all(|&d| d == 0));

    let mut classes = Vec::new();
    let mut remaining = degree;
    while remaining > 0 {
        let matched = perfect_matching(n, &cells);
        let count = matched
            .iter()
            .map(|&c| cells[c].value)
            .min()
            .expect("regular graph always has a perfect matching")
            .min(remaining);
        debug_assert!(count > 0);
        let mut class_items = Vec::new();
        for &c in &matched {
            cells[c].value -= count;
            if let Some(item) = cells[c].item {
                class_items.push(item);
            }
        }
        if !class_items.is_empty() {
            classes.push(MatchingClass { items: class_items, count });
        }
        remaining -= count;
    }

    MatchingDecomposition { classes, degree }
}

/// Perfect matching on the support of a degree-regular cell multigraph via
/// augmenting paths. Regularity guarantees existence (Hall's condition).
fn perfect_matching(n: usize, cells: &[Cell]) -> Vec<usize> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (c, cell) in cells.iter().enumerate() {
        if cell.value > 0 {
            adj[cell.u].push(c);
        }
    }
    let mut match_left: Vec<Option<usize>> = vec![None; n]; // left -> cell
    let mut owner: Vec<Option<usize>> = vec![None; n]; // right -> left
    for u in 0..n {
        let mut visited = vec![false; n];
        let ok = augment(u, &adj, cells, &mut visited, &mut match_left, &mut owner);
        assert!(ok, "support of a regular multigraph lost its perfect matching");
    }
    match_left.into_iter().map(|c| c.unwrap()).collect()
}

fn augment(
    u: usize,
    adj: &[Vec<usize>],
    cells: &[Cell],
    visited: &mut [bool],
    match_left: &mut [Option<usize>],
    owner: &mut [Option<usize>],
) -> bool {
    for &c in &adj[u] {
        let v = cells[c].v;
        if visited[v] {
            continue;
        }
        visited[v] = true;
        let free = match owner[v] {
            None => true,
            Some(w) => augment(w, adj, cells, visited, match_left, owner),
        };
        if free {
            match_left[u] = Some(c);
            owner[v] = Some(u);
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn check(items: &[(usize, usize, u64)]) -> MatchingDecomposition {
        let d = decompose(items);
        // every class is a matching
        for class in &d.classes {
            let mut us: Vec<usize> = class.items.iter().map(|&i| items[i].0).collect();
            let mut vs: Vec<usize> = class.items.iter().map(|&i| items[i].1).collect();
            us.sort_unstable();
            vs.sort_unstable();
            us.dedup();
            vs.dedup();
            assert_eq!(us.len(), class.items.len(), "left vertex repeated in a class");
            assert_eq!(vs.len(), class.items.len(), "right vertex repeated in a class");
            assert!(class.count > 0);
        }
        // round trip and exact class count
        let flat = d.flatten();
        for (i, &(_, _, m)) in items.iter().enumerate() {
            assert_eq!(flat.get(&i).copied().unwrap_or(0), m, "item {i} multiplicity");
        }
        let degree = crate::model::max_degree(
            &items
                .iter()
                .map(|&(u, v, m)| crate::model::Flow { u, v, multiplicity: m })
                .collect::<Vec<_>>(),
        );
        assert_eq!(d.degree, degree);
        assert_eq!(d.len(), degree, "matching count must equal max degree");
        d
    }

    #[test]
    fn single_edge_gives_one_matching() {
        let d = check(&[(0, 0, 1)]);
        assert_eq!(d.classes.len(), 1);
    }

    #[test]
    fn k22_gives_two_perfect_matchings() {
        let d = check(&[(0, 0, 1), (0, 1, 1), (1, 0, 1), (1, 1, 1)]);
        assert_eq!(d.len(), 2);
        for class in &d.classes {
            assert_eq!(class.items.len(), 2, "K22 color classes are perfect");
        }
    }

    #[test]
    fn multiplicities_spread_over_classes() {
        // {(0,0) x3, (1,1) x2}: three matchings, (0,0) in all three,
        // (1,1) in two of them.
        let d = check(&[(0, 0, 3), (1, 1, 2)]);
        let flat = d.flatten();
        assert_eq!(flat[&0], 3);
        assert_eq!(flat[&1], 2);
        assert_eq!(d.len(), 3);
    }

    #[test]
    fn empty_input_decomposes_trivially() {
        let d = decompose(&[]);
        assert_eq!(d.degree, 0);
        assert!(d.is_empty());
    }

    #[test]
    fn parallel_items_keep_their_identity() {
        // same endpoints from "different coflows"
        let d = check(&[(0, 0, 2), (0, 0, 3)]);
        assert_eq!(d.len(), 5);
    }

    #[test]
    fn random_multigraphs_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for round in 0..120 {
            let nl = rng.gen_range(1..=5);
            let nr = rng.gen_range(1..=5);
            let edges = rng.gen_range(1..=9);
            let max_mult: u64 = if round % 3 == 0 { 1_000_000 } else { 6 };
            let items: Vec<(usize, usize, u64)> = (0..edges)
                .map(|_| {
                    (
                        rng.gen_range(0..nl),
                        rng.gen_range(0..nr),
                        rng.gen_range(1..=max_mult),
                    )
                })
                .collect();
            check(&items);
        }
    }

    #[test]
    fn deterministic_output() {
        let items = [(0, 1, 4), (1, 0, 2), (1, 1, 3), (0, 0, 1)];
        assert_eq!(decompose(&items), decompose(&items));
    }
}
