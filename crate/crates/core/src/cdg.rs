//! Clustering difference graphs and item exchanges.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Clustering;

/// Item `item` moves from cluster `from` to cluster `to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub item: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExchangeKind {
    Path,
    Cycle,
}

/// A walk in a CDG: consecutive arcs chain head to tail.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exchange {
    pub kind: ExchangeKind,
    pub arcs: Vec<Arc>,
}

impl Exchange {
    pub fn len(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    /// Checks chaining, closure and that no item repeats.
    pub fn validate(&self) -> Result<()> {
        for w in self.arcs.windows(2) {
            if w[0].to != w[1].from {
                return Err(Error::InvalidClustering(format!(
                    "exchange arcs for items {} and {} do not chain",
                    w[0].item, w[1].item
                )));
            }
        }
        let mut items: Vec<usize> = self.arcs.iter().map(|a| a.item).collect();
        items.sort_unstable();
        if items.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidClustering("exchange moves an item twice".into()));
        }
        if let (Some(first), Some(last)) = (self.arcs.first(), self.arcs.last()) {
            let closed = first.from == last.to;
            if closed != (self.kind == ExchangeKind::Cycle) {
                return Err(Error::InvalidClustering(format!(
                    "exchange marked {:?} but walk is {}",
                    self.kind,
                    if closed { "closed" } else { "open" }
                )));
            }
        }
        Ok(())
    }
}

/// Clustering difference graph on `k` nodes. Arcs are kept sorted by item.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cdg {
    k: usize,
    arcs: Vec<Arc>,
}

impl Cdg {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    /// Non-isolated nodes in increasing order.
    pub fn nodes(&self) -> Vec<usize> {
        let mut seen = vec![false; self.k];
        for a in &self.arcs {
            seen[a.from] = true;
            seen[a.to] = true;
        }
        (0..self.k).filter(|&i| seen[i]).collect()
    }

    fn degrees(&self) -> (Vec<usize>, Vec<usize>) {
        let mut out = vec![0; self.k];
        let mut inn = vec![0; self.k];
        for a in &self.arcs {
            out[a.from] += 1;
            inn[a.to] += 1;
        }
        (out, inn)
    }

    fn weakly_connected(&self) -> bool {
        let nodes = self.nodes();
        let Some(&root) = nodes.first() else {
            return true;
        };
        let mut parent: Vec<usize> = (0..self.k).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for a in &self.arcs {
            let (ra, rb) = (find(&mut parent, a.from), find(&mut parent, a.to));
            parent[ra] = rb;
        }
        let r = find(&mut parent, root);
        nodes.iter().all(|&v| find(&mut parent, v) == r)
    }
}

pub fn build_cdg(c: &Clustering, c2: &Clustering) -> Result<Cdg> {
    if c.len() != c2.len() || c.k() != c2.k() {
        return Err(Error::Incompatible(format!(
            "clusterings differ in size: n = {} vs {}, k = {} vs {}",
            c.len(),
            c2.len(),
            c.k(),
            c2.k()
        )));
    }
    let arcs = (0..c.len())
        .filter(|&j| c.cluster_of(j) != c2.cluster_of(j))
        .map(|j| Arc {
            from: c.cluster_of(j),
            to: c2.cluster_of(j),
            item: j,
        })
        .collect();
    Ok(Cdg { k: c.k(), arcs })
}

/// Splits `g` into an optional path and arc-disjoint simple cycles.
///
/// The path runs from the node that loses an item to the node that gains
/// one, following the lowest-item unused arc at each node; loops closed
/// along the way are split off as cycles. Remaining arcs are peeled into
/// cycles starting from the lowest node with an unused arc.
pub fn decompose(g: &Cdg) -> Result<(Option<Exchange>, Vec<Exchange>)> {
    let (out, inn) = g.degrees();
    let mut sources = Vec::new();
    let mut sinks = Vec::new();
    for i in 0..g.k {
        match out[i] as isize - inn[i] as isize {
            0 => {}
            1 => sources.push(i),
            -1 => sinks.push(i),
            d => {
                return Err(Error::Precondition(format!(
                    "cluster {i} has degree imbalance {d}; expected at most one item"
                )))
            }
        }
    }
    if sources.len() > 1 || sources.len() != sinks.len() {
        return Err(Error::Precondition(format!(
            "CDG has {} odd-degree nodes; expected 0 or 2",
            sources.len() + sinks.len()
        )));
    }

    // adjacency: per node, arc indices in increasing item order
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); g.k];
    for (idx, a) in g.arcs.iter().enumerate() {
        adj[a.from].push(idx);
    }
    let mut next = vec![0usize; g.k];
    let take = |next: &mut Vec<usize>, node: usize| -> Option<usize> {
        let idx = *adj[node].get(next[node])?;
        next[node] += 1;
        Some(idx)
    };

    let mut cycles = Vec::new();
    let path = if let (Some(&src), Some(&sink)) = (sources.first(), sinks.first()) {
        let mut stack: Vec<usize> = Vec::new();
        let mut node = src;
        while node != sink || stack.is_empty() {
            let idx = take(&mut next, node).ok_or_else(|| {
                Error::Internal(format!("path walk stuck at cluster {node}"))
            })?;
            stack.push(idx);
            node = g.arcs[idx].to;
            split_loop(&g.arcs, &mut stack, node, src, &mut cycles);
            if node == sink {
                break;
            }
        }
        Some(Exchange {
            kind: ExchangeKind::Path,
            arcs: stack.iter().map(|&i| g.arcs[i]).collect(),
        })
    } else {
        None
    };

    while let Some(start) = (0..g.k).find(|&v| next[v] < adj[v].len()) {
        let mut stack: Vec<usize> = Vec::new();
        let mut node = start;
        loop {
            let idx = take(&mut next, node).ok_or_else(|| {
                Error::Internal(format!("cycle walk stuck at cluster {node}"))
            })?;
            stack.push(idx);
            node = g.arcs[idx].to;
            split_loop(&g.arcs, &mut stack, node, start, &mut cycles);
            if stack.is_empty() {
                break;
            }
        }
    }
    Ok((path, cycles))
}

/// If the walk in `stack` just returned to a node it visited before, moves
/// that loop into `cycles`. `origin` is where the walk started.
fn split_loop(
    arcs: &[Arc],
    stack: &mut Vec<usize>,
    node: usize,
    origin: usize,
    cycles: &mut Vec<Exchange>,
) {
    let cut = if node == origin {
        Some(0)
    } else {
        stack.iter().position(|&i| arcs[i].from == node)
    };
    if let Some(cut) = cut {
        let loop_arcs: Vec<Arc> = stack.drain(cut..).map(|i| arcs[i]).collect();
        cycles.push(Exchange {
            kind: ExchangeKind::Cycle,
            arcs: loop_arcs,
        });
    }
}

pub fn apply_exchange(c: &Clustering, e: &Exchange) -> Result<Clustering> {
    for a in &e.arcs {
        if a.item >= c.len() || a.to >= c.k() {
            return Err(Error::InvalidClustering(format!(
                "arc ({}, {}, {}) out of range",
                a.from, a.to, a.item
            )));
        }
        if c.cluster_of(a.item) != a.from {
            return Err(Error::InvalidClustering(format!(
                "item {} is in cluster {}, not {}",
                a.item,
                c.cluster_of(a.item),
                a.from
            )));
        }
    }
    let mut out = c.clone();
    for a in &e.arcs {
        out.reassign(a.item, a.to);
    }
    Ok(out)
}

/// Whether `c` and `c2` differ by exactly one path or one cycle.
pub fn is_single_exchange(c: &Clustering, c2: &Clustering) -> bool {
    let Ok(g) = build_cdg(c, c2) else {
        return false;
    };
    if g.is_empty() {
        return false;
    }
    let (out, inn) = g.degrees();
    if out.iter().chain(&inn).any(|&d| d > 1) {
        return false;
    }
    let sources = (0..g.k).filter(|&i| out[i] > inn[i]).count();
    let sinks = (0..g.k).filter(|&i| inn[i] > out[i]).count();
    g.weakly_connected() && sources == sinks && sources <= 1
}

/// The single exchange turning `c` into `c2`, if they differ by one.
pub fn single_exchange(c: &Clustering, c2: &Clustering) -> Option<Exchange> {
    if !is_single_exchange(c, c2) {
        return None;
    }
    let g = build_cdg(c, c2).ok()?;
    let (path, mut cycles) = decompose(&g).ok()?;
    match (path, cycles.len()) {
        (Some(p), 0) => Some(p),
        (None, 1) => cycles.pop(),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cl(a: &[usize], k: usize) -> Clustering {
        Clustering::new(a.to_vec(), k).unwrap()
    }

    fn covers(g: &Cdg, path: &Option<Exchange>, cycles: &[Exchange]) -> bool {
        let mut got: Vec<Arc> = path
            .iter()
            .chain(cycles)
            .flat_map(|e| e.arcs.iter().copied())
            .collect();
        got.sort();
        let mut want = g.arcs().to_vec();
        want.sort();
        got == want
    }

    #[test]
    fn build_examples() {
        let c = cl(&[0, 0, 1, 1], 2);
        assert!(build_cdg(&c, &c).unwrap().is_empty());
        let swapped = cl(&[1, 0, 0, 1], 2);
        let g = build_cdg(&c, &swapped).unwrap();
        assert_eq!(
            g.arcs(),
            &[
                Arc { from: 0, to: 1, item: 0 },
                Arc { from: 1, to: 0, item: 2 }
            ]
        );
        assert!(build_cdg(&c, &cl(&[0, 0, 1], 2)).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = cl(&(0..8).map(|_| rng.gen_range(0..3)).collect::<Vec<_>>(), 3);
        let b = cl(&(0..8).map(|_| rng.gen_range(0..3)).collect::<Vec<_>>(), 3);
        let g = build_cdg(&a, &b).unwrap();
        for j in 0..8 {
            let arc = g.arcs().iter().find(|x| x.item == j);
            if a.cluster_of(j) == b.cluster_of(j) {
                assert!(arc.is_none());
            } else {
                let arc = arc.unwrap();
                assert_eq!((arc.from, arc.to), (a.cluster_of(j), b.cluster_of(j)));
            }
        }
    }

    #[test]
    fn decompose_examples() {
        let c = cl(&[0, 0, 1, 1], 2);
        let g = build_cdg(&c, &cl(&[1, 0, 0, 1], 2)).unwrap();
        let (path, cycles) = decompose(&g).unwrap();
        assert!(path.is_none());
        assert_eq!(cycles.len(), 1);
        assert_eq!(cycles[0].kind, ExchangeKind::Cycle);

        let g = build_cdg(&c, &cl(&[1, 0, 1, 1], 2)).unwrap();
        let (path, cycles) = decompose(&g).unwrap();
        assert_eq!(path.unwrap().arcs, vec![Arc { from: 0, to: 1, item: 0 }]);
        assert!(cycles.is_empty());

        // three items leave cluster 0 for cluster 1
        let g = build_cdg(&cl(&[0, 0, 0], 2), &cl(&[1, 1, 1], 2)).unwrap();
        assert!(matches!(decompose(&g), Err(Error::Precondition(_))));
    }

    #[test]
    fn path_with_loop_is_split() {
        // 0 -> 1 -> 2 -> 1 -> 3 : loop 1 -> 2 -> 1 becomes a cycle
        let before = cl(&[0, 1, 2, 1], 4);
        let after = cl(&[1, 2, 1, 3], 4);
        let g = build_cdg(&before, &after).unwrap();
        let (path, cycles) = decompose(&g).unwrap();
        let path = path.unwrap();
        path.validate().unwrap();
        let ends = (path.arcs[0].from, path.arcs.last().unwrap().to);
        assert_eq!(ends, (0, 3));
        for c in &cycles {
            c.validate().unwrap();
        }
        assert!(covers(&g, &Some(path), &cycles));
    }

    #[test]
    fn apply_examples() {
        let c = cl(&[0, 0, 1, 1], 2);
        let empty = Exchange { kind: ExchangeKind::Cycle, arcs: vec![] };
        assert_eq!(apply_exchange(&c, &empty).unwrap(), c);

        let swap = Exchange {
            kind: ExchangeKind::Cycle,
            arcs: vec![Arc { from: 0, to: 1, item: 0 }, Arc { from: 1, to: 0, item: 2 }],
        };
        let out = apply_exchange(&c, &swap).unwrap();
        assert_eq!(out.shape(), c.shape());
        assert_eq!(out.assignment(), &[1, 0, 0, 1]);

        let c = cl(&[0, 1, 2, 3], 4);
        let path = Exchange {
            kind: ExchangeKind::Path,
            arcs: vec![
                Arc { from: 0, to: 1, item: 0 },
                Arc { from: 1, to: 2, item: 1 },
                Arc { from: 2, to: 3, item: 2 },
            ],
        };
        path.validate().unwrap();
        let out = apply_exchange(&c, &path).unwrap();
        assert_eq!(out.shape().0, vec![0, 1, 1, 2]);

        let wrong = Exchange {
            kind: ExchangeKind::Path,
            arcs: vec![Arc { from: 1, to: 0, item: 0 }],
        };
        assert!(apply_exchange(&c, &wrong).is_err());
    }

    #[test]
    fn single_exchange_examples() {
        let c = cl(&[0, 0, 1, 1], 2);
        assert!(!is_single_exchange(&c, &c));
        assert!(is_single_exchange(&c, &cl(&[1, 0, 0, 1], 2)));
        let c = cl(&[0, 1, 2, 3], 4);
        let two_swaps = cl(&[1, 0, 3, 2], 4);
        assert!(!is_single_exchange(&c, &two_swaps));
        assert!(single_exchange(&c, &cl(&[1, 1, 2, 3], 4)).is_some());
    }

    proptest! {
        #[test]
        fn same_shape_decomposes_into_cycles(seed in 0u64..2000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let k = rng.gen_range(2..5);
            let a: Vec<usize> = (0..9).map(|_| rng.gen_range(0..k)).collect();
            let mut b = a.clone();
            // shuffle preserves the shape
            for j in (1..b.len()).rev() {
                b.swap(j, rng.gen_range(0..=j));
            }
            let (ca, cb) = (cl(&a, k), cl(&b, k));
            let g = build_cdg(&ca, &cb).unwrap();
            let (path, cycles) = decompose(&g).unwrap();
            prop_assert!(path.is_none());
            prop_assert!(covers(&g, &path, &cycles));
            let mut cur = ca.clone();
            for c in &cycles {
                c.validate().unwrap();
                prop_assert_eq!(c.kind, ExchangeKind::Cycle);
                cur = apply_exchange(&cur, c).unwrap();
            }
            prop_assert_eq!(cur, cb);
        }

        #[test]
        fn one_moved_item_gives_path(seed in 0u64..2000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let k = rng.gen_range(2..5);
            let a: Vec<usize> = (0..9).map(|_| rng.gen_range(0..k)).collect();
            let mut b = a.clone();
            for j in (1..b.len()).rev() {
                b.swap(j, rng.gen_range(0..=j));
            }
            let j = rng.gen_range(0..9);
            b[j] = (b[j] + 1 + rng.gen_range(0..k - 1)) % k;
            let (ca, cb) = (cl(&a, k), cl(&b, k));
            let g = build_cdg(&ca, &cb).unwrap();
            let (path, cycles) = decompose(&g).unwrap();
            let path = path.expect("shapes differ");
            path.validate().unwrap();
            let (sa, sb) = (ca.shape().0, cb.shape().0);
            let src = path.arcs[0].from;
            let dst = path.arcs.last().unwrap().to;
            prop_assert_eq!(sa[src], sb[src] + 1);
            prop_assert_eq!(sa[dst] + 1, sb[dst]);
            let mut nodes: Vec<usize> = path.arcs.iter().map(|a| a.from).collect();
            nodes.push(dst);
            let mut sorted = nodes.clone();
            sorted.sort_unstable();
            sorted.dedup();
            prop_assert_eq!(sorted.len(), nodes.len(), "path is simple");
            prop_assert!(covers(&g, &Some(path.clone()), &cycles));
            // any application order reaches the target
            let mut cur = ca.clone();
            for e in cycles.iter().rev().chain(std::iter::once(&path)) {
                cur = apply_exchange(&cur, e).unwrap();
            }
            prop_assert_eq!(cur, cb);
        }
    }
}
