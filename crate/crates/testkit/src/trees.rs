//! Random label trees and slow-but-obviously-correct reference
//! implementations of the tree distances. The oracles deliberately share no
//! code with the production dynamic program: the edit distance is computed
//! by exhaustive enumeration of valid tree mappings, and the bag distance by
//! naive hash-map multiset arithmetic.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use text2sql_core::ast::{LabelNode, LabeledTree, TreeLabel};
use text2sql_core::treedist::Gram;

const LABEL_POOL: [TreeLabel; 8] = [
    TreeLabel::Select,
    TreeLabel::Table,
    TreeLabel::Where,
    TreeLabel::GroupBy,
    TreeLabel::Having,
    TreeLabel::Join,
    TreeLabel::Gt,
    TreeLabel::Count,
];

/// Uniform random ordered tree with `n` nodes: each new node picks a random
/// existing parent and is appended as its rightmost child.
pub fn random_tree(n: usize, seed: u64) -> LabeledTree {
    assert!(n >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_tree_with(&mut rng, n)
}

pub fn random_tree_with(rng: &mut ChaCha8Rng, n: usize) -> LabeledTree {
    // children[i] lists node indices in insertion (left-to-right) order
    let mut parents: Vec<usize> = vec![0; n];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 1..n {
        let p = rng.gen_range(0..i);
        parents[i] = p;
        children[p].push(i);
    }
    let labels: Vec<TreeLabel> = (0..n)
        .map(|_| LABEL_POOL[rng.gen_range(0..LABEL_POOL.len())])
        .collect();
    fn build(i: usize, labels: &[TreeLabel], children: &[Vec<usize>]) -> LabelNode {
        LabelNode::new(
            labels[i],
            children[i]
                .iter()
                .map(|&c| build(c, labels, children))
                .collect(),
        )
    }
    let _ = parents;
    LabeledTree::new(build(0, &labels, &children))
}

/// Flat preorder view used by the mapping enumerator.
struct Flat {
    labels: Vec<TreeLabel>,
    /// ancestor[i] contains the preorder indices of i's proper ancestors
    ancestors: Vec<Vec<usize>>,
}

fn flatten(tree: &LabeledTree) -> Flat {
    let mut flat = Flat {
        labels: Vec::new(),
        ancestors: Vec::new(),
    };
    fn walk(node: &LabelNode, path: &mut Vec<usize>, flat: &mut Flat) {
        let idx = flat.labels.len();
        flat.labels.push(node.label);
        flat.ancestors.push(path.clone());
        path.push(idx);
        for child in &node.children {
            walk(child, path, flat);
        }
        path.pop();
    }
    walk(&tree.root, &mut Vec::new(), &mut flat);
    flat
}

/// Edit script shape of an optimal mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OpCounts {
    pub deletions: u64,
    pub substitutions: u64,
    pub insertions: u64,
}

/// Exhaustive-search tree edit distance. Enumerates every valid tree mapping
/// (one-to-one, ancestor- and left-right-order preserving) and returns the
/// minimum cost together with all (deletion, substitution, insertion)
/// breakdowns that achieve it. Only usable for small trees.
pub fn brute_force_ted(t1: &LabeledTree, t2: &LabeledTree) -> (u64, Vec<OpCounts>) {
    let a = flatten(t1);
    let b = flatten(t2);
    let n1 = a.labels.len();
    let n2 = b.labels.len();
    let mut best = (n1 + n2) as u64;
    let mut breakdowns: Vec<OpCounts> = vec![OpCounts {
        deletions: n1 as u64,
        substitutions: 0,
        insertions: n2 as u64,
    }];

    // pairs: (a-node, b-node) mapped so far, in increasing a preorder
    fn recurse(
        a: &Flat,
        b: &Flat,
        i: usize,
        pairs: &mut Vec<(usize, usize)>,
        used: &mut Vec<bool>,
        subs: u64,
        best: &mut u64,
        breakdowns: &mut Vec<OpCounts>,
    ) {
        let n1 = a.labels.len();
        let n2 = b.labels.len();
        if i == n1 {
            let mapped = pairs.len() as u64;
            let cost = (n1 as u64 - mapped) + (n2 as u64 - mapped) + subs;
            let counts = OpCounts {
                deletions: n1 as u64 - mapped,
                substitutions: subs,
                insertions: n2 as u64 - mapped,
            };
            if cost < *best {
                *best = cost;
                breakdowns.clear();
                breakdowns.push(counts);
            } else if cost == *best && !breakdowns.contains(&counts) {
                breakdowns.push(counts);
            }
            return;
        }
        // lower bound on the final cost if everything else matches exactly
        let mapped = pairs.len();
        let remaining1 = n1 - i;
        let used2 = used.iter().filter(|&&u| u).count();
        let free2 = n2 - used2;
        let min_unmapped1 = remaining1.saturating_sub(free2);
        let lower = (n1 - mapped - remaining1 + min_unmapped1) as u64
            + (n2 - mapped - free2.min(remaining1)) as u64
            + subs;
        if lower > *best {
            return;
        }

        // option 1: delete node i
        recurse(a, b, i + 1, pairs, used, subs, best, breakdowns);
        // option 2: map node i to each compatible j
        for j in 0..n2 {
            if used[j] {
                continue;
            }
            let ok = pairs.iter().all(|&(pa, pb)| {
                let a_anc = a.ancestors[i].contains(&pa);
                let b_anc = b.ancestors[j].contains(&pb);
                if a_anc || b_anc {
                    a_anc && b_anc
                } else {
                    // both strictly to the left: preorder before and not an ancestor
                    pa < i && pb < j
                }
            });
            if !ok {
                continue;
            }
            used[j] = true;
            pairs.push((i, j));
            let sub_cost = u64::from(a.labels[i] != b.labels[j]);
            recurse(a, b, i + 1, pairs, used, subs + sub_cost, best, breakdowns);
            pairs.pop();
            used[j] = false;
        }
    }

    recurse(
        &a,
        &b,
        0,
        &mut Vec::new(),
        &mut vec![false; n2],
        0,
        &mut best,
        &mut breakdowns,
    );
    (best, breakdowns)
}

/// Naive multiset distance over gram bags: hash-map counts, then
/// |L1| + |L2| − 2·Σ min(m1, m2).
pub fn naive_bag_distance(a: &[Gram], b: &[Gram]) -> u64 {
    use std::collections::HashMap;
    let mut counts: HashMap<&Gram, (u64, u64)> = HashMap::new();
    for g in a {
        counts.entry(g).or_default().0 += 1;
    }
    for g in b {
        counts.entry(g).or_default().1 += 1;
    }
    let shared: u64 = counts.values().map(|&(x, y)| x.min(y)).sum();
    (a.len() + b.len()) as u64 - 2 * shared
}
