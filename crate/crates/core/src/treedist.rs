//! Structural distances between label trees.
//!
//! `tree_edit_distance` is the exact ordered-tree edit distance with unit
//! costs for insert, delete, and relabel (Zhang–Shasha dynamic program,
//! O(n²) space, O(n³) worst-case time). `PqGramProfile` is the cheaper
//! signature used to rank large candidate pools: the bag of label tuples
//! obtained by sliding a p-stem/q-base window over the dummy-extended tree,
//! with bag distance |L1 ⊎ L2| − 2·|L1 ∩ L2|.

use crate::ast::{LabelNode, LabeledTree, TreeLabel};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeMetricError {
    #[error("pq-gram parameter mismatch: ({0}, {1}) vs ({2}, {3})")]
    ParameterMismatch(usize, usize, usize, usize),
    #[error("p and q must both be at least 1")]
    InvalidParameters,
}

// ---------------------------------------------------------------------------
// exact tree edit distance
// ---------------------------------------------------------------------------

/// Postorder view of a tree: for postorder index i, `labels[i]` and the
/// postorder index `lld[i]` of the leftmost leaf descendant.
struct PostOrder {
    labels: Vec<TreeLabel>,
    lld: Vec<usize>,
}

impl PostOrder {
    fn build(tree: &LabeledTree) -> Self {
        let mut po = PostOrder {
            labels: Vec::new(),
            lld: Vec::new(),
        };
        // returns the leftmost leaf descendant's postorder index
        fn walk(node: &LabelNode, po: &mut PostOrder) -> usize {
            let mut first_leaf = None;
            for child in &node.children {
                let leaf = walk(child, po);
                first_leaf.get_or_insert(leaf);
            }
            let idx = po.labels.len();
            let lld = first_leaf.unwrap_or(idx);
            po.labels.push(node.label);
            po.lld.push(lld);
            lld
        }
        walk(&tree.root, &mut po);
        po
    }

    fn len(&self) -> usize {
        self.labels.len()
    }

    /// Keyroots: the root plus every node with a left sibling, i.e. nodes
    /// whose leftmost leaf differs from every higher node's.
    fn keyroots(&self) -> Vec<usize> {
        let n = self.len();
        let mut roots = Vec::new();
        for i in 0..n {
            let is_keyroot = (i + 1..n).all(|j| self.lld[j] != self.lld[i]);
            if is_keyroot {
                roots.push(i);
            }
        }
        roots
    }
}

/// Minimum number of unit-cost node edits (insert, delete, relabel)
/// transforming `t1` into `t2`.
pub fn tree_edit_distance(t1: &LabeledTree, t2: &LabeledTree) -> u64 {
    let a = PostOrder::build(t1);
    let b = PostOrder::build(t2);
    let (n1, n2) = (a.len(), b.len());
    let mut td = vec![vec![0u64; n2]; n1];
    let mut fd = vec![vec![0u64; n2 + 1]; n1 + 1];

    for &i in &a.keyroots() {
        for &j in &b.keyroots() {
            forest_dist(&a, &b, i, j, &mut td, &mut fd);
        }
    }
    td[n1 - 1][n2 - 1]
}

fn forest_dist(
    a: &PostOrder,
    b: &PostOrder,
    i: usize,
    j: usize,
    td: &mut [Vec<u64>],
    fd: &mut [Vec<u64>],
) {
    let li = a.lld[i];
    let lj = b.lld[j];
    let m = i - li + 1;
    let n = j - lj + 1;

    fd[0][0] = 0;
    for x in 1..=m {
        fd[x][0] = fd[x - 1][0] + 1;
    }
    for y in 1..=n {
        fd[0][y] = fd[0][y - 1] + 1;
    }
    for x in 1..=m {
        let ai = li + x - 1;
        for y in 1..=n {
            let bj = lj + y - 1;
            if a.lld[ai] == li && b.lld[bj] == lj {
                let relabel = u64::from(a.labels[ai] != b.labels[bj]);
                let dist = (fd[x - 1][y] + 1)
                    .min(fd[x][y - 1] + 1)
                    .min(fd[x - 1][y - 1] + relabel);
                fd[x][y] = dist;
                td[ai][bj] = dist;
            } else {
                let xs = a.lld[ai] - li;
                let ys = b.lld[bj] - lj;
                fd[x][y] = (fd[x - 1][y] + 1)
                    .min(fd[x][y - 1] + 1)
                    .min(fd[xs][ys] + td[ai][bj]);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// pq-grams
// ---------------------------------------------------------------------------

/// One gram: p stem labels (root-downward) followed by q base labels
/// (left-to-right); `None` is the dummy filler.
pub type Gram = Vec<Option<TreeLabel>>;

/// Inverse of `TreeLabel as u8`, for binary (de)serialization of profiles.
pub fn label_from_code(code: u8) -> Option<TreeLabel> {
    use TreeLabel::*;
    const ALL: [TreeLabel; 31] = [
        Root, Select, Where, Table, Column, Min, Max, Count, Sum, Avg, GroupBy, Having, OrderBy,
        Limit, Intersect, Except, Union, Join, And, Or, Eq, Neq, Lt, Lte, Gt, Gte, Like, In,
        Between, Exists, IsNull,
    ];
    ALL.get(code as usize).copied()
}

/// Multiset of pq-grams, stored sorted so the bag distance is a single
/// linear merge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PqGramProfile {
    pub p: usize,
    pub q: usize,
    grams: Vec<Gram>,
}

impl PqGramProfile {
    /// Rebuild a profile from already-sorted grams (index deserialization).
    pub fn from_sorted_grams(p: usize, q: usize, grams: Vec<Gram>) -> Result<Self, TreeMetricError> {
        if p < 1 || q < 1 {
            return Err(TreeMetricError::InvalidParameters);
        }
        if grams.iter().any(|g| g.len() != p + q) || !grams.windows(2).all(|w| w[0] <= w[1]) {
            return Err(TreeMetricError::InvalidParameters);
        }
        Ok(PqGramProfile { p, q, grams })
    }

    pub fn len(&self) -> usize {
        self.grams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grams.is_empty()
    }

    pub fn grams(&self) -> &[Gram] {
        &self.grams
    }
}

/// Compute the (p, q)-gram profile of a tree.
pub fn pq_gram_profile(
    tree: &LabeledTree,
    p: usize,
    q: usize,
) -> Result<PqGramProfile, TreeMetricError> {
    if p < 1 || q < 1 {
        return Err(TreeMetricError::InvalidParameters);
    }
    let mut grams = Vec::new();
    let mut stem = vec![None; p];
    collect_grams(&tree.root, &mut stem, q, &mut grams);
    grams.sort_unstable();
    Ok(PqGramProfile { p, q, grams })
}

fn collect_grams(node: &LabelNode, stem: &mut Vec<Option<TreeLabel>>, q: usize, out: &mut Vec<Gram>) {
    let shifted_out = stem.remove(0);
    stem.push(Some(node.label));
    let mut base: Vec<Option<TreeLabel>> = vec![None; q];
    if node.children.is_empty() {
        out.push(stem.iter().chain(base.iter()).cloned().collect());
    } else {
        for child in &node.children {
            base.remove(0);
            base.push(Some(child.label));
            out.push(stem.iter().chain(base.iter()).cloned().collect());
            collect_grams(child, stem, q, out);
        }
        for _ in 1..q {
            base.remove(0);
            base.push(None);
            out.push(stem.iter().chain(base.iter()).cloned().collect());
        }
    }
    stem.pop();
    stem.insert(0, shifted_out);
}

/// Bag distance |L1 ⊎ L2| − 2·|L1 ∩ L2|, where ⊎ sums multiplicities and the
/// intersection takes the per-gram minimum multiplicity. Zero for identical
/// profiles, symmetric, never negative.
pub fn pq_gram_distance(a: &PqGramProfile, b: &PqGramProfile) -> Result<u64, TreeMetricError> {
    pq_gram_distance_counted(a, b).map(|(d, _)| d)
}

/// Same as [`pq_gram_distance`] but also reports the number of gram
/// comparisons performed by the merge, for complexity instrumentation.
pub fn pq_gram_distance_counted(
    a: &PqGramProfile,
    b: &PqGramProfile,
) -> Result<(u64, u64), TreeMetricError> {
    if a.p != b.p || a.q != b.q {
        return Err(TreeMetricError::ParameterMismatch(a.p, a.q, b.p, b.q));
    }
    let mut comparisons = 0u64;
    let mut shared = 0u64;
    let (mut i, mut j) = (0, 0);
    while i < a.grams.len() && j < b.grams.len() {
        comparisons += 1;
        match a.grams[i].cmp(&b.grams[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                shared += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union_sum = (a.grams.len() + b.grams.len()) as u64;
    Ok((union_sum - 2 * shared, comparisons))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{normalize_ast, parse_sql};

    fn leaf(label: TreeLabel) -> LabelNode {
        LabelNode::leaf(label)
    }

    fn tree(root: LabelNode) -> LabeledTree {
        LabeledTree::new(root)
    }

    #[test]
    fn identical_trees_have_zero_distance() {
        let t = normalize_ast(&parse_sql("SELECT count(*) FROM singer WHERE age > 20").unwrap());
        assert_eq!(tree_edit_distance(&t, &t), 0);
    }

    #[test]
    fn single_relabel_costs_one() {
        let a = tree(LabelNode::new(TreeLabel::Select, vec![leaf(TreeLabel::Table)]));
        let b = tree(LabelNode::new(TreeLabel::Select, vec![leaf(TreeLabel::Where)]));
        assert_eq!(tree_edit_distance(&a, &b), 1);
    }

    #[test]
    fn deletion_reconnects_children() {
        // SELECT(WHERE(GT)) vs SELECT(GT): deleting WHERE promotes GT.
        let a = tree(LabelNode::new(
            TreeLabel::Select,
            vec![LabelNode::new(TreeLabel::Where, vec![leaf(TreeLabel::Gt)])],
        ));
        let b = tree(LabelNode::new(TreeLabel::Select, vec![leaf(TreeLabel::Gt)]));
        assert_eq!(tree_edit_distance(&a, &b), 1);
        assert_eq!(tree_edit_distance(&b, &a), 1);
    }

    #[test]
    fn distance_between_disjoint_trees_is_bounded_by_sizes() {
        let a = tree(LabelNode::new(
            TreeLabel::Union,
            vec![leaf(TreeLabel::Limit), leaf(TreeLabel::Limit)],
        ));
        let b = tree(leaf(TreeLabel::Having));
        // relabel root + delete two children
        assert_eq!(tree_edit_distance(&a, &b), 3);
    }

    #[test]
    fn smallest_tree_profile_has_one_gram() {
        let t = tree(leaf(TreeLabel::Select));
        let profile = pq_gram_profile(&t, 2, 3).unwrap();
        assert_eq!(profile.len(), 1);
        assert_eq!(
            profile.grams()[0],
            vec![None, Some(TreeLabel::Select), None, None, None]
        );
    }

    #[test]
    fn profile_is_deterministic() {
        let t = normalize_ast(&parse_sql("SELECT a FROM t WHERE b > 1 ORDER BY a").unwrap());
        let p1 = pq_gram_profile(&t, 2, 3).unwrap();
        let p2 = pq_gram_profile(&t, 2, 3).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(pq_gram_distance(&p1, &p2).unwrap(), 0);
    }

    #[test]
    fn hand_enumerated_five_node_profile() {
        // SELECT with children TABLE, WHERE(GT), GROUP BY; p=2, q=3.
        // Grams enumerated by hand with the sliding window:
        //   (*,SELECT | *,*,TABLE) (*,SELECT | *,TABLE,WHERE)
        //   (*,SELECT | TABLE,WHERE,GROUPBY) (*,SELECT | WHERE,GROUPBY,*)
        //   (*,SELECT | GROUPBY,*,*)
        //   (SELECT,TABLE | *,*,*)
        //   (SELECT,WHERE | *,*,GT) (SELECT,WHERE | *,GT,*) (SELECT,WHERE | GT,*,*)
        //   (WHERE,GT | *,*,*)
        //   (SELECT,GROUPBY | *,*,*)
        let t = tree(LabelNode::new(
            TreeLabel::Select,
            vec![
                leaf(TreeLabel::Table),
                LabelNode::new(TreeLabel::Where, vec![leaf(TreeLabel::Gt)]),
                leaf(TreeLabel::GroupBy),
            ],
        ));
        let profile = pq_gram_profile(&t, 2, 3).unwrap();
        assert_eq!(profile.len(), 11);
        use TreeLabel::*;
        let expect: Vec<Vec<Option<TreeLabel>>> = vec![
            vec![None, Some(Select), None, None, Some(Table)],
            vec![None, Some(Select), None, Some(Table), Some(Where)],
            vec![None, Some(Select), Some(Table), Some(Where), Some(GroupBy)],
            vec![None, Some(Select), Some(Where), Some(GroupBy), None],
            vec![None, Some(Select), Some(GroupBy), None, None],
            vec![Some(Select), Some(Table), None, None, None],
            vec![Some(Select), Some(Where), None, None, Some(Gt)],
            vec![Some(Select), Some(Where), None, Some(Gt), None],
            vec![Some(Select), Some(Where), Some(Gt), None, None],
            vec![Some(Where), Some(Gt), None, None, None],
            vec![Some(Select), Some(GroupBy), None, None, None],
        ];
        let mut expect_sorted = expect;
        expect_sorted.sort_unstable();
        assert_eq!(profile.grams(), expect_sorted.as_slice());
    }

    #[test]
    fn disjoint_profiles_sum_sizes() {
        let a = pq_gram_profile(&tree(leaf(TreeLabel::Select)), 2, 3).unwrap();
        let b = pq_gram_profile(&tree(leaf(TreeLabel::Union)), 2, 3).unwrap();
        assert_eq!(pq_gram_distance(&a, &b).unwrap(), 2);
    }

    #[test]
    fn parameter_mismatch_is_rejected() {
        let t = tree(leaf(TreeLabel::Select));
        let a = pq_gram_profile(&t, 2, 3).unwrap();
        let b = pq_gram_profile(&t, 2, 2).unwrap();
        assert!(matches!(
            pq_gram_distance(&a, &b),
            Err(TreeMetricError::ParameterMismatch(2, 3, 2, 2))
        ));
    }
}
