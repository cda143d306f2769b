//! Rooted trees with labeled leaves and internal out-degree at least two.
//!
//! A tree on `n` leaves indexes one integral term of the order-`n`
//! cumulant: leaves are the observed events, internal nodes the branching
//! points of a family tree, and the root the branching point closest to
//! the immigrant.
//!
//! Trees are stored in prefix (Polish) order: an internal node is written
//! as its arity followed by its children, a leaf as its label. The
//! canonical form orders siblings by the smallest leaf label below them,
//! so two trees are topologically identical exactly when their canonical
//! encodings are equal.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{HawkesError, Result};
use crate::exec::Execution;
use crate::partitions::partitions_of_mask;

/// Default largest order for explicit enumeration.
pub const DEFAULT_MAX_LEAVES: usize = 8;
/// Hard limit imposed by the label encoding.
pub const LABEL_LIMIT: usize = 127;

const INTERNAL: u8 = 0x80;

/// A rooted tree whose leaves carry the labels `1..=n` once each.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LeafLabeledTree {
    code: Vec<u8>,
}

/// One node of a tree in record form. Leaves have no children and carry a
/// label; internal nodes have children and no label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNodeRecord {
    pub id: usize,
    pub children: Vec<usize>,
    pub label: Option<usize>,
}

/// Internal-node view of a tree, used to compile integral terms.
/// Node 0 is the root; parents precede children.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InternalNode {
    pub parent: Option<usize>,
    /// Zero-based leaf indices (label minus one) attached to this node.
    pub leaves: Vec<usize>,
    pub children: Vec<usize>,
}

impl LeafLabeledTree {
    /// The single-leaf tree.
    pub fn leaf() -> Self {
        LeafLabeledTree { code: vec![1] }
    }

    /// Builds a tree from node records, keeping the given child order.
    pub fn from_records(root: usize, nodes: &[TreeNodeRecord]) -> Result<Self> {
        let by_id: HashMap<usize, &TreeNodeRecord> = nodes.iter().map(|n| (n.id, n)).collect();
        if by_id.len() != nodes.len() {
            return Err(HawkesError::MalformedTree("duplicate node id".into()));
        }
        let mut code = Vec::with_capacity(nodes.len());
        let mut visited = 0usize;
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            let node = by_id
                .get(&id)
                .ok_or_else(|| HawkesError::MalformedTree(format!("unknown node id {id}")))?;
            visited += 1;
            if visited > nodes.len() {
                return Err(HawkesError::MalformedTree("cycle or shared child".into()));
            }
            if node.children.is_empty() {
                let label = node
                    .label
                    .ok_or_else(|| HawkesError::MalformedTree(format!("leaf {id} has no label")))?;
                if label == 0 || label > LABEL_LIMIT {
                    return Err(HawkesError::MalformedTree(format!("leaf label {label} out of range")));
                }
                code.push(label as u8);
            } else {
                if node.label.is_some() {
                    return Err(HawkesError::MalformedTree(format!("internal node {id} carries a label")));
                }
                if node.children.len() > LABEL_LIMIT {
                    return Err(HawkesError::MalformedTree(format!("node {id} has too many children")));
                }
                code.push(INTERNAL | node.children.len() as u8);
                stack.extend(node.children.iter().rev());
            }
        }
        if visited != nodes.len() {
            return Err(HawkesError::MalformedTree("unreachable nodes".into()));
        }
        let tree = LeafLabeledTree { code };
        tree.validate()?;
        Ok(tree)
    }

    /// Parses the nested-parenthesis form, e.g. `(1,(2,3))` or `4`.
    pub fn parse(s: &str) -> Result<Self> {
        let bytes: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut pos = 0;
        let mut code = Vec::new();
        parse_node(&bytes, &mut pos, &mut code)?;
        if pos != bytes.len() {
            return Err(HawkesError::MalformedTree(format!("trailing input in {s:?}")));
        }
        let tree = LeafLabeledTree { code };
        tree.validate()?;
        Ok(tree)
    }

    /// Number of leaves.
    pub fn n_leaves(&self) -> usize {
        self.code.iter().filter(|c| **c & INTERNAL == 0).count()
    }

    pub fn n_internal(&self) -> usize {
        self.code.len() - self.n_leaves()
    }

    /// Prefix encoding; internal nodes are `0x80 | arity`, leaves their label.
    pub fn encoding(&self) -> &[u8] {
        &self.code
    }

    /// Checks out-degree and the label bijection.
    pub fn validate(&self) -> Result<()> {
        let mut pending = 1usize;
        for (k, &c) in self.code.iter().enumerate() {
            if pending == 0 {
                return Err(HawkesError::MalformedTree(format!("extra nodes after position {k}")));
            }
            pending -= 1;
            if c & INTERNAL != 0 {
                let arity = (c & !INTERNAL) as usize;
                if arity < 2 {
                    return Err(HawkesError::MalformedTree(format!("internal node with out-degree {arity}")));
                }
                pending += arity;
            }
        }
        if pending != 0 {
            return Err(HawkesError::MalformedTree("truncated tree".into()));
        }
        let n = self.n_leaves();
        let mut seen = vec![false; n + 1];
        for &c in self.code.iter().filter(|c| **c & INTERNAL == 0) {
            let l = c as usize;
            if l == 0 || l > n || seen[l] {
                return Err(HawkesError::MalformedTree(format!("leaf labels are not a bijection onto 1..={n}")));
            }
            seen[l] = true;
        }
        Ok(())
    }

    /// Node records, ids assigned in prefix order with the root at 0.
    pub fn records(&self) -> Vec<TreeNodeRecord> {
        let mut out: Vec<TreeNodeRecord> = Vec::with_capacity(self.code.len());
        let mut stack: Vec<(usize, usize)> = Vec::new(); // (node id, children still expected)
        for (id, &c) in self.code.iter().enumerate() {
            if let Some(top) = stack.last_mut() {
                out[top.0].children.push(id);
                top.1 -= 1;
            }
            if c & INTERNAL != 0 {
                out.push(TreeNodeRecord { id, children: Vec::new(), label: None });
                stack.push((id, (c & !INTERNAL) as usize));
            } else {
                out.push(TreeNodeRecord { id, children: Vec::new(), label: Some(c as usize) });
            }
            while stack.last().is_some_and(|t| t.1 == 0) {
                stack.pop();
            }
        }
        out
    }

    /// Internal nodes with their attached leaves and internal children.
    pub fn internal_nodes(&self) -> Vec<InternalNode> {
        let records = self.records();
        let mut index = vec![usize::MAX; records.len()];
        let mut out: Vec<InternalNode> = Vec::new();
        for r in &records {
            if r.label.is_none() {
                index[r.id] = out.len();
                out.push(InternalNode { parent: None, leaves: Vec::new(), children: Vec::new() });
            }
        }
        for r in &records {
            if r.label.is_some() {
                continue;
            }
            let me = index[r.id];
            for &c in &r.children {
                match records[c].label {
                    Some(l) => out[me].leaves.push(l - 1),
                    None => {
                        out[me].children.push(index[c]);
                        out[index[c]].parent = Some(me);
                    }
                }
            }
        }
        out
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical_form().map(|c| c == *self).unwrap_or(false)
    }

    /// Canonical representative: siblings sorted by their smallest leaf
    /// label, recursively. Idempotent.
    pub fn canonical_form(&self) -> Result<Self> {
        self.validate()?;
        let mut pos = 0;
        let (code, _) = canonical_subtree(&self.code, &mut pos);
        Ok(LeafLabeledTree { code })
    }

    /// Applies `label -> perm[label - 1]` to every leaf and re-canonicalizes.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n_leaves();
        if perm.len() != n {
            return Err(HawkesError::MalformedTree("relabeling has the wrong length".into()));
        }
        let code = self
            .code
            .iter()
            .map(|&c| if c & INTERNAL == 0 { perm[c as usize - 1] as u8 } else { c })
            .collect();
        LeafLabeledTree { code }.canonical_form()
    }
}

fn parse_node(s: &[char], pos: &mut usize, code: &mut Vec<u8>) -> Result<()> {
    let err = |msg: &str| HawkesError::MalformedTree(msg.to_string());
    match s.get(*pos) {
        Some('(') => {
            *pos += 1;
            let slot = code.len();
            code.push(INTERNAL);
            let mut arity = 0usize;
            loop {
                parse_node(s, pos, code)?;
                arity += 1;
                match s.get(*pos) {
                    Some(',') => *pos += 1,
                    Some(')') => {
                        *pos += 1;
                        break;
                    }
                    _ => return Err(err("expected ',' or ')'")),
                }
            }
            if arity > LABEL_LIMIT {
                return Err(err("too many children"));
            }
            code[slot] = INTERNAL | arity as u8;
            Ok(())
        }
        Some(c) if c.is_ascii_digit() => {
            let start = *pos;
            while s.get(*pos).is_some_and(|c| c.is_ascii_digit()) {
                *pos += 1;
            }
            let text: String = s[start..*pos].iter().collect();
            let label: usize = text.parse().map_err(|_| err("bad label"))?;
            if label == 0 || label > LABEL_LIMIT {
                return Err(err("leaf label out of range"));
            }
            code.push(label as u8);
            Ok(())
        }
        _ => Err(err("expected '(' or a leaf label")),
    }
}

/// Returns the canonical code of the subtree at `pos` and its smallest label.
fn canonical_subtree(code: &[u8], pos: &mut usize) -> (Vec<u8>, u8) {
    let c = code[*pos];
    *pos += 1;
    if c & INTERNAL == 0 {
        return (vec![c], c);
    }
    let arity = (c & !INTERNAL) as usize;
    let mut children: Vec<(Vec<u8>, u8)> = (0..arity).map(|_| canonical_subtree(code, pos)).collect();
    children.sort_by_key(|ch| ch.1);
    let min = children[0].1;
    let mut out = vec![c];
    for (ch, _) in children {
        out.extend(ch);
    }
    (out, min)
}

impl fmt::Display for LeafLabeledTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn write_node(code: &[u8], pos: &mut usize, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            let c = code[*pos];
            *pos += 1;
            if c & INTERNAL == 0 {
                return write!(f, "{c}");
            }
            write!(f, "(")?;
            for k in 0..(c & !INTERNAL) {
                if k > 0 {
                    write!(f, ",")?;
                }
                write_node(code, pos, f)?;
            }
            write!(f, ")")
        }
        let mut pos = 0;
        write_node(&self.code, &mut pos, f)
    }
}

/// All topologically distinct trees on `n` labeled leaves, in canonical
/// form and sorted by encoding. Fails with a size error above
/// [`DEFAULT_MAX_LEAVES`].
pub fn enumerate_trees(n: usize) -> Result<Vec<LeafLabeledTree>> {
    enumerate_trees_with(n, DEFAULT_MAX_LEAVES, Execution::default())
}

/// Enumeration with an explicit size limit and execution backend.
///
/// A tree on a leaf set is either a single leaf or a root whose children
/// are trees on the blocks of a partition of the set into at least two
/// blocks. Subtrees are memoized per leaf subset; the top-level partitions
/// are expanded in parallel.
pub fn enumerate_trees_with(n: usize, max_leaves: usize, exec: Execution) -> Result<Vec<LeafLabeledTree>> {
    if n == 0 {
        return Err(HawkesError::Input("a tree needs at least one leaf".into()));
    }
    if n > max_leaves || n > 31 {
        return Err(HawkesError::Size { n, max: max_leaves.min(31) });
    }
    let full = ((1u64 << n) - 1) as u32;
    let mut memo: HashMap<u32, Vec<Vec<u8>>> = HashMap::new();
    // fill proper subsets in order of size
    let mut subsets: Vec<u32> = (1..full).collect();
    subsets.sort_by_key(|m| (m.count_ones(), *m));
    for mask in subsets {
        let trees = trees_on(mask, &memo);
        memo.insert(mask, trees);
    }
    let tops: Vec<Vec<u32>> = if n == 1 {
        vec![vec![full]]
    } else {
        partitions_of_mask(full).into_iter().filter(|p| p.len() >= 2).collect()
    };
    let chunks = exec.map(&tops, |p| {
        if n == 1 {
            vec![vec![1u8]]
        } else {
            combine(p, &memo)
        }
    });
    let mut all: Vec<LeafLabeledTree> = chunks.into_iter().flatten().map(|code| LeafLabeledTree { code }).collect();
    all.sort_unstable();
    Ok(all)
}

fn trees_on(mask: u32, memo: &HashMap<u32, Vec<Vec<u8>>>) -> Vec<Vec<u8>> {
    if mask.count_ones() == 1 {
        return vec![vec![mask.trailing_zeros() as u8 + 1]];
    }
    partitions_of_mask(mask)
        .into_iter()
        .filter(|p| p.len() >= 2)
        .flat_map(|p| combine(&p, memo))
        .collect()
}

/// Cartesian product of the subtree lists of each block under a new root.
fn combine(blocks: &[u32], memo: &HashMap<u32, Vec<Vec<u8>>>) -> Vec<Vec<u8>> {
    let lists: Vec<&Vec<Vec<u8>>> = blocks.iter().map(|b| &memo[b]).collect();
    let total: usize = lists.iter().map(|l| l.len()).product();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; lists.len()];
    for _ in 0..total {
        let mut code = vec![INTERNAL | blocks.len() as u8];
        for (l, &i) in lists.iter().zip(&idx) {
            code.extend_from_slice(&l[i]);
        }
        out.push(code);
        for k in (0..idx.len()).rev() {
            idx[k] += 1;
            if idx[k] < lists[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
    out
}

/// Exact number of trees on `n` labeled leaves, without enumeration.
///
/// With `a(s)` the tree count and `P(m)` the number of forests on an
/// `m`-set, splitting off the block that holds a fixed element gives
/// `P(m) = sum_s C(m-1, s-1) a(s) P(m-s)`. For `n >= 2` the root's
/// partition has at least two blocks, so `a(n)` is that sum with `s < n`.
pub fn count_trees(n: usize) -> BigUint {
    if n == 0 {
        return BigUint::zero();
    }
    let mut binom: Vec<Vec<BigUint>> = vec![vec![BigUint::one()]];
    for m in 1..n {
        let prev = &binom[m - 1];
        let mut row = vec![BigUint::one(); m + 1];
        for k in 1..m {
            row[k] = &prev[k - 1] + &prev[k];
        }
        binom.push(row);
    }
    let mut a = vec![BigUint::zero(); n + 1];
    let mut forests = vec![BigUint::zero(); n + 1];
    forests[0] = BigUint::one();
    a[1] = BigUint::one();
    forests[1] = BigUint::one();
    for m in 2..=n {
        let mut proper = BigUint::zero();
        for s in 1..m {
            proper += &binom[m - 1][s - 1] * &a[s] * &forests[m - s];
        }
        a[m] = proper.clone();
        forests[m] = &a[m] + proper;
    }
    a[n].clone()
}
