//! Rooted planar full binary trees.
//!
//! Trees are stored as flat index arrays so that very large sampled trees
//! (millions of leaves) never recurse. Node indices are `u32`; a tree may
//! hold at most `u32::MAX - 1` nodes.

mod enumerate;
mod order;
mod sample;

use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use num_bigint::BigUint;

use crate::error::{Error, Result};

pub use enumerate::{enumerate_trees, TreeEnumeration, ENUMERATION_CAP};
pub use order::{branch_counts, prune, strahler_orders, StrahlerProfile};
pub(crate) use sample::grow_into;
pub use sample::{sample_tree, sample_tree_with, TreeSeed};

pub(crate) const NIL: u32 = u32::MAX;

/// A rooted planar full binary tree.
///
/// Every node has zero or two children; left and right are distinguished.
/// Equality and hashing are structural: two trees compare equal when they
/// have the same shape, whatever their internal node numbering.
#[derive(Clone, Debug)]
pub struct BinaryTree {
    children: Vec<[u32; 2]>,
    parent: Vec<u32>,
    root: u32,
    leaf_count: usize,
}

impl BinaryTree {
    /// The single-leaf tree.
    pub fn leaf() -> Self {
        BinaryTree {
            children: vec![[NIL, NIL]],
            parent: vec![NIL],
            root: 0,
            leaf_count: 1,
        }
    }

    /// A new tree whose root has `left` and `right` as its subtrees.
    pub fn join(left: &BinaryTree, right: &BinaryTree) -> Self {
        let mut code = Vec::with_capacity(left.node_count() + right.node_count() + 1);
        code.push(true);
        code.extend(left.shape_code());
        code.extend(right.shape_code());
        Self::from_shape_code(&code).expect("joined codes are well formed")
    }

    /// Builds a tree from per-node child links, validating every structural
    /// invariant (full, acyclic, single root, consistent links).
    pub fn from_links(
        left: &[Option<usize>],
        right: &[Option<usize>],
        root: usize,
    ) -> Result<Self> {
        let count = left.len();
        if right.len() != count {
            return Err(Error::Domain(
                "left/right link arrays differ in length".into(),
            ));
        }
        if count == 0 || count >= NIL as usize {
            return Err(Error::Domain(format!("invalid node count {count}")));
        }
        if root >= count {
            return Err(Error::Domain(format!("root {root} out of range")));
        }
        let mut children = Vec::with_capacity(count);
        let mut parent = vec![NIL; count];
        let mut leaves = 0usize;
        for i in 0..count {
            match (left[i], right[i]) {
                (None, None) => {
                    children.push([NIL, NIL]);
                    leaves += 1;
                }
                (Some(l), Some(r)) => {
                    for c in [l, r] {
                        if c >= count {
                            return Err(Error::Domain(format!("child {c} out of range")));
                        }
                        if c == root || parent[c] != NIL {
                            return Err(Error::Domain(format!("node {c} has two parents")));
                        }
                        parent[c] = i as u32;
                    }
                    if l == r {
                        return Err(Error::Domain(format!("node {i} repeats a child")));
                    }
                    children.push([l as u32, r as u32]);
                }
                _ => {
                    return Err(Error::Domain(format!(
                        "node {i} has exactly one child (tree must be full)"
                    )))
                }
            }
        }
        if count != 2 * leaves - 1 {
            return Err(Error::Domain("node count must equal 2n - 1".into()));
        }
        let tree = BinaryTree {
            children,
            parent,
            root: root as u32,
            leaf_count: leaves,
        };
        // Every node must be reachable from the root (rules out detached cycles).
        if tree.bfs_order().len() != count {
            return Err(Error::Domain("tree is not connected".into()));
        }
        Ok(tree)
    }

    /// Builds a tree from its preorder shape code (`true` = internal node).
    pub fn from_shape_code(code: &[bool]) -> Result<Self> {
        let count = code.len();
        if count == 0 || count.is_multiple_of(2) {
            return Err(Error::Domain(format!("shape code of length {count}")));
        }
        let mut children = vec![[NIL, NIL]; count];
        let mut parent = vec![NIL; count];
        // (node, number of children already attached)
        let mut stack: Vec<(u32, u8)> = Vec::new();
        for (i, &internal) in code.iter().enumerate() {
            if i > 0 {
                let Some(top) = stack.last_mut() else {
                    return Err(Error::Domain("shape code has trailing nodes".into()));
                };
                let (p, seen) = *top;
                children[p as usize][seen as usize] = i as u32;
                parent[i] = p;
                top.1 += 1;
                if top.1 == 2 {
                    stack.pop();
                }
            }
            if internal {
                stack.push((i as u32, 0));
            }
        }
        if !stack.is_empty() {
            return Err(Error::Domain(
                "shape code ends inside an internal node".into(),
            ));
        }
        Ok(BinaryTree {
            children,
            parent,
            root: 0,
            leaf_count: count.div_ceil(2),
        })
    }

    pub(crate) fn from_raw(children: Vec<[u32; 2]>, parent: Vec<u32>, root: u32) -> Self {
        let leaf_count = children.len().div_ceil(2);
        BinaryTree {
            children,
            parent,
            root,
            leaf_count,
        }
    }

    pub fn node_count(&self) -> usize {
        self.children.len()
    }

    /// Number of leaves `n`.
    pub fn leaf_count(&self) -> usize {
        self.leaf_count
    }

    pub fn root(&self) -> usize {
        self.root as usize
    }

    pub fn left(&self, node: usize) -> Option<usize> {
        link(self.children[node][0])
    }

    pub fn right(&self, node: usize) -> Option<usize> {
        link(self.children[node][1])
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        link(self.parent[node])
    }

    pub fn is_leaf(&self, node: usize) -> bool {
        self.children[node][0] == NIL
    }

    pub(crate) fn raw_children(&self) -> &[[u32; 2]] {
        &self.children
    }

    pub(crate) fn raw_parent(&self) -> &[u32] {
        &self.parent
    }

    /// Node indices in breadth-first order; every parent precedes its children.
    pub fn bfs_order(&self) -> Vec<u32> {
        let mut order = Vec::with_capacity(self.node_count());
        order.push(self.root);
        let mut head = 0;
        while head < order.len() {
            let [l, r] = self.children[order[head] as usize];
            if l != NIL {
                order.push(l);
                order.push(r);
            }
            head += 1;
        }
        order
    }

    /// Preorder shape code: `true` for internal nodes, `false` for leaves.
    pub fn shape_code(&self) -> Vec<bool> {
        let mut code = Vec::with_capacity(self.node_count());
        let mut stack = vec![self.root];
        while let Some(node) = stack.pop() {
            let [l, r] = self.children[node as usize];
            if l == NIL {
                code.push(false);
            } else {
                code.push(true);
                stack.push(r);
                stack.push(l);
            }
        }
        code
    }

    /// The left/right mirror image.
    pub fn mirror(&self) -> Self {
        let children = self.children.iter().map(|&[l, r]| [r, l]).collect();
        BinaryTree {
            children,
            parent: self.parent.clone(),
            root: self.root,
            leaf_count: self.leaf_count,
        }
    }
}

fn link(raw: u32) -> Option<usize> {
    (raw != NIL).then_some(raw as usize)
}

impl PartialEq for BinaryTree {
    fn eq(&self, other: &Self) -> bool {
        self.node_count() == other.node_count() && self.shape_code() == other.shape_code()
    }
}

impl Eq for BinaryTree {}

impl Hash for BinaryTree {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.shape_code().hash(state);
    }
}

/// Balanced-parentheses encoding: a leaf is `()`, an internal node is
/// `(` + left + right + `)`.
impl fmt::Display for BinaryTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::with_capacity(2 * self.node_count() + 2);
        // Some(node) = enter node, None = close the innermost internal node
        let mut stack = vec![Some(self.root)];
        while let Some(item) = stack.pop() {
            match item {
                Some(node) => {
                    let [l, r] = self.children[node as usize];
                    if l == NIL {
                        out.push_str("()");
                    } else {
                        out.push('(');
                        stack.push(None);
                        stack.push(Some(r));
                        stack.push(Some(l));
                    }
                }
                None => out.push(')'),
            }
        }
        f.write_str(&out)
    }
}

impl FromStr for BinaryTree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bytes = s.trim().as_bytes();
        let err = |position: usize, message: &str| Error::Parse {
            position,
            message: message.to_string(),
        };
        let mut code = Vec::with_capacity(bytes.len() / 2);
        // children seen so far for each open internal node
        let mut open: Vec<u8> = Vec::new();
        let mut done = false;
        let mut i = 0;
        while i < bytes.len() {
            match bytes[i] {
                b'(' => {
                    match open.last_mut() {
                        Some(seen) if *seen < 2 => *seen += 1,
                        Some(_) => return Err(err(i, "internal node with more than two children")),
                        None if done => return Err(err(i, "trailing input after complete tree")),
                        None => done = true,
                    }
                    if bytes.get(i + 1) == Some(&b')') {
                        code.push(false);
                        i += 2;
                    } else {
                        code.push(true);
                        open.push(0);
                        i += 1;
                    }
                }
                b')' => match open.pop() {
                    Some(2) => i += 1,
                    Some(_) => return Err(err(i, "internal node with fewer than two children")),
                    None => return Err(err(i, "unbalanced ')'")),
                },
                _ => return Err(err(i, "unexpected character")),
            }
        }
        if !done || !open.is_empty() {
            return Err(err(bytes.len(), "incomplete tree"));
        }
        BinaryTree::from_shape_code(&code)
    }
}

/// `|Ω_n| = (2n−2)! / (n!(n−1)!)`, the (n−1)th Catalan number.
///
/// # Panics
/// If `n == 0`.
pub fn catalan(n: u64) -> BigUint {
    assert!(n >= 1, "catalan(n) requires n >= 1");
    // C_k = prod_{i=2..k} (k + i) / i, built with exact intermediate division.
    let k = n - 1;
    let mut c = BigUint::from(1u32);
    for i in 0..k {
        // C_{i+1} = C_i * 2(2i+1) / (i+2)
        c = c * BigUint::from(2 * (2 * i + 1)) / BigUint::from(i + 2);
    }
    c
}
