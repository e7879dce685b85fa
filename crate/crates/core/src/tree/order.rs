use super::{BinaryTree, NIL};

/// Branch counts `(S_1, …, S_R)` of one tree, indexed by Strahler order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StrahlerProfile {
    counts: Vec<u64>,
    leaf_count: u64,
}

impl StrahlerProfile {
    pub fn new(counts: Vec<u64>, leaf_count: u64) -> Self {
        StrahlerProfile { counts, leaf_count }
    }

    /// `S_r`; zero for orders above the root's order (and for `r == 0`).
    pub fn get(&self, r: usize) -> u64 {
        if r == 0 {
            return 0;
        }
        self.counts.get(r - 1).copied().unwrap_or(0)
    }

    /// The order `R` of the root.
    pub fn max_order(&self) -> usize {
        self.counts.len()
    }

    /// Counts for orders `1..=R`.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn leaf_count(&self) -> u64 {
        self.leaf_count
    }
}

/// Strahler order of every node, indexed by node.
pub fn strahler_orders(tree: &BinaryTree) -> Vec<u32> {
    let children = tree.raw_children();
    let mut order = vec![1u32; tree.node_count()];
    for &v in tree.bfs_order().iter().rev() {
        let [l, r] = children[v as usize];
        if l != NIL {
            let (a, b) = (order[l as usize], order[r as usize]);
            order[v as usize] = if a == b { a + 1 } else { a.max(b) };
        }
    }
    order
}

/// Number of maximal same-order paths per order.
///
/// A node of order `r` starts a branch when it is the root or its parent
/// has a strictly larger order.
pub fn branch_counts(tree: &BinaryTree) -> StrahlerProfile {
    let order = strahler_orders(tree);
    let parent = tree.raw_parent();
    let top = order[tree.root()] as usize;
    let mut counts = vec![0u64; top];
    for (v, &o) in order.iter().enumerate() {
        let p = parent[v];
        if p == NIL || order[p as usize] > o {
            counts[o as usize - 1] += 1;
        }
    }
    StrahlerProfile::new(counts, tree.leaf_count() as u64)
}

/// Removes every leaf and contracts the resulting unary chains.
///
/// The result has `S_2` leaves and its profile is the input profile shifted
/// down by one order. The single-leaf tree prunes to nothing (`None`); a
/// 2-leaf cherry prunes to the single-leaf tree.
pub fn prune(tree: &BinaryTree) -> Option<BinaryTree> {
    let children = tree.raw_children();
    let root = tree.root();
    if tree.is_leaf(root) {
        return None;
    }

    // What each old subtree turns into after pruning, computed bottom-up.
    #[derive(Clone, Copy)]
    enum Image {
        Gone,
        Leaf,
        Unary(u32),
        Binary,
    }
    let mut image = vec![Image::Gone; tree.node_count()];
    let order = tree.bfs_order();
    for &v in order.iter().rev() {
        let [l, r] = children[v as usize];
        if l == NIL {
            continue;
        }
        let lg = matches!(image[l as usize], Image::Gone);
        let rg = matches!(image[r as usize], Image::Gone);
        image[v as usize] = match (lg, rg) {
            (true, true) => Image::Leaf,
            (true, false) => Image::Unary(r),
            (false, true) => Image::Unary(l),
            (false, false) => Image::Binary,
        };
    }
    // Follow unary chains down to the node that represents a subtree.
    let resolve = |mut v: u32| loop {
        match image[v as usize] {
            Image::Unary(c) => v = c,
            _ => return v,
        }
    };

    let mut new_children: Vec<[u32; 2]> = Vec::new();
    let mut new_parent: Vec<u32> = Vec::new();
    // (old representative, new parent, slot)
    let mut stack = vec![(resolve(root as u32), NIL, 0usize)];
    while let Some((old, np, slot)) = stack.pop() {
        let id = new_children.len() as u32;
        new_children.push([NIL, NIL]);
        new_parent.push(np);
        if np != NIL {
            new_children[np as usize][slot] = id;
        }
        if let Image::Binary = image[old as usize] {
            let [l, r] = children[old as usize];
            stack.push((resolve(r), id, 1));
            stack.push((resolve(l), id, 0));
        }
    }
    Some(BinaryTree::from_raw(new_children, new_parent, 0))
}
