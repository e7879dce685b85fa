use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BinaryTree, NIL};

/// Seed for reproducible sampling.
///
/// The generator is ChaCha8 (`rand_chacha`), keyed by `seed` through
/// `seed_from_u64` and split into independent streams with `set_stream`.
/// Identical `(seed, stream)` pairs produce identical trees on every platform.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TreeSeed {
    pub seed: u64,
    pub stream: u64,
}

impl TreeSeed {
    pub fn new(seed: u64, stream: u64) -> Self {
        TreeSeed { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Draws a tree uniformly from the `n`-leaf planar full binary trees.
pub fn sample_tree(n: usize, seed: TreeSeed) -> BinaryTree {
    sample_tree_with(n, &mut seed.rng())
}

/// Rémy's growth: starting from one leaf, repeatedly pick one of the
/// `2k − 1` nodes and a side uniformly, and graft a new leaf there.
///
/// # Panics
/// If `n == 0` or `n > 2^30`.
pub fn sample_tree_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> BinaryTree {
    assert!(n >= 1, "sample_tree requires n >= 1");
    assert!(n <= 1 << 30, "tree too large for u32 indices");
    let nodes = 2 * n - 1;
    let mut children = Vec::with_capacity(nodes);
    let mut parent = Vec::with_capacity(nodes);
    let root = grow_into(n, rng, &mut children, &mut parent);
    BinaryTree::from_raw(children, parent, root)
}

/// Rémy growth into caller-owned buffers; returns the root index.
pub(crate) fn grow_into<R: Rng + ?Sized>(
    n: usize,
    rng: &mut R,
    children: &mut Vec<[u32; 2]>,
    parent: &mut Vec<u32>,
) -> u32 {
    children.clear();
    parent.clear();
    children.push([NIL, NIL]);
    parent.push(NIL);
    let mut root = 0u32;
    for k in 1..n as u32 {
        // 4k − 2 < 2^32 because n ≤ 2^30
        let pick = rng.gen_range(0..4 * k - 2);
        let x = pick >> 1;
        let v = children.len() as u32;
        let leaf = v + 1;
        children.push(if pick & 1 == 0 { [x, leaf] } else { [leaf, x] });
        let p = parent[x as usize];
        parent.push(p);
        children.push([NIL, NIL]);
        parent.push(v);
        if p == NIL {
            root = v;
        } else {
            let slot = &mut children[p as usize];
            if slot[0] == x {
                slot[0] = v;
            } else {
                slot[1] = v;
            }
        }
        parent[x as usize] = v;
    }
    root
}
