use super::BinaryTree;
use crate::error::{Error, Result};

/// Largest leaf count accepted by [`enumerate_trees`].
pub const ENUMERATION_CAP: usize = 14;

/// Every planar full binary tree with `n` leaves, exactly once each.
///
/// Emission order is fixed: by left-subtree leaf count ascending, then the
/// left subtree in its own enumeration order, then the right subtree.
pub fn enumerate_trees(n: usize) -> Result<TreeEnumeration> {
    if n == 0 {
        return Err(Error::Domain("enumeration needs n >= 1".into()));
    }
    if n > ENUMERATION_CAP {
        return Err(Error::Resource {
            what: "enumeration leaf count",
            requested: n as u64,
            cap: ENUMERATION_CAP as u64,
        });
    }
    // codes[k] holds the concatenated preorder shape codes of all trees with
    // k leaves; each code has length 2k - 1.
    let mut codes: Vec<Vec<bool>> = vec![Vec::new(), vec![false]];
    for k in 2..=n {
        let mut flat = Vec::new();
        for l in 1..k {
            let (ll, rl) = (2 * l - 1, 2 * (k - l) - 1);
            for a in codes[l].chunks_exact(ll) {
                for b in codes[k - l].chunks_exact(rl) {
                    flat.push(true);
                    flat.extend_from_slice(a);
                    flat.extend_from_slice(b);
                }
            }
        }
        codes.push(flat);
    }
    let flat = codes.swap_remove(n);
    Ok(TreeEnumeration {
        flat,
        width: 2 * n - 1,
        next: 0,
    })
}

/// Iterator returned by [`enumerate_trees`].
pub struct TreeEnumeration {
    flat: Vec<bool>,
    width: usize,
    next: usize,
}

impl Iterator for TreeEnumeration {
    type Item = BinaryTree;

    fn next(&mut self) -> Option<BinaryTree> {
        let start = self.next * self.width;
        let code = self.flat.get(start..start + self.width)?;
        self.next += 1;
        Some(BinaryTree::from_shape_code(code).expect("enumerated codes are well formed"))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.flat.len() / self.width - self.next;
        (left, Some(left))
    }
}

impl ExactSizeIterator for TreeEnumeration {}
