use std::collections::HashMap;

use proptest::prelude::*;

use strahler::tree::{sample_tree_with, strahler_orders, ENUMERATION_CAP};
use strahler::{
    branch_counts, catalan, enumerate_trees, prune, sample_tree, BinaryTree, Error, TreeSeed,
};

/// Trees of every shape, not only uniform ones: deep caterpillars and
/// bushy balanced trees both appear.
fn any_tree() -> impl Strategy<Value = BinaryTree> {
    let leaf = Just(BinaryTree::leaf());
    leaf.prop_recursive(8, 256, 2, |inner| {
        (inner.clone(), inner).prop_map(|(l, r)| BinaryTree::join(&l, &r))
    })
}

/// Strahler order by structural recursion over the parenthesis string.
fn reference_order(s: &str) -> (u32, usize) {
    fn go(b: &[u8], i: usize) -> (u32, usize) {
        // b[i] == '('
        if b[i + 1] == b')' {
            return (1, i + 2);
        }
        let (l, j) = go(b, i + 1);
        let (r, k) = go(b, j);
        let o = if l == r { l + 1 } else { l.max(r) };
        (o, k + 1)
    }
    go(s.as_bytes(), 0)
}

fn cherries(t: &BinaryTree) -> u64 {
    (0..t.node_count())
        .filter(|&v| match (t.left(v), t.right(v)) {
            (Some(l), Some(r)) => t.is_leaf(l) && t.is_leaf(r),
            _ => false,
        })
        .count() as u64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn text_round_trip(t in any_tree()) {
        let s = t.to_string();
        let back: BinaryTree = s.parse().unwrap();
        prop_assert_eq!(&back, &t);
        prop_assert_eq!(back.to_string(), s);
        prop_assert_eq!(BinaryTree::from_shape_code(&t.shape_code()).unwrap(), t);
    }

    #[test]
    fn profile_invariants(t in any_tree()) {
        let n = t.leaf_count() as u64;
        let p = branch_counts(&t);
        prop_assert_eq!(t.node_count() as u64, 2 * n - 1);
        prop_assert_eq!(p.get(1), n);
        prop_assert_eq!(p.get(2), if n == 1 { 0 } else { cherries(&t) });
        let (root_order, _) = reference_order(&t.to_string());
        prop_assert_eq!(p.max_order() as u32, root_order);
        prop_assert_eq!(p.get(p.max_order()), 1);
        prop_assert!((1u64 << (p.max_order() - 1)) <= n);
        for r in 1..p.max_order() {
            // each branch of order r + 1 is fed by at least two of order r
            prop_assert!(2 * p.get(r + 1) <= p.get(r));
        }
        prop_assert_eq!(p.get(p.max_order() + 1), 0);
        prop_assert_eq!(branch_counts(&t.mirror()), p);
    }

    #[test]
    fn node_orders_follow_the_rule(t in any_tree()) {
        let o = strahler_orders(&t);
        for v in 0..t.node_count() {
            match (t.left(v), t.right(v)) {
                (Some(l), Some(r)) => {
                    let (a, b) = (o[l], o[r]);
                    prop_assert_eq!(o[v], if a == b { a + 1 } else { a.max(b) });
                }
                _ => prop_assert_eq!(o[v], 1),
            }
        }
    }

    #[test]
    fn pruning_shifts_profile(t in any_tree()) {
        let p = branch_counts(&t);
        match prune(&t) {
            None => prop_assert_eq!(t.leaf_count(), 1),
            Some(q) => {
                prop_assert_eq!(q.leaf_count() as u64, p.get(2));
                prop_assert_eq!(branch_counts(&q).counts().to_vec(), p.counts()[1..].to_vec());
            }
        }
    }

    #[test]
    fn sampled_trees_are_valid(n in 1usize..400, seed: u64, stream in 0u64..8) {
        let t = sample_tree(n, TreeSeed::new(seed, stream));
        prop_assert_eq!(t.leaf_count(), n);
        prop_assert_eq!(&t, &sample_tree(n, TreeSeed::new(seed, stream)));
        let back: BinaryTree = t.to_string().parse().unwrap();
        prop_assert_eq!(back, t);
    }
}

#[test]
fn enumeration_is_exhaustive_and_distinct() {
    for n in 1..=10 {
        let trees: Vec<BinaryTree> = enumerate_trees(n).unwrap().collect();
        let distinct: std::collections::HashSet<_> = trees.iter().cloned().collect();
        assert_eq!(distinct.len(), trees.len());
        assert_eq!(catalan(n as u64), (trees.len() as u64).into());
        assert!(trees.iter().all(|t| t.leaf_count() == n));
    }
    assert!(matches!(enumerate_trees(0), Err(Error::Domain(_))));
    assert!(matches!(
        enumerate_trees(ENUMERATION_CAP + 1),
        Err(Error::Resource { .. })
    ));
}

#[test]
fn three_leaf_profiles() {
    let trees: Vec<_> = enumerate_trees(3).unwrap().collect();
    assert_eq!(trees.len(), 2);
    for t in &trees {
        assert_eq!(branch_counts(t).counts(), &[3, 1]);
    }
    assert_eq!(enumerate_trees(2).unwrap().count(), 1);
}

/// Pearson statistic of Rémy samples against the uniform law on Ω_n.
fn chi_square(n: usize, samples: u64, seed: u64) -> (f64, usize) {
    let shapes: Vec<String> = enumerate_trees(n).unwrap().map(|t| t.to_string()).collect();
    let mut counts: HashMap<String, u64> = shapes.iter().map(|s| (s.clone(), 0)).collect();
    let mut rng = TreeSeed::new(seed, n as u64).rng();
    for _ in 0..samples {
        *counts
            .get_mut(&sample_tree_with(n, &mut rng).to_string())
            .expect("known shape") += 1;
    }
    let expected = samples as f64 / shapes.len() as f64;
    let stat = counts
        .values()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    (stat, shapes.len() - 1)
}

#[test]
fn sampler_is_uniform() {
    // upper 0.1% points of the chi-square law with 1, 4 and 13 degrees of freedom
    let critical = HashMap::from([(1usize, 10.828), (4, 18.467), (13, 34.528)]);
    for n in 3..=5 {
        let (stat, df) = chi_square(n, 100_000, 7);
        assert!(
            stat < critical[&df],
            "n = {n}: chi-square {stat:.2} with {df} df"
        );
    }
}

#[test]
fn parse_errors() {
    for bad in [
        "", "(", ")", "()()", "(())", "((()())", "(()()())", "(x)", "(()())()",
    ] {
        assert!(
            matches!(bad.parse::<BinaryTree>(), Err(Error::Parse { .. })),
            "accepted {bad:?}"
        );
    }
    assert!(BinaryTree::from_shape_code(&[true, false]).is_err());
    assert!(BinaryTree::from_shape_code(&[false, false, false]).is_err());
}

#[test]
fn link_validation() {
    let ok = BinaryTree::from_links(&[Some(1), None, None], &[Some(2), None, None], 0).unwrap();
    assert_eq!(ok.to_string(), "(()())");
    // one child only
    assert!(BinaryTree::from_links(&[Some(1), None], &[None, None], 0).is_err());
    // shared child
    assert!(BinaryTree::from_links(&[Some(1), None, None], &[Some(1), None, None], 0).is_err());
    // root used as a child
    assert!(BinaryTree::from_links(&[Some(0), None, None], &[Some(2), None, None], 0).is_err());
    // detached cycle
    let left = [None, Some(2), Some(1)];
    let right = [None, Some(0), Some(0)];
    assert!(BinaryTree::from_links(&left, &right, 0).is_err());
}

#[test]
fn pruning_edge_cases() {
    assert!(prune(&BinaryTree::leaf()).is_none());
    let cherry: BinaryTree = "(()())".parse().unwrap();
    assert_eq!(prune(&cherry).unwrap(), BinaryTree::leaf());
}
