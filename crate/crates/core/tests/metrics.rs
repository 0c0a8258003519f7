mod support;

use proptest::prelude::*;
use qud_core::metrics::{
    attachment_from_parents, attachment_score, corpus_report, forest_stats, gap_report, stats,
    AttachmentConvention, TreeRecord,
};
use qud_core::model::DepForest;
use qud_core::DepTree;
use rand::rngs::StdRng;
use rand::SeedableRng;
use support::{oracle_gaps, oracle_stats, random_forward_tree, random_tree};

fn tree_strategy(max_n: usize) -> impl Strategy<Value = Vec<usize>> {
    (1..=max_n, any::<u64>()).prop_map(|(n, seed)| random_tree(&mut StdRng::seed_from_u64(seed), n))
}

proptest! {
    #[test]
    fn stats_match_oracle(parents in tree_strategy(10)) {
        let t = DepTree::from_parents(parents.clone()).unwrap();
        let s = stats(&t);
        let o = oracle_stats(&parents);
        prop_assert_eq!(s.height, o.height);
        prop_assert_eq!(s.norm_arc_len, o.norm_arc_len);
        prop_assert_eq!(s.prop_leaf, o.prop_leaf);
        prop_assert_eq!(s.avg_depth, o.avg_depth);
        prop_assert_eq!(s.right_branch, o.right_branch);
    }

    #[test]
    fn gaps_match_oracle(parents in tree_strategy(10)) {
        let g = gap_report(&DepTree::from_parents(parents.clone()).unwrap());
        prop_assert_eq!((g.gap_degree_max, g.gap_total), oracle_gaps(&parents));
        prop_assert!(g.gap_degree_max <= g.gap_total);
    }

    #[test]
    fn stats_stay_in_range(parents in tree_strategy(30)) {
        let n = parents.len() as f64;
        let s = stats(&DepTree::from_parents(parents).unwrap());
        prop_assert!(s.height <= n - 1.0);
        for p in [s.prop_leaf, s.right_branch, s.norm_arc_len] {
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn attachment_is_symmetric(seed in any::<u64>(), n in 2usize..20) {
        let mut rng = StdRng::seed_from_u64(seed);
        let a = random_forward_tree(&mut rng, n);
        let b = random_forward_tree(&mut rng, n);
        let ab = attachment_from_parents(&a, &b, AttachmentConvention::NonRoot).unwrap();
        let ba = attachment_from_parents(&b, &a, AttachmentConvention::NonRoot).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert_eq!(attachment_from_parents(&a, &a, AttachmentConvention::NonRoot).unwrap(), 1.0);
    }
}

#[test]
fn projective_trees_have_no_gaps() {
    let g = gap_report(&DepTree::chain(7));
    assert_eq!((g.gap_degree_max, g.gap_total), (0, 0));
    let g = gap_report(&DepTree::star(7));
    assert_eq!((g.gap_degree_max, g.gap_total), (0, 0));
}

#[test]
fn crossing_edges_gap() {
    let t = DepTree::from_parents(vec![0, 1, 1, 2]).unwrap();
    let g = gap_report(&t);
    assert_eq!((g.gap_degree_max, g.gap_total), (1, 1));
}

#[test]
fn attachment_examples() {
    let a = DepTree::from_parents(vec![0, 1, 2, 3]).unwrap();
    let b = DepTree::from_parents(vec![0, 1, 1, 3]).unwrap();
    assert!((attachment_score(&a, &b).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(attachment_score(&a, &a).unwrap(), 1.0);
    let c = DepTree::from_parents(vec![0, 1, 1, 1]).unwrap();
    let d = DepTree::from_parents(vec![2, 0, 2, 2]).unwrap();
    assert_eq!(attachment_score(&c, &d).unwrap(), 0.0);
    assert!(attachment_score(&a, &DepTree::chain(3)).is_err());
    let by_n = attachment_from_parents(
        a.parents(),
        b.parents(),
        AttachmentConvention::ArticleLength,
    )
    .unwrap();
    assert_eq!(by_n, 0.5);
}

#[test]
fn forest_components_are_averaged() {
    // 1 <- 2, and 3 <- 4 detached from the root
    let f = DepForest::from_parents(vec![0, 1, 0, 3]).unwrap();
    let fs = forest_stats(&f);
    assert_eq!(fs.components, 2);
    assert!(fs.partial);
    // each component is a chain of two
    assert_eq!(fs.stats.height, 1.0);
    assert_eq!(fs.stats.prop_leaf, 0.5);
}

#[test]
fn chain_report_row() {
    let rec = TreeRecord::from_tree("a", &DepTree::chain(5));
    let rep = corpus_report(&[rec], None, ("x", "y"), AttachmentConvention::NonRoot).unwrap();
    let tsv = rep.to_tsv();
    assert!(
        tsv.lines()
            .any(|l| l == "x\t1\t4.00\t0.20\t0.20\t2.00\t0.80\t-"),
        "{tsv}"
    );
}

#[test]
fn paired_report_needs_alignment() {
    let a = TreeRecord::from_tree("a", &DepTree::chain(4));
    let b = TreeRecord::from_tree("b", &DepTree::chain(4));
    let err = corpus_report(
        std::slice::from_ref(&a),
        Some(&[b]),
        ("x", "y"),
        AttachmentConvention::NonRoot,
    )
    .unwrap_err();
    assert!(err.to_string().contains("only in"));
    let star = TreeRecord::from_tree("a", &DepTree::star(4));
    let rep = corpus_report(
        &[a],
        Some(&[star]),
        ("x", "y"),
        AttachmentConvention::NonRoot,
    )
    .unwrap();
    assert_eq!(rep.rows[0].att_score, Some(1.0 / 3.0));
    assert_eq!(rep.rows[1].att_score, Some(1.0 / 3.0));
}
