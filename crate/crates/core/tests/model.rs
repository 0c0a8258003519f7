mod support;

use proptest::prelude::*;
use qud_core::model::validate_tree;
use qud_core::{QudEntry, QudTree, Violation};
use rand::rngs::StdRng;
use rand::SeedableRng;
use support::{doc, random_forward_tree};

fn qud_tree(parents: &[usize]) -> QudTree {
    let entries = (2..=parents.len())
        .map(|i| QudEntry {
            answer: i,
            anchor: parents[i - 1],
            question: format!("What about {i}?"),
        })
        .collect();
    QudTree::new("d", parents.len(), entries)
}

fn forward(max_n: usize) -> impl Strategy<Value = Vec<usize>> {
    (1..=max_n, any::<u64>())
        .prop_map(|(n, s)| random_forward_tree(&mut StdRng::seed_from_u64(s), n))
}

proptest! {
    #[test]
    fn well_formed_trees_validate(parents in forward(25)) {
        let t = qud_tree(&parents);
        prop_assert!(validate_tree(&t, &doc("d", parents.len())).is_empty());
        let dep = t.to_dep_tree().unwrap();
        prop_assert_eq!(dep.parents(), parents.as_slice());
    }

    #[test]
    fn late_anchor_is_caught(parents in forward(25), pick in any::<prop::sample::Index>(), bump in 0usize..5) {
        prop_assume!(parents.len() >= 2);
        let mut t = qud_tree(&parents);
        let k = pick.index(t.entries.len());
        let answer = t.entries[k].answer;
        t.entries[k].anchor = answer + bump;
        let v = t.validate();
        let want = Violation::AnchorNotEarlier { index: answer, anchor: answer + bump };
        prop_assert!(v.contains(&want));
        prop_assert!(t.to_dep_tree().is_err());
    }

    #[test]
    fn dropped_entry_is_missing(parents in forward(25), pick in any::<prop::sample::Index>()) {
        prop_assume!(parents.len() >= 2);
        let mut t = qud_tree(&parents);
        let k = pick.index(t.entries.len());
        let gone = t.entries.remove(k).answer;
        prop_assert_eq!(t.validate(), vec![Violation::MissingEntry { index: gone }]);
        prop_assert!(t.is_partial());
        let forest = t.to_dep_forest().unwrap();
        prop_assert!(!forest.is_tree());
    }

    #[test]
    fn duplicate_entry_is_caught(parents in forward(25), pick in any::<prop::sample::Index>()) {
        prop_assume!(parents.len() >= 2);
        let mut t = qud_tree(&parents);
        let e = t.entries[pick.index(t.entries.len())].clone();
        let index = e.answer;
        t.entries.push(e);
        let want = Violation::DuplicateEntry { index };
        prop_assert!(t.validate().contains(&want));
    }

    #[test]
    fn projection_is_injective(a in forward(12), seed in any::<u64>()) {
        let b = random_forward_tree(&mut StdRng::seed_from_u64(seed), a.len());
        let ta = qud_tree(&a).to_dep_tree().unwrap();
        let tb = qud_tree(&b).to_dep_tree().unwrap();
        prop_assert_eq!(a == b, ta == tb);
    }

    #[test]
    fn serde_round_trip(parents in forward(15)) {
        let t = qud_tree(&parents);
        let json = serde_json::to_string(&t).unwrap();
        prop_assert_eq!(serde_json::from_str::<QudTree>(&json).unwrap(), t);
    }
}

#[test]
fn document_mismatch() {
    let t = qud_tree(&[0, 1, 2]);
    let v = validate_tree(&t, &doc("other", 4));
    assert!(v
        .iter()
        .any(|v| matches!(v, Violation::ArticleMismatch { .. })));
    assert!(v.iter().any(|v| matches!(
        v,
        Violation::SizeMismatch {
            tree: 3,
            document: 4
        }
    )));
}
