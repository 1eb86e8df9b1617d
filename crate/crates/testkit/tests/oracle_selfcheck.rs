use text2sql_core::ast::{normalize_ast, parse_sql};
use text2sql_core::treedist::tree_edit_distance;
use text2sql_testkit::trees::{brute_force_ted, random_tree, OpCounts};

#[test]
fn dp_matches_brute_force_on_small_trees() {
    for seed in 0..200u64 {
        let n1 = 1 + (seed as usize % 6);
        let n2 = 1 + ((seed as usize / 6) % 6);
        let a = random_tree(n1, seed * 2 + 1);
        let b = random_tree(n2, seed * 2 + 2);
        let dp = tree_edit_distance(&a, &b);
        let (bf, _) = brute_force_ted(&a, &b);
        assert_eq!(dp, bf, "seed {seed}: {a:?} vs {b:?}");
    }
}

#[test]
fn grouped_having_vs_except_pair_distance_is_ten() {
    let a = normalize_ast(
        &parse_sql(
            "SELECT creation FROM department GROUP BY creation HAVING count(*) > 1 ORDER BY creation LIMIT 3",
        )
        .unwrap(),
    );
    let b = normalize_ast(
        &parse_sql(
            "SELECT min(age), max(age), sum(age) FROM head EXCEPT SELECT creation, name, budget FROM department GROUP BY creation ORDER BY 1 LIMIT 3",
        )
        .unwrap(),
    );
    assert_eq!(a.node_count(), 9);
    assert_eq!(b.node_count(), 12);
    assert_eq!(tree_edit_distance(&a, &b), 10);
    let (bf, breakdowns) = brute_force_ted(&a, &b);
    assert_eq!(bf, 10);
    eprintln!("optimal breakdowns: {breakdowns:?}");
    assert!(breakdowns.contains(&OpCounts {
        deletions: 3,
        substitutions: 1,
        insertions: 6
    }));
}
