//! Object-list sampling checked with frequency-count oracles.

use std::collections::BTreeMap;

use curator::pipeline::sampling::{sample_object_lists, CategoryTable, SamplingStrategy};

fn frequencies(table: &CategoryTable, strategy: SamplingStrategy, draws: usize, seed: u64) -> BTreeMap<String, f64> {
    let lists = sample_object_lists(table, strategy, draws, (1, 1), seed).unwrap();
    let mut counts: BTreeMap<String, f64> = BTreeMap::new();
    for l in &lists {
        *counts.entry(l.entries()[0].clone()).or_default() += 1.0;
    }
    counts.values_mut().for_each(|c| *c /= draws as f64);
    counts
}

#[test]
fn uniform_within_two_percent() {
    let table = CategoryTable::from_pairs([("a", 500.0), ("b", 20.0), ("c", 1.0)]).unwrap();
    let f = frequencies(&table, SamplingStrategy::Uniform, 100_000, 1);
    assert_eq!(f.len(), 3);
    for (c, p) in &f {
        assert!((p - 1.0 / 3.0).abs() < 0.02, "{c}: {p}");
    }
    // chi-square with 2 degrees of freedom; 13.8 is the 0.999 quantile
    let n = 100_000.0;
    let chi: f64 = f.values().map(|p| (p * n - n / 3.0).powi(2) / (n / 3.0)).sum();
    assert!(chi < 13.8, "chi-square {chi}");
}

#[test]
fn proportional_follows_weights() {
    let table = CategoryTable::from_pairs([("a", 3.0), ("b", 1.0)]).unwrap();
    let f = frequencies(&table, SamplingStrategy::Proportional, 100_000, 2);
    assert!((f["a"] - 0.75).abs() < 0.01, "{f:?}");
}

#[test]
fn inverse_frequency_boosts_rare() {
    let table = CategoryTable::from_pairs([("a", 90.0), ("b", 10.0)]).unwrap();
    let f = frequencies(&table, SamplingStrategy::InverseFrequency, 100_000, 3);
    let ratio = f["b"] / f["a"];
    assert!((ratio - 9.0).abs() < 0.5, "ratio {ratio}");
}

#[test]
fn lengths_cover_the_range_uniformly() {
    let table = CategoryTable::from_pairs([("a", 1.0), ("b", 1.0)]).unwrap();
    let lists = sample_object_lists(&table, SamplingStrategy::Uniform, 60_000, (2, 6), 4).unwrap();
    let mut by_len = [0usize; 7];
    lists.iter().for_each(|l| by_len[l.len()] += 1);
    assert_eq!(by_len[0] + by_len[1], 0);
    for n in &by_len[2..] {
        assert!((*n as f64 / 60_000.0 - 0.2).abs() < 0.01, "{by_len:?}");
    }
}

#[test]
fn table_file_forms() {
    let dir = tempfile::tempdir().unwrap();
    let map = dir.path().join("map.json");
    std::fs::write(&map, r#"{"dog": 3, "cat": 1}"#).unwrap();
    let list = dir.path().join("list.json");
    std::fs::write(&list, r#"[{"category": "dog", "weight": 3}, {"category": "cat", "weight": 1}]"#).unwrap();
    let a = CategoryTable::load(&map).unwrap();
    let b = CategoryTable::load(&list).unwrap();
    assert_eq!(a.categories().len(), 2);
    assert_eq!(b.categories(), vec!["dog", "cat"]);
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, "[]").unwrap();
    assert!(CategoryTable::load(&empty).is_err());
}
