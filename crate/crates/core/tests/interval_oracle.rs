mod common;

#[test]
fn global_tree_matches_byte_oracle() {
    for seed in 0..2_000 {
        common::global_tree_sequence(seed).unwrap();
    }
}

#[test]
fn local_tree_matches_byte_oracle() {
    for seed in 0..2_000 {
        common::local_tree_sequence(seed).unwrap();
    }
}
