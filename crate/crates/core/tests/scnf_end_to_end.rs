mod common;

use scnf::layers::LayerKind;

#[test]
fn commit_layer_is_sequentially_consistent_for_race_free_programs() {
    common::scnf_holds(1, LayerKind::Commit, 100).unwrap();
}

#[test]
fn session_layer_is_sequentially_consistent_for_race_free_programs() {
    common::scnf_holds(2, LayerKind::Session, 100).unwrap();
}
