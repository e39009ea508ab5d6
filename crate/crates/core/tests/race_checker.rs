mod common;

use scnf::model::litmus::litmus_corpus;
use scnf::model::{check_properly_synchronized, load_builtin_model};

#[test]
fn litmus_verdicts_match_brute_force() {
    for case in litmus_corpus() {
        let model = load_builtin_model(case.model).unwrap();
        let brute: Vec<_> = common::brute_force_races(&case.trace, &model)
            .into_iter()
            .map(|(a, b)| (case.label(a), case.label(b)))
            .collect();
        let mut want = case.races.clone();
        want.sort();
        let mut brute_sorted = brute.clone();
        brute_sorted.sort();
        assert_eq!(brute_sorted, want, "{}", case.name);
        let reports = check_properly_synchronized(&case.trace, &model).unwrap();
        assert_eq!(reports.iter().filter(|r| r.is_race()).count(), want.len(), "{}", case.name);
    }
}

#[test]
fn random_traces_match_brute_force() {
    common::race_checker_agrees(7, 1_000).unwrap();
}
