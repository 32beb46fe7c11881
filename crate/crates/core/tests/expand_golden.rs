use std::path::PathBuf;

use mobiplan_core::expand::{expand_all, ExpansionOptions};
use mobiplan_core::pddl::{parse_domain, schema_difference};

fn data(rel: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn dual_arm_door_expansion_matches_reference_listing() {
    let base = parse_domain(&data("domains/base.pddl")).unwrap();
    let reference = parse_domain(&data("domains/expanded_reference.pddl")).unwrap();
    let (expanded, _) = expand_all(&base, &ExpansionOptions::default()).unwrap();
    for want in &reference.actions {
        let got = expanded.action(want.name.as_str()).unwrap_or_else(|| panic!("missing {}", want.name));
        assert_eq!(schema_difference(got, want), None);
    }
    assert_eq!(reference.actions.len(), 24);
}
