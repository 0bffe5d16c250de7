//! Regenerates the committed fixture tree under `testdata/`. Run manually
//! after changing the corpus definitions:
//!
//! ```text
//! cargo test -p anthemetrics --test fixture_gen -- --ignored
//! ```

mod common;

use std::fs;

#[test]
#[ignore = "writes into testdata/; run explicitly to regenerate fixtures"]
fn regenerate_testdata() {
    let root = common::testdata_dir();
    common::write_corpus_tree(&root);

    let golden = serde_json::to_string_pretty(&common::expected_features())
        .expect("golden features serialize");
    fs::create_dir_all(root.join("golden")).expect("create golden dir");
    fs::write(root.join("golden").join("features.json"), golden + "\n")
        .expect("write golden features");
}

/// The committed tree must stay in sync with the in-code definitions.
#[test]
fn committed_fixtures_match_definitions() {
    let root = common::testdata_dir();
    if !root.exists() {
        panic!("testdata/ missing; run the ignored regenerate_testdata test");
    }
    for spec in common::corpus_specs() {
        let path = root.join("corpus").join(format!("{}.mid", spec.country));
        let on_disk = fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(
            on_disk,
            common::build_bytes(&spec),
            "{} is stale; regenerate testdata",
            path.display()
        );
    }
    assert_eq!(
        fs::read_to_string(root.join("indices/prosperity.csv")).unwrap(),
        common::PROSPERITY_CSV
    );
    assert_eq!(
        fs::read_to_string(root.join("indices/serenity.csv")).unwrap(),
        common::SERENITY_CSV
    );
    assert_eq!(
        fs::read_to_string(root.join("config.toml")).unwrap(),
        common::CONFIG_TOML
    );
}
