use tropdet::fixtures;
use tropdet::Wfa;

/// The JSON fixtures shipped next to the crate match the in-code fixtures.
#[test]
fn shipped_fixtures_match() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    for (name, wfa) in [
        ("fig1", fixtures::fig1()),
        ("det1", fixtures::det1()),
        ("bounded_gap", fixtures::bounded_gap()),
    ] {
        let path = dir.join(format!("{name}.json"));
        if std::env::var_os("TROPDET_WRITE_FIXTURES").is_some() {
            std::fs::write(&path, wfa.to_json_string() + "\n").unwrap();
        }
        let text = std::fs::read_to_string(&path).unwrap();
        let loaded = Wfa::from_json_str(&text).unwrap();
        assert_eq!(loaded.to_json_string(), wfa.to_json_string(), "{name}");
    }
}
