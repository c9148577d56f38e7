use std::path::Path;

use qdot_core::config::Config;

#[test]
fn shipped_configs_resolve() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let text = std::fs::read_to_string(&path).unwrap();
            let c = Config::from_toml_str(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert_eq!(Config::from_toml_str(&c.to_toml()).unwrap(), c);
            n += 1;
        }
    }
    assert!(n >= 5);
}
