//! Shipped fixture files must match what the library builds.

use std::path::PathBuf;

use rbc_regions::channel::{
    build_blackwell, build_example2, build_orthogonal_bsc, channel_to_string, load_channel, Channel,
};
use rbc_regions::polytope::{
    binning_free_system, binning_system, parse_relations, transfer_substituted_system, transferred_system,
    SymbolicIneqSystem,
};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn read(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

#[test]
fn system_files_match_builders() {
    for (name, sys) in [
        ("binning.sys", binning_system()),
        ("binning_free.sys", binning_free_system()),
        ("transfer_substituted.sys", transfer_substituted_system()),
        ("transferred.sys", transferred_system()),
    ] {
        let text = read(name);
        assert_eq!(text, sys.to_json(), "{name}");
        assert_eq!(SymbolicIneqSystem::from_json(&text).unwrap(), sys, "{name}");
    }
}

#[test]
fn channel_files_match_builders() {
    for (name, ch) in [
        ("blackwell0.json", Channel::Rbc(build_blackwell(0).unwrap())),
        ("blackwell1.json", Channel::Rbc(build_blackwell(1).unwrap())),
        ("orth_bsc.json", Channel::Orthogonal(build_orthogonal_bsc(0.05, 0.05).unwrap())),
        ("parallel_example.json", Channel::Parallel(build_example2())),
    ] {
        assert_eq!(read(name).trim_end(), channel_to_string(&ch), "{name}");
        let back = load_channel(fixture(name)).unwrap();
        assert_eq!(channel_to_string(&back), channel_to_string(&ch), "{name}");
    }
}

#[test]
fn relation_files_parse() {
    let atoms = transferred_system().atoms().to_vec();
    assert_eq!(parse_relations(&atoms, &read("transferred_relations.txt")).unwrap().len(), 7);
    assert_eq!(parse_relations(&atoms, &read("transferred_relations_strict.txt")).unwrap().len(), 8);
}
