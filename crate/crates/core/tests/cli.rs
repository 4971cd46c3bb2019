use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rbc_regions::cloud::RegionCloud;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name).display().to_string()
}

fn rbc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rbc")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn out_path(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

#[test]
fn every_subcommand_has_help() {
    for sub in [
        "region",
        "blackwell",
        "gaussian",
        "parallel-relay",
        "subchannel-caps",
        "fme",
        "compare",
        "minkowski",
        "sim",
        "check-structure",
    ] {
        let o = rbc(&[sub, "--help"]);
        assert_eq!(code(&o), 0, "{sub}");
        assert!(stdout(&o).contains("--out"), "{sub}");
    }
    assert_eq!(code(&rbc(&["--help"])), 0);
    assert_eq!(code(&rbc(&[])), 2);
    assert_eq!(code(&rbc(&["frobnicate"])), 2);
}

#[test]
fn region_writes_a_frontier() {
    let o = rbc(&["region", "--theorem", "r3", "--channel", &fixture("blackwell0.json"), "--card-t", "2", "--budget", "60", "--seed", "7"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let cloud = RegionCloud::from_csv(&stdout(&o)).unwrap();
    assert!(!cloud.is_empty());
    assert_eq!(cloud.meta("kind"), Some("inner-approx"));
    assert_eq!(cloud.meta("seed"), Some("7"));
}

#[test]
fn outer_region_is_labelled() {
    let o = rbc(&["region", "--theorem", "outer", "--channel", &fixture("blackwell0.json"), "--budget", "20", "--seed", "1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).lines().any(|l| l == "# kind=outer-approx"));
}

#[test]
fn region_input_errors_exit_2() {
    let bw = fixture("blackwell0.json");
    let o = rbc(&["region", "--theorem", "r9", "--channel", &bw, "--seed", "1"]);
    assert_eq!(code(&o), 2);
    assert_eq!(stderr(&o).lines().count(), 1);
    assert_eq!(code(&rbc(&["region", "--theorem", "r3", "--channel", &bw])), 2);
    assert_eq!(code(&rbc(&["region", "--theorem", "orthogonal", "--channel", &bw, "--seed", "1"])), 2);
    assert_eq!(code(&rbc(&["region", "--theorem", "r3", "--channel", "/nonexistent.json", "--seed", "1"])), 2);
    assert_eq!(code(&rbc(&["region", "--theorem", "r3", "--channel", &bw, "--seed", "1", "--budget", "0"])), 2);
}

#[test]
fn blackwell_frontier_and_monotonicity() {
    let dir = tempfile::tempdir().unwrap();
    let grid = "30";
    let mut paths = Vec::new();
    for r in ["0", "0.5", "1"] {
        let p = out_path(dir.path(), &format!("bw{r}.csv"));
        assert_eq!(code(&rbc(&["blackwell", "--r", r, "--grid", grid, "-o", &p])), 0);
        paths.push(p);
    }
    let c0 = RegionCloud::load(Path::new(&paths[0])).unwrap();
    let best = c0.support(&[1.0, 1.0, 1.0]);
    assert!((best - 3f64.log2()).abs() <= 1.0 / 30.0, "{best}");
    for w in paths.windows(2) {
        let o = rbc(&["compare", "--outer", &w[1], "--inner", &w[0]]);
        assert_eq!(code(&o), 0);
        assert!(stdout(&o).starts_with("dominates: true"), "{}", stdout(&o));
    }
    let o = rbc(&["compare", "--outer", &paths[0], "--inner", &paths[2]]);
    assert!(stdout(&o).starts_with("dominates: false"));
    assert_eq!(code(&rbc(&["blackwell", "--grid", "1"])), 2);
    assert_eq!(code(&rbc(&["blackwell", "--r", "-1"])), 2);
}

#[test]
fn gaussian_and_parallel_commands() {
    let o = rbc(&["gaussian", "--p", "1", "--p1", "1", "--n1", "1", "--n2", "1", "--grid", "10"]);
    assert_eq!(code(&o), 0);
    assert!(!RegionCloud::from_csv(&stdout(&o)).unwrap().is_empty());
    let o = rbc(&["parallel-relay", "--channel", &fixture("parallel_example.json"), "--grid", "4"]);
    assert_eq!(code(&o), 0);
    let cap: f64 = stdout(&o).lines().next().unwrap().strip_prefix("capacity: ").unwrap().parse().unwrap();
    assert!((cap - 1.0).abs() < 1e-9);
    let o = rbc(&["subchannel-caps", "--grid", "4"]);
    assert!(stdout(&o).contains("sum: "), "{}", stdout(&o));
    assert_eq!(code(&rbc(&["parallel-relay", "--channel", &fixture("blackwell0.json")])), 2);
}

#[test]
fn fme_checks() {
    let o = rbc(&[
        "fme",
        "--system",
        &fixture("binning.sys"),
        "--eliminate",
        "R1',R2'",
        "--check-against",
        &fixture("binning_free.sys"),
        "--seed",
        "3",
    ]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("equivalence: pass"), "{}", stderr(&o));
    let o = rbc(&[
        "fme",
        "--system",
        &fixture("transfer_substituted.sys"),
        "--eliminate",
        "D1,D2",
        "--check-against",
        &fixture("transferred.sys"),
        "--relations",
        &fixture("transferred_relations_strict.txt"),
        "--seed",
        "7",
    ]);
    assert!(stderr(&o).contains("equivalence: pass"), "{}", stderr(&o));
    assert_eq!(code(&rbc(&["fme", "--system", &fixture("binning.sys"), "--eliminate", "D1"])), 2);
    assert_eq!(
        code(&rbc(&["fme", "--system", &fixture("binning.sys"), "--eliminate", "R1'", "--check-against", &fixture("binning.sys")])),
        2
    );
}

#[test]
fn fme_output_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let p = out_path(dir.path(), "proj.sys");
    assert_eq!(code(&rbc(&["fme", "--system", &fixture("binning.sys"), "--eliminate", "R1',R2'", "-o", &p])), 0);
    let sys = rbc_regions::polytope::SymbolicIneqSystem::from_json(&std::fs::read_to_string(&p).unwrap()).unwrap();
    assert!(sys.same_rows(&rbc_regions::polytope::binning_free_system()));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn sim_reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &str| {
        vec![
            "sim".to_string(), "--scheme".into(), "orthogonal".into(), "--channel".into(), fixture("orth_bsc.json"),
            "--n".into(), "8".into(), "--blocks".into(), "4".into(), "--trials".into(), "200".into(),
            "--seed".into(), "1".into(), "--r0".into(), "0".into(), "--r1".into(), "0.3".into(), "--r2".into(),
            "0.3".into(), "-o".into(), out.to_string(),
        ]
    };
    let (a, b) = (out_path(dir.path(), "a.txt"), out_path(dir.path(), "b.txt"));
    for p in [&a, &b] {
        let argv = args(p);
        let refs: Vec<&str> = argv.iter().map(String::as_str).collect();
        assert_eq!(code(&rbc(&refs)), 0);
    }
    let ta = std::fs::read(&a).unwrap();
    assert_eq!(ta, std::fs::read(&b).unwrap());
    let text = String::from_utf8(ta).unwrap();
    assert!(text.contains("pe_wilson95: "));
    let argv = args(&a);
    let mut refs: Vec<&str> = argv.iter().map(String::as_str).collect();
    refs.extend(["--threads", "1", "--sequential"]);
    assert_eq!(code(&rbc(&refs)), 0);
    assert_eq!(std::fs::read_to_string(&a).unwrap(), text);
}

#[test]
fn sim_errors() {
    let orth = fixture("orth_bsc.json");
    let o = rbc(&["sim", "--scheme", "orthogonal", "--channel", &orth, "--n", "30", "--seed", "1", "--r1", "1"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("symbols"), "{}", stderr(&o));
    assert_eq!(code(&rbc(&["sim", "--scheme", "orthogonal", "--channel", &orth, "--n", "8"])), 2);
    assert_eq!(code(&rbc(&["sim", "--scheme", "binning", "--channel", &orth, "--n", "8", "--seed", "1"])), 2);
    assert_eq!(
        code(&rbc(&["sim", "--scheme", "orthogonal", "--channel", &orth, "--n", "8", "--seed", "1", "--typicality", "fuzzy"])),
        2
    );
}

#[test]
fn binning_sim_with_law_file() {
    let dir = tempfile::tempdir().unwrap();
    let law = dir.path().join("law.json");
    // x1 is constant; T uniform; (U1, U2) uniform; X = U1 (|X| = 3 uses 0 and 1).
    let x: Vec<String> = (0..8).map(|i| if (i / 2) % 2 == 0 { "[1,0,0]" } else { "[0,1,0]" }.to_string()).collect();
    let flat_x = x.iter().map(|r| r.trim_matches(|c| c == '[' || c == ']')).collect::<Vec<_>>().join(",");
    std::fs::write(
        &law,
        format!("{{\"factors\": [[1], [\"1/2\", \"1/2\"], [0.25,0.25,0.25,0.25,0.25,0.25,0.25,0.25], [{flat_x}]]}}"),
    )
    .unwrap();
    let law = law.display().to_string();
    let o = rbc(&[
        "sim", "--scheme", "binning", "--channel", &fixture("blackwell0.json"), "--aux", &law, "--n", "6",
        "--blocks", "2", "--trials", "10", "--seed", "2", "--typicality", "absolute", "--epsilon", "1",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("encoder: searches=10"), "{}", stdout(&o));
}

#[test]
fn minkowski_and_structure() {
    let dir = tempfile::tempdir().unwrap();
    let p = out_path(dir.path(), "bw.csv");
    assert_eq!(code(&rbc(&["blackwell", "--grid", "6", "-o", &p])), 0);
    let o = rbc(&["minkowski", "--a", &p, "--b", &p]);
    assert_eq!(code(&o), 0);
    let sum = RegionCloud::from_csv(&stdout(&o)).unwrap();
    let one = RegionCloud::load(Path::new(&p)).unwrap();
    let w = [0.0, 1.0, 1.0];
    assert!((sum.support(&w) - 2.0 * one.support(&w)).abs() < 1e-12);
    let o = rbc(&["check-structure", "--channel", &fixture("blackwell0.json")]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("deterministic: true"));
}

#[test]
fn threads_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_rbc"))
        .args(["blackwell", "--grid", "4"])
        .env("RBC_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let o = Command::new(env!("CARGO_BIN_EXE_rbc"))
        .args(["blackwell", "--grid", "4"])
        .env("RBC_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}
