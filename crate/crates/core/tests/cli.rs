use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use osgood_core::scenario::{bundled, execute, resolve, Mode, Scenario, Status, BUNDLED};
use osgood_core::Error;
use proptest::prelude::*;

fn osgood(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_osgood")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn config_error(text: &str) -> String {
    match Scenario::parse(text, None) {
        Err(Error::Config(msg)) => msg,
        other => panic!("expected a config error, got {other:?}"),
    }
}

const EULER: &str = "name = \"e\"\nmode = \"euler\"\n";

#[test]
fn list_shows_every_bundled_scenario() {
    let o = osgood(&["list"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(BUNDLED.len() >= 8);
    assert_eq!(text.lines().count(), BUNDLED.len());
    assert!(!text.contains("invalid"), "{text}");
}

#[test]
fn bundled_scenarios_validate() {
    let mut modes = Vec::new();
    for b in BUNDLED {
        let sc = Scenario::parse(b.text, None).unwrap_or_else(|e| panic!("{}: {e}", b.name));
        assert_eq!(sc.name, b.name);
        modes.push(sc.mode);
        let o = osgood(&["validate", b.name]);
        assert!(o.status.success(), "{}: {}", b.name, stderr(&o));
    }
    for m in Mode::ALL {
        assert!(modes.contains(&m), "no bundled scenario for {}", m.as_str());
    }
}

#[test]
fn missing_grid_size_is_a_config_error() {
    assert_eq!(config_error(EULER), "grid.N required for mode=euler");
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.toml");
    fs::write(&path, EULER).unwrap();
    let o = osgood(&["validate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("grid.N required for mode=euler"));
    let o = osgood(&["run", path.to_str().unwrap(), "--output", dir.path().join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn validation_errors_name_the_key() {
    let e = |extra: &str| config_error(&format!("{EULER}[grid]\nN = 64\n{extra}"));
    assert!(e("[grid2]\nx = 1\n").contains("unknown key `grid2.x`"));
    assert!(e("[patch]\nradius = 1.0\n").contains("`patch.radius` does not apply to mode=euler"));
    assert!(e("[euler]\nstepper = \"euler\"\n").contains("`euler.stepper` must be one of"));
    assert!(e("[euler]\nt_end = \"soon\"\n").contains("`euler.t_end` must be a number"));
    assert!(e("[euler]\nt_end = -1.0\n").contains("`euler.t_end` must be >="));
    assert!(e("[euler]\ninitial = \"gaussian\"\nseparation = 1.0\n").contains("`euler.separation` only applies when euler.initial=vortex-pair"));
    assert!(e("[euler.dt]\npolicy = \"fixed\"\n").contains("euler.dt.value required for mode=euler"));
    assert!(e("[euler]\ninitial = \"random\"\n").contains("seed required"));
    assert!(e("[euler.dt]\nsafety = 1.5\n").contains("`euler.dt.safety` must be <= 1"));
    assert!(config_error("name = \"x\"\nmode = \"lab-inequality\"\n").contains("seed required for mode=lab-inequality"));
    assert!(config_error("name = \"x\"\nmode = \"warp\"\n").contains("`mode` must be one of"));
    assert!(config_error("name = \"x\"\n").contains("mode required"));
    assert!(config_error("name = \"x\"\nmode = ").contains("cannot parse"));
}

#[test]
fn seed_flag_overrides_the_scenario() {
    let text = "name = \"x\"\nmode = \"lab-inequality\"\n";
    let sc = Scenario::parse(text, Some(42)).unwrap();
    assert_eq!(sc.seed, 42);
    let b = bundled("main-inequality-sweep").unwrap();
    assert_eq!(Scenario::parse(b.text, Some(5)).unwrap().seed, 5);
}

#[test]
fn resolved_config_reruns_identically() {
    for b in BUNDLED {
        let a = resolve(b.text, None).unwrap();
        let again = resolve(&a.to_toml(), None).unwrap();
        assert_eq!(a, again, "{}", b.name);
        assert!(a.get("seed").is_some() && a.get("output").is_some());
    }
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file() && p.file_name().unwrap() != "report.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

#[test]
fn runs_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["radial-kernel-iterated-log", "tangential-aspect-sweep", "radial-stationary-euler"] {
        let (a, b) = (dir.path().join(format!("{name}-a")), dir.path().join(format!("{name}-b")));
        for out in [&a, &b] {
            let o = osgood(&["run", name, "--threads", "1", "--output", out.to_str().unwrap()]);
            assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));
        }
        let (fa, fb) = (read_dir_sorted(&a), read_dir_sorted(&b));
        assert!(fa.len() >= 2);
        assert_eq!(fa, fb, "{name}");
    }
}

#[test]
fn hypotheses_scenario_reports_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let o = osgood(&["run", "hypotheses-log-table", "--output", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["results"]["osgoodVerdict"], "Converges");
    assert_eq!(report["status"], "ok");
    assert!(report["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
    assert_eq!(report["resolved_config"]["multiplier"]["kind"], "table");
    assert!(dir.path().join("hypotheses.json").exists());
}

#[test]
fn exit_codes_follow_run_status() {
    let dir = tempfile::tempdir().unwrap();
    // failed expectation
    let text = bundled("radial-kernel-iterated-log").unwrap().text.replace("max_refinement_change = 1e-3", "max_ratio = 0.1");
    let path = dir.path().join("k.toml");
    fs::write(&path, text).unwrap();
    let o = osgood(&["run", path.to_str().unwrap(), "--output", dir.path().join("k").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));

    // an unstable fixed step
    let text = "name = \"blow\"\nmode = \"euler\"\n[grid]\nN = 32\n[euler]\ninitial = \"cosine\"\namp = 1000.0\nk = [3, 2]\n[euler.dt]\npolicy = \"fixed\"\nvalue = 0.5\n";
    let sc = Scenario::parse(text, None).unwrap();
    let out = execute(&sc, &dir.path().join("blow"), 1).unwrap();
    assert_eq!(out.status, Status::BlowUp);
    assert_eq!(out.status.exit_code(), 3);
    assert!(dir.path().join("blow/report.json").exists());

    let o = osgood(&["run", "no-such-scenario"]);
    assert_eq!(o.status.code(), Some(2));
}

fn value_strategy() -> impl Strategy<Value = String> {
    prop_oneof![
        any::<i64>().prop_map(|i| i.to_string()),
        (-1e6f64..1e6).prop_map(|x| format!("{x:?}")),
        Just("0".to_string()),
        Just("1e300".to_string()),
        Just("nan".to_string()),
        Just("-inf".to_string()),
        any::<bool>().prop_map(|b| b.to_string()),
        "[a-z-]{0,12}".prop_map(|s| format!("\"{s}\"")),
        prop::sample::select(vec!["\"random\"", "\"fixed\"", "\"ellipse\"", "\"table\"", "\"iterated-log\"", "\"cosine\"", "\"corner\"", "\"two-term\""])
            .prop_map(String::from),
        prop::collection::vec(-10i64..5000, 0..4).prop_map(|v| format!("{v:?}")),
        prop::collection::vec(-1.0f64..100.0, 0..4).prop_map(|v| format!("{v:?}")),
    ]
}

fn schema_keys() -> Vec<String> {
    let schema: toml::Table = osgood_core::scenario::schema_text().parse().unwrap();
    let mut keys: Vec<String> = schema["keys"].as_table().unwrap().keys().cloned().collect();
    keys.push("bogus.key".into());
    keys
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn fuzzed_configs_never_panic(
        mode in prop::sample::select(Mode::ALL.to_vec()),
        picks in prop::collection::vec((any::<prop::sample::Index>(), value_strategy()), 0..12),
    ) {
        let keys = schema_keys();
        let mut text = format!("name = \"fuzz\"\nmode = \"{}\"\n", mode.as_str());
        let mut used = std::collections::BTreeSet::new();
        for (idx, value) in picks {
            let key = idx.get(&keys);
            if key == "name" || key == "mode" || !used.insert(key.clone()) {
                continue;
            }
            // quote each dotted segment so the file is one flat table
            let dotted: Vec<String> = key.split('.').map(|s| format!("\"{s}\"")).collect();
            text.push_str(&format!("{} = {value}\n", dotted.join(".")));
        }
        match Scenario::parse(&text, None) {
            Ok(_) => {}
            Err(Error::Config(msg)) => prop_assert!(!msg.is_empty()),
            Err(e) => prop_assert!(false, "non-config error {e} for\n{text}"),
        }
    }
}
