//! End-to-end runs of the `geocontract` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use geocontract::document::load_space;
use geocontract::graph::PointId;
use serde_json::Value;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("geocontract-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geocontract"))
        .args(args)
        .current_dir(dir)
        .env_remove("GEOCONTRACT_OUT")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(o.stderr.trim_ascii()).unwrap_or_else(|_| panic!("stderr is JSON: {}", String::from_utf8_lossy(&o.stderr)))
}

fn column(csv: &str, k: usize) -> Vec<String> {
    csv.lines().skip(1).map(|l| l.split(',').nth(k).unwrap().to_string()).collect()
}

fn generate(dir: &Path, args: &[&str]) {
    let mut all = vec!["generate"];
    all.extend_from_slice(args);
    let o = run(dir, &all);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn divergence_necklace_document_has_fifty_beads() {
    let dir = scratch("beads");
    generate(&dir, &["--family", "divergence_necklace", "--f", "pow:2", "--range", "1:50"]);
    let s = load_space(&fs::read_to_string(dir.join("divergence_necklace.json")).unwrap()).unwrap();
    let bridges = s.landmarks.keys().filter(|k| k.starts_with('x')).count();
    let intervals = s.landmarks.keys().filter(|k| k.starts_with('y')).count();
    assert_eq!((bridges, intervals), (50, 50));
}

#[test]
fn tree_document_marks_leftmost_ray() {
    let dir = scratch("tree");
    generate(&dir, &["--family", "tree", "--branching", "2", "--depth", "10"]);
    let s = load_space(&fs::read_to_string(dir.join("tree.json")).unwrap()).unwrap();
    let ray: Vec<PointId> = (0..=10).map(|k| PointId((1u32 << k) - 1)).collect();
    assert_eq!(s.y.members(), &ray[..]);
    assert_eq!(s.graph.vertex_count(), 2047);
}

#[test]
fn missing_param_exits_2() {
    let dir = scratch("missing");
    let o = run(&dir, &["generate", "--family", "tree", "--branching", "2"]);
    assert_eq!(code(&o), 2);
    assert_eq!(stderr_json(&o)["error"], "missing-param");
    let o = run(&dir, &["generate"]);
    assert_eq!(code(&o), 2);
    assert_eq!(stderr_json(&o)["error"], "missing-param");
    let o = run(&dir, &["generate", "--family", "tree", "--branching", "0", "--depth", "3"]);
    assert_eq!(code(&o), 2);
    assert_eq!(stderr_json(&o)["error"], "invalid-params");
}

#[test]
fn tree_profiles() {
    let dir = scratch("tree-profiles");
    generate(&dir, &["--family", "tree", "--branching", "2", "--depth", "10"]);
    let o = run(&dir, &["profile", "--kind", "contraction", "--space", "tree.json"]);
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(dir.join("tree-contraction.csv")).unwrap();
    assert!(csv.starts_with("r,value,"));
    let values = column(&csv, 1);
    assert!(!values.is_empty() && values.iter().all(|v| v == "0"), "{csv}");
    assert!(dir.join("tree-contraction.run.json").exists());

    let o = run(&dir, &["profile", "--kind", "divergence", "--space", "tree.json"]);
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(dir.join("tree-divergence.csv")).unwrap();
    let values = column(&csv, 1);
    assert!(!values.is_empty() && values.iter().all(|v| v == "inf"), "{csv}");
}

#[test]
fn window_violation_exits_3() {
    let dir = scratch("window");
    generate(&dir, &["--family", "tree", "--branching", "2", "--depth", "6"]);
    let o = run(&dir, &["profile", "--kind", "contraction", "--space", "tree.json", "--r-max", "1000"]);
    assert_eq!(code(&o), 3);
    assert_eq!(stderr_json(&o)["error"], "window-violation");
    let o = run(&dir, &["profile", "--kind", "divergence", "--space", "tree.json", "--radii", "500"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn grid_morse_values_increase() {
    let dir = scratch("morse");
    generate(&dir, &["--family", "grid_l1", "--width", "120", "--height", "60"]);
    let o = run(&dir, &["profile", "--kind", "morse", "--space", "grid_l1.json", "--l-grid", "1.5,2,3", "--output", "m.csv"]);
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(dir.join("m.csv")).unwrap();
    let v: Vec<f64> = column(&csv, 1).iter().map(|t| t.parse().unwrap()).collect();
    assert_eq!(v.len(), 3);
    assert!(v.windows(2).all(|w| w[0] <= w[1]) && v[0] < v[2], "{csv}");
}

#[test]
fn profiles_identical_across_jobs() {
    let dir = scratch("jobs");
    generate(&dir, &["--family", "necklace", "--rho2", "ceil:sqrt", "--range", "4:30"]);
    let mut outs = Vec::new();
    for jobs in ["1", "3"] {
        for kind in ["contraction", "geodesic-image", "divergence"] {
            let name = format!("{kind}-{jobs}.csv");
            let o = run(&dir, &["--jobs", jobs, "profile", "--kind", kind, "--space", "necklace.json", "--output", &name]);
            assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
            outs.push(fs::read(dir.join(&name)).unwrap());
        }
    }
    assert_eq!(outs[..3], outs[3..]);
}

#[test]
fn output_directory_from_environment() {
    let dir = scratch("env");
    let out = dir.join("artifacts");
    let o = Command::new(env!("CARGO_BIN_EXE_geocontract"))
        .args(["generate", "--family", "cycle_arc", "--n", "20", "--arc-len", "5"])
        .current_dir(&dir)
        .env("GEOCONTRACT_OUT", &out)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(out.join("cycle_arc.json").exists());
}

fn report(dir: &Path, suite: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(format!("verify-{suite}/report.json"))).unwrap()).unwrap()
}

#[test]
fn theorem14_builtin() {
    let dir = scratch("t14");
    let o = run(&dir, &["verify", "theorem14", "--builtin"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&dir, "theorem14");
    assert_eq!(r["passed"], true);
    let spaces = r["spaces"].as_array().unwrap();
    let expect: Vec<(String, String, bool)> = spaces
        .iter()
        .map(|s| (s["space"].as_str().unwrap().to_string(), s["expectation"].as_str().unwrap().to_string(), s["holds"].as_bool().unwrap()))
        .collect();
    assert_eq!(expect.len(), 4);
    for (name, exp, holds) in &expect {
        let grid = name.starts_with("grid");
        assert_eq!(exp, if grid { "fail-expected" } else { "pass" });
        assert_eq!(*holds, !grid, "{name}");
    }
    assert!(r["run_config"]["seed"].is_u64());
    for s in spaces {
        for a in s["artifacts"].as_array().unwrap() {
            assert!(dir.join("verify-theorem14").join(a.as_str().unwrap()).exists());
        }
    }
}

#[test]
fn theorem14_report_identical_across_jobs() {
    let reports: Vec<String> = ["1", "4"]
        .iter()
        .map(|jobs| {
            let dir = scratch(&format!("t14-jobs{jobs}"));
            let o = run(&dir, &["--jobs", jobs, "--out", ".", "verify", "theorem14"]);
            assert_eq!(code(&o), 0);
            fs::read_to_string(dir.join("verify-theorem14/report.json")).unwrap()
        })
        .collect();
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn theorem15_builtin() {
    let dir = scratch("t15");
    let o = run(&dir, &["verify", "theorem15"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(report(&dir, "theorem15")["passed"], true);
}

#[test]
fn abel_reports_alpha_16() {
    let dir = scratch("abel");
    let o = run(&dir, &["verify", "abel"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&dir, "abel");
    let checks = r["spaces"][0]["checks"].as_array().unwrap();
    let a16 = checks.iter().find(|c| c["name"] == "abel-16").unwrap();
    assert_eq!(a16["passed"], true);
    assert_eq!(a16["detail"], "alpha(16) = 4");
}

#[test]
fn git_on_necklace_document() {
    let dir = scratch("git");
    generate(&dir, &["--family", "necklace", "--rho2", "ceil:sqrt", "--range", "4:60", "--output", "necklace.json"]);
    let o = run(&dir, &["verify", "git", "--space", "necklace.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&dir, "git");
    let checks = r["spaces"][0]["checks"].as_array().unwrap();
    for name in ["segments", "item1-envelope", "item2-envelope", "rho-sublinear"] {
        assert!(checks.iter().any(|c| c["name"] == name && c["passed"] == true), "{name}");
    }
}

#[test]
fn failing_suite_exits_1_with_witness() {
    let dir = scratch("fail");
    generate(&dir, &["--family", "grid_l1", "--width", "60", "--height", "30"]);
    let o = run(&dir, &["verify", "theorem14", "--space", "grid_l1.json"]);
    assert_eq!(code(&o), 1);
    let e = stderr_json(&o);
    assert_eq!(e["error"], "verification-failed");
    let failed = e["witness"][0]["failed_checks"].as_array().unwrap();
    assert!(failed.iter().any(|c| c["name"] == "contraction-sublinear" && !c["witness"].is_null()));
}

#[test]
fn robustness_on_small_necklace() {
    let dir = scratch("robust");
    generate(&dir, &["--family", "divergence_necklace", "--f", "pow:2", "--range", "1:24"]);
    let o = run(&dir, &["verify", "robustness", "--space", "divergence_necklace.json"]);
    let r = report(&dir, "robustness");
    let names: Vec<&str> = r["spaces"][0]["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"epsilon-1") && names.contains(&"hausdorff-perturbation"));
    assert!(names.iter().any(|n| n.starts_with("divergence-")));
    assert_eq!(code(&o) == 0, r["passed"] == true);
}

#[test]
fn plot_necklace_and_divergence() {
    let dir = scratch("plot");
    generate(&dir, &["--family", "necklace", "--rho2", "ceil:sqrt", "--range", "4:60"]);
    assert_eq!(code(&run(&dir, &["profile", "--kind", "contraction", "--space", "necklace.json", "--output", "c.csv"])), 0);
    assert_eq!(code(&run(&dir, &["plot", "--csv", "c.csv"])), 0);
    let svg = fs::read_to_string(dir.join("c.svg")).unwrap();
    let at = svg.find("alpha = ").expect("power annotation");
    let alpha: f64 = svg[at + 8..at + 13].parse().unwrap();
    assert!((0.4..=0.6).contains(&alpha), "{alpha}");
    assert!(svg.contains("log10 value vs log10 r"));

    fs::write(dir.join("d.csv"), "r,value,s,start,end\n1,2,1,0,3\n2,inf,,,\n3,inf,,,\n").unwrap();
    assert_eq!(code(&run(&dir, &["plot", "--csv", "d.csv", "--output", "d.svg"])), 0);
    let svg = fs::read_to_string(dir.join("d.svg")).unwrap();
    assert!(svg.contains("2 infinite"));
}

#[test]
fn plot_rejects_bad_csv() {
    let dir = scratch("plot-bad");
    fs::write(dir.join("empty.csv"), "").unwrap();
    let o = run(&dir, &["plot", "--csv", "empty.csv"]);
    assert_eq!(code(&o), 2);
    assert_eq!(stderr_json(&o)["error"], "malformed-csv");
    fs::write(dir.join("bad.csv"), "r,value\n1,x\n").unwrap();
    assert_eq!(code(&run(&dir, &["plot", "--csv", "bad.csv"])), 2);
    assert_eq!(code(&run(&dir, &["plot", "--csv", "missing.csv"])), 2);
}
