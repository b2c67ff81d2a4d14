use std::fs;
use std::process::Command;

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gossip-ula"))
}

#[test]
fn run_gm_then_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("gm");
    let status = cli()
        .args(["run-gm", "--ticks", "1000", "--seed", "3", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let stdout = String::from_utf8_lossy(&status.stdout);
    assert!(stdout.contains("%ET"));
    let again = cli().arg("report").arg(&out).output().unwrap();
    assert!(again.status.success());
    assert_eq!(String::from_utf8_lossy(&again.stdout), fs::read_to_string(out.join("report.txt")).unwrap());
}

#[test]
fn graph_file_override() {
    let tmp = tempfile::tempdir().unwrap();
    let graph = tmp.path().join("path.txt");
    fs::write(&graph, "# path of five\n5\n0 1\n1 2\n2 3\n3 4\n").unwrap();
    let out = tmp.path().join("run");
    let o = cli()
        .args(["run-gm", "--ticks", "200", "--graph-file"])
        .arg(&graph)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["graph"]["kind"], "edge-list");
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = cli().arg("report").arg(tmp.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no run manifest"));

    let bad = tmp.path().join("bad.toml");
    fs::write(
        &bad,
        r#"
id = "bad"
engines = ["gossip-et"]
[model]
kind = "gaussian-mixture"
[graph]
kind = "ring"
n = 5
[sampler]
alpha = 1e-4
beta = 1.5
mu_e = 8.0
delta_e = 0.51
ticks = 10
"#,
    )
    .unwrap();
    let o = cli().arg("run-custom").arg(&bad).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("beta(1-beta)"));

    let typo = tmp.path().join("typo.toml");
    fs::write(&typo, fs::read_to_string(&bad).unwrap().replace("beta = 1.5", "beta = 0.1\nbeat = 0.2")).unwrap();
    let o = cli().arg("run-custom").arg(&typo).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn divergence_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("hot.toml");
    fs::write(
        &cfg,
        r#"
id = "hot"
engines = ["gossip-et"]
[model]
kind = "gaussian-mixture"
[graph]
kind = "ring"
n = 5
[sampler]
alpha = 10.0
beta = 0.1
mu_e = 8.0
delta_e = 0.51
ticks = 5000
"#,
    )
    .unwrap();
    let o = cli().arg("run-custom").arg(&cfg).arg("--out").arg(tmp.path().join("o")).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn conditions_and_constants() {
    let o = cli().args(["check-conditions", "--preset", "logistic"]).output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("satisfied"));

    let o = cli()
        .args(["check-conditions", "--rho-u", "1.0", "--l-bar", "1.0"])
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&o.stdout).contains("step size: margin"));

    let o = cli().args(["check-conditions", "--rho-u", "1.0"]).output().unwrap();
    assert!(String::from_utf8_lossy(&o.stdout).contains("L_bar estimate"));

    let o = cli().args(["theory-constants", "--json", "--at", "5"]).output().unwrap();
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["constants"]["y3"].as_f64().unwrap() > 0.0);
    assert_eq!(v["envelope"][0]["k"], 5);

    let o = cli().args(["theory-constants", "--at", "0,100"]).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8_lossy(&o.stdout);
    for key in ["lambda = ", "Y1 = ", "Y2 = ", "Y3 = ", "envelope(100) = "] {
        assert!(text.contains(key), "{text}");
    }
}
