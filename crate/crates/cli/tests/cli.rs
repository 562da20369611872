use std::path::Path;
use std::process::{Command, Output};

fn magfrac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magfrac"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

const BLOCK: &str = r#"
[mesh]
kind = "rectangle"
min = [0.0, 0.0]
max = [1.0, 1.0]
nx = 6
ny = 6
tag = "solid"

[[sources]]
tag = "solid"
slope = 1.0

[[displacement]]
tag = "solid_dirichlet"
ux = 0.0
uy = 0.0

[solver]
dt = 0.1
t_end = 0.3
"#;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn presets_list_and_show() {
    let out = magfrac(&["presets", "list"]);
    assert!(out.status.success());
    let names: Vec<String> = String::from_utf8(out.stdout).unwrap().lines().map(String::from).collect();
    assert_eq!(
        names,
        ["example1", "example2", "example3.1", "example3.2", "example3.3", "example3.4"]
    );
    let out = magfrac(&["presets", "show", "example3.2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("young_modulus = 16.0"), "{text}");
    assert_eq!(magfrac(&["presets", "show", "example7"]).status.code(), Some(2));
}

#[test]
fn run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "case.toml", BLOCK);
    let out_dir = dir.path().join("out");
    let out = magfrac(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("timeseries.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,A_ave_solid,max_d,elastic_energy,stagger_iters,u_residual,A_residual");
    assert_eq!(lines.len(), 4);
    for k in 1..=3 {
        let vtk = std::fs::read_to_string(out_dir.join(format!("step_{k:05}.vtk"))).unwrap();
        assert!(vtk.starts_with("# vtk DataFile Version 3.0\n"));
    }
    let echoed = std::fs::read_to_string(out_dir.join("config.toml")).unwrap();
    assert!(echoed.contains("t_end = 0.3"));
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out_dir = out_dir.to_str().unwrap();
    let bad = write(dir.path(), "bad.toml", "[material]\nYoung_modulus = 1.0\n");
    assert_eq!(magfrac(&["run", "--config", &bad, "--out", out_dir]).status.code(), Some(2));
    let missing = dir.path().join("missing.toml");
    assert_eq!(
        magfrac(&["run", "--config", missing.to_str().unwrap(), "--out", out_dir]).status.code(),
        Some(2)
    );
    let tag = write(dir.path(), "tag.toml", "[[sources]]\ntag = \"wire_4\"\nslope = 1.0\n");
    assert_eq!(magfrac(&["run", "--config", &tag, "--out", out_dir]).status.code(), Some(2));
}

#[test]
fn solver_failure_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{BLOCK}max_stagger_iters = 1\ntol_stag = 1e-300\n");
    let cfg = write(dir.path(), "case.toml", &text);
    let out_dir = dir.path().join("out");
    let out = magfrac(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    // Diagnostics of the committed steps are still written.
    assert!(out_dir.join("timeseries.csv").exists());
}

#[test]
fn mms_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mms.csv");
    let out = magfrac(&["mms", "--order", "1", "--levels", "3", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(&path).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "h,l2_error,rate");
    assert_eq!(rows.len(), 4);
    let rate: f64 = rows[3].split(',').nth(2).unwrap().parse().unwrap();
    assert!(rate > 1.8, "{rate}");
    let out = magfrac(&["mms", "--order", "1", "--levels", "1", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn mesh_info_reports_subdomains() {
    let dir = tempfile::tempdir().unwrap();
    let msh = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$PhysicalNames\n2\n2 1 \"solid\"\n2 2 \"vacuum\"\n$EndPhysicalNames\n\
$Nodes\n4\n1 0 0 0\n2 1 0 0\n3 1 1 0\n4 0 1 0\n$EndNodes\n\
$Elements\n2\n1 2 2 1 1 1 2 3\n2 2 2 2 2 1 3 4\n$EndElements\n";
    let path = write(dir.path(), "two.msh", msh);
    let out = magfrac(&["mesh", "info", &path]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("cells: 2"), "{text}");
    assert!(text.contains("subdomain solid: 1 cells"), "{text}");
    assert!(text.contains("subdomain vacuum: 1 cells"), "{text}");
}
