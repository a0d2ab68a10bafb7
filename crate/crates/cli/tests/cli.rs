use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn steklov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_steklov"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, density: &str, levels: &str) -> String {
    let path = dir.join("study.toml");
    fs::write(
        &path,
        format!(
            "[geometry]\nhole = \"square\"\nsize = 0.5\nm = 8\n\n[density]\nexpr = \"{density}\"\n\n[study]\nlevels = {levels}\nk = 1\nm_limit = 16\n\n[output]\ndir = \"{}\"\n",
            dir.join("out").display()
        ),
    )
    .unwrap();
    path.display().to_string()
}

#[test]
fn study_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sin(2*pi*y1)", "[2, 4]");
    let out = dir.path().join("reports");
    let o = steklov(&["study", "--config", &cfg, "--out", out.to_str().unwrap(), "--format", "csv,svg", "--threads", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("study.csv").exists() && out.join("study.svg").exists());
    assert!(!out.join("study.json").exists());
    let csv = fs::read_to_string(out.join("study.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.lines().nth(1).unwrap().starts_with("critical,1,+,2,"));
}

#[test]
fn single_stage_commands() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "0.5 + sin(2*pi*y1)", "[2]");
    let out = dir.path().join("out");
    let o = steklov(&["mesh", "--config", &cfg, "--level", "2"]);
    assert!(o.status.success());
    assert!(out.join("cell.mesh").exists() && out.join("domain-2.mesh").exists());

    let o = steklov(&["cell", "--config", &cfg, "--seed", "7"]);
    assert!(o.status.success());
    let json = fs::read_to_string(out.join("homog.json")).unwrap();
    assert!(json.contains("\"homogdata 1\"") && json.contains("\"positive\""));

    let o = steklov(&["limit", "--config", &cfg]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("- k=1"));

    let o = steklov(&["eps", "--config", &cfg, "--level", "2"]);
    assert!(o.status.success());
    assert!(out.join("eps-2.json").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("none.toml");
    assert_eq!(steklov(&["study", "--config", missing.to_str().unwrap()]).status.code(), Some(4));

    let cfg = write_config(dir.path(), "sin(2*pi*y1)", "[]");
    assert_eq!(steklov(&["study", "--config", &cfg]).status.code(), Some(2));

    let cfg = write_config(dir.path(), "1", "[2]");
    let o = steklov(&["cell", "--config", &cfg, "--case-override", "crit"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cell stage"));

    let blocked = dir.path().join("blocked");
    fs::write(&blocked, "").unwrap();
    let cfg = write_config(dir.path(), "sin(2*pi*y1)", "[2]");
    let o = steklov(&["cell", "--config", &cfg, "--out", blocked.join("sub").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));

    assert_eq!(steklov(&["study"]).status.code(), Some(2));
}
