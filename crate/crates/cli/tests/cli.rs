use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn cfmult(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cfmult")).args(args).current_dir(cwd).env_remove("CFMULT_OUT").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

fn config(dir: &Path, name: &str, body: &str) {
    fs::write(dir.join(name), body).unwrap();
}

fn built(e: &str, depth: usize) -> TempDir {
    let dir = TempDir::new().unwrap();
    config(dir.path(), "exp.toml", &format!("E = {e}\ndepth = {depth}\n"));
    let o = cfmult(&["build", "exp.toml"], dir.path());
    assert_eq!(code(&o), 0, "{}", text(&o));
    dir
}

#[test]
fn build_then_verify() {
    let dir = built("[2]", 5);
    let out = dir.path().join("out");
    assert!(out.join("tower.cft").exists() && out.join("skew.toml").exists());
    let o = cfmult(&["verify", "out", "--samples", "500"], dir.path());
    assert_eq!(code(&o), 0, "{}", text(&o));
    assert!(!text(&o).contains("FAIL"));
    let o = cfmult(&["verify", "exp.toml", "--samples", "100"], dir.path());
    assert_eq!(code(&o), 0);
}

#[test]
fn rank_one_config_has_no_skew_data() {
    let dir = built("[1]", 4);
    assert!(dir.path().join("out/tower.cft").exists());
    assert!(!dir.path().join("out/skew.toml").exists());
    assert!(text(&cfmult(&["build", "exp.toml"], dir.path())).contains("rank-one only"));
}

#[test]
fn corrupted_alpha_names_a1() {
    let dir = built("[2]", 4);
    let path = dir.path().join("out/tower.cft");
    let mut lines: Vec<String> = fs::read_to_string(&path).unwrap().lines().map(String::from).collect();
    let i = lines.iter().enumerate().filter(|(_, l)| l.starts_with("alpha")).nth(2).unwrap().0;
    let mut parts: Vec<String> = lines[i].split(' ').map(String::from).collect();
    let (c, a) = parts[2].split_once('=').unwrap();
    parts[2] = format!("{c}={}", (a.parse::<u64>().unwrap() + 1) % 3);
    lines[i] = parts.join(" ");
    fs::write(&path, lines.join("\n")).unwrap();
    let o = cfmult(&["verify", "out", "--samples", "100"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(text(&o).contains("FAIL A1 level 3"), "{}", text(&o));
}

#[test]
fn truncated_and_missing_inputs_exit_2() {
    let dir = built("[2]", 4);
    let path = dir.path().join("out/tower.cft");
    let s = fs::read_to_string(&path).unwrap();
    fs::write(&path, &s[..s.len() / 3]).unwrap();
    let o = cfmult(&["verify", "out"], dir.path());
    assert_eq!(code(&o), 2, "{}", text(&o));
    assert!(text(&o).contains("parse error"));
    assert_eq!(code(&cfmult(&["verify", "nowhere"], dir.path())), 2);
    assert_eq!(code(&cfmult(&["build", "absent.toml"], dir.path())), 2);
    config(dir.path(), "bad.toml", "E = []\ndepth = 4\n");
    assert_eq!(code(&cfmult(&["build", "bad.toml"], dir.path())), 2);
    config(dir.path(), "bad.toml", "E = [2]\ndepth = 4\nschedule = \"I(7)\"\n");
    assert_eq!(code(&cfmult(&["build", "bad.toml"], dir.path())), 2);
}

#[test]
fn explicit_group_and_schedule() {
    let dir = TempDir::new().unwrap();
    let triple = "group = [3]\nsubgroup_gens = [[1]]\naut = [[2]]\n";
    config(dir.path(), "g.toml", triple);
    config(
        dir.path(),
        "exp.toml",
        "E = [2]\ndepth = 4\ngroup = \"g.toml\"\nschedule = \"I(1) II(1;1)\"\nout = \"res\"\n",
    );
    let o = cfmult(&["build", "exp.toml"], dir.path());
    assert_eq!(code(&o), 0, "{}", text(&o));
    assert!(dir.path().join("res/tower.cft").exists());
}

#[test]
fn outputs_are_byte_identical() {
    let a = built("[2]", 8);
    let b = built("[2]", 8);
    for f in ["tower.cft", "skew.toml"] {
        assert_eq!(fs::read(a.path().join("out").join(f)).unwrap(), fs::read(b.path().join("out").join(f)).unwrap());
    }
    for dir in [&a, &b] {
        let o = cfmult(&["weaklimits", "exp.toml"], dir.path());
        assert_eq!(code(&o), 0, "{}", text(&o));
        let o = cfmult(&["recur", "exp.toml"], dir.path());
        assert_eq!(code(&o), 0, "{}", text(&o));
    }
    for f in ["weaklimits.csv", "recur.txt"] {
        let x = fs::read(a.path().join("out").join(f)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, fs::read(b.path().join("out").join(f)).unwrap());
    }
    let csv = fs::read_to_string(a.path().join("out/weaklimits.csv")).unwrap();
    assert!(csv.starts_with("n,tag,chi_id,A_id,B_id,residual_num,residual_den,error_num,error_den\n"));
}

#[test]
fn output_dir_override() {
    let dir = TempDir::new().unwrap();
    config(dir.path(), "exp.toml", "E = [2]\ndepth = 4\n");
    let target = dir.path().join("elsewhere");
    let o = Command::new(env!("CARGO_BIN_EXE_cfmult"))
        .args(["build", "exp.toml"])
        .current_dir(dir.path())
        .env("CFMULT_OUT", &target)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(target.join("tower.cft").exists());
    assert!(!dir.path().join("out").exists());
}

#[test]
fn groups_and_spectra() {
    let dir = TempDir::new().unwrap();
    let o = cfmult(&["groups", "4", "--out", "cat.toml"], dir.path());
    assert_eq!(code(&o), 0);
    assert!(text(&o).contains("E={4} G=Z[5]") && text(&o).contains("L={4} verified"), "{}", text(&o));
    assert!(fs::read_to_string(dir.path().join("cat.toml")).unwrap().contains("verified = true"));
    let o = cfmult(&["spectra", "-k", "2"], dir.path());
    assert_eq!(code(&o), 0, "{}", text(&o));
    let t = text(&o);
    let rows: Vec<&str> = t.lines().filter(|l| l.starts_with("2,5,")).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].contains(",25,2,2,2,") && rows[1].contains(",15,1,1,1,"), "{t}");
    assert_eq!(code(&cfmult(&["groups", "x"], dir.path())), 2);
}
