use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_chemnn"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn last_value(csv: &Path, column: &str) -> f64 {
    let text = fs::read_to_string(csv).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == column).unwrap();
    lines.last().unwrap().split(',').nth(i).unwrap().parse().unwrap()
}

#[test]
fn compile_is_idempotent() {
    let d = TempDir::new().unwrap();
    let xor = configs().join("xor.toml");
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    for out in [&a, &b] {
        let o = run(&["compile", "--config", s(&xor), "--out", s(out)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["program.crn", "species.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    // the compiled program passes its own file check
    let o = run(&[
        "verify",
        "--config",
        s(&xor),
        "--program",
        s(&a.join("program.crn")),
        "--out",
        s(&d.path().join("v")),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn malformed_config_exits_1() {
    let d = TempDir::new().unwrap();
    for text in ["[train\ntask = \"xor\"\n", "[train]\ntask = \"xor\"\netaa = 0.9\n", "[train]\ntask = \"and\"\n"] {
        let c = write(&d, "bad.toml", text);
        let o = run(&["train", "--config", s(&c), "--out", s(&d.path().join("o"))]);
        assert_eq!(code(&o), 1, "{text}");
    }
    let o = run(&["train", "--config", s(&d.path().join("missing.toml"))]);
    assert_eq!(code(&o), 1);
    assert_eq!(code(&run(&["train"])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn corrupted_program_is_a_parse_error() {
    let d = TempDir::new().unwrap();
    let xor = configs().join("xor.toml");
    let out = d.path().join("c");
    assert_eq!(code(&run(&["compile", "--config", s(&xor), "--out", s(&out)])), 0);
    let prog = out.join("program.crn");
    let mut text = fs::read_to_string(&prog).unwrap();
    text.push_str("A + -> ; k=one\n");
    fs::write(&prog, text).unwrap();
    let o = run(&["verify", "--config", s(&xor), "--program", s(&prog), "--out", s(&d.path().join("v"))]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"));
}

#[test]
fn truncated_program_fails_verification() {
    let d = TempDir::new().unwrap();
    let xor = configs().join("xor.toml");
    let out = d.path().join("c");
    assert_eq!(code(&run(&["compile", "--config", s(&xor), "--out", s(&out)])), 0);
    let prog = out.join("program.crn");
    let text = fs::read_to_string(&prog).unwrap();
    let cut: Vec<&str> = text.lines().collect();
    fs::write(&prog, cut[..cut.len() - 1].join("\n")).unwrap();
    let o = run(&["verify", "--config", s(&xor), "--program", s(&prog), "--out", s(&d.path().join("v"))]);
    assert_eq!(code(&o), 3);
}

#[test]
fn empty_reaction_file_is_an_error() {
    let d = TempDir::new().unwrap();
    let r = write(&d, "empty.crn", "# nothing\nspecies A\n");
    let o = run(&["simulate", s(&r), "--duration", "1", "--out", s(&d.path().join("o"))]);
    assert_eq!(code(&o), 1);
}

#[test]
fn adder_converges_to_the_sum() {
    let d = TempDir::new().unwrap();
    let out = d.path().join("o");
    let o = run(&[
        "simulate",
        s(&configs().join("adder.crn")),
        "--init",
        s(&configs().join("adder_init.csv")),
        "--duration",
        "30",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let c = last_value(&out.join("trajectory.csv"), "C");
    assert!((c - 3.5).abs() < 1e-6, "{c}");
    assert!(out.join("trajectory.svg").exists());
}

#[test]
fn blow_up_is_a_numerical_failure() {
    let d = TempDir::new().unwrap();
    let r = write(&d, "b.crn", "species A\n2A -> 3A ; k=1\n");
    let i = write(&d, "b.csv", "species,init\nA,1\n");
    let o = run(&["simulate", s(&r), "--init", s(&i), "--duration", "5", "--out", s(&d.path().join("o"))]);
    assert_eq!(code(&o), 2);
}

#[test]
fn one_cycle_gives_one_update() {
    let d = TempDir::new().unwrap();
    let out = d.path().join("t");
    let o = run(&[
        "train",
        "--config",
        s(&configs().join("xor.toml")),
        "--max-cycles",
        "1",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let it = fs::read_to_string(out.join("iterations.csv")).unwrap();
    let rows: Vec<&str> = it.lines().skip(1).collect();
    assert_eq!(rows.len(), 1, "{it}");
    let updated = rows[0].split(',').nth(3).unwrap();
    assert_eq!(updated, "1");
    for f in ["weights.csv", "final_weights.csv", "grid.csv", "summary.txt"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn fixed_step_verify_is_byte_identical() {
    let d = TempDir::new().unwrap();
    let c = write(
        &d,
        "c.toml",
        "[train]\ntask = \"xor\"\n[integrator]\nmethod = \"rk4\"\nstep = 0.05\n[run]\nseed = 7\nproperty_cases = 3\n",
    );
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    for out in [&a, &b] {
        let o = run(&["verify", "--config", s(&c), "--out", s(out)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    }
    for f in ["phase_reports.csv", "verify_summary.txt"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn oscillator_mode_verify_reports_the_mode_gap() {
    let d = TempDir::new().unwrap();
    let out = d.path().join("o");
    let o = run(&[
        "verify",
        "--config",
        s(&configs().join("xor.toml")),
        "--mode",
        "oscillator",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(out.join("mode_report.csv").exists());
}
