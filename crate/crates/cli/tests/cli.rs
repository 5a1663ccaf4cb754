use std::path::Path;
use std::process::{Command, Output};

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_carleson"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn carleson")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert_eq!(code(&run(d, &["verify", "--suite", "rm"])), 0);
    assert_eq!(code(&run(d, &["verify", "--suite", "factorization", "--inject-fault"])), 1);
    assert_eq!(code(&run(d, &["weyl", "--bogus", "1"])), 2);
    assert_eq!(code(&run(d, &["weyl", "--d", "zero"])), 2);
    assert_eq!(code(&run(d, &["phi", "--n", "2"])), 2);
    assert_eq!(code(&run(d, &["verify", "--suite", "nosuch"])), 2);
    assert_eq!(code(&run(d, &["nosuch"])), 2);
    assert_eq!(code(&run(d, &["arcs", "--grid-size", "100"])), 2);
    let big = [
        "arcs", "--arcs-lambda-count", "1", "--arcs-xi-count", "1", "--grid-j", "30", "--grid-size", "8589934592",
    ];
    assert_eq!(code(&run(d, &big)), 3);
}

#[test]
fn config_file_and_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    std::fs::write(&cfg, "# small kappa run\nkappa_q_max = 3\nkappa_w_max = 1 # three shifts\n").unwrap();
    let out = tmp.path().join("o");
    let o = run(&out, &["kappa", "--config", cfg.to_str().unwrap(), "--kappa-w-max=2"]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(out.join("kappa.csv")).unwrap();
    // 4 fractions with q <= 3, squared, times 5 shifts
    assert_eq!(text.lines().count(), 1 + 16 * 5);
    assert!(text.starts_with("a,q,a_prime,q_prime,w0,"));
}

#[test]
fn empty_sweep_writes_header_only() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["approx", "--approx-j-min", "9", "--approx-j-max", "8"]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(tmp.path().join("approx.csv")).unwrap();
    assert_eq!(text, "j,q,delta,err_abs,bound_ratio\n");
}

#[test]
fn suite_filter_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["verify", "--suite", "rm,partition"]);
    assert_eq!(code(&o), 0);
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("suite rm: PASS"));
    assert!(stdout.contains("suite partition: PASS"));
    assert!(!stdout.contains("suite kappa"));
    let csv = std::fs::read_to_string(tmp.path().join("verify.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn seeds_change_random_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["approx", "--approx-j-min", "6", "--approx-j-max", "6", "--approx-samples", "3"];
    let read = |dir: &Path| std::fs::read(dir.join("approx.csv")).unwrap();
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    assert_eq!(code(&run(&a, &[&args[..], &["--seed", "1"]].concat())), 0);
    assert_eq!(code(&run(&b, &[&args[..], &["--seed", "1"]].concat())), 0);
    assert_eq!(code(&run(&c, &[&args[..], &["--seed", "2"]].concat())), 0);
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
}

#[test]
fn grid_dump_roundtrips() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(
        tmp.path(),
        &["arcs", "--arcs-lambda-count", "2", "--arcs-xi-count", "2", "--grid-j", "2", "--grid-size", "32", "--grid-lambda", "0.25"],
    );
    assert_eq!(code(&o), 0);
    let bytes = std::fs::read(tmp.path().join("m_grid.bin")).unwrap();
    assert_eq!(bytes.len(), 32 + 32 * 16);
    let g = carleson_core::MultiplierGrid64::read_binary(&bytes[..]).unwrap();
    assert_eq!((g.n, g.size, g.j, g.lambda), (1, 32, 2, 0.25));
    let csv = std::fs::read_to_string(tmp.path().join("m_grid.csv")).unwrap();
    assert_eq!(csv.lines().count(), 33);
}
