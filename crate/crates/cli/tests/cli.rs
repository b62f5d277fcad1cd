use std::path::Path;
use std::process::{Command, Output};

const SPEC: &str = "\
validation_gaps = 3
test_gaps = 4

[field]
m = 14
n = 14
t = 36

[gaps]
count = 5
k1 = 2
k2 = 2
delta_t = 3
margin = 3
";

fn stgap(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stgap"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .env_remove("STGAP_THREADS")
        .output()
        .expect("spawn stgap")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("spec.toml"), SPEC).unwrap();
    dir
}

fn generate(dir: &Path, seed: &str, data: &str) {
    ok(&stgap(&["generate", "--spec", "spec.toml", "--data", data, "--seed", seed], dir));
}

fn train(dir: &Path, out: &str) {
    ok(&stgap(
        &[
            "train", "--data", "d", "--p", "3", "--horizon", "3", "--hidden", "6", "--attn-dim", "4", "--epochs", "4",
            "--batch", "8", "--lr", "1e-3", "--eval-every", "2", "--seed", "5", "--out", out,
        ],
        dir,
    ));
}

#[test]
fn generate_is_bit_identical_per_seed() {
    let dir = setup();
    let p = dir.path();
    ok(&stgap(
        &["generate", "--spec", "spec.toml", "--out", "a.stgf", "--gaps", "a.gaps", "--truth", "a.truth.stgf", "--seed", "7"],
        p,
    ));
    ok(&stgap(
        &["generate", "--spec", "spec.toml", "--out", "b.stgf", "--gaps", "b.gaps", "--truth", "b.truth.stgf", "--seed", "7"],
        p,
    ));
    ok(&stgap(&["generate", "--spec", "spec.toml", "--out", "c.stgf", "--gaps", "c.gaps", "--seed", "8"], p));
    let read = |f: &str| std::fs::read(p.join(f)).unwrap();
    assert_eq!(read("a.stgf"), read("b.stgf"));
    assert_eq!(read("a.gaps"), read("b.gaps"));
    assert_eq!(read("a.truth.stgf"), read("b.truth.stgf"));
    assert_ne!(read("a.stgf"), read("c.stgf"));

    generate(p, "7", "d1");
    generate(p, "7", "d2");
    for name in ["train", "val", "test"] {
        for ext in ["stgf", "truth.stgf", "gaps"] {
            let f = format!("{name}.{ext}");
            assert_eq!(read(&format!("d1/{f}")), read(&format!("d2/{f}")), "{f}");
        }
    }
    // --out writes the training split
    assert_eq!(read("a.stgf"), read("d1/train.stgf"));
}

#[test]
fn train_is_bit_identical_per_seed() {
    let dir = setup();
    let p = dir.path();
    generate(p, "1", "d");
    train(p, "m1.dgc1");
    train(p, "m2.dgc1");
    let a = std::fs::read(p.join("m1.dgc1")).unwrap();
    assert_eq!(&a[..4], b"DGC1");
    assert_eq!(a, std::fs::read(p.join("m2.dgc1")).unwrap());
}

#[test]
fn pipeline_eval_bench_fill() {
    let dir = setup();
    let p = dir.path();
    generate(p, "2", "d");
    train(p, "m.dgc1");

    let out = stgap(
        &[
            "eval", "--methods", "mean,idw,kriging,dgin,dgin-history", "--model", "m.dgc1", "--data", "d", "--report",
            "r.csv",
        ],
        p,
    );
    ok(&out);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("dgin-history"));
    let csv = std::fs::read_to_string(p.join("r.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("kind,method,other,class,n,value,p_value"));
    assert!(csv.lines().any(|l| l.starts_with("mse,mean,,mixed,4,")));
    assert!(csv.lines().any(|l| l.starts_with("ttest,mean,dgin,mixed,4,")));

    let out = stgap(&["bench", "--methods", "mean,dgin", "--model", "m.dgc1", "--data", "d"], p);
    ok(&out);
    let table = String::from_utf8(out.stdout).unwrap();
    assert_eq!(table.lines().count(), 3);

    let out = stgap(&["fill", "--model", "m.dgc1", "--tensor", "d/test.stgf", "--out", "filled.stgf"], p);
    ok(&out);
    let filled = stgap::grid::stgf::load(p.join("filled.stgf")).unwrap();
    let truth = stgap::grid::stgf::load(p.join("d/test.truth.stgf")).unwrap();
    assert_eq!(filled.missing_count(), 0);
    assert_eq!(filled.dims(), truth.dims());
}

#[test]
fn gradcheck_passes_and_fails_by_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let out = stgap(&["gradcheck", "--p", "3", "--horizon", "3", "--hidden", "5", "--tol", "1e-4"], dir.path());
    ok(&out);
    assert!(String::from_utf8(out.stdout).unwrap().contains("passed"));
    let out = stgap(&["gradcheck", "--tol", "1e-14"], dir.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn exit_codes() {
    let dir = setup();
    let p = dir.path();
    let code = |args: &[&str]| stgap(args, p).status.code();
    assert_eq!(code(&["--help"]), Some(0));
    assert_eq!(code(&["frobnicate"]), Some(1));
    assert_eq!(code(&["generate", "--seed", "1"]), Some(1));
    assert_eq!(code(&["train", "--data", "d", "--p", "2", "--out", "m"]), Some(2));
    std::fs::write(p.join("bad.toml"), "[field]\nm = \"wide\"\n").unwrap();
    assert_eq!(code(&["generate", "--spec", "bad.toml", "--data", "x"]), Some(2));
    std::fs::write(p.join("unknown.toml"), "[field]\nwidth = 3\n").unwrap();
    assert_eq!(code(&["generate", "--spec", "unknown.toml", "--data", "x"]), Some(2));
    assert_eq!(code(&["fill", "--model", "none.dgc1", "--tensor", "none.stgf", "--out", "o"]), Some(2));

    generate(p, "3", "d");
    assert_eq!(code(&["train", "--data", "d", "--p", "2", "--out", "m"]), Some(1));
    assert_eq!(code(&["train", "--data", "d", "--epochs", "0", "--out", "m"]), Some(1));
    assert_eq!(code(&["eval", "--methods", "dgin", "--data", "d"]), Some(1));
    assert_eq!(code(&["eval", "--methods", "magic", "--data", "d"]), Some(1));
    std::fs::write(p.join("junk.dgc1"), b"nope").unwrap();
    assert_eq!(code(&["eval", "--methods", "dgin", "--model", "junk.dgc1", "--data", "d"]), Some(2));
}

#[test]
fn thread_cap_from_environment() {
    let dir = setup();
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_stgap"))
            .args(["gradcheck", "--hidden", "3"])
            .current_dir(dir.path())
            .env("STGAP_THREADS", threads)
            .output()
            .unwrap()
            .status
            .code()
    };
    assert_eq!(run("1"), Some(0));
    assert_eq!(run("0"), Some(1));
    assert_eq!(run("many"), Some(1));
}
