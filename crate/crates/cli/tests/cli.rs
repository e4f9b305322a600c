use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn sbnd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sbnd"))
        .args(args)
        .env_remove("SBND_WORKERS")
        .output()
        .expect("run sbnd")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn bch_file() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/bch_63_51.txt")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn code_info_polar() {
    let o = sbnd(&["code-info", "--polar", "64", "32"]);
    assert!(o.status.success(), "{o:?}");
    let s = stdout(&o);
    assert!(s.contains("n = 64, k = 32, rate = 0.5"), "{s}");
    assert!(s.contains("G·Hᵀ = 0: ok"));
    assert!(s.contains("frozen rows: 0,1,2,3"));
    assert!(s.contains("H standardized: yes"));
    let raw = stdout(&sbnd(&["code-info", "--polar", "64", "32", "--no-standardize"]));
    assert!(raw.contains("H standardized: no"));
}

#[test]
fn code_info_bch_file() {
    let o = sbnd(&["code-info", "--pc-file", p(&bch_file())]);
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).contains("n = 63, k = 51"));
}

#[test]
fn malformed_inputs_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "2 3\n1 0 2\n0 1 1\n").unwrap();
    assert_eq!(sbnd(&["code-info", "--pc-file", p(&bad)]).status.code(), Some(2));
    assert_eq!(sbnd(&["code-info"]).status.code(), Some(2));
    assert_eq!(sbnd(&["code-info", "--polar", "64"]).status.code(), Some(2));
    assert_eq!(sbnd(&["code-info", "--polar", "63", "32"]).status.code(), Some(2));
    assert_eq!(sbnd(&["eval", "--polar", "16", "8", "--ebn0", "3,1"]).status.code(), Some(2));
    assert_eq!(sbnd(&["eval", "--polar", "16", "8", "--decoder", "bp"]).status.code(), Some(2));
    assert_eq!(sbnd(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(sbnd(&["--help"]).status.code(), Some(0));
}

#[test]
fn eval_hard_sweep_writes_rows() {
    let o = sbnd(&[
        "eval", "--decoder", "hard", "--polar", "16", "8", "--ebn0", "0:1:6", "--min-frames", "2000",
    ]);
    assert!(o.status.success(), "{o:?}");
    let s = stdout(&o);
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines[0], "ebn0_db,frames,bit_errors,frame_errors,ber,fer,decoder,code,seed");
    assert_eq!(lines.len(), 8);
    assert!(lines[1].starts_with("0,"));
    assert!(lines[7].starts_with("6,"));
}

#[test]
fn train_is_deterministic_and_checkpoint_feeds_eval() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.ckpt");
    let b = dir.path().join("b.ckpt");
    let log = dir.path().join("loss.csv");
    let common = [
        "train", "--polar", "16", "8", "--steps", "20", "--batch-size", "32", "--scale", "1", "--time-steps", "2",
        "--depth", "2", "--seed", "4", "--log-every", "10",
    ];
    let mut args: Vec<&str> = common.to_vec();
    args.extend(["--checkpoint", p(&a), "--loss-log", p(&log)]);
    assert!(sbnd(&args).status.success());
    let mut args: Vec<&str> = common.to_vec();
    args.extend(["--checkpoint", p(&b)]);
    assert!(sbnd(&args).status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let csv = std::fs::read_to_string(&log).unwrap();
    assert!(csv.starts_with("step,loss\n10,"));

    let out = dir.path().join("res.csv");
    let svg = dir.path().join("res.svg");
    let o = sbnd(&[
        "eval", "--polar", "16", "8", "--decoder", "sbnd,hard,osd1,map", "--checkpoint", p(&a), "--ebn0", "1,3",
        "--min-frames", "1000", "--out", p(&out), "--svg", p(&svg),
    ]);
    assert!(o.status.success(), "{o:?}");
    let res = std::fs::read_to_string(&out).unwrap();
    assert_eq!(res.lines().count(), 9);
    let drawn = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(drawn.matches("<polyline").count(), 8);

    // A checkpoint for (16,8) cannot drive a (16,4) code.
    let o = sbnd(&["eval", "--polar", "16", "4", "--decoder", "sbnd", "--checkpoint", p(&a), "--ebn0", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("estimator built for (16, 8)"));
}

#[test]
fn zero_steps_writes_initial_weights() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("init.ckpt");
    let o = sbnd(&[
        "train", "--polar", "8", "4", "--steps", "0", "--scale", "1", "--time-steps", "1", "--depth", "1",
        "--checkpoint", p(&a),
    ]);
    assert!(o.status.success(), "{o:?}");
    // Header (28 bytes) plus 3H·12 + 3H·H + 3H + 4H + 4 floats with H = 12.
    let h = 12;
    let floats = 3 * h * 12 + 3 * h * h + 3 * h + 4 * h + 4;
    assert_eq!(std::fs::metadata(&a).unwrap().len() as usize, 28 + 4 * floats);
}

#[test]
fn config_file_defaults_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# sweep defaults\npolar = 16 8\nebn0 = 0:1:3\nmin_frames = 500\n").unwrap();
    let o = sbnd(&["--config", p(&cfg), "eval", "--decoder", "hard"]);
    assert!(o.status.success(), "{o:?}");
    assert_eq!(stdout(&o).lines().count(), 5);
    let o = sbnd(&["--config", p(&cfg), "eval", "--ebn0", "2"]);
    assert_eq!(stdout(&o).lines().count(), 2);
    let o = sbnd(&["--config", p(&cfg), "eval", "--pc-file", p(&bch_file()), "--ebn0", "5", "--max-frames", "600"]);
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).contains("bch_63_51"));
    std::fs::write(&cfg, "this line has no equals sign\n").unwrap();
    assert_eq!(sbnd(&["--config", p(&cfg), "eval"]).status.code(), Some(2));
}

#[test]
fn results_independent_of_worker_count() {
    let run = |w: &str| {
        stdout(&sbnd(&[
            "--workers", w, "eval", "--polar", "16", "8", "--ebn0", "1,2", "--decoder", "osd1", "--min-frames", "3000",
        ]))
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn plot_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    let svg = dir.path().join("r.svg");
    std::fs::write(
        &csv,
        "ebn0_db,frames,bit_errors,frame_errors,ber,fer,decoder,code,seed\n\
         0,10000,8000,3000,1e-1,3e-1,hard,\"polar(16,8)\",0\n\
         1,10000,800,300,1e-2,3e-2,hard,\"polar(16,8)\",0\n",
    )
    .unwrap();
    let o = sbnd(&["plot", "--input", p(&csv), "--out", p(&svg)]);
    assert!(o.status.success(), "{o:?}");
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<polyline"));
    std::fs::write(&csv, "not,a,results,file\n").unwrap();
    assert_eq!(sbnd(&["plot", "--input", p(&csv), "--out", p(&svg)]).status.code(), Some(2));
}
