use std::process::{Command, Output};

fn fmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fmap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn verify_default_range_exits_zero() {
    let o = fmap(&["verify"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("k,seed,comparison,max_abs_diff,tolerance,passed"));
    // k = 4..=32 step 4, three comparisons each.
    assert_eq!(text.lines().count(), 1 + 8 * 3);
}

#[test]
fn verify_with_injected_fault_fails() {
    let o = fmap(&["verify", "--k-stop", "12", "--inject-fault"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).lines().skip(1).any(|l| l.ends_with(",0")));
}

#[test]
fn verify_f32_and_resolvent() {
    let o = fmap(&[
        "verify", "--k-start", "8", "--k-stop", "48", "--k-step", "20", "--precision", "f32", "--mask",
        "resolvent", "--sigma", "0.3", "--batch", "2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains(",1.00000000e-3,1"));
    assert!(text.lines().any(|l| l.starts_with("48,") && l.contains("rowwise-batched")));
}

#[test]
fn solver_errors_name_the_instance() {
    let o = fmap(&["verify", "--k-start", "6", "--k-stop", "6", "--d", "2", "--lambda", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("k = 6, seed = "), "{err}");
    assert!(err.contains("singular system"), "{err}");
}

#[test]
fn memory_matches_golden_file() {
    let o = fmap(&["memory", "--k-start", "100", "--k-stop", "300", "--k-step", "100"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), include_str!("golden/memory_100_300.csv"));
}

#[test]
fn metrics_sweep_matches_golden_file() {
    let o = fmap(&["metrics-sweep", "--steps", "5", "--n", "1000"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), include_str!("golden/sweep_steps5.csv"));
}

#[test]
fn metrics_sweep_to_file_has_2121_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let o = fmap(&["metrics-sweep", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next(), Some("r,predictor,metric,value,degenerate_flag"));
    assert_eq!(text.lines().count(), 1 + 2121);
    assert!(text.contains("\n2.5000000000000000e-1,zeros,accuracy,7.5000000000000000e-1,0\n"));
}

#[test]
fn unwritable_output_is_an_error() {
    let o = fmap(&["metrics-sweep", "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bench_small_sweep_schema() {
    let o = fmap(&[
        "bench", "--k-start", "10", "--k-stop", "30", "--k-step", "10", "--reps", "2", "--warmup", "1",
        "--mem-cap-bytes", "64000",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("# timing: monotonic clock, median of 2 reps after 1 warmup reps"));
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], "k,solver,median_ms,max_abs_diff,peak_extra_bytes,speedup,status");
    assert_eq!(data.len(), 1 + 6);
    assert!(data[2].starts_with("10,batched,"));
    assert_eq!(data[2].split(',').nth(4), Some("8000"));
    assert_eq!(data[4].split(',').nth(6), Some("ok"));
    assert_eq!(data[6], "30,batched,,,216000,,over_mem_cap");
}

#[test]
fn gradfeat_check_defaults_pass() {
    let o = fmap(&["gradfeat-check"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 6);
    assert!(text.lines().all(|l| l.starts_with("PASS ")));
}

#[test]
fn bad_flags_are_rejected() {
    assert!(!fmap(&["bench", "--precision", "f16"]).status.success());
    assert!(!fmap(&["bench", "--mask", "laplace"]).status.success());
    assert!(!fmap(&["verify", "--k-start", "9", "--k-stop", "3"]).status.success());
    assert!(!fmap(&["metrics-sweep", "--steps", "1"]).status.success());
}
