use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn blockcount(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blockcount"))
        .args(args)
        .env_remove("BLOCKCOUNT_THREADS")
        .output()
        .expect("binary runs")
}

fn sim_args<'a>(out: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut args = vec![
        "--design",
        "s1",
        "--model",
        "dcsbm",
        "--n",
        "150",
        "--rho",
        "3",
        "--k0",
        "2",
        "--reps",
        "3",
        "--seed",
        "9",
        "--kmax",
        "4",
        "--restarts",
        "4",
        "--out",
        out,
    ];
    args.extend_from_slice(extra);
    args
}

/// Two dense blocks of 20 joined by a few edges, labelled with strings.
fn write_two_block_graph(path: &Path) {
    let mut text = String::from("# two communities\n");
    for block in 0..2 {
        for i in 0..20 {
            for j in i + 1..20 {
                if (i * 7 + j * 3) % 4 != 0 {
                    text.push_str(&format!("b{block}n{i} b{block}n{j}\n"));
                }
            }
        }
    }
    for i in 0..3 {
        text.push_str(&format!("b0n{i} b1n{}\n", i + 5));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn missing_input_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.txt");
    let out = blockcount(&[
        "estimate",
        "--input",
        missing.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains(missing.to_str().unwrap()), "{stderr}");
}

#[test]
fn estimate_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("g.txt");
    write_two_block_graph(&input);
    let out_dir = dir.path().join("out");
    let out = blockcount(&[
        "estimate",
        "--input",
        input.to_str().unwrap(),
        "--kmax",
        "4",
        "--dump-spectrum",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.starts_with("K1="), "{stdout}");
    for name in [
        "trace.json",
        "partition.csv",
        "block_matrix.csv",
        "node_map.json",
        "eigenvalues.csv",
        "embedding.csv",
    ] {
        assert!(out_dir.join(name).exists(), "{name} missing");
    }
    let partition = fs::read_to_string(out_dir.join("partition.csv")).unwrap();
    assert!(partition.starts_with("node_label,group\nb0n0,"));
    assert_eq!(partition.lines().count(), 41);
    let trace = fs::read_to_string(out_dir.join("trace.json")).unwrap();
    for key in ["\"per_K\"", "\"K1\"", "\"K2_tilde\"", "\"h_n\""] {
        assert!(trace.contains(key), "{key} missing from trace");
    }
}

#[test]
fn simulate_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let mut first = vec!["simulate"];
    first.extend(sim_args(a.to_str().unwrap(), &[]));
    let mut second = vec!["simulate"];
    second.extend(sim_args(b.to_str().unwrap(), &[]));
    assert!(blockcount(&first).status.success());
    let out = Command::new(env!("CARGO_BIN_EXE_blockcount"))
        .args(&second)
        .env("BLOCKCOUNT_THREADS", "1")
        .output()
        .unwrap();
    assert!(out.status.success());
    let x = fs::read(a.join("summary.csv")).unwrap();
    let y = fs::read(b.join("summary.csv")).unwrap();
    assert_eq!(x, y);
    let text = String::from_utf8(x).unwrap();
    assert!(
        text.starts_with("design,model,n,rho,K0,estimator,c_h,mean,prop,replications,failures\n")
    );
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn zero_threshold_makes_k2_equal_k1() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("s");
    let mut args = vec!["sensitivity", "--c-h-grid", "0,2"];
    args.extend(sim_args(out_dir.to_str().unwrap(), &[]));
    let out = blockcount(&args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    let rows: Vec<Vec<&str>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0][6], "0.0");
    assert_eq!(rows[0][7..], rows[1][7..]);
}

#[test]
fn single_point_grid_matches_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    let sens = dir.path().join("sens");
    let mut a = vec!["simulate"];
    a.extend(sim_args(sim.to_str().unwrap(), &[]));
    let mut b = vec!["sensitivity", "--c-h-grid", "1.0"];
    b.extend(sim_args(sens.to_str().unwrap(), &[]));
    assert!(blockcount(&a).status.success());
    assert!(blockcount(&b).status.success());
    assert_eq!(
        fs::read(sim.join("summary.csv")).unwrap(),
        fs::read(sens.join("summary.csv")).unwrap()
    );
}

#[test]
fn bad_thread_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["simulate"];
    let out_dir = dir.path().join("x");
    args.extend(sim_args(out_dir.to_str().unwrap(), &[]));
    let out = Command::new(env!("CARGO_BIN_EXE_blockcount"))
        .args(&args)
        .env("BLOCKCOUNT_THREADS", "lots")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("BLOCKCOUNT_THREADS"));
}

#[test]
fn design_one_requires_rho() {
    let dir = tempfile::tempdir().unwrap();
    let out = blockcount(&[
        "simulate",
        "--design",
        "s1",
        "--model",
        "sbm",
        "--n",
        "50",
        "--k0",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--rho"));
}
