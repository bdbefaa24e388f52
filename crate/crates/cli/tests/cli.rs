use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sptk_core::features::{self, Format};

fn sptk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sptk")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL: &str = "1 1 1 1.0\n1 2 2 0.5\n2 1 1 2.0\n";

fn dense_cube(n: u64) -> String {
    let mut out = String::new();
    for i in 1..=n {
        for j in 1..=n {
            for k in 1..=n {
                out.push_str(&format!("{i} {j} {k} 1.0\n"));
            }
        }
    }
    out
}

const GEN: [&str; 18] = [
    "generate", "--dims", "100,100,100", "--d-slc", "1e-1", "--d-fib", "1e-2", "--d-nz", "1e-3", "--cv-fib",
    "1", "--cv-nz", "1", "--imbal-fib", "0.5", "--imbal-nz", "0.5", "--reproducible",
];

#[test]
fn extract_small_fixture_has_146_features() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "in.tns", SMALL);
    let out = dir.path().join("f.json");
    let o = sptk(&["extract", "--method", "hybrid", "--modes", "top3", s(&input), "-o", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let fs = features::deserialize(&std::fs::read(&out).unwrap(), Format::Json).unwrap();
    assert_eq!(fs.scalar_rows().len(), 146);
    assert_eq!(fs.meta.method, "hybrid");
    assert!(fs.meta.wall_time_s.is_some() && fs.meta.workers.is_some());
}

#[test]
fn extract_csv_by_extension() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "in.tns", SMALL);
    let out = dir.path().join("f.csv");
    assert_eq!(code(&sptk(&["extract", s(&input), "-o", s(&out)])), 0);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("feature,kind,modes,value"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 147);
}

#[test]
fn group_over_cap_falls_back_with_note() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "in.tns", SMALL);
    let o = sptk(&["extract", "--method", "group", "--group-cap-words", "1", s(&input)]);
    assert_eq!(code(&o), 0);
    let fs = features::deserialize(&o.stdout, Format::Json).unwrap();
    assert_eq!(fs.meta.notes.len(), 3);
    assert!(fs.meta.notes.iter().all(|n| n.contains("fell back to sort")));
}

#[test]
fn all_modes_sort_on_four_modes_is_unsupported() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "in.tns", "1 1 1 1 1.0\n2 2 2 2 1.0\n");
    let o = sptk(&["extract", "--modes", "all", "--method", "sort", s(&input)]);
    assert_eq!(code(&o), 2);
    assert!(o.stdout.is_empty());
    assert!(!o.stderr.is_empty());
    let o = sptk(&["extract", "--modes", "all", "--method", "hash", s(&input)]);
    assert_eq!(code(&o), 0);
}

#[test]
fn bad_inputs_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.tns", "1 1 x 1.0\n");
    assert_eq!(code(&sptk(&["extract", s(&bad)])), 1);
    assert_eq!(code(&sptk(&["extract", s(&dir.path().join("missing.tns"))])), 1);
    let dup = write(dir.path(), "dup.tns", "1 1 1 1.0\n1 1 1 2.0\n");
    assert_eq!(code(&sptk(&["extract", s(&dup)])), 1);
    assert_eq!(code(&sptk(&["extract", "--duplicates", "sum", s(&dup)])), 0);
    let input = write(dir.path(), "in.tns", SMALL);
    let nowhere = dir.path().join("no/such/dir/f.json");
    assert_eq!(code(&sptk(&["extract", s(&input), "-o", s(&nowhere)])), 1);
}

fn generate_with_seed(dir: &Path, seed: &str) -> (Vec<u8>, serde_json::Value) {
    let p = dir.join(format!("seed{seed}.tns"));
    let mut args = GEN.to_vec();
    args.extend(["--seed", seed, "-o", s(&p)]);
    let o = sptk(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    (std::fs::read(&p).unwrap(), summary)
}

#[test]
fn generate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, sa) = generate_with_seed(dir.path(), "0");
    let (b, sb) = generate_with_seed(dir.path(), "0");
    let (c, _) = generate_with_seed(dir.path(), "1");
    assert_eq!(a, b);
    assert_eq!(sa, sb);
    assert_ne!(a, c);
    let lines = a.iter().filter(|&&b| b == b'\n').count() as u64;
    assert_eq!(lines, sa["nnz"].as_u64().unwrap());
    for key in ["nslc", "nfib", "nnz"] {
        assert!(sa[key].is_u64());
    }
}

#[test]
fn generate_seed_one_nnz_within_one_percent_of_seed_zero() {
    let dir = tempfile::tempdir().unwrap();
    let (_, s0) = generate_with_seed(dir.path(), "0");
    let (_, s1) = generate_with_seed(dir.path(), "1");
    let n0 = s0["nnz"].as_f64().unwrap();
    let n1 = s1["nnz"].as_f64().unwrap();
    assert!((n1 / n0 - 1.0).abs() <= 0.01, "nnz {n0} vs {n1}");
}

#[test]
fn generate_infeasible_exits_2() {
    let o = sptk(&[
        "generate", "--dims", "100,100,100", "--d-slc", "0.5", "--d-fib", "0.1", "--d-nz", "1e-4",
    ]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("nonzeros per fiber"));
    let o = sptk(&["generate", "--dims", "100,100,100", "--d-slc", "0.5", "--d-fib", "0.1"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn config_file_mirrors_flags() {
    let dir = tempfile::tempdir().unwrap();
    let json = write(
        dir.path(),
        "gen.json",
        r#"{"dims": [100, 100, 100], "d-slc": 0.1, "d_fib": 0.01, "d_nz": 1e-3, "cv_fib": 1, "cv_nz": 1,
            "imbal_fib": 0.5, "imbal_nz": 0.5, "seed": 3, "reproducible": true}"#,
    );
    let kv = write(
        dir.path(),
        "gen.cfg",
        "dims=100,100,100\nd_slc=0.1\nd_fib=0.01\nd_nz=1e-3\ncv_fib=1\ncv_nz=1\nimbal_fib=0.5\nimbal_nz=0.5\nseed=3\n",
    );
    let mut flags = GEN.to_vec();
    flags.extend(["--seed", "3"]);
    let a = sptk(&flags);
    let b = sptk(&["generate", "--config", s(&json)]);
    let c = sptk(&["generate", "--config", s(&kv), "--reproducible"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    let d = sptk(&["generate", "--config", s(&json), "--seed", "4"]);
    assert_ne!(a.stdout, d.stdout);
}

#[test]
fn roundtrip_generated_fixture_is_green() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("g.tns");
    let mut args = GEN.to_vec();
    args.extend(["-o", s(&t)]);
    assert_eq!(code(&sptk(&args)), 0);
    let o = sptk(&["roundtrip", s(&t)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "feature,original,generated,ratio,band");
    for name in ["d_slc", "d_fib", "d_nz"] {
        let row = rows.iter().find(|r| r.starts_with(&format!("{name},"))).unwrap();
        assert!(row.ends_with(",green"), "{row}");
    }
}

#[test]
fn roundtrip_zero_cv_omits_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let t = write(dir.path(), "cube.tns", &dense_cube(4));
    let o = sptk(&["roundtrip", s(&t)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ["cv_fib_per_slice", "cv_nz_per_fiber"] {
        let row = text.lines().find(|r| r.starts_with(name)).unwrap();
        assert!(row.ends_with(",-,-"), "{row}");
    }
}

#[test]
fn bench_columns() {
    let dir = tempfile::tempdir().unwrap();
    let t = write(dir.path(), "t.tns", "1 1 1 1.0\n50 2 3 1.0\n2 5 50 1.0\n");
    let o = sptk(&["bench", "--method", "sort,group", "--reps", "1", s(&t)]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "tensor,method,mode,decision_metric,path,rep1");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2 * 4);
    // dims are 50, 5, 50: mode m pairs with mode m+1 cyclically
    let metric = |m: &str, mode: &str| rows.iter().find(|r| r[1] == m && r[2] == mode).unwrap()[3];
    for m in ["sort", "group"] {
        assert_eq!(metric(m, "1"), "250");
        assert_eq!(metric(m, "2"), "250");
        assert_eq!(metric(m, "3"), "2500");
    }
    assert!(rows.iter().all(|r| r.len() == 6));

    let o = sptk(&["bench", "--method", "hash", s(&t)]);
    let header = String::from_utf8(o.stdout).unwrap();
    assert!(header.starts_with("tensor,method,mode,decision_metric,path,rep1,rep2,rep3,mean\n"));
}

#[test]
fn bench_marks_failed_rows() {
    let dir = tempfile::tempdir().unwrap();
    let t = write(dir.path(), "t.tns", "1 1 1 1 1.0\n2 2 2 2 1.0\n");
    let o = sptk(&["bench", "--modes", "all", "--method", "sort,hash", "--reps", "1", s(&t)]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("t.tns,sort,total") && l.contains("failed")));
    assert!(text.lines().any(|l| l.starts_with("t.tns,hash,total") && !l.contains("failed")));
}

#[test]
fn compare_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.tns", SMALL);
    let b = write(dir.path(), "b.tns", &dense_cube(2));
    let fa = dir.path().join("fa.json");
    let fs = dir.path().join("fs.csv");
    let fb = dir.path().join("fb.json");
    assert_eq!(code(&sptk(&["extract", "--method", "hash", s(&a), "-o", s(&fa)])), 0);
    assert_eq!(code(&sptk(&["extract", "--method", "sort", s(&a), "-o", s(&fs)])), 0);
    assert_eq!(code(&sptk(&["extract", s(&b), "-o", s(&fb)])), 0);
    let o = sptk(&["compare", s(&fa), s(&fa)]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    assert_eq!(code(&sptk(&["compare", s(&fa), s(&fs)])), 0);
    let o = sptk(&["compare", s(&fa), s(&fb)]);
    assert_eq!(code(&o), 3);
    assert!(!o.stdout.is_empty());
    let junk = write(dir.path(), "junk.json", "{");
    assert_eq!(code(&sptk(&["compare", s(&fa), s(&junk)])), 1);
}

#[test]
fn threads_flag_validation() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.tns", SMALL);
    assert_eq!(code(&sptk(&["extract", "--threads", "0", s(&a)])), 2);
    assert_eq!(code(&sptk(&["extract", "--threads", "3", s(&a)])), 0);
    assert_eq!(code(&sptk(&["frobnicate"])), 2);
}
