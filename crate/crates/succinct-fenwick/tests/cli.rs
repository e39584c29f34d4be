//! End-to-end checks of the sfen subcommands over real files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use succinct_fenwick::files::write_array_file;
use succinct_fenwick::oracle::gen_array;

fn sfen<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_sfen")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).to_string()
}

struct Dir(tempfile::TempDir);

impl Dir {
    fn new() -> Dir {
        Dir(tempfile::tempdir().unwrap())
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.path().join(name)
    }

    fn array(&self, name: &str, n: u64, k: u32, seed: u64) -> PathBuf {
        let p = self.path(name);
        write_array_file(&p, &gen_array(n, k, seed), k).unwrap();
        p
    }
}

fn build(dir: &Dir, input: &Path, structure: &str, extra: &[&str], out: &str) -> PathBuf {
    let outp = dir.path(out);
    let mut args = vec![
        "build".to_string(),
        "--input".to_string(),
        input.display().to_string(),
        "--structure".to_string(),
        structure.to_string(),
        "--output".to_string(),
        outp.display().to_string(),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    let res = sfen(args);
    assert!(res.status.success(), "build failed: {}", stderr(&res));
    outp
}

#[test]
fn classic_build_round_trips() {
    let dir = Dir::new();
    let input = dir.array("a.psar", 4, 8, 1);
    let s1 = build(&dir, &input, "classic", &[], "c1");
    let s2 = build(&dir, &input, "classic", &[], "c2");
    assert_eq!(std::fs::read(&s1).unwrap(), std::fs::read(&s2).unwrap());

    std::fs::write(dir.path("t"), "sum 0\nsum 4\naccess 2\n").unwrap();
    let out = sfen([
        "query".into(),
        s1.display().to_string(),
        "--trace".into(),
        dir.path("t").display().to_string(),
    ]);
    assert!(out.status.success());
    // `sum 0` answers 0
    assert!(stdout(&out).starts_with("0\n"));
}

#[test]
fn epsilon_one_records_derived_sample_rate() {
    let dir = Dir::new();
    let input = dir.array("a.psar", 729, 8, 2);
    let built = build(&dir, &input, "sampled", &["--b", "3", "--epsilon", "1"], "s");
    // d = round(log_3 729) = 6, recorded in the structure header
    let out = sfen(["space".into(), built.display().to_string()]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("d=6"), "{}", stdout(&out));
}

#[test]
fn space_passes_on_power_grids() {
    let dir = Dir::new();
    let input = dir.array("a.psar", 729, 8, 3);
    for (structure, extra) in [
        ("layered", &["--b", "3"][..]),
        ("sampled", &["--b", "3", "--epsilon", "1"][..]),
    ] {
        let built = build(&dir, &input, structure, extra, structure);
        let out = sfen(["space".into(), built.display().to_string()]);
        assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
        assert!(stdout(&out).contains("PASS"), "{}", stdout(&out));
    }

    let big = dir.array("big.psar", 19683, 8, 3);
    let built = build(&dir, &big, "sampled", &["--b", "3", "--epsilon", "1"], "s9");
    let out = sfen(["space".into(), built.display().to_string()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("PASS"));
}

#[test]
fn single_element_payload_is_k_bits() {
    let dir = Dir::new();
    let input = dir.array("one.psar", 1, 8, 4);
    let built = build(&dir, &input, "layered", &[], "one");
    let out = sfen(["space".into(), built.display().to_string()]);
    let text = stdout(&out);
    assert!(
        text.contains("payload total") && text.contains("  8 bits"),
        "{text}"
    );
}

#[test]
fn query_names_offending_line() {
    let dir = Dir::new();
    let input = dir.array("a.psar", 10, 8, 5);
    let built = build(&dir, &input, "classic", &[], "c");
    std::fs::write(dir.path("t"), "# preamble\n\nsum 3\nsearch 0\n").unwrap();
    let out = sfen([
        "query".into(),
        built.display().to_string(),
        "--trace".into(),
        dir.path("t").display().to_string(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("trace line 4"), "{}", stderr(&out));
}

#[test]
fn query_out_file_matches_stdout() {
    let dir = Dir::new();
    let input = dir.array("a.psar", 50, 8, 6);
    let built = build(&dir, &input, "packed", &["--delta-bits", "4"], "p");
    std::fs::write(dir.path("t"), "sum 50\nupdate 3 7\nsum 50\nsearch 1\n").unwrap();
    let direct = sfen([
        "query".into(),
        built.display().to_string(),
        "--trace".into(),
        dir.path("t").display().to_string(),
    ]);
    assert!(direct.status.success());
    let via_file = sfen([
        "query".into(),
        built.display().to_string(),
        "--trace".into(),
        dir.path("t").display().to_string(),
        "--out".into(),
        dir.path("o").display().to_string(),
    ]);
    assert!(via_file.status.success());
    assert_eq!(std::fs::read(dir.path("o")).unwrap(), direct.stdout);
}

#[test]
fn bench_csv_shape() {
    let dir = Dir::new();
    let csv = dir.path("bench.csv");
    let out = sfen([
        "bench", "--n", "729", "--k", "8", "--ops", "3000", "--b", "3", "--mix", "2:1:1",
        "--csv",
    ]
    .into_iter()
    .map(String::from)
    .chain([csv.display().to_string()]));
    assert!(out.status.success(), "{}", stderr(&out));

    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "structure,n,k,b,d,op,ops_per_sec,ns_per_op,space_bits,bound_bits"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    // all four structures times three op kinds
    assert_eq!(rows.len(), 4 * 3);
    for row in &rows {
        assert_eq!(row.len(), 10);
        let (space, bound): (u64, u64) = (row[8].parse().unwrap(), row[9].parse().unwrap());
        if row[0] == "layered" || row[0] == "sampled" {
            // n = 3^6 grid: payload within the stated bound
            assert!(space <= bound, "{row:?}");
        }
    }
}

#[test]
fn usage_errors_exit_two() {
    let out = sfen(["query"]);
    assert_eq!(out.status.code(), Some(2));
    let dir = Dir::new();
    let input = dir.array("a.psar", 8, 8, 7);
    let out = sfen([
        "build".into(),
        "--input".into(),
        input.display().to_string(),
        "--structure".into(),
        "fancy".into(),
        "--output".into(),
        dir.path("x").display().to_string(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("unknown structure"));
}

#[test]
fn verify_is_reproducible() {
    let args = [
        "verify", "--n", "300", "--k", "8", "--structure", "sampled", "--b", "3", "--d", "5",
        "--ops", "3000", "--seed", "11",
    ];
    let a = sfen(args);
    let b = sfen(args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b));
    assert!(stdout(&a).contains("budget"));
}
