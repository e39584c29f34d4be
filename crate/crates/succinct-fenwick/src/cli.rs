//! The `sfen` command line.
//!
//! Subcommands: `build` turns an array file into a structure file, `query`
//! replays a trace against a structure file, `verify` runs a seeded
//! differential check against the naive oracle, `bench` times op kinds into
//! a CSV, and `space` itemizes a structure file's bits against its bound.
//!
//! Exit codes: 0 success, 1 divergence or bound FAIL, 2 usage or parse
//! error. Everything is single-threaded and deterministic for a fixed seed
//! (bench timings aside).

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bits::mask;
use crate::error::{Error, Result};
use crate::files::{self, AnyStructure, StructureKind};
use crate::oracle::{differential_run, gen_array, gen_trace, TraceConfig};
use crate::traits::{Op, OpKind, PartialSums};
use crate::{derive_sample_rate, ClassicFenwick, LayeredFenwick, PackedFenwick, SampledFenwick};

#[derive(Parser)]
#[command(
    name = "sfen",
    version,
    about = "dynamic partial sums: build, query, verify, bench, space"
)]
pub struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a structure file from an array file.
    Build(BuildArgs),
    /// Replay a trace file against a structure file, one line per answer.
    Query(QueryArgs),
    /// Differential-check a structure against the naive oracle.
    Verify(VerifyArgs),
    /// Time op kinds on generated workloads, medians into a CSV.
    Bench(BenchArgs),
    /// Itemize a structure file's bits and judge them against the bound.
    Space(SpaceArgs),
}

/// Entry point for the `sfen` binary; returns the process exit code.
pub fn run() -> ExitCode {
    match dispatch(Cli::parse().cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<ExitCode> {
    match cmd {
        Cmd::Build(a) => cmd_build(a),
        Cmd::Query(a) => cmd_query(a),
        Cmd::Verify(a) => cmd_verify(a),
        Cmd::Bench(a) => cmd_bench(a),
        Cmd::Space(a) => cmd_space(a),
    }
}

/// Structure-shaping knobs shared by build, verify, and bench.
#[derive(Args, Clone)]
struct StructParams {
    /// Branching factor for the layered and sampled trees (default 2).
    #[arg(long)]
    b: Option<u64>,
    /// Sampled redundancy knob: d = round(log_b n / epsilon) (default 1).
    #[arg(long, conflicts_with = "d")]
    epsilon: Option<f64>,
    /// Explicit sampled rate, overrides --epsilon.
    #[arg(long)]
    d: Option<u64>,
    /// Packed update magnitude bound: |delta| < 2^delta-bits (default 8).
    #[arg(long, value_name = "DB")]
    delta_bits: Option<u32>,
}

/// Builds the requested structure. In strict mode flags that do not apply to
/// the chosen structure are refused by name; bench passes strict = false so
/// one invocation can sweep all four kinds with shared flags.
fn build_structure(
    kind: StructureKind,
    values: &[u64],
    k: u32,
    p: &StructParams,
    strict: bool,
) -> Result<AnyStructure> {
    let refuse = |given: bool, flag: &str| {
        if strict && given {
            Err(Error::invalid(format!("{flag} does not apply to {}", kind.name())))
        } else {
            Ok(())
        }
    };
    let b = p.b.unwrap_or(2);
    Ok(match kind {
        StructureKind::Classic => {
            refuse(p.b.is_some(), "--b")?;
            refuse(p.epsilon.is_some(), "--epsilon")?;
            refuse(p.d.is_some(), "--d")?;
            refuse(p.delta_bits.is_some(), "--delta-bits")?;
            AnyStructure::Classic(ClassicFenwick::new(values, k)?)
        }
        StructureKind::Layered => {
            refuse(p.epsilon.is_some(), "--epsilon")?;
            refuse(p.d.is_some(), "--d")?;
            refuse(p.delta_bits.is_some(), "--delta-bits")?;
            AnyStructure::Layered(LayeredFenwick::new(values, k, b)?)
        }
        StructureKind::Sampled => {
            refuse(p.delta_bits.is_some(), "--delta-bits")?;
            let d = match p.d {
                Some(d) => d,
                None => derive_sample_rate(
                    values.len() as u64,
                    b,
                    p.epsilon.unwrap_or(1.0),
                )?,
            };
            AnyStructure::Sampled(SampledFenwick::new(values, k, b, d)?)
        }
        StructureKind::Packed => {
            refuse(p.b.is_some(), "--b")?;
            refuse(p.epsilon.is_some(), "--epsilon")?;
            refuse(p.d.is_some(), "--d")?;
            AnyStructure::Packed(PackedFenwick::new(values, k, p.delta_bits.unwrap_or(8))?)
        }
    })
}

fn fmt_op(op: &Op) -> String {
    files::format_trace(std::slice::from_ref(op)).trim_end().to_string()
}

// ------------------------------------------------------------------ build

#[derive(Args)]
struct BuildArgs {
    /// Array file to load.
    #[arg(long)]
    input: PathBuf,
    /// One of classic, layered, sampled, packed.
    #[arg(long)]
    structure: String,
    #[command(flatten)]
    params: StructParams,
    /// Structure file to write.
    #[arg(long)]
    output: PathBuf,
}

fn cmd_build(a: BuildArgs) -> Result<ExitCode> {
    let kind: StructureKind = a.structure.parse()?;
    let (values, k) = files::read_array_file(&a.input)?;
    let s = build_structure(kind, &values, k, &a.params, true)?;
    files::write_structure_file(&a.output, &s)?;
    println!(
        "wrote {}: {} n={} k={} b={} d={}",
        a.output.display(),
        kind.name(),
        s.as_dyn().len(),
        k,
        s.branching(),
        s.sample_rate()
    );
    Ok(ExitCode::SUCCESS)
}

// ------------------------------------------------------------------ query

#[derive(Args)]
struct QueryArgs {
    /// Structure file to replay against.
    struct_path: PathBuf,
    /// Trace file to replay.
    #[arg(long)]
    trace: PathBuf,
    /// Write answers here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_query(a: QueryArgs) -> Result<ExitCode> {
    let mut s = files::read_structure_file(&a.struct_path)?;
    let subject = s.as_dyn_mut();
    let n = subject.len();
    let k = subject.value_width();
    let ops = files::parse_trace_lines(&fs::read_to_string(&a.trace)?, n)?;
    // replay against a shadow copy so an update that would leave its element
    // outside [0, 2^k) is refused with the offending line number instead of
    // tripping the structure's own precondition check
    let mut shadow: Vec<u64> = (1..=n).map(|i| subject.access(i)).collect();
    let mut out = String::new();
    for (line, op) in &ops {
        if let Op::Update { i, delta } = op {
            let slot = &mut shadow[*i as usize - 1];
            match slot.checked_add_signed(*delta).filter(|v| *v <= mask(k)) {
                Some(v) => *slot = v,
                None => {
                    return Err(Error::TraceLine {
                        line: *line,
                        reason: format!(
                            "update {i} {delta} leaves the element outside 0..={}",
                            mask(k)
                        ),
                    })
                }
            }
        }
        if let Some(ans) = op.apply(subject) {
            writeln!(out, "{ans}").unwrap();
        }
    }
    match &a.out {
        Some(p) => fs::write(p, out)?,
        None => print!("{out}"),
    }
    Ok(ExitCode::SUCCESS)
}

// ----------------------------------------------------------------- verify

#[derive(Args)]
struct VerifyArgs {
    /// Array length.
    #[arg(long)]
    n: u64,
    /// Element width in bits.
    #[arg(long, default_value_t = 8)]
    k: u32,
    /// One of classic, layered, sampled, packed.
    #[arg(long)]
    structure: String,
    /// Trace length.
    #[arg(long, default_value_t = 10_000)]
    ops: usize,
    /// Seed for the array and the trace.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    params: StructParams,
}

#[derive(Clone, Copy)]
enum Dim {
    Reads,
    Writes,
}

impl Dim {
    fn label(self) -> &'static str {
        match self {
            Dim::Reads => "reads",
            Dim::Writes => "writes",
        }
    }
}

/// Worst-case storage touches per op, from the structure's own shape. These
/// are the budgets the instrumented maxima are judged against.
fn op_budgets(s: &AnyStructure) -> Vec<(OpKind, Dim, u64)> {
    use OpKind::*;
    match s {
        AnyStructure::Classic(c) => {
            let h = 64 - c.len().leading_zeros() as u64; // floor(log2 n) + 1
            vec![
                (Sum, Dim::Reads, h),
                (Update, Dim::Writes, h),
                (Search, Dim::Reads, h),
                (Access, Dim::Reads, 2 * h),
            ]
        }
        AnyStructure::Layered(l) => {
            let g = l.geometry();
            let lv = g.num_levels() as u64;
            let c = g.digit_bits() as u64;
            vec![
                (Sum, Dim::Reads, lv),
                (Update, Dim::Writes, (g.b() - 1) * lv),
                (Search, Dim::Reads, lv * c),
                (Access, Dim::Reads, 2 * lv),
            ]
        }
        AnyStructure::Sampled(sp) => {
            let g = sp.tree().geometry();
            let lv = g.num_levels() as u64;
            let c = g.digit_bits() as u64;
            let d = sp.sample_rate();
            vec![
                (Sum, Dim::Reads, lv + d - 1),
                (Update, Dim::Writes, (g.b() - 1) * lv + 1),
                (Search, Dim::Reads, lv * c + d),
                (Access, Dim::Reads, 2 * (lv + d - 1)),
            ]
        }
        AnyStructure::Packed(p) => {
            // tree words only; cursors and the base are tallied separately
            let lv = p.parts().entries.len() as u64;
            let c = crate::bits::ceil_log2(p.params().b) as u64;
            vec![
                (Sum, Dim::Reads, 2 * lv),
                (Update, Dim::Writes, 2 * lv),
                (Search, Dim::Reads, (c + 1) * lv),
                (Access, Dim::Reads, 4 * lv),
            ]
        }
    }
}

fn cmd_verify(a: VerifyArgs) -> Result<ExitCode> {
    let kind: StructureKind = a.structure.parse()?;
    let values = gen_array(a.n, a.k, a.seed);
    let mut s = build_structure(kind, &values, a.k, &a.params, true)?;
    let mut cfg = TraceConfig::uniform(a.n, a.k, a.ops, a.seed);
    if let AnyStructure::Packed(p) = &s {
        cfg.delta_bits = Some(p.params().delta_bits);
    }
    let trace = gen_trace(&cfg, &values);
    let report = differential_run(&values, a.k, &trace, s.as_dyn_mut());
    println!(
        "verify {} n={} k={} b={} d={} ops={} seed={}",
        kind.name(),
        a.n,
        a.k,
        s.branching(),
        s.sample_rate(),
        a.ops,
        a.seed
    );
    println!("per-op storage-touch maxima vs budget:");
    for (kd, dim, budget) in op_budgets(&s) {
        let st = report.max_cost_of(kd);
        let got = match dim {
            Dim::Reads => st.reads,
            Dim::Writes => st.writes,
        };
        println!(
            "  {:<7} {:<6} max {:>4} / budget {:>4}  {}",
            kd.label(),
            dim.label(),
            got,
            budget,
            if got <= budget { "within" } else { "OVER" }
        );
    }
    match &report.divergence {
        None => {
            println!("result: OK ({} ops, zero divergences)", report.ops_executed);
            Ok(ExitCode::SUCCESS)
        }
        Some(dv) => {
            println!(
                "result: DIVERGED at op {} ({}): expected {}, got {}",
                dv.op_index,
                fmt_op(&dv.op),
                dv.expected,
                dv.got
            );
            Ok(ExitCode::from(1))
        }
    }
}

// ------------------------------------------------------------------ bench

#[derive(Args)]
struct BenchArgs {
    /// Array length.
    #[arg(long)]
    n: u64,
    /// Element width in bits.
    #[arg(long, default_value_t = 8)]
    k: u32,
    /// Comma-separated subset of classic,layered,sampled,packed, or "all".
    #[arg(long, default_value = "all")]
    structure: String,
    /// Total op budget, split across kinds by --mix.
    #[arg(long, default_value_t = 100_000)]
    ops: usize,
    /// sum:update:search weights; kinds with weight 0 are skipped.
    #[arg(long, default_value = "1:1:1")]
    mix: String,
    /// CSV output path.
    #[arg(long)]
    csv: PathBuf,
    /// Seed for the array and the workloads.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    params: StructParams,
}

const BENCH_REPS: usize = 5;
const CSV_HEADER: &str = "structure,n,k,b,d,op,ops_per_sec,ns_per_op,space_bits,bound_bits";

fn parse_mix(s: &str) -> Result<[u64; 3]> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::invalid(format!("mix {s:?} is not of the form SUM:UPDATE:SEARCH"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let mut mix = [0u64; 3];
    for (slot, p) in mix.iter_mut().zip(parts) {
        *slot = p.parse().map_err(|_| bad())?;
    }
    if mix.iter().sum::<u64>() == 0 {
        return Err(Error::invalid("mix must have positive total weight".to_string()));
    }
    Ok(mix)
}

fn parse_kinds(s: &str) -> Result<Vec<StructureKind>> {
    if s == "all" {
        return Ok(StructureKind::ALL.to_vec());
    }
    s.split(',').map(|p| p.trim().parse()).collect()
}

/// Per-kind workloads that stay legal no matter how often they are replayed:
/// updates come in (+1, -1) pairs on the same element, so each rep returns
/// the array to its initial state.
fn bench_batches(values: &[u64], k: u32, counts: [usize; 3], seed: u64) -> Vec<(OpKind, Vec<Op>)> {
    let n = values.len() as u64;
    let total: u64 = values.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_b41c);
    let mut out = Vec::new();
    if counts[0] > 0 {
        let ops = (0..counts[0]).map(|_| Op::Sum { i: rng.gen_range(1..=n) }).collect();
        out.push((OpKind::Sum, ops));
    }
    if counts[1] > 0 {
        let mut ops = Vec::with_capacity(counts[1] + 1);
        while ops.len() < counts[1] {
            let i = rng.gen_range(1..=n);
            let up = Op::Update { i, delta: 1 };
            let down = Op::Update { i, delta: -1 };
            if values[i as usize - 1] < mask(k) {
                ops.push(up);
                ops.push(down);
            } else {
                ops.push(down);
                ops.push(up);
            }
        }
        out.push((OpKind::Update, ops));
    }
    if counts[2] > 0 {
        let hi = total.max(1);
        let ops = (0..counts[2]).map(|_| Op::Search { j: rng.gen_range(1..=hi) }).collect();
        out.push((OpKind::Search, ops));
    }
    out
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        (xs[m - 1] + xs[m]) / 2.0
    }
}

fn cmd_bench(a: BenchArgs) -> Result<ExitCode> {
    let kinds = parse_kinds(&a.structure)?;
    let mix = parse_mix(&a.mix)?;
    let wsum: u64 = mix.iter().sum();
    let counts = mix.map(|w| (a.ops as u64 * w / wsum).max(if w > 0 { 1 } else { 0 }) as usize);
    let values = gen_array(a.n, a.k, a.seed);
    let batches = bench_batches(&values, a.k, counts, a.seed);

    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    let mut rows = 0;
    for kind in kinds {
        let mut s = build_structure(kind, &values, a.k, &a.params, false)?;
        let space = s.as_dyn().space();
        let (space_bits, bound_bits) = (space.payload_bits(), space.bound_bits);
        let subject = s.as_dyn_mut();
        let mut samples: Vec<Vec<f64>> = vec![Vec::new(); batches.len()];
        for _ in 0..BENCH_REPS {
            for (slot, (_, ops)) in samples.iter_mut().zip(&batches) {
                let started = Instant::now();
                let mut sink = 0u64;
                for op in ops {
                    if let Some(v) = op.apply(subject) {
                        sink ^= v;
                    }
                }
                let elapsed = started.elapsed();
                std::hint::black_box(sink);
                slot.push(elapsed.as_nanos() as f64 / ops.len() as f64);
            }
        }
        for (slot, (kd, _)) in samples.into_iter().zip(&batches) {
            let ns = median(slot);
            writeln!(
                csv,
                "{},{},{},{},{},{},{:.0},{:.2},{},{}",
                kind.name(),
                a.n,
                a.k,
                s.branching(),
                s.sample_rate(),
                kd.label(),
                1e9 / ns,
                ns,
                space_bits,
                bound_bits
            )
            .unwrap();
            rows += 1;
        }
    }
    fs::write(&a.csv, csv)?;
    println!("wrote {rows} rows to {}", a.csv.display());
    Ok(ExitCode::SUCCESS)
}

// ------------------------------------------------------------------ space

#[derive(Args)]
struct SpaceArgs {
    /// Structure file to measure.
    struct_path: PathBuf,
}

fn cmd_space(a: SpaceArgs) -> Result<ExitCode> {
    let s = files::read_structure_file(&a.struct_path)?;
    let subject = s.as_dyn();
    let report = subject.space();
    println!(
        "{} n={} k={} b={} d={}",
        s.kind().name(),
        subject.len(),
        subject.value_width(),
        s.branching(),
        s.sample_rate()
    );
    for (part, bits) in &report.components {
        println!("  {part:<30} {bits:>14} bits");
    }
    println!("  {:<30} {:>14} bits", "payload total", report.payload_bits());
    println!("  {:<30} {:>14} bits", "metadata", report.metadata_bits);
    println!("  bound  {}", report.bound_desc);
    let ok = report.within_bound();
    println!("payload within bound: {}", if ok { "PASS" } else { "FAIL" });
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
