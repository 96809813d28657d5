//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Drives the real `cpslint` binary; oracles read the files
//! with plain string handling rather than through the engine.

use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

use cpslint_core::corrupt::{BlockRecord, CorruptionKind, CorruptionManifest};
use cpslint_core::dsl::{parse_script, DataType, ImputeStrategy, InterpolationKind};
use cpslint_core::golden::{generate, GoldenConfig, HEADER};
use cpslint_core::table::CellValue;
use cpslint_core::testing;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn(&Env) -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

struct Env {
    dir: tempfile::TempDir,
    golden: String,
}

impl Env {
    fn new() -> Self {
        let dir = tempfile::tempdir().expect("tempdir");
        let golden = generate(&GoldenConfig::default()).csv;
        fs::write(dir.path().join("golden.csv"), &golden).expect("write golden");
        Env { dir, golden }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn read(&self, name: &str) -> Result<String, String> {
        fs::read_to_string(self.path(name)).map_err(|e| format!("{name}: {e}"))
    }

    fn cpslint(&self, args: &[&str]) -> Result<(), String> {
        let out = Command::new(env!("CARGO_BIN_EXE_cpslint"))
            .args(args)
            .current_dir(self.dir.path())
            .env("NO_COLOR", "1")
            .output()
            .map_err(|e| e.to_string())?;
        if out.status.success() {
            Ok(())
        } else {
            Err(format!(
                "cpslint {} exited {:?}: {}",
                args.join(" "),
                out.status.code(),
                String::from_utf8_lossy(&out.stderr).trim()
            ))
        }
    }

    fn corrupt(&self, kind: &str, seed: u64, out: &str, extra: &[&str]) -> Result<CorruptionManifest, String> {
        let seed = seed.to_string();
        let mut args = vec!["corrupt", "golden.csv", "--kind", kind, "--seed", &seed, "--out", out];
        args.extend_from_slice(extra);
        self.cpslint(&args)?;
        CorruptionManifest::from_jsonl(&self.read(&format!("{out}.manifest"))?).map_err(|e| e.to_string())
    }

    fn run_script(&self, name: &str, body: &str) -> Result<(), String> {
        fs::write(self.path(name), body).map_err(|e| e.to_string())?;
        self.cpslint(&["run", name])
    }
}

/// Data rows split on commas; the golden trace never quotes a field.
fn grid(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn column_index(name: &str) -> usize {
    HEADER.iter().position(|h| *h == name).expect("known column")
}

fn script(input: &str, output: &str, columns: &[(&str, &str)], tail: &str) -> String {
    let mut s = format!("import \"{input}\" {{\n  skip empty rows\n}}\n\nexport \"{output}\" {{\n");
    for (name, rules) in columns {
        s.push_str(&format!("  column \"{name}\" {{\n{rules}  }}\n"));
    }
    s.push_str(tail);
    s.push_str("}\n");
    s
}

fn all_columns(real: &str) -> Vec<(&'static str, String)> {
    HEADER
        .iter()
        .map(|h| {
            let rules = if *h == HEADER[4] { "    enforce type uart\n".to_string() } else { real.to_string() };
            (*h, rules)
        })
        .collect()
}

fn borrowed<'a>(cols: &'a [(&'static str, String)]) -> Vec<(&'static str, &'a str)> {
    cols.iter().map(|(n, r)| (*n, r.as_str())).collect()
}

// ---------------------------------------------------------------------------

fn golden_idempotence(env: &Env) -> Outcome {
    let start = Instant::now();
    env.cpslint(&["inspect", "golden.csv", "--out", "baseline.cps"])?;
    let text = env.read("baseline.cps")?;
    let script = parse_script(&text).map_err(|e| e.to_string())?;
    let export = script.exports().next().ok_or("no export in baseline")?;
    let types: Vec<Option<DataType>> = export.mappings.iter().map(|m| m.enforced_type()).collect();
    let want = [DataType::Real, DataType::Real, DataType::Real, DataType::Real, DataType::Uart];
    ensure!(types == want.map(Some), "inferred {types:?}");
    env.cpslint(&["run", "baseline.cps"])?;
    let out = env.read("golden.sanitised.csv")?;
    ensure!(out == env.golden, "baseline output differs from the canonical input");
    let took = start.elapsed();
    ensure!(took < Duration::from_secs(5), "took {took:?}");
    Ok(format!("Real x4 + Uart, byte-identical, {:.2}s", took.as_secs_f64()))
}

fn reliable_order_recovery(env: &Env) -> Outcome {
    env.corrupt("out-of-order-reliable-ts", 42, "ooo.csv", &[])?;
    ensure!(env.read("ooo.csv")? != env.golden, "corruption changed nothing");
    let cols = all_columns("    enforce type real\n");
    let body = script("ooo.csv", "ooo.fixed.csv", &borrowed(&cols), "  sort by \"Timestamp (S)\" ascending\n");
    env.run_script("ooo.cps", &body)?;
    ensure!(env.read("ooo.fixed.csv")? == env.golden, "sorted output differs from golden");
    Ok("byte-identical to golden".into())
}

fn imputed_counts(report: &str, rule: &str) -> Vec<(String, usize)> {
    report
        .lines()
        .filter(|l| l.contains(&format!("{rule} |")))
        .filter_map(|l| {
            let col = l.split("column \"").nth(1)?.split('"').next()?.to_string();
            let n = l.split("imputed ").nth(1)?.split(' ').next()?.parse().ok()?;
            Some((col, n))
        })
        .collect()
}

fn type_mismatch_remedy(env: &Env) -> Outcome {
    env.corrupt("type-mismatch", 42, "tm.csv", &[])?;
    let cols = all_columns("    enforce type real\n    impute interpolation linear\n");
    let mut body = script("tm.csv", "tm.fixed.csv", &borrowed(&cols), "");
    body = body.replace("  skip empty rows\n", "  skip empty rows\n  skip regex \"[#@$]\"\n  skip \"*\"\n");
    env.run_script("tm.cps", &body)?;

    let out = grid(&env.read("tm.fixed.csv")?);
    for (r, row) in out.iter().enumerate() {
        for (c, cell) in row.iter().enumerate().take(4) {
            ensure!(cell.parse::<f64>().is_ok(), "row {r} column {c}: {cell:?} is not a real");
        }
    }
    let counts = imputed_counts(&env.read("tm.fixed.report.txt")?, "impute interpolation linear");
    ensure!(counts.len() == 4, "report lists {} interpolation rules", counts.len());
    let worst = counts.iter().map(|(_, n)| *n).max().unwrap_or(0);
    ensure!(worst <= 50, "interpolated {counts:?}");
    Ok(format!("0 unparsable, interpolated per column {:?}", counts.iter().map(|c| c.1).collect::<Vec<_>>()))
}

/// Rows listed in the manifest as changed in `column`.
fn corrupted_rows(m: &CorruptionManifest, column: &str) -> BTreeSet<usize> {
    m.blocks
        .iter()
        .flat_map(|b| &b.cells)
        .filter(|c| c.column == column)
        .map(|c| c.row)
        .collect()
}

/// Mean of the golden column over rows the corruption left alone.
fn surviving_mean(golden: &[Vec<String>], col: usize, lost: &BTreeSet<usize>) -> f64 {
    let vals: Vec<f64> = golden
        .iter()
        .enumerate()
        .filter(|(r, _)| !lost.contains(r))
        .map(|(_, row)| row[col].parse::<f64>().expect("golden is numeric"))
        .collect();
    vals.iter().sum::<f64>() / vals.len() as f64
}

fn check_mean_imputed(golden: &[Vec<String>], out: &[Vec<String>], col: usize, lost: &BTreeSet<usize>) -> Result<(), String> {
    let mean = surviving_mean(golden, col, lost);
    for (r, row) in out.iter().enumerate() {
        let v: f64 = row[col].parse().map_err(|_| format!("row {r}: {:?} is not a real", row[col]))?;
        if lost.contains(&r) {
            ensure!((v - mean).abs() <= 1e-9, "row {r}: imputed {v}, mean {mean}");
        } else {
            ensure!(row[col] == golden[r][col], "row {r}: untouched cell changed");
        }
    }
    Ok(())
}

fn out_of_bounds_remedy(env: &Env) -> Outcome {
    let m = env.corrupt("out-of-bounds", 42, "oob.csv", &[])?;
    let voltage = HEADER[2];
    let lost = corrupted_rows(&m, voltage);
    ensure!(!lost.is_empty(), "seed 42 left the voltage column untouched");
    let mut cols = all_columns("    enforce type real\n");
    cols[2].1 = "    enforce type real\n    valid range [4.9, 5.1]\n    impute mean\n".into();
    env.run_script("oob.cps", &script("oob.csv", "oob.fixed.csv", &borrowed(&cols), ""))?;

    let out = grid(&env.read("oob.fixed.csv")?);
    let golden = grid(&env.golden);
    let vc = column_index(voltage);
    for row in &out {
        let v: f64 = row[vc].parse().map_err(|_| format!("{:?} is not a real", row[vc]))?;
        ensure!(row[vc] != "99999.999" && (4.9..=5.1).contains(&v), "voltage {v} out of range");
    }
    check_mean_imputed(&golden, &out, vc, &lost)?;
    Ok(format!("{} voltage cells imputed with the surviving mean", lost.len()))
}

fn missing_fields_remedy(env: &Env) -> Outcome {
    let m = env.corrupt("missing-fields", 42, "mf.csv", &[])?;
    let cols = all_columns("    enforce type real\n    impute mean\n");
    env.run_script("mf.cps", &script("mf.csv", "mf.fixed.csv", &borrowed(&cols), ""))?;
    let out = grid(&env.read("mf.fixed.csv")?);
    let golden = grid(&env.golden);
    let affected: BTreeSet<&str> = m.blocks.iter().flat_map(|b| b.columns.iter().map(String::as_str)).collect();
    for name in &affected {
        let c = column_index(name);
        ensure!(out.iter().all(|row| !row[c].is_empty()), "{name} still has missing cells");
        check_mean_imputed(&golden, &out, c, &corrupted_rows(&m, name))?;
    }
    Ok(format!("0 missing in {affected:?}"))
}

fn compartmentalisation(env: &Env) -> Outcome {
    let markers = env.golden.matches("IMG_LOAD_START").count();
    let first = grid(&env.golden).iter().position(|r| r[4].contains("IMG_LOAD_START"));
    ensure!(markers == 12 && first.is_some_and(|r| r > 0), "fixture has {markers} markers, first at {first:?}");
    let cols = all_columns("    enforce type real\n");
    let tail = "  cut on column \"Arc UART (TXT)\" contains \"IMG_LOAD_START\" into \"phase_\"\n";
    env.run_script("cut.cps", &script("golden.csv", "cut.csv", &borrowed(&cols), tail))?;

    let mut files: Vec<PathBuf> = fs::read_dir(env.dir.path())
        .map_err(|e| e.to_string())?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    files.retain(|p| p.file_name().is_some_and(|n| n.to_string_lossy().starts_with("phase_")));
    files.sort();
    ensure!(files.len() == 13, "{} segment files", files.len());
    let mut joined = String::new();
    for f in &files {
        let text = fs::read_to_string(f).map_err(|e| e.to_string())?;
        let (header, body) = text.split_once('\n').ok_or("empty segment")?;
        ensure!(header == HEADER.join(","), "{}: bad header", f.display());
        joined.push_str(body);
    }
    ensure!(joined == env.golden.split_once('\n').unwrap().1, "concatenation differs from input rows");
    Ok("13 files, concatenation byte-equal".into())
}

fn disjoint(blocks: &[BlockRecord]) -> bool {
    blocks.windows(2).all(|w| w[0].start + w[0].length <= w[1].start)
}

fn corruptor_budget(env: &Env) -> Outcome {
    let golden_lines: Vec<&str> = env.golden.lines().collect();
    for kind in CorruptionKind::ALL {
        let name = kind.name();
        let extra: &[&str] = if kind == CorruptionKind::TypeMismatchTargetedUart { &["--target-uart", "ID_3"] } else { &[] };
        let m = env.corrupt(name, 42, "a.csv", extra)?;
        let a = env.read("a.csv")?;
        env.corrupt(name, 42, "b.csv", extra)?;
        ensure!(env.read("b.csv")? == a, "{name}: same seed, different output");
        ensure!(env.read("b.csv.manifest")? == env.read("a.csv.manifest")?, "{name}: same seed, different manifest");
        env.corrupt(name, 43, "c.csv", extra)?;
        ensure!(env.read("c.csv")? != a, "{name}: different seeds, same output");

        ensure!(m.blocks.len() == 5 && disjoint(&m.blocks), "{name}: blocks {:?}", m.blocks.iter().map(|b| b.start).collect::<Vec<_>>());
        ensure!(m.affected_rows() == 50, "{name}: {} rows affected", m.affected_rows());

        let in_block = |r: usize| m.blocks.iter().any(|b| b.rows().contains(&r));
        let lines: Vec<&str> = a.lines().collect();
        match kind {
            CorruptionKind::MissingRows => {
                let kept: Vec<&str> = (0..golden_lines.len() - 1).filter(|&r| !in_block(r)).map(|r| golden_lines[r + 1]).collect();
                ensure!(lines[1..] == kept[..], "{name}: output is not golden minus the blocks");
            }
            CorruptionKind::MisplacedEol => {
                ensure!(lines.len() == golden_lines.len() - 25, "{name}: {} lines", lines.len());
                ensure!(a.replace('\n', "") == env.golden.replace('\n', ""), "{name}: content changed");
            }
            _ => {
                let changed: Vec<usize> = (0..golden_lines.len() - 1).filter(|&r| lines[r + 1] != golden_lines[r + 1]).collect();
                ensure!(changed.iter().all(|&r| in_block(r)), "{name}: change outside blocks");
                let every_row = !matches!(kind, CorruptionKind::OutOfOrderReliableTs | CorruptionKind::OutOfOrderUnreliableTs);
                ensure!(!every_row || changed.len() == 50, "{name}: {} rows changed", changed.len());
            }
        }
    }
    Ok("8 kinds: 5 disjoint blocks, 50 rows, seed-deterministic".into())
}

fn fail<T: std::fmt::Debug>(name: &str, e: proptest::test_runner::TestError<T>) -> String {
    format!("{name}: {e:?}")
}

fn property_suites(_: &Env) -> Outcome {
    let start = Instant::now();
    let runner = |cases: u32| {
        TestRunner::new(Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        })
    };
    let strategy = prop::sample::select(vec![
        ImputeStrategy::Mean,
        ImputeStrategy::Last,
        ImputeStrategy::Next,
        ImputeStrategy::Interpolation(InterpolationKind::Linear),
        ImputeStrategy::Interpolation(InterpolationKind::Nearest),
    ]);

    runner(10_000)
        .run(&prop::collection::vec(any::<u8>(), 0..200), |b| testing::check_parse_total(&String::from_utf8_lossy(&b)))
        .map_err(|e| fail("parser fuzz (bytes)", e))?;
    runner(10_000)
        .run(&testing::arb_source(), |s| testing::check_parse_total(&s))
        .map_err(|e| fail("parser fuzz (tokens)", e))?;
    runner(1_000)
        .run(&testing::arb_script(), |s| testing::check_round_trip(&s))
        .map_err(|e| fail("round trip", e))?;
    runner(1_000)
        .run(&(testing::arb_numeric_cells(50), any::<bool>()), |(k, asc)| testing::check_sort_stable(k, asc))
        .map_err(|e| fail("sort stability", e))?;
    let perms = (0usize..=50).prop_flat_map(|n| Just((0..n as i32).collect::<Vec<_>>()).prop_shuffle());
    runner(500)
        .run(&perms, |p| testing::check_skip_out_of_order(p.into_iter().map(|k| CellValue::number(f64::from(k))).collect()))
        .map_err(|e| fail("skip out of order", e))?;
    runner(1_000)
        .run(&(testing::arb_numeric_cells(30), strategy), |(c, s)| testing::check_impute_boundaries(c, s))
        .map_err(|e| fail("imputation boundaries", e))?;
    runner(1_000)
        .run(&(-1e6f64..1e6, 0.5f64..1e3, any::<bool>(), any::<bool>()), |(l, w, li, hi)| testing::check_range_inclusivity(l, w, li, hi))
        .map_err(|e| fail("range inclusivity", e))?;
    runner(1_000)
        .run(&(testing::arb_numeric_cells(30), testing::arb_numeric_rules()), |(c, r)| testing::check_conditional_equivalence(c, r))
        .map_err(|e| fail("conditional equivalence", e))?;

    let took = start.elapsed();
    ensure!(took < Duration::from_secs(60), "took {took:?}");
    Ok(format!("all suites passed in {:.1}s", took.as_secs_f64()))
}

fn main() -> ExitCode {
    let env = Env::new();
    let criteria: [Criterion; 8] = [
        ("golden idempotence", golden_idempotence),
        ("reliable out-of-order recovery", reliable_order_recovery),
        ("type-mismatch remediation", type_mismatch_remedy),
        ("out-of-bounds remediation", out_of_bounds_remedy),
        ("missing-fields remediation", missing_fields_remedy),
        ("compartmentalisation", compartmentalisation),
        ("corruptor budget and determinism", corruptor_budget),
        ("property suites", property_suites),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check(&env) {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why}", i + 1);
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
