//! Batch solving of puzzle directories with timing records, Tukey-hinge
//! summaries per board size, and CSV/Markdown reporting.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grid::parse_puzzle;
use crate::model::{build_model, stats, Convention};
use crate::solver::{solve, SolveLimits, SolveStatus};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BenchStatus {
    Feasible,
    Infeasible,
    TimedOut,
    Error,
}

impl From<SolveStatus> for BenchStatus {
    fn from(s: SolveStatus) -> Self {
        match s {
            SolveStatus::Feasible => BenchStatus::Feasible,
            SolveStatus::Infeasible => BenchStatus::Infeasible,
            SolveStatus::TimedOut => BenchStatus::TimedOut,
        }
    }
}

/// One solved instance. Counts use the structural convention; `ms` covers
/// the search only, not model construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub id: String,
    pub size: String,
    pub vars: usize,
    pub constraints: usize,
    pub status: BenchStatus,
    pub ms: f64,
    pub nodes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SizeSummary {
    pub size: String,
    pub count: usize,
    pub vars: f64,
    pub constraints: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub lower_fence: f64,
    pub upper_fence: f64,
    /// Ids of records outside the fences.
    pub outliers: Vec<String>,
}

impl SizeSummary {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

fn solve_file(path: &Path, limits: SolveLimits) -> BenchRecord {
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let failed = |size: String| BenchRecord {
        id: id.clone(),
        size,
        vars: 0,
        constraints: 0,
        status: BenchStatus::Error,
        ms: 0.0,
        nodes: 0,
    };
    let Ok(text) = fs::read_to_string(path) else {
        return failed(String::new());
    };
    let Ok(puzzle) = parse_puzzle(&text) else {
        return failed(String::new());
    };
    let size = format!("{}x{}", puzzle.rows(), puzzle.cols());
    let model = build_model(&puzzle);
    let counts = stats(&model, Convention::Structural);
    let start = Instant::now();
    let out = solve(&model, limits);
    let ms = start.elapsed().as_secs_f64() * 1000.0;
    BenchRecord {
        id,
        size,
        vars: counts.total_vars,
        constraints: counts.total_constraints,
        status: out.status.into(),
        ms,
        nodes: out.stats.nodes,
    }
}

/// Solves every `*.puzzle` file in `dir` on a pool of `jobs` threads.
/// Unreadable or malformed files yield records with status `Error`.
pub fn run(dir: &Path, limits: SolveLimits, jobs: usize) -> io::Result<Vec<BenchRecord>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "puzzle"))
        .collect();
    files.sort();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(io::Error::other)?;
    let mut records: Vec<BenchRecord> =
        pool.install(|| files.par_iter().map(|f| solve_file(f, limits)).collect());
    records.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(records)
}

fn median_sorted(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

/// Tukey hinges of a non-empty slice: the medians of the lower and upper
/// halves, the overall median left out of both halves when the count is odd.
pub fn hinges(values: &[f64]) -> (f64, f64, f64) {
    assert!(!values.is_empty(), "hinges of an empty sample");
    let mut xs = values.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    let median = median_sorted(&xs);
    if n == 1 {
        return (xs[0], median, xs[0]);
    }
    let half = n / 2;
    let q1 = median_sorted(&xs[..half]);
    let q3 = median_sorted(&xs[n - half..]);
    (q1, median, q3)
}

fn size_key(label: &str) -> (usize, usize, String) {
    let mut parts = label
        .split('x')
        .map(|p| p.parse::<usize>().unwrap_or(usize::MAX));
    let rows = parts.next().unwrap_or(usize::MAX);
    let cols = parts.next().unwrap_or(usize::MAX);
    (rows.saturating_mul(cols), rows, label.to_string())
}

/// Per-size quartiles and Tukey outliers over the solve times. Records with
/// status `Error` carry no timing and are left out.
pub fn summarize(records: &[BenchRecord]) -> Vec<SizeSummary> {
    let mut groups: BTreeMap<(usize, usize, String), Vec<&BenchRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.status != BenchStatus::Error) {
        groups.entry(size_key(&r.size)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((_, _, size), group)| {
            let times: Vec<f64> = group.iter().map(|r| r.ms).collect();
            let (q1, median, q3) = hinges(&times);
            let iqr = q3 - q1;
            let (lower_fence, upper_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
            let mut outliers: Vec<String> = group
                .iter()
                .filter(|r| r.ms < lower_fence || r.ms > upper_fence)
                .map(|r| r.id.clone())
                .collect();
            outliers.sort();
            let mean = |f: fn(&BenchRecord) -> usize| {
                group.iter().map(|r| f(r) as f64).sum::<f64>() / group.len() as f64
            };
            SizeSummary {
                size,
                count: group.len(),
                vars: mean(|r| r.vars),
                constraints: mean(|r| r.constraints),
                q1,
                median,
                q3,
                lower_fence,
                upper_fence,
                outliers,
            }
        })
        .collect()
}

pub fn write_csv<W: io::Write>(records: &[BenchRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: io::Read>(input: R) -> csv::Result<Vec<BenchRecord>> {
    csv::Reader::from_reader(input).deserialize().collect()
}

/// Markdown table with one row per board size.
pub fn markdown_table(summaries: &[SizeSummary]) -> String {
    let mut out = String::from(
        "Solve time in ms. Quartiles are Tukey hinges (median excluded from both halves for odd counts); vars and constraints are means.\n\n",
    );
    out.push_str("| size | vars | constraints | Q1 | median | Q3 |\n");
    out.push_str("|---|---:|---:|---:|---:|---:|\n");
    for s in summaries {
        out.push_str(&format!(
            "| {} | {:.0} | {:.0} | {:.3} | {:.3} | {:.3} |\n",
            s.size, s.vars, s.constraints, s.q1, s.median, s.q3
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::tests::SAMPLE;

    fn rec(id: &str, size: &str, ms: f64) -> BenchRecord {
        BenchRecord {
            id: id.into(),
            size: size.into(),
            vars: 10,
            constraints: 20,
            status: BenchStatus::Feasible,
            ms,
            nodes: 1,
        }
    }

    fn summary_of(times: &[f64]) -> SizeSummary {
        let records: Vec<BenchRecord> = times
            .iter()
            .enumerate()
            .map(|(i, &t)| rec(&format!("i{i:02}"), "5x5", t))
            .collect();
        summarize(&records).remove(0)
    }

    #[test]
    fn constant_times() {
        let s = summary_of(&[7.0; 6]);
        assert_eq!((s.q1, s.median, s.q3), (7.0, 7.0, 7.0));
        assert!(s.outliers.is_empty());
    }

    #[test]
    fn five_point_hinges() {
        let s = summary_of(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!((s.q1, s.median, s.q3), (1.5, 3.0, 4.5));
        assert_eq!(s.iqr(), 3.0);
        assert_eq!((s.lower_fence, s.upper_fence), (-3.0, 9.0));
        assert!(s.outliers.is_empty());
    }

    #[test]
    fn far_value_becomes_outlier() {
        let s = summary_of(&[1.0, 2.0, 3.0, 4.0, 50.0]);
        assert_eq!((s.q1, s.q3), (1.5, 27.0));
        assert_eq!((s.lower_fence, s.upper_fence), (-36.75, 65.25));
        assert!(s.outliers.is_empty());
        // With 500 in place of 50, Q3 = 252 and the upper fence is 627.75,
        // so 500 is still inside.
        let s = summary_of(&[1.0, 2.0, 3.0, 4.0, 500.0]);
        assert_eq!((s.q3, s.upper_fence), (252.0, 627.75));
        assert!(s.outliers.is_empty());
        // Seven points: hinges 2 and 6, upper fence 12.
        let s = summary_of(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 100.0]);
        assert_eq!((s.q1, s.q3, s.upper_fence), (2.0, 6.0, 12.0));
        assert_eq!(s.outliers, vec!["i06".to_string()]);
    }

    #[test]
    fn single_value() {
        assert_eq!(hinges(&[4.0]), (4.0, 4.0, 4.0));
        assert_eq!(hinges(&[4.0, 8.0]), (4.0, 6.0, 8.0));
    }

    #[test]
    fn summary_ignores_order_and_groups_sizes() {
        let mut records = vec![
            rec("a", "6x6", 3.0),
            rec("b", "5x5", 1.0),
            rec("c", "5x5", 9.0),
            rec("d", "6x6", 4.0),
            rec("e", "10x10", 1.0),
        ];
        let forward = summarize(&records);
        records.reverse();
        assert_eq!(forward, summarize(&records));
        let sizes: Vec<&str> = forward.iter().map(|s| s.size.as_str()).collect();
        assert_eq!(sizes, vec!["5x5", "6x6", "10x10"]);
    }

    #[test]
    fn error_records_are_skipped() {
        let mut bad = rec("z", "5x5", 0.0);
        bad.status = BenchStatus::Error;
        let s = summarize(&[rec("a", "5x5", 2.0), bad]);
        assert_eq!(s[0].count, 1);
        assert!(summarize(&[]).is_empty());
    }

    #[test]
    fn csv_round_trip() {
        let records = vec![rec("a", "5x5", 1.25), {
            let mut r = rec("b", "6x6", 0.0);
            r.status = BenchStatus::TimedOut;
            r
        }];
        let mut buf = Vec::new();
        write_csv(&records, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("id,size,vars,constraints,status,ms,nodes\n"));
        assert_eq!(read_csv(buf.as_slice()).unwrap(), records);
    }

    #[test]
    fn markdown_has_one_row_per_size() {
        let table = markdown_table(&summarize(&[rec("a", "5x5", 1.0), rec("b", "6x6", 2.0)]));
        assert!(table.contains("| size | vars | constraints | Q1 | median | Q3 |"));
        assert!(table.contains("| 5x5 | 10 | 20 | 1.000 | 1.000 | 1.000 |"));
        assert_eq!(table.lines().filter(|l| l.starts_with("| ")).count(), 3);
    }

    #[test]
    fn directory_run_isolates_errors() {
        let dir = tempfile::tempdir().unwrap();
        assert!(run(dir.path(), SolveLimits::default(), 1)
            .unwrap()
            .is_empty());
        fs::write(dir.path().join("sample.puzzle"), SAMPLE).unwrap();
        fs::write(dir.path().join("broken.puzzle"), "not a puzzle").unwrap();
        fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
        let records = run(dir.path(), SolveLimits::default(), 2).unwrap();
        let ids: Vec<&str> = records.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, vec!["broken", "sample"]);
        assert_eq!(records[0].status, BenchStatus::Error);
        assert_eq!(records[1].status, BenchStatus::Feasible);
        assert_eq!(records[1].size, "5x5");
        assert!(records[1].ms >= 0.0);
    }
}
