use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{Method, TaskResult};
use crate::error::{self, domain, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportFiles {
    pub table_csv: PathBuf,
    pub table_txt: PathBuf,
    pub boxplot_csv: PathBuf,
}

/// Methods in order of first appearance.
fn methods(results: &[TaskResult]) -> Vec<Method> {
    let mut seen = Vec::new();
    for r in results {
        if !seen.contains(&r.method) {
            seen.push(r.method);
        }
    }
    seen
}

fn total_ei(results: &[TaskResult], method: Method) -> f64 {
    results
        .iter()
        .filter(|r| r.method == method)
        .map(|r| r.ei)
        .sum()
}

/// Aligned plain-text table, one block per method with a total row.
pub fn render_table(results: &[TaskResult]) -> String {
    let width = results
        .iter()
        .map(|r| r.task.len())
        .max()
        .unwrap_or(0)
        .max(5);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<10} {:<width$} {:>7} {:>6} {:>7} {:>7}",
        "method", "task", "ctn", "hof", "reads", "ei"
    );
    for method in methods(results) {
        for r in results.iter().filter(|r| r.method == method) {
            let _ = writeln!(
                out,
                "{:<10} {:<width$} {:>7} {:>6.3} {:>7} {:>7.3}",
                method.as_str(),
                r.task,
                r.ctn,
                r.hof,
                r.median_reads,
                r.ei
            );
        }
        let _ = writeln!(
            out,
            "{:<10} {:<width$} {:>7} {:>6} {:>7} {:>7.3}",
            method.as_str(),
            "total",
            "",
            "",
            "",
            total_ei(results, method)
        );
    }
    out.push_str(
        "\nTotals sum the unrounded per-task EI and are rounded afterwards, \
         so they may differ from the sum of the printed cells.\n",
    );
    out
}

fn write_table_csv<W: Write>(results: &[TaskResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "task", "ctn", "hof", "median_reads", "ei"])?;
    for method in methods(results) {
        for r in results.iter().filter(|r| r.method == method) {
            w.write_record([
                method.as_str().to_string(),
                r.task.clone(),
                r.ctn.to_string(),
                r.hof.to_string(),
                r.median_reads.to_string(),
                r.ei.to_string(),
            ])?;
        }
        w.write_record([
            method.as_str().to_string(),
            "total".to_string(),
            String::new(),
            String::new(),
            String::new(),
            total_ei(results, method).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_boxplot_csv<W: Write>(results: &[TaskResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "task", "episode", "reads", "seed"])?;
    for r in results {
        for (episode, reads) in r.reads.iter().enumerate() {
            let seed = r.seeds.get(episode).map(u64::to_string).unwrap_or_default();
            w.write_record([
                r.method.as_str().to_string(),
                r.task.clone(),
                (episode + 1).to_string(),
                reads.to_string(),
                seed,
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `report.csv`, `report.txt` and `boxplot.csv` into `dir`.
pub fn emit_report(results: &[TaskResult], dir: &Path) -> Result<ReportFiles> {
    if results.is_empty() {
        return Err(domain("no results to report"));
    }
    let files = ReportFiles {
        table_csv: dir.join("report.csv"),
        table_txt: dir.join("report.txt"),
        boxplot_csv: dir.join("boxplot.csv"),
    };
    write_table_csv(results, error::create(&files.table_csv)?)?;
    write_boxplot_csv(results, error::create(&files.boxplot_csv)?)?;
    let mut txt = error::create(&files.table_txt)?;
    txt.write_all(render_table(results).as_bytes())?;
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(task: &str, method: Method, reads: usize, hof: f64, ctn: usize) -> TaskResult {
        TaskResult::new(task, method, vec![reads], vec![], hof, ctn).unwrap()
    }

    #[test]
    fn single_result_gives_one_data_row() {
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(&[result("a", Method::Baseline, 3, 0.5, 10)], dir.path()).unwrap();
        let csv = std::fs::read_to_string(files.table_csv).unwrap();
        let rows: Vec<&str> = csv.lines().collect();
        assert_eq!(rows[0], "method,task,ctn,hof,median_reads,ei");
        assert_eq!(rows[1], "baseline,a,10,0.5,3,0.15");
        assert!(rows[2].starts_with("baseline,total,"));
        assert_eq!(rows.len(), 3);
        let boxplot = std::fs::read_to_string(files.boxplot_csv).unwrap();
        assert_eq!(boxplot.lines().nth(1), Some("baseline,a,1,3,"));
    }

    #[test]
    fn empty_results_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(emit_report(&[], dir.path()).is_err());
    }

    #[test]
    fn total_uses_unrounded_values() {
        let rs = [
            result("a", Method::A2c, 1, 0.0014, 1),
            result("b", Method::A2c, 1, 0.0014, 1),
        ];
        let table = render_table(&rs);
        let total = table.lines().find(|l| l.contains("total")).unwrap();
        assert!(total.trim_end().ends_with("0.003"));
        assert!(table.contains("0.001"));
    }
}
