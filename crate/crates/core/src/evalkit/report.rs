use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::experiments::{EvaluatedRun, ModelKind, PatternBreakdown, SparsitySweepResult};
use crate::error::{Error, Result};

/// One line of a machine-readable experiment report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub experiment: String,
    pub model: String,
    pub seed: Option<u64>,
    pub level: Option<f64>,
    pub acc: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: Option<f64>,
}

pub fn cross_time_rows(runs: &[EvaluatedRun]) -> Vec<ReportRow> {
    runs.iter()
        .map(|r| ReportRow {
            experiment: "cross-time".into(),
            model: r.kind.to_string(),
            seed: Some(r.seed),
            level: None,
            acc: r.report.acc,
            precision: r.report.precision,
            recall: r.report.recall,
            f1: r.report.f1,
            auc: Some(r.auc),
        })
        .collect()
}

pub fn pattern_rows(breakdowns: &[PatternBreakdown]) -> Vec<ReportRow> {
    breakdowns
        .iter()
        .flat_map(|b| {
            b.entries.iter().map(move |e| ReportRow {
                experiment: format!("patterns-{}", e.label.as_str().to_lowercase()),
                model: ModelKind::Joint.to_string(),
                seed: Some(b.seed),
                level: None,
                acc: e.report.acc,
                precision: e.report.precision,
                recall: e.report.recall,
                f1: e.report.f1,
                auc: e.auc,
            })
        })
        .collect()
}

pub fn sparsity_rows(result: &SparsitySweepResult) -> Vec<ReportRow> {
    result
        .points
        .iter()
        .map(|p| ReportRow {
            experiment: "sparsity".into(),
            model: ModelKind::Joint.to_string(),
            seed: Some(p.seed),
            level: Some(p.level),
            acc: p.report.acc,
            precision: p.report.precision,
            recall: p.report.recall,
            f1: p.report.f1,
            auc: Some(p.auc),
        })
        .collect()
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_report_csv<W: Write>(writer: W, rows: &[ReportRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["experiment", "model", "seed", "level", "acc", "precision", "recall", "f1", "auc"])?;
    for r in rows {
        w.write_record([
            r.experiment.clone(),
            r.model.clone(),
            opt(r.seed),
            opt(r.level),
            r.acc.to_string(),
            r.precision.to_string(),
            r.recall.to_string(),
            r.f1.to_string(),
            opt(r.auc),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<report writer>", e))?;
    Ok(())
}

pub fn report_json(rows: &[ReportRow]) -> Result<String> {
    serde_json::to_string_pretty(rows).map_err(|e| Error::Parse(e.to_string()))
}

/// Fixed-width table with one line per row.
pub fn render_table(rows: &[ReportRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<20} {:<6} {:>6} {:>6} {:>7} {:>9} {:>7} {:>7} {:>7}",
        "experiment", "model", "seed", "level", "ACC", "Precision", "Recall", "F1", "AUC"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<20} {:<6} {:>6} {:>6} {:>7.4} {:>9.4} {:>7.4} {:>7.4} {:>7}",
            r.experiment,
            r.model,
            opt(r.seed),
            r.level.map(|l| format!("{l:.2}")).unwrap_or_default(),
            r.acc,
            r.precision,
            r.recall,
            r.f1,
            r.auc.map(|a| format!("{a:.4}")).unwrap_or_default(),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row() -> ReportRow {
        ReportRow {
            experiment: "sparsity".into(),
            model: "joint".into(),
            seed: Some(3),
            level: Some(0.1),
            acc: 0.5,
            precision: 0.25,
            recall: 1.0,
            f1: 0.4,
            auc: None,
        }
    }

    #[test]
    fn csv_schema() {
        let mut buf = Vec::new();
        write_report_csv(&mut buf, &[row()]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "experiment,model,seed,level,acc,precision,recall,f1,auc\nsparsity,joint,3,0.1,0.5,0.25,1,0.4,\n"
        );
    }

    #[test]
    fn json_round_trip() {
        let rows = vec![row()];
        let back: Vec<ReportRow> = serde_json::from_str(&report_json(&rows).unwrap()).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn table_has_header_and_rows() {
        let t = render_table(&[row(), row()]);
        assert_eq!(t.lines().count(), 3);
        assert!(t.starts_with("experiment"));
    }
}
