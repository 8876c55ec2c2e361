use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::record::{PatternLabel, TransactionRecord, TxType};
use crate::error::{Error, Result};

/// Column order of the public PaySim CSV.
pub const PAYSIM_COLUMNS: [&str; 11] = [
    "step",
    "type",
    "amount",
    "nameOrig",
    "oldbalanceOrg",
    "newbalanceOrig",
    "nameDest",
    "oldbalanceDest",
    "newbalanceDest",
    "isFraud",
    "isFlaggedFraud",
];

/// Extra trailing column written for synthetic data.
pub const PATTERN_COLUMN: &str = "patternLabel";

#[derive(Clone, Debug, Default)]
pub struct LoadOptions {
    /// Stop after this many data rows.
    pub max_rows: Option<usize>,
    /// Count and skip bad rows instead of failing on the first one.
    pub skip_malformed: bool,
}

#[derive(Clone, Debug, Default)]
pub struct LoadReport {
    pub records: Vec<TransactionRecord>,
    /// `(line, message)` for every skipped row.
    pub malformed: Vec<(u64, String)>,
}

/// Reads a PaySim CSV, failing on the first malformed row.
pub fn load_paysim_csv(path: impl AsRef<Path>) -> Result<Vec<TransactionRecord>> {
    Ok(load_paysim_csv_with(path, &LoadOptions::default())?.records)
}

pub fn load_paysim_csv_with(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<LoadReport> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_paysim(file, opts)
}

fn parse_f64(field: &str, name: &str) -> Result<f64, String> {
    let v: f64 = field
        .parse()
        .map_err(|_| format!("{name}: cannot parse {field:?} as a number"))?;
    if !v.is_finite() || v < 0.0 {
        return Err(format!("{name}: expected a finite non-negative value, got {field:?}"));
    }
    Ok(v)
}

fn parse_flag(field: &str, name: &str) -> Result<bool, String> {
    match field {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(format!("{name}: expected 0 or 1, got {other:?}")),
    }
}

fn parse_row(row: &csv::StringRecord, with_pattern: bool) -> Result<TransactionRecord, String> {
    let f = |i: usize| row.get(i).unwrap_or("");
    let step = f(0)
        .parse::<u32>()
        .map_err(|_| format!("step: cannot parse {:?}", f(0)))?;
    let tx_type: TxType = f(1).parse()?;
    let is_fraud = parse_flag(f(9), "isFraud")?;
    parse_flag(f(10), "isFlaggedFraud")?;
    let label = if with_pattern {
        let label: PatternLabel = f(11).parse()?;
        if label.is_suspicious() != is_fraud {
            return Err(format!("isFraud={} disagrees with patternLabel {label}", f(9)));
        }
        label
    } else if is_fraud {
        PatternLabel::Fraud
    } else {
        PatternLabel::Normal
    };
    Ok(TransactionRecord {
        step,
        tx_type,
        amount: parse_f64(f(2), "amount")?,
        orig_account: f(3).to_string(),
        orig_balance_before: parse_f64(f(4), "oldbalanceOrg")?,
        orig_balance_after: parse_f64(f(5), "newbalanceOrig")?,
        dest_account: f(6).to_string(),
        dest_balance_before: parse_f64(f(7), "oldbalanceDest")?,
        dest_balance_after: parse_f64(f(8), "newbalanceDest")?,
        label,
    })
}

/// Reads PaySim rows from any reader. A trailing `patternLabel` column is
/// accepted and takes precedence over `isFraud`.
pub fn read_paysim<R: Read>(reader: R, opts: &LoadOptions) -> Result<LoadReport> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let found: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let base_ok = found.len() >= PAYSIM_COLUMNS.len()
        && found.iter().zip(PAYSIM_COLUMNS).all(|(a, b)| a == b);
    let with_pattern = found.len() == PAYSIM_COLUMNS.len() + 1 && found.last().map(String::as_str) == Some(PATTERN_COLUMN);
    if !base_ok || !(found.len() == PAYSIM_COLUMNS.len() || with_pattern) {
        return Err(Error::Schema {
            expected: PAYSIM_COLUMNS.iter().map(|s| s.to_string()).collect(),
            found,
        });
    }
    let width = found.len();

    let mut report = LoadReport::default();
    let mut row = csv::StringRecord::new();
    loop {
        if opts.max_rows.is_some_and(|m| report.records.len() >= m) {
            break;
        }
        let line = rdr.position().line();
        let parsed = match rdr.read_record(&mut row) {
            Ok(false) => break,
            Ok(true) if row.len() != width => {
                Err(format!("expected {width} fields, found {}", row.len()))
            }
            Ok(true) => parse_row(&row, with_pattern),
            Err(e) => Err(e.to_string()),
        };
        match parsed {
            Ok(rec) => report.records.push(rec),
            Err(message) if opts.skip_malformed => report.malformed.push((line, message)),
            Err(message) => return Err(Error::Row { line, message }),
        }
    }
    Ok(report)
}

/// Writes records in PaySim layout plus the `patternLabel` column.
pub fn write_synthetic<W: Write>(writer: W, records: &[TransactionRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = PAYSIM_COLUMNS.to_vec();
    header.push(PATTERN_COLUMN);
    wtr.write_record(&header)?;
    for r in records {
        wtr.write_record([
            r.step.to_string(),
            r.tx_type.to_string(),
            r.amount.to_string(),
            r.orig_account.clone(),
            r.orig_balance_before.to_string(),
            r.orig_balance_after.to_string(),
            r.dest_account.clone(),
            r.dest_balance_before.to_string(),
            r.dest_balance_after.to_string(),
            u8::from(r.label.is_suspicious()).to_string(),
            "0".to_string(),
            r.label.to_string(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn write_synthetic_csv(path: impl AsRef<Path>, records: &[TransactionRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_synthetic(std::io::BufWriter::new(file), records)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "step,type,amount,nameOrig,oldbalanceOrg,newbalanceOrig,nameDest,oldbalanceDest,newbalanceDest,isFraud,isFlaggedFraud\n";

    fn read(s: &str) -> Result<LoadReport> {
        read_paysim(s.as_bytes(), &LoadOptions::default())
    }

    #[test]
    fn header_only_is_empty() {
        assert!(read(HEADER).unwrap().records.is_empty());
    }

    #[test]
    fn first_public_paysim_row() {
        let s = format!("{HEADER}1,PAYMENT,9839.64,C1231006815,170136.0,160296.36,M1979787155,0.0,0.0,0,0\n");
        let recs = read(&s).unwrap().records;
        assert_eq!(recs.len(), 1);
        let r = &recs[0];
        assert_eq!(r.step, 1);
        assert_eq!(r.tx_type, TxType::Payment);
        assert_eq!(r.amount, 9839.64);
        assert_eq!(r.orig_account, "C1231006815");
        assert_eq!(r.orig_balance_after, 160296.36);
        assert_eq!(r.dest_account, "M1979787155");
        assert_eq!(r.label, PatternLabel::Normal);
    }

    #[test]
    fn is_fraud_maps_to_fraud() {
        let s = format!("{HEADER}1,TRANSFER,181.0,C1305486145,181.0,0.0,C553264065,0.0,0.0,1,0\n");
        assert_eq!(read(&s).unwrap().records[0].label, PatternLabel::Fraud);
    }

    #[test]
    fn bad_type_reports_its_line() {
        let s = format!(
            "{HEADER}1,PAYMENT,1.0,C1,2.0,1.0,M1,0.0,0.0,0,0\n1,FOO,1.0,C1,2.0,1.0,M1,0.0,0.0,0,0\n"
        );
        match read(&s).unwrap_err() {
            Error::Row { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("FOO"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn lenient_mode_counts_bad_rows() {
        let s = format!(
            "{HEADER}1,FOO,1.0,C1,2.0,1.0,M1,0.0,0.0,0,0\n2,PAYMENT,x,C1,2.0,1.0,M1,0.0,0.0,0,0\n3,DEBIT,1.0,C1,2.0,1.0,M1,0.0,0.0,0,0\n"
        );
        let opts = LoadOptions {
            skip_malformed: true,
            ..Default::default()
        };
        let report = read_paysim(s.as_bytes(), &opts).unwrap();
        assert_eq!(report.records.len(), 1);
        assert_eq!(report.malformed.iter().map(|m| m.0).collect::<Vec<_>>(), vec![2, 3]);
    }

    #[test]
    fn row_cap() {
        let row = "1,DEBIT,1.0,C1,2.0,1.0,M1,0.0,0.0,0,0\n";
        let s = format!("{HEADER}{row}{row}{row}");
        let opts = LoadOptions {
            max_rows: Some(2),
            ..Default::default()
        };
        assert_eq!(read_paysim(s.as_bytes(), &opts).unwrap().records.len(), 2);
    }

    #[test]
    fn renamed_column_is_a_schema_error() {
        let s = HEADER.replace("amount", "amt");
        match read(&s).unwrap_err() {
            Error::Schema { expected, found } => {
                assert_eq!(expected[2], "amount");
                assert_eq!(found[2], "amt");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn inconsistent_pattern_label_is_rejected() {
        let s = format!(
            "{}patternLabel\n1,TRANSFER,1.0,C1,2.0,1.0,C2,0.0,1.0,0,0,FRAUD\n",
            HEADER.trim_end().to_string() + ","
        );
        assert!(matches!(read(&s), Err(Error::Row { .. })));
    }
}
