//! CSV reading and writing.
//!
//! Files carry a header naming all 61 source columns (any order). Values use
//! `.` as decimal point. Empty fields are rejected: nothing is imputed.

use super::schema::{column_names, BondRecord, LagHistory, TradeType, LAG_STEMS, N_LAGS};
use super::Dataset;
use crate::error::{Error, Result};
use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

/// Outcome of a lenient load.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LoadReport {
    pub rows_read: usize,
    pub rows_dropped: usize,
    /// `(row number, reason)` of dropped rows, 1-based data rows.
    pub dropped: Vec<(usize, String)>,
}

pub fn load_csv(path: impl AsRef<Path>, strict: bool) -> Result<(Dataset, LoadReport)> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(std::io::BufReader::new(file), strict)
}

struct Columns {
    pos: HashMap<String, usize>,
}

impl Columns {
    fn from_header(header: &csv::StringRecord) -> Result<Self> {
        let expected = column_names();
        let mut pos = HashMap::new();
        let mut extra = Vec::new();
        for (i, name) in header.iter().enumerate() {
            let name = name.trim();
            if !expected.iter().any(|e| e == name) {
                extra.push(name.to_string());
            } else if pos.insert(name.to_string(), i).is_some() {
                return Err(Error::Schema(format!("duplicate column {name}")));
            }
        }
        let missing: Vec<&String> = expected.iter().filter(|e| !pos.contains_key(*e)).collect();
        if !missing.is_empty() || !extra.is_empty() {
            let mut msg = String::new();
            if !missing.is_empty() {
                let list: Vec<&str> = missing.iter().map(|s| s.as_str()).collect();
                msg.push_str(&format!("missing columns: {}", list.join(", ")));
            }
            if !extra.is_empty() {
                if !msg.is_empty() {
                    msg.push_str("; ");
                }
                msg.push_str(&format!("unexpected columns: {}", extra.join(", ")));
            }
            return Err(Error::Schema(msg));
        }
        Ok(Columns { pos })
    }

    fn raw<'a>(&self, rec: &'a csv::StringRecord, name: &str) -> Result<&'a str, String> {
        let s = rec.get(self.pos[name]).unwrap_or("").trim();
        if s.is_empty() {
            Err(format!("missing value in {name}"))
        } else {
            Ok(s)
        }
    }

    fn num(&self, rec: &csv::StringRecord, name: &str) -> Result<f64, String> {
        let s = self.raw(rec, name)?;
        s.parse::<f64>()
            .map_err(|_| format!("non-numeric value {s:?} in {name}"))
    }

    fn int(&self, rec: &csv::StringRecord, name: &str) -> Result<u64, String> {
        let v = self.num(rec, name)?;
        if v < 0.0 || v.fract() != 0.0 || v > u64::MAX as f64 {
            return Err(format!("{name} must be a non-negative integer, got {v}"));
        }
        Ok(v as u64)
    }

    fn trade_type(&self, rec: &csv::StringRecord, name: &str) -> Result<TradeType, String> {
        let s = self.raw(rec, name)?;
        TradeType::parse_field(s).ok_or_else(|| format!("{name} must be one of 2, 3, 4, got {s:?}"))
    }

    fn record(&self, rec: &csv::StringRecord) -> Result<BondRecord, String> {
        let callable = self.num(rec, "is_callable")?;
        if callable != 0.0 && callable != 1.0 {
            return Err(format!("is_callable must be 0 or 1, got {callable}"));
        }
        let bond_type = self.int(rec, "bond_id")?;
        let bond_type_id =
            u32::try_from(bond_type).map_err(|_| format!("bond_id {bond_type} out of range"))?;
        let mut history = LagHistory {
            time_diff: [0.0; N_LAGS],
            trade_price: [0.0; N_LAGS],
            trade_size: [0.0; N_LAGS],
            trade_type: [TradeType::InterDealer; N_LAGS],
            curve_price: [0.0; N_LAGS],
        };
        for k in 1..=N_LAGS {
            let i = N_LAGS - k;
            history.time_diff[i] = self.num(rec, &format!("{}{k}", LAG_STEMS[0]))?;
            history.trade_price[i] = self.num(rec, &format!("{}{k}", LAG_STEMS[1]))?;
            history.trade_size[i] = self.num(rec, &format!("{}{k}", LAG_STEMS[2]))?;
            history.trade_type[i] = self.trade_type(rec, &format!("{}{k}", LAG_STEMS[3]))?;
            history.curve_price[i] = self.num(rec, &format!("{}{k}", LAG_STEMS[4]))?;
        }
        let r = BondRecord {
            row_id: self.int(rec, "id")?,
            bond_type_id,
            weight: self.num(rec, "weight")?,
            current_coupon: self.num(rec, "current_coupon")?,
            time_to_maturity: self.num(rec, "time_to_maturity")?,
            is_callable: callable == 1.0,
            reporting_delay: self.num(rec, "reported_delay")?,
            trade_size: self.num(rec, "trade_size")?,
            trade_type: self.trade_type(rec, "trade_type")?,
            curve_based_price: self.num(rec, "curve_based_price")?,
            trade_price: self.num(rec, "trade_price")?,
            history,
        };
        r.validate()?;
        Ok(r)
    }
}

/// Reads a CSV stream. In strict mode the first invalid row aborts with its
/// 1-based data row number; otherwise invalid rows are dropped and counted.
pub fn read_csv<R: Read>(reader: R, strict: bool) -> Result<(Dataset, LoadReport)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let cols = Columns::from_header(rdr.headers()?)?;
    let mut records = Vec::new();
    let mut report = LoadReport::default();
    for (i, row) in rdr.records().enumerate() {
        let row_no = i + 1;
        let row = row?;
        report.rows_read += 1;
        match cols.record(&row) {
            Ok(r) => records.push(r),
            Err(reason) if strict => return Err(Error::InvalidRecord { row: row_no, reason }),
            Err(reason) => {
                report.rows_dropped += 1;
                report.dropped.push((row_no, reason));
            }
        }
    }
    Ok((Dataset::from_validated(records), report))
}

/// Writes the source columns in canonical order. Extra columns are not
/// part of the schema and are not written.
pub fn write_csv<W: Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(column_names())?;
    let mut fields: Vec<String> = Vec::with_capacity(super::N_FIELDS);
    for r in ds.records() {
        fields.clear();
        fields.push(r.row_id.to_string());
        fields.push(r.bond_type_id.to_string());
        fields.push(r.trade_price.to_string());
        fields.push(r.weight.to_string());
        fields.push(r.current_coupon.to_string());
        fields.push(r.time_to_maturity.to_string());
        fields.push(u8::from(r.is_callable).to_string());
        fields.push(r.reporting_delay.to_string());
        fields.push(r.trade_size.to_string());
        fields.push(r.trade_type.to_string());
        fields.push(r.curve_based_price.to_string());
        let h = &r.history;
        for k in 1..=N_LAGS {
            let i = N_LAGS - k;
            fields.push(h.time_diff[i].to_string());
            fields.push(h.trade_price[i].to_string());
            fields.push(h.trade_size[i].to_string());
            fields.push(h.trade_type[i].to_string());
            fields.push(h.curve_price[i].to_string());
        }
        w.write_record(&fields)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::sample_record;

    fn to_csv(ds: &Dataset) -> String {
        let mut buf = Vec::new();
        write_csv(ds, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    fn three_rows() -> Dataset {
        let mut recs: Vec<_> = (0..3).map(sample_record).collect();
        recs[1].trade_type = TradeType::CustomerSell;
        recs[2].history.trade_price[0] = 99.125;
        recs[2].is_callable = true;
        Dataset::new(recs).unwrap()
    }

    #[test]
    fn well_formed_file_round_trips() {
        let ds = three_rows();
        let text = to_csv(&ds);
        let (back, report) = read_csv(text.as_bytes(), true).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(report.rows_dropped, 0);
        assert_eq!(back, ds);
        assert_eq!(to_csv(&back), text);
    }

    #[test]
    fn zero_weight_strict_names_row() {
        let mut recs: Vec<_> = (0..3).map(sample_record).collect();
        recs[1].weight = 0.0;
        let text = to_csv(&Dataset::from_validated(recs));
        match read_csv(text.as_bytes(), true) {
            Err(Error::InvalidRecord { row, reason }) => {
                assert_eq!(row, 2);
                assert!(reason.contains("weight"), "{reason}");
            }
            other => panic!("expected row error, got {other:?}"),
        }
        let (ds, report) = read_csv(text.as_bytes(), false).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(report.rows_dropped, 1);
        assert_eq!(report.dropped[0].0, 2);
    }

    #[test]
    fn missing_column_is_listed() {
        let text = to_csv(&three_rows());
        // drop the last column from every line
        let cut: String = text
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string() + "\n")
            .collect();
        let err = read_csv(cut.as_bytes(), true).unwrap_err();
        match err {
            Error::Schema(msg) => assert!(msg.contains("curve_based_price_last10"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn extra_column_is_rejected() {
        let text = to_csv(&three_rows());
        let mut lines = text.lines();
        let mut out = format!("{},bogus\n", lines.next().unwrap());
        for l in lines {
            out.push_str(&format!("{l},1\n"));
        }
        let err = read_csv(out.as_bytes(), true).unwrap_err();
        assert!(matches!(err, Error::Schema(ref m) if m.contains("bogus")));
    }

    #[test]
    fn non_numeric_and_empty_fields_are_errors() {
        let text = to_csv(&three_rows());
        let bad = text.replacen(",100000,", ",abc,", 1);
        let err = read_csv(bad.as_bytes(), true).unwrap_err();
        assert!(matches!(err, Error::InvalidRecord { row: 1, ref reason } if reason.contains("non-numeric")));
        let empty = text.replacen(",100000,", ",,", 1);
        let err = read_csv(empty.as_bytes(), true).unwrap_err();
        assert!(matches!(err, Error::InvalidRecord { row: 1, ref reason } if reason.contains("missing value")));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_csv("/nonexistent/bonds.csv", true).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.is_data_error());
    }
}
