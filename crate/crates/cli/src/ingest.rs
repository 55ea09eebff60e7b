//! CSV datasets: a header row with `time` and `status` columns, every other
//! column a numeric covariate.

use std::io::{Read, Write};
use std::path::Path;

use cgesurv::{Dataset, Observation};

use crate::error::{CliError, Result};

/// Parsed table: header and numeric rows, blanks as `None`.
struct Table {
    header: Vec<String>,
    rows: Vec<(usize, Vec<Option<f64>>)>,
}

fn parse_table<R: Read>(reader: R, source: &str) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::Input(format!("{source}: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| CliError::Input(format!("{source}: {e}")))?;
        let cells = rec
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                if cell.is_empty() || cell.eq_ignore_ascii_case("na") {
                    return Ok(None);
                }
                cell.parse::<f64>().map(Some).map_err(|_| {
                    CliError::Input(format!(
                        "{source}: line {line}, column `{}`: `{cell}` is not a number",
                        header[c]
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push((line, cells));
    }
    Ok(Table { header, rows })
}

fn column(header: &[String], name: &str, source: &str) -> Result<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::Input(format!("{source}: missing required column `{name}`")))
}

/// Read a dataset, leaving out the covariates named in `drop`.
pub fn read_dataset<R: Read>(reader: R, source: &str, drop: &[String]) -> Result<Dataset> {
    let table = parse_table(reader, source)?;
    let t_col = column(&table.header, "time", source)?;
    let s_col = column(&table.header, "status", source)?;
    for d in drop {
        if !table.header.contains(d) || d == "time" || d == "status" {
            return Err(CliError::Usage(format!("cannot drop `{d}`: no such covariate in {source}")));
        }
    }
    let keep: Vec<usize> = (0..table.header.len())
        .filter(|&c| c != t_col && c != s_col && !drop.contains(&table.header[c]))
        .collect();
    let blanks: Vec<usize> = table
        .rows
        .iter()
        .filter(|(_, cells)| {
            [t_col, s_col].iter().chain(&keep).any(|&c| cells[c].is_none())
        })
        .map(|(line, _)| *line)
        .collect();
    if let Some(first) = blanks.first() {
        return Err(CliError::Input(format!(
            "{source}: {} row(s) with missing cells (first at line {first}); remove them before analysis",
            blanks.len()
        )));
    }
    let mut rows = Vec::with_capacity(table.rows.len());
    for (line, cells) in &table.rows {
        let time = cells[t_col].expect("checked");
        let event = match cells[s_col].expect("checked") {
            1.0 => true,
            0.0 => false,
            s => {
                return Err(CliError::Input(format!(
                    "{source}: line {line}: status must be 0 or 1, got {s}"
                )))
            }
        };
        let z = keep.iter().map(|&c| cells[c].expect("checked")).collect();
        let obs = Observation::new(time, event, z)
            .map_err(|e| CliError::Input(format!("{source}: line {line}: {e}")))?;
        rows.push(obs);
    }
    if rows.is_empty() {
        return Err(CliError::Input(format!("{source}: no data rows")));
    }
    let names = keep.iter().map(|&c| table.header[c].clone()).collect();
    Ok(Dataset::new(names, rows)?)
}

pub fn load_dataset(path: &Path, drop: &[String]) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    read_dataset(file, &path.display().to_string(), drop)
}

/// Covariate rows for named columns; `time` and `status` may be absent.
pub fn load_covariates(path: &Path, names: &[String]) -> Result<Vec<Vec<f64>>> {
    let source = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let table = parse_table(file, &source)?;
    let cols = names
        .iter()
        .map(|n| column(&table.header, n, &source))
        .collect::<Result<Vec<_>>>()?;
    table
        .rows
        .iter()
        .map(|(line, cells)| {
            cols.iter()
                .map(|&c| {
                    cells[c].ok_or_else(|| {
                        CliError::Input(format!(
                            "{source}: line {line}: missing value for `{}`",
                            table.header[c]
                        ))
                    })
                })
                .collect()
        })
        .collect()
}

pub fn write_dataset<W: Write>(data: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| CliError::Input(format!("writing dataset: {e}"));
    let mut header = vec!["time".to_string(), "status".to_string()];
    header.extend(data.covariate_names.iter().cloned());
    w.write_record(&header).map_err(io)?;
    for r in &data.rows {
        let mut rec = vec![r.time.to_string(), u8::from(r.event).to_string()];
        rec.extend(r.covariates.iter().map(f64::to_string));
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Input(format!("writing dataset: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str) -> Result<Dataset> {
        read_dataset(text.as_bytes(), "mem", &[])
    }

    #[test]
    fn reads_columns_in_any_order() {
        let d = read("a,status,time,b\n1,1,2.5,0\n3,0,4,1\n").unwrap();
        assert_eq!(d.covariate_names, ["a", "b"]);
        assert_eq!(d.rows[0].time, 2.5);
        assert!(d.rows[0].event && !d.rows[1].event);
        assert_eq!(d.rows[1].covariates, [3.0, 1.0]);
    }

    #[test]
    fn blank_rows_are_counted() {
        let err = read("time,status,a\n1,1,\n2,0,1\n3,1,NA\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("2 row(s)") && msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn dropped_columns_may_be_blank() {
        let d = read_dataset("time,status,a,b\n1,1,,2\n".as_bytes(), "mem", &["a".into()]).unwrap();
        assert_eq!(d.covariate_names, ["b"]);
    }

    #[test]
    fn bad_status_and_missing_columns() {
        assert!(read("time,status\n1,2\n").unwrap_err().to_string().contains("status must be 0 or 1"));
        assert!(read("time,a\n1,2\n").unwrap_err().to_string().contains("`status`"));
        assert!(read("time,status\n0,1\n").is_err());
        assert!(read("time,status,a\n1,1,x\n").unwrap_err().to_string().contains("`a`"));
    }

    #[test]
    fn round_trip() {
        let d = read("time,status,z\n0.1,1,3\n2.25,0,-1.5\n").unwrap();
        let mut buf = Vec::new();
        write_dataset(&d, &mut buf).unwrap();
        assert_eq!(read_dataset(buf.as_slice(), "mem", &[]).unwrap(), d);
    }
}
