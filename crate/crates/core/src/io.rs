//! Point set and report file formats.
//!
//! CSV point files hold one point per row with an optional header row. The
//! writer adds a `# resolution=<r>` comment line so that files written here
//! read back with their declared resolution; files without it need the
//! resolution from the caller. JSON point files have the form
//! `{"dim": n, "resolution": r, "points": [[...], ...]}`.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PointSet;

/// Version tag carried by every JSON report.
pub const SCHEMA: &str = "assouad-lab/1";

/// `f64` with 17 significant digits, which reads back bit-exactly.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Serialize, Deserialize)]
struct JsonPoints {
    dim: usize,
    resolution: f64,
    points: Vec<Vec<f64>>,
}

/// Parse a point file. `resolution` overrides the file's declared value and
/// is required for CSV input that declares none. `dim` is checked against
/// the file when given.
pub fn parse_points(text: &str, resolution: Option<f64>, dim: Option<usize>) -> Result<PointSet> {
    let set = if text.trim_start().starts_with('{') {
        let j: JsonPoints =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("point JSON: {e}")))?;
        PointSet::new(j.dim, j.points, resolution.unwrap_or(j.resolution))?
    } else {
        parse_csv(text, resolution)?
    };
    if let Some(d) = dim {
        if d != set.dim() {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: set.dim(),
            });
        }
    }
    Ok(set)
}

fn parse_csv(text: &str, resolution: Option<f64>) -> Result<PointSet> {
    let mut declared = None;
    for line in text.lines() {
        let Some(c) = line.trim().strip_prefix('#') else {
            continue;
        };
        if let Some(v) = c.trim().strip_prefix("resolution=") {
            declared = Some(
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad resolution comment {line:?}")))?,
            );
        }
    }
    let res = resolution.or(declared).ok_or_else(|| {
        Error::InvalidParameter("CSV input declares no resolution; pass one explicitly".into())
    })?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut dim = None;
    let mut coords = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(format!("CSV: {e}")))?;
        let vals: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let vals = match vals {
            Ok(v) => v,
            // a non-numeric first row is a header
            Err(_) if row == 0 => continue,
            Err(_) => return Err(Error::Parse(format!("non-numeric value in CSV row {}", row + 1))),
        };
        match dim {
            None => dim = Some(vals.len()),
            Some(d) if d != vals.len() => {
                return Err(Error::Parse(format!(
                    "CSV row {} has {} columns, expected {d}",
                    row + 1,
                    vals.len()
                )))
            }
            _ => {}
        }
        coords.extend(vals);
    }
    let dim = dim.ok_or_else(|| Error::Parse("CSV input has no points".into()))?;
    PointSet::from_flat(dim, coords, res)
}

pub fn read_points(path: &Path, resolution: Option<f64>, dim: Option<usize>) -> Result<PointSet> {
    let mut text = String::new();
    if path.as_os_str() == "-" {
        std::io::stdin().read_to_string(&mut text)?;
    } else {
        text = std::fs::read_to_string(path)?;
    }
    parse_points(&text, resolution, dim)
}

pub fn write_points_csv<W: Write>(out: W, set: &PointSet, header: bool) -> Result<()> {
    let mut out = std::io::BufWriter::new(out);
    writeln!(out, "# resolution={}", fmt_real(set.resolution()))?;
    let mut w = csv::WriterBuilder::new().from_writer(out);
    let csv_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        k => Error::Io(std::io::Error::other(format!("{k:?}"))),
    };
    if header {
        let names: Vec<String> = (0..set.dim()).map(|i| format!("x{i}")).collect();
        w.write_record(&names).map_err(csv_err)?;
    }
    for p in set.iter() {
        w.write_record(p.iter().map(|x| fmt_real(*x))).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_points_json<W: Write>(out: W, set: &PointSet) -> Result<()> {
    let j = JsonPoints {
        dim: set.dim(),
        resolution: set.resolution(),
        points: set.iter().map(<[f64]>::to_vec).collect(),
    };
    serde_json::to_writer(out, &j).map_err(|e| Error::Io(e.into()))?;
    Ok(())
}

/// Write to `path`, or to stdout for `None` or `-`.
pub fn with_output<F>(path: Option<&Path>, f: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    match path {
        Some(p) if p.as_os_str() != "-" => {
            let mut file = std::fs::File::create(p)?;
            f(&mut file)
        }
        _ => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let set = PointSet::new(
            2,
            vec![vec![0.1, -1.0 / 3.0], vec![1e-300, std::f64::consts::PI]],
            1e-3,
        )
        .unwrap();
        for header in [true, false] {
            let mut buf = Vec::new();
            write_points_csv(&mut buf, &set, header).unwrap();
            let back = parse_points(std::str::from_utf8(&buf).unwrap(), None, Some(2)).unwrap();
            assert_eq!(back, set);
        }
    }

    #[test]
    fn json_round_trip() {
        let set = PointSet::new(1, vec![vec![0.25], vec![0.5]], 0.01).unwrap();
        let mut buf = Vec::new();
        write_points_json(&mut buf, &set).unwrap();
        let back = parse_points(std::str::from_utf8(&buf).unwrap(), None, None).unwrap();
        assert_eq!(back, set);
    }

    #[test]
    fn csv_needs_a_resolution() {
        let text = "x,y\n0,0\n1,1\n";
        assert!(matches!(
            parse_points(text, None, None),
            Err(Error::InvalidParameter(_))
        ));
        let s = parse_points(text, Some(0.1), None).unwrap();
        assert_eq!((s.len(), s.dim()), (2, 2));
        assert!(parse_points("0,0\n1\n", Some(0.1), None).is_err());
        assert!(parse_points("0,0\n1,a\n", Some(0.1), None).is_err());
        assert!(matches!(
            parse_points(text, Some(0.1), Some(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
