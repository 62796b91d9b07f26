//! Center files: a little-endian binary layout with exact numerators, JSONL
//! with exact `num/2^k` strings, and CSV with 17-digit decimals.

use std::fmt;
use std::io::{BufRead, Read, Write};
use std::str::FromStr;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ScaledPoint, YoungDiagram};
use crate::scattering::Scattering;

pub const MAGIC: &[u8; 4] = b"QUSC";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Binary,
    Jsonl,
    Csv,
}

impl Format {
    /// Guess from a file extension; anything unknown is binary.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => Format::Jsonl,
            Some("csv") => Format::Csv,
            _ => Format::Binary,
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" | "bin" => Ok(Format::Binary),
            "jsonl" => Ok(Format::Jsonl),
            "csv" => Ok(Format::Csv),
            other => Err(Error::Format(format!("unknown format {other:?}"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Binary => "binary",
            Format::Jsonl => "jsonl",
            Format::Csv => "csv",
        })
    }
}

/// Contents of a center file. Points are kept as read: duplicates or
/// interior points are left for the caller to detect.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterFile {
    pub lambda: YoungDiagram,
    pub levels: u32,
    pub centers: Vec<ScaledPoint>,
}

impl CenterFile {
    pub fn from_scattering(s: &Scattering) -> Self {
        Self {
            lambda: s.lambda().clone(),
            levels: s.levels_built(),
            centers: s.centers().to_vec(),
        }
    }

    pub fn into_scattering(self) -> Result<Scattering> {
        Scattering::from_centers(self.lambda, self.levels, self.centers)
    }

    /// Index of the first center of each level `0..=levels`.
    pub fn level_offsets(&self) -> Vec<usize> {
        (0..=self.levels)
            .map(|l| {
                self.centers
                    .iter()
                    .position(|c| c.level() >= l)
                    .unwrap_or(self.centers.len())
            })
            .collect()
    }

    fn check(&self) -> Result<()> {
        let d = self.lambda.dim();
        for (i, c) in self.centers.iter().enumerate() {
            if c.dim() != d {
                return Err(Error::Format(format!(
                    "center {i} has {} coordinates, expected {d}",
                    c.dim()
                )));
            }
            if c.level() > self.levels {
                return Err(Error::Format(format!(
                    "center {i} has level {} above {}",
                    c.level(),
                    self.levels
                )));
            }
        }
        Ok(())
    }

    pub fn write(&self, w: impl Write, format: Format) -> Result<()> {
        self.check()?;
        match format {
            Format::Binary => self.write_binary(w),
            Format::Jsonl => self.write_jsonl(w),
            Format::Csv => self.write_csv(w),
        }
    }

    pub fn read(r: impl BufRead, format: Format) -> Result<Self> {
        let file = match format {
            Format::Binary => Self::read_binary(r),
            Format::Jsonl => Self::read_jsonl(r),
            Format::Csv => Self::read_csv(r),
        }?;
        file.check()?;
        Ok(file)
    }

    fn write_binary(&self, mut w: impl Write) -> Result<()> {
        let d = self.lambda.dim();
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(VERSION)?;
        w.write_u32::<LittleEndian>(d as u32)?;
        w.write_u64::<LittleEndian>(self.centers.len() as u64)?;
        w.write_u32::<LittleEndian>(self.levels)?;
        w.write_u32::<LittleEndian>(d as u32)?;
        for &r in self.lambda.rows() {
            w.write_u32::<LittleEndian>(r as u32)?;
        }
        for c in &self.centers {
            for x in c.numerators_at(self.levels) {
                w.write_i64::<LittleEndian>(x)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    fn read_binary(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(truncated)?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = r.read_u32::<LittleEndian>().map_err(truncated)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let d = r.read_u32::<LittleEndian>().map_err(truncated)? as usize;
        let count = r.read_u64::<LittleEndian>().map_err(truncated)?;
        let levels = r.read_u32::<LittleEndian>().map_err(truncated)?;
        let nrows = r.read_u32::<LittleEndian>().map_err(truncated)? as usize;
        if nrows != d {
            return Err(Error::Format(format!("{nrows} diagram rows for dimension {d}")));
        }
        let rows = (0..nrows)
            .map(|_| r.read_u32::<LittleEndian>().map(i64::from))
            .collect::<std::io::Result<Vec<_>>>()
            .map_err(truncated)?;
        let lambda = YoungDiagram::new(rows)?;
        let mut centers = Vec::new();
        for _ in 0..count {
            let num = (0..d)
                .map(|_| r.read_i64::<LittleEndian>())
                .collect::<std::io::Result<Vec<_>>>()
                .map_err(truncated)?;
            centers.push(ScaledPoint::new(num, levels));
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Error::Format("trailing bytes after the last record".into()));
        }
        Ok(Self {
            lambda,
            levels,
            centers,
        })
    }

    fn write_jsonl(&self, mut w: impl Write) -> Result<()> {
        let header = JsonHeader {
            format: "qusc-jsonl".into(),
            version: VERSION,
            lambda: self.lambda.rows().to_vec(),
            levels: self.levels,
            dimension: self.lambda.dim(),
            count: self.centers.len(),
        };
        writeln!(w, "{}", serde_json::to_string(&header).map_err(json)?)?;
        for (index, c) in self.centers.iter().enumerate() {
            let rec = JsonRecord {
                index,
                level: c.level(),
                exact: c.exact_strings(),
                coords: c.to_f64(),
            };
            writeln!(w, "{}", serde_json::to_string(&rec).map_err(json)?)?;
        }
        w.flush()?;
        Ok(())
    }

    fn read_jsonl(r: impl BufRead) -> Result<Self> {
        let mut lines = r.lines();
        let first = lines
            .next()
            .ok_or_else(|| Error::Format("empty file".into()))??;
        let header: JsonHeader = serde_json::from_str(&first).map_err(json)?;
        if header.format != "qusc-jsonl" || header.version != VERSION {
            return Err(Error::Format("not a qusc-jsonl v1 file".into()));
        }
        let lambda = YoungDiagram::new(header.lambda)?;
        if header.dimension != lambda.dim() {
            return Err(Error::Format("dimension does not match the diagram".into()));
        }
        let mut centers = Vec::with_capacity(header.count);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: JsonRecord = serde_json::from_str(&line).map_err(json)?;
            if rec.index != centers.len() {
                return Err(Error::Format(format!("record {} out of order", rec.index)));
            }
            let parsed = rec
                .exact
                .iter()
                .map(|s| parse_exact(s))
                .collect::<Result<Vec<_>>>()?;
            centers.push(from_exact(&parsed));
        }
        if centers.len() != header.count {
            return Err(Error::Format(format!(
                "header promises {} records, found {}",
                header.count,
                centers.len()
            )));
        }
        Ok(Self {
            lambda,
            levels: header.levels,
            centers,
        })
    }

    fn write_csv(&self, mut w: impl Write) -> Result<()> {
        let rows: Vec<String> = self.lambda.rows().iter().map(i64::to_string).collect();
        writeln!(
            w,
            "# qusc-csv version={VERSION} lambda={} levels={} dimension={} count={}",
            rows.join(","),
            self.levels,
            self.lambda.dim(),
            self.centers.len()
        )?;
        let mut out = csv::Writer::from_writer(w);
        let mut head = vec!["index".to_string(), "level".to_string()];
        head.extend((1..=self.lambda.dim()).map(|i| format!("x{i}")));
        out.write_record(&head).map_err(csv_err)?;
        for (i, c) in self.centers.iter().enumerate() {
            let mut rec = vec![i.to_string(), c.level().to_string()];
            rec.extend(c.to_f64().iter().map(|x| format!("{x:.16e}")));
            out.write_record(&rec).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    fn read_csv(mut r: impl BufRead) -> Result<Self> {
        let mut first = String::new();
        r.read_line(&mut first)?;
        let meta = first
            .trim()
            .strip_prefix("# qusc-csv ")
            .ok_or_else(|| Error::Format("missing qusc-csv metadata line".into()))?;
        let field = |key: &str| -> Result<&str> {
            meta.split_whitespace()
                .find_map(|kv| kv.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
                .ok_or_else(|| Error::Format(format!("metadata lacks {key}")))
        };
        if field("version")? != VERSION.to_string() {
            return Err(Error::Format("unsupported csv version".into()));
        }
        let rows = field("lambda")?
            .split(',')
            .map(|v| v.parse::<i64>().map_err(|e| Error::Format(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let lambda = YoungDiagram::new(rows)?;
        let levels: u32 = parse_field(field("levels")?)?;
        let count: usize = parse_field(field("count")?)?;
        let d = lambda.dim();

        let mut reader = csv::Reader::from_reader(r);
        let mut centers = Vec::with_capacity(count);
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            if rec.len() != d + 2 {
                return Err(Error::Format(format!("row {i} has {} fields", rec.len())));
            }
            let index: usize = parse_field(&rec[0])?;
            if index != i {
                return Err(Error::Format(format!("row {i} carries index {index}")));
            }
            let level: u32 = parse_field(&rec[1])?;
            let scale = (level as f64).exp2();
            let num = (2..d + 2)
                .map(|j| {
                    let v: f64 = parse_field(&rec[j])?;
                    let n = (v * scale).round();
                    if (v * scale - n).abs() > 1e-6 {
                        return Err(Error::Format(format!(
                            "row {i}: {v} is not a multiple of 2^-{level}"
                        )));
                    }
                    Ok(n as i64)
                })
                .collect::<Result<Vec<_>>>()?;
            centers.push(ScaledPoint::new(num, level));
        }
        if centers.len() != count {
            return Err(Error::Format(format!(
                "metadata promises {count} rows, found {}",
                centers.len()
            )));
        }
        Ok(Self {
            lambda,
            levels,
            centers,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct JsonHeader {
    format: String,
    version: u32,
    lambda: Vec<i64>,
    levels: u32,
    dimension: usize,
    count: usize,
}

#[derive(Serialize, Deserialize)]
struct JsonRecord {
    index: usize,
    level: u32,
    exact: Vec<String>,
    coords: Vec<f64>,
}

/// Parses `"num/2^k"` or a bare integer.
pub fn parse_exact(s: &str) -> Result<(i64, u32)> {
    let bad = || Error::Format(format!("bad exact coordinate {s:?}"));
    match s.split_once('/') {
        None => Ok((s.trim().parse().map_err(|_| bad())?, 0)),
        Some((num, den)) => {
            let k = den.trim().strip_prefix("2^").ok_or_else(bad)?;
            let k: u32 = k.parse().map_err(|_| bad())?;
            if k > 62 {
                return Err(bad());
            }
            Ok((num.trim().parse().map_err(|_| bad())?, k))
        }
    }
}

fn from_exact(parts: &[(i64, u32)]) -> ScaledPoint {
    let level = parts.iter().map(|p| p.1).max().unwrap_or(0);
    let num = parts.iter().map(|&(n, k)| n << (level - k)).collect();
    ScaledPoint::new(num, level)
}

fn parse_field<T: FromStr>(s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Format(format!("cannot parse {s:?}")))
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("file is truncated".into())
    } else {
        Error::Io(e)
    }
}

fn json(e: serde_json::Error) -> Error {
    Error::Format(e.to_string())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scattering::build_scattering;

    fn sample() -> CenterFile {
        let lam = YoungDiagram::from_parts(&[2, 1, 1], None).unwrap();
        CenterFile::from_scattering(&build_scattering(&lam, 2, None).unwrap())
    }

    fn round_trip(f: &CenterFile, format: Format) -> (Vec<u8>, CenterFile) {
        let mut buf = Vec::new();
        f.write(&mut buf, format).unwrap();
        let back = CenterFile::read(&buf[..], format).unwrap();
        (buf, back)
    }

    #[test]
    fn all_formats_round_trip() {
        let f = sample();
        for format in [Format::Binary, Format::Jsonl, Format::Csv] {
            let (_, back) = round_trip(&f, format);
            assert_eq!(back, f, "{format}");
        }
    }

    #[test]
    fn binary_is_byte_identical() {
        let f = sample();
        let (bytes, back) = round_trip(&f, Format::Binary);
        let mut again = Vec::new();
        back.write(&mut again, Format::Binary).unwrap();
        assert_eq!(bytes, again);
        assert_eq!(&bytes[..4], b"QUSC");
        // Header: magic, version, dimension, count, levels, row count, rows.
        let header = 4 + 4 + 4 + 8 + 4 + 4 + 4 * 4;
        assert_eq!(bytes.len(), header + f.centers.len() * 4 * 8);
    }

    #[test]
    fn exact_strings_parse() {
        assert_eq!(parse_exact("3/2^1").unwrap(), (3, 1));
        assert_eq!(parse_exact("-7").unwrap(), (-7, 0));
        assert!(parse_exact("3/4").is_err());
        assert!(parse_exact("x/2^1").is_err());
        let p = from_exact(&[(2, 0), (3, 1), (1, 2), (0, 0)]);
        assert_eq!(p, ScaledPoint::new(vec![8, 6, 1, 0], 2));
    }

    #[test]
    fn malformed_input_is_rejected() {
        let f = sample();
        let mut buf = Vec::new();
        f.write(&mut buf, Format::Binary).unwrap();
        assert!(CenterFile::read(&buf[..buf.len() - 3], Format::Binary).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(CenterFile::read(&bad[..], Format::Binary).is_err());
        assert!(CenterFile::read(&b"{}\n"[..], Format::Jsonl).is_err());
        assert!(CenterFile::read(&b"index,level\n"[..], Format::Csv).is_err());
    }

    #[test]
    fn level_offsets_follow_levels() {
        let f = sample();
        assert_eq!(f.level_offsets(), vec![0, 12, 42]);
    }
}
