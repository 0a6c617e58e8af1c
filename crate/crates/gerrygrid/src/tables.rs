//! CSV outputs: sweep records, regression rows, comparison curves, plus
//! the text report of extremal distributions.
//!
//! Every CSV starts with one `#` metadata line naming the tool version, the
//! command and its flags, followed by a header row.

use std::io::{BufRead, Write};

use gerrygrid_core::analysis::Extremes;
use gerrygrid_core::symmetry::SquareSymmetries;
use gerrygrid_core::{clus, clusp, CurvePoint, DualGraph, Error as CoreError, RepStats, SlopeRow, SweepRecord, VoterDistribution};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::text::{ascii_grid, bits_hex, decimal, hist_column, parse_bits_hex};

/// Provenance of an output file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Flag values in a fixed order; excludes output paths and thread counts.
    #[serde(serialize_with = "ordered_map")]
    pub flags: Vec<(String, String)>,
    pub seed: u64,
}

impl Meta {
    pub fn new(command: &str, seed: u64) -> Meta {
        Meta {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            flags: Vec::new(),
            seed,
        }
    }

    pub fn flag(mut self, name: &str, value: impl ToString) -> Meta {
        self.flags.push((name.into(), value.to_string()));
        self
    }

    /// `# gerrygrid 0.1.0 sweep n=5 num=3 seed=0`
    pub fn line(&self) -> String {
        let mut s = format!("# {} {} {}", self.tool, self.version, self.command);
        for (k, v) in &self.flags {
            s.push_str(&format!(" {k}={v}"));
        }
        s.push_str(&format!(" seed={}", self.seed));
        s
    }
}

fn ordered_map<S: serde::Serializer>(flags: &[(String, String)], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_map(flags.iter().map(|(k, v)| (k, v)))
}

pub fn sweep_header(n_districts: usize) -> String {
    let mut cols: Vec<String> =
        ["bits_hex", "num", "clus", "clusp", "e_rep", "var_rep", "min_rep", "max_rep"].map(String::from).into();
    cols.extend((0..=2 * n_districts).map(hist_column));
    cols.join(",")
}

pub fn sweep_row(rec: &SweepRecord) -> String {
    let rep = &rec.rep;
    let mut fields = vec![
        bits_hex(rec.bits(), rec.dist.k()),
        rec.num.to_string(),
        decimal(rec.clus.to_f64()),
        rec.clusp.map(|r| decimal(r.to_f64())).unwrap_or_default(),
        decimal(rep.expectation()),
        decimal(rep.variance()),
        decimal(rep.min().value()),
        decimal(rep.max().value()),
    ];
    fields.extend(rep.histogram().iter().map(|c| c.to_string()));
    fields.join(",")
}

/// Streams sweep records as CSV.
pub struct SweepWriter<W: Write> {
    out: W,
}

impl<W: Write> SweepWriter<W> {
    /// Starts a new file with the metadata line and header.
    pub fn new(mut out: W, meta: &Meta, n_districts: usize) -> std::io::Result<SweepWriter<W>> {
        writeln!(out, "{}", meta.line())?;
        writeln!(out, "{}", sweep_header(n_districts))?;
        Ok(SweepWriter { out })
    }

    /// Continues a file that already holds its header.
    pub fn resume(out: W) -> SweepWriter<W> {
        SweepWriter { out }
    }

    pub fn write(&mut self, rec: &SweepRecord) -> std::io::Result<()> {
        writeln!(self.out, "{}", sweep_row(rec))
    }

    pub fn finish(mut self) -> std::io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Reads sweep CSV back into records on the `n x n` grid. Clustering scores
/// and orbit sizes are recomputed exactly from the bit vector and checked
/// against the file.
pub struct SweepReader<R: BufRead> {
    input: R,
    origin: String,
    line_no: u64,
    hist_len: usize,
    g: DualGraph,
    syms: SquareSymmetries,
    buf: String,
}

const FIXED_COLS: usize = 8;
const TOLERANCE: f64 = 1e-9;

impl<R: BufRead> SweepReader<R> {
    /// Reads the header. The grid side is `n` when given, otherwise the
    /// number of histogram buckets `2n + 1` (one district per grid row).
    pub fn new(mut input: R, origin: &str, n: Option<usize>) -> Result<SweepReader<R>> {
        let mut line_no = 0;
        let mut buf = String::new();
        let header = loop {
            buf.clear();
            line_no += 1;
            if input.read_line(&mut buf).map_err(|e| Error::io(origin, e))? == 0 {
                return Err(Error::parse(origin, line_no, "missing header row"));
            }
            if !buf.starts_with('#') {
                break buf.trim_end().to_string();
            }
        };
        let cols = header.split(',').count();
        let hist_len = cols.saturating_sub(FIXED_COLS);
        if hist_len < 3 || hist_len % 2 == 0 || header != sweep_header((hist_len - 1) / 2) {
            return Err(Error::parse(origin, line_no, "not a sweep CSV header"));
        }
        let n = n.unwrap_or((hist_len - 1) / 2);
        let g = DualGraph::square(n)?;
        let syms = SquareSymmetries::new(n)?;
        Ok(SweepReader { input, origin: origin.into(), line_no, hist_len, g, syms, buf })
    }

    pub fn side(&self) -> usize {
        self.syms.n()
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::parse(self.origin.clone(), self.line_no, message)
    }

    fn parse_row(&self, line: &str) -> Result<SweepRecord> {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != FIXED_COLS + self.hist_len {
            return Err(self.err(format!("expected {} fields, found {}", FIXED_COLS + self.hist_len, fields.len())));
        }
        let k = self.g.k();
        let bits = parse_bits_hex(fields[0]).ok_or_else(|| self.err("bits_hex is not hexadecimal"))?;
        let dist = VoterDistribution::new(bits, k).map_err(|e| self.err(e.to_string()))?;
        let num: u32 = fields[1].parse().map_err(|_| self.err("num is not an integer"))?;
        if num != dist.num() {
            return Err(self.err(format!("num {num} disagrees with bits_hex popcount {}", dist.num())));
        }
        let float = |i: usize, name: &str| -> Result<f64> {
            fields[i].parse::<f64>().map_err(|_| self.err(format!("{name} is not a number")))
        };
        let histogram = fields[FIXED_COLS..]
            .iter()
            .map(|f| f.parse::<u64>())
            .collect::<std::result::Result<Vec<u64>, _>>()
            .map_err(|_| self.err("histogram counts must be non-negative integers"))?;
        let rep = RepStats::from_histogram(histogram).map_err(|e| self.err(e.to_string()))?;
        if (rep.expectation() - float(4, "e_rep")?).abs() > TOLERANCE {
            return Err(self.err("e_rep disagrees with the histogram"));
        }
        let c = clus(&self.g, dist)?;
        if (c.to_f64() - float(2, "clus")?).abs() > TOLERANCE {
            return Err(self.err("clus disagrees with bits_hex"));
        }
        let cp = match clusp(&self.g, dist) {
            Ok(r) => Some(r),
            Err(CoreError::UndefinedMetric(_)) => None,
            Err(e) => return Err(e.into()),
        };
        match (cp, fields[3]) {
            (None, "") => {}
            (Some(r), s) if !s.is_empty() && (r.to_f64() - float(3, "clusp")?).abs() <= TOLERANCE => {}
            _ => return Err(self.err("clusp disagrees with bits_hex")),
        }
        Ok(SweepRecord { dist, num, clus: c, clusp: cp, rep, orbit_size: self.syms.orbit_size(bits) })
    }
}

impl<R: BufRead> Iterator for SweepReader<R> {
    type Item = Result<SweepRecord>;

    fn next(&mut self) -> Option<Result<SweepRecord>> {
        loop {
            self.buf.clear();
            self.line_no += 1;
            match self.input.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(Error::io(&self.origin, e))),
            }
            let line = self.buf.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let line = line.to_string();
            return Some(self.parse_row(&line));
        }
    }
}

pub fn write_slopes<W: Write>(mut out: W, meta: &Meta, rows: &[SlopeRow]) -> std::io::Result<()> {
    writeln!(out, "{}", meta.line())?;
    writeln!(out, "num,slope,intercept,count")?;
    for r in rows {
        writeln!(out, "{},{},{},{}", r.num, decimal(r.slope), decimal(r.intercept), r.count)?;
    }
    out.flush()
}

/// Comparison curves, then a `known_max` row when the optimum is known.
pub fn write_curves<W: Write>(mut out: W, meta: &Meta, points: &[CurvePoint], known_max: Option<f64>) -> std::io::Result<()> {
    writeln!(out, "{}", meta.line())?;
    writeln!(out, "algorithm,k_max,mean_best,stderr")?;
    for p in points {
        writeln!(out, "{},{},{},{}", p.algorithm, p.k_max, decimal(p.mean_best), decimal(p.stderr))?;
    }
    if let Some(v) = known_max {
        writeln!(out, "known_max,,{},", decimal(v))?;
    }
    out.flush()
}

fn describe(label: &str, rec: &SweepRecord, ties: &[u64], side: usize) -> String {
    let clusp = rec.clusp.map(|r| decimal(r.to_f64())).unwrap_or_else(|| "undefined".into());
    format!(
        "{label}: bits={} e_rep={} clusp={clusp} var_rep={} co_optimal={}\n{}",
        bits_hex(rec.bits(), rec.dist.k()),
        decimal(rec.rep.expectation()),
        decimal(rec.rep.variance()),
        ties.len(),
        ascii_grid(rec.bits(), side),
    )
}

/// Human-readable best and worst distributions per `num`.
pub fn extremes_report(all: &[Extremes], side: usize) -> String {
    let mut out = String::new();
    for e in all {
        out.push_str(&format!("num {}\n", e.num));
        out.push_str(&describe("best", &e.best, &e.best_ties, side));
        out.push_str(&describe("worst", &e.worst, &e.worst_ties, side));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use gerrygrid_core::{enumerate_plans, sweep, SweepMode};

    #[test]
    fn header_columns() {
        assert_eq!(
            sweep_header(5),
            "bits_hex,num,clus,clusp,e_rep,var_rep,min_rep,max_rep,hist_0,hist_0_5,hist_1,hist_1_5,hist_2,hist_2_5,hist_3,hist_3_5,hist_4,hist_4_5,hist_5"
        );
    }

    #[test]
    fn meta_line() {
        let m = Meta::new("sweep", 7).flag("n", 5).flag("num", 3);
        assert_eq!(m.line(), format!("# gerrygrid {} sweep n=5 num=3 seed=7", env!("CARGO_PKG_VERSION")));
    }

    #[test]
    fn sweep_csv_round_trip() {
        let g = DualGraph::square(4).unwrap();
        let plans = enumerate_plans(4).unwrap();
        let recs: Vec<_> = sweep(&g, &plans, SweepMode::Full, Some(5)).unwrap().take(50).collect();
        let mut w = SweepWriter::new(Vec::new(), &Meta::new("sweep", 0), 4).unwrap();
        recs.iter().for_each(|r| w.write(r).unwrap());
        let bytes = w.finish().unwrap();
        let back: Vec<_> = SweepReader::new(&bytes[..], "mem", None).unwrap().collect::<Result<_>>().unwrap();
        assert_eq!(back, recs);
    }

    #[test]
    fn reader_reports_line_numbers() {
        let g = DualGraph::square(2).unwrap();
        let plans = enumerate_plans(2).unwrap();
        let rec = sweep(&g, &plans, SweepMode::Full, Some(1)).unwrap().next().unwrap();
        let good = sweep_row(&rec);
        let text = format!("# meta\n{}\n{good}\n{}\n", sweep_header(2), good.replacen(",1,", ",2,", 1));
        let rows: Vec<_> = SweepReader::new(text.as_bytes(), "s.csv", None).unwrap().collect();
        assert!(rows[0].is_ok());
        assert_eq!(rows[1].as_ref().unwrap_err().to_string(), "s.csv:4: num 2 disagrees with bits_hex popcount 1");
        assert!(matches!(SweepReader::new(&b""[..], "e.csv", None), Err(Error::Parse { line: 1, .. })));
        assert!(SweepReader::new(&b"a,b\n"[..], "e.csv", None).is_err());
    }
}
