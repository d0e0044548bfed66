use std::collections::BTreeMap;
use std::fmt::Write;

use anyhow::{bail, Context, Result};

pub const HEADER: &str = "file\tmode\tverdict\tk\ttime_s\tinv_emitted\tinv_used\tchecks_base\tchecks_step";

/// One verification run, as a TSV row.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchRecord {
    pub file: String,
    pub mode: String,
    /// `valid`, `invalid`, `unknown` or `error`.
    pub verdict: String,
    pub k: Option<u32>,
    pub time_s: f64,
    pub inv_emitted: usize,
    pub inv_used: usize,
    pub checks_base: u64,
    pub checks_step: u64,
}

impl BenchRecord {
    pub fn to_tsv(&self) -> String {
        let k = self.k.map_or_else(|| "-".to_string(), |k| k.to_string());
        format!(
            "{}\t{}\t{}\t{k}\t{:.3}\t{}\t{}\t{}\t{}",
            self.file, self.mode, self.verdict, self.time_s, self.inv_emitted, self.inv_used, self.checks_base, self.checks_step
        )
    }

    pub fn parse(line: &str) -> Result<BenchRecord> {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 9 {
            bail!("expected 9 columns, found {}", cols.len());
        }
        let k = if cols[3] == "-" { None } else { Some(cols[3].parse().context("k")?) };
        let time_s: f64 = cols[4].parse().context("time_s")?;
        if time_s < 0.0 {
            bail!("negative time");
        }
        Ok(BenchRecord {
            file: cols[0].into(),
            mode: cols[1].into(),
            verdict: cols[2].into(),
            k,
            time_s,
            inv_emitted: cols[5].parse().context("inv_emitted")?,
            inv_used: cols[6].parse().context("inv_used")?,
            checks_base: cols[7].parse().context("checks_base")?,
            checks_step: cols[8].parse().context("checks_step")?,
        })
    }

    pub fn solved(&self) -> bool {
        self.verdict == "valid" || self.verdict == "invalid"
    }
}

/// Parses a TSV file body, skipping blank lines and header lines.
pub fn parse_tsv(text: &str) -> Result<Vec<BenchRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && *l != HEADER)
        .map(|(i, l)| BenchRecord::parse(l).with_context(|| format!("line {}", i + 1)))
        .collect()
}

/// Per mode: solved percentage and mean time per verdict class.
pub fn summarize(records: &[BenchRecord]) -> String {
    let mut by_mode: BTreeMap<&str, Vec<&BenchRecord>> = BTreeMap::new();
    for r in records {
        by_mode.entry(&r.mode).or_default().push(r);
    }
    let mut out = String::new();
    writeln!(out, "mode\truns\tsolved\tprecision\tmean_time_valid\tmean_time_invalid\tmean_time_unknown").unwrap();
    for (mode, rs) in by_mode {
        let solved = rs.iter().filter(|r| r.solved()).count();
        let mean = |class: &str| {
            let times: Vec<f64> = rs
                .iter()
                .filter(|r| if class == "unknown" { !r.solved() } else { r.verdict == class })
                .map(|r| r.time_s)
                .collect();
            if times.is_empty() {
                "-".to_string()
            } else {
                format!("{:.3}", times.iter().sum::<f64>() / times.len() as f64)
            }
        };
        writeln!(
            out,
            "{mode}\t{}\t{solved}\t{:.1}%\t{}\t{}\t{}",
            rs.len(),
            100.0 * solved as f64 / rs.len() as f64,
            mean("valid"),
            mean("invalid"),
            mean("unknown")
        )
        .unwrap();
    }
    out
}
