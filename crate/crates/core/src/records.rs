//! CSV layouts for evaluation logs, Pareto fronts and CMA-ES histories.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which round-trips
//! every `f64` exactly.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cmaes::HistoryRow;
use crate::error::{Error, Result};
use crate::nsga3::dominates;

pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_float(field: &str, column: &str, row: usize) -> Result<f64> {
    field.trim().parse().map_err(|_| {
        Error::InvalidInput(format!("row {row}, column `{column}`: `{field}` is not a number"))
    })
}

fn phase_headers(slice_count: usize) -> impl Iterator<Item = String> {
    (0..slice_count).map(|i| format!("phase_{i}"))
}

/// One evaluated candidate in the generation log.
#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationRecord {
    pub generation: usize,
    pub index: usize,
    pub failed: bool,
    pub infidelity: f64,
    pub infidelity_stderr: f64,
    /// Absent when only `F` was estimated.
    pub rydberg_time: Option<(f64, f64)>,
    pub duration: f64,
    pub phases: Vec<f64>,
}

pub fn evaluation_header(slice_count: usize) -> Vec<String> {
    let mut h: Vec<String> = [
        "generation",
        "index",
        "status",
        "F",
        "F_stderr",
        "G",
        "G_stderr",
        "duration",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    h.extend(phase_headers(slice_count));
    h
}

impl EvaluationRecord {
    pub fn to_row(&self) -> Vec<String> {
        let (g, g_se) = match self.rydberg_time {
            Some((g, se)) => (fmt_float(g), fmt_float(se)),
            None => (String::new(), String::new()),
        };
        let mut row = vec![
            self.generation.to_string(),
            self.index.to_string(),
            if self.failed { "failed" } else { "ok" }.to_string(),
            fmt_float(self.infidelity),
            fmt_float(self.infidelity_stderr),
            g,
            g_se,
            fmt_float(self.duration),
        ];
        row.extend(self.phases.iter().map(|p| fmt_float(*p)));
        row
    }
}

/// One row of a Pareto front file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontRecord {
    pub noise_level: f64,
    pub generation: usize,
    pub infidelity: f64,
    pub infidelity_stderr: f64,
    pub rydberg_time: f64,
    pub rydberg_time_stderr: f64,
    pub duration: f64,
    pub phases: Vec<f64>,
}

impl FrontRecord {
    pub fn objectives(&self) -> [f64; 2] {
        [self.infidelity, self.rydberg_time]
    }
}

const FRONT_FIXED: [&str; 7] = [
    "noise_level",
    "generation",
    "F",
    "F_stderr",
    "G",
    "G_stderr",
    "duration",
];

/// First pair of rows where one dominates the other, if any.
pub fn find_dominated_pair(records: &[FrontRecord]) -> Option<(usize, usize)> {
    for i in 0..records.len() {
        for j in 0..records.len() {
            if i != j && dominates(&records[i].objectives(), &records[j].objectives()) {
                return Some((i, j));
            }
        }
    }
    None
}

/// Writes a front, refusing empty or internally dominated sets.
pub fn write_front<W: Write>(out: W, records: &[FrontRecord]) -> Result<()> {
    let Some(first) = records.first() else {
        return Err(Error::EmptyFront("no rows to write".into()));
    };
    if let Some((i, j)) = find_dominated_pair(records) {
        return Err(Error::DominatedFrontRow(i, j));
    }
    let n = first.phases.len();
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = FRONT_FIXED.iter().map(|s| s.to_string()).collect();
    header.extend(phase_headers(n));
    w.write_record(&header)?;
    for r in records {
        if r.phases.len() != n {
            return Err(Error::InvalidInput("front rows have different slice counts".into()));
        }
        let mut row = vec![
            fmt_float(r.noise_level),
            r.generation.to_string(),
            fmt_float(r.infidelity),
            fmt_float(r.infidelity_stderr),
            fmt_float(r.rydberg_time),
            fmt_float(r.rydberg_time_stderr),
            fmt_float(r.duration),
        ];
        row.extend(r.phases.iter().map(|p| fmt_float(*p)));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<front>", e))?;
    Ok(())
}

pub fn write_front_file(path: &Path, records: &[FrontRecord]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_front(std::io::BufWriter::new(file), records)
}

pub fn read_front<R: Read>(input: R) -> Result<Vec<FrontRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::InvalidInput(format!("front file lacks a `{name}` column")))
    };
    let f = col("F")?;
    let g = col("G")?;
    let optional = |name: &str| headers.iter().position(|h| h == name);
    let level = optional("noise_level");
    let generation = optional("generation");
    let f_se = optional("F_stderr");
    let g_se = optional("G_stderr");
    let duration = optional("duration");
    let phases: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with("phase_"))
        .map(|(i, _)| i)
        .collect();

    let mut out = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let get = |i: Option<usize>, name: &str| -> Result<f64> {
            match i {
                Some(i) => parse_float(&rec[i], name, row),
                None => Ok(f64::NAN),
            }
        };
        out.push(FrontRecord {
            noise_level: get(level, "noise_level")?,
            generation: match generation {
                Some(i) => rec[i].trim().parse().map_err(|_| {
                    Error::InvalidInput(format!("row {row}: bad generation `{}`", &rec[i]))
                })?,
                None => 0,
            },
            infidelity: get(Some(f), "F")?,
            infidelity_stderr: get(f_se, "F_stderr")?,
            rydberg_time: get(Some(g), "G")?,
            rydberg_time_stderr: get(g_se, "G_stderr")?,
            duration: get(duration, "duration")?,
            phases: phases
                .iter()
                .map(|&i| parse_float(&rec[i], &headers[i], row))
                .collect::<Result<_>>()?,
        });
    }
    Ok(out)
}

pub fn read_front_file(path: &Path) -> Result<Vec<FrontRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_front(std::io::BufReader::new(file))
}

pub fn write_history<W: Write>(out: W, history: &[HistoryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "generation",
        "evaluations",
        "best_observed",
        "generation_best",
        "generation_median",
        "incumbent",
        "incumbent_evaluations",
        "sigma",
    ])?;
    for h in history {
        w.write_record([
            h.generation.to_string(),
            h.evaluations.to_string(),
            fmt_float(h.best_observed),
            fmt_float(h.generation_best),
            fmt_float(h.generation_median),
            fmt_float(h.incumbent),
            h.incumbent_evaluations.to_string(),
            fmt_float(h.sigma),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<history>", e))?;
    Ok(())
}

/// Genomes from a text file: one per non-empty line, numbers separated by
/// commas or whitespace, `#` starts a comment.
pub fn parse_genomes(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let genome = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>().map_err(|_| {
                    Error::InvalidInput(format!("line {}: `{s}` is not a number", line_no + 1))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(genome);
    }
    if out.is_empty() {
        return Err(Error::InvalidInput("no genome found".into()));
    }
    Ok(out)
}
