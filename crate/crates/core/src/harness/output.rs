use std::path::Path;
use std::time::SystemTime;

use serde::Serialize;

use super::sim::{RunOutput, SlotRecord, Trajectory};
use super::{ExperimentSpec, Policy, ScenarioFile, SweepAxis};
use crate::error::{Error, Result};

pub const RECORDS_FILE: &str = "records.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const TIMING_FILE: &str = "timing.csv";
pub const META_FILE: &str = "meta.json";

/// Window of the late-run queue average.
const LAST_WINDOW: usize = 100;

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn parse_num(s: &str, what: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::invalid(format!("bad {what} value {s:?}")))
}

fn parse_opt(s: &str, what: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_num(s, what).map(Some)
    }
}

impl SlotRecord {
    pub fn header(k: usize) -> Vec<String> {
        let mut h: Vec<String> = ["value", "policy", "seed", "slot", "failed", "qwsr", "iterations", "conic_iterations"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        h.extend((0..k).map(|i| format!("queue_{i}")));
        h.extend((0..k).map(|i| format!("rate_{i}")));
        h.push("error".into());
        h
    }

    pub fn to_row(&self) -> Vec<String> {
        let mut r = vec![
            opt_num(self.axis_value),
            self.policy.name().to_string(),
            self.seed.to_string(),
            self.slot.to_string(),
            self.failed.to_string(),
            num(self.qwsr),
            self.iterations.to_string(),
            self.conic_iterations.to_string(),
        ];
        r.extend(self.queues.iter().map(|&q| num(q)));
        r.extend(self.rates.iter().map(|&x| num(x)));
        r.push(self.error.clone());
        r
    }

    /// Inverse of [`SlotRecord::to_row`]; the wall-clock is not stored.
    pub fn from_row(row: &[&str], k: usize) -> Result<Self> {
        if row.len() != 9 + 2 * k {
            return Err(Error::Dimension {
                context: "record row",
                expected: 9 + 2 * k,
                found: row.len(),
            });
        }
        let int = |s: &str, what: &str| -> Result<u64> {
            s.parse().map_err(|_| Error::invalid(format!("bad {what} value {s:?}")))
        };
        let floats = |cells: &[&str], what: &str| -> Result<Vec<f64>> { cells.iter().map(|c| parse_num(c, what)).collect() };
        Ok(SlotRecord {
            axis_value: parse_opt(row[0], "value")?,
            policy: row[1].parse()?,
            seed: int(row[2], "seed")?,
            slot: int(row[3], "slot")? as usize,
            failed: row[4].parse().map_err(|_| Error::invalid(format!("bad failed flag {:?}", row[4])))?,
            qwsr: parse_num(row[5], "qwsr")?,
            iterations: int(row[6], "iterations")? as usize,
            conic_iterations: int(row[7], "conic_iterations")? as usize,
            queues: floats(&row[8..8 + k], "queue")?,
            rates: floats(&row[8 + k..8 + 2 * k], "rate")?,
            error: row[8 + 2 * k].to_string(),
            wall_seconds: 0.0,
        })
    }
}

/// Per-trajectory summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub axis: SweepAxis,
    pub value: Option<f64>,
    pub policy: Policy,
    pub seed: u64,
    pub slots: usize,
    pub mean_qwsr: f64,
    pub failed_slots: usize,
    /// Time-averaged backlog per user.
    pub avg_queue: Vec<f64>,
    /// Average backlog over the last hundred slots (or the whole run).
    pub last_avg_queue: Vec<f64>,
    /// Tail slope per user in bits/Hz per slot; `None` below ten slots.
    pub tail_slope: Vec<Option<f64>>,
    pub final_queue: Vec<f64>,
}

pub(crate) fn summarize(axis: SweepAxis, t: &Trajectory) -> SummaryRow {
    let n = t.records.len();
    let k = t.final_queues.len();
    let col_mean = |rs: &[SlotRecord], i: usize| rs.iter().map(|r| r.queues[i]).sum::<f64>() / rs.len() as f64;
    let tail = &t.records[n.saturating_sub(LAST_WINDOW)..];
    SummaryRow {
        axis,
        value: t.config.axis_value,
        policy: t.config.policy,
        seed: t.config.seed,
        slots: n,
        mean_qwsr: t.records.iter().map(|r| r.qwsr).sum::<f64>() / n as f64,
        failed_slots: t.records.iter().filter(|r| r.failed).count(),
        avg_queue: (0..k).map(|i| col_mean(&t.records, i)).collect(),
        last_avg_queue: (0..k).map(|i| col_mean(tail, i)).collect(),
        tail_slope: match &t.metrics {
            Some(m) => m.tail_slope.iter().map(|&s| Some(s)).collect(),
            None => vec![None; k],
        },
        final_queue: t.final_queues.clone(),
    }
}

impl SummaryRow {
    pub fn header(k: usize) -> Vec<String> {
        let mut h: Vec<String> = ["axis", "value", "policy", "seed", "slots", "mean_qwsr", "failed_slots"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for name in ["avg_queue", "last_avg_queue", "tail_slope", "final_queue"] {
            h.extend((0..k).map(|i| format!("{name}_{i}")));
        }
        h
    }

    pub fn to_row(&self) -> Vec<String> {
        let mut r = vec![
            self.axis.name().to_string(),
            opt_num(self.value),
            self.policy.name().to_string(),
            self.seed.to_string(),
            self.slots.to_string(),
            num(self.mean_qwsr),
            self.failed_slots.to_string(),
        ];
        r.extend(self.avg_queue.iter().map(|&x| num(x)));
        r.extend(self.last_avg_queue.iter().map(|&x| num(x)));
        r.extend(self.tail_slope.iter().map(|&x| opt_num(x)));
        r.extend(self.final_queue.iter().map(|&x| num(x)));
        r
    }

    pub fn from_row(row: &[&str], k: usize) -> Result<Self> {
        if row.len() != 7 + 4 * k {
            return Err(Error::Dimension {
                context: "summary row",
                expected: 7 + 4 * k,
                found: row.len(),
            });
        }
        let floats = |from: usize, what: &str| -> Result<Vec<f64>> {
            row[from..from + k].iter().map(|c| parse_num(c, what)).collect()
        };
        Ok(SummaryRow {
            axis: row[0].parse()?,
            value: parse_opt(row[1], "value")?,
            policy: row[2].parse()?,
            seed: row[3].parse().map_err(|_| Error::invalid(format!("bad seed {:?}", row[3])))?,
            slots: row[4].parse().map_err(|_| Error::invalid(format!("bad slot count {:?}", row[4])))?,
            mean_qwsr: parse_num(row[5], "mean_qwsr")?,
            failed_slots: row[6].parse().map_err(|_| Error::invalid(format!("bad failure count {:?}", row[6])))?,
            avg_queue: floats(7, "avg_queue")?,
            last_avg_queue: floats(7 + k, "last_avg_queue")?,
            tail_slope: row[7 + 2 * k..7 + 3 * k].iter().map(|c| parse_opt(c, "tail_slope")).collect::<Result<_>>()?,
            final_queue: floats(7 + 3 * k, "final_queue")?,
        })
    }
}

/// Sidecar with everything that is not reproducible byte-for-byte.
#[derive(Debug, Serialize)]
pub struct RunMeta<'a> {
    pub package: &'static str,
    pub version: &'static str,
    pub started_unix_seconds: u64,
    pub wall_seconds: f64,
    pub spec: &'a ExperimentSpec,
    pub scenario_file: ScenarioFile,
    pub files: [&'static str; 3],
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn write_rows<'a>(path: &Path, header: Vec<String>, rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv_writer(path)?;
    let ctx = |e: csv::Error| Error::from(e).context(path.display().to_string());
    w.write_record(&header).map_err(ctx)?;
    for row in rows {
        w.write_record(&row).map_err(ctx)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `records.csv`, `summary.csv`, `timing.csv` and `meta.json`.
pub fn write_outputs(spec: &ExperimentSpec, out: &RunOutput, started: SystemTime, wall_seconds: f64) -> Result<()> {
    let dir = &spec.out_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let k = spec.scenario.num_users();
    let records = || out.trajectories.iter().flat_map(|t| t.records.iter());
    write_rows(&dir.join(RECORDS_FILE), SlotRecord::header(k), records().map(|r| r.to_row()))?;
    write_rows(&dir.join(SUMMARY_FILE), SummaryRow::header(k), out.summary.iter().map(|r| r.to_row()))?;
    let timing_header = ["value", "policy", "seed", "slot", "wall_seconds"].map(String::from).to_vec();
    write_rows(
        &dir.join(TIMING_FILE),
        timing_header,
        records().map(|r| {
            vec![
                opt_num(r.axis_value),
                r.policy.name().to_string(),
                r.seed.to_string(),
                r.slot.to_string(),
                num(r.wall_seconds),
            ]
        }),
    )?;
    let meta = RunMeta {
        package: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        started_unix_seconds: started
            .duration_since(SystemTime::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        wall_seconds,
        spec,
        scenario_file: ScenarioFile::from_scenario(&spec.scenario),
        files: [RECORDS_FILE, SUMMARY_FILE, TIMING_FILE],
    };
    let path = dir.join(META_FILE);
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Error::invalid(format!("json encoding: {e}")))?;
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

fn read_rows<T>(path: &Path, fixed: usize, per_user: usize, parse: impl Fn(&[&str], usize) -> Result<T>) -> Result<Vec<T>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::from(e).context(path.display().to_string()))?;
    let width = reader.headers().map_err(|e| Error::from(e).context(path.display().to_string()))?.len();
    if width < fixed || (width - fixed) % per_user != 0 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            detail: format!("unexpected column count {width}"),
        });
    }
    let k = (width - fixed) / per_user;
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::from(e).context(path.display().to_string()))?;
        let cells: Vec<&str> = rec.iter().collect();
        out.push(parse(&cells, k).map_err(|e| e.context(path.display().to_string()))?);
    }
    Ok(out)
}

pub fn read_records(path: &Path) -> Result<Vec<SlotRecord>> {
    read_rows(path, 9, 2, SlotRecord::from_row)
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    read_rows(path, 7, 4, SummaryRow::from_row)
}
