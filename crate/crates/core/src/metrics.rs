//! Evaluation products built from finished runs: sampled alive/delivery
//! series, per-run and per-protocol summaries, and their CSV/JSON forms.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::engine::{time_of, ExperimentResult, RoundReport};
use crate::error::Result;

/// One sampled row of a [`SeriesTable`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub round: u64,
    pub time: f64,
    pub values: Vec<f64>,
}

/// Column-per-protocol time series. Columns are sorted by label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesTable {
    pub labels: Vec<String>,
    pub rows: Vec<SeriesRow>,
}

/// Value at the end of `round` for a per-round quantity. Rounds past the end
/// of the run carry the final value; before the first report the value is
/// `before_start`.
fn sample(
    result: &ExperimentResult,
    round: u64,
    pick: impl Fn(&RoundReport) -> f64,
    before_start: f64,
) -> f64 {
    let idx = result.reports.partition_point(|r| r.round <= round);
    if idx == 0 {
        return before_start;
    }
    pick(&result.reports[idx - 1])
}

fn series(
    results: &BTreeMap<String, ExperimentResult>,
    sample_rounds: &[u64],
    value: impl Fn(&ExperimentResult, u64) -> f64,
) -> SeriesTable {
    let mut rounds = sample_rounds.to_vec();
    rounds.sort_unstable();
    rounds.dedup();
    let seconds_per_round = results
        .values()
        .next()
        .map_or(1.0, |r| r.config.seconds_per_round);
    SeriesTable {
        labels: results.keys().cloned().collect(),
        rows: rounds
            .into_iter()
            .map(|round| SeriesRow {
                round,
                time: time_of(round, seconds_per_round),
                values: results.values().map(|r| value(r, round)).collect(),
            })
            .collect(),
    }
}

/// Alive nodes at the end of each sampled round.
pub fn alive_series(
    results: &BTreeMap<String, ExperimentResult>,
    sample_rounds: &[u64],
) -> SeriesTable {
    series(results, sample_rounds, |r, round| {
        sample(
            r,
            round,
            |rep| rep.alive_after as f64,
            r.config.n_nodes as f64,
        )
    })
}

/// Cumulative base-station messages at the end of each sampled round.
pub fn bs_series(
    results: &BTreeMap<String, ExperimentResult>,
    sample_rounds: &[u64],
) -> SeriesTable {
    series(results, sample_rounds, |r, round| {
        sample(r, round, |rep| rep.bs_messages_total as f64, 0.0)
    })
}

/// Every round from 0 to `last`, keeping every `step`-th one.
pub fn sample_grid(last: u64, step: u64) -> Vec<u64> {
    (0..=last).step_by(step.max(1) as usize).collect()
}

impl SeriesTable {
    /// Element-wise mean of tables sharing labels and sample rounds.
    pub fn mean_of(tables: &[SeriesTable]) -> Option<SeriesTable> {
        let first = tables.first()?;
        let n = tables.len() as f64;
        let mut out = first.clone();
        for (i, row) in out.rows.iter_mut().enumerate() {
            for (j, v) in row.values.iter_mut().enumerate() {
                *v = tables.iter().map(|t| t.rows[i].values[j]).sum::<f64>() / n;
            }
        }
        Some(out)
    }

    pub fn column(&self, label: &str) -> Option<Vec<f64>> {
        let j = self.labels.iter().position(|l| l == label)?;
        Some(self.rows.iter().map(|r| r.values[j]).collect())
    }
}

/// Headline numbers of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub protocol: String,
    pub seed: u64,
    pub first_death_round: Option<u64>,
    pub last_death_round: Option<u64>,
    pub total_bs_messages: u64,
    pub mean_iterations: Option<f64>,
}

impl RunSummary {
    pub fn of(result: &ExperimentResult) -> Self {
        Self {
            protocol: result.protocol_name().to_string(),
            seed: result.config.seed,
            first_death_round: result.first_death_round,
            last_death_round: result.last_death_round,
            total_bs_messages: result.total_bs_messages,
            mean_iterations: result.mean_iterations(),
        }
    }
}

/// Sample mean and standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Stat {
    pub fn of(samples: &[f64]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // float summation can leave the mean a hair outside [min, max]
        Some(Self {
            n,
            mean: mean.clamp(min, max),
            std: var.sqrt(),
            min,
            max,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSummary {
    pub protocol: String,
    pub runs: usize,
    pub first_death_round: Option<Stat>,
    pub last_death_round: Option<Stat>,
    pub total_bs_messages: Stat,
    pub mean_iterations: Option<Stat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    /// Sorted by (protocol, seed).
    pub runs: Vec<RunSummary>,
    /// Sorted by protocol.
    pub protocols: Vec<ProtocolSummary>,
}

impl SummaryStats {
    pub fn protocol(&self, name: &str) -> Option<&ProtocolSummary> {
        self.protocols.iter().find(|p| p.protocol == name)
    }
}

/// Per-run and per-protocol statistics. Input order does not matter.
pub fn summarize(results: &[ExperimentResult]) -> SummaryStats {
    let mut runs: Vec<RunSummary> = results.iter().map(RunSummary::of).collect();
    runs.sort_by(|a, b| a.protocol.cmp(&b.protocol).then(a.seed.cmp(&b.seed)));
    let mut grouped: BTreeMap<&str, Vec<&RunSummary>> = BTreeMap::new();
    for r in &runs {
        grouped.entry(r.protocol.as_str()).or_default().push(r);
    }
    let protocols = grouped
        .into_iter()
        .map(|(name, group)| {
            let collect = |f: &dyn Fn(&RunSummary) -> Option<f64>| -> Vec<f64> {
                group.iter().filter_map(|r| f(r)).collect()
            };
            ProtocolSummary {
                protocol: name.to_string(),
                runs: group.len(),
                first_death_round: Stat::of(&collect(&|r| r.first_death_round.map(|v| v as f64))),
                last_death_round: Stat::of(&collect(&|r| r.last_death_round.map(|v| v as f64))),
                total_bs_messages: Stat::of(&collect(&|r| Some(r.total_bs_messages as f64)))
                    .expect("groups are non-empty"),
                mean_iterations: Stat::of(&collect(&|r| r.mean_iterations)),
            }
        })
        .collect();
    SummaryStats { runs, protocols }
}

/// Types with a CSV rendering: header row first, then one record per row.
pub trait ToCsv {
    fn write_csv<W: Write>(&self, out: W) -> Result<()>;

    fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl ToCsv for SeriesTable {
    fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["round".to_string(), "time_s".to_string()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![row.round.to_string(), row.time.to_string()];
            rec.extend(row.values.iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

impl SeriesTable {
    /// Parses the CSV produced by [`ToCsv::write_csv`].
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let labels = r.headers()?.iter().skip(2).map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let num = |s: &str| -> Result<f64> {
                s.parse()
                    .map_err(|e| crate::error::invalid("csv", format!("bad number {s:?}: {e}")))
            };
            rows.push(SeriesRow {
                round: num(&rec[0])? as u64,
                time: num(&rec[1])?,
                values: rec.iter().skip(2).map(num).collect::<Result<_>>()?,
            });
        }
        Ok(Self { labels, rows })
    }
}

impl ToCsv for SummaryStats {
    fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "protocol",
            "seed",
            "first_death_round",
            "last_death_round",
            "total_bs_messages",
            "mean_iterations",
        ])?;
        for r in &self.runs {
            w.write_record([
                r.protocol.clone(),
                r.seed.to_string(),
                opt(r.first_death_round),
                opt(r.last_death_round),
                r.total_bs_messages.to_string(),
                opt(r.mean_iterations),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Per-protocol aggregate table (mean and sample standard deviation).
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateTable<'a>(pub &'a SummaryStats);

impl ToCsv for AggregateTable<'_> {
    fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "protocol",
            "runs",
            "first_death_mean",
            "first_death_std",
            "last_death_mean",
            "last_death_std",
            "bs_messages_mean",
            "bs_messages_std",
            "iterations_mean",
            "iterations_std",
        ])?;
        for p in &self.0.protocols {
            let pair = |s: Option<Stat>| (opt(s.map(|s| s.mean)), opt(s.map(|s| s.std)));
            let (fm, fs) = pair(p.first_death_round);
            let (lm, ls) = pair(p.last_death_round);
            let (bm, bsd) = pair(Some(p.total_bs_messages));
            let (im, is) = pair(p.mean_iterations);
            w.write_record([
                p.protocol.clone(),
                p.runs.to_string(),
                fm,
                fs,
                lm,
                ls,
                bm,
                bsd,
                im,
                is,
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Writes a CSV rendering to `path`.
pub fn export_csv<T: ToCsv>(item: &T, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path)?;
    let mut out = BufWriter::new(file);
    item.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

/// Writes a pretty-printed JSON document to `path`, newline-terminated.
pub fn export_json<T: Serialize>(item: &T, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path)?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, item)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

pub fn import_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let file = File::open(path)?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}

/// The per-run JSON document: the full result plus its headline summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunDocument {
    pub summary: RunSummary,
    pub result: ExperimentResult,
}

impl RunDocument {
    pub fn new(result: ExperimentResult) -> Self {
        Self {
            summary: RunSummary::of(&result),
            result,
        }
    }
}
