use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use wsnsim::metrics::{
    alive_series, bs_series, export_csv, export_json, sample_grid, summarize, AggregateTable,
    RunDocument, RunSummary, SeriesTable, SummaryStats, ToCsv,
};
use wsnsim::sweep::{iteration_sweep, SweepTable, SweepTrial};
use wsnsim::{deploy_nodes, run_simulation, ExperimentResult, NetworkConfig};

use crate::config::{Format, RunSpec, SweepSpec};
use crate::error::{CliError, CliResult};

/// Runs every (protocol, seed) pair, in protocol-then-seed order.
fn execute(spec: &RunSpec) -> CliResult<Vec<ExperimentResult>> {
    let jobs: Vec<_> = spec
        .protocols
        .iter()
        .flat_map(|p| spec.seeds.iter().map(move |&s| (*p, s)))
        .collect();
    let work = || {
        jobs.par_iter()
            .map(|(protocol, seed)| {
                let config = NetworkConfig {
                    seed: *seed,
                    ..spec.network.clone()
                };
                run_simulation(&config, protocol, spec.max_rounds)
            })
            .collect::<Result<Vec<_>, _>>()
    };
    let results = match spec.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::config("jobs", e.to_string()))?
            .install(work),
        None => work(),
    };
    results.map_err(CliError::from_core)
}

fn last_round(results: &[ExperimentResult]) -> u64 {
    results
        .iter()
        .filter_map(|r| r.reports.last().map(|rep| rep.round))
        .max()
        .unwrap_or(0)
}

fn run_label(r: &ExperimentResult) -> String {
    format!("{}_seed{}", r.protocol_name(), r.config.seed)
}

struct Writer<'a> {
    dir: &'a Path,
    written: Vec<PathBuf>,
}

impl<'a> Writer<'a> {
    fn new(dir: &'a Path) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Output {
            path: dir.to_path_buf(),
            source: e.into(),
        })?;
        Ok(Self {
            dir,
            written: Vec::new(),
        })
    }

    fn path(&self, name: &str) -> CliResult<PathBuf> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::Output {
                path: parent.to_path_buf(),
                source: e.into(),
            })?;
        }
        Ok(path)
    }

    fn csv<T: ToCsv>(&mut self, name: &str, item: &T) -> CliResult<()> {
        let path = self.path(name)?;
        export_csv(item, &path).map_err(|source| CliError::Output {
            path: path.clone(),
            source,
        })?;
        self.written.push(path);
        Ok(())
    }

    fn json<T: serde::Serialize>(&mut self, name: &str, item: &T) -> CliResult<()> {
        let path = self.path(name)?;
        export_json(item, &path).map_err(|source| CliError::Output {
            path: path.clone(),
            source,
        })?;
        self.written.push(path);
        Ok(())
    }
}

fn report_line(s: &RunSummary) -> String {
    let round = |r: Option<u64>| r.map_or_else(|| "none".to_string(), |r| r.to_string());
    format!(
        "{} seed={} first_death={} last_death={} bs_messages={}",
        s.protocol,
        s.seed,
        round(s.first_death_round),
        round(s.last_death_round),
        s.total_bs_messages
    )
}

fn write_runs(w: &mut Writer<'_>, spec: &RunSpec, results: &[ExperimentResult]) -> CliResult<()> {
    if spec.wants(Format::Json) {
        for r in results {
            w.json(
                &format!("runs/{}.json", run_label(r)),
                &RunDocument::new(r.clone()),
            )?;
        }
    }
    Ok(())
}

fn io(stdout_err: std::io::Error) -> CliError {
    CliError::Output {
        path: PathBuf::from("<stdout>"),
        source: stdout_err.into(),
    }
}

/// One simulation per (protocol, seed). Writes per-run JSON documents, alive
/// and delivery series with one column per run, and the run summary table.
/// Returns the files written.
pub fn cmd_run(spec: &RunSpec, stdout: &mut dyn Write) -> CliResult<Vec<PathBuf>> {
    let results = execute(spec)?;
    let mut w = Writer::new(&spec.out)?;
    write_runs(&mut w, spec, &results)?;
    let summary = summarize(&results);
    if spec.wants(Format::Csv) {
        let grid = sample_grid(last_round(&results), spec.thin);
        let by_run: BTreeMap<String, ExperimentResult> =
            results.iter().map(|r| (run_label(r), r.clone())).collect();
        w.csv("alive.csv", &alive_series(&by_run, &grid))?;
        w.csv("bs.csv", &bs_series(&by_run, &grid))?;
        w.csv("summary.csv", &summary)?;
    }
    for r in &results {
        writeln!(stdout, "{}", report_line(&RunSummary::of(r))).map_err(io)?;
    }
    Ok(w.written)
}

/// Mean over seeds of each protocol's series, one column per protocol.
fn mean_series(
    results: &[ExperimentResult],
    seeds: &[u64],
    grid: &[u64],
    build: fn(&BTreeMap<String, ExperimentResult>, &[u64]) -> SeriesTable,
) -> SeriesTable {
    let tables: Vec<SeriesTable> = seeds
        .iter()
        .map(|&seed| {
            let by_protocol: BTreeMap<String, ExperimentResult> = results
                .iter()
                .filter(|r| r.config.seed == seed)
                .map(|r| (r.protocol_name().to_string(), r.clone()))
                .collect();
            build(&by_protocol, grid)
        })
        .collect();
    SeriesTable::mean_of(&tables).expect("at least one seed")
}

/// Protocols by descending mean first-death round. Protocols with no death
/// within the horizon sort first.
pub fn lifetime_ordering(stats: &SummaryStats) -> Vec<(String, Option<f64>)> {
    let mut order: Vec<(String, Option<f64>)> = stats
        .protocols
        .iter()
        .map(|p| {
            let fd = match &p.first_death_round {
                Some(s) if s.n == p.runs => Some(s.mean),
                _ => None,
            };
            (p.protocol.clone(), fd)
        })
        .collect();
    order.sort_by(|a, b| {
        let key = |v: Option<f64>| v.unwrap_or(f64::INFINITY);
        key(b.1).total_cmp(&key(a.1)).then_with(|| a.0.cmp(&b.0))
    });
    order
}

/// Runs every protocol on every seed and writes seed-averaged series with
/// one column per protocol, the per-run summary and the per-protocol
/// aggregate. Prints the lifetime ordering.
pub fn cmd_compare(spec: &RunSpec, stdout: &mut dyn Write) -> CliResult<Vec<PathBuf>> {
    if spec.protocols.len() < 2 {
        return Err(CliError::config(
            "protocol",
            "compare needs at least two protocols",
        ));
    }
    let results = execute(spec)?;
    let mut w = Writer::new(&spec.out)?;
    write_runs(&mut w, spec, &results)?;
    let summary = summarize(&results);
    if spec.wants(Format::Csv) {
        let grid = sample_grid(last_round(&results), spec.thin);
        w.csv(
            "alive.csv",
            &mean_series(&results, &spec.seeds, &grid, alive_series),
        )?;
        w.csv(
            "bs.csv",
            &mean_series(&results, &spec.seeds, &grid, bs_series),
        )?;
        w.csv("summary.csv", &summary)?;
        w.csv("aggregate.csv", &AggregateTable(&summary))?;
    }
    if spec.wants(Format::Json) {
        w.json("summary.json", &summary)?;
    }
    for r in &results {
        writeln!(stdout, "{}", report_line(&RunSummary::of(r))).map_err(io)?;
    }
    let ordering: Vec<String> = lifetime_ordering(&summary)
        .into_iter()
        .map(|(name, fd)| match fd {
            Some(fd) => format!("{name} ({fd:.1})"),
            None => format!("{name} (no death)"),
        })
        .collect();
    writeln!(
        stdout,
        "lifetime ordering by mean first death: {}",
        ordering.join(" > ")
    )
    .map_err(io)?;
    Ok(w.written)
}

/// K-means and fuzzy formation iterations over a cluster-count grid. Each
/// seed deploys one network and seeds the fuzzy initialization.
pub fn cmd_sweep(
    spec: &SweepSpec,
    stdout: &mut dyn Write,
) -> CliResult<(SweepTable, Vec<PathBuf>)> {
    let run = &spec.run;
    let deployments: Vec<_> = run
        .seeds
        .iter()
        .map(|&seed| {
            deploy_nodes(&NetworkConfig {
                seed,
                ..run.network.clone()
            })
        })
        .collect();
    let trials: Vec<SweepTrial<'_>> = deployments
        .iter()
        .zip(&run.seeds)
        .map(|(nodes, &seed)| SweepTrial {
            nodes,
            fcm_seed: seed,
        })
        .collect();
    let table = iteration_sweep(
        &trials,
        &spec.grid,
        run.params.kmeans_max_iter(),
        &run.params.fuzzy(),
    )
    .map_err(CliError::from_core)?;
    let mut w = Writer::new(&run.out)?;
    if run.wants(Format::Csv) {
        w.csv("sweep.csv", &table)?;
    }
    if run.wants(Format::Json) {
        w.json("sweep.json", &table)?;
    }
    for c in &table.cells {
        writeln!(
            stdout,
            "cluster_heads={} kmeans={:.2} fuzzy={:.2}",
            c.k,
            c.kmeans_mean(),
            c.fuzzy_mean()
        )
        .map_err(io)?;
    }
    Ok((table, w.written))
}
