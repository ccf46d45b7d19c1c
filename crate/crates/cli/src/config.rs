//! Run specifications assembled from a flat key/value file and command-line
//! flags. Flags win over file values; anything left unset takes the library
//! default.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Deserialize;
use wsnsim::engine::{FuzzyParams, KmeansParams};
use wsnsim::protocols::{EecsParams, HeedParams, LeachParams};
use wsnsim::{NetworkConfig, Position, Protocol};

use crate::error::{CliError, CliResult};

pub const DEFAULT_MAX_ROUNDS: u64 = 10_000;
pub const DEFAULT_OUT_DIR: &str = "out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// 100 nodes, 100 m x 100 m, base station at (50, 175).
    Default,
    /// 1000 m x 1000 m, base station at (500, 200).
    Table1,
}

impl Preset {
    fn network(self) -> NetworkConfig {
        match self {
            Preset::Default => NetworkConfig::default(),
            Preset::Table1 => NetworkConfig::table1_preset(),
        }
    }
}

/// Cluster-count grid, written either as a list (`10,20,30`) or an inclusive
/// range with a step (`10..100:10`).
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    List(Vec<usize>),
    Text(String),
}

impl GridSpec {
    pub fn values(&self) -> CliResult<Vec<usize>> {
        match self {
            GridSpec::List(v) => Ok(v.clone()),
            GridSpec::Text(s) => parse_grid(s),
        }
    }
}

pub fn parse_grid(text: &str) -> CliResult<Vec<usize>> {
    let bad = |reason: String| CliError::config("grid", reason);
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    if let Some((range, step)) = text.split_once("..") {
        let (end, step) = match step.split_once(':') {
            Some((end, step)) => (end, step),
            None => (step, "1"),
        };
        let num = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|e| bad(format!("`{}` in `{text}`: {e}", s.trim())))
        };
        let (start, end, step) = (num(range)?, num(end)?, num(step)?);
        if step == 0 {
            return Err(bad("step must be >= 1".into()));
        }
        return Ok((start..=end).step_by(step).collect());
    }
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|e| bad(format!("`{}`: {e}", s.trim())))
        })
        .collect()
}

/// Every key a config file may contain. Names mirror the long flags with
/// underscores.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct FileSpec {
    pub preset: Option<Preset>,
    pub protocols: Option<Vec<String>>,
    pub seeds: Option<Vec<u64>>,
    pub max_rounds: Option<u64>,
    pub thin: Option<u64>,
    pub out: Option<PathBuf>,
    pub formats: Option<Vec<Format>>,
    pub grid: Option<GridSpec>,
    pub jobs: Option<usize>,
    #[serde(skip)]
    pub network: NetworkArgs,
    #[serde(skip)]
    pub params: ParamArgs,
}

const FILE_KEYS: &[&str] = &[
    "preset",
    "protocols",
    "seeds",
    "max_rounds",
    "thin",
    "out",
    "formats",
    "grid",
    "jobs",
    "n_nodes",
    "width",
    "height",
    "bs_x",
    "bs_y",
    "initial_energy",
    "e_elec",
    "e_amp",
    "e_da",
    "data_bits",
    "header_bits",
    "seconds_per_round",
    "leach_p",
    "heed_c_prob",
    "heed_p_min",
    "heed_cluster_radius",
    "heed_max_iterations",
    "eecs_p",
    "eecs_w",
    "eecs_compete_radius",
    "min_ch_separation",
    "k",
    "kmeans_max_iter",
    "fuzzy_m",
    "fuzzy_tol",
    "fuzzy_max_iter",
];

impl FileSpec {
    /// Parses a config document. Unknown keys are errors.
    pub fn parse(text: &str) -> Result<Self, String> {
        let table: toml::Table = toml::from_str(text).map_err(|e| e.message().to_string())?;
        if let Some(key) = table.keys().find(|k| !FILE_KEYS.contains(&k.as_str())) {
            return Err(format!("unknown key `{key}`"));
        }
        let value = toml::Value::Table(table);
        let err = |e: toml::de::Error| e.message().to_string();
        let mut spec: FileSpec = value.clone().try_into().map_err(err)?;
        spec.network = value.clone().try_into().map_err(err)?;
        spec.params = value.try_into().map_err(err)?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::ReadConfig {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|message| CliError::ParseConfig {
            path: path.to_path_buf(),
            message,
        })
    }
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
pub struct NetworkArgs {
    #[arg(long)]
    pub n_nodes: Option<usize>,
    #[arg(long)]
    pub width: Option<f64>,
    #[arg(long)]
    pub height: Option<f64>,
    #[arg(long)]
    pub bs_x: Option<f64>,
    #[arg(long)]
    pub bs_y: Option<f64>,
    /// Joules per node at deployment.
    #[arg(long)]
    pub initial_energy: Option<f64>,
    #[arg(long)]
    pub e_elec: Option<f64>,
    #[arg(long)]
    pub e_amp: Option<f64>,
    #[arg(long)]
    pub e_da: Option<f64>,
    #[arg(long)]
    pub data_bits: Option<u64>,
    #[arg(long)]
    pub header_bits: Option<u64>,
    #[arg(long)]
    pub seconds_per_round: Option<f64>,
}

impl NetworkArgs {
    fn or(self, file: NetworkArgs) -> NetworkArgs {
        NetworkArgs {
            n_nodes: self.n_nodes.or(file.n_nodes),
            width: self.width.or(file.width),
            height: self.height.or(file.height),
            bs_x: self.bs_x.or(file.bs_x),
            bs_y: self.bs_y.or(file.bs_y),
            initial_energy: self.initial_energy.or(file.initial_energy),
            e_elec: self.e_elec.or(file.e_elec),
            e_amp: self.e_amp.or(file.e_amp),
            e_da: self.e_da.or(file.e_da),
            data_bits: self.data_bits.or(file.data_bits),
            header_bits: self.header_bits.or(file.header_bits),
            seconds_per_round: self.seconds_per_round.or(file.seconds_per_round),
        }
    }

    fn apply(&self, mut c: NetworkConfig) -> NetworkConfig {
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        if let Some(n) = self.n_nodes {
            c.n_nodes = n;
        }
        set(&mut c.width, self.width);
        set(&mut c.height, self.height);
        c.bs = Position::new(self.bs_x.unwrap_or(c.bs.x), self.bs_y.unwrap_or(c.bs.y));
        set(&mut c.initial_energy, self.initial_energy);
        set(&mut c.radio.e_elec, self.e_elec);
        set(&mut c.radio.e_amp, self.e_amp);
        set(&mut c.radio.e_da, self.e_da);
        if let Some(b) = self.data_bits {
            c.radio.data_bits = b;
        }
        if let Some(b) = self.header_bits {
            c.radio.header_bits = b;
        }
        set(&mut c.seconds_per_round, self.seconds_per_round);
        c
    }
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
pub struct ParamArgs {
    #[arg(long)]
    pub leach_p: Option<f64>,
    #[arg(long)]
    pub heed_c_prob: Option<f64>,
    #[arg(long)]
    pub heed_p_min: Option<f64>,
    #[arg(long)]
    pub heed_cluster_radius: Option<f64>,
    #[arg(long)]
    pub heed_max_iterations: Option<usize>,
    #[arg(long)]
    pub eecs_p: Option<f64>,
    #[arg(long)]
    pub eecs_w: Option<f64>,
    #[arg(long)]
    pub eecs_compete_radius: Option<f64>,
    /// Minimum head spacing for LEACH and EECS, meters. Zero disables it.
    #[arg(long)]
    pub min_ch_separation: Option<f64>,
    /// Fixed cluster count for K-means and fuzzy formation.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub kmeans_max_iter: Option<usize>,
    #[arg(long)]
    pub fuzzy_m: Option<f64>,
    #[arg(long)]
    pub fuzzy_tol: Option<f64>,
    #[arg(long)]
    pub fuzzy_max_iter: Option<usize>,
}

impl ParamArgs {
    fn or(self, file: ParamArgs) -> ParamArgs {
        ParamArgs {
            leach_p: self.leach_p.or(file.leach_p),
            heed_c_prob: self.heed_c_prob.or(file.heed_c_prob),
            heed_p_min: self.heed_p_min.or(file.heed_p_min),
            heed_cluster_radius: self.heed_cluster_radius.or(file.heed_cluster_radius),
            heed_max_iterations: self.heed_max_iterations.or(file.heed_max_iterations),
            eecs_p: self.eecs_p.or(file.eecs_p),
            eecs_w: self.eecs_w.or(file.eecs_w),
            eecs_compete_radius: self.eecs_compete_radius.or(file.eecs_compete_radius),
            min_ch_separation: self.min_ch_separation.or(file.min_ch_separation),
            k: self.k.or(file.k),
            kmeans_max_iter: self.kmeans_max_iter.or(file.kmeans_max_iter),
            fuzzy_m: self.fuzzy_m.or(file.fuzzy_m),
            fuzzy_tol: self.fuzzy_tol.or(file.fuzzy_tol),
            fuzzy_max_iter: self.fuzzy_max_iter.or(file.fuzzy_max_iter),
        }
    }

    /// The named protocol with these overrides applied.
    pub fn protocol(&self, name: &str) -> CliResult<Protocol> {
        let base = Protocol::from_name(name).ok_or_else(|| {
            CliError::config(
                "protocol",
                format!("unknown protocol `{name}` (expected leach, heed, eecs, kmeans or fuzzy)"),
            )
        })?;
        Ok(match base {
            Protocol::Leach(d) => Protocol::Leach(LeachParams {
                p: self.leach_p.unwrap_or(d.p),
                min_ch_separation: self.min_ch_separation.unwrap_or(d.min_ch_separation),
            }),
            Protocol::Heed(d) => Protocol::Heed(HeedParams {
                c_prob: self.heed_c_prob.unwrap_or(d.c_prob),
                p_min: self.heed_p_min.unwrap_or(d.p_min),
                cluster_radius: self.heed_cluster_radius.unwrap_or(d.cluster_radius),
                max_iterations: self.heed_max_iterations.unwrap_or(d.max_iterations),
            }),
            Protocol::Eecs(d) => Protocol::Eecs(EecsParams {
                p: self.eecs_p.unwrap_or(d.p),
                w: self.eecs_w.unwrap_or(d.w),
                compete_radius: self.eecs_compete_radius.unwrap_or(d.compete_radius),
                min_ch_separation: self.min_ch_separation.unwrap_or(d.min_ch_separation),
            }),
            Protocol::Kmeans(d) => Protocol::Kmeans(KmeansParams {
                k: self.k.or(d.k),
                max_iter: self.kmeans_max_iter.unwrap_or(d.max_iter),
            }),
            Protocol::Fuzzy(_) => Protocol::Fuzzy(self.fuzzy()),
        })
    }

    pub fn fuzzy(&self) -> FuzzyParams {
        let d = FuzzyParams::default();
        FuzzyParams {
            k: self.k.or(d.k),
            m: self.fuzzy_m.unwrap_or(d.m),
            tol: self.fuzzy_tol.unwrap_or(d.tol),
            max_iter: self.fuzzy_max_iter.unwrap_or(d.max_iter),
        }
    }

    pub fn kmeans_max_iter(&self) -> usize {
        self.kmeans_max_iter
            .unwrap_or(KmeansParams::default().max_iter)
    }
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct SpecArgs {
    /// Flat key = value config file; flags override its entries.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Protocol to run; repeat for several.
    #[arg(long = "protocol", value_name = "NAME")]
    pub protocols: Vec<String>,
    /// Deployment and protocol seed; repeat for several.
    #[arg(long = "seed", value_name = "SEED")]
    pub seeds: Vec<u64>,
    #[arg(long)]
    pub max_rounds: Option<u64>,
    /// Keep every n-th round in the series CSVs.
    #[arg(long)]
    pub thin: Option<u64>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Output format; repeat for several. Defaults to csv and json.
    #[arg(long = "format", value_enum)]
    pub formats: Vec<Format>,
    /// Worker threads for independent runs. Defaults to all cores.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[command(flatten)]
    pub network: NetworkArgs,
    #[command(flatten)]
    pub params: ParamArgs,
}

/// A fully resolved request.
#[derive(Debug, Clone)]
pub struct RunSpec {
    /// Network template; `seed` is replaced per run.
    pub network: NetworkConfig,
    pub protocols: Vec<Protocol>,
    pub seeds: Vec<u64>,
    pub max_rounds: u64,
    pub thin: u64,
    pub out: PathBuf,
    pub formats: Vec<Format>,
    pub jobs: Option<usize>,
    pub params: ParamArgs,
}

impl RunSpec {
    pub fn wants(&self, format: Format) -> bool {
        self.formats.contains(&format)
    }

    pub fn resolve(args: SpecArgs) -> CliResult<Self> {
        let file = match &args.config {
            Some(path) => FileSpec::load(path)?,
            None => FileSpec::default(),
        };
        Self::merge(args, file)
    }

    pub fn merge(args: SpecArgs, file: FileSpec) -> CliResult<Self> {
        let preset = args.preset.or(file.preset).unwrap_or(Preset::Default);
        let network = args.network.or(file.network).apply(preset.network());
        network.validate().map_err(CliError::from_core)?;

        let params = args.params.or(file.params);
        let names = non_empty(args.protocols)
            .or(file.protocols)
            .unwrap_or_default();
        if names.is_empty() {
            return Err(CliError::config(
                "protocol",
                "at least one protocol is required",
            ));
        }
        let mut protocols = Vec::with_capacity(names.len());
        for name in &names {
            let protocol = params.protocol(name)?;
            if protocols
                .iter()
                .any(|p: &Protocol| p.name() == protocol.name())
            {
                return Err(CliError::config(
                    "protocol",
                    format!("`{name}` listed twice"),
                ));
            }
            protocol
                .validate(&network)
                .map_err(|e| CliError::from_protocol(protocol.name(), e))?;
            protocols.push(protocol);
        }

        let seeds = non_empty(args.seeds)
            .or(file.seeds)
            .unwrap_or_else(|| vec![0]);
        if seeds.is_empty() {
            return Err(CliError::config("seed", "at least one seed is required"));
        }
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(CliError::config("seed", "seeds must be distinct"));
        }

        let max_rounds = args
            .max_rounds
            .or(file.max_rounds)
            .unwrap_or(DEFAULT_MAX_ROUNDS);
        if max_rounds == 0 {
            return Err(CliError::config("max_rounds", "must be >= 1"));
        }
        let thin = args.thin.or(file.thin).unwrap_or(1);
        if thin == 0 {
            return Err(CliError::config("thin", "must be >= 1"));
        }
        let jobs = args.jobs.or(file.jobs);
        if jobs == Some(0) {
            return Err(CliError::config("jobs", "must be >= 1"));
        }
        let mut formats = non_empty(args.formats)
            .or(file.formats)
            .unwrap_or_else(|| vec![Format::Csv, Format::Json]);
        formats.sort_unstable();
        formats.dedup();
        if formats.is_empty() {
            return Err(CliError::config(
                "format",
                "at least one format is required",
            ));
        }

        Ok(RunSpec {
            network,
            protocols,
            seeds,
            max_rounds,
            thin,
            out: args
                .out
                .or(file.out)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR)),
            formats,
            jobs,
            params,
        })
    }
}

fn non_empty<T>(v: Vec<T>) -> Option<Vec<T>> {
    if v.is_empty() {
        None
    } else {
        Some(v)
    }
}

/// Sweep request: the shared flags plus the cluster-count grid.
#[derive(Debug, Clone, Default, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Cluster counts, as `10,20,30` or `10..100:10`.
    #[arg(long)]
    pub grid: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub run: RunSpec,
    pub grid: Vec<usize>,
}

impl SweepSpec {
    pub fn resolve(args: SweepArgs) -> CliResult<Self> {
        let mut spec = args.spec;
        let file = match &spec.config {
            Some(path) => FileSpec::load(path)?,
            None => FileSpec::default(),
        };
        let grid = match args.grid {
            Some(text) => parse_grid(&text)?,
            None => match &file.grid {
                Some(g) => g.values()?,
                None => return Err(CliError::config("grid", "a cluster-count grid is required")),
            },
        };
        if grid.is_empty() {
            return Err(CliError::config(
                "grid",
                "at least one cluster count is required",
            ));
        }
        if spec.protocols.is_empty() && file.protocols.is_none() {
            spec.protocols = vec!["kmeans".into(), "fuzzy".into()];
        }
        let run = RunSpec::merge(spec, file)?;
        if let Some(&k) = grid.iter().find(|&&k| k == 0 || k > run.network.n_nodes) {
            return Err(CliError::config(
                "grid",
                format!(
                    "cluster count {k} outside 1..={} (n_nodes)",
                    run.network.n_nodes
                ),
            ));
        }
        Ok(SweepSpec { run, grid })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        assert_eq!(
            parse_grid("10..100:10").unwrap(),
            (1..=10).map(|i| i * 10).collect::<Vec<_>>()
        );
        assert_eq!(parse_grid("3, 5,7").unwrap(), vec![3, 5, 7]);
        assert_eq!(parse_grid("4..6").unwrap(), vec![4, 5, 6]);
        assert_eq!(parse_grid("7").unwrap(), vec![7]);
        assert!(parse_grid("").unwrap().is_empty());
        assert!(parse_grid("1..9:0").is_err());
        assert!(parse_grid("a,b").is_err());
    }

    #[test]
    fn file_values_and_flag_override() {
        let file = FileSpec::parse(
            "protocols = [\"leach\", \"heed\"]\nseeds = [3, 4]\nn_nodes = 50\nleach_p = 0.1\nbs_y = 150.0\n",
        )
        .unwrap();
        let args = SpecArgs {
            network: NetworkArgs {
                n_nodes: Some(60),
                ..NetworkArgs::default()
            },
            ..SpecArgs::default()
        };
        let spec = RunSpec::merge(args, file).unwrap();
        assert_eq!(spec.network.n_nodes, 60);
        assert_eq!(spec.network.bs, Position::new(50.0, 150.0));
        assert_eq!(spec.seeds, vec![3, 4]);
        assert_eq!(
            spec.protocols[0],
            Protocol::Leach(LeachParams {
                p: 0.1,
                ..LeachParams::default()
            })
        );
        assert_eq!(spec.formats, vec![Format::Csv, Format::Json]);
    }

    #[test]
    fn unknown_file_key_is_rejected() {
        let err = FileSpec::parse("n_node = 5\n").unwrap_err();
        assert!(err.contains("`n_node`"));
        assert!(FileSpec::parse("n_nodes = \"many\"\n").is_err());
    }

    #[test]
    fn preset_geometry() {
        let file = FileSpec::parse("preset = \"table1\"\nprotocols = [\"leach\"]\n").unwrap();
        let spec = RunSpec::merge(SpecArgs::default(), file).unwrap();
        assert_eq!(spec.network.width, 1000.0);
        assert_eq!(spec.network.bs, Position::new(500.0, 200.0));
    }

    #[test]
    fn diagnostics_name_fields() {
        let field = |file: &str| match RunSpec::merge(
            SpecArgs::default(),
            FileSpec::parse(file).unwrap(),
        ) {
            Err(CliError::Config { field, .. }) => field,
            other => panic!("expected config error, got {other:?}"),
        };
        assert_eq!(field("protocols = [\"kmeans\"]\nk = 500\n"), "k");
        assert_eq!(field("protocols = [\"leach\"]\nleach_p = 2.0\n"), "leach_p");
        assert_eq!(field("protocols = [\"fuzzy\"]\nfuzzy_m = 1.0\n"), "fuzzy_m");
        assert_eq!(
            field("protocols = [\"heed\"]\nheed_cluster_radius = -1.0\n"),
            "heed_cluster_radius"
        );
        assert_eq!(field("protocols = [\"leach\"]\nwidth = 0.0\n"), "width");
        assert_eq!(field("protocols = []\n"), "protocol");
        assert_eq!(field("protocols = [\"olsr\"]\n"), "protocol");
        assert_eq!(field("protocols = [\"leach\"]\nseeds = [1, 1]\n"), "seed");
        assert_eq!(field("protocols = [\"leach\"]\nthin = 0\n"), "thin");
    }
}
