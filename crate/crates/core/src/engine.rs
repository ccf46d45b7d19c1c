//! Round engine: cluster setup followed by one steady-state data cycle per
//! round, charged against the radio model.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{
    aggregate_energy, alive_count, deploy_nodes, euclidean_distance, rx_energy, tx_energy,
    NetworkConfig, Node,
};
use crate::partition::FcmParams;
use crate::protocols::{
    eecs_form_clusters, fuzzy_form_clusters, heed_form_clusters, kmeans_form_clusters,
    leach_form_clusters, ClusterSet, EecsParams, HeedParams, LeachParams,
};
use crate::rng::protocol_rng;

/// Fraction of alive nodes used as the cluster count when none is given.
pub const DEFAULT_CH_FRACTION: f64 = 0.05;

/// `ceil(0.05 * alive)`, at least one.
pub fn default_cluster_count(alive: usize) -> usize {
    ((DEFAULT_CH_FRACTION * alive as f64).ceil() as usize).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KmeansParams {
    /// Cluster count; `None` uses [`default_cluster_count`] each round.
    pub k: Option<usize>,
    pub max_iter: usize,
}

impl Default for KmeansParams {
    fn default() -> Self {
        Self {
            k: None,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuzzyParams {
    /// Cluster count; `None` uses [`default_cluster_count`] each round.
    pub k: Option<usize>,
    pub m: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FuzzyParams {
    fn default() -> Self {
        let fcm = FcmParams::default();
        Self {
            k: None,
            m: fcm.m,
            tol: fcm.tol,
            max_iter: fcm.max_iter,
        }
    }
}

/// A cluster-formation strategy with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Protocol {
    Leach(LeachParams),
    Heed(HeedParams),
    Eecs(EecsParams),
    Kmeans(KmeansParams),
    Fuzzy(FuzzyParams),
}

impl Protocol {
    pub fn name(&self) -> &'static str {
        match self {
            Protocol::Leach(_) => "leach",
            Protocol::Heed(_) => "heed",
            Protocol::Eecs(_) => "eecs",
            Protocol::Kmeans(_) => "kmeans",
            Protocol::Fuzzy(_) => "fuzzy",
        }
    }

    /// Default-parameter protocol by name.
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name.to_ascii_lowercase().as_str() {
            "leach" => Protocol::Leach(LeachParams::default()),
            "heed" => Protocol::Heed(HeedParams::default()),
            "eecs" => Protocol::Eecs(EecsParams::default()),
            "kmeans" | "k-means" => Protocol::Kmeans(KmeansParams::default()),
            "fuzzy" | "fcm" => Protocol::Fuzzy(FuzzyParams::default()),
            _ => return None,
        })
    }

    /// Whether formation runs a position clustering with an iteration count.
    pub fn is_centralized(&self) -> bool {
        matches!(self, Protocol::Kmeans(_) | Protocol::Fuzzy(_))
    }

    pub fn validate(&self, config: &NetworkConfig) -> Result<()> {
        let check_k = |k: Option<usize>| match k {
            Some(k) if k == 0 || k > config.n_nodes => Err(invalid(
                "k",
                format!("must be in 1..={} (n_nodes), got {k}", config.n_nodes),
            )),
            _ => Ok(()),
        };
        match self {
            Protocol::Leach(p) => p.validate(),
            Protocol::Heed(p) => p.validate(),
            Protocol::Eecs(p) => p.validate(),
            Protocol::Kmeans(p) => {
                check_k(p.k)?;
                if p.max_iter == 0 {
                    return Err(invalid("max_iter", "must be >= 1"));
                }
                Ok(())
            }
            Protocol::Fuzzy(p) => {
                check_k(p.k)?;
                FcmParams {
                    k: p.k.unwrap_or(1),
                    m: p.m,
                    tol: p.tol,
                    max_iter: p.max_iter,
                    seed: 0,
                }
                .validate()
            }
        }
    }

    /// Forms this round's clusters. Returns the cluster set and the
    /// clustering iteration count (zero for the election protocols).
    fn form(&self, state: &mut SimState) -> Result<(ClusterSet, usize)> {
        let nodes = &state.nodes;
        let alive = alive_count(nodes);
        // a fixed k shrinks with the population once nodes start dying
        let k_for = |k: Option<usize>| k.unwrap_or_else(|| default_cluster_count(alive)).min(alive);
        match self {
            Protocol::Leach(p) => Ok((
                leach_form_clusters(nodes, p, state.round, &mut state.rng)?,
                0,
            )),
            Protocol::Heed(p) => {
                let out =
                    heed_form_clusters(nodes, p, state.config.initial_energy, &mut state.rng)?;
                Ok((out.clusters, 0))
            }
            Protocol::Eecs(p) => Ok((
                eecs_form_clusters(nodes, state.config.bs, p, &mut state.rng)?,
                0,
            )),
            Protocol::Kmeans(p) => kmeans_form_clusters(nodes, k_for(p.k), p.max_iter),
            Protocol::Fuzzy(p) => {
                let fcm = FcmParams {
                    k: k_for(p.k),
                    m: p.m,
                    tol: p.tol,
                    max_iter: p.max_iter,
                    seed: state.rng.gen(),
                };
                fuzzy_form_clusters(nodes, &fcm)
            }
        }
    }
}

/// Mutable state of one simulation run.
#[derive(Debug, Clone)]
pub struct SimState {
    pub config: NetworkConfig,
    pub nodes: Vec<Node>,
    pub round: u64,
    pub bs_messages: u64,
    pub rng: ChaCha8Rng,
}

impl SimState {
    pub fn new(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        let nodes = deploy_nodes(&config);
        Ok(Self::with_nodes(config, nodes))
    }

    /// Starts from an explicit layout. Node ids must equal their index.
    pub fn with_nodes(config: NetworkConfig, nodes: Vec<Node>) -> Self {
        debug_assert!(nodes.iter().enumerate().all(|(i, n)| n.id == i));
        let rng = protocol_rng(config.seed);
        Self {
            config,
            nodes,
            round: 0,
            bs_messages: 0,
            rng,
        }
    }

    pub fn alive(&self) -> usize {
        alive_count(&self.nodes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: u64,
    pub alive_before: usize,
    pub alive_after: usize,
    pub ch_count: usize,
    pub orphan_count: usize,
    pub bs_messages_delivered: u64,
    /// Cumulative base-station messages after this round.
    pub bs_messages_total: u64,
    pub clustering_iterations: usize,
    /// Sum of every cost requested from a node this round.
    pub energy_charged: f64,
    /// Part of `energy_charged` that dying nodes could not pay.
    pub energy_unpaid: f64,
}

#[derive(Default)]
struct Ledger {
    charged: f64,
    unpaid: f64,
}

impl Ledger {
    /// Charges an alive node; returns whether it survived paying.
    fn charge(&mut self, node: &mut Node, cost: f64) -> bool {
        debug_assert!(node.alive);
        let c = node.consume(cost);
        self.charged += cost;
        self.unpaid += c.unpaid;
        !c.exhausted() && node.alive
    }
}

/// Runs one setup + steady-state round.
///
/// Setup: every head broadcasts an advertisement at arena-diagonal range;
/// every alive non-head hears every advertisement; members send a join
/// message to their head, which receives it.
///
/// Steady state: each member sends one data message to its head; the head
/// receives, aggregates its own reading with the received ones and sends one
/// message to the base station. Orphans send straight to the base station,
/// as do members whose head died before taking their data.
/// A node that cannot pay for a step dies and takes no further part in the
/// round; a transmission it could not finish is lost.
pub fn run_round(state: &mut SimState, protocol: &Protocol) -> Result<RoundReport> {
    let alive_before = state.alive();
    if alive_before == 0 {
        return Err(Error::NoAliveNodes);
    }
    let (clusters, iterations) = protocol.form(state)?;
    clusters.validate(&state.nodes)?;

    let radio = state.config.radio;
    let bs = state.config.bs;
    let nodes = &mut state.nodes;
    let mut ledger = Ledger::default();
    let mut delivered = 0_u64;

    // setup: advertisements, heard by every alive non-head
    let advert = tx_energy(&radio, radio.header_bits, state.config.diagonal());
    for c in &clusters.clusters {
        ledger.charge(&mut nodes[c.head], advert);
    }
    let listen = rx_energy(&radio, radio.header_bits) * clusters.clusters.len() as f64;
    if listen > 0.0 {
        let listeners = clusters
            .clusters
            .iter()
            .flat_map(|c| c.members.iter())
            .chain(&clusters.orphans);
        for &id in listeners {
            if nodes[id].alive {
                ledger.charge(&mut nodes[id], listen);
            }
        }
    }

    // members whose head dies before taking their data report directly
    let mut stranded: Vec<usize> = Vec::new();

    for c in &clusters.clusters {
        let head = c.head;
        let mut joined = Vec::with_capacity(c.members.len());
        for &m in &c.members {
            if !nodes[m].alive {
                continue;
            }
            if !nodes[head].alive {
                stranded.push(m);
                continue;
            }
            let d = euclidean_distance(nodes[m].pos, nodes[head].pos);
            if ledger.charge(&mut nodes[m], tx_energy(&radio, radio.header_bits, d)) {
                if ledger.charge(&mut nodes[head], rx_energy(&radio, radio.header_bits)) {
                    joined.push((m, d));
                } else {
                    stranded.push(m);
                }
            }
        }
        let mut received = 0_usize;
        for &(m, d) in &joined {
            if !nodes[m].alive {
                continue;
            }
            if !nodes[head].alive {
                stranded.push(m);
                continue;
            }
            if ledger.charge(&mut nodes[m], tx_energy(&radio, radio.data_bits, d))
                && ledger.charge(&mut nodes[head], rx_energy(&radio, radio.data_bits))
            {
                received += 1;
            }
        }
        if !nodes[head].alive {
            continue;
        }
        let to_bs = euclidean_distance(nodes[head].pos, bs);
        if ledger.charge(
            &mut nodes[head],
            aggregate_energy(&radio, radio.data_bits, received + 1),
        ) && ledger.charge(&mut nodes[head], tx_energy(&radio, radio.data_bits, to_bs))
        {
            delivered += 1;
        }
    }
    for &o in clusters.orphans.iter().chain(&stranded) {
        if !nodes[o].alive {
            continue;
        }
        let to_bs = euclidean_distance(nodes[o].pos, bs);
        if ledger.charge(&mut nodes[o], tx_energy(&radio, radio.data_bits, to_bs)) {
            delivered += 1;
        }
    }

    let mut is_head = vec![false; nodes.len()];
    for h in clusters.heads() {
        is_head[h] = true;
    }
    for (node, head) in nodes.iter_mut().zip(is_head) {
        if head {
            node.rounds_since_ch = 0;
        } else {
            node.rounds_since_ch += 1;
        }
    }

    state.bs_messages += delivered;
    let report = RoundReport {
        round: state.round,
        alive_before,
        alive_after: state.alive(),
        ch_count: clusters.clusters.len(),
        orphan_count: clusters.orphans.len(),
        bs_messages_delivered: delivered,
        bs_messages_total: state.bs_messages,
        clustering_iterations: iterations,
        energy_charged: ledger.charged,
        energy_unpaid: ledger.unpaid,
    };
    state.round += 1;
    Ok(report)
}

/// Outcome of a full run, with the configuration and protocol echoed back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: NetworkConfig,
    pub protocol: Protocol,
    pub max_rounds: u64,
    pub reports: Vec<RoundReport>,
    /// Round during which the alive count first dropped below `n_nodes`.
    pub first_death_round: Option<u64>,
    /// Round during which the last node died.
    pub last_death_round: Option<u64>,
    pub total_bs_messages: u64,
}

impl ExperimentResult {
    pub fn protocol_name(&self) -> &'static str {
        self.protocol.name()
    }

    /// Mean clustering iterations per round, for centralized protocols.
    pub fn mean_iterations(&self) -> Option<f64> {
        if !self.protocol.is_centralized() || self.reports.is_empty() {
            return None;
        }
        let total: usize = self.reports.iter().map(|r| r.clustering_iterations).sum();
        Some(total as f64 / self.reports.len() as f64)
    }
}

/// Deploys the network and runs rounds until every node is dead or
/// `max_rounds` rounds have run.
pub fn run_simulation(
    config: &NetworkConfig,
    protocol: &Protocol,
    max_rounds: u64,
) -> Result<ExperimentResult> {
    protocol.validate(config)?;
    let state = SimState::new(config.clone())?;
    run_from_state(state, protocol, max_rounds)
}

/// Like [`run_simulation`] but over an explicit initial state.
pub fn run_from_state(
    mut state: SimState,
    protocol: &Protocol,
    max_rounds: u64,
) -> Result<ExperimentResult> {
    let n_nodes = state.nodes.len();
    let mut reports = Vec::new();
    let mut first_death_round = None;
    let mut last_death_round = None;
    while state.round < max_rounds && state.alive() > 0 {
        let report = run_round(&mut state, protocol)?;
        if first_death_round.is_none() && report.alive_after < n_nodes {
            first_death_round = Some(report.round);
        }
        if report.alive_after == 0 {
            last_death_round = Some(report.round);
        }
        reports.push(report);
    }
    Ok(ExperimentResult {
        config: state.config,
        protocol: *protocol,
        max_rounds,
        reports,
        first_death_round,
        last_death_round,
        total_bs_messages: state.bs_messages,
    })
}

/// Seconds elapsed at the start of `round`.
pub fn time_of(round: u64, seconds_per_round: f64) -> f64 {
    round as f64 * seconds_per_round
}
