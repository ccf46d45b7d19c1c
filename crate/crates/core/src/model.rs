//! Nodes, deployment geometry and the first-order radio energy model.
//!
//! Every protocol and the round engine charge energy through the functions in
//! this module, so the cost of a transmission is defined in exactly one place:
//!
//! * transmit: `e_elec * bits + e_amp * bits * d^2`
//! * receive: `e_elec * bits`
//! * aggregate: `e_da * bits * signals`

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng;

/// A point in the deployment plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance_to(&self, other: &Position) -> f64 {
        euclidean_distance(*self, *other)
    }
}

/// Straight-line distance between two positions.
pub fn euclidean_distance(a: Position, b: Position) -> f64 {
    squared_distance(a, b).sqrt()
}

pub fn squared_distance(a: Position, b: Position) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    dx * dx + dy * dy
}

/// A sensor node.
///
/// `rounds_since_ch` counts completed rounds since the node last served as a
/// cluster head (or since deployment). LEACH derives election eligibility
/// from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    pub pos: Position,
    pub energy: f64,
    pub alive: bool,
    pub rounds_since_ch: u64,
}

/// Outcome of charging a node: how much was actually debited and how much of
/// the requested cost could not be paid because the battery ran out.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Charge {
    pub paid: f64,
    pub unpaid: f64,
}

impl Charge {
    /// The node exhausted its battery while paying; whatever it was doing failed.
    pub fn exhausted(&self) -> bool {
        self.unpaid > 0.0
    }
}

impl Node {
    pub fn new(id: usize, pos: Position, energy: f64) -> Self {
        Self {
            id,
            pos,
            energy,
            alive: energy > 0.0,
            rounds_since_ch: 0,
        }
    }

    /// Debits `cost` joules, clamping at zero. A node whose energy reaches
    /// zero is dead for good.
    pub fn consume(&mut self, cost: f64) -> Charge {
        debug_assert!(cost >= 0.0, "negative cost {cost}");
        let paid = cost.min(self.energy);
        self.energy = (self.energy - cost).max(0.0);
        self.alive = self.energy > 0.0;
        Charge {
            paid,
            unpaid: cost - paid,
        }
    }

    pub fn distance_to(&self, other: &Node) -> f64 {
        euclidean_distance(self.pos, other.pos)
    }
}

/// First-order radio model constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioModel {
    /// Electronics energy, J/bit, paid on both transmit and receive.
    pub e_elec: f64,
    /// Amplifier energy, J/bit/m^2.
    pub e_amp: f64,
    /// Aggregation energy, J/bit per input signal.
    pub e_da: f64,
    pub data_bits: u64,
    pub header_bits: u64,
}

impl Default for RadioModel {
    fn default() -> Self {
        Self {
            e_elec: 50e-9,
            e_amp: 100e-12,
            e_da: 5e-9,
            data_bits: 4000,
            header_bits: 200,
        }
    }
}

impl RadioModel {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("e_elec", self.e_elec),
            ("e_amp", self.e_amp),
            ("e_da", self.e_da),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(field, format!("must be finite and >= 0, got {v}")));
            }
        }
        if self.header_bits == 0 {
            return Err(invalid("header_bits", "must be > 0"));
        }
        if self.data_bits <= self.header_bits {
            return Err(invalid(
                "data_bits",
                format!(
                    "must exceed header_bits ({}), got {}",
                    self.header_bits, self.data_bits
                ),
            ));
        }
        Ok(())
    }
}

pub fn tx_energy(radio: &RadioModel, bits: u64, distance: f64) -> f64 {
    let bits = bits as f64;
    radio.e_elec * bits + radio.e_amp * bits * distance * distance
}

pub fn rx_energy(radio: &RadioModel, bits: u64) -> f64 {
    radio.e_elec * bits as f64
}

pub fn aggregate_energy(radio: &RadioModel, bits: u64, signals: usize) -> f64 {
    radio.e_da * bits as f64 * signals as f64
}

/// Network scenario: deployment arena, base station, batteries and radio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub n_nodes: usize,
    pub width: f64,
    pub height: f64,
    /// Base station location; may lie outside the arena.
    pub bs: Position,
    pub initial_energy: f64,
    pub radio: RadioModel,
    pub seed: u64,
    /// Wall-clock seconds represented by one round, for time-axis reporting.
    pub seconds_per_round: f64,
}

impl Default for NetworkConfig {
    /// 100 nodes in a 100 m x 100 m field, base station at (50, 175).
    fn default() -> Self {
        Self {
            n_nodes: 100,
            width: 100.0,
            height: 100.0,
            bs: Position::new(50.0, 175.0),
            initial_energy: 0.5,
            radio: RadioModel::default(),
            seed: 0,
            seconds_per_round: 1.0,
        }
    }
}

impl NetworkConfig {
    /// The 1000 m x 1000 m geometry with the base station at (500, 200).
    pub fn table1_preset() -> Self {
        Self {
            width: 1000.0,
            height: 1000.0,
            bs: Position::new(500.0, 200.0),
            ..Self::default()
        }
    }

    pub fn diagonal(&self) -> f64 {
        self.width.hypot(self.height)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_nodes == 0 {
            return Err(invalid("n_nodes", "must be >= 1"));
        }
        if !(self.width.is_finite() && self.width > 0.0) {
            return Err(invalid("width", format!("must be > 0, got {}", self.width)));
        }
        if !(self.height.is_finite() && self.height > 0.0) {
            return Err(invalid(
                "height",
                format!("must be > 0, got {}", self.height),
            ));
        }
        if !self.bs.is_finite() {
            return Err(invalid("bs", "coordinates must be finite"));
        }
        if !(self.initial_energy.is_finite() && self.initial_energy > 0.0) {
            return Err(invalid(
                "initial_energy",
                format!("must be > 0, got {}", self.initial_energy),
            ));
        }
        if !(self.seconds_per_round.is_finite() && self.seconds_per_round > 0.0) {
            return Err(invalid(
                "seconds_per_round",
                format!("must be > 0, got {}", self.seconds_per_round),
            ));
        }
        self.radio.validate()
    }
}

/// Places `n_nodes` nodes uniformly at random over the arena. The layout is a
/// pure function of `config.seed`.
pub fn deploy_nodes(config: &NetworkConfig) -> Vec<Node> {
    let mut rng: ChaCha8Rng = rng::deployment_rng(config.seed);
    (0..config.n_nodes)
        .map(|id| {
            let pos = Position::new(
                rng.gen_range(0.0..=config.width),
                rng.gen_range(0.0..=config.height),
            );
            Node::new(id, pos, config.initial_energy)
        })
        .collect()
}

pub fn alive_count(nodes: &[Node]) -> usize {
    nodes.iter().filter(|n| n.alive).count()
}

pub fn total_energy(nodes: &[Node]) -> f64 {
    nodes.iter().map(|n| n.energy).sum()
}
