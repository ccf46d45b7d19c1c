//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::rngs::mock::StepRng;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use wsnsim::engine::{FuzzyParams, KmeansParams};
use wsnsim::metrics::bs_series;
use wsnsim::model::total_energy;
use wsnsim::partition::{defuzzify, fcm_run, kmeans_run_from, FcmParams};
use wsnsim::protocols::{
    eecs_form_clusters, fuzzy_form_clusters, heed_form_clusters, heed_iteration_bound,
    kmeans_form_clusters, leach_form_clusters, leach_threshold, EecsParams, HeedParams,
    LeachParams,
};
use wsnsim::sweep::{iteration_sweep, SweepTrial};
use wsnsim::{
    deploy_nodes, run_round, run_simulation, ExperimentResult, NetworkConfig, Node, Position,
    Protocol, SimState,
};

const LIFETIME_SEEDS: u64 = 30;
const LIFETIME_MARGIN: f64 = 1.15;
const LIFETIME_BUDGET: Duration = Duration::from_secs(120);
const MAX_ROUNDS: u64 = 100_000;
const SWEEP_GRID: [usize; 10] = [10, 20, 30, 40, 50, 60, 70, 80, 90, 100];
const SWEEP_SEEDS: u64 = 10;
const SWEEP_MIN_CELLS: usize = 7;
const SWEEP_BUDGET: Duration = Duration::from_secs(60);
const HEED_INSTANCES: usize = 1000;
const HEED_BOUND: usize = 15;
const PROPERTY_CASES: usize = 1000;
const ROW_SUM_TOL: f64 = 1e-9;
const CONSERVATION_TOL: f64 = 1e-9;
const ORACLE_INSTANCES: usize = 1000;
const ORACLE_TOL: f64 = 1e-6;

struct Verdict {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
}

fn check(id: u32, name: &'static str, f: impl FnOnce() -> (bool, String)) -> Verdict {
    let start = Instant::now();
    let (pass, detail) = f();
    let v = Verdict {
        id,
        name,
        pass,
        detail,
        elapsed: start.elapsed(),
    };
    println!(
        "criterion {} [{}]: {} ({}; {:.1}s)",
        v.id,
        v.name,
        if v.pass { "PASS" } else { "FAIL" },
        v.detail,
        v.elapsed.as_secs_f64()
    );
    v
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

struct LifetimeRuns {
    by_protocol: BTreeMap<&'static str, Vec<ExperimentResult>>,
    elapsed: Duration,
}

fn lifetime_runs() -> LifetimeRuns {
    let start = Instant::now();
    let jobs: Vec<(&'static str, u64)> = ["leach", "heed", "eecs"]
        .iter()
        .flat_map(|&p| (0..LIFETIME_SEEDS).map(move |s| (p, s)))
        .collect();
    let results: Vec<(&'static str, ExperimentResult)> = jobs
        .par_iter()
        .map(|&(name, seed)| {
            let config = NetworkConfig {
                seed,
                ..NetworkConfig::default()
            };
            let protocol = Protocol::from_name(name).unwrap();
            (
                name,
                run_simulation(&config, &protocol, MAX_ROUNDS).unwrap(),
            )
        })
        .collect();
    let mut by_protocol: BTreeMap<&'static str, Vec<ExperimentResult>> = BTreeMap::new();
    for (name, r) in results {
        by_protocol.entry(name).or_default().push(r);
    }
    LifetimeRuns {
        by_protocol,
        elapsed: start.elapsed(),
    }
}

fn lifetime_ordering(runs: &LifetimeRuns) -> (bool, String) {
    let fd = |name: &str| {
        mean(
            runs.by_protocol[name]
                .iter()
                .map(|r| r.first_death_round.expect("all runs end dead") as f64),
        )
    };
    let (leach, heed, eecs) = (fd("leach"), fd("heed"), fd("eecs"));
    let in_time = runs.elapsed < LIFETIME_BUDGET;
    let pass = eecs > heed && heed > leach && eecs >= LIFETIME_MARGIN * leach && in_time;
    (
        pass,
        format!(
            "mean first death eecs {eecs:.1}, heed {heed:.1}, leach {leach:.1}; need eecs > heed > leach and eecs >= {LIFETIME_MARGIN} x leach = {:.1}; {} seeds ran in {:.1}s of {}s",
            LIFETIME_MARGIN * leach,
            LIFETIME_SEEDS,
            runs.elapsed.as_secs_f64(),
            LIFETIME_BUDGET.as_secs()
        ),
    )
}

fn delivery_ordering(runs: &LifetimeRuns) -> (bool, String) {
    let msgs = |name: &str| {
        mean(
            runs.by_protocol[name]
                .iter()
                .map(|r| r.total_bs_messages as f64),
        )
    };
    let (leach, heed, eecs) = (msgs("leach"), msgs("heed"), msgs("eecs"));
    (
        eecs > heed && heed > leach,
        format!("mean bs messages eecs {eecs:.1}, heed {heed:.1}, leach {leach:.1}; need eecs > heed > leach"),
    )
}

fn plateau_shape(runs: &LifetimeRuns) -> (bool, String) {
    let mut all: Vec<ExperimentResult> = runs.by_protocol.values().flatten().cloned().collect();
    let extra: Vec<ExperimentResult> = (0..3u64)
        .into_par_iter()
        .flat_map_iter(|seed| {
            let config = NetworkConfig {
                seed,
                ..NetworkConfig::default()
            };
            [
                Protocol::Kmeans(KmeansParams::default()),
                Protocol::Fuzzy(FuzzyParams::default()),
            ]
            .into_iter()
            .map(move |p| run_simulation(&config, &p, MAX_ROUNDS).unwrap())
        })
        .collect();
    all.extend(extra);
    let mut bad = 0;
    for r in &all {
        let last = r.last_death_round.expect("all runs end dead");
        let grid: Vec<u64> = (0..=last + 100).collect();
        let series = bs_series(&BTreeMap::from([("x".to_string(), r.clone())]), &grid);
        let col = series.column("x").unwrap();
        let monotone = col.windows(2).all(|w| w[1] >= w[0]);
        let flat = col[last as usize..]
            .iter()
            .all(|&v| v == col[last as usize]);
        let total = col[last as usize] == r.total_bs_messages as f64;
        if !(monotone && flat && total) {
            bad += 1;
        }
    }
    (
        bad == 0,
        format!("{} runs checked, {bad} violations", all.len()),
    )
}

fn iteration_trend() -> (bool, String) {
    let start = Instant::now();
    let nodes = deploy_nodes(&NetworkConfig::default());
    let trials: Vec<SweepTrial<'_>> = (0..SWEEP_SEEDS)
        .map(|seed| SweepTrial {
            nodes: &nodes,
            fcm_seed: seed,
        })
        .collect();
    let cells: Vec<(usize, f64, f64)> = SWEEP_GRID
        .par_iter()
        .map(|&k| {
            let t = iteration_sweep(
                &trials,
                &[k],
                KmeansParams::default().max_iter,
                &FuzzyParams::default(),
            )
            .unwrap();
            (k, t.cells[0].kmeans_mean(), t.cells[0].fuzzy_mean())
        })
        .collect();
    let elapsed = start.elapsed();
    let wins = cells.iter().filter(|c| c.2 <= c.1).count();
    let table: Vec<String> = cells
        .iter()
        .map(|(k, km, fz)| format!("{k}:{fz:.1}/{km:.1}"))
        .collect();
    (
        wins >= SWEEP_MIN_CELLS && elapsed < SWEEP_BUDGET,
        format!(
            "fuzzy <= kmeans in {wins} of {} cells, need >= {SWEEP_MIN_CELLS}; k:fuzzy/kmeans {}; ran in {:.1}s of {}s",
            cells.len(),
            table.join(" "),
            elapsed.as_secs_f64(),
            SWEEP_BUDGET.as_secs()
        ),
    )
}

fn leach_rotation() -> (bool, String) {
    let params = LeachParams::default();
    let epoch = 20u64;
    let mut nodes = deploy_nodes(&NetworkConfig::default());
    let mut served = vec![Vec::new(); nodes.len()];
    let mut forced = StepRng::new(0, 0);
    for round in 0..5 * epoch {
        let set = leach_form_clusters(&nodes, &params, round, &mut forced).unwrap();
        let heads: Vec<usize> = set.heads().collect();
        for n in nodes.iter_mut() {
            if heads.contains(&n.id) {
                n.rounds_since_ch = 0;
                served[n.id].push(round);
            } else {
                n.rounds_since_ch += 1;
            }
        }
    }
    let per_window = (0..5).all(|w| {
        served
            .iter()
            .all(|rounds| rounds.iter().filter(|&&r| r / epoch == w).count() == 1)
    });
    let t19 = leach_threshold(0.05, 19, true);
    (
        per_window && t19 == 1.0,
        format!(
            "every node heads exactly once in each of 5 windows: {per_window}; T(r=19) = {t19}"
        ),
    )
}

fn random_nodes(rng: &mut ChaCha8Rng, max_n: usize) -> Vec<Node> {
    let n = rng.gen_range(1..=max_n);
    let mut nodes: Vec<Node> = (0..n)
        .map(|i| {
            let mut node = Node::new(
                i,
                Position::new(rng.gen_range(0.0..=100.0), rng.gen_range(0.0..=100.0)),
                rng.gen_range(1e-4..=0.5),
            );
            node.rounds_since_ch = rng.gen_range(0..40);
            node
        })
        .collect();
    for node in nodes.iter_mut().skip(1) {
        if rng.gen_bool(0.2) {
            node.consume(1.0);
        }
    }
    nodes
}

fn heed_bound() -> (bool, String) {
    let params = HeedParams::default();
    let bound = heed_iteration_bound(params.p_min);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0;
    let mut violations = 0;
    for _ in 0..HEED_INSTANCES {
        let nodes = random_nodes(&mut rng, 120);
        let out = heed_form_clusters(&nodes, &params, 0.5, &mut rng).unwrap();
        worst = worst.max(out.iterations);
        if out.iterations > HEED_BOUND {
            violations += 1;
        }
    }
    (
        violations == 0 && bound == HEED_BOUND,
        format!("{HEED_INSTANCES} instances, bound {bound}, max iterations {worst}, {violations} violations"),
    )
}

fn property_suite() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let point = |rng: &mut ChaCha8Rng| {
        Position::new(rng.gen_range(-200.0..200.0), rng.gen_range(-200.0..200.0))
    };

    let mut row_violations = 0;
    for _ in 0..PROPERTY_CASES {
        let n = rng.gen_range(1..60);
        let pts: Vec<Position> = (0..n).map(|_| point(&mut rng)).collect();
        let params = FcmParams {
            k: rng.gen_range(1..=n.min(10)),
            m: rng.gen_range(1.2..3.5),
            seed: rng.gen(),
            ..FcmParams::default()
        };
        let out = fcm_run(&pts, &params).unwrap();
        row_violations += out
            .memberships
            .rows()
            .filter(|row| (row.iter().sum::<f64>() - 1.0).abs() > ROW_SUM_TOL)
            .count();
    }

    let mut trace_violations = 0;
    for _ in 0..PROPERTY_CASES {
        let n = rng.gen_range(1..80);
        let pts: Vec<Position> = (0..n).map(|_| point(&mut rng)).collect();
        let k = rng.gen_range(1..=n.min(12));
        let run = kmeans_run_from(&pts, pts[..k].to_vec(), 100).unwrap();
        // equal objectives recomputed from scratch may differ in the last ulp
        if run
            .objective_trace
            .windows(2)
            .any(|w| w[1] > w[0] * (1.0 + 1e-12))
        {
            trace_violations += 1;
        }
    }

    let mut energy_violations = 0;
    let mut rounds_checked = 0;
    for case in 0..PROPERTY_CASES {
        let n = rng.gen_range(1..40);
        let config = NetworkConfig {
            n_nodes: n,
            initial_energy: rng.gen_range(1e-3..0.05),
            seed: rng.gen(),
            ..NetworkConfig::default()
        };
        let protocol = match case % 5 {
            0 => Protocol::Leach(LeachParams::default()),
            1 => Protocol::Heed(HeedParams::default()),
            2 => Protocol::Eecs(EecsParams::default()),
            3 => Protocol::Kmeans(KmeansParams::default()),
            _ => Protocol::Fuzzy(FuzzyParams::default()),
        };
        let mut state = SimState::new(config).unwrap();
        for _ in 0..rng.gen_range(1..30) {
            if state.alive() == 0 {
                break;
            }
            let before = total_energy(&state.nodes);
            let r = run_round(&mut state, &protocol).unwrap();
            let spent = before - total_energy(&state.nodes);
            let booked = r.energy_charged - r.energy_unpaid;
            rounds_checked += 1;
            if (spent - booked).abs() > CONSERVATION_TOL * booked.abs().max(f64::MIN_POSITIVE) {
                energy_violations += 1;
            }
        }
    }

    let mut partition_violations = 0;
    for _ in 0..PROPERTY_CASES {
        let nodes = random_nodes(&mut rng, 80);
        let alive = nodes.iter().filter(|n| n.alive).count();
        let k = rng.gen_range(1..=alive);
        let round = rng.gen_range(0..200);
        let sets = [
            leach_form_clusters(&nodes, &LeachParams::default(), round, &mut rng).unwrap(),
            heed_form_clusters(&nodes, &HeedParams::default(), 0.5, &mut rng)
                .unwrap()
                .clusters,
            eecs_form_clusters(
                &nodes,
                Position::new(50.0, 175.0),
                &EecsParams::default(),
                &mut rng,
            )
            .unwrap(),
            kmeans_form_clusters(&nodes, k, 100).unwrap().0,
            fuzzy_form_clusters(
                &nodes,
                &FcmParams {
                    k,
                    seed: rng.gen(),
                    ..FcmParams::default()
                },
            )
            .unwrap()
            .0,
        ];
        partition_violations += sets.iter().filter(|s| s.validate(&nodes).is_err()).count();
    }

    let total = row_violations + trace_violations + energy_violations + partition_violations;
    (
        total == 0,
        format!(
            "{PROPERTY_CASES} cases each: fcm row sums {row_violations}, kmeans trace {trace_violations}, \
             conservation {energy_violations} over {rounds_checked} rounds, partition {partition_violations} (x5 protocols)"
        ),
    )
}

fn two_group_sse(points: &[Position], labels: &[usize]) -> f64 {
    (0..2)
        .map(|g| {
            let m: Vec<&Position> = points
                .iter()
                .zip(labels)
                .filter(|(_, &l)| l == g)
                .map(|(p, _)| p)
                .collect();
            if m.is_empty() {
                return 0.0;
            }
            let n = m.len() as f64;
            let (cx, cy) = (
                m.iter().map(|p| p.x).sum::<f64>() / n,
                m.iter().map(|p| p.y).sum::<f64>() / n,
            );
            m.iter()
                .map(|p| (p.x - cx).powi(2) + (p.y - cy).powi(2))
                .sum::<f64>()
        })
        .sum()
}

fn brute_force(points: &[Position]) -> (f64, Vec<usize>) {
    let n = points.len();
    let mut best = (f64::INFINITY, Vec::new());
    for mask in 0..(1u32 << (n - 1)) - 1 {
        let labels: Vec<usize> = (0..n)
            .map(|i| {
                if i == 0 {
                    0
                } else {
                    (((mask >> (i - 1)) & 1) ^ 1) as usize
                }
            })
            .collect();
        let sse = two_group_sse(points, &labels);
        if sse < best.0 {
            best = (sse, labels);
        }
    }
    best
}

fn oracle_equivalence() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut km_bad, mut fcm_bad) = (0, 0);
    for _ in 0..ORACLE_INSTANCES {
        let n = rng.gen_range(2..=12);
        let pts: Vec<Position> = (0..n)
            .map(|_| Position::new(rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0)))
            .collect();
        let (best, labels) = brute_force(&pts);
        let tol = ORACLE_TOL * best.max(f64::MIN_POSITIVE);

        let init: Vec<Position> = (0..2)
            .map(|g| {
                let m: Vec<&Position> = pts
                    .iter()
                    .zip(&labels)
                    .filter(|(_, &l)| l == g)
                    .map(|(p, _)| p)
                    .collect();
                let c = m.len() as f64;
                Position::new(
                    m.iter().map(|p| p.x).sum::<f64>() / c,
                    m.iter().map(|p| p.y).sum::<f64>() / c,
                )
            })
            .collect();
        let km = kmeans_run_from(&pts, init, 100).unwrap();
        if !km.converged || (km.objective - best).abs() > tol {
            km_bad += 1;
        }

        let fcm = fcm_run(
            &pts,
            &FcmParams {
                k: 2,
                m: 2.0,
                seed: rng.gen(),
                ..FcmParams::default()
            },
        )
        .unwrap();
        if (two_group_sse(&pts, &defuzzify(&fcm.memberships)) - best).abs() > tol {
            fcm_bad += 1;
        }
    }
    (
        km_bad == 0 && fcm_bad == 0,
        format!(
            "{ORACLE_INSTANCES} uniform instances of 2..=12 points: kmeans mismatches {km_bad}, fuzzy mismatches {fcm_bad}"
        ),
    )
}

type Snapshot = BTreeMap<String, Vec<u8>>;

fn snapshot(dir: &Path) -> Snapshot {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                files.insert(
                    path.strip_prefix(dir).unwrap().display().to_string(),
                    std::fs::read(&path).unwrap(),
                );
            }
        }
    }
    files
}

fn determinism() -> (bool, String) {
    let tmp = tempfile::tempdir().unwrap();
    let commands: [&[&str]; 3] = [
        &[
            "run",
            "--protocol",
            "leach",
            "--protocol",
            "kmeans",
            "--seed",
            "3",
            "--seed",
            "8",
        ],
        &[
            "compare",
            "--protocol",
            "leach",
            "--protocol",
            "heed",
            "--protocol",
            "eecs",
            "--protocol",
            "fuzzy",
            "--seed",
            "1",
            "--seed",
            "2",
            "--thin",
            "10",
        ],
        &["sweep", "--grid", "10..30:10", "--seed", "0", "--seed", "1"],
    ];
    let mut identical = 0;
    let mut files = 0;
    for (i, cmd) in commands.iter().enumerate() {
        let outputs: Vec<(Vec<u8>, Snapshot)> = (0..2)
            .map(|rep| {
                let dir = tmp.path().join(format!("{i}-{rep}"));
                let out = Command::new(env!("CARGO_BIN_EXE_wsnsim"))
                    .args(*cmd)
                    .args(["--out", dir.to_str().unwrap()])
                    .output()
                    .unwrap();
                assert!(
                    out.status.success(),
                    "{cmd:?}: {}",
                    String::from_utf8_lossy(&out.stderr)
                );
                (out.stdout, snapshot(&dir))
            })
            .collect();
        files += outputs[0].1.len();
        if outputs[0] == outputs[1] && !outputs[0].1.is_empty() {
            identical += 1;
        }
    }
    (
        identical == commands.len(),
        format!(
            "{identical} of {} commands byte-identical across repeats ({files} files)",
            commands.len()
        ),
    )
}

fn main() {
    // `cargo test -- --list` and filters are not meaningful here
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let runs = lifetime_runs();
    let verdicts = [
        check(1, "lifetime ordering", || lifetime_ordering(&runs)),
        check(2, "delivery ordering", || delivery_ordering(&runs)),
        check(3, "delivery plateau", || plateau_shape(&runs)),
        check(4, "iteration trend", iteration_trend),
        check(5, "leach rotation", leach_rotation),
        check(6, "heed termination", heed_bound),
        check(7, "numerical properties", property_suite),
        check(8, "oracle equivalence", oracle_equivalence),
        check(9, "determinism", determinism),
    ];
    let failed: Vec<u32> = verdicts.iter().filter(|v| !v.pass).map(|v| v.id).collect();
    println!(
        "acceptance: {} of {} criteria passed",
        verdicts.len() - failed.len(),
        verdicts.len()
    );
    if !failed.is_empty() {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
