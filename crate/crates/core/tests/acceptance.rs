//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::collections::HashMap;
use std::f64::consts::PI;
use std::time::Instant;

use common::{naive_hamming, random_distinct, rng};
use hamming_som::hamming::{build_distance_circuit, exact_distance_matrix, BinaryVector};
use hamming_som::qsim::GateKind;
use hamming_som::sofm::{train, Backend, BinaryMap, ClusterInit, TrainConfig, Training};
use hamming_som::textvec::{build_vocabulary, vectorize, Corpus, VocabularyParams};
use rand::Rng;

const DEFAULT_SEED: u64 = TrainConfig::DEFAULT_SEED;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// Exact estimator against `sin^2(pi d / 2n)` for every dimension and level.
fn closed_form_law() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 1..=9usize {
        let origin = BinaryVector::zeros(n);
        let levels: Vec<BinaryVector> = (0..=n)
            .map(|d| BinaryVector::from_bits(&(0..n).map(|a| a < d).collect::<Vec<_>>()))
            .collect();
        let m = exact_distance_matrix(std::slice::from_ref(&origin), &levels).unwrap();
        for d in 0..=n {
            let e = m.get(0, d).unwrap();
            let theta = PI * d as f64 / (2 * n) as f64;
            let sin2 = theta.sin().powi(2);
            let cos2 = theta.cos().powi(2);
            worst = worst
                .max((e.normalized - sin2).abs())
                .max((e.a0 - cos2).abs())
                .max((e.a1 - sin2).abs());
        }
    }
    outcome(worst <= 1e-10, format!("max deviation {worst:.2e} over n=1..9, d=0..n (tol 1e-10)"))
}

/// Full circuit on random set pairs against the popcount oracle.
fn oracle_equivalence() -> Outcome {
    let mut r = rng(0xACCE);
    let mut mismatches = 0;
    let mut entries = 0;
    let mut max_qubits = 0;
    for _ in 0..100 {
        let n = r.random_range(2..=9usize);
        let nx = r.random_range(1..=4usize);
        let ny = r.random_range(1..=4usize);
        let x = random_distinct(nx, n, &mut r);
        let y = random_distinct(ny, n, &mut r);
        let circuit = build_distance_circuit(&x, &y, true).unwrap();
        max_qubits = max_qubits.max(circuit.circuit().num_qubits());
        let m = circuit.exact().unwrap();
        for (i, xi) in x.iter().enumerate() {
            for (j, yj) in y.iter().enumerate() {
                entries += 1;
                if m.get(i, j).map(|e| e.integer_distance) != Some(naive_hamming(xi, yj)) {
                    mismatches += 1;
                }
            }
        }
    }
    outcome(
        mismatches == 0,
        format!("{mismatches} mismatches in {entries} entries over 100 set pairs (up to {max_qubits} qubits)"),
    )
}

/// Ancilla distribution with and without the decoding stage.
fn decoding_neutrality() -> Outcome {
    let mut r = rng(0xDEC0);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = r.random_range(1..=9usize);
        let cap = if n == 1 { 2 } else { 4 };
        let x = random_distinct(r.random_range(1..=cap), n, &mut r);
        let y = random_distinct(r.random_range(1..=cap), n, &mut r);
        let with = build_distance_circuit(&x, &y, true).unwrap();
        let without = build_distance_circuit(&x, &y, false).unwrap();
        let sa = with.run().unwrap();
        let sb = without.run().unwrap();
        let a = sa.exact_probabilities(&[with.ancilla()]).unwrap();
        let b = sb.exact_probabilities(&[without.ancilla()]).unwrap();
        worst = worst.max((a[0] - b[0]).abs()).max((a[1] - b[1]).abs());
        let ma = with.exact_from_state(&sa);
        let mb = without.exact_from_state(&sb);
        for i in 0..x.len() {
            for j in 0..y.len() {
                let (ea, eb) = (ma.get(i, j).unwrap(), mb.get(i, j).unwrap());
                worst = worst.max((ea.a0 - eb.a0).abs()).max((ea.a1 - eb.a1).abs());
            }
        }
    }
    outcome(worst <= 1e-12, format!("max ancilla difference {worst:.2e} over 50 set pairs (tol 1e-12)"))
}

/// 8192-shot recovery on 9-bit 3x3 sets.
fn shot_noise() -> Outcome {
    let trials = 200;
    let mut correct_trials = 0;
    let mut non_adjacent = 0;
    let mut wrong_entries = 0;
    for t in 0..trials {
        let mut r = rng(10_000 + t);
        let x = random_distinct(3, 9, &mut r);
        let y = random_distinct(3, 9, &mut r);
        let m = build_distance_circuit(&x, &y, true).unwrap().sampled(8192, t).unwrap();
        let mut ok = true;
        for i in 0..3 {
            for j in 0..3 {
                let truth = naive_hamming(&x[i], &y[j]);
                match m.get(i, j) {
                    Some(e) if e.integer_distance == truth => {}
                    Some(e) => {
                        ok = false;
                        wrong_entries += 1;
                        if e.integer_distance.abs_diff(truth) > 1 {
                            non_adjacent += 1;
                        }
                    }
                    None => {
                        ok = false;
                        wrong_entries += 1;
                        non_adjacent += 1;
                    }
                }
            }
        }
        if ok {
            correct_trials += 1;
        }
    }
    let rate = correct_trials as f64 / trials as f64;
    outcome(
        rate >= 0.99 && non_adjacent == 0,
        format!(
            "{correct_trials}/{trials} trials fully recovered ({:.1}%, need >= 99%), {wrong_entries} wrong entries, {non_adjacent} beyond adjacent level",
            rate * 100.0
        ),
    )
}

struct CorpusData {
    samples: Vec<BinaryVector>,
    tags: Vec<String>,
}

fn sample_corpus() -> CorpusData {
    let corpus = Corpus::sample();
    let vocab = build_vocabulary(&corpus, &VocabularyParams::default()).unwrap();
    let vectors = vectorize(&corpus, &vocab);
    CorpusData {
        samples: vectors.iter().map(|v| v.bits.clone()).collect(),
        tags: vectors.iter().map(|v| v.tag.clone().unwrap()).collect(),
    }
}

fn train_corpus(data: &CorpusData, seed: u64, backend: Backend) -> Training {
    let map = BinaryMap::initialize(ClusterInit::Samples, 3, &data.samples, seed).unwrap();
    let config = TrainConfig { epochs: 10, seed, backend, ..Default::default() };
    train(map, &data.samples, &config).unwrap()
}

/// Fraction of samples whose cluster's majority tag equals their own tag.
fn purity(labels: &[usize], tags: &[String]) -> f64 {
    let mut votes: HashMap<usize, HashMap<&str, usize>> = HashMap::new();
    for (l, t) in labels.iter().zip(tags) {
        *votes.entry(*l).or_default().entry(t.as_str()).or_default() += 1;
    }
    let agreeing: usize = votes.values().map(|v| v.values().max().copied().unwrap_or(0)).sum();
    agreeing as f64 / labels.len() as f64
}

/// Training on the bundled corpus with three clusters.
fn corpus_training() -> Outcome {
    let data = sample_corpus();
    let default = train_corpus(&data, DEFAULT_SEED, Backend::QuantumExact);
    let default_purity = purity(default.final_labels(), &data.tags);
    let default_ok = default.converged_at.is_some() && default_purity == 1.0;

    let seeds = 50u64;
    let mut pure = 0;
    let mut fast = 0;
    for seed in 0..seeds {
        let t = train_corpus(&data, seed, Backend::QuantumExact);
        let p = purity(t.final_labels(), &data.tags);
        if let (Some(epoch), true) = (t.converged_at, p == 1.0) {
            pure += 1;
            if epoch <= 4 {
                fast += 1;
            }
        }
    }
    let majority = 2 * fast > seeds;
    outcome(
        default_ok && majority,
        format!(
            "default seed {DEFAULT_SEED}: converged at epoch {:?}, purity {default_purity}; seeds 0..{seeds}: {pure} reach purity 1.0 within 10 epochs, {fast} of those within 4 (need majority)",
            default.converged_at
        ),
    )
}

/// Per-epoch distance evaluation counts for N=9, M=3.
fn complexity_accounting() -> Outcome {
    let data = sample_corpus();
    let mut notes = Vec::new();
    let mut pass = true;
    for (name, backend, per_epoch) in [
        ("classical", Backend::Classical, 27),
        ("quantum-exact", Backend::QuantumExact, 9),
        ("quantum-sampled", Backend::QuantumSampled { shots: 8192 }, 9),
    ] {
        let t = train_corpus(&data, DEFAULT_SEED, backend);
        let epochs = t.traces.len();
        let each = t.traces.iter().all(|e| e.distance_evaluations == per_epoch);
        let total = t.total_evaluations();
        pass &= each && total == epochs * per_epoch;
        notes.push(format!("{name} {per_epoch}/epoch x {epochs} = {total}"));
    }
    outcome(pass, notes.join(", "))
}

/// Classical and exact quantum backends on random datasets.
fn backend_equivalence() -> Outcome {
    let mut r = rng(0xB0B);
    let mut differing = 0;
    for k in 0..50u64 {
        let n = r.random_range(2..=9usize);
        let count = r.random_range(3..=10usize);
        let samples: Vec<BinaryVector> = (0..count)
            .map(|_| BinaryVector::from_bits(&(0..n).map(|_| r.random()).collect::<Vec<bool>>()))
            .collect();
        let m = r.random_range(1..=4usize.min(1 << n));
        let map = BinaryMap::random(m, n, k).unwrap();
        let cfg = |backend| TrainConfig { epochs: 10, seed: k, backend, ..Default::default() };
        let a = train(map.clone(), &samples, &cfg(Backend::Classical)).unwrap();
        let b = train(map, &samples, &cfg(Backend::QuantumExact)).unwrap();
        let ids: Vec<String> = (0..count).map(|i| i.to_string()).collect();
        if a.traces_jsonl() != b.traces_jsonl() || a.labels_csv(&ids) != b.labels_csv(&ids) {
            differing += 1;
        }
    }
    outcome(differing == 0, format!("{differing} of 50 datasets with differing traces"))
}

/// Gate inventory of the distance circuit after preparation.
fn gate_counts() -> Outcome {
    let mut failures = Vec::new();
    for n in 1..=9usize {
        let cap = if n == 1 { 2 } else { 3 };
        let mut r = rng(n as u64);
        let x = random_distinct(cap, n, &mut r);
        let y = random_distinct(cap, n, &mut r);
        for decode in [true, false] {
            let c = build_distance_circuit(&x, &y, decode).unwrap();
            let gates = c.circuit().gates();
            let count = |f: fn(GateKind) -> bool| gates.iter().filter(|g| f(g.kind())).count();
            let cnot = count(|k| k == GateKind::Cnot);
            let phase = count(|k| matches!(k, GateKind::ControlledPhase(_)));
            let hadamard = count(|k| k == GateKind::Hadamard);
            let total_expected = if decode { 3 * n + 2 } else { 2 * n + 2 };
            let cnot_expected = if decode { 2 * n } else { n };
            if gates.len() != total_expected || cnot != cnot_expected || phase != n || hadamard != 2 {
                failures.push(format!(
                    "n={n} decode={decode}: {} gates ({cnot} CNOT, {phase} CP, {hadamard} H)",
                    gates.len()
                ));
            }
        }
    }
    let detail = if failures.is_empty() {
        "3n+2 with decoding, 2n+2 without, for n=1..9".to_string()
    } else {
        failures.join("; ")
    };
    outcome(failures.is_empty(), detail)
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("closed-form law", closed_form_law),
        ("oracle equivalence", oracle_equivalence),
        ("decoding neutrality", decoding_neutrality),
        ("shot noise", shot_noise),
        ("corpus training", corpus_training),
        ("complexity accounting", complexity_accounting),
        ("backend equivalence", backend_equivalence),
        ("gate counts", gate_counts),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "{verdict} criterion {} ({name}): {} [{:.1}s]",
            k + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
        if !o.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
