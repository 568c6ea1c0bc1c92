//! Pairwise Hamming distances between two sets of binary vectors, computed by
//! one simulated circuit.
//!
//! Register layout for dimension `n`: the input register `X` on qubits
//! `0..n`, the cluster register `Y` on `n..2n` and the ancilla on qubit `2n`.
//! Bit `a` of a vector is stored on qubit `a` of its register.
//!
//! The circuit has three stages after preparing `X` and `Y` in uniform
//! superpositions of their vectors:
//!
//! * encoding: `CNOT(Y_a -> X_a)` for every bit, leaving `x XOR y` in `X`;
//! * extraction: `H(anc)`, a controlled phase `pi/n` from every `X_a` onto the
//!   ancilla, then `H(anc)`; within the `(x_i, y_j)` subspace the ancilla ends
//!   up with `P(0) = cos^2(pi d / 2n)` and `P(1) = sin^2(pi d / 2n)`;
//! * decoding (optional): the encoding CNOTs again, restoring `x_i` in `X`.
//!
//! The estimator `1 - (a0 + (1 - a1)) / 2` therefore equals
//! `sin^2(pi d / 2n)`, and the integer distance is recovered by inverting it.

use std::collections::{HashMap, HashSet};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::json;
use thiserror::Error;

use crate::format::{round_sig12, sig12};
use crate::qsim::{self, Circuit, Gate, QsimError, StateVector};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HammingError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{set} set is empty")]
    EmptySet { set: &'static str },
    #[error("{set} set contains vector {vector} more than once")]
    DuplicateVector { set: &'static str, vector: String },
    #[error("dimension {dimension} needs {required} qubits, simulator supports {}", qsim::MAX_QUBITS)]
    QubitBudget { dimension: usize, required: usize },
    #[error("invalid bit string {0:?}")]
    InvalidBits(String),
    #[error("binary vectors must have at least one bit")]
    ZeroDimension,
    #[error(transparent)]
    Simulator(#[from] QsimError),
}

pub type Result<T> = std::result::Result<T, HammingError>;

/// Fixed-length bit string. Bit 0 is printed first.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BinaryVector {
    words: Vec<u64>,
    len: usize,
}

impl BinaryVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            v.set(i, b);
        }
        v
    }

    /// Inverse of [`BinaryVector::to_index`].
    pub fn from_index(index: usize, len: usize) -> Self {
        let mut v = Self::zeros(len);
        for i in 0..len.min(usize::BITS as usize) {
            v.set(i, index >> i & 1 == 1);
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        let b = self.get(i);
        self.set(i, !b);
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|i| self.get(i))
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    /// Basis-state index of this vector on a register whose qubit `a` holds
    /// bit `a`.
    pub fn to_index(&self) -> usize {
        assert!(self.len < usize::BITS as usize, "vector too long for a basis index");
        self.words.first().copied().unwrap_or(0) as usize
    }

    /// Lowest index where `self` and `other` differ.
    pub fn first_mismatch(&self, other: &Self) -> Option<usize> {
        self.words
            .iter()
            .zip(&other.words)
            .enumerate()
            .find(|(_, (a, b))| a != b)
            .map(|(w, (a, b))| w * 64 + (a ^ b).trailing_zeros() as usize)
    }
}

impl fmt::Display for BinaryVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BinaryVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinaryVector({self})")
    }
}

impl FromStr for BinaryVector {
    type Err = HammingError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(HammingError::ZeroDimension);
        }
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(HammingError::InvalidBits(s.to_string())),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_bits(&bits))
    }
}

impl Serialize for BinaryVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BinaryVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Number of positions where `x` and `y` differ.
pub fn classical_hamming(x: &BinaryVector, y: &BinaryVector) -> Result<u32> {
    if x.len != y.len {
        return Err(HammingError::DimensionMismatch { expected: x.len, found: y.len });
    }
    Ok(x.words.iter().zip(&y.words).map(|(a, b)| (a ^ b).count_ones()).sum())
}

/// `sin^2(pi d / 2n)`, the noiseless value of the estimator.
pub fn closed_form_distance(distance: u32, dimension: usize) -> f64 {
    (PI * distance as f64 / (2.0 * dimension as f64)).sin().powi(2)
}

/// Inverts [`closed_form_distance`], rounding to the nearest level.
pub fn recover_integer_distance(normalized: f64, dimension: usize) -> u32 {
    let theta = normalized.clamp(0.0, 1.0).sqrt().asin();
    let d = (2.0 * dimension as f64 / PI * theta).round();
    (d as u32).min(dimension as u32)
}

/// Ancilla statistics and derived distance for one (input, cluster) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistanceEstimate {
    /// `1 - (a0 + (1 - a1)) / 2`, in `[0, 1]`.
    pub normalized: f64,
    pub integer_distance: u32,
    /// Conditional probability of ancilla outcome 0 within the pair's subspace.
    pub a0: f64,
    /// Conditional probability of ancilla outcome 1.
    pub a1: f64,
    /// Shots that landed in the pair's subspace; `None` for noiseless modes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hits: Option<u64>,
}

impl DistanceEstimate {
    pub fn from_ancilla(a0: f64, a1: f64, dimension: usize, hits: Option<u64>) -> Self {
        let normalized = (1.0 - 0.5 * (a0 + (1.0 - a1))).clamp(0.0, 1.0);
        Self {
            normalized,
            integer_distance: recover_integer_distance(normalized, dimension),
            a0,
            a1,
            hits,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MatrixMode {
    Classical,
    Exact,
    Sampled { shots: usize, seed: u64 },
}

/// `rows x cols` grid of estimates. A sampled entry whose subspace received
/// no shots is `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    rows: usize,
    cols: usize,
    dimension: usize,
    mode: MatrixMode,
    entries: Vec<Option<DistanceEstimate>>,
}

impl DistanceMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn mode(&self) -> MatrixMode {
        self.mode
    }

    pub fn get(&self, row: usize, col: usize) -> Option<&DistanceEstimate> {
        assert!(row < self.rows && col < self.cols);
        self.entries[row * self.cols + col].as_ref()
    }

    pub fn row(&self, row: usize) -> &[Option<DistanceEstimate>] {
        &self.entries[row * self.cols..(row + 1) * self.cols]
    }

    /// Coordinates of entries with no subspace hits.
    pub fn missing(&self) -> Vec<(usize, usize)> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.is_none())
            .map(|(k, _)| (k / self.cols, k % self.cols))
            .collect()
    }

    pub fn integer_distances(&self) -> Vec<Vec<Option<u32>>> {
        (0..self.rows)
            .map(|r| self.row(r).iter().map(|e| e.map(|e| e.integer_distance)).collect())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut entries = Vec::with_capacity(self.entries.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                entries.push(self.entries[r * self.cols + c]);
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            entries,
            ..*self
        }
    }

    /// Median of the present normalized values.
    pub fn median(&self) -> Option<f64> {
        let mut values: Vec<f64> = self.entries.iter().flatten().map(|e| e.normalized).collect();
        if values.is_empty() {
            return None;
        }
        values.sort_by(f64::total_cmp);
        let mid = values.len() / 2;
        Some(if values.len().is_multiple_of(2) {
            0.5 * (values[mid - 1] + values[mid])
        } else {
            values[mid]
        })
    }

    /// One line per row: `#` below the median, `.` otherwise, `?` missing.
    pub fn render_median_threshold(&self) -> String {
        let median = self.median().unwrap_or(f64::INFINITY);
        let mut out = String::new();
        for r in 0..self.rows {
            for e in self.row(r) {
                out.push(match e {
                    None => '?',
                    Some(e) if e.normalized < median => '#',
                    Some(_) => '.',
                });
            }
            out.push('\n');
        }
        out
    }

    /// `input,0,1,...` header, one row per input, normalized values; missing
    /// entries are written as `NA`.
    pub fn to_csv(&self) -> String {
        self.grid_csv(|e| sig12(e.normalized))
    }

    pub fn integer_csv(&self) -> String {
        self.grid_csv(|e| e.integer_distance.to_string())
    }

    fn grid_csv(&self, cell: impl Fn(&DistanceEstimate) -> String) -> String {
        let mut out = String::from("input");
        for c in 0..self.cols {
            out.push_str(&format!(",{c}"));
        }
        out.push('\n');
        for r in 0..self.rows {
            out.push_str(&r.to_string());
            for e in self.row(r) {
                out.push(',');
                match e {
                    Some(e) => out.push_str(&cell(e)),
                    None => out.push_str("NA"),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let cells: Vec<Vec<serde_json::Value>> = (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .map(|e| match e {
                        None => serde_json::Value::Null,
                        Some(e) => {
                            let mut v = json!({
                                "normalized": round_sig12(e.normalized),
                                "integer_distance": e.integer_distance,
                                "a0": round_sig12(e.a0),
                                "a1": round_sig12(e.a1),
                            });
                            if let Some(h) = e.hits {
                                v["hits"] = json!(h);
                            }
                            v
                        }
                    })
                    .collect()
            })
            .collect();
        json!({
            "rows": self.rows,
            "cols": self.cols,
            "dimension": self.dimension,
            "mode": self.mode,
            "entries": cells,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json_value()).expect("json value");
        s.push('\n');
        s
    }
}

/// Checks the shared dimension and distinctness; returns the dimension.
fn validate_sets(inputs: &[BinaryVector], clusters: &[BinaryVector]) -> Result<usize> {
    let first = inputs.first().ok_or(HammingError::EmptySet { set: "input" })?;
    if clusters.is_empty() {
        return Err(HammingError::EmptySet { set: "cluster" });
    }
    let n = first.len();
    if n == 0 {
        return Err(HammingError::ZeroDimension);
    }
    for (set, vectors) in [("input", inputs), ("cluster", clusters)] {
        let mut seen = HashSet::with_capacity(vectors.len());
        for v in vectors {
            if v.len() != n {
                return Err(HammingError::DimensionMismatch { expected: n, found: v.len() });
            }
            if !seen.insert(v) {
                return Err(HammingError::DuplicateVector { set, vector: v.to_string() });
            }
        }
    }
    Ok(n)
}

/// Closed-form matrix from classical popcounts.
pub fn classical_distance_matrix(
    inputs: &[BinaryVector],
    clusters: &[BinaryVector],
) -> Result<DistanceMatrix> {
    let n = inputs.first().map(|v| v.len()).ok_or(HammingError::EmptySet { set: "input" })?;
    if clusters.is_empty() {
        return Err(HammingError::EmptySet { set: "cluster" });
    }
    if let Some(v) = inputs.iter().chain(clusters).find(|v| v.len() != n) {
        return Err(HammingError::DimensionMismatch { expected: n, found: v.len() });
    }
    let mut entries = Vec::with_capacity(inputs.len() * clusters.len());
    for x in inputs {
        for y in clusters {
            let d = classical_hamming(x, y)?;
            let a1 = closed_form_distance(d, n);
            entries.push(Some(DistanceEstimate {
                normalized: a1,
                integer_distance: d,
                a0: 1.0 - a1,
                a1,
                hits: None,
            }));
        }
    }
    Ok(DistanceMatrix {
        rows: inputs.len(),
        cols: clusters.len(),
        dimension: n,
        mode: MatrixMode::Classical,
        entries,
    })
}

/// A built distance circuit together with the vectors it encodes.
#[derive(Debug, Clone)]
pub struct DistanceCircuit {
    inputs: Vec<BinaryVector>,
    clusters: Vec<BinaryVector>,
    dimension: usize,
    include_decoding: bool,
    circuit: Circuit,
}

/// Prepares `X` and `Y` and appends the encoding, extraction and (optionally)
/// decoding stages.
pub fn build_distance_circuit(
    inputs: &[BinaryVector],
    clusters: &[BinaryVector],
    include_decoding: bool,
) -> Result<DistanceCircuit> {
    let n = validate_sets(inputs, clusters)?;
    let num_qubits = 2 * n + 1;
    if num_qubits > qsim::MAX_QUBITS {
        return Err(HammingError::QubitBudget { dimension: n, required: num_qubits });
    }
    let x_qubits: Vec<usize> = (0..n).collect();
    let y_qubits: Vec<usize> = (n..2 * n).collect();
    let ancilla = 2 * n;
    let phi = PI / n as f64;

    let mut circuit = Circuit::new(num_qubits)?;
    let x_states: Vec<usize> = inputs.iter().map(BinaryVector::to_index).collect();
    let y_states: Vec<usize> = clusters.iter().map(BinaryVector::to_index).collect();
    circuit.prepare(qsim::prepare_uniform_superposition(&x_qubits, &x_states)?)?;
    circuit.prepare(qsim::prepare_uniform_superposition(&y_qubits, &y_states)?)?;

    for a in 0..n {
        circuit.push(Gate::cnot(n + a, a))?;
    }
    circuit.push(Gate::h(ancilla))?;
    for a in 0..n {
        circuit.push(Gate::controlled_phase(a, ancilla, phi))?;
    }
    circuit.push(Gate::h(ancilla))?;
    if include_decoding {
        for a in 0..n {
            circuit.push(Gate::cnot(n + a, a))?;
        }
    }

    Ok(DistanceCircuit {
        inputs: inputs.to_vec(),
        clusters: clusters.to_vec(),
        dimension: n,
        include_decoding,
        circuit,
    })
}

impl DistanceCircuit {
    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn includes_decoding(&self) -> bool {
        self.include_decoding
    }

    pub fn ancilla(&self) -> usize {
        2 * self.dimension
    }

    pub fn run(&self) -> Result<StateVector> {
        Ok(self.circuit.run()?)
    }

    /// Basis index of the `(i, j)` subspace with the ancilla in `|0>`.
    fn subspace_index(&self, i: usize, j: usize) -> usize {
        let x = self.inputs[i].to_index();
        let y = self.clusters[j].to_index();
        let x_reg = if self.include_decoding { x } else { x ^ y };
        x_reg | y << self.dimension
    }

    /// Noiseless estimates read from the final amplitudes.
    pub fn exact(&self) -> Result<DistanceMatrix> {
        let state = self.run()?;
        Ok(self.exact_from_state(&state))
    }

    pub fn exact_from_state(&self, state: &StateVector) -> DistanceMatrix {
        let anc = 1 << self.ancilla();
        let mut entries = Vec::with_capacity(self.inputs.len() * self.clusters.len());
        for i in 0..self.inputs.len() {
            for j in 0..self.clusters.len() {
                let base = self.subspace_index(i, j);
                let p0 = state.amplitude(base).norm_sqr();
                let p1 = state.amplitude(base | anc).norm_sqr();
                let trace = p0 + p1;
                entries.push(Some(DistanceEstimate::from_ancilla(
                    p0 / trace,
                    p1 / trace,
                    self.dimension,
                    None,
                )));
            }
        }
        DistanceMatrix {
            rows: self.inputs.len(),
            cols: self.clusters.len(),
            dimension: self.dimension,
            mode: MatrixMode::Exact,
            entries,
        }
    }

    /// Finite-shot estimates, conditioning ancilla frequencies on the observed
    /// `X` and `Y` readouts.
    pub fn sampled(&self, shots: usize, seed: u64) -> Result<DistanceMatrix> {
        let state = self.run()?;
        self.sampled_from_state(&state, shots, seed)
    }

    pub fn sampled_from_state(
        &self,
        state: &StateVector,
        shots: usize,
        seed: u64,
    ) -> Result<DistanceMatrix> {
        let n = self.dimension;
        let mask = (1usize << n) - 1;
        let row_of: HashMap<usize, usize> =
            self.inputs.iter().enumerate().map(|(i, v)| (v.to_index(), i)).collect();
        let col_of: HashMap<usize, usize> =
            self.clusters.iter().enumerate().map(|(j, v)| (v.to_index(), j)).collect();

        let cols = self.clusters.len();
        let mut counts = vec![[0u64; 2]; self.inputs.len() * cols];
        for shot in state.sample(shots, seed)? {
            let idx = shot.index();
            let y = idx >> n & mask;
            let x = if self.include_decoding { idx & mask } else { (idx & mask) ^ y };
            let anc = idx >> (2 * n) & 1;
            if let (Some(&i), Some(&j)) = (row_of.get(&x), col_of.get(&y)) {
                counts[i * cols + j][anc] += 1;
            }
        }

        let entries = counts
            .iter()
            .map(|&[c0, c1]| {
                let hits = c0 + c1;
                (hits > 0).then(|| {
                    DistanceEstimate::from_ancilla(
                        c0 as f64 / hits as f64,
                        c1 as f64 / hits as f64,
                        n,
                        Some(hits),
                    )
                })
            })
            .collect();
        Ok(DistanceMatrix {
            rows: self.inputs.len(),
            cols,
            dimension: n,
            mode: MatrixMode::Sampled { shots, seed },
            entries,
        })
    }
}

/// Exact matrix from the full encode/extract/decode circuit.
pub fn exact_distance_matrix(
    inputs: &[BinaryVector],
    clusters: &[BinaryVector],
) -> Result<DistanceMatrix> {
    build_distance_circuit(inputs, clusters, true)?.exact()
}

pub fn sampled_distance_matrix(
    inputs: &[BinaryVector],
    clusters: &[BinaryVector],
    shots: usize,
    seed: u64,
) -> Result<DistanceMatrix> {
    build_distance_circuit(inputs, clusters, true)?.sampled(shots, seed)
}
