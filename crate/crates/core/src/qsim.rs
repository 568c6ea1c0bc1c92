//! Dense state-vector simulator.
//!
//! Qubit `q` is bit `q` of the basis-state index, so qubit 0 is the least
//! significant bit. Amplitudes are stored densely, `2^num_qubits` of them.
//! Gate kernels parallelize over amplitude blocks with rayon once the state
//! is large enough; every kernel is element-wise, so results do not depend on
//! the thread count.

use std::collections::HashSet;
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

/// Upper bound on the register size (2^24 amplitudes, 256 MiB).
pub const MAX_QUBITS: usize = 24;

/// States smaller than this are updated on the calling thread.
const PAR_THRESHOLD: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QsimError {
    #[error("{requested} qubits requested, simulator supports at most {MAX_QUBITS}")]
    TooManyQubits { requested: usize },
    #[error("qubit {qubit} out of range for a {num_qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },
    #[error("qubit {0} used more than once")]
    DuplicateQubit(usize),
    #[error("register preparation needs at least one qubit and one basis state")]
    EmptyRegister,
    #[error("basis state {state:#b} does not fit in {width} qubits")]
    BasisStateWidth { state: usize, width: usize },
    #[error("basis state {0:#b} listed more than once")]
    DuplicateBasisState(usize),
    #[error("shots must be at least 1")]
    ZeroShots,
}

pub type Result<T> = std::result::Result<T, QsimError>;

/// Uniform superposition over a set of basis states of one register.
///
/// `basis_states` are register-local: bit `k` of a state is the value of
/// `qubits[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegisterState {
    qubits: Vec<usize>,
    basis_states: Vec<usize>,
}

impl RegisterState {
    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn basis_states(&self) -> &[usize] {
        &self.basis_states
    }

    /// Amplitude carried by each listed basis state, `1/sqrt(K)`.
    pub fn amplitude(&self) -> f64 {
        1.0 / (self.basis_states.len() as f64).sqrt()
    }

    /// Maps a register-local state onto a full basis-state index.
    fn scatter(&self, local: usize) -> usize {
        self.qubits
            .iter()
            .enumerate()
            .filter(|(k, _)| local >> k & 1 == 1)
            .fold(0, |acc, (_, &q)| acc | 1 << q)
    }
}

/// Builds the register fragment `(1/sqrt(K)) * sum_k |s_k>` over `K` distinct
/// basis states.
pub fn prepare_uniform_superposition(
    qubits: &[usize],
    basis_states: &[usize],
) -> Result<RegisterState> {
    if qubits.is_empty() || basis_states.is_empty() {
        return Err(QsimError::EmptyRegister);
    }
    let mut seen = HashSet::with_capacity(qubits.len());
    for &q in qubits {
        if !seen.insert(q) {
            return Err(QsimError::DuplicateQubit(q));
        }
    }
    let width = qubits.len();
    let mut states = HashSet::with_capacity(basis_states.len());
    for &s in basis_states {
        if width < usize::BITS as usize && s >> width != 0 {
            return Err(QsimError::BasisStateWidth { state: s, width });
        }
        if !states.insert(s) {
            return Err(QsimError::DuplicateBasisState(s));
        }
    }
    Ok(RegisterState {
        qubits: qubits.to_vec(),
        basis_states: basis_states.to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateKind {
    PauliX,
    Hadamard,
    Cnot,
    /// `diag(1, 1, 1, e^{-i phi})` on (control, target).
    ControlledPhase(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gate {
    kind: GateKind,
    target: usize,
    control: Option<usize>,
}

impl Gate {
    pub fn x(target: usize) -> Self {
        Self { kind: GateKind::PauliX, target, control: None }
    }

    pub fn h(target: usize) -> Self {
        Self { kind: GateKind::Hadamard, target, control: None }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self { kind: GateKind::Cnot, target, control: Some(control) }
    }

    pub fn controlled_phase(control: usize, target: usize, phi: f64) -> Self {
        Self {
            kind: GateKind::ControlledPhase(phi),
            target,
            control: Some(control),
        }
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn control(&self) -> Option<usize> {
        self.control
    }

    pub fn is_controlled(&self) -> bool {
        self.control.is_some()
    }

    pub fn inverse(&self) -> Self {
        match self.kind {
            GateKind::ControlledPhase(phi) => Self {
                kind: GateKind::ControlledPhase(-phi),
                ..*self
            },
            _ => *self,
        }
    }

    pub fn validate(&self, num_qubits: usize) -> Result<()> {
        let check = |q: usize| {
            if q < num_qubits {
                Ok(())
            } else {
                Err(QsimError::QubitOutOfRange { qubit: q, num_qubits })
            }
        };
        check(self.target)?;
        if let Some(c) = self.control {
            check(c)?;
            if c == self.target {
                return Err(QsimError::DuplicateQubit(c));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.kind, self.control) {
            (GateKind::PauliX, _) => write!(f, "X({})", self.target),
            (GateKind::Hadamard, _) => write!(f, "H({})", self.target),
            (GateKind::Cnot, Some(c)) => write!(f, "CNOT({c}->{})", self.target),
            (GateKind::ControlledPhase(phi), Some(c)) => {
                write!(f, "CP({c},{};{phi})", self.target)
            }
            _ => unreachable!("controlled gate without a control"),
        }
    }
}

/// Register preparation followed by an ordered gate list.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    preparation: Vec<RegisterState>,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Result<Self> {
        if num_qubits > MAX_QUBITS {
            return Err(QsimError::TooManyQubits { requested: num_qubits });
        }
        Ok(Self {
            num_qubits,
            preparation: Vec::new(),
            gates: Vec::new(),
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn prepare(&mut self, register: RegisterState) -> Result<&mut Self> {
        for &q in register.qubits() {
            if q >= self.num_qubits {
                return Err(QsimError::QubitOutOfRange { qubit: q, num_qubits: self.num_qubits });
            }
            if self.preparation.iter().any(|r| r.qubits.contains(&q)) {
                return Err(QsimError::DuplicateQubit(q));
            }
        }
        self.preparation.push(register);
        Ok(self)
    }

    pub fn push(&mut self, gate: Gate) -> Result<&mut Self> {
        gate.validate(self.num_qubits)?;
        self.gates.push(gate);
        Ok(self)
    }

    pub fn preparation(&self) -> &[RegisterState] {
        &self.preparation
    }

    /// Gates applied after preparation.
    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn run(&self) -> Result<StateVector> {
        let mut state = StateVector::from_registers(self.num_qubits, &self.preparation)?;
        for gate in &self.gates {
            state.apply(gate)?;
        }
        Ok(state)
    }
}

/// One shot: the measured basis state of the full register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MeasurementSample {
    index: usize,
    num_qubits: usize,
}

impl MeasurementSample {
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn bit(&self, qubit: usize) -> bool {
        self.index >> qubit & 1 == 1
    }

    /// Bits of `qubits`, packed so that `qubits[k]` lands on bit `k`.
    pub fn extract(&self, qubits: &[usize]) -> usize {
        qubits
            .iter()
            .enumerate()
            .fold(0, |acc, (k, &q)| acc | (self.index >> q & 1) << k)
    }

    /// Qubit 0 first.
    pub fn bitstring(&self) -> String {
        (0..self.num_qubits)
            .map(|q| if self.bit(q) { '1' } else { '0' })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>`.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        if num_qubits > MAX_QUBITS {
            return Err(QsimError::TooManyQubits { requested: num_qubits });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self { num_qubits, amplitudes })
    }

    /// Tensor product of disjoint register fragments; qubits outside every
    /// fragment start in `|0>`.
    pub fn from_registers(num_qubits: usize, registers: &[RegisterState]) -> Result<Self> {
        let mut state = Self::zero(num_qubits)?;
        let mut used = HashSet::new();
        for r in registers {
            for &q in r.qubits() {
                if q >= num_qubits {
                    return Err(QsimError::QubitOutOfRange { qubit: q, num_qubits });
                }
                if !used.insert(q) {
                    return Err(QsimError::DuplicateQubit(q));
                }
            }
        }

        let mut support: Vec<(usize, f64)> = vec![(0, 1.0)];
        for r in registers {
            let amp = r.amplitude();
            support = support
                .iter()
                .flat_map(|&(idx, a)| r.basis_states().iter().map(move |&s| (idx, a, s)))
                .map(|(idx, a, s)| (idx | r.scatter(s), a * amp))
                .collect();
        }
        state.amplitudes[0] = Complex64::new(0.0, 0.0);
        for (idx, a) in support {
            state.amplitudes[idx] = Complex64::new(a, 0.0);
        }
        Ok(state)
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        assert!(len.is_power_of_two(), "amplitude count {len} is not a power of two");
        let num_qubits = len.trailing_zeros() as usize;
        if num_qubits > MAX_QUBITS {
            return Err(QsimError::TooManyQubits { requested: num_qubits });
        }
        Ok(Self { num_qubits, amplitudes })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amplitudes[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.num_qubits)?;
        let t = gate.target;
        match (gate.kind, gate.control) {
            (GateKind::PauliX, _) => for_each_pair(&mut self.amplitudes, t, |_, a, b| {
                std::mem::swap(a, b);
            }),
            (GateKind::Hadamard, _) => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                for_each_pair(&mut self.amplitudes, t, |_, a, b| {
                    let (x, y) = (*a, *b);
                    *a = (x + y) * s;
                    *b = (x - y) * s;
                })
            }
            (GateKind::Cnot, Some(c)) => {
                let cmask = 1 << c;
                for_each_pair(&mut self.amplitudes, t, |i, a, b| {
                    if i & cmask != 0 {
                        std::mem::swap(a, b);
                    }
                })
            }
            (GateKind::ControlledPhase(phi), Some(c)) => {
                let mask = 1 << c | 1 << t;
                let phase = Complex64::from_polar(1.0, -phi);
                let kernel = |(i, a): (usize, &mut Complex64)| {
                    if i & mask == mask {
                        *a *= phase;
                    }
                };
                if self.amplitudes.len() >= PAR_THRESHOLD {
                    self.amplitudes.par_iter_mut().enumerate().for_each(kernel);
                } else {
                    self.amplitudes.iter_mut().enumerate().for_each(kernel);
                }
            }
            _ => unreachable!("controlled gate without a control"),
        }
        Ok(())
    }

    /// Marginal distribution over `qubits`; entry `k` has `qubits[j]` equal to
    /// bit `j` of `k`.
    pub fn exact_probabilities(&self, qubits: &[usize]) -> Result<Vec<f64>> {
        let mut seen = HashSet::new();
        for &q in qubits {
            if q >= self.num_qubits {
                return Err(QsimError::QubitOutOfRange { qubit: q, num_qubits: self.num_qubits });
            }
            if !seen.insert(q) {
                return Err(QsimError::DuplicateQubit(q));
            }
        }
        let mut table = vec![0.0; 1 << qubits.len()];
        for (idx, a) in self.amplitudes.iter().enumerate() {
            let p = a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            let key = qubits
                .iter()
                .enumerate()
                .fold(0, |acc, (k, &q)| acc | (idx >> q & 1) << k);
            table[key] += p;
        }
        Ok(table)
    }

    /// Draws `shots` i.i.d. full-register measurements from `|amplitude|^2`.
    pub fn sample(&self, shots: usize, seed: u64) -> Result<Vec<MeasurementSample>> {
        if shots == 0 {
            return Err(QsimError::ZeroShots);
        }
        let mut cdf = Vec::with_capacity(self.amplitudes.len());
        let mut acc = 0.0;
        for a in &self.amplitudes {
            acc += a.norm_sqr();
            cdf.push(acc);
        }
        let total = acc;
        let last_nonzero = self
            .amplitudes
            .iter()
            .rposition(|a| a.norm_sqr() > 0.0)
            .unwrap_or(0);

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..shots)
            .map(|_| {
                let u = rng.random::<f64>() * total;
                let index = cdf.partition_point(|&c| c <= u).min(last_nonzero);
                MeasurementSample { index, num_qubits: self.num_qubits }
            })
            .collect())
    }
}

/// Visits every amplitude pair `(i, i | 1 << target)` with bit `target` of
/// `i` clear, passing `i` alongside the pair.
fn for_each_pair<F>(amps: &mut [Complex64], target: usize, f: F)
where
    F: Fn(usize, &mut Complex64, &mut Complex64) + Sync + Send,
{
    let stride = 1 << target;
    let block = stride << 1;
    let body = |(k, chunk): (usize, &mut [Complex64])| {
        let (lo, hi) = chunk.split_at_mut(stride);
        let base = k * block;
        for (j, (a, b)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
            f(base + j, a, b);
        }
    };

    if amps.len() < PAR_THRESHOLD {
        amps.chunks_mut(block).enumerate().for_each(body);
    } else if amps.len() / block >= 64 {
        amps.par_chunks_mut(block).enumerate().for_each(body);
    } else {
        // high target qubit: few blocks, so split inside each block instead
        for (k, chunk) in amps.chunks_mut(block).enumerate() {
            let (lo, hi) = chunk.split_at_mut(stride);
            let base = k * block;
            lo.par_iter_mut()
                .zip(hi.par_iter_mut())
                .enumerate()
                .for_each(|(j, (a, b))| f(base + j, a, b));
        }
    }
}
