#![allow(dead_code)]

use hamming_som::BinaryVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Full `2^q x 2^q` operator of a gate, built entry by entry from its
/// definition. Independent of the simulator's pair-iteration kernels.
pub fn dense_operator(q: usize, target: usize, control: Option<usize>, u: [[Complex64; 2]; 2]) -> Vec<Vec<Complex64>> {
    let dim = 1 << q;
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let mut m = vec![vec![zero; dim]; dim];
    for r in 0..dim {
        for c in 0..dim {
            let others_equal = (r ^ c) & !(1 << target) == 0;
            if !others_equal {
                continue;
            }
            let active = control.is_none_or(|k| c >> k & 1 == 1);
            m[r][c] = if active {
                u[r >> target & 1][c >> target & 1]
            } else if r == c {
                one
            } else {
                zero
            };
        }
    }
    m
}

pub fn matvec(m: &[Vec<Complex64>], v: &[Complex64]) -> Vec<Complex64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

pub fn h_matrix() -> [[Complex64; 2]; 2] {
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [[s, s], [s, -s]]
}

pub fn x_matrix() -> [[Complex64; 2]; 2] {
    let z = Complex64::new(0.0, 0.0);
    let o = Complex64::new(1.0, 0.0);
    [[z, o], [o, z]]
}

/// `diag(1, e^{-i phi})` on the target, applied only when the control is set.
pub fn phase_matrix(phi: f64) -> [[Complex64; 2]; 2] {
    let z = Complex64::new(0.0, 0.0);
    let o = Complex64::new(1.0, 0.0);
    [[o, z], [z, Complex64::from_polar(1.0, -phi)]]
}

/// Evolves the distance circuit for one `x` against one `y` by dense matrix
/// products and returns the final state.
pub fn brute_force_distance_state(x: &BinaryVector, y: &BinaryVector, decode: bool) -> Vec<Complex64> {
    let n = x.len();
    let q = 2 * n + 1;
    let anc = 2 * n;
    let mut state = vec![Complex64::new(0.0, 0.0); 1 << q];
    let mut start = 0usize;
    for a in 0..n {
        if x.get(a) {
            start |= 1 << a;
        }
        if y.get(a) {
            start |= 1 << (n + a);
        }
    }
    state[start] = Complex64::new(1.0, 0.0);

    let mut ops = Vec::new();
    for a in 0..n {
        ops.push(dense_operator(q, a, Some(n + a), x_matrix()));
    }
    ops.push(dense_operator(q, anc, None, h_matrix()));
    for a in 0..n {
        ops.push(dense_operator(q, anc, Some(a), phase_matrix(std::f64::consts::PI / n as f64)));
    }
    ops.push(dense_operator(q, anc, None, h_matrix()));
    if decode {
        for a in 0..n {
            ops.push(dense_operator(q, a, Some(n + a), x_matrix()));
        }
    }
    for op in &ops {
        state = matvec(op, &state);
    }
    state
}

/// Popcount-free Hamming distance: compare bit by bit.
pub fn naive_hamming(x: &BinaryVector, y: &BinaryVector) -> u32 {
    x.iter().zip(y.iter()).filter(|(a, b)| a != b).count() as u32
}

pub fn random_distinct(count: usize, n: usize, rng: &mut ChaCha8Rng) -> Vec<BinaryVector> {
    let mut out: Vec<BinaryVector> = Vec::new();
    while out.len() < count {
        let bits: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        let v = BinaryVector::from_bits(&bits);
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn bv(s: &str) -> BinaryVector {
    s.parse().unwrap()
}

/// Three groups of three 9-bit samples around centers at pairwise distance 6;
/// within-group distance at most 1 (samples repeat), between-group at least 5.
pub fn separated_dataset() -> (Vec<BinaryVector>, Vec<usize>) {
    let samples = [
        "000000000", "000000000", "100000000",
        "111111000", "111111000", "111111001",
        "000111111", "000111111", "000011111",
    ];
    (samples.iter().map(|s| bv(s)).collect(), vec![0, 0, 0, 1, 1, 1, 2, 2, 2])
}
