//! Dense-matrix reference simulator and small fixtures shared by the
//! integration tests. Nothing here calls into the library's simulator.

#![allow(dead_code)]

use mvqc_core::data::{Dataset, SplitDataset};
use mvqc_core::model::MultiVqcConfig;
use mvqc_core::quantum::{AngleRef, GateKind, GateOp};
use num_complex::Complex64;
use rand::Rng;

pub type Matrix = Vec<Vec<Complex64>>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(dim: usize) -> Matrix {
    (0..dim)
        .map(|i| (0..dim).map(|j| c(if i == j { 1.0 } else { 0.0 }, 0.0)).collect())
        .collect()
}

pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (ra, rb) = (a.len(), b.len());
    let mut out = vec![vec![c(0.0, 0.0); ra * rb]; ra * rb];
    for i in 0..ra {
        for j in 0..ra {
            for k in 0..rb {
                for l in 0..rb {
                    out[i * rb + k][j * rb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let mut out = vec![vec![c(0.0, 0.0); n]; n];
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn matvec(a: &Matrix, v: &[Complex64]) -> Vec<Complex64> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

pub fn pauli(kind: GateKind) -> Matrix {
    match kind {
        GateKind::Rx => vec![vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]],
        GateKind::Ry => vec![vec![c(0.0, 0.0), c(0.0, -1.0)], vec![c(0.0, 1.0), c(0.0, 0.0)]],
        GateKind::Rz => vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(-1.0, 0.0)]],
        GateKind::Cnot => panic!("CNOT is not a rotation"),
    }
}

/// exp(−iθP/2) = cos(θ/2)·I − i·sin(θ/2)·P
pub fn rotation(kind: GateKind, theta: f64) -> Matrix {
    let p = pauli(kind);
    let (s, co) = (theta / 2.0).sin_cos();
    (0..2)
        .map(|i| {
            (0..2)
                .map(|j| c(if i == j { co } else { 0.0 }, 0.0) + c(0.0, -s) * p[i][j])
                .collect()
        })
        .collect()
}

/// Embeds a single-qubit operator; qubit 0 is the leftmost factor.
pub fn embed(n: usize, qubit: usize, op: &Matrix) -> Matrix {
    let i2 = identity(2);
    let mut m = identity(1);
    for q in 0..n {
        m = kron(&m, if q == qubit { op } else { &i2 });
    }
    m
}

pub fn cnot_matrix(n: usize, control: usize, target: usize) -> Matrix {
    let p0 = vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(0.0, 0.0)]];
    let p1 = vec![vec![c(0.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]];
    let x = pauli(GateKind::Rx);
    let (mut a, mut b) = (identity(1), identity(1));
    for q in 0..n {
        let i2 = identity(2);
        a = kron(&a, if q == control { &p0 } else { &i2 });
        b = kron(
            &b,
            if q == control {
                &p1
            } else if q == target {
                &x
            } else {
                &i2
            },
        );
    }
    a.iter()
        .zip(&b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + y).collect())
        .collect()
}

pub fn gate_matrix(n: usize, gate: &GateOp, theta: f64) -> Matrix {
    match gate.kind {
        GateKind::Cnot => cnot_matrix(n, gate.control.expect("control"), gate.target),
        k => embed(n, gate.target, &rotation(k, theta)),
    }
}

pub fn resolve(angle: &AngleRef, params: &[f64], features: &[f64]) -> f64 {
    match *angle {
        AngleRef::Fixed(v) => v,
        AngleRef::Param(i) => params[i],
        AngleRef::Feature(i) => features[i],
    }
}

pub fn zero_state(n: usize) -> Vec<Complex64> {
    let mut v = vec![c(0.0, 0.0); 1 << n];
    v[0] = c(1.0, 0.0);
    v
}

/// Full circuit unitary as a product of dense gate matrices.
pub fn oracle_unitary(n: usize, gates: &[GateOp], params: &[f64], features: &[f64]) -> Matrix {
    let mut u = identity(1 << n);
    for g in gates {
        let theta = g.angle.as_ref().map_or(0.0, |a| resolve(a, params, features));
        u = matmul(&gate_matrix(n, g, theta), &u);
    }
    u
}

pub fn oracle_state(n: usize, gates: &[GateOp], params: &[f64], features: &[f64]) -> Vec<Complex64> {
    matvec(&oracle_unitary(n, gates, params, features), &zero_state(n))
}

/// ⟨Z_q⟩ as ⟨ψ|Z_q|ψ⟩ with a dense Z_q.
pub fn oracle_expectation(state: &[Complex64], qubit: usize) -> f64 {
    let n = state.len().trailing_zeros() as usize;
    let z = embed(n, qubit, &pauli(GateKind::Rz));
    let zv = matvec(&z, state);
    state.iter().zip(&zv).map(|(a, b)| (a.conj() * b).re).sum()
}

/// Chain evaluation built from the dense oracle: class scores of `config`
/// with flat `params`, using the default e·π map between VQCs.
pub fn oracle_chain_scores(config: &MultiVqcConfig, params: &[f64], features: &[f64]) -> Vec<f64> {
    let mut offset = 0;
    let mut input = features.to_vec();
    let mut last = Vec::new();
    for (i, v) in config.vqcs.iter().enumerate() {
        let circuit = mvqc_core::templates::build_vqc(v).unwrap();
        let theta = &params[offset..offset + circuit.n_params];
        offset += circuit.n_params;
        let psi = oracle_state(v.n_qubits, &circuit.gates, theta, &input);
        let ez: Vec<f64> = (0..v.n_measured).map(|q| oracle_expectation(&psi, q)).collect();
        if i + 1 < config.vqcs.len() {
            input = ez.iter().map(|e| e * std::f64::consts::PI).collect();
        }
        last = ez;
    }
    config.readout_qubits().iter().map(|&q| last[q]).collect()
}

pub fn random_gate<R: Rng>(rng: &mut R, n: usize) -> GateOp {
    let kinds = [GateKind::Rx, GateKind::Ry, GateKind::Rz, GateKind::Cnot];
    let kind = kinds[rng.gen_range(if n < 2 { 0..3 } else { 0..4 })];
    if kind == GateKind::Cnot {
        let control = rng.gen_range(0..n);
        let mut target = rng.gen_range(0..n - 1);
        if target >= control {
            target += 1;
        }
        GateOp::cnot(control, target)
    } else {
        let theta = rng.gen_range(-7.0..7.0);
        GateOp::rotation(kind, rng.gen_range(0..n), AngleRef::Fixed(theta))
    }
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Central difference of a scalar function, written out separately from the
/// library helper.
pub fn finite_difference<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|k| {
            let mut up = x.to_vec();
            let mut down = x.to_vec();
            up[k] += h;
            down[k] -= h;
            (f(&up) - f(&down)) / (2.0 * h)
        })
        .collect()
}

/// Two Gaussian-ish clusters in angle space, one per class.
pub fn two_blobs<R: Rng>(rng: &mut R, n: usize, width: usize) -> Dataset {
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n {
        let label = i % 2;
        let centre = if label == 1 { 2.4 } else { 0.7 };
        features.push((0..width).map(|_| centre + rng.gen_range(-0.5..0.5)).collect());
        labels.push(label);
    }
    let names = (0..width).map(|j| format!("x{j}")).collect();
    Dataset::new("blobs", features, labels, names).unwrap()
}

pub fn split_of(train: Dataset, validation: Dataset, test: Dataset) -> SplitDataset {
    SplitDataset {
        train,
        validation,
        test,
        fractions: [0.6, 0.2, 0.2],
        seed: 0,
    }
}
