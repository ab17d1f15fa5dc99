//! Circuit families: angle encoding, Basic and Strongly Entangling ansatz
//! layers, and full VQC assembly with optional data reuploading.
//!
//! Templates are data-independent: encoding gates reference input features by
//! index and ansatz gates reference trainable parameters by index. Parameter
//! ids are contiguous from 0 in emission order.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{AngleRef, GateKind, GateOp, MAX_QUBITS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncodingKind {
    Rx,
    Ry,
}

impl EncodingKind {
    pub const ALL: [EncodingKind; 2] = [EncodingKind::Rx, EncodingKind::Ry];

    fn gate_kind(self) -> GateKind {
        match self {
            EncodingKind::Rx => GateKind::Rx,
            EncodingKind::Ry => GateKind::Ry,
        }
    }

    /// Short label used in result tables ("X" / "Y").
    pub fn label(self) -> &'static str {
        match self {
            EncodingKind::Rx => "X",
            EncodingKind::Ry => "Y",
        }
    }
}

impl fmt::Display for EncodingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnsatzKind {
    #[serde(alias = "basic_entangling")]
    Basic,
    #[serde(alias = "strongly_entangling")]
    Strongly,
}

impl AnsatzKind {
    pub const ALL: [AnsatzKind; 2] = [AnsatzKind::Basic, AnsatzKind::Strongly];

    pub fn params_per_qubit(self) -> usize {
        match self {
            AnsatzKind::Basic => 1,
            AnsatzKind::Strongly => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            AnsatzKind::Basic => "basic",
            AnsatzKind::Strongly => "strongly",
        }
    }
}

impl fmt::Display for AnsatzKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VqcConfig {
    pub n_qubits: usize,
    pub encoding: EncodingKind,
    pub ansatz: AnsatzKind,
    pub n_layers: usize,
    pub reuploading: bool,
    /// Qubits `0..n_measured` are read out with Pauli-Z.
    pub n_measured: usize,
}

impl VqcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(2..=MAX_QUBITS).contains(&self.n_qubits) {
            return Err(Error::Config(format!(
                "VQC width {} outside 2..={MAX_QUBITS} (ring entanglement needs two qubits)",
                self.n_qubits
            )));
        }
        if self.n_layers == 0 {
            return Err(Error::Config("VQC needs at least one ansatz layer".into()));
        }
        if self.n_measured == 0 || self.n_measured > self.n_qubits {
            return Err(Error::Config(format!(
                "n_measured = {} must be in 1..={}",
                self.n_measured, self.n_qubits
            )));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.n_layers * self.n_qubits * self.ansatz.params_per_qubit()
    }
}

/// A VQC as a flat gate list plus the number of trainable parameters it uses.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub n_qubits: usize,
    pub n_features: usize,
    pub n_params: usize,
    pub gates: Vec<GateOp>,
}

/// One encoding rotation per qubit, qubit `q` bound to feature `q`.
pub fn build_encoding(config: &VqcConfig) -> Result<Vec<GateOp>> {
    config.validate()?;
    Ok(encoding_block(config.n_qubits, config.encoding))
}

fn encoding_block(n_qubits: usize, encoding: EncodingKind) -> Vec<GateOp> {
    (0..n_qubits)
        .map(|q| GateOp::rotation(encoding.gate_kind(), q, AngleRef::Feature(q)))
        .collect()
}

fn check_ring_width(n_qubits: usize) -> Result<()> {
    if n_qubits < 2 {
        return Err(Error::Config(format!(
            "entangling layer needs at least 2 qubits, got {n_qubits}"
        )));
    }
    if n_qubits > MAX_QUBITS {
        return Err(Error::Config(format!(
            "entangling layer width {n_qubits} exceeds {MAX_QUBITS}"
        )));
    }
    Ok(())
}

fn cnot_ring(n_qubits: usize) -> impl Iterator<Item = GateOp> {
    (0..n_qubits).map(move |q| GateOp::cnot(q, (q + 1) % n_qubits))
}

/// Trainable RX on every qubit followed by a CNOT ring. Introduces
/// `n_qubits` parameters with ids starting at `layer_index * n_qubits`.
pub fn build_basic_entangling_layer(n_qubits: usize, layer_index: usize) -> Result<Vec<GateOp>> {
    check_ring_width(n_qubits)?;
    let base = layer_index * n_qubits;
    let mut gates: Vec<GateOp> = (0..n_qubits)
        .map(|q| GateOp::rx(q, AngleRef::Param(base + q)))
        .collect();
    gates.extend(cnot_ring(n_qubits));
    Ok(gates)
}

/// RZ-RY-RZ on every qubit followed by a CNOT ring. Introduces
/// `3 * n_qubits` parameters with ids starting at `layer_index * 3 * n_qubits`.
pub fn build_strongly_entangling_layer(
    n_qubits: usize,
    layer_index: usize,
) -> Result<Vec<GateOp>> {
    check_ring_width(n_qubits)?;
    let base = layer_index * 3 * n_qubits;
    let mut gates = Vec::with_capacity(4 * n_qubits);
    for q in 0..n_qubits {
        let id = base + 3 * q;
        gates.push(GateOp::rz(q, AngleRef::Param(id)));
        gates.push(GateOp::ry(q, AngleRef::Param(id + 1)));
        gates.push(GateOp::rz(q, AngleRef::Param(id + 2)));
    }
    gates.extend(cnot_ring(n_qubits));
    Ok(gates)
}

fn build_layer(ansatz: AnsatzKind, n_qubits: usize, layer_index: usize) -> Result<Vec<GateOp>> {
    match ansatz {
        AnsatzKind::Basic => build_basic_entangling_layer(n_qubits, layer_index),
        AnsatzKind::Strongly => build_strongly_entangling_layer(n_qubits, layer_index),
    }
}

/// Assembles encoding and ansatz layers. Without reuploading the encoding
/// appears once at the front; with reuploading it precedes every layer.
pub fn build_vqc(config: &VqcConfig) -> Result<Circuit> {
    config.validate()?;
    let n = config.n_qubits;
    let mut gates = Vec::new();
    for layer in 0..config.n_layers {
        if layer == 0 || config.reuploading {
            gates.extend(encoding_block(n, config.encoding));
        }
        gates.extend(build_layer(config.ansatz, n, layer)?);
    }
    Ok(Circuit {
        n_qubits: n,
        n_features: n,
        n_params: config.param_count(),
        gates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::run_circuit;
    use std::f64::consts::PI;

    fn cfg(n: usize, ansatz: AnsatzKind, layers: usize, reup: bool) -> VqcConfig {
        VqcConfig {
            n_qubits: n,
            encoding: EncodingKind::Rx,
            ansatz,
            n_layers: layers,
            reuploading: reup,
            n_measured: n,
        }
    }

    fn encoding_blocks(c: &Circuit) -> usize {
        c.gates.iter().filter(|g| g.feature_id() == Some(0)).count()
    }

    #[test]
    fn encoding_one_gate_per_qubit() {
        let gates = build_encoding(&cfg(2, AnsatzKind::Basic, 1, false)).unwrap();
        assert_eq!(
            gates,
            vec![
                GateOp::rx(0, AngleRef::Feature(0)),
                GateOp::rx(1, AngleRef::Feature(1))
            ]
        );
        let mut c = cfg(3, AnsatzKind::Basic, 1, false);
        c.encoding = EncodingKind::Ry;
        let gates = build_encoding(&c).unwrap();
        assert_eq!(gates.len(), 3);
        for (q, g) in gates.iter().enumerate() {
            assert_eq!(g.kind, GateKind::Ry);
            assert_eq!(g.feature_id(), Some(q));
        }
    }

    #[test]
    fn rx_encoding_of_pi_and_zero() {
        let gates = build_encoding(&cfg(2, AnsatzKind::Basic, 1, false)).unwrap();
        let s = run_circuit(2, &gates, &[], &[PI, 0.0]).unwrap();
        let z = s.expectations_z(2).unwrap();
        assert!((z[0] + 1.0).abs() < 1e-12 && (z[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn basic_layer_width_two() {
        let gates = build_basic_entangling_layer(2, 0).unwrap();
        assert_eq!(
            gates,
            vec![
                GateOp::rx(0, AngleRef::Param(0)),
                GateOp::rx(1, AngleRef::Param(1)),
                GateOp::cnot(0, 1),
                GateOp::cnot(1, 0),
            ]
        );
        let gates = build_basic_entangling_layer(4, 2).unwrap();
        assert_eq!(gates.iter().filter(|g| g.kind == GateKind::Cnot).count(), 4);
        let ids: Vec<_> = gates.iter().filter_map(|g| g.param_id()).collect();
        assert_eq!(ids, vec![8, 9, 10, 11]);
        assert!(matches!(
            build_basic_entangling_layer(1, 0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn strongly_layer_counts() {
        let gates = build_strongly_entangling_layer(2, 0).unwrap();
        assert_eq!(gates.iter().filter(|g| g.kind.is_rotation()).count(), 6);
        assert_eq!(gates.iter().filter(|g| g.kind == GateKind::Cnot).count(), 2);
        let gates = build_strongly_entangling_layer(5, 0).unwrap();
        assert_eq!(gates.iter().filter_map(|g| g.param_id()).count(), 15);
        assert!(build_strongly_entangling_layer(1, 0).is_err());
    }

    #[test]
    fn zero_params_reduce_to_cnot_ring() {
        // |10> through the ring CNOT(0,1), CNOT(1,0) ends in |01>.
        let layer = build_basic_entangling_layer(2, 0).unwrap();
        let mut gates = vec![GateOp::rx(0, AngleRef::Fixed(PI))];
        gates.extend(layer.iter().copied());
        let s = run_circuit(2, &gates, &[0.0, 0.0], &[]).unwrap();
        assert!((s.amplitudes()[1].norm() - 1.0).abs() < 1e-12);

        let layer = build_strongly_entangling_layer(2, 0).unwrap();
        let s = run_circuit(2, &layer, &[0.0; 6], &[]).unwrap();
        assert!((s.amplitudes()[0].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn table_shapes() {
        let c = build_vqc(&cfg(2, AnsatzKind::Basic, 7, true)).unwrap();
        assert_eq!(c.n_params, 14);
        assert_eq!(encoding_blocks(&c), 7);
        let mut s = cfg(2, AnsatzKind::Strongly, 4, true);
        s.encoding = EncodingKind::Ry;
        assert_eq!(build_vqc(&s).unwrap().n_params, 24);
        let c = build_vqc(&cfg(3, AnsatzKind::Basic, 3, false)).unwrap();
        assert_eq!(encoding_blocks(&c), 1);
        assert!(c.gates[..3].iter().all(|g| g.feature_id().is_some()));
        assert!(c.gates[3..].iter().all(|g| g.feature_id().is_none()));
    }

    #[test]
    fn param_ids_contiguous_and_unique() {
        for ansatz in AnsatzKind::ALL {
            for n in 2..=5 {
                for layers in 1..=4 {
                    for reup in [false, true] {
                        let c = build_vqc(&cfg(n, ansatz, layers, reup)).unwrap();
                        let ids: Vec<_> = c.gates.iter().filter_map(|g| g.param_id()).collect();
                        assert_eq!(ids, (0..c.n_params).collect::<Vec<_>>());
                        assert_eq!(c.n_params, layers * n * ansatz.params_per_qubit());
                        let blocks = encoding_blocks(&c);
                        assert_eq!(blocks, if reup { layers } else { 1 });
                    }
                }
            }
        }
    }

    #[test]
    fn config_validation() {
        let mut c = cfg(2, AnsatzKind::Basic, 1, false);
        c.n_measured = 3;
        assert!(build_vqc(&c).is_err());
        c.n_measured = 2;
        c.n_layers = 0;
        assert!(build_vqc(&c).is_err());
    }
}
