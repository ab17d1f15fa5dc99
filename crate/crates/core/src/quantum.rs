//! Exact statevector simulation for registers of up to [`MAX_QUBITS`] qubits.
//!
//! Conventions used throughout the crate:
//!
//! * Qubit 0 is the most-significant bit of the amplitude index, so on two
//!   qubits index `0b10` is the basis state |10⟩ (qubit 0 set).
//! * Rotations are `R_P(θ) = exp(−iθP/2)` for `P ∈ {X, Y, Z}`. With this sign
//!   convention `RY(θ)|0⟩` has ⟨Z⟩ = cos θ.
//!
//! Gates update amplitudes in place over index pairs; no matrices are built.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    Cnot,
}

impl GateKind {
    pub fn is_rotation(self) -> bool {
        !matches!(self, GateKind::Cnot)
    }
}

/// Where a rotation gate takes its angle from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AngleRef {
    Fixed(f64),
    /// Index into the trainable parameters of the circuit.
    Param(usize),
    /// Index into the input feature vector (angle encoding).
    Feature(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateOp {
    pub kind: GateKind,
    pub target: usize,
    pub control: Option<usize>,
    pub angle: Option<AngleRef>,
}

impl GateOp {
    pub fn rotation(kind: GateKind, target: usize, angle: AngleRef) -> Self {
        debug_assert!(kind.is_rotation());
        GateOp {
            kind,
            target,
            control: None,
            angle: Some(angle),
        }
    }

    pub fn rx(target: usize, angle: AngleRef) -> Self {
        Self::rotation(GateKind::Rx, target, angle)
    }

    pub fn ry(target: usize, angle: AngleRef) -> Self {
        Self::rotation(GateKind::Ry, target, angle)
    }

    pub fn rz(target: usize, angle: AngleRef) -> Self {
        Self::rotation(GateKind::Rz, target, angle)
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        GateOp {
            kind: GateKind::Cnot,
            target,
            control: Some(control),
            angle: None,
        }
    }

    pub fn param_id(&self) -> Option<usize> {
        match self.angle {
            Some(AngleRef::Param(id)) => Some(id),
            _ => None,
        }
    }

    pub fn feature_id(&self) -> Option<usize> {
        match self.angle {
            Some(AngleRef::Feature(id)) => Some(id),
            _ => None,
        }
    }

    /// Checks qubit indices and the angle/control shape of the gate.
    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if self.target >= n_qubits {
            return Err(Error::QubitIndex {
                index: self.target,
                n_qubits,
            });
        }
        match self.kind {
            GateKind::Cnot => {
                let control = self.control.ok_or_else(|| {
                    Error::ModelDefinition("CNOT gate without a control qubit".into())
                })?;
                if control >= n_qubits {
                    return Err(Error::QubitIndex {
                        index: control,
                        n_qubits,
                    });
                }
                if control == self.target {
                    return Err(Error::ModelDefinition(format!(
                        "CNOT control and target are both qubit {control}"
                    )));
                }
                if self.angle.is_some() {
                    return Err(Error::ModelDefinition("CNOT gate carries an angle".into()));
                }
            }
            _ => {
                if self.control.is_some() {
                    return Err(Error::ModelDefinition(
                        "rotation gate carries a control qubit".into(),
                    ));
                }
                if self.angle.is_none() {
                    return Err(Error::ModelDefinition("rotation gate without an angle".into()));
                }
            }
        }
        Ok(())
    }

    /// Resolves the rotation angle against parameter and feature vectors.
    /// CNOT resolves to 0.
    pub fn resolve_angle(&self, params: &[f64], features: &[f64]) -> Result<f64> {
        match self.angle {
            None => Ok(0.0),
            Some(AngleRef::Fixed(theta)) => Ok(theta),
            Some(AngleRef::Param(id)) => params.get(id).copied().ok_or_else(|| {
                Error::ModelDefinition(format!(
                    "parameter {id} referenced but only {} supplied",
                    params.len()
                ))
            }),
            Some(AngleRef::Feature(id)) => features.get(id).copied().ok_or_else(|| {
                Error::ModelDefinition(format!(
                    "feature {id} referenced but only {} supplied",
                    features.len()
                ))
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl Statevector {
    /// |0…0⟩ on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        check_width(n_qubits)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Statevector {
            n_qubits,
            amplitudes,
        })
    }

    /// Wraps raw amplitudes. The length must be a power of two; the vector is
    /// not renormalised.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if !len.is_power_of_two() || len < 2 {
            return Err(Error::Config(format!(
                "amplitude vector length {len} is not a power of two >= 2"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        check_width(n_qubits)?;
        Ok(Statevector {
            n_qubits,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn reset(&mut self) {
        self.amplitudes.iter_mut().for_each(|a| *a = Complex64::new(0.0, 0.0));
        self.amplitudes[0] = Complex64::new(1.0, 0.0);
    }

    pub(crate) fn copy_from(&mut self, other: &Statevector) {
        debug_assert_eq!(self.n_qubits, other.n_qubits);
        self.amplitudes.copy_from_slice(&other.amplitudes);
    }

    fn mask(&self, qubit: usize) -> usize {
        1 << (self.n_qubits - 1 - qubit)
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            Err(Error::QubitIndex {
                index: qubit,
                n_qubits: self.n_qubits,
            })
        } else {
            Ok(())
        }
    }

    /// Applies `gate` with the already-resolved angle (ignored for CNOT).
    pub fn apply(&mut self, gate: &GateOp, resolved_angle: f64) -> Result<()> {
        gate.validate(self.n_qubits)?;
        self.apply_unchecked(gate, resolved_angle);
        Ok(())
    }

    /// Same as [`Statevector::apply`] for a gate already validated against
    /// this register width.
    pub(crate) fn apply_unchecked(&mut self, gate: &GateOp, theta: f64) {
        match gate.kind {
            GateKind::Rx => self.rx(gate.target, theta),
            GateKind::Ry => self.ry(gate.target, theta),
            GateKind::Rz => self.rz(gate.target, theta),
            GateKind::Cnot => self.cnot(gate.control.unwrap_or_default(), gate.target),
        }
    }

    fn rx(&mut self, target: usize, theta: f64) {
        let (s, c) = (theta / 2.0).sin_cos();
        let mask = self.mask(target);
        for i in 0..self.amplitudes.len() {
            if i & mask == 0 {
                let j = i | mask;
                let a0 = self.amplitudes[i];
                let a1 = self.amplitudes[j];
                // [[c, -is], [-is, c]]
                self.amplitudes[i] = Complex64::new(c * a0.re + s * a1.im, c * a0.im - s * a1.re);
                self.amplitudes[j] = Complex64::new(c * a1.re + s * a0.im, c * a1.im - s * a0.re);
            }
        }
    }

    fn ry(&mut self, target: usize, theta: f64) {
        let (s, c) = (theta / 2.0).sin_cos();
        let mask = self.mask(target);
        for i in 0..self.amplitudes.len() {
            if i & mask == 0 {
                let j = i | mask;
                let a0 = self.amplitudes[i];
                let a1 = self.amplitudes[j];
                self.amplitudes[i] = a0 * c - a1 * s;
                self.amplitudes[j] = a0 * s + a1 * c;
            }
        }
    }

    fn rz(&mut self, target: usize, theta: f64) {
        let (s, c) = (theta / 2.0).sin_cos();
        let phase0 = Complex64::new(c, -s);
        let phase1 = Complex64::new(c, s);
        let mask = self.mask(target);
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            *a *= if i & mask == 0 { phase0 } else { phase1 };
        }
    }

    fn cnot(&mut self, control: usize, target: usize) {
        let cmask = self.mask(control);
        let tmask = self.mask(target);
        for i in 0..self.amplitudes.len() {
            if i & cmask != 0 && i & tmask == 0 {
                self.amplitudes.swap(i, i | tmask);
            }
        }
    }

    /// ⟨Z⟩ on `qubit`: P(bit = 0) − P(bit = 1).
    pub fn expectation_z(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        let mask = self.mask(qubit);
        let value = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let p = a.norm_sqr();
                if i & mask == 0 {
                    p
                } else {
                    -p
                }
            })
            .sum::<f64>();
        Ok(value.clamp(-1.0, 1.0))
    }

    /// ⟨Z⟩ for qubits `0..count` in a single pass over the amplitudes.
    pub fn expectations_z(&self, count: usize) -> Result<Vec<f64>> {
        if count > self.n_qubits {
            return Err(Error::QubitIndex {
                index: count.saturating_sub(1),
                n_qubits: self.n_qubits,
            });
        }
        let mut out = vec![0.0; count];
        self.expectations_z_into(&mut out);
        Ok(out)
    }

    pub(crate) fn expectations_z_into(&self, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let top = self.n_qubits - 1;
        for (i, a) in self.amplitudes.iter().enumerate() {
            let p = a.norm_sqr();
            for (q, v) in out.iter_mut().enumerate() {
                if (i >> (top - q)) & 1 == 0 {
                    *v += p;
                } else {
                    *v -= p;
                }
            }
        }
        out.iter_mut().for_each(|v| *v = v.clamp(-1.0, 1.0));
    }
}

fn check_width(n_qubits: usize) -> Result<()> {
    if (1..=MAX_QUBITS).contains(&n_qubits) {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{n_qubits} qubits requested; supported range is 1..={MAX_QUBITS}"
        )))
    }
}

/// Runs `gates` on |0…0⟩, resolving trainable angles from `params` and encoded
/// angles from `features`.
pub fn run_circuit(
    n_qubits: usize,
    gates: &[GateOp],
    params: &[f64],
    features: &[f64],
) -> Result<Statevector> {
    let mut state = Statevector::zero(n_qubits)?;
    for gate in gates {
        gate.validate(n_qubits)?;
        let theta = gate.resolve_angle(params, features)?;
        state.apply_unchecked(gate, theta);
    }
    Ok(state)
}
