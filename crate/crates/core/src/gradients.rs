//! Parameter-shift gradients.
//!
//! Every trainable or encoded rotation is generated by a Pauli operator over
//! two, so the derivative of any expectation with respect to that gate's angle
//! is exactly `[E(θ + π/2) − E(θ − π/2)] / 2`. A feature that is encoded by
//! several gates (reuploading) gets the sum of the per-gate terms.
//!
//! Across a chain, each VQC's Jacobian with respect to its parameters and its
//! input angles is taken by parameter shift, and the loss gradient is
//! propagated backwards through the rescale map between VQCs.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::loss::{loss_score_gradient, weighted_loss, ClassWeights};
use crate::model::MultiVqcModel;
use crate::params::ParamStore;
use crate::quantum::{AngleRef, Statevector};
use crate::templates::Circuit;

/// Expectations of the first `n_out` qubits and their derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct VqcJacobian {
    pub outputs: Vec<f64>,
    /// `d_params[k][j] = ∂⟨Z_j⟩ / ∂θ_k`
    pub d_params: Vec<Vec<f64>>,
    /// `d_features[f][j] = ∂⟨Z_j⟩ / ∂x_f`; empty unless requested.
    pub d_features: Vec<Vec<f64>>,
}

/// Parameter-shift Jacobian of one circuit.
///
/// The state before each gate is cached once, so a shifted evaluation only
/// replays the suffix after the shifted gate.
pub fn vqc_jacobian(
    circuit: &Circuit,
    params: &[f64],
    features: &[f64],
    n_out: usize,
    with_features: bool,
) -> Result<VqcJacobian> {
    if n_out > circuit.n_qubits {
        return Err(Error::QubitIndex {
            index: n_out.saturating_sub(1),
            n_qubits: circuit.n_qubits,
        });
    }
    let angles = circuit
        .gates
        .iter()
        .map(|g| {
            g.validate(circuit.n_qubits)?;
            g.resolve_angle(params, features)
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut prefix = Vec::with_capacity(circuit.gates.len());
    let mut state = Statevector::zero(circuit.n_qubits)?;
    for (gate, &theta) in circuit.gates.iter().zip(&angles) {
        prefix.push(state.clone());
        state.apply_unchecked(gate, theta);
    }
    let mut outputs = vec![0.0; n_out];
    state.expectations_z_into(&mut outputs);

    let mut d_params = vec![vec![0.0; n_out]; circuit.n_params];
    let mut d_features = if with_features {
        vec![vec![0.0; n_out]; circuit.n_features]
    } else {
        Vec::new()
    };

    let mut scratch = state;
    let mut plus = vec![0.0; n_out];
    let mut minus = vec![0.0; n_out];
    for (g, gate) in circuit.gates.iter().enumerate() {
        let slot = match gate.angle {
            Some(AngleRef::Param(id)) => &mut d_params[id],
            Some(AngleRef::Feature(id)) if with_features => &mut d_features[id],
            _ => continue,
        };
        for (shift, out) in [(FRAC_PI_2, &mut plus), (-FRAC_PI_2, &mut minus)] {
            scratch.copy_from(&prefix[g]);
            scratch.apply_unchecked(gate, angles[g] + shift);
            for (later, &theta) in circuit.gates[g + 1..].iter().zip(&angles[g + 1..]) {
                scratch.apply_unchecked(later, theta);
            }
            scratch.expectations_z_into(out);
        }
        for (s, (p, m)) in slot.iter_mut().zip(plus.iter().zip(&minus)) {
            *s += (p - m) / 2.0;
        }
    }

    Ok(VqcJacobian {
        outputs,
        d_params,
        d_features,
    })
}

/// Gradient of ⟨Z⟩ on `measured_qubit` with respect to every trainable
/// parameter of `circuit`.
pub fn expectation_gradient(
    circuit: &Circuit,
    params: &[f64],
    features: &[f64],
    measured_qubit: usize,
) -> Result<Vec<f64>> {
    let jac = vqc_jacobian(circuit, params, features, measured_qubit + 1, false)?;
    Ok(jac.d_params.iter().map(|row| row[measured_qubit]).collect())
}

/// Weighted loss of one sample and its gradient over all chain parameters.
pub fn loss_gradient(
    model: &MultiVqcModel,
    params: &ParamStore,
    sample: &[f64],
    label: usize,
    weights: &ClassWeights,
) -> Result<(f64, Vec<f64>)> {
    let trace = model.forward_trace(params, sample)?;
    let loss = weighted_loss(&trace.output, label, weights);
    let score_grad = loss_score_gradient(&trace.output, label, weights);

    let circuits = model.circuits();
    let last = circuits.len() - 1;
    let rescale = model.config().rescale;
    let mut grad = vec![0.0; params.len()];

    // Upstream gradient on the measured expectations of the current VQC.
    let mut g_out = vec![0.0; trace.outputs[last].len()];
    for (&q, g) in model.readout().iter().zip(&score_grad) {
        g_out[q] += g;
    }

    for i in (0..=last).rev() {
        let range = model.param_range(i);
        let jac = vqc_jacobian(
            &circuits[i],
            &params.values()[range.clone()],
            &trace.inputs[i],
            g_out.len(),
            i > 0,
        )?;
        for (k, row) in jac.d_params.iter().enumerate() {
            grad[range.start + k] = dot(row, &g_out);
        }
        if i > 0 {
            let prev = &trace.outputs[i - 1];
            g_out = jac
                .d_features
                .iter()
                .zip(prev)
                .map(|(row, &e)| dot(row, &g_out) * rescale.derivative(e))
                .collect();
        }
        if let Some(k) = grad[range.clone()].iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite gradient for parameter {k} of VQC {i}"
            )));
        }
        if g_out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite upstream gradient entering VQC {i}"
            )));
        }
    }
    Ok((loss, grad))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Central-difference gradient of `f` at `x`; the cross-check mode for the
/// analytic gradients.
pub fn central_difference<F>(f: F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|k| {
            probe[k] = x[k] + h;
            let up = f(&probe)?;
            probe[k] = x[k] - h;
            let down = f(&probe)?;
            probe[k] = x[k];
            Ok((up - down) / (2.0 * h))
        })
        .collect()
}
