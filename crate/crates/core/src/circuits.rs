//! Trotterized time evolution of the Hubbard Hamiltonian as gate circuits,
//! with exact controlled versions for phase estimation.

use std::f64::consts::FRAC_PI_2;

use crate::engine::{Circuit, Gate};
use crate::error::{invalid, Result};
use crate::model::{HubbardModel, HubbardTerm, Pauli, PauliString};

/// `n_steps` first-order steps spanning total time `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrotterConfig {
    pub n_steps: usize,
    pub t: f64,
}

impl TrotterConfig {
    pub fn new(n_steps: usize, t: f64) -> Result<Self> {
        if n_steps == 0 {
            return invalid("Trotter step count must be at least 1");
        }
        if !t.is_finite() {
            return invalid("evolution time must be finite");
        }
        Ok(Self { n_steps, t })
    }

    pub fn dt(&self) -> f64 {
        self.t / self.n_steps as f64
    }
}

/// Rotation angles of one step: `theta0 = -γ0 Δt`, `theta_u = U0 Δt`,
/// `theta_eps = ε Δt`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolutionAngles {
    pub theta0: f64,
    pub theta_u: f64,
    pub theta_eps: f64,
}

impl EvolutionAngles {
    pub fn new(model: &HubbardModel, dt: f64) -> Self {
        let p = model.params;
        Self {
            theta0: -p.gamma0 * dt,
            theta_u: p.u0 * dt,
            theta_eps: p.epsilon * dt,
        }
    }
}

fn check_controls(n_qubits: usize, support: &[usize], controls: &[usize]) -> Result<()> {
    for (k, &c) in controls.iter().enumerate() {
        if c >= n_qubits {
            return invalid(format!("control {c} outside register of {n_qubits} qubits"));
        }
        if support.contains(&c) {
            return invalid(format!("control {c} overlaps the fragment's qubits"));
        }
        if controls[..k].contains(&c) {
            return invalid(format!("control {c} listed twice"));
        }
    }
    Ok(())
}

/// Scalar phase `e^{iφ}` that only matters under control: a phase gate on
/// the first control, conditioned on the rest.
fn control_phase(controls: &[usize], phi: f64) -> Option<Gate> {
    let (&first, rest) = controls.split_first()?;
    Some(Gate::phase(first, phi).controlled_by(rest))
}

/// `exp(-i θ/2 P)` for a Pauli string `P` (its coefficient is ignored).
///
/// Basis change to Z on each non-identity qubit, CX parity ladder up to the
/// highest one, `RZ(θ)` there, then undo. Only the `RZ` carries the controls.
pub fn pauli_rotation(
    n_qubits: usize,
    p: &PauliString,
    theta: f64,
    controls: &[usize],
) -> Result<Circuit> {
    if p.n_qubits() > n_qubits {
        return invalid("Pauli string wider than register");
    }
    let support = p.support();
    check_controls(n_qubits, &support, controls)?;
    let mut c = Circuit::new(n_qubits);
    if theta == 0.0 {
        return Ok(c);
    }
    let Some(&last) = support.last() else {
        if let Some(g) = control_phase(controls, -theta / 2.0) {
            c.push(g)?;
        }
        return Ok(c);
    };
    let mut pre = Vec::new();
    for &q in &support {
        match p.op(q) {
            Pauli::X => pre.push(Gate::h(q)),
            Pauli::Y => pre.push(Gate::rx(q, FRAC_PI_2)),
            _ => {}
        }
    }
    let ladder: Vec<Gate> = support.windows(2).map(|w| Gate::cx(w[0], w[1])).collect();
    for g in pre.iter().chain(&ladder) {
        c.push(g.clone())?;
    }
    c.push(Gate::rz(last, theta).controlled_by(controls))?;
    for g in ladder.iter().rev().chain(pre.iter().rev()) {
        c.push(g.inverse())?;
    }
    Ok(c)
}

/// `exp[-i θ0/2 (X_i X_j + Y_i Y_j) Z_{i+1}..Z_{j-1}]`.
pub fn hopping_evolution(
    n_qubits: usize,
    i: usize,
    j: usize,
    theta0: f64,
    controls: &[usize],
) -> Result<Circuit> {
    if i >= j {
        return invalid(format!("hopping needs i < j, got ({i}, {j})"));
    }
    if j >= n_qubits {
        return invalid(format!("qubit {j} outside register of {n_qubits} qubits"));
    }
    let mut c = Circuit::new(n_qubits);
    for end in [Pauli::X, Pauli::Y] {
        let mut ops = vec![Pauli::I; n_qubits];
        ops[i + 1..j].fill(Pauli::Z);
        ops[i] = end;
        ops[j] = end;
        let p = PauliString::from_ops(&ops, 1.0)?;
        c.append(&pauli_rotation(n_qubits, &p, theta0, controls)?)?;
    }
    Ok(c)
}

/// `exp(-i t n_i)`: a phase gate, or under control a controlled `RZ(-t)`
/// plus `PHASE(-t/2)` on the control for the identity half.
pub fn number_evolution(n_qubits: usize, i: usize, t: f64, controls: &[usize]) -> Result<Circuit> {
    if i >= n_qubits {
        return invalid(format!("qubit {i} outside register of {n_qubits} qubits"));
    }
    check_controls(n_qubits, &[i], controls)?;
    let mut c = Circuit::new(n_qubits);
    if t == 0.0 {
        return Ok(c);
    }
    match control_phase(controls, -t / 2.0) {
        None => c.push(Gate::phase(i, -t))?,
        Some(g) => {
            c.push(Gate::rz(i, -t).controlled_by(controls))?;
            c.push(g)?;
        }
    }
    Ok(c)
}

/// `exp(-i θU n_i n_j)`. Uncontrolled this is a single controlled phase;
/// under control it is split into Z rotations, a ZZ rotation and
/// `PHASE(-θU/4)` on the control.
pub fn interaction_evolution(
    n_qubits: usize,
    i: usize,
    j: usize,
    theta_u: f64,
    controls: &[usize],
) -> Result<Circuit> {
    if i == j {
        return invalid(format!("interaction needs distinct qubits, got {i} twice"));
    }
    if i.max(j) >= n_qubits {
        return invalid(format!("qubit {} outside register of {n_qubits} qubits", i.max(j)));
    }
    check_controls(n_qubits, &[i, j], controls)?;
    let mut c = Circuit::new(n_qubits);
    if theta_u == 0.0 {
        return Ok(c);
    }
    let Some(phase) = control_phase(controls, -theta_u / 4.0) else {
        c.push(Gate::phase(j, -theta_u).controlled_by(&[i]))?;
        return Ok(c);
    };
    let h = theta_u / 2.0;
    c.push(Gate::rz(i, -h).controlled_by(controls))?;
    c.push(Gate::rz(j, -h).controlled_by(controls))?;
    c.push(Gate::cx(i, j))?;
    c.push(Gate::rz(j, h).controlled_by(controls))?;
    c.push(Gate::cx(i, j))?;
    c.push(phase)?;
    Ok(c)
}

fn register_for(model: &HubbardModel, controls: &[usize]) -> usize {
    controls
        .iter()
        .map(|&c| c + 1)
        .max()
        .unwrap_or(0)
        .max(model.n_qubits())
}

/// One first-order step over `dt`: spin-up bonds, spin-down bonds,
/// interactions, then on-site energies. The register is the system plus
/// whatever ancillas `controls` name.
pub fn trotter_step(model: &HubbardModel, dt: f64, controls: &[usize]) -> Result<Circuit> {
    let n = register_for(model, controls);
    let mut c = Circuit::new(n);
    for term in model.terms() {
        let frag = match term {
            HubbardTerm::Hopping { p, q, amplitude } => {
                hopping_evolution(n, p, q, -amplitude * dt, controls)?
            }
            HubbardTerm::Interaction { p, q, strength } => {
                interaction_evolution(n, p, q, strength * dt, controls)?
            }
            HubbardTerm::OnSite { mode, energy } => {
                number_evolution(n, mode, energy * dt, controls)?
            }
        };
        c.append(&frag)?;
    }
    Ok(c)
}

/// `config.n_steps` repetitions of [`trotter_step`] at `Δt = t / n_steps`.
pub fn evolution_circuit(
    model: &HubbardModel,
    config: &TrotterConfig,
    controls: &[usize],
) -> Result<Circuit> {
    let step = trotter_step(model, config.dt(), controls)?;
    let mut c = Circuit::new(step.n_qubits());
    for _ in 0..config.n_steps {
        c.append(&step)?;
    }
    Ok(c)
}

/// Controlled `U^power` with `U` the evolution circuit of `config`.
///
/// By default the controlled circuit is repeated `power` times. With
/// `fast_powers` a single circuit over time `power·t` with the same step
/// count is emitted instead; its Trotter error differs from the repeated
/// circuit.
pub fn controlled_power(
    model: &HubbardModel,
    config: &TrotterConfig,
    ancilla: usize,
    power: u64,
    fast_powers: bool,
) -> Result<Circuit> {
    if !power.is_power_of_two() {
        return invalid(format!("power {power} is not a power of two"));
    }
    if ancilla < model.n_qubits() {
        return invalid(format!("ancilla {ancilla} lies inside the system register"));
    }
    if fast_powers {
        let cfg = TrotterConfig::new(config.n_steps, config.t * power as f64)?;
        return evolution_circuit(model, &cfg, &[ancilla]);
    }
    let once = evolution_circuit(model, config, &[ancilla])?;
    let mut c = Circuit::new(once.n_qubits());
    for _ in 0..power {
        c.append(&once)?;
    }
    Ok(c)
}
