use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{invalid, Result};

pub type Matrix2 = [[Complex64; 2]; 2];

const UNITARY_TOLERANCE: f64 = 1e-10;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Single-target gate kinds. Two-qubit gates are a kind plus a control, so
/// CX is `X` with one control and CZ is `Z` with one control.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GateKind {
    H,
    X,
    Y,
    Z,
    S,
    Sdg,
    /// `exp(-i θ X / 2)`
    Rx(f64),
    /// `exp(-i θ Y / 2)`
    Ry(f64),
    /// `exp(-i θ Z / 2)`
    Rz(f64),
    /// `diag(1, e^{iφ})`
    Phase(f64),
    Unitary(Matrix2),
}

impl GateKind {
    pub fn matrix(&self) -> Matrix2 {
        let z = c(0.0, 0.0);
        let o = c(1.0, 0.0);
        match *self {
            GateKind::H => {
                let h = c(FRAC_1_SQRT_2, 0.0);
                [[h, h], [h, -h]]
            }
            GateKind::X => [[z, o], [o, z]],
            GateKind::Y => [[z, c(0.0, -1.0)], [c(0.0, 1.0), z]],
            GateKind::Z => [[o, z], [z, -o]],
            GateKind::S => [[o, z], [z, c(0.0, 1.0)]],
            GateKind::Sdg => [[o, z], [z, c(0.0, -1.0)]],
            GateKind::Rx(t) => {
                let (s, co) = (t / 2.0).sin_cos();
                [[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]]
            }
            GateKind::Ry(t) => {
                let (s, co) = (t / 2.0).sin_cos();
                [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]]
            }
            GateKind::Rz(t) => [[Complex64::from_polar(1.0, -t / 2.0), z], [z, Complex64::from_polar(1.0, t / 2.0)]],
            GateKind::Phase(p) => [[o, z], [z, Complex64::from_polar(1.0, p)]],
            GateKind::Unitary(m) => m,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GateKind::H => "h",
            GateKind::X => "x",
            GateKind::Y => "y",
            GateKind::Z => "z",
            GateKind::S => "s",
            GateKind::Sdg => "sdg",
            GateKind::Rx(_) => "rx",
            GateKind::Ry(_) => "ry",
            GateKind::Rz(_) => "rz",
            GateKind::Phase(_) => "p",
            GateKind::Unitary(_) => "u",
        }
    }

    pub fn angle(&self) -> Option<f64> {
        match *self {
            GateKind::Rx(t) | GateKind::Ry(t) | GateKind::Rz(t) | GateKind::Phase(t) => Some(t),
            _ => None,
        }
    }

    pub fn inverse(&self) -> GateKind {
        match *self {
            GateKind::S => GateKind::Sdg,
            GateKind::Sdg => GateKind::S,
            GateKind::Rx(t) => GateKind::Rx(-t),
            GateKind::Ry(t) => GateKind::Ry(-t),
            GateKind::Rz(t) => GateKind::Rz(-t),
            GateKind::Phase(p) => GateKind::Phase(-p),
            GateKind::Unitary(m) => GateKind::Unitary([
                [m[0][0].conj(), m[1][0].conj()],
                [m[0][1].conj(), m[1][1].conj()],
            ]),
            k => k,
        }
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(
            self,
            GateKind::Z | GateKind::S | GateKind::Sdg | GateKind::Rz(_) | GateKind::Phase(_)
        )
    }
}

/// A single-target gate with zero or more control qubits. The gate acts only
/// on the subspace where every control is `|1>`.
#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub target: usize,
    pub controls: Vec<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, target: usize) -> Self {
        Self {
            kind,
            target,
            controls: Vec::new(),
        }
    }

    pub fn h(t: usize) -> Self {
        Self::new(GateKind::H, t)
    }

    pub fn x(t: usize) -> Self {
        Self::new(GateKind::X, t)
    }

    pub fn y(t: usize) -> Self {
        Self::new(GateKind::Y, t)
    }

    pub fn z(t: usize) -> Self {
        Self::new(GateKind::Z, t)
    }

    pub fn rx(t: usize, theta: f64) -> Self {
        Self::new(GateKind::Rx(theta), t)
    }

    pub fn ry(t: usize, theta: f64) -> Self {
        Self::new(GateKind::Ry(theta), t)
    }

    pub fn rz(t: usize, theta: f64) -> Self {
        Self::new(GateKind::Rz(theta), t)
    }

    pub fn phase(t: usize, phi: f64) -> Self {
        Self::new(GateKind::Phase(phi), t)
    }

    pub fn cx(control: usize, target: usize) -> Self {
        Self::new(GateKind::X, target).controlled_by(&[control])
    }

    pub fn cz(control: usize, target: usize) -> Self {
        Self::new(GateKind::Z, target).controlled_by(&[control])
    }

    /// Generic single-qubit gate; rejects matrices that are not unitary.
    pub fn unitary(t: usize, m: Matrix2) -> Result<Self> {
        let mut worst: f64 = 0.0;
        for r in 0..2 {
            for col in 0..2 {
                let dot = m[0][r].conj() * m[0][col] + m[1][r].conj() * m[1][col];
                let want = if r == col { 1.0 } else { 0.0 };
                worst = worst.max((dot - Complex64::new(want, 0.0)).norm());
            }
        }
        if worst > UNITARY_TOLERANCE {
            return invalid(format!("matrix is not unitary (deviation {worst:e})"));
        }
        Ok(Self::new(GateKind::Unitary(m), t))
    }

    /// Adds controls (appended after existing ones).
    pub fn controlled_by(mut self, controls: &[usize]) -> Self {
        self.controls.extend_from_slice(controls);
        self
    }

    pub fn inverse(&self) -> Self {
        Self {
            kind: self.kind.inverse(),
            target: self.target,
            controls: self.controls.clone(),
        }
    }

    /// All qubits the gate touches, target first.
    pub fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.target).chain(self.controls.iter().copied())
    }

    pub fn arity(&self) -> usize {
        1 + self.controls.len()
    }

    pub fn control_mask(&self) -> usize {
        self.controls.iter().fold(0, |m, &q| m | 1 << q)
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if self.target >= n_qubits {
            return invalid(format!(
                "target {} outside register of {n_qubits} qubits",
                self.target
            ));
        }
        for (k, &q) in self.controls.iter().enumerate() {
            if q >= n_qubits {
                return invalid(format!("control {q} outside register of {n_qubits} qubits"));
            }
            if q == self.target {
                return invalid(format!("qubit {q} is both control and target"));
            }
            if self.controls[..k].contains(&q) {
                return invalid(format!("control {q} listed twice"));
            }
        }
        Ok(())
    }

    /// One line of the text dump: `name angle targets controls`, with `-`
    /// for an absent angle or empty control list and comma-separated indices.
    pub fn dump_line(&self) -> String {
        let angle = match self.kind.angle() {
            Some(a) => format!("{a:?}"),
            None => "-".to_string(),
        };
        let controls = if self.controls.is_empty() {
            "-".to_string()
        } else {
            self.controls
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(",")
        };
        format!("{} {} {} {}", self.kind.name(), angle, self.target, controls)
    }
}

/// Ordered gate list over a fixed register.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            gates: Vec::new(),
        }
    }

    pub fn from_gates(n_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut c = Self::new(n_qubits);
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        self.gates.push(gate);
        Ok(())
    }

    pub fn append(&mut self, other: &Circuit) -> Result<()> {
        if other.n_qubits > self.n_qubits {
            return invalid(format!(
                "cannot append a {}-qubit circuit to a {}-qubit one",
                other.n_qubits, self.n_qubits
            ));
        }
        self.gates.extend_from_slice(&other.gates);
        Ok(())
    }

    /// Same circuit on a register of `n_qubits >= self.n_qubits()`.
    pub fn widened(&self, n_qubits: usize) -> Result<Circuit> {
        if n_qubits < self.n_qubits {
            return invalid("cannot narrow a circuit");
        }
        Ok(Circuit {
            n_qubits,
            gates: self.gates.clone(),
        })
    }

    pub fn inverse(&self) -> Circuit {
        Circuit {
            n_qubits: self.n_qubits,
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
        }
    }

    /// Count of gates with one control (physical two-qubit gates).
    pub fn two_qubit_count(&self) -> usize {
        self.gates.iter().filter(|g| g.controls.len() == 1).count()
    }

    /// Plain-text gate list, one gate per line (see [`Gate::dump_line`]),
    /// preceded by a `qubits N` header line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "qubits {}", self.n_qubits);
        for g in &self.gates {
            out.push_str(&g.dump_line());
            out.push('\n');
        }
        out
    }
}

impl<'a> IntoIterator for &'a Circuit {
    type Item = &'a Gate;
    type IntoIter = std::slice::Iter<'a, Gate>;

    fn into_iter(self) -> Self::IntoIter {
        self.gates.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(Gate::cx(0, 0).validate(2).is_err());
        assert!(Gate::h(2).validate(2).is_err());
        assert!(Gate::cx(3, 0).validate(2).is_err());
        assert!(Gate::x(0).controlled_by(&[1, 1]).validate(3).is_err());
        assert!(Gate::cx(1, 0).validate(2).is_ok());
        let mut c = Circuit::new(1);
        assert!(c.push(Gate::cx(0, 1)).is_err());
    }

    #[test]
    fn non_unitary_rejected() {
        let o = Complex64::new(1.0, 0.0);
        let z = Complex64::new(0.0, 0.0);
        assert!(Gate::unitary(0, [[o, o], [z, o]]).is_err());
        assert!(Gate::unitary(0, GateKind::H.matrix()).is_ok());
    }

    #[test]
    fn named_matrices_are_unitary() {
        for k in [
            GateKind::H,
            GateKind::X,
            GateKind::Y,
            GateKind::Z,
            GateKind::S,
            GateKind::Sdg,
            GateKind::Rx(0.3),
            GateKind::Ry(-1.1),
            GateKind::Rz(2.0),
            GateKind::Phase(0.7),
        ] {
            assert!(Gate::unitary(0, k.matrix()).is_ok(), "{k:?}");
        }
    }

    #[test]
    fn dump_format() {
        let mut c = Circuit::new(3);
        c.push(Gate::h(0)).unwrap();
        c.push(Gate::rz(2, 0.25).controlled_by(&[1])).unwrap();
        c.push(Gate::cx(0, 1)).unwrap();
        assert_eq!(c.dump(), "qubits 3\nh - 0 -\nrz 0.25 2 1\nx - 1 0\n");
    }
}
