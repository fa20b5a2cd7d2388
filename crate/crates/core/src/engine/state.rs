use num_complex::Complex64;
use rand::Rng;

use super::gate::{Circuit, Gate, GateKind, Matrix2};
use crate::error::{invalid, Error, Result};
use crate::model::{PauliString, PauliSum};

/// Largest register the dense statevector accepts.
pub const MAX_STATE_QUBITS: usize = 26;

/// Tolerance on the imaginary residue of a Hermitian expectation value.
const HERMITIAN_RESIDUE: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dense statevector over `2^n` computational basis states. Qubit 0 is the
/// least significant bit of the basis index.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

fn check_qubits(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 {
        return invalid("state needs at least one qubit");
    }
    if n_qubits > MAX_STATE_QUBITS {
        return Err(Error::ResourceLimit(format!(
            "{n_qubits} qubits exceeds the {MAX_STATE_QUBITS}-qubit statevector limit"
        )));
    }
    Ok(())
}

impl QuantumState {
    /// `|0...0>`.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::from_index(n_qubits, 0)
    }

    pub fn from_index(n_qubits: usize, index: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return invalid(format!("basis index {index} outside {n_qubits}-qubit register"));
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Ok(Self { n_qubits, amps })
    }

    /// Basis state from a bit string written most significant qubit first,
    /// so `"01"` sets qubit 0.
    pub fn basis_state(bits: &str) -> Result<Self> {
        let n = bits.len();
        let mut index = 0usize;
        for ch in bits.chars() {
            index <<= 1;
            match ch {
                '0' => {}
                '1' => index |= 1,
                _ => return Err(Error::Parse(format!("bad bit {ch:?} in {bits:?}"))),
            }
        }
        Self::from_index(n, index)
    }

    /// Takes ownership of an amplitude vector of length `2^n`; it is not
    /// renormalized.
    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_qubits(n_qubits)?;
        if amps.len() != 1usize << n_qubits {
            return invalid(format!(
                "{} amplitudes for a {n_qubits}-qubit register",
                amps.len()
            ));
        }
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Rescales to unit norm; fails on the zero vector.
    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm_sqr();
        if n <= 0.0 || !n.is_finite() {
            return invalid("cannot normalize a zero or non-finite state");
        }
        let s = 1.0 / n.sqrt();
        self.amps.iter_mut().for_each(|a| *a *= s);
        Ok(())
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &QuantumState) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return invalid("register mismatch in inner product");
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn fidelity(&self, other: &QuantumState) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Tensor product `self ⊗ |0...0>` with `extra` fresh qubits placed above
    /// the existing ones.
    pub fn with_ancillas(&self, extra: usize) -> Result<QuantumState> {
        check_qubits(self.n_qubits + extra)?;
        let mut amps = vec![ZERO; 1usize << (self.n_qubits + extra)];
        amps[..self.amps.len()].copy_from_slice(&self.amps);
        Ok(QuantumState {
            n_qubits: self.n_qubits + extra,
            amps,
        })
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        apply_unchecked(&mut self.amps, gate);
        Ok(())
    }

    pub fn run(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.n_qubits() != self.n_qubits {
            return invalid(format!(
                "{}-qubit circuit run on a {}-qubit state",
                circuit.n_qubits(),
                self.n_qubits
            ));
        }
        for g in circuit {
            apply_unchecked(&mut self.amps, g);
        }
        Ok(())
    }

    /// Marginal probability that qubit `q` reads `bit`.
    pub fn prob_of_bit(&self, q: usize, bit: u8) -> Result<f64> {
        if q >= self.n_qubits {
            return invalid(format!("qubit {q} outside register"));
        }
        Ok(prob_of_bit_unchecked(&self.amps, q, bit))
    }

    /// Samples qubit `q` with Born probabilities and collapses the state.
    pub fn measure<R: Rng + ?Sized>(&mut self, q: usize, rng: &mut R) -> Result<u8> {
        let p1 = self.prob_of_bit(q, 1)? / self.norm_sqr();
        let bit = u8::from(rng.random::<f64>() < p1);
        let keep = if bit == 1 { p1 } else { 1.0 - p1 };
        let s = 1.0 / keep.sqrt();
        let mask = 1usize << q;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if ((i & mask) != 0) == (bit == 1) {
                *a *= s;
            } else {
                *a = ZERO;
            }
        }
        Ok(bit)
    }

    /// `<ψ|O|ψ>` for a Hermitian Pauli sum.
    ///
    /// Z-diagonal strings are read off the probabilities directly; others are
    /// rotated into the Z basis on a scratch copy (H for X, S†·H for Y).
    pub fn expectation(&self, observable: &PauliSum) -> Result<f64> {
        if observable.n_qubits() != self.n_qubits {
            return invalid(format!(
                "{}-qubit observable on a {}-qubit state",
                observable.n_qubits(),
                self.n_qubits
            ));
        }
        let mut total = ZERO;
        let mut scratch: Option<Vec<Complex64>> = None;
        for term in observable.terms() {
            let value = if term.is_diagonal() {
                diagonal_expectation(&self.amps, term.z_mask())
            } else {
                let buf = scratch.get_or_insert_with(|| vec![ZERO; self.amps.len()]);
                buf.copy_from_slice(&self.amps);
                rotate_to_z_basis(buf, term);
                diagonal_expectation(buf, term.x_mask() | term.z_mask())
            };
            total += term.coeff() * value;
        }
        let norm = self.norm_sqr();
        if total.im.abs() > HERMITIAN_RESIDUE * norm.max(1.0) {
            return invalid(format!(
                "observable is not Hermitian (imaginary residue {:e})",
                total.im
            ));
        }
        Ok(total.re)
    }
}

fn rotate_to_z_basis(amps: &mut [Complex64], term: &PauliString) {
    for q in 0..term.n_qubits() {
        let x = (term.x_mask() >> q) & 1 == 1;
        let z = (term.z_mask() >> q) & 1 == 1;
        match (x, z) {
            (true, false) => apply_unchecked(amps, &Gate::h(q)),
            (true, true) => {
                apply_unchecked(amps, &Gate::new(GateKind::Sdg, q));
                apply_unchecked(amps, &Gate::h(q));
            }
            _ => {}
        }
    }
}

fn diagonal_expectation(amps: &[Complex64], z_mask: u64) -> f64 {
    let z = z_mask as usize;
    amps.iter()
        .enumerate()
        .map(|(b, a)| {
            if (b & z).count_ones() % 2 == 0 {
                a.norm_sqr()
            } else {
                -a.norm_sqr()
            }
        })
        .sum()
}

pub(crate) fn prob_of_bit_unchecked(amps: &[Complex64], q: usize, bit: u8) -> f64 {
    let mask = 1usize << q;
    let want = if bit == 1 { mask } else { 0 };
    amps.iter()
        .enumerate()
        .filter(|(i, _)| i & mask == want)
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

/// Gate lowered to a kernel with its matrix entries precomputed, for
/// executors that replay one circuit many times.
#[derive(Clone, Copy, Debug)]
pub(crate) struct CompiledGate {
    target: usize,
    cmask: usize,
    kernel: Kernel,
}

#[derive(Clone, Copy, Debug)]
enum Kernel {
    X,
    Z,
    Upper(Complex64),
    Diag(Complex64, Complex64),
    Full(Matrix2),
}

impl CompiledGate {
    pub(crate) fn new(gate: &Gate) -> Self {
        let m = gate.kind.matrix();
        let kernel = match gate.kind {
            GateKind::X => Kernel::X,
            GateKind::Z => Kernel::Z,
            GateKind::Phase(_) | GateKind::S | GateKind::Sdg => Kernel::Upper(m[1][1]),
            GateKind::Rz(_) => Kernel::Diag(m[0][0], m[1][1]),
            _ => Kernel::Full(m),
        };
        Self {
            target: gate.target,
            cmask: gate.control_mask(),
            kernel,
        }
    }

    /// Walks amplitude pairs `(i, i + 2^t)`, skipping pairs whose control
    /// bits are not all set.
    pub(crate) fn apply(&self, amps: &mut [Complex64]) {
        let (t, cm) = (self.target, self.cmask);
        match self.kernel {
            Kernel::X => for_pairs(amps, t, cm, |a, b| std::mem::swap(a, b)),
            Kernel::Z => for_upper(amps, t, cm, |b| *b = -*b),
            Kernel::Upper(d1) => for_upper(amps, t, cm, |b| *b *= d1),
            Kernel::Diag(d0, d1) => for_pairs(amps, t, cm, |a, b| {
                *a *= d0;
                *b *= d1;
            }),
            Kernel::Full(m) => for_pairs(amps, t, cm, |a, b| {
                let (x, y) = (*a, *b);
                *a = m[0][0] * x + m[0][1] * y;
                *b = m[1][0] * x + m[1][1] * y;
            }),
        }
    }
}

pub(crate) fn apply_unchecked(amps: &mut [Complex64], gate: &Gate) {
    CompiledGate::new(gate).apply(amps);
}

#[inline]
fn for_pairs<F>(amps: &mut [Complex64], t: usize, cmask: usize, mut f: F)
where
    F: FnMut(&mut Complex64, &mut Complex64),
{
    let stride = 1usize << t;
    for (k, block) in amps.chunks_exact_mut(2 * stride).enumerate() {
        let base = k * 2 * stride;
        let (lo, hi) = block.split_at_mut(stride);
        if cmask == 0 {
            lo.iter_mut().zip(hi.iter_mut()).for_each(|(a, b)| f(a, b));
        } else {
            for (off, (a, b)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                if (base + off) & cmask == cmask {
                    f(a, b);
                }
            }
        }
    }
}

#[inline]
fn for_upper<F>(amps: &mut [Complex64], t: usize, cmask: usize, mut f: F)
where
    F: FnMut(&mut Complex64),
{
    let stride = 1usize << t;
    for (k, block) in amps.chunks_exact_mut(2 * stride).enumerate() {
        let base = k * 2 * stride + stride;
        let hi = &mut block[stride..];
        if cmask == 0 {
            hi.iter_mut().for_each(&mut f);
        } else {
            for (off, b) in hi.iter_mut().enumerate() {
                if (base + off) & cmask == cmask {
                    f(b);
                }
            }
        }
    }
}
