//! Pauli strings and weighted sums of Pauli strings.
//!
//! A string over `n` qubits is stored as a pair of bitmasks `(x, z)` with
//! qubit `q` carrying `X` when only bit `q` of `x` is set, `Z` when only bit
//! `q` of `z` is set and `Y` when both are. Qubit 0 is the least significant
//! bit of a basis index, matching the statevector engine.

use std::collections::HashMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

/// Coefficients with magnitude below this are dropped when merging.
pub const PRUNE_TOLERANCE: f64 = 1e-12;

/// Largest register for which [`matrix_of`] builds a dense matrix.
pub const MAX_DENSE_QUBITS: usize = 14;

/// Hard limit imposed by the bitmask representation.
pub const MAX_PAULI_QUBITS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// `i^k` for `k` taken mod 4.
fn i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// A tensor product of single-qubit Paulis with a complex weight.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliString {
    n_qubits: usize,
    x_mask: u64,
    z_mask: u64,
    coeff: Complex64,
}

impl PauliString {
    pub fn identity(n_qubits: usize, coeff: impl Into<Complex64>) -> Result<Self> {
        check_register(n_qubits)?;
        Ok(Self {
            n_qubits,
            x_mask: 0,
            z_mask: 0,
            coeff: coeff.into(),
        })
    }

    pub fn from_ops(ops: &[Pauli], coeff: impl Into<Complex64>) -> Result<Self> {
        check_register(ops.len())?;
        let mut x_mask = 0u64;
        let mut z_mask = 0u64;
        for (q, op) in ops.iter().enumerate() {
            let (x, z) = op.bits();
            x_mask |= (x as u64) << q;
            z_mask |= (z as u64) << q;
        }
        Ok(Self {
            n_qubits: ops.len(),
            x_mask,
            z_mask,
            coeff: coeff.into(),
        })
    }

    /// Parses a label such as `"XIZY"`; character `k` acts on qubit `k`.
    pub fn parse(label: &str, coeff: impl Into<Complex64>) -> Result<Self> {
        let ops = label
            .chars()
            .map(|c| match c {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(Error::Parse(format!("unknown Pauli symbol {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_ops(&ops, coeff)
    }

    /// Builds a string from `(qubit, op)` pairs; unlisted qubits carry `I`.
    pub fn from_sparse(
        n_qubits: usize,
        entries: &[(usize, Pauli)],
        coeff: impl Into<Complex64>,
    ) -> Result<Self> {
        check_register(n_qubits)?;
        let mut ops = vec![Pauli::I; n_qubits];
        for &(q, op) in entries {
            if q >= n_qubits {
                return invalid(format!("qubit {q} outside register of {n_qubits}"));
            }
            ops[q] = op;
        }
        Self::from_ops(&ops, coeff)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn coeff(&self) -> Complex64 {
        self.coeff
    }

    pub fn x_mask(&self) -> u64 {
        self.x_mask
    }

    pub fn z_mask(&self) -> u64 {
        self.z_mask
    }

    pub fn with_coeff(&self, coeff: impl Into<Complex64>) -> Self {
        Self {
            coeff: coeff.into(),
            ..self.clone()
        }
    }

    pub fn op(&self, q: usize) -> Pauli {
        Pauli::from_bits((self.x_mask >> q) & 1 == 1, (self.z_mask >> q) & 1 == 1)
    }

    pub fn ops(&self) -> Vec<Pauli> {
        (0..self.n_qubits).map(|q| self.op(q)).collect()
    }

    pub fn label(&self) -> String {
        self.ops().into_iter().map(Pauli::symbol).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.x_mask == 0 && self.z_mask == 0
    }

    /// True when the string only contains `I` and `Z`.
    pub fn is_diagonal(&self) -> bool {
        self.x_mask == 0
    }

    /// Qubits on which the string acts non-trivially, ascending.
    pub fn support(&self) -> Vec<usize> {
        let m = self.x_mask | self.z_mask;
        (0..self.n_qubits).filter(|q| (m >> q) & 1 == 1).collect()
    }

    fn key(&self) -> (u64, u64) {
        (self.x_mask, self.z_mask)
    }

    /// Action of the bare operator (weight excluded) on basis state `b`:
    /// returns `(b', phase)` with `P|b> = phase |b'>`.
    #[inline]
    pub fn basis_action(&self, b: usize) -> (usize, Complex64) {
        let n_y = (self.x_mask & self.z_mask).count_ones();
        let n_minus = (b as u64 & self.z_mask).count_ones();
        (b ^ self.x_mask as usize, i_pow(n_y + 2 * n_minus))
    }

    /// Operator product `self * other`, including weights.
    pub fn mul(&self, other: &PauliString) -> Result<PauliString> {
        if self.n_qubits != other.n_qubits {
            return invalid(format!(
                "register mismatch: {} vs {} qubits",
                self.n_qubits, other.n_qubits
            ));
        }
        // P = i^{x.z} X^x Z^z per qubit; commuting Z^z1 past X^x2 costs (-1)^{z1.x2}.
        let (x1, z1, x2, z2) = (self.x_mask, self.z_mask, other.x_mask, other.z_mask);
        let x = x1 ^ x2;
        let z = z1 ^ z2;
        let k = (x1 & z1).count_ones() + (x2 & z2).count_ones() + 2 * (z1 & x2).count_ones();
        let c = (x & z).count_ones();
        let phase = i_pow((k + 4 * 64 - c) % 4);
        Ok(PauliString {
            n_qubits: self.n_qubits,
            x_mask: x,
            z_mask: z,
            coeff: self.coeff * other.coeff * phase,
        })
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let anti = (self.x_mask & other.z_mask).count_ones() + (self.z_mask & other.x_mask).count_ones();
        anti % 2 == 0
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:+}{:+}i)*{}", self.coeff.re, self.coeff.im, self.label())
    }
}

fn check_register(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 {
        return invalid("register must contain at least one qubit");
    }
    if n_qubits > MAX_PAULI_QUBITS {
        return Err(Error::ResourceLimit(format!(
            "{n_qubits} qubits exceeds the {MAX_PAULI_QUBITS}-qubit Pauli representation"
        )));
    }
    Ok(())
}

/// Sum of non-identity weights, with the identity weight kept apart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OneNorm {
    /// Σ |c| over non-identity terms.
    pub bound: f64,
    /// Real part of the identity coefficient (signed).
    pub identity: f64,
}

impl OneNorm {
    pub fn identity_abs(&self) -> f64 {
        self.identity.abs()
    }
}

/// A weighted sum of Pauli strings over a common register.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: Vec<PauliString>,
}

impl PauliSum {
    pub fn new(n_qubits: usize) -> Result<Self> {
        check_register(n_qubits)?;
        Ok(Self {
            n_qubits,
            terms: Vec::new(),
        })
    }

    pub fn from_terms(n_qubits: usize, terms: Vec<PauliString>) -> Result<Self> {
        let mut sum = Self::new(n_qubits)?;
        for t in terms {
            sum.push(t)?;
        }
        Ok(sum)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[PauliString] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn push(&mut self, term: PauliString) -> Result<()> {
        if term.n_qubits != self.n_qubits {
            return invalid(format!(
                "term on {} qubits added to a {}-qubit sum",
                term.n_qubits, self.n_qubits
            ));
        }
        self.terms.push(term);
        Ok(())
    }

    pub fn extend(&mut self, other: &PauliSum) -> Result<()> {
        for t in &other.terms {
            self.push(t.clone())?;
        }
        Ok(())
    }

    pub fn scaled(&self, factor: impl Into<Complex64>) -> PauliSum {
        let f = factor.into();
        PauliSum {
            n_qubits: self.n_qubits,
            terms: self.terms.iter().map(|t| t.with_coeff(t.coeff * f)).collect(),
        }
    }

    /// Sum of two operators, merged.
    pub fn plus(&self, other: &PauliSum) -> Result<PauliSum> {
        let mut out = self.clone();
        out.extend(other)?;
        Ok(out.merged())
    }

    /// Operator product, merged.
    pub fn mul(&self, other: &PauliSum) -> Result<PauliSum> {
        if self.n_qubits != other.n_qubits {
            return invalid("register mismatch in PauliSum product");
        }
        let mut out = PauliSum::new(self.n_qubits)?;
        for a in &self.terms {
            for b in &other.terms {
                out.terms.push(a.mul(b)?);
            }
        }
        Ok(out.merged())
    }

    /// Combines terms with identical Pauli keys (first-appearance order) and
    /// drops those whose weight falls below [`PRUNE_TOLERANCE`].
    pub fn merged(&self) -> PauliSum {
        let mut index: HashMap<(u64, u64), usize> = HashMap::new();
        let mut acc: Vec<PauliString> = Vec::new();
        for t in &self.terms {
            match index.get(&t.key()) {
                Some(&k) => acc[k].coeff += t.coeff,
                None => {
                    index.insert(t.key(), acc.len());
                    acc.push(t.clone());
                }
            }
        }
        acc.retain(|t| t.coeff.norm() >= PRUNE_TOLERANCE);
        PauliSum {
            n_qubits: self.n_qubits,
            terms: acc,
        }
    }

    /// True when every weight is real within `tol` (assumes merged input).
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms.iter().all(|t| t.coeff.im.abs() <= tol)
    }

    pub fn identity_coefficient(&self) -> Complex64 {
        self.terms
            .iter()
            .filter(|t| t.is_identity())
            .map(|t| t.coeff)
            .sum()
    }

    pub fn one_norm(&self) -> OneNorm {
        one_norm(self)
    }

    pub fn is_diagonal(&self) -> bool {
        self.terms.iter().all(PauliString::is_diagonal)
    }

    /// `H |ψ>` for an amplitude vector of length `2^n`.
    pub fn apply_to(&self, amps: &[Complex64]) -> Result<Vec<Complex64>> {
        if amps.len() != 1usize << self.n_qubits {
            return invalid(format!(
                "vector of length {} does not match {} qubits",
                amps.len(),
                self.n_qubits
            ));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); amps.len()];
        for t in &self.terms {
            for (b, &a) in amps.iter().enumerate() {
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let (b2, ph) = t.basis_action(b);
                out[b2] += t.coeff * ph * a;
            }
        }
        Ok(out)
    }

    /// Matrix element block restricted to the given basis indices:
    /// `M[r][c] = <basis[r]| H |basis[c]>`.
    pub fn restricted_matrix(&self, basis: &[usize]) -> DMatrix<Complex64> {
        let pos: HashMap<usize, usize> = basis.iter().enumerate().map(|(k, &b)| (b, k)).collect();
        let mut m = DMatrix::zeros(basis.len(), basis.len());
        for (c, &b) in basis.iter().enumerate() {
            for t in &self.terms {
                let (b2, ph) = t.basis_action(b);
                if let Some(&r) = pos.get(&b2) {
                    m[(r, c)] += t.coeff * ph;
                }
            }
        }
        m
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, t) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

/// Σ|c| over the non-identity terms; the signed identity weight is reported
/// separately. Expects merged input.
pub fn one_norm(h: &PauliSum) -> OneNorm {
    let mut bound = 0.0;
    let mut identity = 0.0;
    for t in &h.terms {
        if t.is_identity() {
            identity += t.coeff.re;
        } else {
            bound += t.coeff.norm();
        }
    }
    OneNorm { bound, identity }
}

/// Dense `2^n x 2^n` matrix of a Pauli sum.
pub fn matrix_of(h: &PauliSum) -> Result<DMatrix<Complex64>> {
    if h.n_qubits > MAX_DENSE_QUBITS {
        return Err(Error::ResourceLimit(format!(
            "dense matrix of {} qubits exceeds the {MAX_DENSE_QUBITS}-qubit limit",
            h.n_qubits
        )));
    }
    let dim = 1usize << h.n_qubits;
    let mut m = DMatrix::zeros(dim, dim);
    for t in &h.terms {
        for b in 0..dim {
            let (b2, ph) = t.basis_action(b);
            m[(b2, b)] += t.coeff * ph;
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn dense_1q(p: Pauli) -> [[Complex64; 2]; 2] {
        let z = c(0.0);
        let o = c(1.0);
        let i = Complex64::new(0.0, 1.0);
        match p {
            Pauli::I => [[o, z], [z, o]],
            Pauli::X => [[z, o], [o, z]],
            Pauli::Y => [[z, -i], [i, z]],
            Pauli::Z => [[o, z], [z, -o]],
        }
    }

    /// Kronecker product built factor by factor, qubit 0 least significant.
    fn kron_reference(s: &PauliString) -> DMatrix<Complex64> {
        let n = s.n_qubits();
        let dim = 1 << n;
        DMatrix::from_fn(dim, dim, |r, col| {
            let mut v = s.coeff();
            for q in 0..n {
                let m = dense_1q(s.op(q));
                v *= m[(r >> q) & 1][(col >> q) & 1];
            }
            v
        })
    }

    #[test]
    fn z_and_x_matrices() {
        let z = PauliSum::from_terms(1, vec![PauliString::parse("Z", 1.0).unwrap()]).unwrap();
        let m = matrix_of(&z).unwrap();
        assert_eq!(m[(0, 0)], c(1.0));
        assert_eq!(m[(1, 1)], c(-1.0));
        assert_eq!(m[(0, 1)], c(0.0));

        let x = PauliSum::from_terms(1, vec![PauliString::parse("X", 1.0).unwrap()]).unwrap();
        let m = matrix_of(&x).unwrap();
        assert_eq!(m[(0, 1)], c(1.0));
        assert_eq!(m[(1, 0)], c(1.0));
        assert_eq!(m[(0, 0)], c(0.0));
    }

    #[test]
    fn matrix_matches_kronecker_for_all_two_qubit_strings() {
        for a in [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z] {
            for b in [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z] {
                for d in [Pauli::I, Pauli::Y] {
                    let s = PauliString::from_ops(&[a, b, d], Complex64::new(0.3, -0.2)).unwrap();
                    let h = PauliSum::from_terms(3, vec![s.clone()]).unwrap();
                    let diff = matrix_of(&h).unwrap() - kron_reference(&s);
                    assert!(diff.norm() < 1e-14, "{}", s.label());
                }
            }
        }
    }

    #[test]
    fn string_product_matches_matrix_product() {
        let labels = ["XYZ", "YYI", "ZXY", "IZX", "YXX"];
        for a in labels {
            for b in labels {
                let pa = PauliString::parse(a, 1.0).unwrap();
                let pb = PauliString::parse(b, Complex64::new(0.0, 2.0)).unwrap();
                let prod = pa.mul(&pb).unwrap();
                let lhs = kron_reference(&prod);
                let rhs = kron_reference(&pa) * kron_reference(&pb);
                assert!((lhs - rhs).norm() < 1e-12, "{a} * {b}");
                let commute = (kron_reference(&pa) * kron_reference(&pb)
                    - kron_reference(&pb) * kron_reference(&pa))
                .norm()
                    < 1e-12;
                assert_eq!(pa.commutes_with(&pb), commute, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn merge_combines_and_prunes() {
        let h = PauliSum::from_terms(
            2,
            vec![
                PauliString::parse("XX", 0.5).unwrap(),
                PauliString::parse("ZI", 1.0).unwrap(),
                PauliString::parse("XX", -0.5).unwrap(),
                PauliString::parse("ZI", 1e-13).unwrap(),
            ],
        )
        .unwrap()
        .merged();
        assert_eq!(h.len(), 1);
        assert_eq!(h.terms()[0].label(), "ZI");
    }

    #[test]
    fn one_norm_examples() {
        let h = PauliSum::from_terms(
            2,
            vec![
                PauliString::parse("XX", 0.5).unwrap(),
                PauliString::parse("YY", -0.5).unwrap(),
            ],
        )
        .unwrap();
        assert_eq!(one_norm(&h).bound, 1.0);
        assert_eq!(one_norm(&PauliSum::new(3).unwrap()).bound, 0.0);

        let with_id = PauliSum::from_terms(
            1,
            vec![
                PauliString::parse("I", -2.0).unwrap(),
                PauliString::parse("Z", 0.25).unwrap(),
            ],
        )
        .unwrap();
        let n = one_norm(&with_id);
        assert_eq!(n.bound, 0.25);
        assert_eq!(n.identity, -2.0);
        assert_eq!(n.identity_abs(), 2.0);
    }

    #[test]
    fn dense_guard() {
        let h = PauliSum::new(MAX_DENSE_QUBITS + 1).unwrap();
        assert!(matches!(matrix_of(&h), Err(Error::ResourceLimit(_))));
    }

    #[test]
    fn mismatched_terms_rejected() {
        let mut h = PauliSum::new(2).unwrap();
        assert!(h.push(PauliString::parse("XYZ", 1.0).unwrap()).is_err());
        assert!(PauliString::parse("XQ", 1.0).is_err());
        assert!(PauliSum::new(0).is_err());
    }
}
