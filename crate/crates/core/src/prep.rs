//! Slater-determinant initial states built from tight-binding orbitals.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::circuits::pauli_rotation;
use crate::engine::{Circuit, Gate, QuantumState};
use crate::error::{invalid, Result};
use crate::model::{Lattice, Pauli, PauliString};

/// Eigenpairs of the single-particle hopping matrix, ascending in energy.
/// Column `k` of `orbitals` holds the site amplitudes of orbital `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitalSet {
    pub energies: Vec<f64>,
    pub orbitals: DMatrix<f64>,
}

impl OrbitalSet {
    pub fn n_sites(&self) -> usize {
        self.energies.len()
    }
}

/// Diagonalizes the `N x N` matrix with `-γ0` on every lattice edge.
///
/// Each orbital's sign is fixed so its first non-negligible site amplitude is
/// positive; ties between degenerate orbitals keep the solver's order.
pub fn tight_binding_orbitals(lattice: &Lattice, gamma0: f64) -> OrbitalSet {
    let n = lattice.n_sites();
    let mut h = DMatrix::<f64>::zeros(n, n);
    for &(i, j) in lattice.edges() {
        h[(i, j)] = -gamma0;
        h[(j, i)] = -gamma0;
    }
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let mut orbitals = DMatrix::<f64>::zeros(n, n);
    let mut energies = Vec::with_capacity(n);
    for (k, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        if let Some(first) = col.iter().find(|v| v.abs() > 1e-9) {
            if *first < 0.0 {
                col.neg_mut();
            }
        }
        orbitals.set_column(k, &col);
        energies.push(eig.eigenvalues[src]);
    }
    OrbitalSet { energies, orbitals }
}

/// Which orbitals each spin occupies.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Occupation {
    pub up: Vec<usize>,
    pub down: Vec<usize>,
}

impl Occupation {
    pub fn new(up: Vec<usize>, down: Vec<usize>, n_sites: usize) -> Result<Self> {
        for (name, list) in [("up", &up), ("down", &down)] {
            for (k, &o) in list.iter().enumerate() {
                if o >= n_sites {
                    return invalid(format!("{name} orbital {o} outside [0, {n_sites})"));
                }
                if list[..k].contains(&o) {
                    return invalid(format!("{name} orbital {o} chosen twice"));
                }
            }
        }
        Ok(Self { up, down })
    }

    pub fn n_up(&self) -> usize {
        self.up.len()
    }

    pub fn n_down(&self) -> usize {
        self.down.len()
    }

    pub fn n_occ(&self) -> usize {
        self.up.len() + self.down.len()
    }

    /// Sum of the occupied orbital energies.
    pub fn energy(&self, orbitals: &OrbitalSet) -> f64 {
        self.up
            .iter()
            .chain(&self.down)
            .map(|&k| orbitals.energies[k])
            .sum()
    }
}

/// Lowest orbitals filled pairwise; an odd electron goes to spin up.
pub fn default_occupation(orbitals: &OrbitalSet, n_occ: usize) -> Result<Occupation> {
    let n = orbitals.n_sites();
    if n_occ == 0 || n_occ > 2 * n {
        return invalid(format!("n_occ {n_occ} outside [1, {}]", 2 * n));
    }
    let n_down = n_occ / 2;
    let n_up = n_occ - n_down;
    Occupation::new((0..n_up).collect(), (0..n_down).collect(), n)
}

fn check_fit(occ: &Occupation, orbitals: &OrbitalSet) -> Result<()> {
    let n = orbitals.n_sites();
    Occupation::new(occ.up.clone(), occ.down.clone(), n).map(|_| ())
}

/// All `k`-subsets of `0..n` as ascending bitmasks.
pub(crate) fn combinations(n: usize, k: usize) -> Vec<usize> {
    (0usize..1 << n)
        .filter(|m| m.count_ones() as usize == k)
        .collect()
}

fn minor_det(orbitals: &DMatrix<f64>, sites_mask: usize, chosen: &[usize]) -> f64 {
    let k = chosen.len();
    if k == 0 {
        return 1.0;
    }
    let rows: Vec<usize> = (0..orbitals.nrows()).filter(|i| sites_mask >> i & 1 == 1).collect();
    DMatrix::from_fn(k, k, |r, c| orbitals[(rows[r], chosen[c])]).determinant()
}

/// The Slater determinant `∏ c†_up ∏ c†_down |vac>` on `2N` qubits, built
/// amplitude by amplitude from determinant minors.
pub fn prepare_slater(occ: &Occupation, orbitals: &OrbitalSet) -> Result<QuantumState> {
    check_fit(occ, orbitals)?;
    let n = orbitals.n_sites();
    let mut state = QuantumState::zero(2 * n)?;
    let amps = state.amplitudes_mut();
    amps[0] = Complex64::new(0.0, 0.0);
    let ups: Vec<(usize, f64)> = combinations(n, occ.n_up())
        .into_iter()
        .map(|m| (m, minor_det(&orbitals.orbitals, m, &occ.up)))
        .collect();
    let downs: Vec<(usize, f64)> = combinations(n, occ.n_down())
        .into_iter()
        .map(|m| (m, minor_det(&orbitals.orbitals, m, &occ.down)))
        .collect();
    for &(um, ua) in &ups {
        for &(dm, da) in &downs {
            amps[um | dm << n] = Complex64::new(ua * da, 0.0);
        }
    }
    state.normalize()?;
    Ok(state)
}

/// Adjacent-column rotations `(p, θ)` reducing the rows of `v` to unit
/// vectors; applying them in reverse to `|1..10..0>` gives the determinant.
fn givens_sequence(v: &mut DMatrix<f64>) -> Vec<(usize, f64)> {
    let (rows, cols) = v.shape();
    let mut out = Vec::new();
    for r in 0..rows {
        for p in (r..cols - 1).rev() {
            let (x, y) = (v[(r, p)], v[(r, p + 1)]);
            if y.abs() < 1e-14 {
                continue;
            }
            let theta = y.atan2(x);
            let (s, c) = theta.sin_cos();
            for i in 0..rows {
                let (a, b) = (v[(i, p)], v[(i, p + 1)]);
                v[(i, p)] = c * a + s * b;
                v[(i, p + 1)] = -s * a + c * b;
            }
            out.push((p, theta));
        }
    }
    out
}

/// Mode rotation `a†_p -> cos θ a†_p + sin θ a†_{p+1}` on adjacent qubits.
fn givens_gates(n_qubits: usize, p: usize, theta: f64) -> Result<Circuit> {
    let xy = PauliString::from_sparse(n_qubits, &[(p, Pauli::X), (p + 1, Pauli::Y)], 1.0)?;
    let yx = PauliString::from_sparse(n_qubits, &[(p, Pauli::Y), (p + 1, Pauli::X)], 1.0)?;
    let mut c = pauli_rotation(n_qubits, &xy, theta, &[])?;
    c.append(&pauli_rotation(n_qubits, &yx, -theta, &[])?)?;
    Ok(c)
}

/// Gate-level preparation of the same determinant as [`prepare_slater`]
/// (equal up to a global sign): X gates fill the leading modes of each spin
/// block, then Givens rotations spread them over the chosen orbitals.
pub fn slater_circuit(occ: &Occupation, orbitals: &OrbitalSet) -> Result<Circuit> {
    check_fit(occ, orbitals)?;
    let n = orbitals.n_sites();
    let mut c = Circuit::new(2 * n);
    for (offset, chosen) in [(0, &occ.up), (n, &occ.down)] {
        if chosen.is_empty() {
            continue;
        }
        for k in 0..chosen.len() {
            c.push(Gate::x(offset + k))?;
        }
        let mut v = DMatrix::from_fn(chosen.len(), n, |r, s| orbitals.orbitals[(s, chosen[r])]);
        for (p, theta) in givens_sequence(&mut v).into_iter().rev() {
            c.append(&givens_gates(2 * n, offset + p, theta)?)?;
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        build_hubbard, chain, hexagon6, jw_number, ring, HubbardParams, PauliSum,
    };

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn orbital_spectra() {
        let hex = tight_binding_orbitals(&hexagon6(), 1.0);
        let ring_spec: Vec<f64> = {
            let mut e: Vec<f64> = (0..6)
                .map(|k| -2.0 * (2.0 * std::f64::consts::PI * k as f64 / 6.0).cos())
                .collect();
            e.sort_by(f64::total_cmp);
            e
        };
        assert_close(&hex.energies, &ring_spec, 1e-12);
        assert_close(&hex.energies, &[-2.0, -1.0, -1.0, 1.0, 1.0, 2.0], 1e-12);
        let c2 = tight_binding_orbitals(&chain(2).unwrap(), 1.0);
        assert_close(&c2.energies, &[-1.0, 1.0], 1e-12);
        let o = &hex.orbitals;
        assert!((o.transpose() * o - DMatrix::<f64>::identity(6, 6)).abs().max() < 1e-9);
    }

    #[test]
    fn default_fillings() {
        let hex = tight_binding_orbitals(&hexagon6(), 1.0);
        let six = default_occupation(&hex, 6).unwrap();
        assert_eq!((six.up.as_slice(), six.down.as_slice()), (&[0, 1, 2][..], &[0, 1, 2][..]));
        let three = default_occupation(&hex, 3).unwrap();
        assert_eq!((three.up.as_slice(), three.down.as_slice()), (&[0, 1][..], &[0][..]));
        assert!(default_occupation(&hex, 13).is_err());
        assert!(default_occupation(&hex, 0).is_err());
        assert!(Occupation::new(vec![1, 1], vec![], 6).is_err());
    }

    #[test]
    fn bonding_orbital_and_full_band() {
        let c2 = tight_binding_orbitals(&chain(2).unwrap(), 1.0);
        let occ = Occupation::new(vec![0], vec![], 2).unwrap();
        let s = prepare_slater(&occ, &c2).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitudes()[1].re.abs() - h).abs() < 1e-12);
        assert!((s.amplitudes()[2].re.abs() - h).abs() < 1e-12);

        let hex = tight_binding_orbitals(&hexagon6(), 1.0);
        let full = prepare_slater(&default_occupation(&hex, 12).unwrap(), &hex).unwrap();
        assert!((full.amplitudes()[4095].norm() - 1.0).abs() < 1e-12);
    }

    fn number_in_block(n: usize, offset: usize) -> PauliSum {
        let mut s = PauliSum::new(2 * n).unwrap();
        for i in 0..n {
            s.extend(&jw_number(offset + i, 2 * n).unwrap()).unwrap();
        }
        s.merged()
    }

    #[test]
    fn slater_is_free_eigenstate_with_sharp_numbers() {
        for lat in [hexagon6(), chain(3).unwrap(), ring(4).unwrap()] {
            let n = lat.n_sites();
            let orb = tight_binding_orbitals(&lat, 1.0);
            let h = build_hubbard(&lat, &HubbardParams::new(1.0, 0.0).unwrap()).unwrap();
            let h2 = h.mul(&h).unwrap();
            for n_occ in 1..=2 * n {
                let occ = default_occupation(&orb, n_occ).unwrap();
                let s = prepare_slater(&occ, &orb).unwrap();
                let e = s.expectation(&h).unwrap();
                assert!((e - occ.energy(&orb)).abs() < 1e-8, "{lat} {n_occ}");
                assert!(s.expectation(&h2).unwrap() - e * e < 1e-8);
                let nu = s.expectation(&number_in_block(n, 0)).unwrap();
                let nd = s.expectation(&number_in_block(n, n)).unwrap();
                assert!((nu - occ.n_up() as f64).abs() < 1e-9);
                assert!((nd - occ.n_down() as f64).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn givens_circuit_matches_direct_amplitudes() {
        for lat in [chain(3).unwrap(), hexagon6(), ring(5).unwrap()] {
            let n = lat.n_sites();
            let orb = tight_binding_orbitals(&lat, 1.0);
            let mut cases: Vec<Occupation> = (1..=2 * n)
                .map(|k| default_occupation(&orb, k).unwrap())
                .collect();
            cases.push(Occupation::new(vec![1, 2], vec![0, n - 1], n).unwrap());
            for occ in cases {
                let direct = prepare_slater(&occ, &orb).unwrap();
                let mut via = QuantumState::zero(2 * n).unwrap();
                via.run(&slater_circuit(&occ, &orb).unwrap()).unwrap();
                let f = direct.fidelity(&via).unwrap();
                assert!((f - 1.0).abs() < 1e-8, "{lat} {occ:?}: {f}");
            }
        }
    }
}
