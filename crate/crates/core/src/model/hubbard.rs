//! Hubbard Hamiltonian on a lattice and its Jordan-Wigner image.
//!
//! Spin orbitals are ordered all-up then all-down: site `i` with spin up is
//! mode `i`, with spin down mode `i + N`. Mode `p` lives on qubit `p`, and a
//! set qubit means an occupied mode.

use super::lattice::Lattice;
use super::pauli::{Pauli, PauliString, PauliSum};
use crate::error::{invalid, Result};

/// Hopping amplitude, on-site repulsion and uniform on-site energy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HubbardParams {
    pub gamma0: f64,
    pub u0: f64,
    pub epsilon: f64,
}

impl HubbardParams {
    pub fn new(gamma0: f64, u0: f64) -> Result<Self> {
        Self::with_epsilon(gamma0, u0, 0.0)
    }

    pub fn with_epsilon(gamma0: f64, u0: f64, epsilon: f64) -> Result<Self> {
        if !(gamma0.is_finite() && u0.is_finite() && epsilon.is_finite()) {
            return invalid("Hubbard parameters must be finite");
        }
        if u0 < 0.0 {
            return invalid(format!("on-site repulsion must be non-negative, got {u0}"));
        }
        Ok(Self {
            gamma0,
            u0,
            epsilon,
        })
    }

    /// Same hopping and on-site energy, repulsion replaced.
    pub fn with_u0(&self, u0: f64) -> Result<Self> {
        Self::with_epsilon(self.gamma0, u0, self.epsilon)
    }
}

impl Default for HubbardParams {
    fn default() -> Self {
        Self {
            gamma0: 1.0,
            u0: 0.0,
            epsilon: 0.0,
        }
    }
}

fn check_mode(p: usize, n_modes: usize) -> Result<()> {
    if p >= n_modes {
        return invalid(format!("mode {p} outside [0, {n_modes})"));
    }
    Ok(())
}

/// `-γ0 (a†_i a_j + a†_j a_i)` mapped to `-γ0/2 (X_i X_j + Y_i Y_j) Z_{i+1}..Z_{j-1}`.
///
/// Both terms are returned even when `γ0 = 0`; pruning is left to merging.
pub fn jw_hopping(i: usize, j: usize, n_spin_orbitals: usize, gamma0: f64) -> Result<PauliSum> {
    check_mode(i, n_spin_orbitals)?;
    check_mode(j, n_spin_orbitals)?;
    if i >= j {
        return invalid(format!("hopping needs i < j, got ({i}, {j})"));
    }
    let mut xx = vec![Pauli::I; n_spin_orbitals];
    let mut yy = vec![Pauli::I; n_spin_orbitals];
    for k in i + 1..j {
        xx[k] = Pauli::Z;
        yy[k] = Pauli::Z;
    }
    xx[i] = Pauli::X;
    xx[j] = Pauli::X;
    yy[i] = Pauli::Y;
    yy[j] = Pauli::Y;
    let c = -gamma0 / 2.0;
    PauliSum::from_terms(
        n_spin_orbitals,
        vec![PauliString::from_ops(&xx, c)?, PauliString::from_ops(&yy, c)?],
    )
}

/// `n_i = (I - Z_i) / 2`.
pub fn jw_number(i: usize, n_spin_orbitals: usize) -> Result<PauliSum> {
    check_mode(i, n_spin_orbitals)?;
    PauliSum::from_terms(
        n_spin_orbitals,
        vec![
            PauliString::identity(n_spin_orbitals, 0.5)?,
            PauliString::from_sparse(n_spin_orbitals, &[(i, Pauli::Z)], -0.5)?,
        ],
    )
}

/// `U0 n_i n_j = U0/4 (I - Z_i - Z_j + Z_i Z_j)`; the identity term is kept.
pub fn jw_interaction(i: usize, j: usize, u0: f64, n_spin_orbitals: usize) -> Result<PauliSum> {
    check_mode(i, n_spin_orbitals)?;
    check_mode(j, n_spin_orbitals)?;
    if i == j {
        return invalid(format!("interaction needs distinct modes, got {i} twice"));
    }
    let n = n_spin_orbitals;
    let q = u0 / 4.0;
    PauliSum::from_terms(
        n,
        vec![
            PauliString::identity(n, q)?,
            PauliString::from_sparse(n, &[(i, Pauli::Z)], -q)?,
            PauliString::from_sparse(n, &[(j, Pauli::Z)], -q)?,
            PauliString::from_sparse(n, &[(i, Pauli::Z), (j, Pauli::Z)], q)?,
        ],
    )
}

/// One structural piece of the Hamiltonian, in qubit (mode) indices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HubbardTerm {
    /// `-amplitude (a†_p a_q + h.c.)`, `p < q`, same spin block.
    Hopping { p: usize, q: usize, amplitude: f64 },
    /// `strength n_p n_q` between the two spin orbitals of one site.
    Interaction { p: usize, q: usize, strength: f64 },
    /// `energy n_p`.
    OnSite { mode: usize, energy: f64 },
}

/// A lattice together with its Hubbard parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct HubbardModel {
    pub lattice: Lattice,
    pub params: HubbardParams,
}

impl HubbardModel {
    pub fn new(lattice: Lattice, params: HubbardParams) -> Self {
        Self { lattice, params }
    }

    pub fn n_sites(&self) -> usize {
        self.lattice.n_sites()
    }

    pub fn n_qubits(&self) -> usize {
        2 * self.lattice.n_sites()
    }

    pub fn up(&self, site: usize) -> usize {
        site
    }

    pub fn down(&self, site: usize) -> usize {
        site + self.lattice.n_sites()
    }

    /// Terms in circuit order: spin-up bonds, spin-down bonds (each ascending
    /// `(i, j)`), on-site interactions by site, then on-site energies.
    /// Zero-weight pieces are omitted.
    pub fn terms(&self) -> Vec<HubbardTerm> {
        let n = self.n_sites();
        let HubbardParams {
            gamma0,
            u0,
            epsilon,
        } = self.params;
        let mut out = Vec::new();
        if gamma0 != 0.0 {
            for offset in [0, n] {
                for &(i, j) in self.lattice.edges() {
                    out.push(HubbardTerm::Hopping {
                        p: i + offset,
                        q: j + offset,
                        amplitude: gamma0,
                    });
                }
            }
        }
        if u0 != 0.0 {
            for i in 0..n {
                out.push(HubbardTerm::Interaction {
                    p: i,
                    q: i + n,
                    strength: u0,
                });
            }
        }
        if epsilon != 0.0 {
            for mode in 0..2 * n {
                out.push(HubbardTerm::OnSite {
                    mode,
                    energy: epsilon,
                });
            }
        }
        out
    }

    pub fn hamiltonian(&self) -> Result<PauliSum> {
        build_hubbard(&self.lattice, &self.params)
    }

    /// The single-particle part (hopping plus on-site energy).
    pub fn noninteracting(&self) -> HubbardModel {
        HubbardModel {
            lattice: self.lattice.clone(),
            params: HubbardParams {
                u0: 0.0,
                ..self.params
            },
        }
    }
}

fn term_sum(term: &HubbardTerm, n_modes: usize) -> Result<PauliSum> {
    match *term {
        HubbardTerm::Hopping { p, q, amplitude } => jw_hopping(p, q, n_modes, amplitude),
        HubbardTerm::Interaction { p, q, strength } => jw_interaction(p, q, strength, n_modes),
        HubbardTerm::OnSite { mode, energy } => Ok(jw_number(mode, n_modes)?.scaled(energy)),
    }
}

/// Qubit Hamiltonian on `2N` qubits: hopping per spin block, one interaction
/// per site between qubits `i` and `i + N`, merged with zero terms dropped.
pub fn build_hubbard(lattice: &Lattice, params: &HubbardParams) -> Result<PauliSum> {
    let model = HubbardModel::new(lattice.clone(), *params);
    let n_modes = model.n_qubits();
    let mut h = PauliSum::new(n_modes)?;
    for term in model.terms() {
        h.extend(&term_sum(&term, n_modes)?)?;
    }
    Ok(h.merged())
}

/// `Σ_p n_p` over all `2N` modes.
pub fn total_number(n_sites: usize) -> Result<PauliSum> {
    let n_modes = 2 * n_sites;
    let mut h = PauliSum::new(n_modes)?;
    for p in 0..n_modes {
        h.extend(&jw_number(p, n_modes)?)?;
    }
    Ok(h.merged())
}

/// Charge density `n_i = n_{i↑} + n_{i↓}`.
pub fn site_density(site: usize, n_sites: usize) -> Result<PauliSum> {
    let n_modes = 2 * n_sites;
    jw_number(site, n_modes)?.plus(&jw_number(site + n_sites, n_modes)?)
}

/// Spin density `S^z_i = n_{i↑} - n_{i↓}` (no factor 1/2).
pub fn site_spin(site: usize, n_sites: usize) -> Result<PauliSum> {
    let n_modes = 2 * n_sites;
    jw_number(site, n_modes)?.plus(&jw_number(site + n_sites, n_modes)?.scaled(-1.0))
}

/// `Σ_i S^z_i`.
pub fn total_spin_z(n_sites: usize) -> Result<PauliSum> {
    let mut h = PauliSum::new(2 * n_sites)?;
    for i in 0..n_sites {
        h.extend(&site_spin(i, n_sites)?)?;
    }
    Ok(h.merged())
}
