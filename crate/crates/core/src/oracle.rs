//! Exact diagonalization in fixed `(n_up, n_down)` sectors.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::QuantumState;
use crate::error::{invalid, Error, Result};
use crate::model::{HubbardModel, HubbardParams, Lattice};
use crate::observables::{Moments, ObservableReport};
use crate::prep::combinations;

/// Largest sector the oracle will build.
pub const MAX_SECTOR_DIM: usize = 1 << 20;
/// Sectors up to this size are diagonalized densely; larger ones by Lanczos.
pub const DENSE_DIM_LIMIT: usize = 1000;
/// Levels closer than this (relative to `max(1, |E0|)`) count as degenerate.
pub const DEGENERACY_TOLERANCE: f64 = 1e-8;
/// Sectors of one filling whose ground energies agree this closely tie.
const SECTOR_TIE_TOLERANCE: f64 = 1e-9;
const MAX_SITES: usize = 16;

/// Fixed-`(n_up, n_down)` basis of `(up_mask, down_mask)` pairs, sorted
/// ascending by up mask then down mask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sector {
    n_sites: usize,
    n_up: usize,
    n_down: usize,
    ups: Vec<usize>,
    downs: Vec<usize>,
    rank: Vec<usize>,
}

impl Sector {
    pub fn new(n_sites: usize, n_up: usize, n_down: usize) -> Result<Self> {
        if n_sites == 0 || n_sites > MAX_SITES {
            return Err(Error::ResourceLimit(format!(
                "{n_sites} sites outside the oracle's [1, {MAX_SITES}] range"
            )));
        }
        if n_up > n_sites || n_down > n_sites {
            return invalid(format!("sector ({n_up}, {n_down}) does not fit {n_sites} sites"));
        }
        let ups = combinations(n_sites, n_up);
        let downs = combinations(n_sites, n_down);
        if ups.len() * downs.len() > MAX_SECTOR_DIM {
            return Err(Error::ResourceLimit(format!(
                "sector dimension {} exceeds {MAX_SECTOR_DIM}",
                ups.len() * downs.len()
            )));
        }
        let mut rank = vec![usize::MAX; 1 << n_sites];
        for list in [&ups, &downs] {
            for (k, &m) in list.iter().enumerate() {
                rank[m] = k;
            }
        }
        Ok(Self {
            n_sites,
            n_up,
            n_down,
            ups,
            downs,
            rank,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_up(&self) -> usize {
        self.n_up
    }

    pub fn n_down(&self) -> usize {
        self.n_down
    }

    pub fn dim(&self) -> usize {
        self.ups.len() * self.downs.len()
    }

    /// `(up_mask, down_mask)` of basis state `k`.
    pub fn config(&self, k: usize) -> (usize, usize) {
        let nd = self.downs.len();
        (self.ups[k / nd], self.downs[k % nd])
    }

    pub fn index_of(&self, up: usize, down: usize) -> Option<usize> {
        if up.count_ones() as usize != self.n_up || down.count_ones() as usize != self.n_down {
            return None;
        }
        Some(self.rank[up] * self.downs.len() + self.rank[down])
    }

    /// Full-register basis index `up | down << N`.
    pub fn qubit_index(&self, k: usize) -> usize {
        let (u, d) = self.config(k);
        u | d << self.n_sites
    }

    pub fn basis(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.dim()).map(|k| self.config(k))
    }
}

/// Real symmetric sector Hamiltonian in row-compressed form.
#[derive(Clone, Debug)]
pub struct SectorMatrix {
    diag: Vec<f64>,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SectorMatrix {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = self.diag[i] * x[i];
            for &(j, v) in &self.rows[i] {
                acc += v * x[j];
            }
            *yi = acc;
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            for &(j, v) in &self.rows[i] {
                m[(i, j)] += v;
            }
        }
        m
    }

    /// Gershgorin bound on the spectral radius.
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.diag[i].abs() + self.rows[i].iter().map(|e| e.1.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Hops of one electron across `(i, j)` in a spin mask, with the fermionic
/// sign from occupied modes strictly between.
fn hops(mask: usize, edges: &[(usize, usize)]) -> impl Iterator<Item = (usize, f64)> + '_ {
    edges.iter().filter_map(move |&(i, j)| {
        let (bi, bj) = (mask >> i & 1, mask >> j & 1);
        if bi == bj {
            return None;
        }
        let between = mask & ((1usize << j) - 1) & !((1usize << (i + 1)) - 1);
        let sign = if between.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        Some((mask ^ (1 << i) ^ (1 << j), sign))
    })
}

pub fn sector_hamiltonian(
    lattice: &Lattice,
    params: &HubbardParams,
    sector: &Sector,
) -> Result<SectorMatrix> {
    if lattice.n_sites() != sector.n_sites() {
        return invalid("sector and lattice disagree on the site count");
    }
    let edges = lattice.edges();
    let n_e = (sector.n_up + sector.n_down) as f64;
    let mut diag = Vec::with_capacity(sector.dim());
    let mut rows = Vec::with_capacity(sector.dim());
    for (u, d) in sector.basis() {
        diag.push(params.u0 * (u & d).count_ones() as f64 + params.epsilon * n_e);
        let mut row = Vec::new();
        if params.gamma0 != 0.0 {
            for (u2, s) in hops(u, edges) {
                row.push((sector.index_of(u2, d).expect("hop stays in sector"), -params.gamma0 * s));
            }
            for (d2, s) in hops(d, edges) {
                row.push((sector.index_of(u, d2).expect("hop stays in sector"), -params.gamma0 * s));
            }
        }
        row.sort_unstable_by_key(|e| e.0);
        rows.push(row);
    }
    Ok(SectorMatrix { diag, rows })
}

/// Lowest part of a sector spectrum.
#[derive(Clone, Debug)]
pub struct EigenResult {
    pub sector: Sector,
    pub ground_energy: f64,
    /// `E1 - E0`, zero when the ground level is degenerate; infinite for a
    /// one-state sector.
    pub gap: f64,
    /// Gap from the ground level to the first level above its degenerate
    /// manifold; infinite if no such level was resolved.
    pub manifold_gap: f64,
    /// Orthonormal basis of the degenerate ground manifold.
    pub ground_space: Vec<DVector<f64>>,
    /// Lowest eigenvalues found, ascending.
    pub energies: Vec<f64>,
}

impl EigenResult {
    pub fn ground_vector(&self) -> &DVector<f64> {
        &self.ground_space[0]
    }

    pub fn degeneracy(&self) -> usize {
        self.ground_space.len()
    }

    pub fn n_occ(&self) -> usize {
        self.sector.n_up + self.sector.n_down
    }
}

fn degenerate(a: f64, b: f64) -> bool {
    (a - b).abs() <= DEGENERACY_TOLERANCE * a.abs().max(1.0)
}

fn assemble(sector: Sector, energies: Vec<f64>, vectors: Vec<DVector<f64>>) -> EigenResult {
    let e0 = energies[0];
    let deg = energies.iter().take_while(|&&e| degenerate(e, e0)).count();
    let gap = energies.get(1).map_or(f64::INFINITY, |e| e - e0);
    let manifold_gap = energies.get(deg).map_or(f64::INFINITY, |e| e - e0);
    EigenResult {
        sector,
        ground_energy: e0,
        gap,
        manifold_gap,
        ground_space: vectors.into_iter().take(deg).collect(),
        energies,
    }
}

fn dense_solve(sector: Sector, h: &SectorMatrix) -> EigenResult {
    let eig = h.to_dense().symmetric_eigen();
    let mut order: Vec<usize> = (0..h.dim()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let energies = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = order
        .iter()
        .map(|&k| eig.eigenvectors.column(k).into_owned())
        .collect();
    assemble(sector, energies, vectors)
}

fn orthogonalize(v: &mut DVector<f64>, against: &[DVector<f64>]) {
    for _ in 0..2 {
        for q in against {
            let c = q.dot(v);
            v.axpy(-c, q, 1.0);
        }
    }
}

/// Lowest eigenpair orthogonal to `deflate`, by restarted Lanczos with full
/// reorthogonalization.
fn lanczos_lowest(h: &SectorMatrix, deflate: &[DVector<f64>], seed: u64) -> (f64, DVector<f64>) {
    const KRYLOV: usize = 80;
    const RESTARTS: usize = 50;
    let n = h.dim();
    let tol = 1e-11 * h.norm_bound().max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut start = DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
    let mut best = (f64::INFINITY, start.clone());
    let mut w = vec![0.0; n];
    for _ in 0..RESTARTS {
        orthogonalize(&mut start, deflate);
        let norm = start.norm();
        if norm < 1e-300 {
            break;
        }
        let mut basis: Vec<DVector<f64>> = vec![start / norm];
        let (mut alpha, mut beta) = (Vec::new(), Vec::new());
        let mut ritz = (f64::INFINITY, DVector::zeros(n), f64::INFINITY);
        for k in 0..KRYLOV.min(n) {
            h.apply(basis[k].as_slice(), &mut w);
            let mut v = DVector::from_column_slice(&w);
            let a = basis[k].dot(&v);
            alpha.push(a);
            orthogonalize(&mut v, deflate);
            orthogonalize(&mut v, &basis);
            let b = v.norm();
            let m = alpha.len();
            let t = DMatrix::from_fn(m, m, |i, j| {
                if i == j {
                    alpha[i]
                } else if i + 1 == j {
                    beta[i]
                } else if j + 1 == i {
                    beta[j]
                } else {
                    0.0
                }
            });
            let eig = t.symmetric_eigen();
            let lo = eig.eigenvalues.argmin().0;
            let y = eig.eigenvectors.column(lo);
            let resid = (b * y[m - 1]).abs();
            if resid < tol || b < 1e-14 || k + 1 == KRYLOV.min(n) {
                let mut x = DVector::zeros(n);
                for (q, c) in basis.iter().zip(y.iter()) {
                    x.axpy(*c, q, 1.0);
                }
                ritz = (eig.eigenvalues[lo], x, resid);
                break;
            }
            beta.push(b);
            basis.push(v / b);
        }
        let (e, x, resid) = ritz;
        let x = x.normalize();
        if e < best.0 {
            best = (e, x.clone());
        }
        if resid < tol {
            return (e, x);
        }
        start = x;
    }
    best
}

fn lanczos_solve(sector: Sector, h: &SectorMatrix) -> EigenResult {
    const MAX_LEVELS: usize = 12;
    let mut energies = Vec::new();
    let mut vectors: Vec<DVector<f64>> = Vec::new();
    while vectors.len() < MAX_LEVELS.min(h.dim()) {
        let (e, v) = lanczos_lowest(h, &vectors, vectors.len() as u64);
        let above = energies.first().is_some_and(|&e0| !degenerate(e, e0));
        energies.push(e);
        vectors.push(v);
        if above {
            break;
        }
    }
    assemble(sector, energies, vectors)
}

/// Ground level, gap and degenerate manifold of one sector.
pub fn solve_sector(lattice: &Lattice, params: &HubbardParams, sector: &Sector) -> Result<EigenResult> {
    let h = sector_hamiltonian(lattice, params, sector)?;
    Ok(if h.dim() <= DENSE_DIM_LIMIT {
        dense_solve(sector.clone(), &h)
    } else {
        lanczos_solve(sector.clone(), &h)
    })
}

/// All `(n_up, n_down)` splittings of `n_occ` on `n_sites` sites, `n_up`
/// descending.
pub fn splittings(n_sites: usize, n_occ: usize) -> Vec<(usize, usize)> {
    let lo = n_occ.saturating_sub(n_sites);
    let hi = n_occ.min(n_sites);
    (lo..=hi).rev().map(|u| (u, n_occ - u)).collect()
}

/// Ground state of the filling, minimized over all spin splittings.
///
/// Sectors whose ground energies tie resolve to the most balanced one with
/// `n_up >= n_down`.
pub fn ground(lattice: &Lattice, params: &HubbardParams, n_occ: usize) -> Result<EigenResult> {
    let n = lattice.n_sites();
    if n_occ == 0 || n_occ > 2 * n {
        return invalid(format!("n_occ {n_occ} outside [1, {}]", 2 * n));
    }
    let results: Vec<EigenResult> = splittings(n, n_occ)
        .into_iter()
        .map(|(u, d)| solve_sector(lattice, params, &Sector::new(n, u, d)?))
        .collect::<Result<_>>()?;
    let e_min = results
        .iter()
        .map(|r| r.ground_energy)
        .fold(f64::INFINITY, f64::min);
    let tie = SECTOR_TIE_TOLERANCE * e_min.abs().max(1.0);
    results
        .into_iter()
        .filter(|r| r.ground_energy - e_min <= tie && r.sector.n_up >= r.sector.n_down)
        .min_by_key(|r| r.sector.n_up - r.sector.n_down)
        .ok_or_else(|| Error::InvalidArgument("no sector for filling".into()))
}

/// Embeds a sector vector in the `2N`-qubit register.
pub fn eigenpair_as_statevector(vector: &DVector<f64>, sector: &Sector) -> Result<QuantumState> {
    if vector.len() != sector.dim() {
        return invalid("vector length does not match the sector");
    }
    let n = 2 * sector.n_sites;
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
    for (k, v) in vector.iter().enumerate() {
        amps[sector.qubit_index(k)] = Complex64::new(*v, 0.0);
    }
    QuantumState::from_amplitudes(n, amps)
}

/// Real part of the sector components of a register state.
pub fn restrict_to_sector(state: &QuantumState, sector: &Sector) -> Result<DVector<f64>> {
    if state.n_qubits() != 2 * sector.n_sites {
        return invalid("state register does not match the sector");
    }
    let amps = state.amplitudes();
    Ok(DVector::from_fn(sector.dim(), |k, _| amps[sector.qubit_index(k)].re))
}

/// Observables of the ground level, averaged over its degenerate manifold.
pub fn ground_observables(result: &EigenResult, model: &HubbardModel) -> Result<ObservableReport> {
    manifold_observables(&result.ground_space, &result.sector, model)
}

pub(crate) fn manifold_observables(
    space: &[DVector<f64>],
    sector: &Sector,
    model: &HubbardModel,
) -> Result<ObservableReport> {
    let moments: Vec<Moments> = space
        .iter()
        .map(|v| Moments::of_state(&eigenpair_as_statevector(v, sector)?, model))
        .collect::<Result<_>>()?;
    Ok(Moments::average(&moments).report())
}

/// Adiabatic-limit reference for `H(η) = H0 + η H_U`: the initial sector
/// vector is carried along an η grid by projecting onto each point's ground
/// manifold. Inside a symmetry-protected degenerate manifold this picks the
/// same member slow evolution would reach. `None` if the state loses its
/// overlap with the ground manifold somewhere on the grid.
pub fn transported_ground(
    lattice: &Lattice,
    params: &HubbardParams,
    sector: &Sector,
    initial: &DVector<f64>,
    n_eta: usize,
) -> Result<Option<(EigenResult, DVector<f64>)>> {
    if n_eta < 2 {
        return invalid("transport needs at least two grid points");
    }
    let mut psi = initial.clone();
    let mut last = None;
    for k in 1..n_eta {
        let eta = k as f64 / (n_eta - 1) as f64;
        let p = HubbardParams::with_epsilon(params.gamma0, eta * params.u0, params.epsilon)?;
        let r = solve_sector(lattice, &p, sector)?;
        let mut next = DVector::zeros(psi.len());
        for v in &r.ground_space {
            next.axpy(v.dot(&psi), v, 1.0);
        }
        let norm = next.norm();
        if norm < 1e-8 {
            return Ok(None);
        }
        psi = next / norm;
        last = Some(r);
    }
    Ok(Some((last.expect("n_eta >= 2"), psi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_hubbard, chain, hexagon6, ring};

    fn params(u: f64) -> HubbardParams {
        HubbardParams::new(1.0, u).unwrap()
    }

    #[test]
    fn sector_dimensions_and_order() {
        let s = Sector::new(6, 3, 3).unwrap();
        assert_eq!(s.dim(), 400);
        let configs: Vec<_> = s.basis().collect();
        assert!(configs.windows(2).all(|w| w[0] < w[1]));
        for (k, &(u, d)) in configs.iter().enumerate() {
            assert_eq!(s.index_of(u, d), Some(k));
        }
        assert!(Sector::new(3, 4, 0).is_err());
    }

    #[test]
    fn two_site_closed_form() {
        for u in [0.0, 1.0, 3.0, 7.5] {
            let s = Sector::new(2, 1, 1).unwrap();
            let r = solve_sector(&chain(2).unwrap(), &params(u), &s).unwrap();
            let root = (u * u + 16.0_f64).sqrt();
            let want = [0.5 * (u - root), 0.0, u, 0.5 * (u + root)];
            for (a, b) in r.energies.iter().zip(want) {
                assert!((a - b).abs() < 1e-12, "U={u}: {:?}", r.energies);
            }
        }
        let g = ground(&chain(2).unwrap(), &params(3.0), 2).unwrap();
        assert!((g.ground_energy + 1.0).abs() < 1e-12);
    }

    #[test]
    fn atomic_limit_is_diagonal() {
        let s = Sector::new(3, 2, 1).unwrap();
        let h = sector_hamiltonian(&ring(3).unwrap(), &HubbardParams::new(0.0, 2.0).unwrap(), &s)
            .unwrap()
            .to_dense();
        assert!(h.iter().enumerate().all(|(k, v)| k % (s.dim() + 1) == 0 || *v == 0.0));
    }

    #[test]
    fn matches_pauli_hamiltonian_in_every_sector() {
        let lat = hexagon6();
        for u in [0.0, 3.0] {
            let h = build_hubbard(&lat, &params(u)).unwrap();
            for n_up in 0..=6 {
                for n_down in 0..=6 {
                    let s = Sector::new(6, n_up, n_down).unwrap();
                    let basis: Vec<usize> = (0..s.dim()).map(|k| s.qubit_index(k)).collect();
                    let pauli = h.restricted_matrix(&basis);
                    let ours = sector_hamiltonian(&lat, &params(u), &s).unwrap().to_dense();
                    let diff = pauli.map(|z| z.re) - &ours;
                    assert!(diff.abs().max() < 1e-12, "({n_up},{n_down}) U={u}");
                    assert!(pauli.map(|z| z.im.abs()).max() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn hexagon_free_fillings() {
        let want = [-2.0, -4.0, -5.0, -6.0, -7.0, -8.0, -7.0, -6.0, -5.0, -4.0, -2.0];
        for (k, w) in want.iter().enumerate() {
            let g = ground(&hexagon6(), &params(0.0), k + 1).unwrap();
            assert!((g.ground_energy - w).abs() < 1e-10, "n_occ {}", k + 1);
        }
    }

    #[test]
    fn chain3_and_triangle_at_half_filling() {
        let c = ground(&chain(3).unwrap(), &params(3.0), 3).unwrap();
        let t = ground(&ring(3).unwrap(), &params(3.0), 3).unwrap();
        assert!((c.ground_energy + 1.48535).abs() < 1e-4, "{}", c.ground_energy);
        assert!((t.ground_energy + 1.545).abs() < 1e-3, "{}", t.ground_energy);
    }

    #[test]
    fn particle_hole_relation() {
        let lat = hexagon6();
        for u in [1.0, 3.0, 5.0] {
            for n in 1..12 {
                let a = ground(&lat, &params(u), n).unwrap().ground_energy;
                let b = ground(&lat, &params(u), 12 - n).unwrap().ground_energy;
                assert!((b - a - u * (6.0 - n as f64)).abs() < 1e-9, "U={u} n={n}");
            }
        }
    }

    #[test]
    fn tie_break_prefers_balanced_majority_up() {
        let g = ground(&hexagon6(), &params(3.0), 4).unwrap();
        assert_eq!((g.sector.n_up(), g.sector.n_down()), (2, 2));
        let g3 = ground(&hexagon6(), &params(3.0), 3).unwrap();
        assert_eq!((g3.sector.n_up(), g3.sector.n_down()), (2, 1));
        assert!(g3.degeneracy() > 1);
    }

    #[test]
    fn residuals_and_embedding() {
        let lat = hexagon6();
        let p = params(3.0);
        let model = HubbardModel::new(lat.clone(), p);
        let h = build_hubbard(&lat, &p).unwrap();
        let g = ground(&lat, &p, 6).unwrap();
        let m = sector_hamiltonian(&lat, &p, &g.sector).unwrap();
        let v = g.ground_vector();
        let mut hv = vec![0.0; v.len()];
        m.apply(v.as_slice(), &mut hv);
        let resid = (DVector::from_vec(hv) - v * g.ground_energy).norm();
        assert!(resid <= 1e-8 * m.norm_bound());
        let s = eigenpair_as_statevector(v, &g.sector).unwrap();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        assert!((s.expectation(&h).unwrap() - g.ground_energy).abs() < 1e-8);
        let obs = ground_observables(&g, &model).unwrap();
        assert!((obs.total_charge() - 6.0).abs() < 1e-9);
        assert!((obs.energy - g.ground_energy).abs() < 1e-8);
    }

    #[test]
    fn lanczos_agrees_with_dense() {
        let lat = ring(5).unwrap();
        for (u, d) in [(2, 2), (3, 2), (1, 1)] {
            let s = Sector::new(5, u, d).unwrap();
            let h = sector_hamiltonian(&lat, &params(3.0), &s).unwrap();
            let a = dense_solve(s.clone(), &h);
            let b = lanczos_solve(s.clone(), &h);
            assert!((a.ground_energy - b.ground_energy).abs() < 1e-9);
            assert_eq!(a.degeneracy(), b.degeneracy(), "({u},{d})");
            assert!((a.manifold_gap - b.manifold_gap).abs() < 1e-7);
        }
        // A sector large enough to take the Lanczos path.
        let big = ground(&chain(8).unwrap(), &params(2.0), 8).unwrap();
        assert!(big.sector.dim() > DENSE_DIM_LIMIT);
        let m = sector_hamiltonian(&chain(8).unwrap(), &params(2.0), &big.sector).unwrap();
        let mut hv = vec![0.0; m.dim()];
        m.apply(big.ground_vector().as_slice(), &mut hv);
        let r = (DVector::from_vec(hv) - big.ground_vector() * big.ground_energy).norm();
        assert!(r <= 1e-8 * m.norm_bound(), "{r}");
    }
}
