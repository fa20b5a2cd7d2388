//! Charge and spin densities and their site-0 correlations.

use rand::Rng;

use crate::engine::QuantumState;
use crate::error::{invalid, Result};
use crate::model::{site_density, site_spin, HubbardModel, PauliSum};

/// Densities `n_i`, `S^z_i = n_i↑ - n_i↓` and connected correlations
/// `C_{0,j}` against site 0, plus the energy of the state.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableReport {
    pub charge_density: Vec<f64>,
    pub spin_density: Vec<f64>,
    pub charge_corr: Vec<f64>,
    pub spin_corr: Vec<f64>,
    pub energy: f64,
}

impl ObservableReport {
    pub fn n_sites(&self) -> usize {
        self.charge_density.len()
    }

    pub fn total_charge(&self) -> f64 {
        self.charge_density.iter().sum()
    }

    /// Named per-site series, in a fixed order.
    pub fn series(&self) -> [(&'static str, &[f64]); 4] {
        [
            ("charge_density", &self.charge_density),
            ("spin_density", &self.spin_density),
            ("charge_corr", &self.charge_corr),
            ("spin_corr", &self.spin_corr),
        ]
    }

    /// Largest absolute difference over every density and correlation entry.
    pub fn max_deviation(&self, other: &ObservableReport) -> f64 {
        self.series()
            .iter()
            .zip(other.series().iter())
            .flat_map(|((_, a), (_, b))| a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

/// First and second moments, which average linearly over mixtures.
#[derive(Clone, Debug, Default)]
pub(crate) struct Moments {
    n: Vec<f64>,
    s: Vec<f64>,
    n0n: Vec<f64>,
    s0s: Vec<f64>,
    energy: f64,
}

impl Moments {
    pub(crate) fn of_state(state: &QuantumState, model: &HubbardModel) -> Result<Moments> {
        let n_sites = model.n_sites();
        if state.n_qubits() != 2 * n_sites {
            return invalid(format!(
                "{}-qubit state for a {n_sites}-site lattice",
                state.n_qubits()
            ));
        }
        let dens: Vec<PauliSum> = (0..n_sites)
            .map(|i| site_density(i, n_sites))
            .collect::<Result<_>>()?;
        let spins: Vec<PauliSum> = (0..n_sites)
            .map(|i| site_spin(i, n_sites))
            .collect::<Result<_>>()?;
        let mut m = Moments {
            energy: state.expectation(&model.hamiltonian()?)?,
            ..Default::default()
        };
        for j in 0..n_sites {
            m.n.push(state.expectation(&dens[j])?);
            m.s.push(state.expectation(&spins[j])?);
            m.n0n.push(state.expectation(&dens[0].mul(&dens[j])?)?);
            m.s0s.push(state.expectation(&spins[0].mul(&spins[j])?)?);
        }
        Ok(m)
    }

    /// Moments estimated from sampled computational-basis outcomes.
    pub(crate) fn of_samples(samples: &[usize], n_sites: usize, energy: f64) -> Moments {
        let mut m = Moments {
            n: vec![0.0; n_sites],
            s: vec![0.0; n_sites],
            n0n: vec![0.0; n_sites],
            s0s: vec![0.0; n_sites],
            energy,
        };
        let w = 1.0 / samples.len().max(1) as f64;
        for &b in samples {
            let up = |i: usize| (b >> i & 1) as f64;
            let dn = |i: usize| (b >> (i + n_sites) & 1) as f64;
            let (n0, s0) = (up(0) + dn(0), up(0) - dn(0));
            for j in 0..n_sites {
                let (nj, sj) = (up(j) + dn(j), up(j) - dn(j));
                m.n[j] += w * nj;
                m.s[j] += w * sj;
                m.n0n[j] += w * n0 * nj;
                m.s0s[j] += w * s0 * sj;
            }
        }
        m
    }

    pub(crate) fn average(all: &[Moments]) -> Moments {
        let k = all.len() as f64;
        let mut out = all[0].clone();
        for v in [&mut out.n, &mut out.s, &mut out.n0n, &mut out.s0s] {
            v.iter_mut().for_each(|x| *x = 0.0);
        }
        out.energy = 0.0;
        for m in all {
            for (dst, src) in [
                (&mut out.n, &m.n),
                (&mut out.s, &m.s),
                (&mut out.n0n, &m.n0n),
                (&mut out.s0s, &m.s0s),
            ] {
                dst.iter_mut().zip(src).for_each(|(d, s)| *d += s / k);
            }
            out.energy += m.energy / k;
        }
        out
    }

    pub(crate) fn report(&self) -> ObservableReport {
        let cc = self.n0n.iter().zip(&self.n).map(|(nn, nj)| nn - self.n[0] * nj);
        let sc = self.s0s.iter().zip(&self.s).map(|(ss, sj)| ss - self.s[0] * sj);
        ObservableReport {
            charge_density: self.n.clone(),
            spin_density: self.s.clone(),
            charge_corr: cc.collect(),
            spin_corr: sc.collect(),
            energy: self.energy,
        }
    }
}

/// Exact expectations on a `2N`-qubit state.
pub fn measure_observables(state: &QuantumState, model: &HubbardModel) -> Result<ObservableReport> {
    Ok(Moments::of_state(state, model)?.report())
}

/// Estimates from `shots` computational-basis samples; the energy stays
/// exact since it is not Z-diagonal.
pub fn sample_observables<R: Rng + ?Sized>(
    state: &QuantumState,
    model: &HubbardModel,
    shots: usize,
    rng: &mut R,
) -> Result<ObservableReport> {
    if shots == 0 {
        return invalid("shot count must be positive");
    }
    let energy = state.expectation(&model.hamiltonian()?)?;
    let probs: Vec<f64> = state.amplitudes().iter().map(|a| a.norm_sqr()).collect();
    let dist = rand::distr::weighted::WeightedIndex::new(&probs)
        .map_err(|e| crate::Error::InvalidArgument(format!("cannot sample state: {e}")))?;
    let samples: Vec<usize> = (0..shots).map(|_| rng.sample(&dist)).collect();
    Ok(Moments::of_samples(&samples, model.n_sites(), energy).report())
}
