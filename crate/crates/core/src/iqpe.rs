//! Iterative quantum phase estimation of Hubbard ground-state energies.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use rand::Rng;
use rayon::prelude::*;

use crate::circuits::{controlled_power, evolution_circuit, TrotterConfig};
use crate::engine::{Circuit, CompiledGate, Gate, QuantumState};
use crate::error::{invalid, Result};
use crate::model::{HubbardModel, HubbardParams, Lattice, PauliSum};
use crate::noise::{sample_readout, trajectory_rng, DensityMatrix, NoiseSetup, NoisyProgram};
use crate::prep::{default_occupation, prepare_slater, slater_circuit, tight_binding_orbitals, Occupation};

/// Evolution time and the energy window it resolves without wrapping.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeScale {
    pub t: f64,
    pub window: (f64, f64),
}

/// Window `[c - B, c + B]` around the identity coefficient `c` with
/// `B = (Σ|non-identity coefficients|)(1 + margin)`, and `t = 2π / 2B`.
pub fn choose_time_scale(h: &PauliSum, margin: f64) -> Result<TimeScale> {
    if !(margin >= 0.0) || !margin.is_finite() {
        return invalid(format!("window margin {margin} must be finite and non-negative"));
    }
    let norm = h.one_norm();
    let b = norm.bound * (1.0 + margin);
    if b <= 0.0 {
        return invalid("Hamiltonian has no non-identity terms; window would be empty");
    }
    Ok(TimeScale {
        t: PI / b,
        window: (norm.identity - b, norm.identity + b),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct IqpeConfig {
    pub m_bits: usize,
    /// Steps and time of one application of `U = exp(-iHt)`.
    pub trotter: TrotterConfig,
    pub shots_per_bit: usize,
    pub energy_window: (f64, f64),
    pub seed: u64,
    pub run_index: u64,
    pub fast_powers: bool,
}

impl IqpeConfig {
    /// Configuration with the window and time from [`choose_time_scale`].
    pub fn for_model(
        model: &HubbardModel,
        m_bits: usize,
        n_trot: usize,
        margin: f64,
    ) -> Result<Self> {
        let ts = choose_time_scale(&model.hamiltonian()?, margin)?;
        Ok(Self {
            m_bits,
            trotter: TrotterConfig::new(n_trot, ts.t)?,
            shots_per_bit: 1,
            energy_window: ts.window,
            seed: 0,
            run_index: 0,
            fast_powers: false,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_bits == 0 || self.m_bits > 30 {
            return invalid(format!("m_bits {} outside [1, 30]", self.m_bits));
        }
        if self.shots_per_bit == 0 {
            return invalid("shots_per_bit must be positive");
        }
        let (lo, hi) = self.energy_window;
        if !(hi > lo) {
            return invalid("energy window must have positive width");
        }
        if (hi - lo) * self.trotter.t > TAU * (1.0 + 1e-12) {
            return invalid("energy window is wider than one phase period 2π/t");
        }
        Ok(())
    }

    /// Energy resolution `(E_hi - E_lo) / 2^m`.
    pub fn delta_e(&self) -> f64 {
        (self.energy_window.1 - self.energy_window.0) / (1u64 << self.m_bits) as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyEstimate {
    /// `x_1 … x_m`, most significant first.
    pub phase_bits: Vec<u8>,
    pub phi: f64,
    pub energy: f64,
    /// Majority fraction of each iteration, in execution order (`x_m` first).
    pub bit_vote_fractions: Vec<f64>,
    pub t: f64,
    pub energy_window: (f64, f64),
    pub delta_e: f64,
}

/// Outcome of one iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationOutcome {
    pub bit: u8,
    pub vote_fraction: f64,
    /// Probability of reading 1 when known exactly (noiseless paths).
    pub p_one: Option<f64>,
}

/// `E = -2πφ/t` shifted by a multiple of `2π/t` into `[E_lo, E_hi)`.
pub fn phase_to_energy(phi: f64, t: f64, window: (f64, f64)) -> f64 {
    let (lo, hi) = window;
    let w = TAU / t;
    let e = lo + (-TAU * phi / t - lo).rem_euclid(w);
    if e >= hi || e >= lo + w {
        lo
    } else {
        e
    }
}

fn majority(ones: usize, shots: usize) -> (u8, f64) {
    let f1 = ones as f64 / shots as f64;
    let bit = u8::from(2 * ones > shots);
    (bit, f1.max(1.0 - f1))
}

/// Feedback phase before iteration `k + 1` given the bits measured so far
/// (`x_m` first): `0.0 x_{m-k+1} … x_m`.
fn feedback(bits_lsb_first: &[u8]) -> f64 {
    bits_lsb_first
        .iter()
        .fold(0.0, |w, &b| (w + b as f64 / 2.0) / 2.0)
}

fn ancilla_tail(anc: usize, omega: f64) -> Vec<Gate> {
    let mut g = Vec::new();
    if omega != 0.0 {
        g.push(Gate::phase(anc, -TAU * omega));
    }
    g.push(Gate::h(anc));
    g
}

/// Full circuit of iteration `k` from `|0…0>`: Slater preparation, H on the
/// ancilla, controlled `U^{2^{m-k}}`, feedback phase, H.
pub fn iteration_circuit(
    model: &HubbardModel,
    occ: &Occupation,
    config: &IqpeConfig,
    k: usize,
    omega: f64,
) -> Result<Circuit> {
    if k == 0 || k > config.m_bits {
        return invalid(format!("iteration {k} outside [1, {}]", config.m_bits));
    }
    let n = model.n_qubits();
    let orbitals = tight_binding_orbitals(&model.lattice, model.params.gamma0);
    let mut c = slater_circuit(occ, &orbitals)?.widened(n + 1)?;
    c.push(Gate::h(n))?;
    let power = 1u64 << (config.m_bits - k);
    c.append(&controlled_power(model, &config.trotter, n, power, config.fast_powers)?)?;
    for g in ancilla_tail(n, omega) {
        c.push(g)?;
    }
    Ok(c)
}

fn sample_shot<R: Rng + ?Sized>(state: &QuantumState, anc: usize, rng: &mut R) -> u8 {
    let p1 = state.prob_of_bit(anc, 1).expect("ancilla in register") / state.norm_sqr();
    u8::from(rng.random::<f64>() < p1)
}

/// Density-matrix work shared by every run of one configuration: the state
/// before the feedback gates of each iteration, and the readout probability
/// per `(iteration, feedback)`.
#[derive(Default)]
struct DensityCache {
    prefix: HashMap<usize, DensityMatrix>,
    p_read: HashMap<(usize, u64), f64>,
}

impl DensityCache {
    fn readout_probability(
        &mut self,
        model: &HubbardModel,
        occ: &Occupation,
        config: &IqpeConfig,
        k: usize,
        omega: f64,
        setup: &NoiseSetup,
    ) -> Result<f64> {
        let key = (k, omega.to_bits());
        if let Some(&p) = self.p_read.get(&key) {
            return Ok(p);
        }
        let anc = model.n_qubits();
        let circuit = iteration_circuit(model, occ, config, k, omega)?;
        let program = NoisyProgram::new(&circuit, &setup.profile, setup.relaxation)?;
        let split = program.op_index_of_gate(circuit.len() - ancilla_tail(anc, omega).len());
        let mut rho = match self.prefix.get(&k) {
            Some(r) => r.clone(),
            None => {
                let mut r = DensityMatrix::zero(anc + 1)?;
                program.run_density_ops(&mut r, 0..split)?;
                self.prefix.insert(k, r.clone());
                r
            }
        };
        program.run_density_ops(&mut rho, split..program.n_ops())?;
        let p = setup.readout_probability(rho.prob_of_bit(anc, 1)? / rho.trace());
        self.p_read.insert(key, p);
        Ok(p)
    }
}

/// Runs iteration `k` with feedback `omega` and returns the majority bit.
pub fn iqpe_iteration(
    model: &HubbardModel,
    occ: &Occupation,
    config: &IqpeConfig,
    k: usize,
    omega: f64,
    noise: Option<&NoiseSetup>,
) -> Result<IterationOutcome> {
    config.validate()?;
    iteration(model, occ, config, k, omega, noise, &mut DensityCache::default())
}

fn iteration(
    model: &HubbardModel,
    occ: &Occupation,
    config: &IqpeConfig,
    k: usize,
    omega: f64,
    noise: Option<&NoiseSetup>,
    cache: &mut DensityCache,
) -> Result<IterationOutcome> {
    let anc = model.n_qubits();
    let shots = config.shots_per_bit;
    let shot_id = |s: usize| ((k - 1) * shots + s) as u64;
    let rng_for = |s: usize| trajectory_rng(config.seed, config.run_index, shot_id(s));
    // A noiseless channel is unitary; the state-vector path is exact.
    let noise = noise.filter(|n| !(n.profile.is_noiseless() && n.uses_density(anc + 1)));
    let ones = match noise {
        None => {
            let mut state = QuantumState::zero(anc + 1)?;
            state.run(&iteration_circuit(model, occ, config, k, omega)?)?;
            if shots == 1 {
                let p1 = state.prob_of_bit(anc, 1)?;
                return Ok(IterationOutcome {
                    bit: u8::from(p1 > 0.5),
                    vote_fraction: p1.max(1.0 - p1),
                    p_one: Some(p1),
                });
            }
            (0..shots)
                .map(|s| sample_shot(&state, anc, &mut rng_for(s)) as usize)
                .sum()
        }
        Some(setup) if setup.uses_density(anc + 1) => {
            let p = cache.readout_probability(model, occ, config, k, omega, setup)?;
            (0..shots)
                .map(|s| usize::from(rng_for(s).random::<f64>() < p))
                .sum()
        }
        Some(setup) => {
            let circuit = iteration_circuit(model, occ, config, k, omega)?;
            let program = NoisyProgram::new(&circuit, &setup.profile, setup.relaxation)?;
            let outcomes: Vec<Result<u8>> = (0..shots)
                .into_par_iter()
                .map(|s| {
                    let mut rng = rng_for(s);
                    let mut state = QuantumState::zero(anc + 1)?;
                    program.run(&mut state, &mut rng)?;
                    let bit = sample_shot(&state, anc, &mut rng);
                    Ok(sample_readout(
                        &[bit],
                        &setup.profile,
                        setup.measurement_relaxation,
                        &mut rng,
                    )[0])
                })
                .collect();
            let mut ones = 0;
            for o in outcomes {
                ones += o? as usize;
            }
            ones
        }
    };
    let (bit, vote_fraction) = majority(ones, shots);
    Ok(IterationOutcome {
        bit,
        vote_fraction,
        p_one: None,
    })
}

/// Noiseless single-shot path: one pass of controlled `U` applications from
/// the determinant state, keeping the ancilla-system state after `2^j`
/// applications, then exact ancilla probabilities per iteration.
fn deterministic_bits(
    model: &HubbardModel,
    occ: &Occupation,
    config: &IqpeConfig,
) -> Result<Vec<IterationOutcome>> {
    let n = model.n_qubits();
    let orbitals = tight_binding_orbitals(&model.lattice, model.params.gamma0);
    let mut base = prepare_slater(occ, &orbitals)?.with_ancillas(1)?;
    base.apply(&Gate::h(n))?;
    let m = config.m_bits;
    let snapshots: Vec<QuantumState> = if config.fast_powers {
        (0..m)
            .map(|j| {
                let mut s = base.clone();
                s.run(&controlled_power(model, &config.trotter, n, 1 << j, true)?)?;
                Ok(s)
            })
            .collect::<Result<_>>()?
    } else {
        let step: Vec<CompiledGate> = evolution_circuit(model, &config.trotter, &[n])?
            .gates()
            .iter()
            .map(CompiledGate::new)
            .collect();
        let mut out = Vec::with_capacity(m);
        let mut s = base;
        let mut applied = 0u64;
        for j in 0..m {
            while applied < 1 << j {
                for g in &step {
                    g.apply(s.amplitudes_mut());
                }
                applied += 1;
            }
            out.push(s.clone());
        }
        out
    };
    let mut bits = Vec::with_capacity(m);
    let mut outcomes = Vec::with_capacity(m);
    for k in 1..=m {
        let mut s = snapshots[m - k].clone();
        for g in ancilla_tail(n, feedback(&bits)) {
            s.apply(&g)?;
        }
        let p1 = s.prob_of_bit(n, 1)?;
        let bit = u8::from(p1 > 0.5);
        bits.push(bit);
        outcomes.push(IterationOutcome {
            bit,
            vote_fraction: p1.max(1.0 - p1),
            p_one: Some(p1),
        });
    }
    Ok(outcomes)
}

fn assemble(outcomes: &[IterationOutcome], config: &IqpeConfig) -> EnergyEstimate {
    let m = config.m_bits;
    let phase_bits: Vec<u8> = outcomes.iter().rev().map(|o| o.bit).collect();
    let phi = phase_bits
        .iter()
        .enumerate()
        .map(|(i, &b)| b as f64 / (1u64 << (i + 1)) as f64)
        .sum::<f64>();
    debug_assert_eq!(phase_bits.len(), m);
    EnergyEstimate {
        energy: phase_to_energy(phi, config.trotter.t, config.energy_window),
        phase_bits,
        phi,
        bit_vote_fractions: outcomes.iter().map(|o| o.vote_fraction).collect(),
        t: config.trotter.t,
        energy_window: config.energy_window,
        delta_e: config.delta_e(),
    }
}

fn run_once(
    model: &HubbardModel,
    occ: &Occupation,
    config: &IqpeConfig,
    noise: Option<&NoiseSetup>,
    cache: &mut DensityCache,
) -> Result<EnergyEstimate> {
    if noise.is_none() && config.shots_per_bit == 1 {
        return Ok(assemble(&deterministic_bits(model, occ, config)?, config));
    }
    let mut bits = Vec::with_capacity(config.m_bits);
    let mut outcomes = Vec::with_capacity(config.m_bits);
    for k in 1..=config.m_bits {
        let o = iteration(model, occ, config, k, feedback(&bits), noise, cache)?;
        bits.push(o.bit);
        outcomes.push(o);
    }
    Ok(assemble(&outcomes, config))
}

/// Full IQPE loop from a chosen occupation.
pub fn run_iqpe_with(
    model: &HubbardModel,
    occ: &Occupation,
    config: &IqpeConfig,
    noise: Option<&NoiseSetup>,
) -> Result<EnergyEstimate> {
    config.validate()?;
    run_once(model, occ, config, noise, &mut DensityCache::default())
}

/// `runs` independent repetitions with run indices
/// `config.run_index .. config.run_index + runs`.
pub fn run_iqpe_runs(
    model: &HubbardModel,
    occ: &Occupation,
    config: &IqpeConfig,
    noise: Option<&NoiseSetup>,
    runs: usize,
) -> Result<Vec<EnergyEstimate>> {
    config.validate()?;
    let mut cache = DensityCache::default();
    (0..runs as u64)
        .map(|r| {
            let cfg = IqpeConfig {
                run_index: config.run_index + r,
                ..config.clone()
            };
            run_once(model, occ, &cfg, noise, &mut cache)
        })
        .collect()
}

/// Full IQPE loop from the default Slater determinant of `n_occ` electrons.
pub fn run_iqpe(
    lattice: &Lattice,
    params: &HubbardParams,
    n_occ: usize,
    config: &IqpeConfig,
    noise: Option<&NoiseSetup>,
) -> Result<EnergyEstimate> {
    let model = HubbardModel::new(lattice.clone(), *params);
    let orbitals = tight_binding_orbitals(lattice, params.gamma0);
    let occ = default_occupation(&orbitals, n_occ)?;
    run_iqpe_with(&model, &occ, config, noise)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{chain, hexagon6, ring, Pauli, PauliString};
    use crate::noise::{NoiseBackend, NoiseField, NoiseProfile};
    use crate::oracle::ground;

    #[test]
    fn time_scale_examples() {
        let z = PauliSum::from_terms(1, vec![PauliString::from_ops(&[Pauli::Z], 1.0).unwrap()]).unwrap();
        let ts = choose_time_scale(&z, 0.0).unwrap();
        assert_eq!(ts.window, (-1.0, 1.0));
        assert!((ts.t - PI).abs() < 1e-15);
        let wide = choose_time_scale(&z, 0.5).unwrap();
        assert!(wide.t < ts.t);
        assert!(choose_time_scale(&PauliSum::new(1).unwrap(), 0.1).is_err());
        assert!(choose_time_scale(&z, -0.1).is_err());

        let model = HubbardModel::new(hexagon6(), HubbardParams::new(1.0, 3.0).unwrap());
        let ts = choose_time_scale(&model.hamiltonian().unwrap(), 0.0).unwrap();
        assert!((ts.window.0 + 21.0).abs() < 1e-12 && (ts.window.1 - 30.0).abs() < 1e-12);
        for n in 1..12 {
            let e = ground(&hexagon6(), &model.params, n).unwrap().ground_energy;
            assert!(ts.window.0 < e && e < ts.window.1);
        }
    }

    #[test]
    fn unwrap_into_window() {
        let t = PI / 4.0;
        let w = (-3.0, 5.0);
        assert!((phase_to_energy(0.0, t, w) - 0.0).abs() < 1e-12);
        assert!((phase_to_energy(0.25, t, w) - (-2.0)).abs() < 1e-12);
        assert!((phase_to_energy(0.5, t, w) - 4.0).abs() < 1e-12);
        assert!((phase_to_energy(0.375, t, w) + 3.0).abs() < 1e-12);
    }

    #[test]
    fn feedback_accumulates_shifted_bits() {
        assert_eq!(feedback(&[]), 0.0);
        assert_eq!(feedback(&[1]), 0.25);
        assert_eq!(feedback(&[1, 1]), 0.375);
        assert_eq!(feedback(&[0, 1]), 0.25);
    }

    /// Atomic-limit model on two sites: Trotterization is exact and the
    /// determinant with both spins on site 0 has energy `U + 2ε`.
    fn atomic(u: f64, eps: f64) -> (HubbardModel, Occupation) {
        let model = HubbardModel::new(chain(2).unwrap(), HubbardParams::with_epsilon(0.0, u, eps).unwrap());
        (model, Occupation::new(vec![0], vec![0], 2).unwrap())
    }

    fn config(m: usize, t: f64, window: (f64, f64)) -> IqpeConfig {
        IqpeConfig {
            m_bits: m,
            trotter: TrotterConfig::new(1, t).unwrap(),
            shots_per_bit: 1,
            energy_window: window,
            seed: 1,
            run_index: 0,
            fast_powers: false,
        }
    }

    #[test]
    fn exact_phase_recovery() {
        let t = TAU / 32.0;
        let window = (-16.0, 16.0);
        for target in [-13.0, -5.0, 3.0, 11.0, 0.0, 7.0] {
            let (model, occ) = atomic(1.0, (target - 1.0) / 2.0);
            let orbitals = tight_binding_orbitals(&model.lattice, 0.0);
            let sd = prepare_slater(&occ, &orbitals).unwrap();
            assert!((sd.expectation(&model.hamiltonian().unwrap()).unwrap() - target).abs() < 1e-12);
            for shots in [1, 8] {
                let mut cfg = config(5, t, window);
                cfg.shots_per_bit = shots;
                let est = run_iqpe_with(&model, &occ, &cfg, None).unwrap();
                assert!((est.energy - target).abs() < 1e-9, "{target}: {est:?}");
                assert!(est.bit_vote_fractions.iter().all(|&f| (f - 1.0).abs() < 1e-12));
            }
        }
    }

    #[test]
    fn vote_fraction_follows_cosine_law() {
        // φ = -E t / 2π with E off the 3-bit grid.
        let (model, occ) = atomic(1.3, 0.0);
        let t = TAU / 8.0;
        let cfg = config(3, t, (-4.0, 4.0));
        let phi = (-1.3 * t / TAU).rem_euclid(1.0);
        let o = iqpe_iteration(&model, &occ, &cfg, 1, 0.0, None).unwrap();
        let p1 = (PI * 4.0 * phi).sin().powi(2);
        assert!((o.p_one.unwrap() - p1).abs() < 1e-12);
        let est = run_iqpe_with(&model, &occ, &cfg, None).unwrap();
        assert!(est.bit_vote_fractions.iter().any(|&f| f > 0.5 && f < 1.0));
        assert!((est.energy - 1.3).abs() <= cfg.delta_e());
    }

    #[test]
    fn deterministic_path_matches_full_circuits() {
        let model = HubbardModel::new(ring(3).unwrap(), HubbardParams::new(1.0, 3.0).unwrap());
        let orbitals = tight_binding_orbitals(&model.lattice, 1.0);
        let occ = default_occupation(&orbitals, 3).unwrap();
        let cfg = IqpeConfig::for_model(&model, 4, 6, 0.0).unwrap();
        let fast = deterministic_bits(&model, &occ, &cfg).unwrap();
        let mut bits = Vec::new();
        for (k, f) in (1..=4).zip(&fast) {
            let o = iqpe_iteration(&model, &occ, &cfg, k, feedback(&bits), None).unwrap();
            assert!((o.p_one.unwrap() - f.p_one.unwrap()).abs() < 1e-8);
            bits.push(o.bit);
        }
    }

    #[test]
    fn zero_noise_matches_sampled_noiseless() {
        let model = HubbardModel::new(ring(3).unwrap(), HubbardParams::new(1.0, 3.0).unwrap());
        let mut cfg = IqpeConfig::for_model(&model, 3, 4, 0.0).unwrap();
        cfg.shots_per_bit = 64;
        cfg.seed = 9;
        let orbitals = tight_binding_orbitals(&model.lattice, 1.0);
        let occ = default_occupation(&orbitals, 3).unwrap();
        let a = run_iqpe_with(&model, &occ, &cfg, None).unwrap();
        for backend in [NoiseBackend::Trajectories, NoiseBackend::DensityMatrix] {
            let quiet = NoiseSetup {
                backend,
                ..NoiseSetup::new(NoiseProfile::noiseless())
            };
            let b = run_iqpe_with(&model, &occ, &cfg, Some(&quiet)).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.energy.to_bits(), b.energy.to_bits());
        }
    }

    #[test]
    fn density_backend_matches_trajectories() {
        let model = HubbardModel::new(chain(2).unwrap(), HubbardParams::new(1.0, 3.0).unwrap());
        let mut cfg = IqpeConfig::for_model(&model, 3, 3, 0.0).unwrap();
        cfg.shots_per_bit = 4000;
        let occ = default_occupation(&tight_binding_orbitals(&model.lattice, 1.0), 2).unwrap();
        let profile = NoiseProfile {
            t1_us: 20.0,
            t2_us: 30.0,
            ..NoiseProfile::ibm_baseline()
        };
        for k in 1..=3 {
            let mut f = [0.0; 2];
            for (i, backend) in [NoiseBackend::Trajectories, NoiseBackend::DensityMatrix].into_iter().enumerate() {
                let setup = NoiseSetup { backend, ..NoiseSetup::new(profile) };
                let o = iqpe_iteration(&model, &occ, &cfg, k, 0.25, Some(&setup)).unwrap();
                f[i] = if o.bit == 1 { o.vote_fraction } else { 1.0 - o.vote_fraction };
            }
            let sigma = (2.0 * 0.25 / 4000.0f64).sqrt();
            assert!((f[0] - f[1]).abs() < 3.0 * sigma, "k={k}: {f:?}");
        }
    }

    #[test]
    fn runs_share_work_but_not_randomness() {
        let model = HubbardModel::new(chain(2).unwrap(), HubbardParams::new(1.0, 3.0).unwrap());
        let mut cfg = IqpeConfig::for_model(&model, 3, 2, 0.0).unwrap();
        cfg.shots_per_bit = 5;
        let occ = default_occupation(&tight_binding_orbitals(&model.lattice, 1.0), 2).unwrap();
        let setup = NoiseSetup::new(NoiseProfile::ibm_baseline().scale(NoiseField::P2q, 10.0).unwrap().0);
        let all = run_iqpe_runs(&model, &occ, &cfg, Some(&setup), 6).unwrap();
        for (r, est) in all.iter().enumerate() {
            let single = IqpeConfig {
                run_index: r as u64,
                ..cfg.clone()
            };
            assert_eq!(&run_iqpe_with(&model, &occ, &single, Some(&setup)).unwrap(), est);
        }
        assert!(all.windows(2).any(|w| w[0].bit_vote_fractions != w[1].bit_vote_fractions));
    }

    #[test]
    fn chain2_ground_within_resolution() {
        let model = HubbardModel::new(chain(2).unwrap(), HubbardParams::new(1.0, 3.0).unwrap());
        let cfg = IqpeConfig::for_model(&model, 5, 15, 0.0).unwrap();
        let orbitals = tight_binding_orbitals(&model.lattice, 1.0);
        let occ = default_occupation(&orbitals, 2).unwrap();
        let est = run_iqpe_with(&model, &occ, &cfg, None).unwrap();
        assert!((est.energy + 1.0).abs() <= cfg.delta_e(), "{est:?}");
        assert_eq!(est.phase_bits.len(), 5);
    }

    #[test]
    fn rejects_bad_config() {
        let mut cfg = config(3, 1.0, (0.0, 10.0));
        assert!(cfg.validate().is_err());
        cfg.energy_window = (0.0, 1.0);
        cfg.m_bits = 0;
        assert!(cfg.validate().is_err());
    }
}
