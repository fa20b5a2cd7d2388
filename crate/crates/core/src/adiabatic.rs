//! Adiabatic state preparation along `H(η) = H0 + η H_U`.

use nalgebra::DVector;
use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rayon::prelude::*;

use crate::circuits::trotter_step;
use crate::engine::{Circuit, CompiledGate, QuantumState};
use crate::error::{invalid, Error, Result};
use crate::model::{HubbardModel, HubbardParams, Lattice};
use crate::noise::{sample_readout, trajectory_rng, NoiseSetup, NoisyProgram};
use crate::observables::Moments;
use crate::oracle::{restrict_to_sector, solve_sector, transported_ground, EigenResult, Sector};
use crate::prep::{default_occupation, prepare_slater, slater_circuit, tight_binding_orbitals, Occupation};

pub use crate::observables::{measure_observables, ObservableReport};

/// Interpolation schedule with `M` slices over total time `T`. Slice `j`
/// holds `η` fixed at the profile value at its midpoint `(j + ½)/M`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdiabaticSchedule {
    pub total_time: f64,
    eta: Vec<f64>,
    /// Reverse the term order on every odd slice, so consecutive slice
    /// pairs form symmetric products.
    pub alternate_order: bool,
}

impl AdiabaticSchedule {
    /// `η(t) = t/T`.
    pub fn linear(total_time: f64, n_steps: usize) -> Result<Self> {
        Self::with_profile(total_time, n_steps, |s| s)
    }

    /// `η(t) = f(t/T)` for a non-decreasing `f` with `f(0) = 0`, `f(1) = 1`.
    pub fn with_profile(total_time: f64, n_steps: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if !(total_time > 0.0) || !total_time.is_finite() {
            return invalid(format!("total time {total_time} must be positive"));
        }
        if n_steps == 0 {
            return invalid("schedule needs at least one step");
        }
        if f(0.0).abs() > 1e-12 || (f(1.0) - 1.0).abs() > 1e-12 {
            return invalid("schedule profile must run from 0 to 1");
        }
        let eta: Vec<f64> = (0..n_steps)
            .map(|j| f((j as f64 + 0.5) / n_steps as f64))
            .collect();
        if eta.iter().any(|e| !(0.0..=1.0).contains(e)) || eta.windows(2).any(|w| w[1] < w[0]) {
            return invalid("schedule profile must be non-decreasing within [0, 1]");
        }
        Ok(Self {
            total_time,
            eta,
            alternate_order: true,
        })
    }

    /// Linear schedule with `M = round(T/Δt)` slices.
    pub fn from_dt(total_time: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return invalid(format!("time step {dt} must be positive"));
        }
        let m = (total_time / dt).round();
        if m < 1.0 || (m * dt - total_time).abs() > 1e-9 * total_time.max(1.0) {
            return invalid(format!("T = {total_time} is not a whole number of steps of {dt}"));
        }
        Self::linear(total_time, m as usize)
    }

    pub fn n_steps(&self) -> usize {
        self.eta.len()
    }

    pub fn dt(&self) -> f64 {
        self.total_time / self.n_steps() as f64
    }

    /// Midpoint `η_j` per slice.
    pub fn etas(&self) -> &[f64] {
        &self.eta
    }
}

impl Default for AdiabaticSchedule {
    fn default() -> Self {
        Self::linear(40.0, 400).expect("valid default")
    }
}

fn slice_model(model: &HubbardModel, eta: f64) -> Result<HubbardModel> {
    let p = &model.params;
    Ok(HubbardModel::new(
        model.lattice.clone(),
        HubbardParams::with_epsilon(p.gamma0, eta * p.u0, p.epsilon)?,
    ))
}

fn check_dt(schedule: &AdiabaticSchedule, trotter_dt: f64) -> Result<()> {
    if !(trotter_dt > 0.0) || (trotter_dt - schedule.dt()).abs() > 1e-9 * trotter_dt {
        return invalid(format!(
            "trotter_dt {trotter_dt} does not match T/M = {}",
            schedule.dt()
        ));
    }
    Ok(())
}

fn slice(model: &HubbardModel, schedule: &AdiabaticSchedule, j: usize) -> Result<Circuit> {
    let m = slice_model(model, schedule.eta[j])?;
    let dt = schedule.dt();
    if schedule.alternate_order && j % 2 == 1 {
        Ok(trotter_step(&m, -dt, &[])?.inverse())
    } else {
        trotter_step(&m, dt, &[])
    }
}

/// Evolution slices only, on `2N` qubits.
pub fn adiabatic_slices(model: &HubbardModel, schedule: &AdiabaticSchedule) -> Result<Circuit> {
    let mut c = Circuit::new(model.n_qubits());
    for j in 0..schedule.n_steps() {
        c.append(&slice(model, schedule, j)?)?;
    }
    Ok(c)
}

/// Gate-level program: Slater preparation followed by every slice.
pub fn adiabatic_circuit(
    model: &HubbardModel,
    occ: &Occupation,
    schedule: &AdiabaticSchedule,
) -> Result<Circuit> {
    let orbitals = tight_binding_orbitals(&model.lattice, model.params.gamma0);
    let mut c = slater_circuit(occ, &orbitals)?;
    c.append(&adiabatic_slices(model, schedule)?)?;
    Ok(c)
}

/// Noiseless evolution from a chosen determinant.
pub fn adiabatic_evolve_from(
    model: &HubbardModel,
    occ: &Occupation,
    schedule: &AdiabaticSchedule,
) -> Result<QuantumState> {
    let orbitals = tight_binding_orbitals(&model.lattice, model.params.gamma0);
    let mut state = prepare_slater(occ, &orbitals)?;
    for j in 0..schedule.n_steps() {
        for g in slice(model, schedule, j)?.gates() {
            CompiledGate::new(g).apply(state.amplitudes_mut());
        }
    }
    Ok(state)
}

/// Noiseless evolution from the default determinant of `n_occ` electrons.
pub fn adiabatic_evolve(
    lattice: &Lattice,
    params: &HubbardParams,
    n_occ: usize,
    schedule: &AdiabaticSchedule,
    trotter_dt: f64,
) -> Result<QuantumState> {
    check_dt(schedule, trotter_dt)?;
    let model = HubbardModel::new(lattice.clone(), *params);
    let occ = default_occupation(&tight_binding_orbitals(lattice, params.gamma0), n_occ)?;
    adiabatic_evolve_from(&model, &occ, schedule)
}

/// Sector of the default determinant.
pub fn default_sector(lattice: &Lattice, gamma0: f64, n_occ: usize) -> Result<Sector> {
    let occ = default_occupation(&tight_binding_orbitals(lattice, gamma0), n_occ)?;
    Sector::new(lattice.n_sites(), occ.n_up(), occ.n_down())
}

/// Smallest gap along an evenly spaced η grid, measured from the ground
/// level to the first level above its degenerate manifold. Returns the gap
/// and the η where it occurs.
pub fn min_gap_along_path(
    lattice: &Lattice,
    params: &HubbardParams,
    n_occ: usize,
    n_eta_samples: usize,
) -> Result<(f64, f64)> {
    if n_eta_samples < 2 {
        return invalid("gap scan needs at least two η samples");
    }
    let sector = default_sector(lattice, params.gamma0, n_occ)?;
    let gaps: Vec<(f64, f64)> = (0..n_eta_samples)
        .into_par_iter()
        .map(|k| {
            let eta = k as f64 / (n_eta_samples - 1) as f64;
            let p = HubbardParams::with_epsilon(params.gamma0, eta * params.u0, params.epsilon)?;
            Ok((solve_sector(lattice, &p, &sector)?.manifold_gap, eta))
        })
        .collect::<Result<_>>()?;
    Ok(gaps
        .into_iter()
        .fold((f64::INFINITY, 0.0), |a, b| if b.0 < a.0 { b } else { a }))
}

/// Weight of `state` inside the span of an oracle ground manifold.
pub fn ground_space_fidelity(state: &QuantumState, result: &EigenResult) -> Result<f64> {
    let v = restrict_to_sector(state, &result.sector)?;
    let amps = state.amplitudes();
    let im = DVector::from_fn(result.sector.dim(), |k, _| amps[result.sector.qubit_index(k)].im);
    Ok(result
        .ground_space
        .iter()
        .map(|g| g.dot(&v).powi(2) + g.dot(&im).powi(2))
        .sum::<f64>()
        / state.norm_sqr())
}

/// Adiabatic-limit reference: the initial determinant carried along the
/// path through the oracle ground manifolds, then measured. `None` for
/// gap-limited fillings, where the determinant has no overlap with the
/// ground manifold just after `η = 0`.
pub fn adiabatic_reference(
    lattice: &Lattice,
    params: &HubbardParams,
    n_occ: usize,
    n_eta: usize,
) -> Result<Option<(EigenResult, ObservableReport)>> {
    let model = HubbardModel::new(lattice.clone(), *params);
    let occ = default_occupation(&tight_binding_orbitals(lattice, params.gamma0), n_occ)?;
    let sector = Sector::new(lattice.n_sites(), occ.n_up(), occ.n_down())?;
    let sd = prepare_slater(&occ, &tight_binding_orbitals(lattice, params.gamma0))?;
    let start = restrict_to_sector(&sd, &sector)?;
    let Some((result, psi)) = transported_ground(lattice, params, &sector, &start, n_eta)? else {
        return Ok(None);
    };
    let state = crate::oracle::eigenpair_as_statevector(&psi, &sector)?;
    Ok(Some((result, measure_observables(&state, &model)?)))
}

/// Noisy estimate: `runs` trajectories of the gate-level program, each
/// sampled `shots` times in the Z basis with readout errors. The energy is
/// the exact expectation averaged over trajectories.
pub fn noisy_observables(
    model: &HubbardModel,
    occ: &Occupation,
    schedule: &AdiabaticSchedule,
    setup: &NoiseSetup,
    runs: usize,
    shots: usize,
    seed: u64,
) -> Result<ObservableReport> {
    if runs == 0 || shots == 0 {
        return invalid("runs and shots must be positive");
    }
    let program = NoisyProgram::new(&adiabatic_circuit(model, occ, schedule)?, &setup.profile, setup.relaxation)?;
    let n = model.n_qubits();
    let h = model.hamiltonian()?;
    let moments: Vec<Moments> = (0..runs as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = trajectory_rng(seed, r, 0);
            let mut state = QuantumState::zero(n)?;
            program.run(&mut state, &mut rng)?;
            let energy = state.expectation(&h)? / state.norm_sqr();
            let probs: Vec<f64> = state.amplitudes().iter().map(|a| a.norm_sqr()).collect();
            let dist = WeightedIndex::new(&probs).map_err(|e| Error::InvalidArgument(e.to_string()))?;
            let samples: Vec<usize> = (0..shots)
                .map(|_| {
                    let b = rng.sample(&dist);
                    let bits: Vec<u8> = (0..n).map(|q| (b >> q & 1) as u8).collect();
                    sample_readout(&bits, &setup.profile, setup.measurement_relaxation, &mut rng)
                        .iter()
                        .enumerate()
                        .fold(0usize, |acc, (q, &x)| acc | (x as usize) << q)
                })
                .collect();
            Ok(Moments::of_samples(&samples, model.n_sites(), energy))
        })
        .collect::<Result<_>>()?;
    Ok(Moments::average(&moments).report())
}
