//! Gate depolarizing, thermal relaxation and readout noise, simulated by
//! Monte Carlo wavefunction trajectories.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::engine::{prob_of_bit_unchecked, Circuit, CompiledGate, Gate, GateKind, QuantumState};
use crate::error::{invalid, Error, Result};

/// Device noise parameters. Times are in microseconds (`t1_us`, `t2_us`)
/// and nanoseconds (gate and measurement durations). `p01` is the
/// probability of reading 1 from state 0, `p10` of reading 0 from 1.
/// Infinite `t1_us`/`t2_us` switch relaxation off.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseProfile {
    pub p1q: f64,
    pub p2q: f64,
    pub t1_us: f64,
    pub t2_us: f64,
    pub t1q_ns: f64,
    pub t2q_ns: f64,
    pub tmeas_ns: f64,
    pub p01: f64,
    pub p10: f64,
}

const KEYS: [&str; 9] = [
    "p1q", "p2q", "t1_us", "t2_us", "t1q_ns", "t2q_ns", "tmeas_ns", "p01", "p10",
];

impl NoiseProfile {
    /// Median calibration of the reference superconducting device.
    pub fn ibm_baseline() -> Self {
        Self {
            p1q: 2.230e-4,
            p2q: 7.986e-3,
            t1_us: 300.0,
            t2_us: 160.0,
            t1q_ns: 60.0,
            t2q_ns: 660.0,
            tmeas_ns: 1000.0,
            p01: 0.022,
            p10: 0.016,
        }
    }

    /// Every channel off; durations keep their baseline values.
    pub fn noiseless() -> Self {
        Self {
            p1q: 0.0,
            p2q: 0.0,
            t1_us: f64::INFINITY,
            t2_us: f64::INFINITY,
            p01: 0.0,
            p10: 0.0,
            ..Self::ibm_baseline()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("p1q", self.p1q),
            ("p2q", self.p2q),
            ("p01", self.p01),
            ("p10", self.p10),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return invalid(format!("{name} = {p} is not a probability"));
            }
        }
        for (name, t) in [
            ("t1_us", self.t1_us),
            ("t2_us", self.t2_us),
            ("t1q_ns", self.t1q_ns),
            ("t2q_ns", self.t2q_ns),
            ("tmeas_ns", self.tmeas_ns),
        ] {
            if t.is_nan() || t < 0.0 {
                return invalid(format!("{name} = {t} must be non-negative"));
            }
        }
        if self.t1_us <= 0.0 || self.t2_us <= 0.0 {
            return invalid("T1 and T2 must be positive");
        }
        if self.t2_us > 2.0 * self.t1_us {
            return invalid(format!(
                "T2 = {} us exceeds 2 T1 = {} us",
                self.t2_us,
                2.0 * self.t1_us
            ));
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.p1q == 0.0
            && self.p2q == 0.0
            && self.t1_us.is_infinite()
            && self.t2_us.is_infinite()
            && self.p01 == 0.0
            && self.p10 == 0.0
    }

    /// Multiplies the selected parameters by `factor`. Probabilities that
    /// would exceed 1 are clipped and reported through the returned flag.
    /// Overall noise strength: every error probability times `factor`,
    /// T1 and T2 divided by it. Gate and measurement durations are unchanged.
    pub fn with_strength(&self, factor: f64) -> Result<NoiseProfile> {
        if !factor.is_finite() || factor <= 0.0 {
            return invalid(format!("strength factor {factor} must be positive"));
        }
        let mut p = *self;
        for x in [&mut p.p1q, &mut p.p2q, &mut p.p01, &mut p.p10] {
            *x = (*x * factor).min(1.0);
        }
        p.t1_us /= factor;
        p.t2_us /= factor;
        p.validate()?;
        Ok(p)
    }

    pub fn scale(&self, field: NoiseField, factor: f64) -> Result<(NoiseProfile, bool)> {
        if !factor.is_finite() || factor < 0.0 {
            return invalid(format!("scale factor {factor} must be finite and non-negative"));
        }
        let mut p = *self;
        let mut clipped = false;
        let mut prob = |x: &mut f64| {
            *x *= factor;
            if *x > 1.0 {
                *x = 1.0;
                clipped = true;
            }
        };
        match field {
            NoiseField::P1q => prob(&mut p.p1q),
            NoiseField::P2q => prob(&mut p.p2q),
            NoiseField::P01 => prob(&mut p.p01),
            NoiseField::P10 => prob(&mut p.p10),
            NoiseField::Readout => {
                prob(&mut p.p01);
                prob(&mut p.p10);
            }
            NoiseField::T1 => p.t1_us *= factor,
            NoiseField::T2 => p.t2_us *= factor,
            NoiseField::Thermal => {
                p.t1_us *= factor;
                p.t2_us *= factor;
            }
            NoiseField::T1q => p.t1q_ns *= factor,
            NoiseField::T2q => p.t2q_ns *= factor,
            NoiseField::Tmeas => p.tmeas_ns *= factor,
        }
        p.validate()?;
        Ok((p, clipped))
    }

    fn values(&self) -> [f64; 9] {
        [
            self.p1q,
            self.p2q,
            self.t1_us,
            self.t2_us,
            self.t1q_ns,
            self.t2q_ns,
            self.tmeas_ns,
            self.p01,
            self.p10,
        ]
    }

    /// `key = value` lines; every key must be present exactly once.
    /// Blank lines and `#` comments are ignored.
    pub fn parse_kv(text: &str) -> Result<Self> {
        let mut vals: [Option<f64>; 9] = [None; 9];
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", lineno + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            let slot = KEYS
                .iter()
                .position(|&key| key == k)
                .ok_or_else(|| Error::Parse(format!("line {}: unknown key {k:?}", lineno + 1)))?;
            if vals[slot].is_some() {
                return Err(Error::Parse(format!("line {}: duplicate key {k:?}", lineno + 1)));
            }
            let x: f64 = v
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad number {v:?}", lineno + 1)))?;
            vals[slot] = Some(x);
        }
        let mut out = [0.0; 9];
        for (k, v) in vals.iter().enumerate() {
            out[k] = v.ok_or_else(|| Error::Parse(format!("missing key {:?}", KEYS[k])))?;
        }
        let p = Self {
            p1q: out[0],
            p2q: out[1],
            t1_us: out[2],
            t2_us: out[3],
            t1q_ns: out[4],
            t2q_ns: out[5],
            tmeas_ns: out[6],
            p01: out[7],
            p10: out[8],
        };
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse_kv(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_string())?;
        Ok(())
    }

    fn duration_ns(&self, gate: &Gate) -> f64 {
        if gate.controls.is_empty() {
            self.t1q_ns
        } else {
            self.t2q_ns
        }
    }

    /// `(γ, p_φ)` of thermal relaxation over `d_ns`: damping probability
    /// `1 - e^{-d/T1}` and phase-flip probability `(1 - e^{-d/T2'})/2` with
    /// `1/T2' = 1/T2 - 1/(2 T1)`.
    pub fn relaxation(&self, d_ns: f64) -> (f64, f64) {
        let d = d_ns * 1e-3;
        let gamma = -(-d / self.t1_us).exp_m1();
        let rate = (1.0 / self.t2_us - 0.5 / self.t1_us).max(0.0);
        let p_phi = -0.5 * (-d * rate).exp_m1();
        (gamma, p_phi)
    }
}

impl Default for NoiseProfile {
    fn default() -> Self {
        Self::ibm_baseline()
    }
}

impl fmt::Display for NoiseProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in KEYS.iter().zip(self.values()) {
            writeln!(f, "{k} = {v:?}")?;
        }
        Ok(())
    }
}

/// Parameter group selected by [`NoiseProfile::scale`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseField {
    P1q,
    P2q,
    T1,
    T2,
    /// T1 and T2 together.
    Thermal,
    T1q,
    T2q,
    Tmeas,
    P01,
    P10,
    /// Both readout flip probabilities.
    Readout,
}

impl FromStr for NoiseField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "p1q" => Self::P1q,
            "p2q" => Self::P2q,
            "t1" | "t1_us" => Self::T1,
            "t2" | "t2_us" => Self::T2,
            "thermal" | "t1t2" | "t1,t2" => Self::Thermal,
            "t1q" | "t1q_ns" => Self::T1q,
            "t2q" | "t2q_ns" => Self::T2q,
            "tmeas" | "tmeas_ns" => Self::Tmeas,
            "p01" => Self::P01,
            "p10" => Self::P10,
            "readout" => Self::Readout,
            other => return Err(Error::Parse(format!("unknown noise field {other:?}"))),
        })
    }
}

impl fmt::Display for NoiseField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::P1q => "p1q",
            Self::P2q => "p2q",
            Self::T1 => "t1",
            Self::T2 => "t2",
            Self::Thermal => "thermal",
            Self::T1q => "t1q",
            Self::T2q => "t2q",
            Self::Tmeas => "tmeas",
            Self::P01 => "p01",
            Self::P10 => "p10",
            Self::Readout => "readout",
        })
    }
}

/// ASAP layering of a circuit. `moments[k]` lists gate indices; each qubit
/// appears at most once per moment.
#[derive(Clone, Debug, PartialEq)]
pub struct ScheduledCircuit {
    pub moments: Vec<Vec<usize>>,
    pub durations_ns: Vec<f64>,
    moment_of: Vec<usize>,
}

impl ScheduledCircuit {
    pub fn total_duration_ns(&self) -> f64 {
        self.durations_ns.iter().sum()
    }

    pub fn moment_of(&self, gate: usize) -> usize {
        self.moment_of[gate]
    }
}

pub fn schedule(circuit: &Circuit, profile: &NoiseProfile) -> ScheduledCircuit {
    let mut free_at = vec![0usize; circuit.n_qubits()];
    let mut moments: Vec<Vec<usize>> = Vec::new();
    let mut durations_ns: Vec<f64> = Vec::new();
    let mut moment_of = Vec::with_capacity(circuit.len());
    for (k, g) in circuit.gates().iter().enumerate() {
        let m = g.qubits().map(|q| free_at[q]).max().unwrap_or(0);
        if m == moments.len() {
            moments.push(Vec::new());
            durations_ns.push(0.0);
        }
        moments[m].push(k);
        durations_ns[m] = durations_ns[m].max(profile.duration_ns(g));
        for q in g.qubits() {
            free_at[q] = m + 1;
        }
        moment_of.push(m);
    }
    ScheduledCircuit {
        moments,
        durations_ns,
        moment_of,
    }
}

/// How relaxation is laid onto a schedule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum RelaxationMode {
    /// One sampled relaxation step per qubit per moment.
    PerMoment,
    /// A qubit's idle moments are merged into one step taken just before its
    /// next gate (or at the end). Thermal relaxation over consecutive
    /// intervals composes to relaxation over their sum, so the averaged
    /// channel is the same as `PerMoment`.
    #[default]
    Deferred,
}

/// Per-trajectory random stream keyed by `(master_seed, run, shot)`.
pub fn trajectory_rng(master_seed: u64, run: u64, shot: u64) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&master_seed.to_le_bytes());
    seed[8..16].copy_from_slice(&run.to_le_bytes());
    seed[16..24].copy_from_slice(&shot.to_le_bytes());
    seed[24..].copy_from_slice(b"hubbardq");
    ChaCha8Rng::from_seed(seed)
}

fn pauli_gate(q: usize, which: u8) -> Option<CompiledGate> {
    let kind = match which {
        1 => GateKind::X,
        2 => GateKind::Y,
        3 => GateKind::Z,
        _ => return None,
    };
    Some(CompiledGate::new(&Gate::new(kind, q)))
}

/// Applies a uniformly random non-identity Pauli on `q` (1 of 3).
fn depolarize_1q<R: Rng + ?Sized>(amps: &mut [Complex64], q: usize, rng: &mut R) {
    let which = rng.random_range(1..4u8);
    if let Some(g) = pauli_gate(q, which) {
        g.apply(amps);
    }
}

/// Applies a uniformly random non-identity two-qubit Pauli (1 of 15).
fn depolarize_2q<R: Rng + ?Sized>(amps: &mut [Complex64], a: usize, b: usize, rng: &mut R) {
    let k = rng.random_range(1..16u8);
    for (q, which) in [(a, k / 4), (b, k % 4)] {
        if let Some(g) = pauli_gate(q, which) {
            g.apply(amps);
        }
    }
}

/// One sampled thermal-relaxation step on qubit `q`: amplitude-damping
/// Kraus branch with state-dependent probability, then a phase flip.
fn relax_amps<R: Rng + ?Sized>(
    amps: &mut [Complex64],
    q: usize,
    gamma: f64,
    p_phi: f64,
    rng: &mut R,
) {
    let mask = 1usize << q;
    if gamma > 0.0 {
        let p1 = prob_of_bit_unchecked(amps, q, 1);
        let total: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        let jump = gamma * p1 / total;
        if rng.random::<f64>() < jump {
            let s = 1.0 / p1.sqrt();
            for i in 0..amps.len() {
                if i & mask == 0 {
                    amps[i] = amps[i | mask] * s;
                    amps[i | mask] = Complex64::new(0.0, 0.0);
                }
            }
        } else {
            let keep = (1.0 - gamma).sqrt();
            let s = 1.0 / (total - gamma * p1).sqrt();
            for (i, a) in amps.iter_mut().enumerate() {
                if i & mask == 0 {
                    *a *= s;
                } else {
                    *a *= keep * s;
                }
            }
        }
    }
    if p_phi > 0.0 && rng.random::<f64>() < p_phi {
        for (i, a) in amps.iter_mut().enumerate() {
            if i & mask != 0 {
                *a = -*a;
            }
        }
    }
}

/// Thermal relaxation of one qubit for `d_ns` nanoseconds.
pub fn relax_qubit<R: Rng + ?Sized>(
    state: &mut QuantumState,
    q: usize,
    d_ns: f64,
    profile: &NoiseProfile,
    rng: &mut R,
) -> Result<()> {
    if q >= state.n_qubits() {
        return invalid(format!("qubit {q} outside register"));
    }
    let (gamma, p_phi) = profile.relaxation(d_ns);
    relax_amps(state.amplitudes_mut(), q, gamma, p_phi, rng);
    Ok(())
}

fn gate_noise<R: Rng + ?Sized>(
    amps: &mut [Complex64],
    gate: &Gate,
    profile: &NoiseProfile,
    rng: &mut R,
) {
    if gate.controls.is_empty() {
        if profile.p1q > 0.0 && rng.random::<f64>() < profile.p1q {
            depolarize_1q(amps, gate.target, rng);
        }
    } else if profile.p2q > 0.0 {
        for &c in &gate.controls {
            if rng.random::<f64>() < profile.p2q {
                depolarize_2q(amps, c, gate.target, rng);
            }
        }
    }
}

/// Executes one moment: each gate followed by its depolarizing channel,
/// then relaxation of every qubit for `duration_ns`.
pub fn trajectory_step<R: Rng + ?Sized>(
    state: &mut QuantumState,
    moment: &[Gate],
    duration_ns: f64,
    profile: &NoiseProfile,
    rng: &mut R,
) -> Result<()> {
    for g in moment {
        state.apply(g)?;
        gate_noise(state.amplitudes_mut(), g, profile, rng);
    }
    let (gamma, p_phi) = profile.relaxation(duration_ns);
    for q in 0..state.n_qubits() {
        relax_amps(state.amplitudes_mut(), q, gamma, p_phi, rng);
    }
    Ok(())
}

#[derive(Clone, Debug)]
enum Op {
    Gate(CompiledGate, usize),
    Relax { q: usize, gamma: f64, p_phi: f64 },
}

/// `conj(U)` acting on the column half of a vectorized density matrix.
fn column_gate(g: &Gate, n: usize) -> Result<CompiledGate> {
    let controls: Vec<usize> = g.controls.iter().map(|c| c + n).collect();
    let shifted = match g.kind {
        GateKind::H | GateKind::X | GateKind::Z | GateKind::Ry(_) => Gate::new(g.kind, g.target + n),
        k => {
            let m = k.matrix();
            Gate::unitary(g.target + n, [[m[0][0].conj(), m[0][1].conj()], [m[1][0].conj(), m[1][1].conj()]])?
        }
    };
    Ok(CompiledGate::new(&shifted.controlled_by(&controls)))
}

/// A circuit compiled against a noise profile for repeated trajectories.
///
/// Gates run in their original order; a qubit's relaxation for the moments
/// since its previous gate is applied right before its next gate, and
/// whatever remains is applied at the end.
#[derive(Clone, Debug)]
pub struct NoisyProgram {
    n_qubits: usize,
    gates: Vec<Gate>,
    ops: Vec<Op>,
    /// Index into `ops` where the work for each gate begins.
    gate_op_start: Vec<usize>,
    column_gates: Vec<CompiledGate>,
    profile: NoiseProfile,
    duration_ns: f64,
}

impl NoisyProgram {
    pub fn new(circuit: &Circuit, profile: &NoiseProfile, mode: RelaxationMode) -> Result<Self> {
        profile.validate()?;
        let sched = schedule(circuit, profile);
        let n_moments = sched.moments.len();
        let thermal = profile.t1_us.is_finite() || profile.t2_us.is_finite();
        let mut ops = Vec::with_capacity(circuit.len() * 2);
        let mut relaxed_to = vec![0usize; circuit.n_qubits()];
        let mut flush = |ops: &mut Vec<Op>, q: usize, until: usize| {
            let from = relaxed_to[q];
            relaxed_to[q] = until;
            if !thermal || from >= until {
                return;
            }
            let spans: Vec<f64> = match mode {
                RelaxationMode::PerMoment => sched.durations_ns[from..until].to_vec(),
                RelaxationMode::Deferred => vec![sched.durations_ns[from..until].iter().sum()],
            };
            for d in spans {
                let (gamma, p_phi) = profile.relaxation(d);
                if gamma > 0.0 || p_phi > 0.0 {
                    ops.push(Op::Relax { q, gamma, p_phi });
                }
            }
        };
        let mut gate_op_start = Vec::with_capacity(circuit.len());
        for (k, g) in circuit.gates().iter().enumerate() {
            gate_op_start.push(ops.len());
            let m = sched.moment_of(k);
            for q in g.qubits() {
                flush(&mut ops, q, m);
            }
            ops.push(Op::Gate(CompiledGate::new(g), k));
        }
        for q in 0..circuit.n_qubits() {
            flush(&mut ops, q, n_moments);
        }
        Ok(Self {
            n_qubits: circuit.n_qubits(),
            gates: circuit.gates().to_vec(),
            ops,
            gate_op_start,
            column_gates: circuit
                .gates()
                .iter()
                .map(|g| column_gate(g, circuit.n_qubits()))
                .collect::<Result<_>>()?,
            profile: *profile,
            duration_ns: sched.total_duration_ns(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn duration_ns(&self) -> f64 {
        self.duration_ns
    }

    pub fn profile(&self) -> &NoiseProfile {
        &self.profile
    }

    /// Runs one trajectory in place.
    pub fn run<R: Rng + ?Sized>(&self, state: &mut QuantumState, rng: &mut R) -> Result<()> {
        if state.n_qubits() != self.n_qubits {
            return invalid("state and program registers differ");
        }
        let amps = state.amplitudes_mut();
        for op in &self.ops {
            match op {
                Op::Gate(g, k) => {
                    g.apply(amps);
                    gate_noise(amps, &self.gates[*k], &self.profile, rng);
                }
                Op::Relax { q, gamma, p_phi } => relax_amps(amps, *q, *gamma, *p_phi, rng),
            }
        }
        Ok(())
    }
}

impl NoisyProgram {
    /// Applies the trajectory-averaged channel to a density matrix.
    pub fn run_density(&self, rho: &mut DensityMatrix) -> Result<()> {
        self.run_density_ops(rho, 0..self.ops.len())
    }

    /// Position in the operation list where gate `k` starts; every
    /// operation before it depends only on gates `0..k`.
    pub(crate) fn op_index_of_gate(&self, k: usize) -> usize {
        self.gate_op_start.get(k).copied().unwrap_or(self.ops.len())
    }

    pub(crate) fn n_ops(&self) -> usize {
        self.ops.len()
    }

    pub(crate) fn run_density_ops(
        &self,
        rho: &mut DensityMatrix,
        range: std::ops::Range<usize>,
    ) -> Result<()> {
        if rho.n_qubits != self.n_qubits {
            return invalid("density matrix and program registers differ");
        }
        for op in &self.ops[range] {
            match op {
                Op::Gate(g, k) => {
                    let gate = &self.gates[*k];
                    g.apply(&mut rho.data);
                    self.column_gates[*k].apply(&mut rho.data);
                    if gate.controls.is_empty() {
                        rho.depolarize(&[gate.target], self.profile.p1q);
                    } else {
                        for &c in &gate.controls {
                            rho.depolarize(&[c, gate.target], self.profile.p2q);
                        }
                    }
                }
                Op::Relax { q, gamma, p_phi } => rho.relax(*q, *gamma, *p_phi),
            }
        }
        Ok(())
    }
}

/// Mixed state of `n` qubits, stored as a `2n`-qubit vector with `ρ[r][c]`
/// at index `r | c << n`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    pub const MAX_QUBITS: usize = 12;

    pub fn from_pure(state: &QuantumState) -> Result<Self> {
        let n = state.n_qubits();
        if n > Self::MAX_QUBITS {
            return Err(Error::ResourceLimit(format!(
                "density matrix of {n} qubits exceeds {}",
                Self::MAX_QUBITS
            )));
        }
        let a = state.amplitudes();
        let dim = a.len();
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        for c in 0..dim {
            for r in 0..dim {
                data[r | c << n] = a[r] * a[c].conj();
            }
        }
        Ok(Self { n_qubits: n, data })
    }

    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::from_pure(&QuantumState::zero(n_qubits)?)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn entry(&self, r: usize, c: usize) -> Complex64 {
        self.data[r | c << self.n_qubits]
    }

    pub fn trace(&self) -> f64 {
        (0..1usize << self.n_qubits).map(|i| self.entry(i, i).re).sum()
    }

    pub fn prob_of_bit(&self, q: usize, bit: u8) -> Result<f64> {
        if q >= self.n_qubits {
            return invalid(format!("qubit {q} outside register"));
        }
        Ok((0..1usize << self.n_qubits)
            .filter(|i| (i >> q & 1) as u8 == bit & 1)
            .map(|i| self.entry(i, i).re)
            .sum())
    }

    /// `(1-p)ρ + p/(4^k-1) Σ_{P≠I} PρP` over the Paulis on `qubits`.
    fn depolarize(&mut self, qubits: &[usize], p: f64) {
        if p <= 0.0 {
            return;
        }
        let n = self.n_qubits;
        let k = qubits.len();
        let block = 1usize << k;
        let lambda = p * (block * block) as f64 / (block * block - 1) as f64;
        let spread = |a: usize| {
            qubits
                .iter()
                .enumerate()
                .fold(0usize, |acc, (j, &q)| acc | (a >> j & 1) << q)
        };
        let row_off: Vec<usize> = (0..block).map(spread).collect();
        let col_off: Vec<usize> = row_off.iter().map(|o| o << n).collect();
        let mask = row_off.iter().fold(0, |a, o| a | o) | col_off.iter().fold(0, |a, o| a | o);
        let mut diag = vec![Complex64::new(0.0, 0.0); block];
        for base in 0..self.data.len() {
            if base & mask != 0 {
                continue;
            }
            let mut tr = Complex64::new(0.0, 0.0);
            for a in 0..block {
                diag[a] = self.data[base | row_off[a] | col_off[a]];
                tr += diag[a];
            }
            for a in 0..block {
                for b in 0..block {
                    let e = &mut self.data[base | row_off[a] | col_off[b]];
                    *e *= 1.0 - lambda;
                    if a == b {
                        *e += tr * (lambda / block as f64);
                    }
                }
            }
        }
    }

    fn relax(&mut self, q: usize, gamma: f64, p_phi: f64) {
        let r = 1usize << q;
        let c = r << self.n_qubits;
        let off = (1.0 - gamma).sqrt() * (1.0 - 2.0 * p_phi);
        for base in 0..self.data.len() {
            if base & (r | c) != 0 {
                continue;
            }
            let d11 = self.data[base | r | c];
            self.data[base] += d11 * gamma;
            self.data[base | r | c] = d11 * (1.0 - gamma);
            self.data[base | r] *= off;
            self.data[base | c] *= off;
        }
    }
}

/// Classical readout error on measured bits: optional relaxation over the
/// measurement window (a 1 decays to 0 with probability `1 - e^{-t_meas/T1}`),
/// then independent asymmetric flips.
pub fn sample_readout<R: Rng + ?Sized>(
    bits: &[u8],
    profile: &NoiseProfile,
    measurement_relaxation: bool,
    rng: &mut R,
) -> Vec<u8> {
    let (gamma_meas, _) = profile.relaxation(profile.tmeas_ns);
    bits.iter()
        .map(|&b| {
            let mut b = b & 1;
            if b == 1 && measurement_relaxation && gamma_meas > 0.0 && rng.random::<f64>() < gamma_meas {
                b = 0;
            }
            let flip = if b == 0 { profile.p01 } else { profile.p10 };
            if flip > 0.0 && rng.random::<f64>() < flip {
                b ^= 1;
            }
            b
        })
        .collect()
}

/// How noisy shots are simulated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum NoiseBackend {
    /// Density matrix up to [`NoiseSetup::AUTO_DENSITY_QUBITS`], trajectories above.
    #[default]
    Auto,
    /// One sampled trajectory per shot.
    Trajectories,
    /// Exact averaged channel; shots are drawn from its outcome probability.
    DensityMatrix,
}

impl FromStr for NoiseBackend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Self::Auto),
            "trajectories" => Ok(Self::Trajectories),
            "density" => Ok(Self::DensityMatrix),
            _ => invalid(format!("unknown noise backend '{s}' (auto|trajectories|density)")),
        }
    }
}

/// Noise applied to every shot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSetup {
    pub profile: NoiseProfile,
    pub relaxation: RelaxationMode,
    /// Relaxation during the measurement window before readout flips.
    pub measurement_relaxation: bool,
    pub backend: NoiseBackend,
}

impl NoiseSetup {
    pub const AUTO_DENSITY_QUBITS: usize = 9;

    pub fn new(profile: NoiseProfile) -> Self {
        Self {
            profile,
            relaxation: RelaxationMode::default(),
            measurement_relaxation: true,
            backend: NoiseBackend::default(),
        }
    }

    pub fn uses_density(&self, n_qubits: usize) -> bool {
        match self.backend {
            NoiseBackend::Auto => n_qubits <= Self::AUTO_DENSITY_QUBITS,
            NoiseBackend::Trajectories => false,
            NoiseBackend::DensityMatrix => true,
        }
    }

    /// Probability of reading 1 from a qubit that is 1 with probability `p1`
    /// at the end of the circuit.
    pub fn readout_probability(&self, p1: f64) -> f64 {
        let mut p = p1;
        if self.measurement_relaxation {
            p *= 1.0 - self.profile.relaxation(self.profile.tmeas_ns).0;
        }
        p * (1.0 - self.profile.p10) + (1.0 - p) * self.profile.p01
    }
}
