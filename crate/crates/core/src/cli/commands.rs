use rayon::prelude::*;
use serde_json::{json, Map, Value};

use super::table::{Cell, ResultTable};
use super::{
    AdiabaticArgs, CircuitKind, Command, CommonArgs, ConvergenceArgs, DumpArgs, EdArgs, Fig8Args,
    NoiseSweepArgs, Output, Sweep, SweepMode,
};
use crate::adiabatic::{
    adiabatic_circuit, adiabatic_evolve_from, adiabatic_reference, min_gap_along_path,
    noisy_observables, AdiabaticSchedule,
};
use crate::circuits::{evolution_circuit, trotter_step, TrotterConfig};
use crate::error::{invalid, Error, Result};
use crate::iqpe::{iteration_circuit, run_iqpe_runs, IqpeConfig};
use crate::model::{HubbardModel, HubbardParams, Lattice};
use crate::noise::{NoiseField, NoiseProfile, NoiseSetup, RelaxationMode};
use crate::observables::{measure_observables, ObservableReport};
use crate::oracle::{ground, ground_observables};
use crate::prep::{default_occupation, slater_circuit, tight_binding_orbitals, Occupation};

type Manifest = Map<String, Value>;

const TIME_SCALE_POLICY: &str =
    "window [c - B, c + B], c = identity coefficient, B = one-norm of the rest times (1 + margin); t = pi / B";

pub(super) fn dispatch(command: &Command) -> Result<(Output, Manifest)> {
    match command {
        Command::GseScan(a) => gse_scan(&a.common),
        Command::Convergence(a) => convergence(a),
        Command::Adiabatic(a) => adiabatic(a),
        Command::NoiseSweep(a) => noise_sweep(a),
        Command::Fig8(a) => fig8(a),
        Command::Ed(a) => ed(a),
        Command::DumpCircuit(a) => dump_circuit(a),
    }
}

/// `"3"`, `"0,1,3"`, `"0..6"` (step 1) or `"0..3:0.5"`, inclusive.
pub fn parse_reals(s: &str) -> Result<Vec<f64>> {
    let num = |t: &str| -> Result<f64> {
        t.trim()
            .parse::<f64>()
            .map_err(|_| Error::Parse(format!("bad number '{t}' in '{s}'")))
    };
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((lo, rest)) = part.split_once("..") {
            let (hi, step) = match rest.split_once(':') {
                Some((h, st)) => (num(h)?, num(st)?),
                None => (num(rest)?, 1.0),
            };
            let lo = num(lo)?;
            if !(step > 0.0) || hi < lo {
                return Err(Error::Parse(format!("bad range '{part}'")));
            }
            let n = ((hi - lo) / step + 1e-9).floor() as usize;
            out.extend((0..=n).map(|k| lo + k as f64 * step));
        } else {
            out.push(num(part)?);
        }
    }
    if out.is_empty() {
        return Err(Error::Parse(format!("empty value list '{s}'")));
    }
    Ok(out)
}

pub fn parse_counts(s: &str) -> Result<Vec<usize>> {
    parse_reals(s)?
        .into_iter()
        .map(|x| {
            if x >= 0.0 && x.fract() == 0.0 {
                Ok(x as usize)
            } else {
                Err(Error::Parse(format!("'{x}' is not a non-negative integer in '{s}'")))
            }
        })
        .collect()
}

fn lattice(c: &CommonArgs, default: &str) -> Result<Lattice> {
    c.lattice.as_deref().unwrap_or(default).parse()
}

fn params(c: &CommonArgs, u0: f64) -> Result<HubbardParams> {
    HubbardParams::new(c.gamma0, u0)
}

fn noise_requested(c: &CommonArgs) -> bool {
    c.noise_profile.is_some() || !c.scale.is_empty()
}

/// Profile file (or the baseline) with every `--scale` applied in order.
fn base_profile(c: &CommonArgs) -> Result<(NoiseProfile, bool)> {
    let mut p = match &c.noise_profile {
        Some(path) => NoiseProfile::load(path)?,
        None => NoiseProfile::ibm_baseline(),
    };
    let mut clipped = false;
    for s in &c.scale {
        let (key, factor) = s
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("--scale expects KEY=FACTOR, got '{s}'")))?;
        let factor: f64 = factor
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad factor in '{s}'")))?;
        if key.trim() == "strength" {
            let scaled = p.with_strength(factor)?;
            clipped |= [scaled.p1q, scaled.p2q, scaled.p01, scaled.p10].contains(&1.0);
            p = scaled;
        } else {
            let (scaled, c) = p.scale(key.trim().parse()?, factor)?;
            clipped |= c;
            p = scaled;
        }
    }
    if clipped {
        eprintln!("note: scaled probabilities above 1 were clipped");
    }
    Ok((p, clipped))
}

fn setup(c: &CommonArgs, profile: NoiseProfile) -> Result<NoiseSetup> {
    Ok(NoiseSetup {
        profile,
        relaxation: if c.per_moment_relaxation {
            RelaxationMode::PerMoment
        } else {
            RelaxationMode::Deferred
        },
        measurement_relaxation: !c.no_measurement_relaxation,
        backend: c.backend.parse()?,
    })
}

fn profile_json(p: &NoiseProfile) -> Value {
    let num = |x: f64| if x.is_finite() { json!(x) } else { json!("inf") };
    json!({
        "p1q": num(p.p1q), "p2q": num(p.p2q), "t1_us": num(p.t1_us), "t2_us": num(p.t2_us),
        "t1q_ns": num(p.t1q_ns), "t2q_ns": num(p.t2q_ns), "tmeas_ns": num(p.tmeas_ns),
        "p01": num(p.p01), "p10": num(p.p10),
    })
}

/// Tolerance to enforce on each row, if any check was requested.
fn limit(c: &CommonArgs, default: f64) -> Option<f64> {
    c.tolerance.or(c.check.then_some(default))
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn default_fillings(lat: &Lattice) -> String {
    format!("1..{}", 2 * lat.n_sites() - 1)
}

fn occupation(lat: &Lattice, gamma0: f64, n_occ: usize) -> Result<Occupation> {
    default_occupation(&tight_binding_orbitals(lat, gamma0), n_occ)
}

fn common_manifest(c: &CommonArgs, lat: &Lattice) -> Manifest {
    let mut m = Manifest::new();
    m.insert("lattice".into(), json!(lat.name()));
    m.insert("gamma0".into(), json!(c.gamma0));
    m.insert("margin".into(), json!(c.margin));
    m.insert("fast_powers".into(), json!(c.fast_powers));
    m.insert("time_scale_policy".into(), json!(TIME_SCALE_POLICY));
    if let Some(t) = c.tolerance {
        m.insert("tolerance".into(), json!(t));
    }
    m.insert("check".into(), json!(c.check));
    m
}

fn noise_manifest(m: &mut Manifest, s: Option<&NoiseSetup>, clipped: bool) {
    match s {
        None => {
            m.insert("noise_profile".into(), Value::Null);
        }
        Some(s) => {
            m.insert("noise_profile".into(), profile_json(&s.profile));
            m.insert("noise_backend".into(), json!(format!("{:?}", s.backend)));
            m.insert("relaxation".into(), json!(format!("{:?}", s.relaxation)));
            m.insert("measurement_relaxation".into(), json!(s.measurement_relaxation));
            m.insert("clipped".into(), json!(clipped));
        }
    }
}

struct IqpePoint {
    mean: f64,
    std: f64,
    exact: f64,
    cfg: IqpeConfig,
}

#[allow(clippy::too_many_arguments)]
fn iqpe_point(
    c: &CommonArgs,
    lat: &Lattice,
    u0: f64,
    n_occ: usize,
    m_bits: usize,
    n_trot: usize,
    shots: usize,
    runs: usize,
    noise: Option<&NoiseSetup>,
) -> Result<IqpePoint> {
    let p = params(c, u0)?;
    let model = HubbardModel::new(lat.clone(), p);
    let mut cfg = IqpeConfig::for_model(&model, m_bits, n_trot, c.margin)?;
    cfg.shots_per_bit = shots;
    cfg.seed = c.seed;
    cfg.fast_powers = c.fast_powers;
    let occ = occupation(lat, c.gamma0, n_occ)?;
    let est = run_iqpe_runs(&model, &occ, &cfg, noise, runs)?;
    let energies: Vec<f64> = est.iter().map(|e| e.energy).collect();
    let (mean, std) = mean_std(&energies);
    Ok(IqpePoint {
        mean,
        std,
        exact: ground(lat, &p, n_occ)?.ground_energy,
        cfg,
    })
}

fn gse_scan(c: &CommonArgs) -> Result<(Output, Manifest)> {
    let lat = lattice(c, "hexagon6")?;
    let us = parse_reals(c.u0.as_deref().unwrap_or("0"))?;
    let ns = parse_counts(&c.nocc.clone().unwrap_or_else(|| default_fillings(&lat)))?;
    let (m_bits, n_trot) = (c.m_bits.unwrap_or(5), c.trotter_steps.unwrap_or(15));
    let (noise, clipped) = if noise_requested(c) {
        let (p, clipped) = base_profile(c)?;
        (Some(setup(c, p)?), clipped)
    } else {
        (None, false)
    };
    let runs = c.runs.unwrap_or(if noise.is_some() { 20 } else { 1 });
    let shots = c.shots.unwrap_or(if noise.is_some() { 1024 } else { 1 });
    let grid: Vec<(f64, usize)> = us.iter().flat_map(|&u| ns.iter().map(move |&n| (u, n))).collect();
    let points: Vec<IqpePoint> = grid
        .par_iter()
        .map(|&(u, n)| iqpe_point(c, &lat, u, n, m_bits, n_trot, shots, runs, noise.as_ref()))
        .collect::<Result<_>>()?;
    let mut t = ResultTable::new(&[
        "n_occ", "u0", "e_iqpe", "e_std", "e_exact", "abs_err", "delta_e", "t", "e_lo", "e_hi",
        "m_bits", "trotter_steps", "runs", "shots", "pass",
    ]);
    for (&(u, n), p) in grid.iter().zip(&points) {
        let err = (p.mean - p.exact).abs();
        let pass = limit(c, p.cfg.delta_e()).map(|tol| err <= tol);
        t.failures += usize::from(pass == Some(false));
        t.push(vec![
            n.into(),
            u.into(),
            p.mean.into(),
            p.std.into(),
            p.exact.into(),
            err.into(),
            p.cfg.delta_e().into(),
            p.cfg.trotter.t.into(),
            p.cfg.energy_window.0.into(),
            p.cfg.energy_window.1.into(),
            m_bits.into(),
            n_trot.into(),
            runs.into(),
            shots.into(),
            pass.into(),
        ]);
    }
    let mut m = common_manifest(c, &lat);
    m.insert("u0".into(), json!(us));
    m.insert("nocc".into(), json!(ns));
    m.insert("m_bits".into(), json!(m_bits));
    m.insert("trotter_steps".into(), json!(n_trot));
    m.insert("runs".into(), json!(runs));
    m.insert("shots".into(), json!(shots));
    noise_manifest(&mut m, noise.as_ref(), clipped);
    Ok((Output::Table(t), m))
}

fn convergence(a: &ConvergenceArgs) -> Result<(Output, Manifest)> {
    let c = &a.common;
    let lat = lattice(c, "hexagon6")?;
    let u0 = parse_reals(c.u0.as_deref().unwrap_or("3"))?;
    let ns = parse_counts(c.nocc.as_deref().unwrap_or("3,6,9"))?;
    let default_values = match a.sweep {
        Sweep::M => "2..5",
        Sweep::Trotter => "1,2,4,8,12,15",
    };
    let values = parse_counts(a.values.as_deref().unwrap_or(default_values))?;
    let (m_fixed, trot_fixed) = (c.m_bits.unwrap_or(5), c.trotter_steps.unwrap_or(15));
    let mut grid: Vec<(f64, usize, usize)> = Vec::new();
    for &u in &u0 {
        for &n in &ns {
            grid.extend(values.iter().map(|&v| (u, n, v)));
        }
    }
    let points: Vec<IqpePoint> = grid
        .par_iter()
        .map(|&(u, n, v)| {
            let (m, tr) = match a.sweep {
                Sweep::M => (v, trot_fixed),
                Sweep::Trotter => (m_fixed, v),
            };
            iqpe_point(c, &lat, u, n, m, tr, 1, 1, None)
        })
        .collect::<Result<_>>()?;
    let mut t = ResultTable::new(&[
        "sweep", "value", "n_occ", "u0", "m_bits", "trotter_steps", "e_iqpe", "e_exact", "abs_err",
        "delta_e", "t", "e_lo", "e_hi", "pass",
    ]);
    let sweep = match a.sweep {
        Sweep::M => "m_bits",
        Sweep::Trotter => "trotter_steps",
    };
    for (&(u, n, v), p) in grid.iter().zip(&points) {
        let err = (p.mean - p.exact).abs();
        let pass = limit(c, p.cfg.delta_e()).map(|tol| err <= tol);
        t.failures += usize::from(pass == Some(false));
        t.push(vec![
            sweep.into(),
            v.into(),
            n.into(),
            u.into(),
            p.cfg.m_bits.into(),
            p.cfg.trotter.n_steps.into(),
            p.mean.into(),
            p.exact.into(),
            err.into(),
            p.cfg.delta_e().into(),
            p.cfg.trotter.t.into(),
            p.cfg.energy_window.0.into(),
            p.cfg.energy_window.1.into(),
            pass.into(),
        ]);
    }
    let mut m = common_manifest(c, &lat);
    m.insert("sweep".into(), json!(sweep));
    m.insert("values".into(), json!(values));
    m.insert("u0".into(), json!(u0));
    m.insert("nocc".into(), json!(ns));
    m.insert("m_bits".into(), json!(m_fixed));
    m.insert("trotter_steps".into(), json!(trot_fixed));
    Ok((Output::Table(t), m))
}

fn observable_entries(r: &ObservableReport) -> Vec<(&'static str, usize, f64)> {
    let mut out: Vec<(&'static str, usize, f64)> = r
        .series()
        .iter()
        .flat_map(|(name, v)| v.iter().enumerate().map(move |(i, &x)| (*name, i, x)))
        .collect();
    out.push(("energy", 0, r.energy));
    out
}

fn adiabatic(a: &AdiabaticArgs) -> Result<(Output, Manifest)> {
    let c = &a.common;
    let lat = lattice(c, "hexagon6")?;
    let us = parse_reals(c.u0.as_deref().unwrap_or("3"))?;
    let default_nocc = format!("2..{}", 2 * lat.n_sites() - 2);
    let ns = parse_counts(c.nocc.as_deref().unwrap_or(&default_nocc))?;
    let mut schedule = AdiabaticSchedule::from_dt(a.total_time, a.dt)?;
    schedule.alternate_order = !a.fixed_order;
    let (noise, clipped) = if noise_requested(c) {
        let (p, clipped) = base_profile(c)?;
        (Some(setup(c, p)?), clipped)
    } else {
        (None, false)
    };
    let runs = c.runs.unwrap_or(20);
    let shots = c.shots.unwrap_or(1000);
    let grid: Vec<(f64, usize)> = us.iter().flat_map(|&u| ns.iter().map(move |&n| (u, n))).collect();
    struct Point {
        sim: ObservableReport,
        exact: ObservableReport,
        gap_limited: bool,
        gap: (f64, f64),
    }
    let points: Vec<Option<Point>> = grid
        .par_iter()
        .map(|&(u, n)| -> Result<Option<Point>> {
            let p = params(c, u)?;
            let model = HubbardModel::new(lat.clone(), p);
            let reference = adiabatic_reference(&lat, &p, n, a.transport_points)?;
            let gap_limited = reference.is_none();
            if gap_limited && !c.include_gapless {
                return Ok(None);
            }
            let exact = match reference {
                Some((_, obs)) => obs,
                None => ground_observables(&ground(&lat, &p, n)?, &model)?,
            };
            let occ = occupation(&lat, c.gamma0, n)?;
            let sim = match &noise {
                None => measure_observables(&adiabatic_evolve_from(&model, &occ, &schedule)?, &model)?,
                Some(s) => noisy_observables(&model, &occ, &schedule, s, runs, shots, c.seed)?,
            };
            Ok(Some(Point {
                sim,
                exact,
                gap_limited,
                gap: min_gap_along_path(&lat, &p, n, a.gap_samples)?,
            }))
        })
        .collect::<Result<_>>()?;
    let mut t = ResultTable::new(&[
        "n_occ", "u0", "observable", "index", "simulated", "exact", "abs_err", "gap_limited",
        "min_gap", "eta_min_gap", "pass",
    ]);
    for (&(u, n), p) in grid.iter().zip(&points) {
        let Some(p) = p else { continue };
        for ((name, i, sim), (_, _, exact)) in observable_entries(&p.sim).into_iter().zip(observable_entries(&p.exact)) {
            let err = (sim - exact).abs();
            let pass = if name == "energy" || p.gap_limited {
                None
            } else {
                limit(c, 0.02).map(|tol| err <= tol)
            };
            t.failures += usize::from(pass == Some(false));
            t.push(vec![
                n.into(),
                u.into(),
                name.into(),
                i.into(),
                sim.into(),
                exact.into(),
                err.into(),
                p.gap_limited.into(),
                p.gap.0.into(),
                p.gap.1.into(),
                pass.into(),
            ]);
        }
    }
    let mut m = common_manifest(c, &lat);
    m.insert("u0".into(), json!(us));
    m.insert("nocc".into(), json!(ns));
    m.insert("total_time".into(), json!(schedule.total_time));
    m.insert("dt".into(), json!(schedule.dt()));
    m.insert("n_steps".into(), json!(schedule.n_steps()));
    m.insert("alternate_order".into(), json!(schedule.alternate_order));
    m.insert("include_gapless".into(), json!(c.include_gapless));
    m.insert("transport_points".into(), json!(a.transport_points));
    if noise.is_some() {
        m.insert("runs".into(), json!(runs));
        m.insert("shots".into(), json!(shots));
    }
    noise_manifest(&mut m, noise.as_ref(), clipped);
    Ok((Output::Table(t), m))
}

/// `base` with every channel off except the one being swept. Duration
/// sweeps keep relaxation on, since durations act only through it.
pub fn isolated_profile(base: &NoiseProfile, field: NoiseField) -> NoiseProfile {
    let mut p = NoiseProfile {
        t1q_ns: base.t1q_ns,
        t2q_ns: base.t2q_ns,
        tmeas_ns: base.tmeas_ns,
        ..NoiseProfile::noiseless()
    };
    match field {
        NoiseField::P1q => p.p1q = base.p1q,
        NoiseField::P2q => p.p2q = base.p2q,
        NoiseField::T1 => p.t1_us = base.t1_us,
        NoiseField::T2 => p.t2_us = base.t2_us,
        NoiseField::Thermal | NoiseField::T1q | NoiseField::T2q | NoiseField::Tmeas => {
            p.t1_us = base.t1_us;
            p.t2_us = base.t2_us;
        }
        NoiseField::P01 => p.p01 = base.p01,
        NoiseField::P10 => p.p10 = base.p10,
        NoiseField::Readout => {
            p.p01 = base.p01;
            p.p10 = base.p10;
        }
    }
    p
}

fn noise_sweep(a: &NoiseSweepArgs) -> Result<(Output, Manifest)> {
    let c = &a.common;
    let lat = lattice(c, "triangle")?;
    let u0 = parse_reals(c.u0.as_deref().unwrap_or("3"))?;
    let n_occ = parse_counts(&c.nocc.clone().unwrap_or_else(|| lat.n_sites().to_string()))?;
    if u0.len() != 1 || n_occ.len() != 1 {
        return invalid("noise-sweep takes a single --u0 and --nocc");
    }
    let (u0, n_occ) = (u0[0], n_occ[0]);
    let field: NoiseField = a.param.parse()?;
    let factors = parse_reals(&a.factors)?;
    let (m_bits, n_trot) = (c.m_bits.unwrap_or(4), c.trotter_steps.unwrap_or(12));
    let runs = c.runs.unwrap_or(50);
    let shots = c.shots.unwrap_or(50_000);
    let (base, base_clipped) = base_profile(c)?;
    let start = match a.mode {
        SweepMode::Isolated => isolated_profile(&base, field),
        SweepMode::Baseline => base,
    };
    let profiles: Vec<(NoiseProfile, bool)> = factors
        .iter()
        .map(|&f| start.scale(field, f))
        .collect::<Result<_>>()?;
    let points: Vec<IqpePoint> = profiles
        .iter()
        .map(|(p, _)| iqpe_point(c, &lat, u0, n_occ, m_bits, n_trot, shots, runs, Some(&setup(c, *p)?)))
        .collect::<Result<_>>()?;
    let mut t = ResultTable::new(&[
        "param", "mode", "factor", "p1q", "p2q", "t1_us", "t2_us", "t1q_ns", "t2q_ns", "mean_e",
        "std_e", "e_exact", "abs_err", "delta_e", "t", "e_lo", "e_hi", "runs", "shots", "clipped",
    ]);
    let mode = match a.mode {
        SweepMode::Isolated => "isolated",
        SweepMode::Baseline => "baseline",
    };
    for ((&f, (p, clipped)), pt) in factors.iter().zip(&profiles).zip(&points) {
        t.push(vec![
            field.to_string().into(),
            mode.into(),
            f.into(),
            p.p1q.into(),
            p.p2q.into(),
            p.t1_us.into(),
            p.t2_us.into(),
            p.t1q_ns.into(),
            p.t2q_ns.into(),
            pt.mean.into(),
            pt.std.into(),
            pt.exact.into(),
            (pt.mean - pt.exact).abs().into(),
            pt.cfg.delta_e().into(),
            pt.cfg.trotter.t.into(),
            pt.cfg.energy_window.0.into(),
            pt.cfg.energy_window.1.into(),
            runs.into(),
            shots.into(),
            (*clipped || base_clipped).into(),
        ]);
    }
    let mut m = common_manifest(c, &lat);
    m.insert("param".into(), json!(field.to_string()));
    m.insert("mode".into(), json!(mode));
    m.insert("factors".into(), json!(factors));
    m.insert("u0".into(), json!(u0));
    m.insert("nocc".into(), json!(n_occ));
    m.insert("m_bits".into(), json!(m_bits));
    m.insert("trotter_steps".into(), json!(n_trot));
    m.insert("runs".into(), json!(runs));
    m.insert("shots".into(), json!(shots));
    noise_manifest(&mut m, Some(&setup(c, base)?), base_clipped);
    Ok((Output::Table(t), m))
}

fn fig8(a: &Fig8Args) -> Result<(Output, Manifest)> {
    let c = &a.common;
    let lat = lattice(c, "triangle")?;
    let us = parse_reals(c.u0.as_deref().unwrap_or("0..6"))?;
    let n_occ = parse_counts(&c.nocc.clone().unwrap_or_else(|| lat.n_sites().to_string()))?;
    if n_occ.len() != 1 {
        return invalid("fig8 takes a single --nocc");
    }
    let n_occ = n_occ[0];
    let (m_bits, n_trot) = (c.m_bits.unwrap_or(4), c.trotter_steps.unwrap_or(12));
    let runs = c.runs.unwrap_or(20);
    let shots = c.shots.unwrap_or(10_000);
    let (base, clipped) = base_profile(c)?;
    let half = base.with_strength(0.5)?;
    let mut variants = vec![
        ("noisy-baseline", base, m_bits, n_trot, runs, shots),
        ("noisy-half", half, m_bits, n_trot, runs, shots),
    ];
    if !a.no_improved {
        variants.push(("noisy-improved", base, 5, 15, a.improved_runs, a.improved_shots));
        variants.push(("noisy-improved-half", half, 5, 15, a.improved_runs, a.improved_shots));
    }
    let mut t = ResultTable::new(&[
        "u0", "variant", "m_bits", "trotter_steps", "runs", "shots", "mean_e", "std_e", "e_exact",
        "abs_err", "delta_e",
    ]);
    for &u in &us {
        let exact = ground(&lat, &params(c, u)?, n_occ)?.ground_energy;
        t.push(vec![
            u.into(),
            "exact".into(),
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            exact.into(),
            0.0.into(),
            exact.into(),
            0.0.into(),
            Cell::Empty,
        ]);
        for &(name, profile, m, tr, r, s) in &variants {
            let p = iqpe_point(c, &lat, u, n_occ, m, tr, s, r, Some(&setup(c, profile)?))?;
            t.push(vec![
                u.into(),
                name.into(),
                m.into(),
                tr.into(),
                r.into(),
                s.into(),
                p.mean.into(),
                p.std.into(),
                p.exact.into(),
                (p.mean - p.exact).abs().into(),
                p.cfg.delta_e().into(),
            ]);
        }
    }
    let mut m = common_manifest(c, &lat);
    m.insert("u0".into(), json!(us));
    m.insert("nocc".into(), json!(n_occ));
    m.insert("half_profile".into(), profile_json(&half));
    noise_manifest(&mut m, Some(&setup(c, base)?), clipped);
    Ok((Output::Table(t), m))
}

fn ed(a: &EdArgs) -> Result<(Output, Manifest)> {
    let c = &a.common;
    let lat = lattice(c, "hexagon6")?;
    let us = parse_reals(c.u0.as_deref().unwrap_or("3"))?;
    let ns = parse_counts(&c.nocc.clone().unwrap_or_else(|| default_fillings(&lat)))?;
    let grid: Vec<(f64, usize)> = us.iter().flat_map(|&u| ns.iter().map(move |&n| (u, n))).collect();
    let results = grid
        .par_iter()
        .map(|&(u, n)| ground(&lat, &params(c, u)?, n))
        .collect::<Result<Vec<_>>>()?;
    let t = if a.observables {
        let mut t = ResultTable::new(&["n_occ", "u0", "observable", "index", "value"]);
        for (&(u, n), r) in grid.iter().zip(&results) {
            let model = HubbardModel::new(lat.clone(), params(c, u)?);
            for (name, i, v) in observable_entries(&ground_observables(r, &model)?) {
                t.push(vec![n.into(), u.into(), name.into(), i.into(), v.into()]);
            }
        }
        t
    } else {
        let mut t = ResultTable::new(&[
            "n_occ", "u0", "n_up", "n_down", "energy", "gap", "manifold_gap", "degeneracy", "sector_dim",
        ]);
        for (&(u, n), r) in grid.iter().zip(&results) {
            t.push(vec![
                n.into(),
                u.into(),
                r.sector.n_up().into(),
                r.sector.n_down().into(),
                r.ground_energy.into(),
                r.gap.into(),
                r.manifold_gap.into(),
                r.degeneracy().into(),
                r.sector.dim().into(),
            ]);
        }
        t
    };
    let mut m = common_manifest(c, &lat);
    m.insert("u0".into(), json!(us));
    m.insert("nocc".into(), json!(ns));
    Ok((Output::Table(t), m))
}

fn dump_circuit(a: &DumpArgs) -> Result<(Output, Manifest)> {
    let c = &a.common;
    let lat = lattice(c, "hexagon6")?;
    let u0 = parse_reals(c.u0.as_deref().unwrap_or("3"))?[0];
    let n_occ = parse_counts(&c.nocc.clone().unwrap_or_else(|| lat.n_sites().to_string()))?[0];
    let model = HubbardModel::new(lat.clone(), params(c, u0)?);
    let occ = occupation(&lat, c.gamma0, n_occ)?;
    let m_bits = c.m_bits.unwrap_or(5);
    let n_trot = c.trotter_steps.unwrap_or(15);
    let (name, circuit) = match a.kind {
        CircuitKind::TrotterStep => ("trotter-step", trotter_step(&model, a.time.unwrap_or(0.1), &[])?),
        CircuitKind::Evolution => {
            let t = match a.time {
                Some(t) => t,
                None => IqpeConfig::for_model(&model, m_bits, n_trot, c.margin)?.trotter.t,
            };
            ("evolution", evolution_circuit(&model, &TrotterConfig::new(n_trot, t)?, &[])?)
        }
        CircuitKind::Slater => ("slater", slater_circuit(&occ, &tight_binding_orbitals(&lat, c.gamma0))?),
        CircuitKind::IqpeIteration => {
            let mut cfg = IqpeConfig::for_model(&model, m_bits, n_trot, c.margin)?;
            cfg.fast_powers = c.fast_powers;
            ("iqpe-iteration", iteration_circuit(&model, &occ, &cfg, a.iteration, a.omega)?)
        }
        CircuitKind::Adiabatic => {
            let s = AdiabaticSchedule::from_dt(a.time.unwrap_or(40.0), 0.1)?;
            ("adiabatic", adiabatic_circuit(&model, &occ, &s)?)
        }
    };
    let header = format!(
        "# {name} gates={} two_qubit={}\n",
        circuit.len(),
        circuit.two_qubit_count()
    );
    let lines: Vec<String> = circuit.gates().iter().map(|g| g.dump_line()).collect();
    let doc = json!({
        "kind": name,
        "n_qubits": circuit.n_qubits(),
        "two_qubit_count": circuit.two_qubit_count(),
        "gates": lines,
    });
    let mut m = common_manifest(c, &lat);
    m.insert("kind".into(), json!(name));
    m.insert("u0".into(), json!(u0));
    m.insert("nocc".into(), json!(n_occ));
    Ok((Output::Text(header + &circuit.dump(), doc), m))
}
