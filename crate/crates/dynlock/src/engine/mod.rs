//! Exact dense propagation of a spin cluster under a pulse sequence.
//!
//! Two evaluation paths share the same cycle propagators. `Direct` steps the
//! density matrix cycle by cycle and supports offset schedules. `Floquet`
//! diagonalizes the cycle propagator once and evaluates every stroboscopic
//! sample from the eigenphases, which is much cheaper for large clusters.

mod compile;
mod propagate;

use std::fmt::Write as _;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::effective::LockingFieldCalc;
use crate::sequence::{PulseEvent, PulseSequence};
use crate::spinops::{unitary_eigen, weighted_spin_sum, Axis, SpinSystem};
use crate::{Error, Result};
use compile::{compile, Timeline};
use propagate::{apply_weighted, conj_t, evolve, spin_expectations, CycleBuilder};

/// Initial deviation density operator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    AlongX,
    AlongY,
    AlongZ,
    /// Each spin along the locking-field direction of its species at the initial offset.
    AlongLockingAxis,
    SingleSpin { spin: usize, axis: Axis },
}

/// Where samples are taken within each cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    PerAcquire,
    PerCycle,
    SubCycle(usize),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Auto,
    Direct,
    Floquet,
}

/// Piecewise-linear offset `ν(t)` in Hz for one species; points are `(t_s, ν_hz)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffsetSchedule {
    pub species: String,
    pub points: Vec<(f64, f64)>,
}

impl OffsetSchedule {
    pub fn constant(species: &str, nu: f64, duration: f64) -> Self {
        OffsetSchedule { species: species.into(), points: vec![(0.0, nu), (duration, nu)] }
    }

    /// Linear ramps through `(duration_i, ν_i)` legs starting at `ν_0`.
    pub fn ramps(species: &str, nu0: f64, legs: &[(f64, f64)]) -> Self {
        let mut t = 0.0;
        let mut points = vec![(0.0, nu0)];
        for (dt, nu) in legs {
            t += dt;
            points.push((t, *nu));
        }
        OffsetSchedule { species: species.into(), points }
    }

    pub fn duration(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.0)
    }

    fn validate(&self) -> Result<()> {
        if self.points.is_empty() || self.points[0].0 != 0.0 {
            return Err(Error::Config(format!("offset schedule for {} must start at t = 0", self.species)));
        }
        if self.points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Config(format!("offset schedule for {} needs increasing times", self.species)));
        }
        Ok(())
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        let last = self.points.last().ok_or_else(|| Error::Config("empty offset schedule".into()))?;
        if t > last.0 * (1.0 + 1e-12) {
            return Err(Error::Config(format!("offset schedule for {} ends at {:e} s before {t:e} s", self.species, last.0)));
        }
        for w in self.points.windows(2) {
            if t <= w[1].0 {
                let f = (t - w[0].0) / (w[1].0 - w[0].0);
                return Ok(w[0].1 + f.clamp(0.0, 1.0) * (w[1].1 - w[0].1));
            }
        }
        Ok(last.1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub system: SpinSystem,
    pub sequence: PulseSequence,
    pub n_cycles: usize,
    pub initial_state: InitialState,
    /// Restrict the initial state to one species; all spins when absent.
    #[serde(default)]
    pub initial_species: Option<String>,
    pub sampling: Sampling,
    #[serde(default)]
    pub offset_schedule: Vec<OffsetSchedule>,
    /// Record per-spin `⟨I_x,i⟩`.
    #[serde(default)]
    pub per_spin: bool,
    #[serde(default)]
    pub method: Method,
}

impl SimulationConfig {
    pub fn new(system: SpinSystem, sequence: PulseSequence, n_cycles: usize) -> Self {
        SimulationConfig {
            system,
            sequence,
            n_cycles,
            initial_state: InitialState::AlongX,
            initial_species: None,
            sampling: Sampling::PerAcquire,
            offset_schedule: Vec::new(),
            per_spin: false,
            method: Method::Auto,
        }
    }

    pub fn with_initial(mut self, s: InitialState) -> Self {
        self.initial_state = s;
        self
    }

    pub fn with_initial_species(mut self, label: &str) -> Self {
        self.initial_species = Some(label.into());
        self
    }

    pub fn with_sampling(mut self, s: Sampling) -> Self {
        self.sampling = s;
        self
    }

    pub fn with_schedule(mut self, s: OffsetSchedule) -> Self {
        self.offset_schedule.push(s);
        self
    }

    pub fn with_per_spin(mut self, on: bool) -> Self {
        self.per_spin = on;
        self
    }

    pub fn with_method(mut self, m: Method) -> Self {
        self.method = m;
        self
    }
}

/// Species-summed expectation values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeciesTrace {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl SpeciesTrace {
    pub fn magnitude(&self) -> Vec<f64> {
        (0..self.x.len()).map(|k| (self.x[k].powi(2) + self.y[k].powi(2) + self.z[k].powi(2)).sqrt()).collect()
    }

    /// `⟨I_x⟩ + i⟨I_y⟩`.
    pub fn complex_signal(&self) -> Vec<C64> {
        self.x.iter().zip(&self.y).map(|(x, y)| C64::new(*x, *y)).collect()
    }
}

/// Sampled observables normalized by `Tr(ρ(0)²)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub species: Vec<SpeciesTrace>,
    /// `⟨I_x,i⟩` per spin.
    pub per_spin: Option<Vec<Vec<f64>>>,
    /// `Tr(ρ(0)²)`.
    pub norm: f64,
    pub dim: usize,
}

impl Trajectory {
    pub fn species(&self, label: &str) -> Result<&SpeciesTrace> {
        self.species
            .iter()
            .find(|s| s.label == label)
            .ok_or_else(|| Error::Config(format!("no species '{label}' in trajectory")))
    }

    /// Sum over species.
    pub fn total(&self) -> SpeciesTrace {
        let n = self.times.len();
        let mut t = SpeciesTrace { label: "total".into(), x: vec![0.0; n], y: vec![0.0; n], z: vec![0.0; n] };
        for s in &self.species {
            for k in 0..n {
                t.x[k] += s.x[k];
                t.y[k] += s.y[k];
                t.z[k] += s.z[k];
            }
        }
        t
    }

    /// CSV with header `t_s,Ix,Iy,Iz,species,spin`; per-spin rows carry only `Ix`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_s,Ix,Iy,Iz,species,spin\n");
        for (k, t) in self.times.iter().enumerate() {
            for s in &self.species {
                let _ = writeln!(out, "{t:e},{:e},{:e},{:e},{},", s.x[k], s.y[k], s.z[k], s.label);
            }
            if let Some(ps) = &self.per_spin {
                for (i, tr) in ps.iter().enumerate() {
                    let _ = writeln!(out, "{t:e},{:e},,,,{i}", tr[k]);
                }
            }
        }
        out
    }
}

/// Output of [`run_offset_schedule`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleOutcome {
    pub trajectory: Trajectory,
    /// `|⟨I⟩|` at the last sample over `|⟨I⟩|` at t = 0, for the initialized species.
    pub recovered_polarization: f64,
}

fn initial_spins(cfg: &SimulationConfig) -> Result<Vec<bool>> {
    let sys = &cfg.system;
    match &cfg.initial_species {
        None => Ok(vec![true; sys.n_spins()]),
        Some(l) => {
            let s = sys.species_index(l)?;
            Ok(sys.spin_species().iter().map(|&x| x == s).collect())
        }
    }
}

fn offsets_at(cfg: &SimulationConfig, t: f64) -> Result<Vec<f64>> {
    let sys = &cfg.system;
    let mut nu = sys.offsets().to_vec();
    for s in &cfg.offset_schedule {
        nu[sys.species_index(&s.species)?] = s.value(t)?;
    }
    Ok(nu)
}

fn initial_density(cfg: &SimulationConfig) -> Result<Array2<C64>> {
    let sys = &cfg.system;
    let n = sys.n_spins();
    let on = initial_spins(cfg)?;
    let mut dirs: Vec<[f64; 3]> = vec![[0.0; 3]; n];
    match cfg.initial_state {
        InitialState::AlongX | InitialState::AlongY | InitialState::AlongZ => {
            let a = match cfg.initial_state {
                InitialState::AlongX => Axis::X,
                InitialState::AlongY => Axis::Y,
                _ => Axis::Z,
            };
            for i in 0..n {
                if on[i] {
                    dirs[i] = a.unit();
                }
            }
        }
        InitialState::AlongLockingAxis => {
            let nu0 = offsets_at(cfg, 0.0)?;
            let ideal = cfg.sequence.idealized();
            for (s, sp) in sys.species().iter().enumerate() {
                let dir = if ideal.channels.iter().any(|c| *c == sp.label) {
                    LockingFieldCalc::for_channel(&ideal, &sp.label)?.principal(nu0[s]).direction()
                } else {
                    [0.0, 0.0, 1.0]
                };
                for i in sys.spins_of(s) {
                    if on[i] {
                        dirs[i] = dir;
                    }
                }
            }
        }
        InitialState::SingleSpin { spin, axis } => {
            if spin >= n {
                return Err(Error::Config(format!("seed spin {spin} out of range for {n} spins")));
            }
            dirs[spin] = axis.unit();
        }
    }
    let d = 1usize << n;
    let mut rho = Array2::<C64>::zeros((d, d));
    for (a, axis) in Axis::ALL.into_iter().enumerate() {
        let w: Vec<f64> = dirs.iter().map(|v| v[a]).collect();
        if w.iter().any(|x| *x != 0.0) {
            rho += &weighted_spin_sum(n, axis, &w);
        }
    }
    Ok(rho)
}

fn validate(cfg: &SimulationConfig) -> Result<()> {
    cfg.system.validate()?;
    cfg.sequence.validate()?;
    if cfg.n_cycles == 0 {
        return Err(Error::Config("n_cycles must be at least 1".into()));
    }
    for c in &cfg.sequence.channels {
        cfg.system.species_index(c).map_err(|_| Error::Config(format!("channel '{c}' is not a species of the system")))?;
    }
    let total = cfg.n_cycles as f64 * cfg.sequence.cycle_duration();
    for s in &cfg.offset_schedule {
        s.validate()?;
        cfg.system.species_index(&s.species)?;
        if s.duration() < total * (1.0 - 1e-12) {
            return Err(Error::Config(format!(
                "offset schedule for {} covers {:e} s but the run lasts {total:e} s",
                s.species,
                s.duration()
            )));
        }
    }
    Ok(())
}

struct Recorder {
    n: usize,
    spin_species: Vec<usize>,
    n_species: usize,
    per_spin: bool,
    norm: f64,
    values: Vec<Vec<f64>>,
}

impl Recorder {
    /// Columns: `3·n_species` species components then optional per-spin x.
    fn n_cols(&self) -> usize {
        3 * self.n_species + if self.per_spin { self.n } else { 0 }
    }

    fn push_density(&mut self, rho: &Array2<C64>) {
        let ex = spin_expectations(rho, self.n);
        let mut row = vec![0.0; self.n_cols()];
        for (i, e) in ex.iter().enumerate() {
            let s = self.spin_species[i];
            for a in 0..3 {
                row[3 * s + a] += e[a] / self.norm;
            }
            if self.per_spin {
                row[3 * self.n_species + i] = e[0] / self.norm;
            }
        }
        self.values.push(row);
    }
}

fn finish(cfg: &SimulationConfig, rec: Recorder, times: Vec<f64>) -> Trajectory {
    let sys = &cfg.system;
    let species = sys
        .species()
        .iter()
        .enumerate()
        .map(|(s, sp)| SpeciesTrace {
            label: sp.label.clone(),
            x: rec.values.iter().map(|r| r[3 * s]).collect(),
            y: rec.values.iter().map(|r| r[3 * s + 1]).collect(),
            z: rec.values.iter().map(|r| r[3 * s + 2]).collect(),
        })
        .collect();
    let per_spin = rec
        .per_spin
        .then(|| (0..rec.n).map(|i| rec.values.iter().map(|r| r[3 * rec.n_species + i]).collect()).collect());
    Trajectory { times, species, per_spin, norm: rec.norm, dim: 1 << rec.n }
}

fn sample_times(tl: &Timeline, n_cycles: usize) -> Vec<f64> {
    let mut t = vec![0.0];
    for l in 0..n_cycles {
        for tm in &tl.mark_times {
            t.push(l as f64 * tl.t_c + tm);
        }
    }
    t
}

fn run_direct(cfg: &SimulationConfig, tl: &Timeline, rec: &mut Recorder, rho0: Array2<C64>) -> Result<()> {
    let mut builder = CycleBuilder::new(&cfg.system);
    let end_mark = tl.mark_times.iter().map(|t| (t - tl.t_c).abs() <= 1e-12 * tl.t_c).collect::<Vec<_>>();
    let mut rho = rho0;
    rec.push_density(&rho);
    let mut cached: Option<(Vec<f64>, _)> = None;
    for l in 0..cfg.n_cycles {
        let nu = offsets_at(cfg, l as f64 * tl.t_c)?;
        if cached.as_ref().map_or(true, |(k, _)| *k != nu) {
            let props = builder.cycle(tl, &nu)?;
            cached = Some((nu, props));
        }
        let props = &cached.as_ref().expect("cycle").1;
        let next = evolve(&props.u, &rho);
        for (j, s) in props.marks.iter().enumerate() {
            if end_mark[j] {
                rec.push_density(&next);
            } else {
                rec.push_density(&evolve(s, &rho));
            }
        }
        rho = next;
    }
    Ok(())
}

fn run_floquet(cfg: &SimulationConfig, tl: &Timeline, rec: &mut Recorder, rho0: Array2<C64>) -> Result<()> {
    let sys = &cfg.system;
    let n = sys.n_spins();
    let nu = offsets_at(cfg, 0.0)?;
    let props = CycleBuilder::new(sys).cycle(tl, &nu)?;
    let eig = unitary_eigen(&props.u)?;
    let w = &eig.vectors;
    let wd = conj_t(w);
    let rt = wd.dot(&rho0).dot(w);
    rec.push_density(&rho0);

    // observables as (column, axis, weights)
    let mut obs: Vec<(usize, Axis, Vec<f64>)> = Vec::new();
    for s in 0..sys.species().len() {
        for (a, axis) in Axis::ALL.into_iter().enumerate() {
            obs.push((3 * s + a, axis, sys.species_mask(s)));
        }
    }
    if rec.per_spin {
        for i in 0..n {
            let mut wts = vec![0.0; n];
            wts[i] = 1.0;
            obs.push((3 * sys.species().len() + i, Axis::X, wts));
        }
    }
    // M_ab = ρ̃_ab Õ_ba, with Õ = V† O V and V = S_j W
    let mut kernels: Vec<Vec<(usize, Array2<C64>)>> = Vec::new();
    for s in &props.marks {
        let v = s.dot(w);
        let vd = conj_t(&v);
        let mut per = Vec::new();
        for (col, axis, wts) in &obs {
            let o = vd.dot(&apply_weighted(n, *axis, wts, &v));
            let m = &rt * &o.t();
            per.push((*col, m));
        }
        kernels.push(per);
    }
    let phases = &eig.phases;
    let cols = rec.n_cols();
    for l in 0..cfg.n_cycles {
        let q: Vec<C64> = phases.iter().map(|p| C64::from_polar(1.0, p * l as f64)).collect();
        let qc: ndarray::Array1<C64> = q.iter().map(|z| z.conj()).collect();
        for per in &kernels {
            let mut row = vec![0.0; cols];
            for (col, m) in per {
                let mq = m.dot(&qc);
                let v: C64 = q.iter().zip(mq.iter()).map(|(a, b)| a * b).sum();
                row[*col] = v.re / rec.norm;
            }
            rec.values.push(row);
        }
    }
    Ok(())
}

/// Propagate the cluster and sample species observables.
pub fn run_simulation(cfg: &SimulationConfig) -> Result<Trajectory> {
    validate(cfg)?;
    let tl = compile(&cfg.sequence, &cfg.system, cfg.sampling)?;
    let rho0 = initial_density(cfg)?;
    let norm: f64 = rho0.iter().map(|z| z.norm_sqr()).sum();
    if norm == 0.0 {
        return Err(Error::Config("initial state is empty".into()));
    }
    let mut rec = Recorder {
        n: cfg.system.n_spins(),
        spin_species: cfg.system.spin_species().to_vec(),
        n_species: cfg.system.species().len(),
        per_spin: cfg.per_spin,
        norm,
        values: Vec::new(),
    };
    let d = rho0.nrows();
    let floquet = match cfg.method {
        Method::Floquet => {
            if !cfg.offset_schedule.is_empty() {
                return Err(Error::Config("Floquet evaluation needs a constant offset".into()));
            }
            true
        }
        Method::Direct => false,
        Method::Auto => d >= 256 && cfg.offset_schedule.is_empty() && cfg.n_cycles > 8,
    };
    if floquet {
        run_floquet(cfg, &tl, &mut rec, rho0)?;
    } else {
        run_direct(cfg, &tl, &mut rec, rho0)?;
    }
    Ok(finish(cfg, rec, sample_times(&tl, cfg.n_cycles)))
}

/// Check that every pulse group addresses every channel.
pub fn check_synchronized(seq: &PulseSequence) -> Result<()> {
    if seq.channels.len() < 2 {
        return Err(Error::Config("two-species driving needs at least two channels".into()));
    }
    let mut group: Vec<&str> = Vec::new();
    let flush = |g: &mut Vec<&str>| -> Result<()> {
        if !g.is_empty() {
            for c in &seq.channels {
                if !g.contains(&c.as_str()) {
                    return Err(Error::Config(format!("pulse group without a pulse on channel '{c}': timing not synchronized")));
                }
            }
            g.clear();
        }
        Ok(())
    };
    for e in &seq.events {
        match e {
            PulseEvent::Pulse { channel, .. } => group.push(channel),
            _ => flush(&mut group)?,
        }
    }
    flush(&mut group)
}

/// Synchronized driving of two or more species.
pub fn run_two_species(cfg: &SimulationConfig) -> Result<Trajectory> {
    check_synchronized(&cfg.sequence)?;
    run_simulation(cfg)
}

/// Polarization of `target` relative to its thermal value when the initial state
/// carries the thermal polarization of `source`.
///
/// Uses `|⟨S⟩|` and the gyromagnetic ratios of the two species.
pub fn polarization_enhancement(traj: &Trajectory, system: &SpinSystem, source: &str, target: &str) -> Result<Vec<f64>> {
    let (si, ti) = (system.species_index(source)?, system.species_index(target)?);
    let n_src = system.spins_of(si).len() as f64;
    let n_tgt = system.spins_of(ti).len() as f64;
    let ratio = system.species()[si].gamma_mhz_per_t / system.species()[ti].gamma_mhz_per_t;
    Ok(traj.species(target)?.magnitude().iter().map(|m| m * n_src / n_tgt * ratio.abs()).collect())
}

/// Run with a time-dependent offset held constant over each cycle.
pub fn run_offset_schedule(cfg: &SimulationConfig) -> Result<ScheduleOutcome> {
    let mut cfg = cfg.clone();
    if cfg.method == Method::Floquet {
        cfg.method = Method::Direct;
    }
    let trajectory = run_simulation(&cfg)?;
    let sel = match &cfg.initial_species {
        Some(l) => trajectory.species(l)?.clone(),
        None => trajectory.total(),
    };
    let m = sel.magnitude();
    let recovered_polarization = m[m.len() - 1] / m[0];
    Ok(ScheduleOutcome { trajectory, recovered_polarization })
}

/// Single-seed run with per-spin `⟨I_x,i⟩` traces.
pub fn per_spin_traces(cfg: &SimulationConfig) -> Result<Trajectory> {
    if !matches!(cfg.initial_state, InitialState::SingleSpin { .. }) {
        return Err(Error::Config("per-spin traces need a single-spin initial state".into()));
    }
    let mut cfg = cfg.clone();
    cfg.per_spin = true;
    run_simulation(&cfg)
}

/// One-cycle propagator of the sequence at the system's offsets.
pub fn cycle_propagator(system: &SpinSystem, seq: &PulseSequence) -> Result<Array2<C64>> {
    let tl = compile(seq, system, Sampling::PerCycle)?;
    Ok(CycleBuilder::new(system).cycle(&tl, system.offsets())?.u)
}

/// Propagators of one cycle at each acquisition marker, with the marker times.
#[derive(Clone, Debug)]
pub struct AcquisitionPropagators {
    pub times: Vec<f64>,
    pub at_acquire: Vec<Array2<C64>>,
    pub cycle: Array2<C64>,
    pub cycle_duration: f64,
}

pub fn acquisition_propagators(system: &SpinSystem, seq: &PulseSequence) -> Result<AcquisitionPropagators> {
    let tl = compile(seq, system, Sampling::PerAcquire)?;
    let props = CycleBuilder::new(system).cycle(&tl, system.offsets())?;
    Ok(AcquisitionPropagators { times: tl.mark_times, at_acquire: props.marks, cycle: props.u, cycle_duration: tl.t_c })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effective::{dressed_dipolar_propagator, q_product_operator};
    use crate::sequence::{dsl4, parse_sequence, Dsl4Variant};
    use crate::spinops::{Cluster, Species};

    fn dsl(tau: f64) -> PulseSequence {
        dsl4(tau, 0.0, Dsl4Variant::Canonical).unwrap()
    }

    #[test]
    fn free_spin_at_zero_offset_stays_put() {
        let sys = SpinSystem::homonuclear(1, "H").unwrap();
        let tr = run_simulation(&SimulationConfig::new(sys, dsl(20e-6), 10)).unwrap();
        assert_eq!(tr.times.len(), 41);
        for v in &tr.species[0].x {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cycle_matches_dressed_factorization() {
        let sys = Cluster::Prism6.system(3000.0).unwrap();
        let seq = dsl(20e-6);
        for k in -10..=10 {
            let s = sys.clone().with_uniform_offset(k as f64 * 500.0);
            let u = cycle_propagator(&s, &seq).unwrap();
            let ud = dressed_dipolar_propagator(&seq, &s).unwrap();
            let q = q_product_operator(&seq, &s).unwrap();
            let f = ud.matrix().dot(q.matrix());
            let diff = (&u - &f).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(diff < 1e-10, "ν = {}: {diff:e}", k * 500);
        }
    }

    #[test]
    fn floquet_matches_direct() {
        let sys = Cluster::Prism6.system(3000.0).unwrap().with_uniform_offset(-2900.0);
        let cfg = SimulationConfig::new(sys, dsl(20e-6), 20).with_per_spin(true);
        let a = run_simulation(&cfg.clone().with_method(Method::Direct)).unwrap();
        let b = run_simulation(&cfg.with_method(Method::Floquet)).unwrap();
        for (u, v) in a.species[0].x.iter().zip(&b.species[0].x) {
            assert!((u - v).abs() < 1e-9);
        }
        let (pa, pb) = (a.per_spin.unwrap(), b.per_spin.unwrap());
        for i in 0..6 {
            for (u, v) in pa[i].iter().zip(&pb[i]) {
                assert!((u - v).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn magnitude_conserved_without_couplings() {
        let sys = SpinSystem::homonuclear(3, "H").unwrap().with_uniform_offset(-1400.0);
        let seq = dsl4(20e-6, 2e-6, Dsl4Variant::Canonical).unwrap();
        let tr = run_simulation(&SimulationConfig::new(sys, seq, 30).with_sampling(Sampling::SubCycle(8))).unwrap();
        for m in tr.species[0].magnitude() {
            assert!((m - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn finite_pulses_without_offset_match_ideal_rotations() {
        let sys = SpinSystem::homonuclear(2, "H").unwrap();
        let finite = parse_sequence("tau 10u; d1; p90 y 2u; d1; p90 -x 3u; d1; p180 x 4u; d1; acq").unwrap();
        let u = cycle_propagator(&sys, &finite).unwrap();
        let v = cycle_propagator(&sys, &finite.idealized()).unwrap();
        let diff = (&u - &v).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-12, "{diff:e}");
    }

    #[test]
    fn schedule_too_short_is_rejected() {
        let sys = SpinSystem::homonuclear(1, "H").unwrap();
        let seq = dsl(20e-6);
        let cfg = SimulationConfig::new(sys, seq, 10).with_schedule(OffsetSchedule::constant("H", 100.0, 1e-3));
        assert!(matches!(run_offset_schedule(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn constant_schedule_equals_plain_run() {
        let sys = Cluster::Tetra4.system(3000.0).unwrap().with_uniform_offset(700.0);
        let seq = dsl(20e-6);
        let plain = run_simulation(&SimulationConfig::new(sys.clone(), seq.clone(), 12)).unwrap();
        let cfg = SimulationConfig::new(sys, seq, 12).with_schedule(OffsetSchedule::constant("H", 700.0, 12.0 * 480e-6));
        let out = run_offset_schedule(&cfg).unwrap();
        for (a, b) in plain.species[0].x.iter().zip(&out.trajectory.species[0].x) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn unsynchronized_two_channel_sequence_is_rejected() {
        let seq = parse_sequence("tau 5u; channel H; channel C; d1; p90 x @H; d1; p90 x @H; p90 x @C; d1; acq").unwrap();
        let sys = SpinSystem::new(vec![Species::from_label("H"), Species::from_label("C")], vec![0, 1]).unwrap();
        let cfg = SimulationConfig::new(sys, seq, 2);
        assert!(matches!(run_two_species(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn csv_header() {
        let sys = SpinSystem::homonuclear(1, "H").unwrap();
        let tr = run_simulation(&SimulationConfig::new(sys, dsl(20e-6), 1)).unwrap();
        let csv = tr.to_csv();
        assert!(csv.starts_with("t_s,Ix,Iy,Iz,species,spin\n"));
        assert_eq!(csv.lines().count(), 6);
    }
}
