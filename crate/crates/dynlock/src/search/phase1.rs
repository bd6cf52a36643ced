use std::collections::HashMap;

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fidelity::{fidelity, reward_phase1};
use super::strategy::SearchStrategy;
use crate::sequence::{serialize_sequence, validate_cyclic, Phase, PulseEvent, PulseSequence};
use crate::spinops::{collective_operator, coupling_hamiltonian, Axis, HermitianEigen, LocalUnitary, Mat2, Operator, SpinSystem};
use crate::{hz_to_rad, Error, Result};

/// One environment step: an ideal 90° pulse followed by τ, or τ of free evolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase1Action {
    Pulse(Phase),
    Free,
}

impl Phase1Action {
    pub const ALL: [Phase1Action; 5] = [
        Phase1Action::Pulse(Phase::X),
        Phase1Action::Pulse(Phase::MinusX),
        Phase1Action::Pulse(Phase::Y),
        Phase1Action::Pulse(Phase::MinusY),
        Phase1Action::Free,
    ];
}

/// Target evolution `exp(−i t H_tgt)`.
#[derive(Clone, Debug)]
pub enum Phase1Target {
    /// Offset-scaled Zeeman evolution `(ω/3) I_z` at the system's offset, couplings absent.
    DipolarDecoupling,
    /// Arbitrary Hermitian generator in rad/s.
    Custom(Operator),
}

#[derive(Clone, Debug)]
pub struct Phase1Config {
    pub tau: f64,
    pub n_max: usize,
    pub f_opt: f64,
    pub top_k: usize,
}

impl Default for Phase1Config {
    fn default() -> Self {
        Phase1Config { tau: 5e-6, n_max: 6, f_opt: 0.999, top_k: 5 }
    }
}

/// Step/reset environment for Phase-1 sequence construction.
#[derive(Clone, Debug)]
pub struct Phase1Env {
    n_spins: usize,
    tau: f64,
    n_max: usize,
    f_opt: f64,
    free: Array2<C64>,
    target: HermitianEigen,
    pulses: HashMap<Phase, LocalUnitary>,
    pub state: Phase1State,
}

/// Environment state after some steps.
#[derive(Clone, Debug)]
pub struct Phase1State {
    pub actions: Vec<Phase1Action>,
    pub u_a: Array2<C64>,
    pub u_tgt: Array2<C64>,
    pub elapsed: f64,
}

impl Phase1State {
    pub fn steps(&self) -> usize {
        self.actions.len()
    }
}

/// Result of one step: the tentative final proposal after the new action.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    pub fidelity: f64,
    pub reward: f64,
    pub done: bool,
}

impl Phase1Env {
    pub fn new(system: &SpinSystem, target: &Phase1Target, cfg: &Phase1Config) -> Result<Self> {
        if system.species().len() != 1 {
            return Err(Error::Unsupported("Phase-1 search is homonuclear".into()));
        }
        if cfg.n_max == 0 || cfg.n_max > 24 {
            return Err(Error::Config(format!("N_max must lie in 1..=24, got {}", cfg.n_max)));
        }
        let n = system.n_spins();
        let w = hz_to_rad(system.offsets()[0]);
        let iz = collective_operator(system, Axis::Z, None)?;
        let h = coupling_hamiltonian(system).add(&iz.scaled(w));
        let free = HermitianEigen::new(&h)?.propagator(cfg.tau);
        let target = target_eigen(system, target)?;
        let pulses = Phase::ALL
            .iter()
            .map(|p| (*p, LocalUnitary { factors: vec![Mat2::rotation(p.axis(), std::f64::consts::FRAC_PI_2); n] }))
            .collect();
        let d = 1usize << n;
        Ok(Phase1Env {
            n_spins: n,
            tau: cfg.tau,
            n_max: cfg.n_max,
            f_opt: cfg.f_opt,
            free,
            target,
            pulses,
            state: Phase1State { actions: Vec::new(), u_a: Array2::eye(d), u_tgt: Array2::eye(d), elapsed: 0.0 },
        })
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn reset(&mut self) {
        let d = self.state.u_a.nrows();
        self.state = Phase1State { actions: Vec::new(), u_a: Array2::eye(d), u_tgt: Array2::eye(d), elapsed: 0.0 };
    }

    pub fn target_at(&self, t: f64) -> Array2<C64> {
        self.target.propagator(t)
    }

    fn apply(&self, u: &Array2<C64>, a: Phase1Action) -> Array2<C64> {
        let mut u = u.clone();
        if let Phase1Action::Pulse(p) = a {
            self.pulses[&p].apply_left(&mut u);
        }
        self.free.dot(&u)
    }

    pub fn step(&mut self, a: Phase1Action) -> Result<StepOutcome> {
        if self.state.actions.len() >= self.n_max {
            return Err(Error::Contract("episode already reached N_max".into()));
        }
        self.state.u_a = self.apply(&self.state.u_a, a);
        self.state.actions.push(a);
        self.state.elapsed += self.tau;
        self.state.u_tgt = self.target_at(self.state.elapsed);
        let f = fidelity(&self.state.u_a, &self.state.u_tgt)?;
        let reward = reward_phase1(f, self.f_opt);
        Ok(StepOutcome { fidelity: f, reward, done: f >= self.f_opt || self.state.actions.len() == self.n_max })
    }

    /// Fidelity of a full action list evaluated as a final proposal.
    pub fn evaluate(&self, actions: &[Phase1Action]) -> Result<f64> {
        let d = self.state.u_a.nrows();
        let mut u = Array2::eye(d);
        for a in actions {
            u = self.apply(&u, *a);
        }
        fidelity(&u, &self.target_at(actions.len() as f64 * self.tau))
    }

    pub fn to_sequence(&self, actions: &[Phase1Action]) -> Result<PulseSequence> {
        actions_to_sequence(actions, self.tau)
    }
}

/// `[pulse] τ` per action followed by one acquisition.
pub fn actions_to_sequence(actions: &[Phase1Action], tau: f64) -> Result<PulseSequence> {
    let mut ev = Vec::with_capacity(2 * actions.len() + 1);
    for a in actions {
        if let Phase1Action::Pulse(p) = a {
            ev.push(PulseEvent::pulse(*p, "H"));
        }
        match ev.last_mut() {
            Some(PulseEvent::Delay { multiple }) => *multiple += 1,
            _ => ev.push(PulseEvent::Delay { multiple: 1 }),
        }
    }
    ev.push(PulseEvent::Acquire);
    PulseSequence::new(ev, tau, vec!["H".into()])
}

/// Eigendecomposed target generator for `system`.
pub(crate) fn target_eigen(system: &SpinSystem, target: &Phase1Target) -> Result<HermitianEigen> {
    let iz = collective_operator(system, Axis::Z, None)?;
    let h_tgt = match target {
        Phase1Target::DipolarDecoupling => iz.scaled(hz_to_rad(system.offsets()[0]) / 3.0),
        Phase1Target::Custom(op) => {
            if op.dim() != iz.dim() {
                return Err(Error::Config("custom target has the wrong dimension".into()));
            }
            op.clone()
        }
    };
    HermitianEigen::new(&h_tgt)
}

/// A scored candidate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub actions: Vec<Phase1Action>,
    pub fidelity: f64,
    pub reward: f64,
    pub cyclic: bool,
    pub dsl: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Phase1Outcome {
    /// Cyclic candidates with `F ≥ F_opt`, best first.
    pub winners: Vec<Candidate>,
    /// Best cyclic candidate regardless of the threshold.
    pub best_cyclic: Option<Candidate>,
    pub evaluated: usize,
    pub strategy: String,
    pub seed: Option<u64>,
}

/// The WaHuHa cycle in the Phase-1 action encoding.
pub fn wahuha_actions() -> Vec<Phase1Action> {
    use Phase1Action::*;
    vec![Free, Pulse(Phase::X), Pulse(Phase::MinusY), Free, Pulse(Phase::Y), Pulse(Phase::MinusX)]
}

fn better(a: &Candidate, b: &Candidate) -> bool {
    a.fidelity > b.fidelity || (a.fidelity == b.fidelity && a.dsl < b.dsl)
}

struct Collector {
    f_opt: f64,
    top_k: usize,
    tau: f64,
    winners: Vec<Candidate>,
    best_cyclic: Option<Candidate>,
    evaluated: usize,
}

impl Collector {
    fn offer(&mut self, actions: &[Phase1Action], f: f64) -> Result<()> {
        self.evaluated += 1;
        let seq = actions_to_sequence(actions, self.tau)?;
        if !validate_cyclic(&seq).cyclic {
            return Ok(());
        }
        let c = Candidate { actions: actions.to_vec(), fidelity: f, reward: reward_phase1(f, self.f_opt), cyclic: true, dsl: serialize_sequence(&seq) };
        if self.best_cyclic.as_ref().map_or(true, |b| better(&c, b)) {
            self.best_cyclic = Some(c.clone());
        }
        if f >= self.f_opt {
            self.push_winner(c);
        }
        Ok(())
    }

    fn push_winner(&mut self, c: Candidate) {
        if self.winners.iter().any(|w| w.dsl == c.dsl) {
            return;
        }
        self.winners.push(c);
        self.winners.sort_by(|a, b| b.fidelity.partial_cmp(&a.fidelity).unwrap().then(a.dsl.cmp(&b.dsl)));
        self.winners.truncate(self.top_k);
    }

    fn fresh(&self) -> Collector {
        Collector { f_opt: self.f_opt, top_k: self.top_k, tau: self.tau, winners: Vec::new(), best_cyclic: None, evaluated: 0 }
    }

    fn merge(&mut self, other: Collector) {
        self.evaluated += other.evaluated;
        if let Some(b) = other.best_cyclic {
            if self.best_cyclic.as_ref().map_or(true, |a| better(&b, a)) {
                self.best_cyclic = Some(b);
            }
        }
        for w in other.winners {
            self.push_winner(w);
        }
    }
}

fn exhaustive(env: &Phase1Env, depth: usize, col: &mut Collector) -> Result<()> {
    // depth-first with shared prefixes
    fn rec(env: &Phase1Env, u: &Array2<C64>, prefix: &mut Vec<Phase1Action>, depth: usize, col: &mut Collector) -> Result<()> {
        if prefix.len() == depth {
            let f = fidelity(u, &env.target_at(depth as f64 * env.tau))?;
            return col.offer(prefix, f);
        }
        for a in Phase1Action::ALL {
            let next = env.apply(u, a);
            prefix.push(a);
            rec(env, &next, prefix, depth, col)?;
            prefix.pop();
        }
        Ok(())
    }
    let d = env.state.u_a.nrows();
    rec(env, &Array2::eye(d), &mut Vec::new(), depth, col)
}

fn hill_climb(env: &Phase1Env, restarts: usize, iterations: usize, temperature: f64, seed: u64, col: &mut Collector) -> Result<()> {
    let n = env.n_max;
    let runs: Vec<Result<Collector>> = (0..restarts.max(1) as u64)
        .into_par_iter()
        .map(|r| {
            let mut local = col.fresh();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r);
            let mut cur: Vec<Phase1Action> = (0..n).map(|_| Phase1Action::ALL[rng.gen_range(0..5)]).collect();
            let mut f_cur = env.evaluate(&cur)?;
            local.offer(&cur, f_cur)?;
            for _ in 0..iterations {
                let mut cand = cur.clone();
                let pos = rng.gen_range(0..n);
                cand[pos] = Phase1Action::ALL[rng.gen_range(0..5)];
                let f = env.evaluate(&cand)?;
                local.offer(&cand, f)?;
                let accept = f >= f_cur || (temperature > 0.0 && rng.gen::<f64>() < ((f - f_cur) / temperature).exp());
                if accept {
                    cur = cand;
                    f_cur = f;
                }
            }
            Ok(local)
        })
        .collect();
    for r in runs {
        col.merge(r?);
    }
    Ok(())
}

fn beam(env: &Phase1Env, width: usize, col: &mut Collector) -> Result<()> {
    let d = env.state.u_a.nrows();
    let mut frontier: Vec<(Vec<Phase1Action>, Array2<C64>, f64)> = vec![(Vec::new(), Array2::eye(d), 0.0)];
    for step in 1..=env.n_max {
        let target = env.target_at(step as f64 * env.tau);
        let mut next = Vec::new();
        for (acts, u, _) in &frontier {
            for a in Phase1Action::ALL {
                let v = env.apply(u, a);
                let f = fidelity(&v, &target)?;
                let mut acts = acts.clone();
                acts.push(a);
                col.offer(&acts, f)?;
                next.push((acts, v, f));
            }
        }
        next.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap().then(a.0.cmp(&b.0)));
        next.truncate(width.max(1));
        frontier = next;
    }
    Ok(())
}

/// Search for short sequences approximating the target evolution.
pub fn phase1_search(system: &SpinSystem, target: &Phase1Target, cfg: &Phase1Config, strategy: &SearchStrategy) -> Result<Phase1Outcome> {
    let env = Phase1Env::new(system, target, cfg)?;
    let mut col = Collector { f_opt: cfg.f_opt, top_k: cfg.top_k.max(1), tau: cfg.tau, winners: Vec::new(), best_cyclic: None, evaluated: 0 };
    match strategy {
        SearchStrategy::Exhaustive { depth } => {
            if *depth == 0 || *depth > cfg.n_max {
                return Err(Error::Config(format!("exhaustive depth must lie in 1..={}", cfg.n_max)));
            }
            exhaustive(&env, *depth, &mut col)?
        }
        SearchStrategy::StochasticHillClimb { restarts, iterations, temperature, seed } => {
            hill_climb(&env, *restarts, *iterations, *temperature, *seed, &mut col)?
        }
        SearchStrategy::Beam { width } => beam(&env, *width, &mut col)?,
    }
    Ok(Phase1Outcome {
        winners: col.winners,
        best_cyclic: col.best_cyclic,
        evaluated: col.evaluated,
        strategy: strategy.name().into(),
        seed: strategy.seed(),
    })
}

/// Diagonal helper used by tests: `exp(−i t ω/3 I_z)` for uncoupled spins.
#[allow(dead_code)]
pub(crate) fn scaled_zeeman(n: usize, w: f64, t: f64) -> Array2<C64> {
    let z = crate::spinops::z_diagonal(n, &vec![w / 3.0; n]);
    Array2::from_diag(&z.mapv(|v| C64::from_polar(1.0, -v * t)).into_iter().collect::<Array1<C64>>())
}
