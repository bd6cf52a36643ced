//! Batch front-end. Every subcommand reads sequence (`.seq`) and system
//! (`.json`) files, writes its outputs into `--out`, and always leaves a
//! `manifest.json` describing the run.
//!
//! Exit codes: 0 success, 2 usage, 3 parse or validation failure, 4 numerical
//! contract violation.

mod manifest;
mod system_file;

pub use manifest::{FileHash, RunManifest};
pub use system_file::{LoadedSystem, SystemFile};

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::{linear_grid, offset_sweep, spectrum, species_spectrum, SweepOptions};
use crate::effective::{classify_dips, dip_predictions, locking_field, magnus_offset_expansion, LockingFieldCalc};
use crate::engine::{
    polarization_enhancement, run_offset_schedule, run_simulation, run_two_species, InitialState, Method,
    OffsetSchedule, Sampling, SimulationConfig,
};
use crate::search::{
    export_winners, phase1_search, phase2_extend, Phase1Config, Phase1Target, Phase2Config, SearchStrategy,
};
use crate::sequence::{parse_duration_text, parse_sequence, serialize_sequence, PulseSequence};
use crate::spinops::{Axis, SpinSystem};
use crate::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "dynlock", version, about = "Dynamic spin locking simulations and analyses")]
pub struct Cli {
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads for parallel sweeps and searches (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate one offset and write the trajectory and its spectrum.
    Simulate(SimulateArgs),
    /// Offset sweep: per-point JSON lines and a ν × frequency heat map.
    Sweep(SweepArgs),
    /// Locking field δ(ν) over an offset grid.
    LockingField(LockingArgs),
    /// Offset Magnus coefficients of a single-channel sequence.
    Magnus(MagnusArgs),
    /// Predicted signal dips t_c δ(ν) = mπ.
    Dips(DipsArgs),
    /// Phase-1 or Phase-2 sequence search.
    Search(SearchArgs),
    /// Heteronuclear polarization transfer under a synchronized sequence.
    Transfer(TransferArgs),
    /// Offset ramp (ADRF-style) round trip.
    Adrf(AdrfArgs),
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    #[arg(long)]
    pub seq: PathBuf,
    #[arg(long)]
    pub system: PathBuf,
    #[arg(long, default_value_t = 256)]
    pub cycles: usize,
    /// acquire | cycle | sub:K
    #[arg(long, default_value = "acquire")]
    pub sampling: String,
    /// x | y | z | lock
    #[arg(long, default_value = "x")]
    pub init: String,
    /// Restrict the initial state to one species.
    #[arg(long)]
    pub init_species: Option<String>,
    /// auto | direct | floquet
    #[arg(long, default_value = "auto")]
    pub method: String,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Offset for every species (Hz).
    #[arg(long, allow_hyphen_values = true)]
    pub nu: Option<f64>,
    /// Per-species offset LABEL=HZ; repeatable.
    #[arg(long = "offset", allow_hyphen_values = true)]
    pub offsets: Vec<String>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// start:stop:count in Hz.
    #[arg(long, allow_hyphen_values = true)]
    pub nu_range: String,
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Also compute the simulated locking efficiency per point.
    #[arg(long)]
    pub efficiency: bool,
    /// Join the effective-Hamiltonian report per point.
    #[arg(long)]
    pub report: bool,
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
}

#[derive(Args, Debug)]
pub struct LockingArgs {
    #[arg(long)]
    pub seq: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub nu_range: String,
    /// Override the sequence τ, e.g. 20u.
    #[arg(long)]
    pub tau: Option<String>,
}

#[derive(Args, Debug)]
pub struct MagnusArgs {
    #[arg(long)]
    pub seq: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub order: usize,
}

#[derive(Args, Debug)]
pub struct DipsArgs {
    #[arg(long)]
    pub seq: PathBuf,
    #[arg(long, allow_hyphen_values = true, default_value = "-25000:25000:1001")]
    pub nu_range: String,
    #[arg(long, default_value_t = 1)]
    pub m_max: i32,
    /// Classify each root with the dressed dipolar Hamiltonian of this system.
    #[arg(long)]
    pub system: Option<PathBuf>,
    /// Active when ‖D̃_M‖ exceeds this fraction of ‖D‖.
    #[arg(long, default_value_t = 0.05)]
    pub threshold: f64,
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    /// 1: build cycles from single pulses; 2: compose library blocks.
    #[arg(long, default_value_t = 1)]
    pub phase: u8,
    #[arg(long)]
    pub system: PathBuf,
    /// Probe offset (Hz) for the decoupling target.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub nu: f64,
    #[arg(long, default_value = "5u")]
    pub tau: String,
    #[arg(long, default_value_t = 6)]
    pub n_max: usize,
    #[arg(long, default_value_t = 0.999)]
    pub f_opt: f64,
    #[arg(long, default_value_t = 5)]
    pub top_k: usize,
    /// exhaustive:DEPTH | hill:RESTARTS:ITERATIONS:TEMPERATURE | beam:WIDTH
    #[arg(long, default_value = "exhaustive:6")]
    pub strategy: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Phase-2 block library (sequence files).
    #[arg(long = "block")]
    pub blocks: Vec<PathBuf>,
    #[arg(long)]
    pub t_tgt: Option<String>,
    #[arg(long)]
    pub t_pj: Option<String>,
    #[arg(long, default_value_t = 32)]
    pub max_steps: usize,
}

#[derive(Args, Debug)]
pub struct TransferArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Per-species offset LABEL=HZ; repeatable.
    #[arg(long = "offset", allow_hyphen_values = true)]
    pub offsets: Vec<String>,
    #[arg(long, default_value = "H")]
    pub source: String,
    #[arg(long, default_value = "C")]
    pub target: String,
}

#[derive(Args, Debug)]
pub struct AdrfArgs {
    #[arg(long)]
    pub seq: PathBuf,
    #[arg(long)]
    pub system: PathBuf,
    #[arg(long, default_value = "H")]
    pub species: String,
    /// Starting offset (Hz).
    #[arg(long, allow_hyphen_values = true)]
    pub nu0: f64,
    /// Comma-separated ramp legs DURATION:HZ, e.g. 6m:-4397,6m:-3500.
    #[arg(long, allow_hyphen_values = true)]
    pub legs: String,
    /// x | y | z | lock
    #[arg(long, default_value = "lock")]
    pub init: String,
}

struct Ctx {
    out: PathBuf,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    config: Value,
    kappa: Option<f64>,
}

impl Ctx {
    fn read(&mut self, path: &Path) -> Result<String> {
        self.inputs.push(path.to_path_buf());
        std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
    }

    fn sequence(&mut self, path: &Path) -> Result<PulseSequence> {
        let text = self.read(path)?;
        parse_sequence(&text).map_err(|e| match e {
            Error::Parse { .. } => Error::Config(format!("{}:{e}", path.display())),
            other => other,
        })
    }

    fn system(&mut self, path: &Path) -> Result<SpinSystem> {
        let text = self.read(path)?;
        let file: SystemFile = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let loaded = file.load()?;
        self.kappa = loaded.kappa;
        Ok(loaded.system)
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.out.join(name);
        std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.outputs.push(path);
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, v: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(v)?;
        s.push('\n');
        self.write(name, &s)
    }
}

/// Parse `start:stop:count`.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!("grid '{s}' must be start:stop:count")));
    }
    let num = |p: &str| p.trim().parse::<f64>().map_err(|_| Error::Config(format!("grid '{s}': bad number '{p}'")));
    let (a, b) = (num(parts[0])?, num(parts[1])?);
    let n: usize = parts[2].trim().parse().map_err(|_| Error::Config(format!("grid '{s}': bad count")))?;
    if n == 0 || !a.is_finite() || !b.is_finite() || (n > 1 && b < a) {
        return Err(Error::Config(format!("grid '{s}' must have count ≥ 1 and stop ≥ start")));
    }
    Ok(linear_grid(a, b, n))
}

/// Parse a search strategy string.
pub fn parse_strategy(s: &str, seed: u64) -> Result<SearchStrategy> {
    let parts: Vec<&str> = s.split(':').collect();
    let int = |p: &str| p.parse::<usize>().map_err(|_| Error::Config(format!("strategy '{s}': bad integer '{p}'")));
    match parts.as_slice() {
        ["exhaustive", d] => Ok(SearchStrategy::Exhaustive { depth: int(d)? }),
        ["beam", w] => Ok(SearchStrategy::Beam { width: int(w)? }),
        ["hill", r, i, t] => Ok(SearchStrategy::StochasticHillClimb {
            restarts: int(r)?,
            iterations: int(i)?,
            temperature: t.parse().map_err(|_| Error::Config(format!("strategy '{s}': bad temperature")))?,
            seed,
        }),
        _ => Err(Error::Config(format!("unknown strategy '{s}'"))),
    }
}

fn parse_sampling(s: &str) -> Result<Sampling> {
    match s {
        "acquire" => Ok(Sampling::PerAcquire),
        "cycle" => Ok(Sampling::PerCycle),
        _ => match s.strip_prefix("sub:").and_then(|k| k.parse().ok()) {
            Some(k) => Ok(Sampling::SubCycle(k)),
            None => Err(Error::Config(format!("unknown sampling '{s}' (acquire, cycle, sub:K)"))),
        },
    }
}

fn parse_init(s: &str) -> Result<InitialState> {
    match s {
        "x" => Ok(InitialState::AlongX),
        "y" => Ok(InitialState::AlongY),
        "z" => Ok(InitialState::AlongZ),
        "lock" => Ok(InitialState::AlongLockingAxis),
        _ => match s.strip_prefix("spin:").and_then(|k| k.parse().ok()) {
            Some(spin) => Ok(InitialState::SingleSpin { spin, axis: Axis::X }),
            None => Err(Error::Config(format!("unknown initial state '{s}' (x, y, z, lock, spin:I)"))),
        },
    }
}

fn parse_method(s: &str) -> Result<Method> {
    match s {
        "auto" => Ok(Method::Auto),
        "direct" => Ok(Method::Direct),
        "floquet" => Ok(Method::Floquet),
        _ => Err(Error::Config(format!("unknown method '{s}'"))),
    }
}

fn apply_offsets(mut sys: SpinSystem, nu: Option<f64>, offsets: &[String]) -> Result<SpinSystem> {
    if let Some(nu) = nu {
        sys = sys.with_uniform_offset(nu);
    }
    for o in offsets {
        let (label, hz) = o.split_once('=').ok_or_else(|| Error::Config(format!("offset '{o}' must be LABEL=HZ")))?;
        let hz: f64 = hz.parse().map_err(|_| Error::Config(format!("offset '{o}': bad number")))?;
        sys = sys.with_offset(label, hz)?;
    }
    Ok(sys)
}

fn sim_config(ctx: &mut Ctx, run: &RunArgs, nu: Option<f64>, offsets: &[String]) -> Result<SimulationConfig> {
    let seq = ctx.sequence(&run.seq)?;
    let sys = ctx.system(&run.system)?;
    let sys = apply_offsets(sys, nu, offsets)?;
    let mut cfg = SimulationConfig::new(sys, seq, run.cycles)
        .with_sampling(parse_sampling(&run.sampling)?)
        .with_initial(parse_init(&run.init)?)
        .with_method(parse_method(&run.method)?);
    if let Some(s) = &run.init_species {
        cfg = cfg.with_initial_species(s);
    }
    Ok(cfg)
}

fn spectrum_csv(s: &crate::analysis::Spectrum) -> String {
    let mut out = String::from("freq_hz,magnitude\n");
    for (f, m) in s.freqs.iter().zip(&s.magnitude) {
        out.push_str(&format!("{f},{m}\n"));
    }
    out
}

fn execute(cmd: &Command, ctx: &mut Ctx) -> Result<()> {
    match cmd {
        Command::Simulate(a) => {
            let cfg = sim_config(ctx, &a.run, a.nu, &a.offsets)?;
            ctx.config = json!({"nu": a.nu, "offsets": cfg.system.offsets(), "cycles": cfg.n_cycles,
                "sampling": a.run.sampling, "init": a.run.init, "method": a.run.method});
            let traj = run_simulation(&cfg)?;
            let spec = spectrum(&traj)?;
            ctx.write("trajectory.csv", &traj.to_csv())?;
            ctx.write("spectrum.csv", &spectrum_csv(&spec))?;
            let (f, m) = spec.peak();
            ctx.write_json("summary.json", &json!({"peak_hz": f, "peak_magnitude": m, "bin_hz": spec.bin_width()}))?;
        }
        Command::Sweep(a) => {
            let base = sim_config(ctx, &a.run, None, &[])?;
            let grid = parse_grid(&a.nu_range)?;
            let opts = SweepOptions {
                cache_dir: a.cache.clone(),
                efficiency: a.efficiency,
                report: a.report,
                alpha: a.alpha,
                keep_spectrum: true,
            };
            ctx.config = json!({"nu_range": a.nu_range, "cycles": a.run.cycles, "options": opts});
            let res = offset_sweep(&base, &grid, &opts)?;
            ctx.write("sweep.jsonl", &res.to_jsonl()?)?;
            ctx.write("heatmap.csv", &res.heatmap_csv())?;
        }
        Command::LockingField(a) => {
            let seq = ctx.sequence(&a.seq)?;
            let tau = match &a.tau {
                Some(t) => parse_duration_text(t)?,
                None => seq.tau,
            };
            let grid = parse_grid(&a.nu_range)?;
            ctx.config = json!({"nu_range": a.nu_range, "tau_s": tau});
            let curve = locking_field(&seq, &grid, tau)?;
            ctx.write_json("locking_field.json", &curve)?;
        }
        Command::Magnus(a) => {
            let seq = ctx.sequence(&a.seq)?;
            ctx.config = json!({"order": a.order});
            let m = magnus_offset_expansion(&seq, a.order)?;
            let rows: Vec<Value> = m.orders.iter().enumerate().map(|(k, c)| json!({"order": k, "x": c[0], "y": c[1], "z": c[2]})).collect();
            ctx.write_json("magnus.json", &rows)?;
        }
        Command::Dips(a) => {
            let seq = ctx.sequence(&a.seq)?;
            let grid = parse_grid(&a.nu_range)?;
            ctx.config = json!({"nu_range": a.nu_range, "m_max": a.m_max, "threshold": a.threshold});
            let calc = LockingFieldCalc::new(&seq)?;
            let curve = calc.sweep(&grid)?;
            let mut dips = dip_predictions(&calc, &curve, a.m_max);
            if let Some(p) = &a.system {
                let sys = ctx.system(p)?;
                classify_dips(&mut dips, &seq, &sys, a.threshold)?;
            }
            ctx.write_json("dips.json", &dips)?;
        }
        Command::Search(a) => search(a, ctx)?,
        Command::Transfer(a) => {
            let cfg = sim_config(ctx, &a.run, None, &a.offsets)?;
            ctx.config = json!({"offsets": cfg.system.offsets(), "cycles": cfg.n_cycles,
                "source": a.source, "target": a.target, "init": a.run.init});
            let traj = run_two_species(&cfg)?;
            let enh = polarization_enhancement(&traj, &cfg.system, &a.source, &a.target)?;
            let mut csv = String::from("t_s,enhancement\n");
            for (t, e) in traj.times.iter().zip(&enh) {
                csv.push_str(&format!("{t},{e}\n"));
            }
            ctx.write("transfer.csv", &csv)?;
            ctx.write("trajectory.csv", &traj.to_csv())?;
            let spec = species_spectrum(&traj, &a.target)?;
            ctx.write("spectrum.csv", &spectrum_csv(&spec))?;
            let max = enh.iter().cloned().fold(0.0, f64::max);
            ctx.write_json("summary.json", &json!({"max_enhancement": max}))?;
        }
        Command::Adrf(a) => {
            let seq = ctx.sequence(&a.seq)?;
            let sys = ctx.system(&a.system)?.with_offset(&a.species, a.nu0)?;
            let mut legs = Vec::new();
            for leg in a.legs.split(',') {
                let (dt, nu) = leg.split_once(':').ok_or_else(|| Error::Config(format!("leg '{leg}' must be DURATION:HZ")))?;
                let nu: f64 = nu.parse().map_err(|_| Error::Config(format!("leg '{leg}': bad offset")))?;
                legs.push((parse_duration_text(dt)?, nu));
            }
            let schedule = OffsetSchedule::ramps(&a.species, a.nu0, &legs);
            let n_cycles = (schedule.duration() / seq.cycle_duration() * (1.0 - 1e-12)).floor() as usize;
            if n_cycles == 0 {
                return Err(Error::Config("ramp is shorter than one cycle".into()));
            }
            ctx.config = json!({"species": a.species, "nu0": a.nu0, "legs": legs, "cycles": n_cycles, "init": a.init});
            let cfg = SimulationConfig::new(sys, seq, n_cycles)
                .with_sampling(Sampling::PerCycle)
                .with_initial(parse_init(&a.init)?)
                .with_initial_species(&a.species)
                .with_schedule(schedule);
            let out = run_offset_schedule(&cfg)?;
            ctx.write("trajectory.csv", &out.trajectory.to_csv())?;
            ctx.write_json("adrf.json", &json!({"recovered_polarization": out.recovered_polarization, "cycles": n_cycles}))?;
        }
    }
    Ok(())
}

fn search(a: &SearchArgs, ctx: &mut Ctx) -> Result<()> {
    let sys = ctx.system(&a.system)?.with_uniform_offset(a.nu);
    let strategy = parse_strategy(&a.strategy, a.seed)?;
    let tau = parse_duration_text(&a.tau)?;
    match a.phase {
        1 => {
            ctx.config = json!({"phase": 1, "nu": a.nu, "tau_s": tau, "n_max": a.n_max, "f_opt": a.f_opt, "strategy": strategy});
            let cfg = Phase1Config { tau, n_max: a.n_max, f_opt: a.f_opt, top_k: a.top_k };
            let out = phase1_search(&sys, &Phase1Target::DipolarDecoupling, &cfg, &strategy)?;
            for p in export_winners(&out, tau, &ctx.out)? {
                ctx.outputs.push(p);
            }
            ctx.write_json("search.json", &out)?;
        }
        2 => {
            if a.blocks.is_empty() {
                return Err(Error::Config("phase 2 needs at least one --block".into()));
            }
            let library: Vec<PulseSequence> = a.blocks.iter().map(|p| ctx.sequence(p)).collect::<Result<_>>()?;
            let need = |v: &Option<String>, name: &str| -> Result<f64> {
                parse_duration_text(v.as_deref().ok_or_else(|| Error::Config(format!("phase 2 needs --{name}")))?)
            };
            let mut cfg = Phase2Config::new(need(&a.t_tgt, "t-tgt")?, need(&a.t_pj, "t-pj")?);
            cfg.max_steps = a.max_steps;
            ctx.config = json!({"phase": 2, "nu": a.nu, "t_tgt_s": cfg.t_tgt, "t_pj_s": cfg.t_pj, "strategy": strategy});
            let out = phase2_extend(&sys, &library, &cfg, &strategy)?;
            ctx.write("protocol.seq", &serialize_sequence(&out.protocol))?;
            ctx.write_json(
                "search.json",
                &json!({"projected_reward": out.projected_reward, "baseline_reward": out.baseline_reward,
                    "baseline_block": out.baseline_block, "actions": out.actions, "evaluated": out.evaluated,
                    "strategy": out.strategy, "seed": out.seed, "pulses": out.protocol.n_pulses(),
                    "acquisitions": out.protocol.n_acquires(), "intervals": out.protocol.n_intervals()}),
            )?;
        }
        p => return Err(Error::Config(format!("unknown search phase {p}"))),
    }
    Ok(())
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Simulate(_) => "simulate",
        Command::Sweep(_) => "sweep",
        Command::LockingField(_) => "locking-field",
        Command::Magnus(_) => "magnus",
        Command::Dips(_) => "dips",
        Command::Search(_) => "search",
        Command::Transfer(_) => "transfer",
        Command::Adrf(_) => "adrf",
    }
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Contract(_) | Error::Linalg(_) => 4,
        _ => 3,
    }
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Err(e) = std::fs::create_dir_all(&cli.out) {
        eprintln!("error: {}: {e}", cli.out.display());
        return 3;
    }
    let started = Instant::now();
    let mut ctx = Ctx { out: cli.out.clone(), inputs: Vec::new(), outputs: Vec::new(), config: Value::Null, kappa: None };
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(|| execute(&cli.command, &mut ctx)),
            Err(e) => Err(Error::Config(format!("thread pool: {e}"))),
        },
        None => execute(&cli.command, &mut ctx),
    };
    let code = match &result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(e)
        }
    };
    let manifest = RunManifest::new(
        command_name(&cli.command),
        ctx.config.clone(),
        &ctx.inputs,
        ctx.kappa,
        started.elapsed().as_secs_f64(),
        &ctx.outputs,
        result.as_ref().err().map(|e| e.to_string()),
    );
    let path = ctx.out.join("manifest.json");
    if let Err(e) = manifest.write(&path) {
        eprintln!("error: {e}");
        return if code == 0 { 3 } else { code };
    }
    code
}
