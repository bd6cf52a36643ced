use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::mpsc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::efficiency::locking_efficiency_sim;
use super::spectrum::spectrum;
use crate::effective::{effective_report, ReportRecord};
use crate::engine::{run_simulation, SimulationConfig};
use crate::{Error, Result};

/// What each sweep point computes besides the trajectory spectrum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Per-point JSON cache keyed by a content hash of the inputs.
    pub cache_dir: Option<PathBuf>,
    pub efficiency: bool,
    pub report: bool,
    /// Steepness of `L_C = 1/(1 + r^α)` in the joined report.
    pub alpha: f64,
    /// Keep the full magnitude spectrum of each point for heat maps.
    pub keep_spectrum: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { cache_dir: None, efficiency: false, report: false, alpha: 2.0, keep_spectrum: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub nu: f64,
    pub peak_hz: Option<f64>,
    pub peak_magnitude: Option<f64>,
    /// Magnitude at the `−1/t_c` bin.
    pub locked_magnitude: Option<f64>,
    pub spectrum: Option<Vec<f64>>,
    pub l_s: Option<f64>,
    pub l_s_flagged: bool,
    pub report: Option<ReportRecord>,
    pub error: Option<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepStats {
    pub computed: usize,
    pub cached: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub nu_grid: Vec<f64>,
    /// Frequency axis shared by all stored spectra.
    pub freqs: Vec<f64>,
    pub points: Vec<SweepPoint>,
    pub stats: SweepStats,
}

fn point_config(base: &SimulationConfig, nu: f64) -> SimulationConfig {
    let mut cfg = base.clone();
    cfg.system = cfg.system.with_uniform_offset(nu);
    cfg
}

fn cache_key(cfg: &SimulationConfig, opts: &SweepOptions) -> Result<String> {
    let mut h = Sha256::new();
    h.update(env!("CARGO_PKG_VERSION").as_bytes());
    h.update(serde_json::to_vec(cfg)?);
    h.update(serde_json::to_vec(&(opts.efficiency, opts.report, opts.alpha, opts.keep_spectrum))?);
    Ok(hex::encode(h.finalize()))
}

fn compute_point(cfg: &SimulationConfig, nu: f64, opts: &SweepOptions) -> (SweepPoint, Vec<f64>) {
    let mut p = SweepPoint {
        nu,
        peak_hz: None,
        peak_magnitude: None,
        locked_magnitude: None,
        spectrum: None,
        l_s: None,
        l_s_flagged: false,
        report: None,
        error: None,
    };
    let mut freqs = Vec::new();
    let mut errors = Vec::new();
    match run_simulation(cfg).and_then(|t| spectrum(&t)) {
        Ok(s) => {
            let (f, a) = s.peak();
            p.peak_hz = Some(f);
            p.peak_magnitude = Some(a);
            p.locked_magnitude = Some(s.magnitude_at(-1.0 / cfg.sequence.cycle_duration()));
            freqs = s.freqs.clone();
            if opts.keep_spectrum {
                p.spectrum = Some(s.magnitude);
            }
        }
        Err(e) => errors.push(format!("simulation: {e}")),
    }
    if opts.efficiency {
        match locking_efficiency_sim(cfg) {
            Ok(e) => {
                p.l_s = Some(e.value);
                p.l_s_flagged = e.flagged;
            }
            Err(e) => errors.push(format!("efficiency: {e}")),
        }
    }
    if opts.report {
        match effective_report(&cfg.sequence.idealized(), &cfg.system, nu, None, opts.alpha, [1.0, 0.0, 0.0]) {
            Ok(r) => p.report = Some(r.record()),
            Err(e) => errors.push(format!("report: {e}")),
        }
    }
    if !errors.is_empty() {
        p.error = Some(errors.join("; "));
    }
    (p, freqs)
}

#[derive(Serialize, Deserialize)]
struct CachedPoint {
    point: SweepPoint,
    freqs: Vec<f64>,
}

fn read_cached(dir: &Path, key: &str) -> Option<CachedPoint> {
    let text = fs::read_to_string(dir.join(format!("{key}.json"))).ok()?;
    serde_json::from_str(&text).ok()
}

/// Run the base configuration at every offset of the grid.
///
/// Points run concurrently. A failing point is recorded and the sweep goes on.
/// With a cache directory, finished points are written by a single writer
/// thread and reused on the next call.
pub fn offset_sweep(base: &SimulationConfig, nu_grid: &[f64], opts: &SweepOptions) -> Result<SweepResult> {
    if nu_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Config("offset grid must be sorted".into()));
    }
    if let Some(dir) = &opts.cache_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let (tx, rx) = mpsc::channel::<(String, String)>();
    let writer_dir = opts.cache_dir.clone();
    let writer = std::thread::spawn(move || -> Result<()> {
        for (key, body) in rx {
            if let Some(dir) = &writer_dir {
                let path = dir.join(format!("{key}.json"));
                let tmp = dir.join(format!("{key}.tmp"));
                fs::write(&tmp, body).map_err(|e| Error::io(&tmp, e))?;
                fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
            }
        }
        Ok(())
    });

    let results: Vec<Result<(SweepPoint, Vec<f64>, bool)>> = nu_grid
        .par_iter()
        .map_with(tx, |tx, &nu| {
            let cfg = point_config(base, nu);
            let key = cache_key(&cfg, opts)?;
            if let Some(dir) = &opts.cache_dir {
                if let Some(c) = read_cached(dir, &key) {
                    return Ok((c.point, c.freqs, true));
                }
            }
            let (point, freqs) = compute_point(&cfg, nu, opts);
            if opts.cache_dir.is_some() {
                let body = serde_json::to_string(&CachedPoint { point: point.clone(), freqs: freqs.clone() })?;
                let _ = tx.send((key, body));
            }
            Ok((point, freqs, false))
        })
        .collect();
    writer.join().map_err(|_| Error::Contract("cache writer panicked".into()))??;

    let mut stats = SweepStats::default();
    let mut points = Vec::with_capacity(results.len());
    let mut freqs = Vec::new();
    for r in results {
        let (p, f, cached) = r?;
        if cached {
            stats.cached += 1;
        } else {
            stats.computed += 1;
        }
        if p.error.is_some() {
            stats.failed += 1;
        }
        if freqs.is_empty() && !f.is_empty() {
            freqs = f;
        }
        points.push(p);
    }
    Ok(SweepResult { nu_grid: nu_grid.to_vec(), freqs, points, stats })
}

impl SweepResult {
    /// One JSON record per offset, without the stored spectra.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for p in &self.points {
            let mut p = p.clone();
            p.spectrum = None;
            out.push_str(&serde_json::to_string(&p)?);
            out.push('\n');
        }
        Ok(out)
    }

    /// Heat map: header `nu_hz,<f_0>,<f_1>,…`, one row per offset.
    pub fn heatmap_csv(&self) -> String {
        let mut out = String::from("nu_hz");
        for f in &self.freqs {
            let _ = write!(out, ",{f}");
        }
        out.push('\n');
        for p in &self.points {
            let _ = write!(out, "{}", p.nu);
            match &p.spectrum {
                Some(s) => s.iter().for_each(|v| {
                    let _ = write!(out, ",{v:e}");
                }),
                None => self.freqs.iter().for_each(|_| out.push(',')),
            }
            out.push('\n');
        }
        out
    }

    pub fn l_s(&self) -> Vec<Option<f64>> {
        self.points.iter().map(|p| p.l_s).collect()
    }
}

/// Inclusive evenly spaced grid.
pub fn linear_grid(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count).map(|k| start + (stop - start) * k as f64 / (count - 1) as f64).collect(),
    }
}

/// Indices of strict local minima of a series, ignoring missing values.
pub fn local_minima(values: &[Option<f64>]) -> Vec<usize> {
    let v: Vec<(usize, f64)> = values.iter().enumerate().filter_map(|(i, x)| x.map(|x| (i, x))).collect();
    let mut out = Vec::new();
    for k in 0..v.len() {
        let left = if k > 0 { v[k - 1].1 } else { f64::INFINITY };
        let right = if k + 1 < v.len() { v[k + 1].1 } else { f64::INFINITY };
        if v[k].1 < left && v[k].1 <= right {
            out.push(v[k].0);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::{dsl4, Dsl4Variant};
    use crate::spinops::{Cluster, SpinSystem};

    #[test]
    fn singleton_grid_matches_single_run() {
        let seq = dsl4(20e-6, 0.0, Dsl4Variant::Canonical).unwrap();
        let sys = Cluster::Tetra4.system(3000.0).unwrap();
        let base = SimulationConfig::new(sys.clone(), seq.clone(), 32);
        let r = offset_sweep(&base, &[-1400.0], &SweepOptions::default()).unwrap();
        let t = run_simulation(&SimulationConfig::new(sys.with_uniform_offset(-1400.0), seq, 32)).unwrap();
        let s = spectrum(&t).unwrap();
        assert_eq!(r.points[0].peak_hz, Some(s.peak().0));
        assert_eq!(r.points[0].spectrum.as_ref().unwrap(), &s.magnitude);
    }

    #[test]
    fn periodic_in_inverse_tau() {
        let seq = dsl4(20e-6, 0.0, Dsl4Variant::Canonical).unwrap();
        let sys = Cluster::Tetra4.system(3000.0).unwrap();
        let base = SimulationConfig::new(sys, seq, 16);
        let r = offset_sweep(&base, &[-1300.0, 48_700.0], &SweepOptions::default()).unwrap();
        let (a, b) = (r.points[0].spectrum.as_ref().unwrap(), r.points[1].spectrum.as_ref().unwrap());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn cache_skips_recomputation() {
        let dir = tempfile::tempdir().unwrap();
        let seq = dsl4(20e-6, 0.0, Dsl4Variant::Canonical).unwrap();
        let base = SimulationConfig::new(SpinSystem::homonuclear(2, "H").unwrap(), seq, 8);
        let opts = SweepOptions { cache_dir: Some(dir.path().to_path_buf()), ..SweepOptions::default() };
        let grid = linear_grid(-2000.0, 2000.0, 5);
        let first = offset_sweep(&base, &grid, &opts).unwrap();
        assert_eq!(first.stats.computed, 5);
        let second = offset_sweep(&base, &grid, &opts).unwrap();
        assert_eq!(second.stats, SweepStats { computed: 0, cached: 5, failed: 0 });
        assert_eq!(first.points, second.points);
    }

    #[test]
    fn failures_are_recorded() {
        let seq = crate::sequence::parse_sequence("tau 5u; d1; p90 x; d1; acq").unwrap();
        let base = SimulationConfig::new(SpinSystem::homonuclear(1, "H").unwrap(), seq, 4);
        let opts = SweepOptions { report: true, ..SweepOptions::default() };
        let r = offset_sweep(&base, &[0.0, 100.0], &opts).unwrap();
        assert_eq!(r.stats.failed, 2);
        assert!(r.points[0].peak_hz.is_some());
    }

    #[test]
    fn unsorted_grid_is_rejected() {
        let seq = dsl4(20e-6, 0.0, Dsl4Variant::Canonical).unwrap();
        let base = SimulationConfig::new(SpinSystem::homonuclear(1, "H").unwrap(), seq, 4);
        assert!(offset_sweep(&base, &[1.0, 0.0], &SweepOptions::default()).is_err());
    }
}
