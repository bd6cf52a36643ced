//! Spectra, offset sweeps, simulated locking efficiency and the comparison of
//! exact dynamics with truncated average Hamiltonians.

mod aht;
mod efficiency;
mod spectrum;
mod sweep;

pub use aht::{aht_breakdown_compare, AhtComparison, AhtPoint};
pub use efficiency::{locking_efficiency_default, locking_efficiency_sim, LockingEfficiency};
pub use spectrum::{alias, spectral_distance, species_spectrum, spectrum, spectrum_of_signal, uniform_spacing, Spectrum};
pub use sweep::{linear_grid, local_minima, offset_sweep, SweepOptions, SweepPoint, SweepResult, SweepStats};
