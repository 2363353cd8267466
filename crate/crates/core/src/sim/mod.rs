//! Synthetic data: quarter-vehicle dynamics, terrain profiles and labeled
//! sensor runs.

pub mod preset;
pub mod profile;
pub mod qv;
pub mod run;

pub use preset::{ColorComponent, PresetSet, TerrainPreset};
pub use profile::{synth_terrain_profile, TerrainProfile};
pub use qv::{excitation_frequency, harmonic_amplitude, simulate_qv, transfer_magnitude, QvSample, QvTrace};
pub use run::{synth_route_run, synth_run, NoiseConfig, Route, RouteSegment, RunTruth, SynthConfig, SynthRun};
