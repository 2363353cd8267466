//! Multimodal terrain estimation for field vehicles.
//!
//! Terrain patches are described by three feature families:
//!
//! * color: c1c2c3 channel moments ([`color`]),
//! * geometry: plane-fit statistics of the patch points ([`geometry`]),
//! * contact: motion resistance, slip and vertical vibration measured while
//!   the vehicle drives over the patch ([`contact`]).
//!
//! Patches are cut from stereo point clouds and matched with the
//! proprioceptive stream through the pose trajectory ([`mapping`]), then
//! classified with a one-vs-one error-correcting output code ensemble of
//! linear SVMs ([`classifier`]). [`sim`] generates labeled synthetic logs
//! from a quarter-vehicle model.

pub mod benchmark;
pub mod classifier;
pub mod color;
pub mod contact;
pub mod error;
pub mod features;
pub mod frame;
pub mod fsio;
pub mod geometry;
pub mod log;
pub mod mapping;
pub mod params;
pub mod series;
pub mod sim;
pub mod table;
pub mod terrain;

pub use error::{Error, Result};
pub use features::{FeatureMask, FeatureVector};
pub use frame::{rotation_matrix_rpy, weight_in_vrf, Attitude};
pub use params::VehicleParams;
pub use series::SensorSeries;
pub use terrain::TerrainClass;
