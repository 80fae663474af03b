//! Periodic transmission masks for half-duplex masked modulation.
//!
//! The crate builds N-periodic 0/1 masks (Singer difference sets, combs,
//! random masks), evaluates the expected squared range-Doppler response
//! `E{|r(k,l,nu)|^2}` of the masked symbol stream in closed form, checks it
//! against a symbol-level Monte Carlo oracle, and certifies the sidelobe
//! bounds each mask family attains.
//!
//! ```
//! use masklab_core::{masks, response::{expected_response, ScenarioParams}};
//!
//! let mask = masks::singer_mask(6).unwrap();
//! let p = ScenarioParams::new(mask, 50, 1.32).unwrap();
//! let peak = expected_response(&p, 20, 20, 0).unwrap();
//! assert!((peak - 640_256.0).abs() < 1e-6);
//! ```

pub mod csvfmt;
pub mod galois;
pub mod masks;
pub mod metrics;
pub mod montecarlo;
pub mod oracle;
pub mod response;
pub mod spectra;

pub use galois::{BinaryField, FieldElement, GaloisError};
pub use masks::{CdsStatus, Mask, MaskError, MaskFamily, MaskSpec, ReceptionMask};
pub use metrics::{MetricsError, MetricsReport, Normalization};
pub use montecarlo::{Constellation, ConstellationName, McEstimate, MonteCarloError};
pub use response::{DopplerRegime, ResponseError, ResponseGrid, ScenarioParams};
pub use spectra::{SpectraError, SpectralSummary};

/// Tool version embedded in output headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
