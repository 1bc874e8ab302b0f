//! Yield and forward curve shapes in affine one-factor short-rate models.
//!
//! A model is described by the functions `F` and `R` of its Riccati system
//! (see [`model`]). From them the crate computes
//!
//! * the bond-price exponents `A`, `B` and the yield and forward curves
//!   ([`riccati`]);
//! * the long-end root `c`, quasi-mean-reversion and long-term rate
//!   ([`long_end`]);
//! * the shape thresholds `b_fw_norm < b_y_norm < b_asymp < b_inv`
//!   ([`thresholds`]) and the resulting normal / humped / inverse
//!   classification of both curves ([`classifier`]);
//! * an independent dense-grid shape detector and verification sweeps
//!   ([`oracle`]), and Monte Carlo bond prices ([`montecarlo`]).
//!
//! ```
//! use affine_shapes::model::{make_vasicek, VasicekParams};
//! use affine_shapes::thresholds::compute_thresholds;
//! use affine_shapes::classifier::{classify_forward, classify_yield, ShapeLabel};
//!
//! let m = make_vasicek(VasicekParams { lambda: 1.0, theta: 0.05, sigma: 0.1 }).unwrap();
//! let th = compute_thresholds(&m).unwrap();
//! assert!((th.b_y_norm - 0.0425).abs() < 1e-12);
//! assert_eq!(classify_yield(&th, 0.0415).unwrap().label, ShapeLabel::Normal);
//! assert_eq!(classify_forward(&th, 0.0415).unwrap().label, ShapeLabel::Humped);
//! ```

pub mod classifier;
pub mod error;
pub mod fmt;
pub mod long_end;
pub mod model;
pub mod montecarlo;
pub mod ode;
pub mod oracle;
pub mod quad;
pub mod riccati;
pub mod rng;
pub mod root;
pub mod thresholds;

pub use error::{Error, Result};
pub use model::{AffineModel, ModelKind, ModelSpec, StateSpace};
pub use thresholds::{compute_thresholds, ExtendedRate, Thresholds};
