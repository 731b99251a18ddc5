//! Surrogate-informed in situ visualization workbench.
//!
//! A learned graph network simulator ([`gns`]) predicts a cheap granular-flow
//! rollout. Metadata harvested from that rollout ([`harvest`]) configures a
//! full-resolution material point method run ([`mpm`]) whose in situ render
//! pipeline ([`insitu`], backed by the sphere ray tracer in [`render`]) is
//! instrumented stage by stage. [`io`] holds every persistent format.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod frame;
pub mod gns;
pub mod harvest;
pub mod insitu;
pub mod io;
pub mod mpm;
pub mod neural;
pub mod render;

pub use error::{Error, Result};
pub use frame::{Bounds, FrameError, ParticleFrame, Provenance, RolloutResult, ScalarField};
pub use gns::{GnsConfig, GnsModel};
pub use harvest::{FieldError, InSituConfig, ValidationErrors};
pub use insitu::{RunReport, TimingRecord};
pub use mpm::SimConfig;
pub use neural::{Mlp, OptimizerState};
pub use render::{Camera, Colormap};
