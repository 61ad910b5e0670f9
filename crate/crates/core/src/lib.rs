//! Fast frequency response of DFIG wind turbines: per-unit surge capability
//! from an energy balance, nadir-sensitivity scheduling of support units, and
//! closed-loop validation against a low-order grid frequency model.
//!
//! Module map:
//!
//! * [`turbine`]: aerodynamics, MPPT reference, drive train, converter lag.
//! * [`surge`]: deliverable energy, maximum injection, lookup table, surge shape.
//! * [`sfr`]: grid frequency model, closed-form nadir, time-domain simulation.
//! * [`dispatch`]: nadir sensitivities and minimum-commitment schedules.
//! * [`cosim`]: the coupled event simulation and its metrics.
//! * [`config`], [`io`], [`pipeline`]: scenario files, CSV formats, and the
//!   offline planning path that ties the pieces together.

// `!(x > 0.0)` is how inputs reject NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod cosim;
pub mod dispatch;
pub mod error;
pub mod exec;
pub mod io;
pub mod ode;
pub mod pipeline;
pub mod sfr;
pub mod surge;
pub mod turbine;

pub use error::{Error, Result};
pub use exec::Exec;
