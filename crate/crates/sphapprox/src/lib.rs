//! File formats and experiment harness around `sphapprox-core`, shared by
//! the `sphapprox` binary and its tests.

pub mod experiment;
pub mod io;
