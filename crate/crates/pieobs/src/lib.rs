//! Synthesis of provably H∞-optimal state observers for linear systems with
//! multiple delays in states, outputs and disturbances.
//!
//! The pipeline converts a delay-differential model into a partial integral
//! equation (PIE), poses observer synthesis as a linear operator inequality,
//! lowers that inequality to a semidefinite program, solves it with a native
//! interior-point method, reconstructs explicit ODE-PDE observer gains, and
//! validates the result by time-domain simulation and a Padé-reduced
//! finite-dimensional baseline.





pub mod piop;
pub mod poly;
pub mod quad;
pub mod scalar;




pub mod baseline;
pub mod dde;
pub mod pade;
pub mod sdp;
pub mod synth;
pub use scalar::Scalar;
