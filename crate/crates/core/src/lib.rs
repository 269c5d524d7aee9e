//! Simulation of the one-dimensional damped variational wave system for the
//! director field of a nematic liquid crystal.
//!
//! * [`planar`] integrates the planar reduction along characteristics and
//!   detects gradient blowup.
//! * [`energycoords`] transforms data to energy-dependent coordinates and
//!   integrates the semi-linear system there, through blowup.
//! * [`reconstruct`] maps the solution back to physical time slices.
//! * [`refsolver`] is an independent finite-difference solver used as an
//!   oracle on smooth data.

pub mod cli;
pub mod energycoords;
pub mod initial;
pub mod interp;
pub mod model;
pub mod planar;
pub mod reconstruct;
pub mod refsolver;
pub mod vec3;
