//! Linearized steady-state analysis of a driven cavity coupled to several
//! mechanical modes: cooling, effective susceptibilities and Gaussian
//! entanglement.

pub mod constants;
pub mod entanglement;
pub mod model;
pub mod numerics;
pub mod spectral;
pub mod steadystate;
