//! Periodic-orbit partners on hyperbolic surfaces: group elements and
//! flows on `PSL(2,R)`, Fuchsian groups, Poincare sections, closing and
//! connecting, encounters and partner synthesis.

pub mod check;
pub mod closing;
pub mod encounters;
pub mod flow;
pub mod fuchsian;
pub mod partners;
pub mod psl2;
pub mod suites;
pub mod word;
