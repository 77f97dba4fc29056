//! Numerical verification laboratory for functional inequalities linking
//! relative entropy, Fisher information, Stein discrepancy and Wasserstein
//! distance on model spaces (Gaussian line/space, line with potential,
//! round sphere), plus Monte-Carlo checks of heat-semigroup Hessian bounds.

pub mod bounds;
pub mod cli;
pub mod functionals;
pub mod geometry;
pub mod mc_sim;
pub mod measures;
pub mod numerics;
pub mod semigroup;
