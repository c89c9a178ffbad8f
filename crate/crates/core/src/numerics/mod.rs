//! Quadrature over unbounded domains and finite differences in θ.

mod fd;
mod quadrature;
mod region;

pub use fd::{
    fd_derivative, fd_derivative_vec, fd_gradient, fd_gradient_vec, fd_hessian, Domain, FdGradient,
    FdHessian, FdResult, FdSpec,
};
pub use quadrature::{
    build_rule, integrate, integrate_vec, Estimate, QuadratureRule, QuadratureSpec, Substitution,
};
pub use region::{box_half_width, AxisMap, Region};
