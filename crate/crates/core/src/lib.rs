//! Numerics for nonlinear elliptic systems on weighted graphs.
//!
//! ```
//! use grapde::energy::{Energy, EnergyModel, ModelTag};
//! use grapde::graph::{generate, DomainSpec, GraphFamily, WeightSpec};
//! use grapde::solver::{mountain_pass, SolveConfig};
//!
//! # fn main() -> grapde::Result<()> {
//! let g = generate(GraphFamily::Path(3), WeightSpec::Unit, 0)?;
//! let omega = DomainSpec::new(&g, &[0, 1])?;
//! let e = Energy::new(&g, EnergyModel::defaults(ModelTag::Dirichlet), Some(omega))?;
//! let report = mountain_pass(&e, &SolveConfig::default())?;
//! assert!((report.solution.u[0] - 2f64.powf(0.25)).abs() < 1e-8);
//! # Ok(())
//! # }
//! ```

pub mod calculus;
pub mod energy;
pub mod error;
pub mod graph;
pub mod nonlinearity;
mod optim;
pub mod solver;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
