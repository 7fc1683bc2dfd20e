//! Dynamic geometry on symplectic and affine manifolds.
//!
//! The crate realizes paths in a manifold as diffeomorphisms of the manifold.
//! An intrinsic Hamiltonian 1-form (the *Ether* field) is attached to a
//! symplectic manifold with a symplectic connection; integrating it along a
//! path with the full weight gives path-shape-independent translations and
//! point reflections, while the half-weight dynamics gives genuine
//! path-dependent symplectomorphisms whose linearization at the path origin
//! is ordinary parallel transport. On top of that sit dynamic holonomy of
//! loops, curvature functions generating its Lie algebra, translocation of an
//! external Hamiltonian system to an anchor point, membrane generating
//! phases, and an affine (non-symplectic, possibly torsion-carrying)
//! counterpart of the whole machinery.
//!
//! All core math is generic over the scalar type (`Real`, satisfied by `f32`
//! and `f64`); concrete `f64` aliases are exported at the crate root. Chart
//! models are single-chart: the flat plane `R^{2n}`, the unit sphere in a
//! stereographic chart, and the hyperbolic plane in the Poincaré disk.

pub mod affine;
pub mod error;
pub mod ether;
pub mod fd;
pub mod holonomy;
pub mod linalg;
pub mod manifold;
pub mod num;
pub mod ode;
pub mod path;
pub mod pathmap;
pub mod quadrature;
pub mod translocation;

pub use error::Error;
pub use num::Real;

/// Default scalar used by the CLI and the concrete aliases below.
pub type Scalar = f64;

pub type Point64 = manifold::Point<f64>;
pub type LinearMap64 = manifold::LinearMap<f64>;
pub type Model64 = manifold::ManifoldModel<f64>;
pub type EtherField64 = ether::EtherField<f64>;
pub type Path64 = path::Path<f64>;
pub type PathMap64 = pathmap::PathMap<f64>;
pub type Loop64 = holonomy::Loop<f64>;
pub type HamiltonianSystem64 = translocation::HamiltonianSystem<f64>;
pub type TranslocatedSystem64 = translocation::TranslocatedSystem<f64>;
pub type InternalVectorField64 = affine::InternalVectorField<f64>;

pub type Result<T> = std::result::Result<T, Error>;
