//! Newton iteration on constraint manifolds using only ambient (Euclidean)
//! coordinates, applied to critical configurations of five point charges on
//! the unit sphere.
//!
//! The library is layered:
//!
//! * [`constraint`] — generic machinery for a level set `S = F⁻¹(c)`:
//!   Lagrange multipliers, the embedded gradient vector field, and the
//!   restricted Hessian expressed in an adapted tangent frame.
//! * [`newton`] — the Newton iteration itself: solve the frame-coordinate
//!   linear system, assemble the ambient line-search vector, retract, repeat.
//! * [`sphere`] — the concrete instance: a product of four unit spheres in
//!   ℝ¹² with a fifth electron pinned at the north pole, stereographic
//!   tangent frames with per-point chart switching, and the normalization
//!   retraction.
//! * [`riesz`] — the Coulomb (s = 1) and general Riesz s-energy cost with
//!   analytic ambient gradient and Hessian.
//! * [`families`] — generators and defining equations for the known critical
//!   families (bi-pyramid, square right pyramid, regular pentagon,
//!   double-tetrahedron), Morse/Morse–Bott classification, and the s-sweep
//!   bifurcation scanner.

pub mod constraint;
pub mod families;
pub mod newton;
pub mod riesz;
pub mod sphere;

pub use constraint::{
    embedded_gradient, frame_gradient_coords, lagrange_multipliers, restricted_hessian,
    ConstraintError, ConstraintSystem, CostFunction, RestrictedHessian, TangentFrame,
};
pub use families::{BifurcationRecord, CriticalReport, Family, FamilyLabel};
pub use newton::{newton_solve, newton_step, NewtonSettings, NewtonStatus, NewtonTrace};
pub use riesz::{RieszEnergy, RieszExponent};
pub use sphere::{Configuration, SphereProductConstraints};
