//! Finite-resolution workbench for the dynamics of totally disconnected
//! locally compact groups.
//!
//! Two exactly representable model groups are provided:
//!
//! * [`shift`]: `F_p^Z ⋊ Z`, where the shift has a dense, non-closed
//!   contraction group and a nontrivial nub;
//! * [`linear`]: `GL_n(Q_p)` on rational matrices, with closed contraction
//!   groups and nontrivial scale.
//!
//! Model-generic routines for tidy subgroups, scale and nubs live in
//! [`tidy`]; the conjugator constructions and convergence experiments in
//! [`limits`]; global checks (Tits core images, anisotropic quotients,
//! normal-closure witnesses) in [`verify`].

pub mod error;
pub mod kernel;
pub mod model;
pub mod limits;
pub mod linear;
pub mod shift;
pub mod tidy;
pub mod verify;

pub use error::{Error, Result};
pub use kernel::{Level, SubgroupImage, Tri, WindowGroup};
pub use model::Model;
