//! Classification of linear dynamical maps on cone-ordered spaces.
//!
//! A [`maps::DynMap`] is a real square matrix acting on the ambient space of a
//! closed convex cone ([`cones::ConeSpec`]): the nonnegative orthant for
//! classical Markov chains, the PSD cone (in an orthonormal Hermitian basis)
//! for quantum channels, or any finitely generated pointed cone. The
//! [`classify`] module decides ergodicity, mixing, irreducibility and
//! primitivity through several independent routes and cross-checks them;
//! [`dynamics`] simulates Cesàro averages, normalized powers and bipartite
//! decoupling.

pub mod classify;
pub mod cli;
pub mod cones;
pub mod dynamics;
pub mod linalg;
pub mod maps;
