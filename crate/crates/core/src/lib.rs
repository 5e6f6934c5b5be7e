//! Verification toolkit for Frobenius-stratified isotropic flag varieties
//! over finite fields, the Weyl-group words that index their strata, local
//! model chart counts, and a truncated hermitian lattice calculus.
//!
//! The crate is organised bottom-up:
//!
//! * [`gf`] — finite fields `GF(q^k)` with table arithmetic;
//! * [`linalg`] — dense row reduction on element codes;
//! * [`space`] — formed spaces, Frobenius, isotropic subspace enumeration;
//! * [`weyl`] — signed permutations, lengths, parabolic double cosets;
//! * [`strata`] — the relative-position classifier and its verifier;
//! * [`charts`] — point counts of affine charts and dimension tables;
//! * [`latcalc`] — lattices in a truncated window and the crucial dichotomy;
//! * [`report`] — deterministic JSON/CSV/Markdown reports.

// Matrix code indexes several arrays in lock-step; explicit indices read
// more clearly there than zipped iterators.
#![allow(clippy::needless_range_loop)]

pub mod gf;
pub mod linalg;
pub mod space;
pub mod weyl;
pub mod report;
pub mod strata;
pub mod charts;
pub mod latcalc;
