//! Time-triggered concurrent constraint programming for integrated modular
//! avionics.
//!
//! The crate is layered bottom-up: [`constraint`] (finite-domain constraint
//! system), [`calculus`] (process terms and the reduction engine), [`dsl`]
//! (concrete syntax), [`avionics`] (system model and its compilation into
//! processes) and [`validators`] (schedule predicates).

pub mod avionics;
pub mod calculus;
pub mod constraint;
pub mod dsl;
pub mod validators;
