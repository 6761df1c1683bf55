//! Algorithmic correspondence for distributive lattice expansions: the ALBA
//! and ALBA^e calculi, syntactic classification of inequalities, and
//! brute-force verification on finite perfect lattices.

pub mod classify;
pub mod cli;
pub mod engine;
pub mod models;
pub mod signature;
