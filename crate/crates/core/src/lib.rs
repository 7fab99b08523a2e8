//! Finite Heyting algebras, copresheaf toposes and the safety calculus of
//! estimate consensus protocols.

pub mod copresheaf;
pub mod decided;
pub mod fincat;
pub mod generate;
pub mod geometric;
pub mod heyting;
pub mod protocol;
pub mod report;
pub mod sweep;
