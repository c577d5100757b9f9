//! Coflow scheduling toolkit: exact-rational LP machinery, deadline
//! generation, greedy and iterated-rounding edge allocators, a König
//! matching decomposition, algorithm-combination certificates, and a
//! brute-force optimal scheduler for desk-scale verification.

pub mod cbf;
pub mod coloring;
pub mod combine;
pub mod deadlines;
pub mod generate;
pub mod greedy;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod rational;

pub use model::{Coflow, Flow, Instance, Schedule, ScheduleEntry};
pub use rational::Rational;
