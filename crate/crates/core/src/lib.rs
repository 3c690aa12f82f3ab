pub mod cli;
pub mod constructors;
pub mod expr;
pub mod index_sets;
pub mod omega;
pub mod oracle;
pub mod rational;
pub mod report;
pub mod rules;
pub mod set_gates;
pub mod span_geometry;
pub mod step_seq;
pub mod verify;
