pub mod problem;
pub mod testgen;
pub mod sandbox;
pub mod differential;
pub mod llm;
pub mod orchestrator;
pub mod cli;
