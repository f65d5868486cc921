//! Creative tool-use planning: scene model, staged LLM pipeline, plan-script
//! language, kinematic simulator and evaluation harness.

pub mod eval;
pub mod geometry;
pub mod llm;
pub mod pipeline;
pub mod planscript;
pub mod scene;
pub mod sim;
