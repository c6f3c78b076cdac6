pub mod analysis;
pub mod cantor;
pub mod cli;
pub mod precision;
pub mod sequences;
