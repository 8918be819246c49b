pub mod config;
pub mod datamodel;
pub mod ingest;
pub mod impute;
pub mod agreement;
pub mod learners;
pub mod boruta;
pub mod stats;
pub mod eval;
pub mod synth;
pub mod matrix;
pub mod cli;
