pub mod cluster;
pub mod dataset;
pub mod detect;
pub mod error;
pub mod http;
pub mod ingest;
pub mod model;
pub mod report;
pub mod scoring;
pub mod textproc;

pub use error::CorpusError;
