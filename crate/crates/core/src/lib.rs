pub mod dedup;
pub mod document;
pub mod enrich;
pub mod error;
pub mod ingest;
pub mod kb;
pub mod lifecycle;
pub mod metrics;
pub mod model;
pub mod project;
pub mod queries;
pub mod rules;
pub mod scoring;
pub mod synthetic;
pub mod views;
