//! Corpus analysis for national-anthem MIDI files.
//!
//! The crate is organized as a pipeline:
//!
//! 1. [`smf`] parses Standard MIDI File bytes into a validated event representation.
//! 2. [`score`] turns a parsed file into a timed performance (paired notes, tempo
//!    map, beat grid).
//! 3. [`features`] computes an eight-feature vector per anthem.
//! 4. [`indices`] ingests country-level index CSVs and joins them with the
//!    feature store on canonical country names.
//! 5. [`analysis`] standardizes, clusters (seeded k-means with elbow/silhouette
//!    selection), and computes correlations and cluster agreement.
//! 6. [`report`] orchestrates end-to-end runs and renders SVG artifacts.
//!
//! Every stage is a pure function of its inputs plus an explicit seed, so a
//! whole run is reproducible byte-for-byte; see [`report::run_pipeline`].

pub mod analysis;
pub mod corpus;
pub mod features;
pub mod indices;
pub mod report;
pub mod score;
pub mod smf;
