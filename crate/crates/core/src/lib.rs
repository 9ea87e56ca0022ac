//! Visibility-guided gesture testing for AR apps replayed from recorded
//! sessions: trace analysis, test opportunity extraction, event scheduling,
//! and a synthetic scene simulator to score the schedules against.

pub mod geometry;
pub mod lifespan;
pub mod math;
pub mod metrics;
pub mod pipeline;
pub mod report;
pub mod scheduler;
pub mod simulator;
pub mod trace;
pub mod visibility;
