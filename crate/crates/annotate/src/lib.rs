//! Labeling service: annotators open an event, read a neutral context
//! article and label its statement clusters one at a time.
//!
//! ```text
//! GET  /events/{id}/next?annotator=A   -> {context, cluster, progress}
//! POST /labels {annotator, cluster_id, label}
//! GET  /export?event=E                 -> JSON lines, one vote per line
//! ```

mod redact;
mod roster;
mod router;
mod service;
mod store;

pub use redact::Redactor;
pub use roster::{Roster, RosterEntry};
pub use router::{router, serve};
pub use service::{
    AnnotateError, ClusterPayload, ContextPayload, NextResponse, Progress, Service, StatementPayload, COMPLETION_MESSAGE,
};
pub use store::{VoteLog, VoteRecord};
