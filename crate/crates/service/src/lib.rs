//! HTTP service and command line around the session engine.

pub mod api;
pub mod registry;
pub mod run;
pub mod scripted;
pub mod transport;

pub use api::router;
pub use registry::{CreateRequest, Registry};
