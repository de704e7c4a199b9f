//! Command-line tools and HTTP render service around `ampforge-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod inspect;
pub mod registry;
pub mod render;
pub mod service;

pub use error::ShellError;
pub use registry::Registry;
pub use render::{encode_wav, render, ModelSelection};
pub use service::{render_request, router, RenderRequest, ServiceConfig};
