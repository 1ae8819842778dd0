//! Elementary slit map-outs and their compositions.

mod chain;
mod step;

pub use chain::ConformalChain;
pub use step::{ElementaryStep, Side};

use crate::error::Result;

/// Vertical micro-slit map-out `z ↦ u + sqrt((z−u)² + 2·dcap)`.
pub fn map_out_vertical(u: f64, dcap: f64) -> Result<ElementaryStep> {
    ElementaryStep::vertical(u, dcap)
}
