//! Classical comparison models.

pub mod ar;
pub mod gp;
