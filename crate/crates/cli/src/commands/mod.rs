mod corpus;
mod eval;
mod validate;

pub use corpus::{clean, extract, fetch, stats};
pub use eval::{align, pairs, score, score_external, split};
pub use validate::validate;
