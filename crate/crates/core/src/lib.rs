pub mod field;
pub mod linalg;
pub mod poly;
pub mod char_sum;
pub mod quadratic;
pub mod cubic_slice;
pub mod rank_search;
pub mod experiments;
pub mod cli;
