//! End-to-end verification experiments for the pathwise and
//! distributional monotonicity claims.

pub struct Placeholder;
