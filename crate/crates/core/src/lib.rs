// `!(a < b)` comparisons are meant to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// `Expr::sub`, `neg` and `div` are smart constructors, not operators.
#![allow(clippy::should_implement_trait)]

pub mod expr;
pub mod ratfun;
pub mod curvature;
pub mod kovacic;
pub mod numeric;
pub mod solution;
pub mod dynamics;
pub mod embedding;
pub mod fixtures;
