// Negated float comparisons are deliberate: they reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod canonical;
pub mod cases;
pub mod classes;
pub mod cli;
pub mod cz;
pub mod dyadic;
pub mod error;
pub mod harness;
pub mod oracle;
pub mod orbit;
pub mod report;
