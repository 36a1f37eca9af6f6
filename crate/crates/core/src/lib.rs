//! Traffic-law falsification toolkit.
//!
//! Laws are written in a driver-oriented temporal logic ([`parser`]), scored
//! on traces with quantitative semantics ([`robustness`]), split into the
//! distinct ways they can be broken ([`violation`]), and attacked by a
//! coverage-guided genetic search ([`fuzz`]) over a small deterministic
//! traffic simulator ([`sim`]).

pub mod ast;
pub mod parser;
pub mod trace;
pub mod robustness;
pub mod violation;
pub mod sim;
pub mod fuzz;
pub mod corpus;
