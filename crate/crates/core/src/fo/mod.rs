pub mod encode;
pub mod formula;
pub mod sat;
pub mod smtlib;
pub mod solve;

pub use encode::{build_cover_query, build_fs_formula, build_reach_formula, CoverQuery, Direction, MarkRef};
pub use formula::{Atom, Cmp, Formula, Var, VarKind};
pub use smtlib::emit_smtlib;
pub use solve::{solve, SolveContext, SolveError, SolveResult, SolveStats};
