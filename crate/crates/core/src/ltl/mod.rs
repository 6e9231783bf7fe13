//! Linear temporal logic: parsing, lasso semantics, Büchi translation,
//! product search and plan projection.

mod buchi;
mod formula;
mod lasso;
mod plan;
mod product;

pub use buchi::{to_buchi, BuchiAutomaton, Guard, Transition};
pub use formula::{parse, Formula};
pub use lasso::{eval_on_lasso, Lasso, Letter};
pub use plan::{project_plan, synthesize, AgentTrack, ObjectTrack, Plan, Projection};
pub use product::{find_accepting_lasso, find_graph_lasso, product, LabeledGraph, Product};
