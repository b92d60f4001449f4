//! Finite-state Kantorovich operators and linear transfers.
//!
//! Costs live in [`CostMatrix`], functions in [`Potential`], measures in
//! [`ProbVector`] and [`Coupling`]. Every operator in [`KantorovichOp`] can be
//! checked against the axioms with [`check_axioms`]. The weak KAM picture of a
//! cost is gathered in [`WeakKamBundle`].

pub mod entropic;
pub mod ergopt;
pub mod error;
pub mod ext;
pub mod graph;
pub mod lp;
pub mod mather;
pub mod measure;
pub mod minplus;
pub mod operator;
pub mod potential;
pub mod transfers;
pub mod weakkam;

pub use entropic::{EntropicOp, MarkovSemigroup};
pub use error::{Error, Result};
pub use ext::ExtReal;
pub use measure::{Coupling, ProbVector, StochasticMatrix};
pub use minplus::CostMatrix;
pub use operator::{check_axioms, combine, scale, AxiomReport, CombineMode, Curvature, KantorovichOp};
pub use potential::{FiniteSpace, Potential};
pub use weakkam::WeakKamBundle;
