//! Exact computations with finite local algebras over prime fields, finite
//! modules over them, flatness tests, and a checker for a flatness criterion
//! over Artin local rings with matching embedding dimension.

pub mod algebra;
pub mod field;
pub mod invariants;
pub mod lemma;
pub mod linalg;
pub mod modules;
pub mod presentation;
pub mod verifier;

pub use algebra::{AlgebraError, AlgebraMorphism, Element, FiniteLocalAlgebra, IdealSpan};
pub use field::{FieldConfig, FieldError};
pub use invariants::{InvariantError, InvariantReport, WiebeMatrix};
pub use lemma::{LemmaError, LemmaInstance, MembershipCertificate, MinorTable};
pub use linalg::{LinalgError, LinearSolver, Mat, Subspace};
pub use modules::{FiniteModule, FlatnessVerdict, ModuleError, WtfMode, WtfVerdict};
pub use presentation::{CompiledAlgebra, Monomial, Poly, Presentation, PresentationError};
pub use verifier::{
    check_equal_edim_flatness, check_flatness_criterion, check_wtf_equiv_flat, sweep, Caps, EqualEdimReport, GeneratorKind, InstanceSpec, SweepReport, CriterionReport, Verdict,
    VerifierError, WtfEquivReport,
};
