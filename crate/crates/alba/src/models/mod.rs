//! Finite perfect DLEs as upset lattices of finite posets, evaluation and
//! brute-force validity checking.

mod check;
mod elim;
mod eval;
mod import;
mod lattice;
mod lemmas;
mod poset;
mod random;

pub use check::{
    check_implication, check_quasi, check_validity, role_axiom_holds, role_axioms_hold, stage_verdict, system_verdict, verify_correspondence,
    verify_rule_step, verify_steps, Agreement, CorrespondenceReport, Divergence, Verdict, DEFAULT_BUDGET,
};
pub use eval::{eval, EvalError, Evaluator, Valuation};
pub use import::{parse_lattice, ImportError};
pub use lattice::{boxop, build_dle, check_normal, diamond, relational_op, FiniteDLE, Lattice, NormalityError, OpTable};
pub use lemmas::{check_lemma_suite, LemmaReport, RoleLemmas};
pub use poset::{enumerate_posets, random_poset, Poset, PosetError, MAX_POINTS};
pub use random::{
    automorphisms, random_dle, random_partial_function, random_relation, relational_modal, relational_modal_algebras, relations_up_to_symmetry,
};
