//! Generalized H-fold sumsets `H^(r)A` of finite integer sets.
//!
//! * [`sumset`]: exact engine for `h^(r)A` and `H^(r)A`, plus a brute-force oracle.
//! * [`bounds`]: closed-form lower bounds and the regime classifier.
//! * [`structure`]: arithmetic-progression detection, extremal constructions,
//!   and inverse-claim verdicts.
//! * [`subseq`]: subset and subsequence sums as special cases.
//! * [`verify`]: exhaustive campaigns with deterministic reports.

mod bits;
pub mod bounds;
pub mod structure;
pub mod subseq;
pub mod sumset;
pub mod verify;

pub use bounds::{classify_regime, main_bound, BoundError, BoundReport, Formula, HSpec, Regime};
pub use structure::{
    ap_witness, auto_claim, build_extremal, inverse_verdict, ApWitness, ClaimKind, ExtremalKind,
    InverseReport, StructureError,
};
pub use subseq::{
    closed_form_prediction, subsequence_sum_set, subset_sum_set, RepSequence, SubseqClaim,
    SubseqError,
};
pub use sumset::{
    brute_force_sumset, generalized_fold_sumset, generalized_union_sumset, sumset_extrema,
    FoldParams, IntSet, SumsetError, SumsetTable,
};
pub use verify::{
    check_direct, check_inverse, enumerate_instances, run_campaign, Check, GridConfig,
    InstanceRecord, Verdict, VerifyError, VerifyReport,
};
