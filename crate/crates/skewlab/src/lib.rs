//! Exact arithmetic for piecewise-constant skew products of the unit
//! square over p-adic interval permutations.
//!
//! The square Z = X x Y carries maps T(x, y) = (T0 x, T_x y): a p-adic
//! interval permutation T0 downstairs and a fiber permutation T_x chosen
//! by the base cell of x. Everything is computed in exact rational
//! arithmetic: Koopman pushforwards of step functions, conditional
//! expectations onto the base, relative mixing and rigidity defects,
//! category predicates, Rokhlin towers, tower-built fiberwise conjugators
//! with certified weak-distance bounds, p-adic approximation of piecewise
//! translations, and periodic rigidification with exact order
//! verification. Claims are checked, not assumed: constructions that fail
//! their own certificates report falsification errors.
//!
//! Modules, bottom up:
//!
//! - [`rational`]: arbitrary-precision rationals with canonical "num/den"
//!   serialization and controlled decimal rendering.
//! - [`padic`]: p-adic intervals, sets, and interval permutations, with
//!   refinement, composition, and the odometer.
//! - [`stepfn`]: step functions on the interval and the square.
//! - [`pwtrans`]: piecewise translations of [0,1) and interval unions.
//! - [`dynamics`]: skew products, cocycle powers, fiberwise conjugation,
//!   Koopman pushforward, exact point evaluation.
//! - [`weak`]: the weak metric at a reference rank, for permutations,
//!   skew products, piecewise translations, and mixed pairs.
//! - [`relative`]: conditional expectations, defect scans, category
//!   predicates, dense families, rigidity certification, transport.
//! - [`constructions`]: Rokhlin towers, the tower conjugator, p-adic
//!   approximation, periodic rigidification, seeded samplers.
//! - [`cli`]: the `skewlab` binary: `--command {defect-scan |
//!   category-sweep | build-conjugator | rigidify}`, JSON in, JSON or CSV
//!   out, exit codes 0/1/2/3.
//!
//! Runnable walkthroughs live in `examples/`:
//!
//! - `cargo run --example padic_basics`: intervals, permutations,
//!   refinement, the odometer as +1 with carry.
//! - `cargo run --example defect_scan`: mixing and rigidity defects of a
//!   worked skew product, scanned over time.
//! - `cargo run --example category_sweep`: the overlap and small-defect
//!   predicates on a seeded corpus, with the exclusion chain.
//! - `cargo run --example towers`: Rokhlin towers and refined label
//!   columns over the odometer.
//! - `cargo run --example conjugator`: building and certifying a
//!   fiberwise conjugator from a tower.
//! - `cargo run --example rigidify`: p-adic approximation and periodic
//!   rigidification of a rotation-fiber skew, with its falsification
//!   boundary.
//! - `cargo run --example transport`: the exact transport identity for
//!   conditional correlations under fiberwise conjugation.

pub mod cli;
pub mod constructions;
pub mod dynamics;
pub mod error;
pub mod padic;
pub mod pwtrans;
pub mod rational;
pub mod relative;
pub mod stepfn;
pub mod weak;

pub use crate::constructions::{
    certify_conjugator, conjugator_from_tower, padic_approx, periodic_rigidify, refine_tower,
    rokhlin_tower, ConjugatorCertificate, PadicApprox, RefinedTower, RigidifyRun, RokhlinTower,
};
pub use crate::dynamics::{conjugate, koopman_pullback, PointZ, SkewProduct, TranslationSkew};
pub use crate::error::{Error, Result};
pub use crate::padic::{
    odometer, Limits, PAdicInterval, PAdicPermutation, PAdicSet, DEFAULT_MAX_CELLS,
};
pub use crate::pwtrans::{IntervalUnion, PiecewiseTranslation, TranslationPiece};
pub use crate::rational::Rational;
pub use crate::relative::{
    category_predicates, certify_relative_rigidity, cond_exp, cond_exp_bound_check, dense_family,
    half_fiber_set, in_u, is_half_fiber_set, mixing_defect_sq, rigidity_defect_sq, scan_mixing,
    scan_rigidity, transport_check, BoundCheck, CategoryReport, DefectEntry, DefectReport,
    DenseFamily,
};
pub use crate::stepfn::{StepFunctionX, StepFunctionZ};
pub use crate::weak::{
    weak_distance_mixed, weak_distance_perms, weak_distance_skews, weak_distance_translations,
};
