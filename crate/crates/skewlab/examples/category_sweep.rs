//! Category predicates on the half-fiber square A: the overlap property
//! mu(T^k A meet A) > 9/20 and the small-mixing-defect property, which
//! exclude each other pointwise: overlap forces defect >= (mu - 1/4)^2 > 1/25.

use skewlab::constructions::sample_corpus;
use skewlab::{category_predicates, PAdicPermutation, Rational, Result, SkewProduct};

fn main() -> Result<()> {
    // The identity skew returns A to itself: deep in the overlap class.
    let id = SkewProduct::identity(2)?;
    let report = category_predicates(&id, 3)?;
    println!(
        "identity: mu(T^3 A meet A) = {}, in_P = {}, in_M = {}",
        report.mu, report.in_p, report.in_m
    );
    assert!(report.in_p && !report.in_m);
    assert_eq!(report.mu, Rational::new(1, 2)?);

    // Fiber rotation by 1/4 at every base cell: T^k A drifts off A, and the
    // mixing defect at the half-fiber pair collapses inside the tolerance.
    let quarter = SkewProduct::fiberwise(2, 1, vec![0, 0], vec![PAdicPermutation::rotation(2, 2, 1)?])?;
    let report = category_predicates(&quarter, 1)?;
    println!(
        "fiber quarter turn: mu = {}, in_P = {}, in_M = {}",
        report.mu, report.in_p, report.in_m
    );
    assert!(!report.in_p && report.in_m);
    assert_eq!(report.mu, Rational::new(1, 4)?);

    // A seeded corpus: the exclusion holds on every sample at every k.
    let corpus = sample_corpus(2, 3, 40, 7)?;
    let mut in_p_rows = 0u32;
    let mut in_m_rows = 0u32;
    for t in &corpus {
        for k in 1..=16 {
            let r = category_predicates(t, k)?;
            assert!(!(r.in_p && r.in_m), "exclusion must hold on every row");
            in_p_rows += r.in_p as u32;
            in_m_rows += r.in_m as u32;
        }
    }
    println!(
        "corpus of {} skews, k = 1..16: {} overlap rows, {} small-defect rows, 0 violations",
        corpus.len(),
        in_p_rows,
        in_m_rows
    );

    Ok(())
}
