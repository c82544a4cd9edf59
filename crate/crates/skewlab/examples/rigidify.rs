//! p-adic approximation of piecewise translations, and the periodic
//! rigidification Q of a rotation-fiber skew: Q is p-adic, provably close
//! in the weak metric, and Q^(p^(m+1)) = identity is verified by exact
//! composition, not assumed.

use skewlab::constructions::padic_approx;
use skewlab::{
    periodic_rigidify, Limits, PAdicPermutation, PiecewiseTranslation, Rational, Result,
    TranslationPiece, TranslationSkew,
};

fn main() -> Result<()> {
    let third = PiecewiseTranslation::rotation(&Rational::new(1, 3)?)?;
    let limits = Limits::default();

    // Rotation by 1/3 is not 2-adic at any rank; the approximation snaps it
    // to the nearest dyadic rotation fine enough to meet eps.
    let coarse = padic_approx(&third, &Rational::new(1, 4)?, 2, 3, limits)?;
    println!(
        "rot 1/3 at eps 1/4: rank {} permutation, max interval discrepancy {}",
        coarse.perm.rank(),
        coarse.max_discrepancy
    );
    assert_eq!(coarse.perm, PAdicPermutation::rotation(2, 3, 3)?);
    assert_eq!(coarse.max_discrepancy, Rational::new(1, 12)?);

    let fine = padic_approx(&third, &Rational::new(1, 100)?, 2, 7, limits)?;
    println!(
        "rot 1/3 at eps 1/100: rank {} permutation, discrepancy {}",
        fine.perm.rank(),
        fine.max_discrepancy
    );
    assert_eq!(fine.max_discrepancy, Rational::new(1, 192)?);

    // A skew with base of order exactly p and a 1/3-rotation fiber. The
    // rigidification keeps the base and snaps the fiber to denominator 2^m.
    let swap = PAdicPermutation::new(2, 1, vec![1, 0])?;
    let s = TranslationSkew::new(swap, vec![0, 0], vec![third])?;
    let run = periodic_rigidify(&s, &Rational::new(1, 16)?, 3, limits)?;
    println!(
        "rigidify: m = {}, weak distance = {}, order = {} (verified: {})",
        run.m, run.weak_distance, run.order, run.order_verified
    );
    assert_eq!(run.m, 3);
    assert_eq!(run.weak_distance, Rational::new(1, 96)?);
    assert_eq!(run.order, 8);
    assert!(run.order_verified);
    assert!(run.q.power(8)?.is_identity());

    // The falsification boundary: a fiber that is a 3-cycle of dyadic
    // intervals gives a skew of order 6, and 6 does not divide 2^(m+1).
    let piece = |a: Rational, b: Rational, s: Rational| TranslationPiece {
        start: a,
        end: b,
        shift: s,
    };
    let three_cycle = PiecewiseTranslation::new(vec![
        piece(Rational::zero(), Rational::new(1, 4)?, Rational::new(1, 2)?),
        piece(Rational::new(1, 4)?, Rational::new(3, 4)?, Rational::new(-1, 4)?),
        piece(Rational::new(3, 4)?, Rational::one(), Rational::zero()),
    ])?;
    let bad = TranslationSkew::new(
        PAdicPermutation::new(2, 1, vec![1, 0])?,
        vec![0, 0],
        vec![three_cycle],
    )?;
    match periodic_rigidify(&bad, &Rational::new(1, 4)?, 2, limits) {
        Err(e) => println!("3-cycle fiber is rejected: {e}"),
        Ok(_) => panic!("a non-rotation order must falsify the period claim"),
    }

    Ok(())
}
