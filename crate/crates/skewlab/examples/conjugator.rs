//! Building a fiberwise conjugator from a Rokhlin tower: S is the identity
//! on the bottom level and the residual, solves the conjugation identity up
//! each column, and carries a certified weak-distance bound.

use skewlab::{
    certify_conjugator, conjugate, odometer, refine_tower, rokhlin_tower, PAdicPermutation,
    Rational, Result, SkewProduct,
};

fn main() -> Result<()> {
    let base = odometer(2, 2)?;
    let swap = PAdicPermutation::new(2, 1, vec![1, 0])?;
    let id = PAdicPermutation::identity(2, 1)?;

    // Target: swap the fiber over base cells 1 and 2. Hat: the lifted base
    // map. A full-height tower (residual 0) lets S match them everywhere
    // except possibly the top level; here even the top closes up exactly.
    let target = SkewProduct::new(base.clone(), vec![0, 1, 1, 0], vec![swap.clone(), id.clone()])?;
    let hat = SkewProduct::new(base.clone(), vec![0, 0, 0, 0], vec![id.clone()])?;

    let tower = rokhlin_tower(&base, 4)?;
    let rt = refine_tower(&tower, target.assignment(), 2)?;
    let (s, cert) = certify_conjugator(&target, &hat, &rt, 2)?;

    println!("conjugator fibers (identity base): {:?}", s.assignment());
    println!(
        "certificate: levels verified = {}, bound = {}, weak distance = {}",
        cert.levels_verified, cert.bound, cert.weak_distance
    );
    assert!(s.is_identity_base());
    assert_eq!(cert.levels_verified, 3);
    assert_eq!(cert.bound, Rational::new(1, 4)?);
    assert_eq!(cert.weak_distance, Rational::zero());

    // weak_distance 0 means S^-1 hat S equals the target as a map.
    let conjugated = conjugate(&s, &hat)?;
    assert!(conjugated.equiv(&target)?);
    println!("S^-1 (T0 x 1) S reproduces the target exactly\n");

    // Change one label and the match fails only at the tower's top level:
    // the defect stays below the certified bound residual + m(B) = 1/4.
    let off = SkewProduct::new(base.clone(), vec![0, 1, 1, 1], vec![swap, id])?;
    let rt_off = refine_tower(&tower, off.assignment(), 2)?;
    let (_, cert_off) = certify_conjugator(&off, &hat, &rt_off, 2)?;
    println!(
        "one label changed: weak distance = {} <= bound = {}",
        cert_off.weak_distance, cert_off.bound
    );
    assert_eq!(cert_off.weak_distance, Rational::new(1, 8)?);
    assert!(cert_off.weak_distance <= cert_off.bound);

    Ok(())
}
