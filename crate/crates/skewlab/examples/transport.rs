//! The transport identity: conjugating by a fiberwise map S moves observables
//! but leaves conditional correlations over the base exactly unchanged, so
//! every defect computed for T transports verbatim to S^-1 T S.

use skewlab::constructions::{sample_fiberwise_with, sample_skew_with};
use skewlab::{
    conjugate, half_fiber_set, is_half_fiber_set, koopman_pullback, scan_mixing, transport_check,
    Result,
};

fn main() -> Result<()> {
    // Seeded pair: a random skew product T and a random fiberwise S.
    let t = sample_skew_with(2, 2, 2, 2, 11)?;
    let s = sample_fiberwise_with(2, 2, 2, 3, 12)?;
    let a = half_fiber_set(2)?;

    // E((S^-1 T S)^n (S^-1 A) . (S^-1 A) | X) = E(T^n A . A | X), exactly.
    for n in 1..=6 {
        assert!(transport_check(&t, &s, &a, n)?);
    }
    println!("conditional correlations transport exactly for n = 1..6");

    // Moving the half-fiber square by a fiberwise map keeps its fiber
    // measure 1/2 over every base cell, so mixing scans agree line by line.
    let conjugated = conjugate(&s, &t)?;
    let moved = koopman_pullback(&s.inverse(), &a)?;
    assert!(is_half_fiber_set(&moved)?);
    let direct = scan_mixing(&t, &a, &a, 8)?;
    let transported = scan_mixing(&conjugated, &moved, &moved, 8)?;
    for (d, m) in direct.entries.iter().zip(transported.entries.iter()) {
        assert_eq!(d.defect_sq, m.defect_sq);
    }
    println!("mixing defect scans agree entry by entry:");
    print!("{}", direct.to_csv(false));

    Ok(())
}
