//! p-adic intervals, sets, and interval permutations: the exact grid that
//! every construction in the crate lives on.

use skewlab::{odometer, PAdicInterval, PAdicPermutation, PAdicSet, Rational, Result};

fn main() -> Result<()> {
    // Rank-k intervals are [j/p^k, (j+1)/p^k); each has measure p^-k.
    let cell = PAdicInterval::new(2, 3, 5)?;
    println!("interval #5 at rank 3 over p=2 has measure {}", cell.measure());
    assert_eq!(cell.measure(), Rational::new(1, 8)?);

    // Sets are unions of same-rank intervals; measure adds up exactly.
    let evens = PAdicSet::new(2, 3, vec![0, 2, 4, 6])?;
    let left = PAdicSet::new(2, 1, vec![0])?;
    let both = evens.intersect(&left.refine_to_rank(3)?)?;
    println!(
        "evens ({}) meet the left half ({}) in measure {}",
        evens.measure(),
        left.measure(),
        both.measure()
    );
    assert_eq!(both.measure(), Rational::new(1, 4)?);

    // Permutations act on the rank-k intervals. Composition is exact and
    // refinement never changes the underlying map of points.
    let swap = PAdicPermutation::new(2, 1, vec![1, 0])?;
    let refined = swap.refine_to_rank(3)?;
    assert_eq!(refined.map(), &[4, 5, 6, 7, 0, 1, 2, 3]);
    assert!(swap.compose(&swap)?.is_identity());
    println!("swap refined to rank 3: {:?}", refined.map());

    // The adding machine: +1 with carry on interval digits, a single cycle
    // through all p^d cells. Reading cells in digit-reversed order makes it
    // literally j -> j + 1.
    let odo = odometer(2, 3)?;
    assert!(odo.is_single_cycle());
    let cycle = odo.cycle_from(0);
    println!("odometer(2,3) cycle from 0: {cycle:?}");
    assert_eq!(cycle, vec![0, 4, 2, 6, 1, 5, 3, 7]);
    assert_eq!(odo.order(), 8);

    // Rotation by 3 cells at rank 3 is the rigid translation x + 3/8.
    let rot = PAdicPermutation::rotation(2, 3, 3)?;
    assert_eq!(rot.image_of_index(6), 1);
    println!("rotation by 3/8 sends interval 6 to {}", rot.image_of_index(6));

    println!("all p-adic basics hold");
    Ok(())
}
