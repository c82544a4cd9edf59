//! Relative mixing and rigidity defects of skew products, scanned over time
//! against the half-fiber square A = X x [0, 1/2).

use skewlab::{
    half_fiber_set, scan_mixing, scan_rigidity, PAdicPermutation, Rational, Result, SkewProduct,
};

fn main() -> Result<()> {
    let swap = PAdicPermutation::new(2, 1, vec![1, 0])?;
    let id = PAdicPermutation::identity(2, 1)?;
    let a = half_fiber_set(2)?;

    // A lifted base map T0 x 1 never moves the fiber: the rigidity defect
    // against the lifted reference is identically zero, while the mixing
    // defect stays pinned at (mu(A)^2 - mu(A)mu(A))^2-type constants.
    let lifted = SkewProduct::new(swap.clone(), vec![0, 0], vec![id.clone()])?;
    let mixing = scan_mixing(&lifted, &a, &a, 8)?;
    let rigidity = scan_rigidity(&lifted, &a, &a, 8)?;
    println!("lifted base map, n = 1..8");
    println!("{}", mixing.to_csv(false));
    for entry in &rigidity.entries {
        assert_eq!(entry.defect_sq, Rational::zero());
    }
    for entry in &mixing.entries {
        assert_eq!(entry.defect_sq, Rational::new(1, 16)?);
    }
    println!("rigidity defect is identically 0, mixing defect is 1/16\n");

    // A genuine skew: swap the base, swap the fiber over the left cell only.
    // The fiber cocycle cancels exactly at times divisible by 4.
    let worked = SkewProduct::new(swap, vec![0, 1], vec![PAdicPermutation::new(2, 1, vec![1, 0])?, id])?;
    let rigidity = scan_rigidity(&worked, &a, &a, 8)?;
    println!("worked skew, n = 1..8");
    println!("{}", rigidity.to_csv(false));
    assert_eq!(rigidity.entries[0].defect_sq, Rational::new(1, 8)?);
    assert_eq!(rigidity.entries[1].defect_sq, Rational::new(1, 4)?);
    let rigid_times = rigidity.times_within(&Rational::zero());
    println!("exact rigidity times within 1..8: {rigid_times:?}");
    assert_eq!(rigid_times, vec![4, 8]);

    Ok(())
}
