//! Rokhlin towers under the odometer: B, T0 B, ..., T0^(n-1) B disjoint,
//! with an exactly computed residual, plus label columns after refinement.

use skewlab::{odometer, refine_tower, rokhlin_tower, Rational, Result};

fn main() -> Result<()> {
    let base = odometer(2, 3)?;

    // Height 4 divides the cycle length 8: two full columns, no residual.
    let tower = rokhlin_tower(&base, 4)?;
    println!(
        "height 4 over odometer(2,3): B = {:?}, residual = {}",
        tower.b().indices(),
        tower.residual()
    );
    assert_eq!(tower.b().indices(), &[0, 1]);
    assert_eq!(tower.residual(), Rational::zero());
    for (i, level) in tower.levels()?.iter().enumerate() {
        println!("  level {i}: cells {:?}", level.indices());
    }

    // Height 3 leaves 8 mod 3 = 2 cells uncovered: residual 1/4.
    let tower3 = rokhlin_tower(&base, 3)?;
    println!(
        "height 3: B = {:?}, residual = {}",
        tower3.b().indices(),
        tower3.residual()
    );
    assert_eq!(tower3.residual(), Rational::new(1, 4)?);

    // Refining a tower tracks which fiber label each cell of each level
    // carries, column by column; here labels alternate along the cycle.
    let rt = refine_tower(&tower, &[0, 1, 0, 1, 1, 0, 1, 0], 3)?;
    println!("refined label columns at rank 3:");
    for (l, labels) in rt.labels().iter().enumerate() {
        println!("  level {l}: {labels:?}");
    }
    assert_eq!(rt.labels()[0], vec![0, 1]);
    assert_eq!(rt.labels()[1], vec![1, 0]);

    // The tower serializes with its base, B, height, and residual.
    let json = serde_json::to_string(&tower).expect("tower serializes");
    println!("tower as JSON: {json}");

    Ok(())
}
