//! Weak-topology distances between transformations.
//!
//! The distance at reference rank K is the maximum, over the rank-K cells
//! (intervals on the line, squares E x F on the square), of the measure of
//! the symmetric difference of the two images of that cell. Everything is
//! exact: for pairs of p-adic maps the measures are integer counts over a
//! common grid, and for piecewise translations the images are interval
//! unions with rational endpoints.

use std::collections::HashMap;

use crate::dynamics::{SkewProduct, TranslationSkew};
use crate::error::{Error, Result};
use crate::padic::{cell_count, PAdicPermutation};
use crate::pwtrans::IntervalUnion;
use crate::rational::{cells_measure, unit_cell_measure, Rational};

fn require_same_p(left: u32, right: u32) -> Result<()> {
    if left != right {
        return Err(Error::BaseMismatch { left, right });
    }
    Ok(())
}

fn symdiff_count(a: &[u64], b: &[u64]) -> u64 {
    // both sorted; |A| + |B| - 2|A meet B|
    let mut common = 0u64;
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    (a.len() + b.len()) as u64 - 2 * common
}

/// max over rank-k intervals F of m(pi_a F symdiff pi_b F).
pub fn weak_distance_perms(a: &PAdicPermutation, b: &PAdicPermutation, k: u32) -> Result<Rational> {
    require_same_p(a.p(), b.p())?;
    let rank = a.rank().max(b.rank()).max(k);
    let a = a.refine_to_rank(rank)?;
    let b = b.refine_to_rank(rank)?;
    let stride = cell_count(a.p(), rank - k)?;
    let intervals = cell_count(a.p(), k)?;
    let mut worst = 0u64;
    for t in 0..intervals {
        let children = t * stride..(t + 1) * stride;
        let mut ia: Vec<u64> = children.clone().map(|c| a.image_of_index(c)).collect();
        let mut ib: Vec<u64> = children.map(|c| b.image_of_index(c)).collect();
        ia.sort_unstable();
        ib.sort_unstable();
        worst = worst.max(symdiff_count(&ia, &ib));
    }
    Ok(cells_measure(worst, a.p(), rank))
}

/// Sorted fiber-image table: images of the children of each rank-k fiber
/// interval under each distinct fiber map.
fn fiber_image_table(
    fibers: &[PAdicPermutation],
    k: u32,
) -> Result<Vec<Vec<Vec<u64>>>> {
    let mut table = Vec::with_capacity(fibers.len());
    for fiber in fibers {
        let stride = cell_count(fiber.p(), fiber.rank() - k)?;
        let intervals = cell_count(fiber.p(), k)?;
        let mut rows = Vec::with_capacity(intervals as usize);
        for j in 0..intervals {
            let mut images: Vec<u64> = (j * stride..(j + 1) * stride)
                .map(|c| fiber.image_of_index(c))
                .collect();
            images.sort_unstable();
            rows.push(images);
        }
        table.push(rows);
    }
    Ok(table)
}

/// max over rank-k squares E x F of mu(T(E x F) symdiff S(E x F)).
pub fn weak_distance_skews(a: &SkewProduct, b: &SkewProduct, k: u32) -> Result<Rational> {
    require_same_p(a.p(), b.p())?;
    let base_rank = a.base().rank().max(b.base().rank()).max(k);
    let fiber_rank = a.fiber_rank().max(b.fiber_rank()).max(k);
    let an = a.normalize(base_rank, fiber_rank)?;
    let bn = b.normalize(base_rank, fiber_rank)?;
    let table_a = fiber_image_table(an.fibers(), k)?;
    let table_b = fiber_image_table(bn.fibers(), k)?;
    let base_stride = cell_count(a.p(), base_rank - k)?;
    let fiber_stride = cell_count(a.p(), fiber_rank - k)?;
    let intervals = cell_count(a.p(), k)?;

    let mut worst = 0u64;
    for i in 0..intervals {
        // per target base cell: the fiber labels a and b send into it from E_i
        let mut columns: HashMap<u64, (Option<usize>, Option<usize>)> = HashMap::new();
        for c in i * base_stride..(i + 1) * base_stride {
            columns.entry(an.base().image_of_index(c)).or_default().0 =
                Some(an.fiber_label_at(c));
            columns.entry(bn.base().image_of_index(c)).or_default().1 =
                Some(bn.fiber_label_at(c));
        }
        for j in 0..intervals {
            let mut count = 0u64;
            for (la, lb) in columns.values() {
                count += match (la, lb) {
                    (Some(la), Some(lb)) => {
                        symdiff_count(&table_a[*la][j as usize], &table_b[*lb][j as usize])
                    }
                    // only one map puts fiber mass in this column
                    _ => fiber_stride,
                };
            }
            worst = worst.max(count);
        }
    }
    Ok(cells_measure(worst, a.p(), base_rank + fiber_rank))
}

/// max over rank-k intervals F of m(R F symdiff R' F) for piecewise
/// translations R, R' of the fiber.
pub fn weak_distance_translations(
    a: &crate::pwtrans::PiecewiseTranslation,
    b: &crate::pwtrans::PiecewiseTranslation,
    p: u32,
    k: u32,
) -> Result<Rational> {
    let intervals = cell_count(p, k)?;
    let mut worst = Rational::zero();
    for j in 0..intervals {
        let lo = cells_measure(j, p, k);
        let hi = cells_measure(j + 1, p, k);
        let d = a.image_of_span(&lo, &hi).symdiff_measure(&b.image_of_span(&lo, &hi));
        worst = worst.max(d);
    }
    Ok(worst)
}

/// Interval union of a sorted list of rank-`rank` cells.
fn cells_to_union(indices: &[u64], p: u32, rank: u32) -> IntervalUnion {
    let spans = indices
        .iter()
        .map(|&c| (cells_measure(c, p, rank), cells_measure(c + 1, p, rank)))
        .collect();
    IntervalUnion::from_spans(spans)
}

/// max over rank-k squares of mu(S(E x F) symdiff Q(E x F)) where S has
/// piecewise-translation fibers and Q is p-adic.
pub fn weak_distance_mixed(s: &TranslationSkew, q: &SkewProduct, k: u32) -> Result<Rational> {
    require_same_p(s.p(), q.p())?;
    let p = s.p();
    let base_rank = s.base().rank().max(q.base().rank()).max(k);
    let fiber_rank = q.fiber_rank().max(k);
    let s_base = s.base().refine_to_rank(base_rank)?;
    let s_assign = s.assignment_at_rank(base_rank)?;
    let qn = q.normalize(base_rank, fiber_rank)?;
    let q_table = fiber_image_table(qn.fibers(), k)?;
    let intervals = cell_count(p, k)?;
    let base_stride = cell_count(p, base_rank - k)?;
    let cell_f = unit_cell_measure(p, k);
    let base_cell = unit_cell_measure(p, base_rank);

    // image unions, memoized per (label, fiber interval)
    let mut s_images: Vec<Vec<IntervalUnion>> = Vec::with_capacity(s.fibers().len());
    for fiber in s.fibers() {
        let mut rows = Vec::with_capacity(intervals as usize);
        for j in 0..intervals {
            let lo = cells_measure(j, p, k);
            let hi = cells_measure(j + 1, p, k);
            rows.push(fiber.image_of_span(&lo, &hi));
        }
        s_images.push(rows);
    }
    let q_images: Vec<Vec<IntervalUnion>> = q_table
        .iter()
        .map(|rows| {
            rows.iter()
                .map(|cells| cells_to_union(cells, p, fiber_rank))
                .collect()
        })
        .collect();

    let mut worst = Rational::zero();
    for i in 0..intervals {
        let mut columns: HashMap<u64, (Option<usize>, Option<usize>)> = HashMap::new();
        for c in i * base_stride..(i + 1) * base_stride {
            columns.entry(s_base.image_of_index(c)).or_default().0 = Some(s_assign[c as usize]);
            columns.entry(qn.base().image_of_index(c)).or_default().1 =
                Some(qn.fiber_label_at(c));
        }
        for j in 0..intervals {
            let mut sum = Rational::zero();
            for (ls, lq) in columns.values() {
                let part = match (ls, lq) {
                    (Some(ls), Some(lq)) => {
                        s_images[*ls][j as usize].symdiff_measure(&q_images[*lq][j as usize])
                    }
                    // one-sided column: the whole fiber image differs
                    _ => cell_f.clone(),
                };
                sum += &part;
            }
            let contribution = &sum * &base_cell;
            worst = worst.max(contribution);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::SkewProduct;
    use crate::padic::odometer;
    use crate::pwtrans::PiecewiseTranslation;
    use proptest::prelude::*;

    fn rat(n: i64, d: i64) -> Rational {
        Rational::new(n, d).unwrap()
    }

    fn swap() -> PAdicPermutation {
        PAdicPermutation::new(2, 1, vec![1, 0]).unwrap()
    }

    #[test]
    fn identical_maps_are_at_distance_zero() {
        let o = odometer(2, 3).unwrap();
        assert_eq!(weak_distance_perms(&o, &o, 2).unwrap(), rat(0, 1));
        let t = SkewProduct::lifted_base(o);
        assert_eq!(weak_distance_skews(&t, &t, 2).unwrap(), rat(0, 1));
    }

    #[test]
    fn odometer_vs_identity_at_rank_one() {
        let o = odometer(2, 2).unwrap();
        let id = PAdicPermutation::identity(2, 1).unwrap();
        // both rank-1 intervals land entirely elsewhere
        assert_eq!(weak_distance_perms(&o, &id, 1).unwrap(), rat(1, 1));
        // at rank 2 the images share nothing either
        assert_eq!(weak_distance_perms(&o, &id, 2).unwrap(), rat(1, 2));
    }

    /// Distance between the rotation by 1/3 and its best rank-3 dyadic
    /// approximation (rotation by 3/8): each rank-3 interval image is off
    /// by two spans of length 1/24.
    #[test]
    fn rotation_vs_dyadic_rotation() {
        let thirds = PiecewiseTranslation::rotation(&rat(1, 3)).unwrap();
        let dyadic = PiecewiseTranslation::rotation(&rat(3, 8)).unwrap();
        assert_eq!(
            weak_distance_translations(&thirds, &dyadic, 2, 3).unwrap(),
            rat(1, 12)
        );
    }

    #[test]
    fn skew_distance_sees_fiber_differences() {
        let with_fiber = SkewProduct::new(
            swap(),
            vec![0, 1],
            vec![swap(), PAdicPermutation::identity(2, 1).unwrap()],
        )
        .unwrap();
        let lifted = SkewProduct::lifted_base(swap());
        assert_eq!(weak_distance_skews(&with_fiber, &lifted, 1).unwrap(), rat(1, 2));
        // disjoint images max out at twice the square measure
        let id = SkewProduct::identity(2).unwrap();
        assert_eq!(weak_distance_skews(&id, &lifted, 1).unwrap(), rat(1, 2));
    }

    #[test]
    fn mixed_distance_agrees_with_padic_twin() {
        let s = TranslationSkew::new(
            swap(),
            vec![0, 1],
            vec![
                PiecewiseTranslation::rotation(&rat(1, 4)).unwrap(),
                PiecewiseTranslation::identity(),
            ],
        )
        .unwrap();
        let q = s.to_skew_product(2).unwrap();
        assert_eq!(weak_distance_mixed(&s, &q, 2).unwrap(), rat(0, 1));
        // against a genuinely different p-adic skew the two routes agree
        let other = SkewProduct::new(
            swap(),
            vec![0, 1],
            vec![
                PAdicPermutation::rotation(2, 2, 3).unwrap(),
                PAdicPermutation::identity(2, 0).unwrap(),
            ],
        )
        .unwrap();
        let mixed = weak_distance_mixed(&s, &other, 2).unwrap();
        let pure = weak_distance_skews(&q, &other, 2).unwrap();
        assert_eq!(mixed, pure);
    }

    /// The rigidification worked example: swap base, fiber rotation by 1/3
    /// against its rank-3 dyadic snap; every square contributes 1/96.
    #[test]
    fn mixed_distance_rotation_example() {
        let s = TranslationSkew::new(
            swap(),
            vec![0, 0],
            vec![PiecewiseTranslation::rotation(&rat(1, 3)).unwrap()],
        )
        .unwrap();
        let q = SkewProduct::new(
            swap(),
            vec![0, 0],
            vec![PAdicPermutation::rotation(2, 3, 3).unwrap()],
        )
        .unwrap();
        assert_eq!(weak_distance_mixed(&s, &q, 3).unwrap(), rat(1, 96));
    }

    fn arb_perm(p: u32, rank: u32) -> impl Strategy<Value = PAdicPermutation> {
        any::<u64>().prop_map(move |seed| {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let cells = cell_count(p, rank).unwrap();
            let mut map: Vec<u64> = (0..cells).collect();
            for i in (1..map.len()).rev() {
                let j = rng.gen_range(0..=i);
                map.swap(i, j);
            }
            PAdicPermutation::new(p, rank, map).unwrap()
        })
    }

    proptest! {
        /// Pseudometric laws at a fixed reference rank. A coarse rank can
        /// miss differences inside a cell, so zero distance only implies
        /// equality once k reaches the ranks of the maps.
        #[test]
        fn perm_distance_is_a_pseudometric(
            a in arb_perm(2, 3),
            b in arb_perm(2, 3),
            c in arb_perm(2, 3),
            k in 0u32..=2,
        ) {
            let dab = weak_distance_perms(&a, &b, k).unwrap();
            let dba = weak_distance_perms(&b, &a, k).unwrap();
            prop_assert_eq!(&dab, &dba);
            if a == b {
                prop_assert!(dab.is_zero());
            }
            let dac = weak_distance_perms(&a, &c, k).unwrap();
            let dbc = weak_distance_perms(&b, &c, k).unwrap();
            prop_assert!(dac <= &dab + &dbc);
            // each cell image has measure 2^-k, so the symdiff is at most twice that
            prop_assert!(dab <= rat(2, 1) * unit_cell_measure(2, k));
        }

        /// At the maps' own rank, zero distance means equal maps.
        #[test]
        fn distance_separates_at_full_rank(a in arb_perm(2, 3), b in arb_perm(2, 3)) {
            let d = weak_distance_perms(&a, &b, 3).unwrap();
            prop_assert_eq!(d.is_zero(), a == b);
        }
    }
}
