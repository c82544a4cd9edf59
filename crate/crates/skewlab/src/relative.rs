//! Relative mixing and rigidity analysis over the base factor.
//!
//! The base factor sees a skew product through the conditional expectation
//! E(f | X): the fiberwise average, a step function on the interval. Two
//! squared-defect quantities compare the true action with the base acting
//! alone:
//!
//! - mixing defect at time n: | E(T^n f . g | X) - T0^n(E f . E g) |^2 in
//!   L2 of the base. Zero means (f, g) correlate at time n exactly as an
//!   independent product would.
//! - rigidity defect at time n: | E(T^n f . g | X) - E((T0 x 1)^n f . g | X) |^2.
//!   Zero means time n looks exactly like the base moving alone.
//!
//! The category predicates and the pairwise family tests below are all
//! built from these two quantities, with every threshold checked in exact
//! rational arithmetic (squared norms, never square roots).

use serde::{Deserialize, Serialize};

use crate::dynamics::{koopman_pullback, SkewProduct};
use crate::error::{Error, Result};
use crate::padic::{checked_cells, Limits, PAdicSet};
use crate::rational::{unit_cell_measure, Rational};
use crate::stepfn::{StepFunctionX, StepFunctionZ};

/// Fiberwise average: E(f | X)(x) = integral of f(x, .) over the fiber.
pub fn cond_exp(f: &StepFunctionZ) -> StepFunctionX {
    let cell = unit_cell_measure(f.p(), f.rank());
    let values = f
        .values()
        .iter()
        .map(|row| {
            let mut sum = Rational::zero();
            for v in row {
                sum += v;
            }
            &sum * &cell
        })
        .collect();
    StepFunctionX::new(f.p(), f.rank(), values).expect("row count matches rank")
}

/// E(T^n f . g | X) for the true action.
fn relative_correlation(t: &SkewProduct, f: &StepFunctionZ, g: &StepFunctionZ, n: u64) -> Result<StepFunctionX> {
    let tn = t.power(n as i64)?;
    let tnf = koopman_pullback(&tn, f)?;
    Ok(cond_exp(&tnf.product(g)?))
}

/// Squared relative mixing defect at time n.
pub fn mixing_defect_sq(
    t: &SkewProduct,
    f: &StepFunctionZ,
    g: &StepFunctionZ,
    n: u64,
) -> Result<Rational> {
    let lhs = relative_correlation(t, f, g, n)?;
    let product = cond_exp(f).product(&cond_exp(g))?;
    let rhs = product.base_pullback(&t.base().pow(n as i64))?;
    Ok(lhs.sub(&rhs)?.l2_norm_sq())
}

/// Squared relative rigidity defect at time n.
pub fn rigidity_defect_sq(
    t: &SkewProduct,
    f: &StepFunctionZ,
    g: &StepFunctionZ,
    n: u64,
) -> Result<Rational> {
    let lhs = relative_correlation(t, f, g, n)?;
    let lifted = SkewProduct::lifted_base(t.base().pow(n as i64));
    let f0n = koopman_pullback(&lifted, f)?;
    let rhs = cond_exp(&f0n.product(g)?);
    Ok(lhs.sub(&rhs)?.l2_norm_sq())
}

/// One row of a defect scan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefectEntry {
    pub n: u64,
    pub defect_sq: Rational,
}

/// Defect values for n = 1..n_max, tagged by kind ("mixing"/"rigidity").
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefectReport {
    pub kind: String,
    pub entries: Vec<DefectEntry>,
}

impl DefectReport {
    /// CSV with pinned columns `n,defect_sq`; `decimal` appends a
    /// `defect_dec` column rendered to 20 significant digits.
    pub fn to_csv(&self, decimal: bool) -> String {
        let mut out = String::from(if decimal {
            "n,defect_sq,defect_dec\n"
        } else {
            "n,defect_sq\n"
        });
        for e in &self.entries {
            if decimal {
                out.push_str(&format!(
                    "{},{},{}\n",
                    e.n,
                    e.defect_sq,
                    e.defect_sq.to_decimal(20)
                ));
            } else {
                out.push_str(&format!("{},{}\n", e.n, e.defect_sq));
            }
        }
        out
    }

    /// Times whose defect is at most tol^2.
    pub fn times_within(&self, tol: &Rational) -> Vec<u64> {
        let tol_sq = tol.square();
        self.entries
            .iter()
            .filter(|e| e.defect_sq <= tol_sq)
            .map(|e| e.n)
            .collect()
    }
}

/// Mixing defects for n = 1..=n_max, computed incrementally (one Koopman
/// step and one base step per n).
pub fn scan_mixing(
    t: &SkewProduct,
    f: &StepFunctionZ,
    g: &StepFunctionZ,
    n_max: u64,
) -> Result<DefectReport> {
    let mut moving = f.clone();
    let mut product = cond_exp(f).product(&cond_exp(g))?;
    let mut entries = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        moving = koopman_pullback(t, &moving)?;
        product = product.base_pullback(t.base())?;
        let lhs = cond_exp(&moving.product(g)?);
        entries.push(DefectEntry {
            n,
            defect_sq: lhs.sub(&product)?.l2_norm_sq(),
        });
    }
    Ok(DefectReport {
        kind: "mixing".to_string(),
        entries,
    })
}

/// Rigidity defects for n = 1..=n_max, computed incrementally.
pub fn scan_rigidity(
    t: &SkewProduct,
    f: &StepFunctionZ,
    g: &StepFunctionZ,
    n_max: u64,
) -> Result<DefectReport> {
    let lifted = SkewProduct::lifted_base(t.base().clone());
    let mut moving = f.clone();
    let mut moving_base = f.clone();
    let mut entries = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        moving = koopman_pullback(t, &moving)?;
        moving_base = koopman_pullback(&lifted, &moving_base)?;
        let lhs = cond_exp(&moving.product(g)?);
        let rhs = cond_exp(&moving_base.product(g)?);
        entries.push(DefectEntry {
            n,
            defect_sq: lhs.sub(&rhs)?.l2_norm_sq(),
        });
    }
    Ok(DefectReport {
        kind: "rigidity".to_string(),
        entries,
    })
}

/// The canonical half-fiber test set X x [0, 1/2) as an indicator. Needs
/// an even base so some rank resolves 1/2.
pub fn half_fiber_set(p: u32) -> Result<StepFunctionZ> {
    StepFunctionZ::half_fiber_indicator(p, 1)
}

/// Category membership of T at time k, tested on A = X x [0, 1/2):
/// `in_p` when mu(T^k A meet A) > 9/20;
/// `in_m` when the squared mixing defect for (chi_A, chi_A) at k is <= 1/25.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryReport {
    #[serde(rename = "in_P")]
    pub in_p: bool,
    #[serde(rename = "in_M")]
    pub in_m: bool,
    #[serde(rename = "mu_TkA_capA")]
    pub mu: Rational,
}

pub fn category_predicates(t: &SkewProduct, k: u64) -> Result<CategoryReport> {
    let a = half_fiber_set(t.p())?;
    let tk = t.power(k as i64)?;
    let tka = koopman_pullback(&tk, &a)?;
    let mu = tka.product(&a)?.integral();
    let defect = mixing_defect_sq(t, &a, &a, k)?;
    Ok(CategoryReport {
        in_p: mu > Rational::new(9, 20)?,
        in_m: defect <= Rational::new(1, 25)?,
        mu,
    })
}

/// The rank-K family of rectangle indicators chi_{E_i x F_j}, ordered
/// row-major by (i, j). Dense enough to detect rigidity: a map is close to
/// the base acting alone iff it is close on every member pair.
#[derive(Debug, Clone)]
pub struct DenseFamily {
    pub p: u32,
    pub rank: u32,
    members: Vec<StepFunctionZ>,
}

impl DenseFamily {
    pub fn members(&self) -> &[StepFunctionZ] {
        &self.members
    }

    pub fn member(&self, i: u64, j: u64) -> Result<&StepFunctionZ> {
        let cells = self.side();
        if i >= cells || j >= cells {
            return Err(Error::IndexOutOfRange(i.max(j), cells));
        }
        Ok(&self.members[(i * cells + j) as usize])
    }

    /// Number of cells per side (p^rank); members() has side^2 entries.
    pub fn side(&self) -> u64 {
        crate::padic::cell_count(self.p, self.rank).expect("validated at construction")
    }
}

pub fn dense_family(p: u32, rank: u32) -> Result<DenseFamily> {
    let cells = checked_cells(p, rank, Limits::default())?;
    let mut members = Vec::with_capacity((cells * cells) as usize);
    for i in 0..cells {
        for j in 0..cells {
            let base = PAdicSet::new(p, rank, vec![i])?;
            let fiber = PAdicSet::new(p, rank, vec![j])?;
            members.push(StepFunctionZ::rect_indicator(&base, &fiber)?);
        }
    }
    Ok(DenseFamily { p, rank, members })
}

/// Membership in the rigidity neighborhood for the family pair (i, j) at
/// time n: squared rigidity defect < 1/k^2.
pub fn in_u(
    t: &SkewProduct,
    family: &DenseFamily,
    i: u64,
    j: u64,
    k: u64,
    n: u64,
) -> Result<bool> {
    if k == 0 {
        return Err(Error::domain("neighborhood index k must be at least 1"));
    }
    let count = family.members().len() as u64;
    if i >= count || j >= count {
        return Err(Error::IndexOutOfRange(i.max(j), count));
    }
    let defect = rigidity_defect_sq(
        t,
        &family.members()[i as usize],
        &family.members()[j as usize],
        n,
    )?;
    let threshold = Rational::new(1, k as i64)?.square();
    Ok(defect < threshold)
}

/// Times n in 1..=n_max at which every family pair has squared rigidity
/// defect at most tol^2.
pub fn certify_relative_rigidity(
    t: &SkewProduct,
    family: &DenseFamily,
    n_max: u64,
    tol: &Rational,
) -> Result<Vec<u64>> {
    let tol_sq = tol.square();
    let lifted = SkewProduct::lifted_base(t.base().clone());
    let members = family.members();
    let mut moving: Vec<StepFunctionZ> = members.to_vec();
    let mut moving_base: Vec<StepFunctionZ> = members.to_vec();
    let mut certified = Vec::new();
    for n in 1..=n_max {
        for u in moving.iter_mut() {
            *u = koopman_pullback(t, u)?;
        }
        for v in moving_base.iter_mut() {
            *v = koopman_pullback(&lifted, v)?;
        }
        let mut all_within = true;
        'pairs: for (u, v) in moving.iter().zip(&moving_base) {
            for g in members {
                let lhs = cond_exp(&u.product(g)?);
                let rhs = cond_exp(&v.product(g)?);
                if lhs.sub(&rhs)?.l2_norm_sq() > tol_sq {
                    all_within = false;
                    break 'pairs;
                }
            }
        }
        if all_within {
            certified.push(n);
        }
    }
    Ok(certified)
}

/// Both sides of the conditional Cauchy-Schwarz bound
/// |E(g h | X)|_{L2(X)}^2 <= (sup_x |g_x|_{L2(Y)}^2) |h|_{L2(Z)}^2,
/// returned squared for exact comparison.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundCheck {
    pub lhs_sq: Rational,
    pub rhs_sq: Rational,
}

pub fn cond_exp_bound_check(g: &StepFunctionZ, h: &StepFunctionZ) -> Result<BoundCheck> {
    let lhs_sq = cond_exp(&g.product(h)?).l2_norm_sq();
    let sup_fiber_sq = cond_exp(&g.product(g)?).sup_norm();
    let rhs_sq = &sup_fiber_sq * &h.l2_norm_sq();
    Ok(BoundCheck { lhs_sq, rhs_sq })
}

/// True when `a` is an indicator whose every fiber section has measure
/// exactly 1/2.
pub fn is_half_fiber_set(a: &StepFunctionZ) -> Result<bool> {
    if !a.is_indicator() {
        return Err(Error::NotIndicator);
    }
    let half = Rational::new(1, 2)?;
    Ok(cond_exp(a).values().iter().all(|v| *v == half))
}

/// Exact transport identity under fiberwise conjugation: for S with
/// identity base, E((S^-1 T S)^n (S^-1 a) . (S^-1 a) | X) equals
/// E(T^n a . a | X).
pub fn transport_check(
    t: &SkewProduct,
    s: &SkewProduct,
    a: &StepFunctionZ,
    n: u64,
) -> Result<bool> {
    if !s.is_identity_base() {
        return Err(Error::NonIdentityBase);
    }
    let conjugated = crate::dynamics::conjugate(s, t)?;
    let moved_a = koopman_pullback(&s.inverse(), a)?;
    let lhs = relative_correlation(&conjugated, &moved_a, &moved_a, n)?;
    let rhs = relative_correlation(t, a, a, n)?;
    lhs.equiv(&rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{conjugate, PointZ};
    use crate::padic::{odometer, PAdicPermutation};
    use proptest::prelude::*;

    fn rat(n: i64, d: i64) -> Rational {
        Rational::new(n, d).unwrap()
    }

    fn swap() -> PAdicPermutation {
        PAdicPermutation::new(2, 1, vec![1, 0]).unwrap()
    }

    /// Swap base; swap fiber over the left half, identity over the right.
    fn worked_skew() -> SkewProduct {
        SkewProduct::new(
            swap(),
            vec![0, 1],
            vec![swap(), PAdicPermutation::identity(2, 1).unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn cond_exp_examples() {
        let a = half_fiber_set(2).unwrap();
        let e = cond_exp(&a);
        assert!(e
            .equiv(&StepFunctionX::constant(2, 0, rat(1, 2)).unwrap())
            .unwrap());

        let c = StepFunctionZ::constant(2, 2, rat(3, 7)).unwrap();
        assert!(cond_exp(&c)
            .equiv(&StepFunctionX::constant(2, 0, rat(3, 7)).unwrap())
            .unwrap());

        // quarter rectangle over the left half only
        let f = StepFunctionZ::rect_indicator(
            &PAdicSet::new(2, 1, vec![0]).unwrap(),
            &PAdicSet::new(2, 2, vec![0]).unwrap(),
        )
        .unwrap();
        let e = cond_exp(&f);
        let left = StepFunctionX::indicator(&PAdicSet::new(2, 1, vec![0]).unwrap()).unwrap();
        assert!(e.equiv(&left.scale(&rat(1, 4))).unwrap());

        // averaging twice changes nothing: E(E(f|X)) = integral f
        assert_eq!(e.integral(), f.integral());
    }

    /// Independent point-orbit oracle for E(T^n f . g | X): evaluates
    /// f(T^-n z) g(z) on a midpoint grid and averages fibers by hand. Uses
    /// only apply_point, no Koopman matrices or cocycle powers.
    fn oracle_correlation(
        t: &SkewProduct,
        f: &StepFunctionZ,
        g: &StepFunctionZ,
        n: u64,
        rank: u32,
    ) -> StepFunctionX {
        let cells = crate::padic::cell_count(t.p(), rank).unwrap();
        let inv = t.inverse();
        let mut values = Vec::with_capacity(cells as usize);
        for i in 0..cells {
            let mut sum = Rational::zero();
            for j in 0..cells {
                let z = PointZ::new(
                    rat(2 * i as i64 + 1, 2 * cells as i64),
                    rat(2 * j as i64 + 1, 2 * cells as i64),
                )
                .unwrap();
                let mut back = z.clone();
                for _ in 0..n {
                    back = inv.apply_point(&back).unwrap();
                }
                let fv = f.value_at(&back.x, &back.y).unwrap();
                let gv = g.value_at(&z.x, &z.y).unwrap();
                sum += &(fv * gv);
            }
            values.push(&sum * &rat(1, cells as i64));
        }
        StepFunctionX::new(t.p(), rank, values).unwrap()
    }

    #[test]
    fn correlation_matches_point_oracle() {
        let t = SkewProduct::new(
            odometer(2, 2).unwrap(),
            vec![0, 1, 1, 0],
            vec![swap(), PAdicPermutation::rotation(2, 2, 1).unwrap()],
        )
        .unwrap();
        let f = half_fiber_set(2).unwrap();
        let g = StepFunctionZ::rect_indicator(
            &PAdicSet::new(2, 2, vec![0, 3]).unwrap(),
            &PAdicSet::new(2, 1, vec![1]).unwrap(),
        )
        .unwrap();
        for n in 0..=5 {
            let fast = relative_correlation(&t, &f, &g, n).unwrap();
            let slow = oracle_correlation(&t, &f, &g, n, 2);
            assert!(fast.equiv(&slow).unwrap(), "time {n}");
        }
    }

    /// For a lifted base the pair (chi_A, chi_A) has mixing defect exactly
    /// 1/16 at every time: the correlation stays 1/2 while the product
    /// term is 1/4.
    #[test]
    fn lifted_bases_have_constant_mixing_defect() {
        let a = half_fiber_set(2).unwrap();
        for base in [swap(), odometer(2, 2).unwrap(), odometer(2, 3).unwrap()] {
            let t = SkewProduct::lifted_base(base);
            for n in 1..=6 {
                assert_eq!(mixing_defect_sq(&t, &a, &a, n).unwrap(), rat(1, 16));
                assert_eq!(rigidity_defect_sq(&t, &a, &a, n).unwrap(), rat(0, 1));
            }
        }
    }

    /// Worked example: swap base with fibers (swap, id) on chi_A. At n = 1
    /// the correlation E(T chi_A . chi_A | X) is (1/2) chi_{[1/2,1)}:
    /// mixing defect |.- 1/4|^2 = 1/16, rigidity defect |. - 1/2 chi|^2
    /// against the lifted value (1/2) on all of X works out to 1/8.
    #[test]
    fn worked_example_defects() {
        let t = worked_skew();
        let a = half_fiber_set(2).unwrap();
        assert_eq!(mixing_defect_sq(&t, &a, &a, 1).unwrap(), rat(1, 16));
        assert_eq!(rigidity_defect_sq(&t, &a, &a, 1).unwrap(), rat(1, 8));
        // T^2 = 1 x swap_Y: correlation vanishes, defect = |0 - 1/4|^2
        assert_eq!(mixing_defect_sq(&t, &a, &a, 2).unwrap(), rat(1, 16));
        assert_eq!(rigidity_defect_sq(&t, &a, &a, 2).unwrap(), rat(1, 4));
        // T^4 = identity: back in sync with the base
        assert_eq!(rigidity_defect_sq(&t, &a, &a, 4).unwrap(), rat(0, 1));
        assert_eq!(rigidity_defect_sq(&t, &a, &a, 8).unwrap(), rat(0, 1));

        // cross-check against the point oracle
        for n in 1..=4 {
            let fast = relative_correlation(&t, &a, &a, n).unwrap();
            let slow = oracle_correlation(&t, &a, &a, n, 1);
            assert!(fast.equiv(&slow).unwrap());
        }
    }

    #[test]
    fn scans_agree_with_single_shot_ops() {
        let t = worked_skew();
        let a = half_fiber_set(2).unwrap();
        let mixing = scan_mixing(&t, &a, &a, 6).unwrap();
        let rigidity = scan_rigidity(&t, &a, &a, 6).unwrap();
        for n in 1..=6u64 {
            assert_eq!(
                mixing.entries[(n - 1) as usize].defect_sq,
                mixing_defect_sq(&t, &a, &a, n).unwrap()
            );
            assert_eq!(
                rigidity.entries[(n - 1) as usize].defect_sq,
                rigidity_defect_sq(&t, &a, &a, n).unwrap()
            );
        }
        assert_eq!(rigidity.times_within(&Rational::zero()), vec![4]);
    }

    #[test]
    fn category_examples() {
        // identity keeps A fixed
        let id = SkewProduct::identity(2).unwrap();
        let r = category_predicates(&id, 3).unwrap();
        assert!(r.in_p && !r.in_m);
        assert_eq!(r.mu, rat(1, 2));

        // pure fiber swap empties the intersection at odd times
        let fiber_swap = SkewProduct::fiber_only(swap());
        let r = category_predicates(&fiber_swap, 1).unwrap();
        assert!(!r.in_p && !r.in_m);
        assert_eq!(r.mu, rat(0, 1));
        let r = category_predicates(&fiber_swap, 2).unwrap();
        assert!(r.in_p);
        assert_eq!(r.mu, rat(1, 2));

        // the worked skew balances at 1/4
        let r = category_predicates(&worked_skew(), 1).unwrap();
        assert!(!r.in_p && !r.in_m);
        assert_eq!(r.mu, rat(1, 4));

        // fiber rotation by 1/4 moves A to a half-overlap position with
        // zero defect: genuinely in M
        let quarter = SkewProduct::fiber_only(PAdicPermutation::rotation(2, 2, 1).unwrap());
        let r = category_predicates(&quarter, 1).unwrap();
        assert!(!r.in_p && r.in_m);
        assert_eq!(r.mu, rat(1, 4));
    }

    #[test]
    fn dense_family_shape() {
        let fam = dense_family(2, 1).unwrap();
        assert_eq!(fam.members().len(), 4);
        for m in fam.members() {
            assert_eq!(m.integral(), rat(1, 4));
            assert_eq!(m.l2_norm_sq(), rat(1, 4));
        }
        // disjoint members multiply to zero
        let fam2 = dense_family(2, 2).unwrap();
        assert_eq!(fam2.members().len(), 16);
        let prod = fam2.members()[0].product(&fam2.members()[5]).unwrap();
        assert!(prod.l2_norm_sq().is_zero());
    }

    #[test]
    fn neighborhood_membership_examples() {
        let fam = dense_family(2, 1).unwrap();
        let lifted = SkewProduct::lifted_base(swap());
        for (i, j) in [(0u64, 0u64), (1, 2), (3, 3)] {
            assert!(in_u(&lifted, &fam, i, j, 5, 1).unwrap());
            assert!(in_u(&lifted, &fam, i, j, 5, 4).unwrap());
        }
        let t = worked_skew();
        // the pair (E0 x F0, E1 x F1) sees the fiber swap at n = 1:
        // T chi hits E1 x F1 while the lifted image misses it, defect 1/8
        assert_eq!(
            rigidity_defect_sq(&t, fam.member(0, 0).unwrap(), fam.member(1, 1).unwrap(), 1)
                .unwrap(),
            rat(1, 8)
        );
        assert!(!in_u(&t, &fam, 0, 3, 5, 1).unwrap());
        assert!(in_u(&t, &fam, 0, 3, 5, 4).unwrap());
    }

    #[test]
    fn certified_times_of_worked_example() {
        let fam = dense_family(2, 1).unwrap();
        let t = worked_skew();
        let times = certify_relative_rigidity(&t, &fam, 8, &Rational::zero()).unwrap();
        assert_eq!(times, vec![4, 8]);
        // lifted bases are rigid at every time
        let lifted = SkewProduct::lifted_base(odometer(2, 2).unwrap());
        let times = certify_relative_rigidity(&lifted, &fam, 8, &Rational::zero()).unwrap();
        assert_eq!(times, vec![1, 2, 3, 4, 5, 6, 7, 8]);
    }

    #[test]
    fn bound_check_examples() {
        let one = StepFunctionZ::constant(2, 1, Rational::one()).unwrap();
        let b = cond_exp_bound_check(&one, &one).unwrap();
        assert_eq!(b.lhs_sq, rat(1, 1));
        assert_eq!(b.rhs_sq, rat(1, 1));

        let zero = StepFunctionZ::constant(2, 1, Rational::zero()).unwrap();
        let b = cond_exp_bound_check(&zero, &one).unwrap();
        assert!(b.lhs_sq.is_zero() && b.rhs_sq.is_zero());

        let a = half_fiber_set(2).unwrap();
        let b = cond_exp_bound_check(&a, &a).unwrap();
        assert_eq!(b.lhs_sq, rat(1, 4));
        assert_eq!(b.rhs_sq, rat(1, 4));
    }

    #[test]
    fn half_fiber_predicate() {
        assert!(is_half_fiber_set(&half_fiber_set(2).unwrap()).unwrap());
        let quarter = StepFunctionZ::rect_indicator(
            &PAdicSet::full(2, 1).unwrap(),
            &PAdicSet::new(2, 2, vec![0]).unwrap(),
        )
        .unwrap();
        assert!(!is_half_fiber_set(&quarter).unwrap());
        // checkerboard: each fiber section has measure 1/2 without being
        // a product set
        let checker = StepFunctionZ::new(
            2,
            1,
            vec![
                vec![Rational::one(), Rational::zero()],
                vec![Rational::zero(), Rational::one()],
            ],
        )
        .unwrap();
        assert!(is_half_fiber_set(&checker).unwrap());
        let not_indicator = StepFunctionZ::constant(2, 1, rat(1, 2)).unwrap();
        assert!(matches!(
            is_half_fiber_set(&not_indicator),
            Err(Error::NotIndicator)
        ));
    }

    #[test]
    fn transport_identity_worked_case() {
        let t = worked_skew();
        let s = SkewProduct::fiberwise(
            2,
            1,
            vec![0, 1],
            vec![PAdicPermutation::rotation(2, 2, 1).unwrap(), swap()],
        )
        .unwrap();
        let a = half_fiber_set(2).unwrap();
        for n in 1..=6 {
            assert!(transport_check(&t, &s, &a, n).unwrap());
        }
        assert!(matches!(
            transport_check(&t, &t, &a, 1),
            Err(Error::NonIdentityBase)
        ));
    }

    /// After fiberwise conjugation the mixing scan is unchanged when the
    /// observable moves along: the correlation term transports exactly and
    /// the product term stays the constant 1/4 because conjugation by an
    /// identity-base map keeps every fiber section at measure 1/2.
    #[test]
    fn conjugation_preserves_mixing_scans() {
        let t = worked_skew();
        let s = SkewProduct::fiberwise(
            2,
            1,
            vec![0, 1],
            vec![PAdicPermutation::rotation(2, 2, 3).unwrap(), swap()],
        )
        .unwrap();
        let a = half_fiber_set(2).unwrap();
        let conjugated = conjugate(&s, &t).unwrap();
        let moved = koopman_pullback(&s.inverse(), &a).unwrap();
        assert!(is_half_fiber_set(&moved).unwrap());
        let direct = scan_mixing(&t, &a, &a, 6).unwrap();
        let transported = scan_mixing(&conjugated, &moved, &moved, 6).unwrap();
        assert_eq!(direct.entries, transported.entries);
    }

    #[test]
    fn defect_report_formats() {
        let t = worked_skew();
        let a = half_fiber_set(2).unwrap();
        let report = scan_mixing(&t, &a, &a, 2).unwrap();
        assert_eq!(report.to_csv(false), "n,defect_sq\n1,1/16\n2,1/16\n");
        assert_eq!(
            report.to_csv(true),
            "n,defect_sq,defect_dec\n1,1/16,0.062500000000000000000\n2,1/16,0.062500000000000000000\n"
        );
        let js = serde_json::to_string(&report).unwrap();
        assert_eq!(
            js,
            r#"{"kind":"mixing","entries":[{"n":1,"defect_sq":"1/16"},{"n":2,"defect_sq":"1/16"}]}"#
        );
        let back: DefectReport = serde_json::from_str(&js).unwrap();
        assert_eq!(back, report);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        /// The exclusion chain, exactly: on in_P rows the defect is bounded
        /// below through (mu - 1/4)^2 > 1/25, so in_M fails.
        #[test]
        fn overlap_excludes_small_defect(seed in any::<u64>(), k in 1u64..=8) {
            let t = crate::constructions::sample_skew_with(2, 2, 2, 3, seed).unwrap();
            let report = category_predicates(&t, k).unwrap();
            let a = half_fiber_set(2).unwrap();
            let defect = mixing_defect_sq(&t, &a, &a, k).unwrap();
            let centered = &report.mu - &rat(1, 4);
            prop_assert!(defect >= centered.square());
            if report.in_p {
                prop_assert!(centered.square() > rat(1, 25));
                prop_assert!(!report.in_m);
            }
        }

        /// Conditional Cauchy-Schwarz holds exactly on random pairs.
        #[test]
        fn bound_check_never_fails(s1 in any::<u64>(), s2 in any::<u64>()) {
            let g = crate::constructions::sample_step_z(2, 2, s1).unwrap();
            let h = crate::constructions::sample_step_z(2, 2, s2).unwrap();
            let b = cond_exp_bound_check(&g, &h).unwrap();
            prop_assert!(b.lhs_sq <= b.rhs_sq);
        }

        /// Transport holds for random T, fiberwise S, and the canonical A.
        #[test]
        fn transport_identity_random(seed in any::<u64>(), n in 1u64..=6) {
            let t = crate::constructions::sample_skew_with(2, 2, 2, 3, seed).unwrap();
            let s = crate::constructions::sample_fiberwise_with(2, 2, 2, 3, seed ^ 0xabcdef).unwrap();
            let a = half_fiber_set(2).unwrap();
            prop_assert!(transport_check(&t, &s, &a, n).unwrap());
        }
    }
}
