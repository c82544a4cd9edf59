//! Constructive ingredients: Rokhlin towers over single-cycle bases, the
//! tower-built fiberwise conjugator, p-adic approximation of piecewise
//! translations, and periodic rigidification of rotation-fiber skews.
//!
//! Every construction here ships with an exact certificate. The conjugator
//! verifies the conjugation identity cell by cell below the top tower
//! level and bounds the weak distance by the measure it cannot control
//! (top level plus residual). The approximation and rigidification both
//! verify their accuracy claims by computing the weak distance, and the
//! rigidification verifies its periodicity claim by exact order
//! computation; a failed claim is reported as falsified, not patched.

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{conjugate, SkewProduct, TranslationSkew};
use crate::error::{Error, Result};
use crate::padic::{cell_count, Limits, PAdicPermutation, PAdicSet};
use crate::pwtrans::PiecewiseTranslation;
use crate::rational::Rational;
use crate::stepfn::StepFunctionZ;
use crate::weak::{weak_distance_mixed, weak_distance_skews, weak_distance_translations};

/// Rokhlin tower: levels B, T0 B, ..., T0^(h-1) B are pairwise disjoint;
/// the residual is the measure the tower misses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RokhlinTower {
    base: PAdicPermutation,
    b: PAdicSet,
    height: u64,
}

/// Builds a height-n tower under a single-cycle base: B collects every
/// n-th cell along the cycle, giving floor(p^D / n) disjoint columns.
pub fn rokhlin_tower(base: &PAdicPermutation, height: u64) -> Result<RokhlinTower> {
    if height == 0 {
        return Err(Error::domain("tower height must be at least 1"));
    }
    if !base.is_single_cycle() {
        return Err(Error::NotSingleCycle { rank: base.rank() });
    }
    let cells = base.cells();
    if height > cells {
        return Err(Error::TowerTooTall {
            height,
            cycle: cells,
        });
    }
    let cycle = base.cycle_from(0);
    let columns = cells / height;
    let mut indices: Vec<u64> = (0..columns)
        .map(|i| cycle[(i * height) as usize])
        .collect();
    indices.sort_unstable();
    let b = PAdicSet::new(base.p(), base.rank(), indices)?;
    Ok(RokhlinTower {
        base: base.clone(),
        b,
        height,
    })
}

impl RokhlinTower {
    pub fn base(&self) -> &PAdicPermutation {
        &self.base
    }

    pub fn b(&self) -> &PAdicSet {
        &self.b
    }

    pub fn height(&self) -> u64 {
        self.height
    }

    /// The level sets B, T0 B, ..., T0^(h-1) B in order.
    pub fn levels(&self) -> Result<Vec<PAdicSet>> {
        let mut out = Vec::with_capacity(self.height as usize);
        let mut cur = self.b.clone();
        for _ in 0..self.height {
            out.push(cur.clone());
            cur = self.base.image_of_set(&cur)?;
        }
        Ok(out)
    }

    /// Measure not covered by the tower: 1 - height * m(B).
    pub fn residual(&self) -> Rational {
        &Rational::one()
            - &(&Rational::from_integer(self.height as i64) * &self.b.measure())
    }
}

#[derive(Serialize, Deserialize)]
struct TowerJson {
    base: PAdicPermutation,
    #[serde(rename = "B")]
    b: Vec<u64>,
    height: u64,
    residual: Rational,
}

impl Serialize for RokhlinTower {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TowerJson {
            base: self.base.clone(),
            b: self.b.indices().to_vec(),
            height: self.height,
            residual: self.residual(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RokhlinTower {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = TowerJson::deserialize(d)?;
        let b = PAdicSet::new(raw.base.p(), raw.base.rank(), raw.b)
            .map_err(serde::de::Error::custom)?;
        if b.is_empty() {
            return Err(serde::de::Error::custom("tower base B is empty"));
        }
        let tower = RokhlinTower {
            base: raw.base,
            b,
            height: raw.height,
        };
        // levels must be disjoint and the stated residual exact
        let levels = tower.levels().map_err(serde::de::Error::custom)?;
        let mut union =
            PAdicSet::empty(tower.base.p(), tower.base.rank()).map_err(serde::de::Error::custom)?;
        let mut count = 0u64;
        for level in &levels {
            count += level.indices().len() as u64;
            union = union.union(level).map_err(serde::de::Error::custom)?;
        }
        if union.indices().len() as u64 != count {
            return Err(serde::de::Error::custom("tower levels are not disjoint"));
        }
        if tower.residual() != raw.residual {
            return Err(serde::de::Error::custom("stated residual does not match"));
        }
        Ok(tower)
    }
}

/// Tower refined to a label-constant partition: piece i is a rank-`rank`
/// cell of B, and labels[l][i] is the fiber label seen at level l above
/// it, so the cocycle word is constant on each piece column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefinedTower {
    tower: RokhlinTower,
    rank: u32,
    pieces: Vec<u64>,
    labels: Vec<Vec<usize>>,
}

pub fn refine_tower(
    tower: &RokhlinTower,
    assignment: &[usize],
    rank: u32,
) -> Result<RefinedTower> {
    let p = tower.base().p();
    let cells = cell_count(p, rank)?;
    if assignment.len() as u64 != cells {
        return Err(Error::invalid(
            "refined tower",
            format!(
                "assignment length {} does not match {cells} rank-{rank} cells",
                assignment.len()
            ),
        ));
    }
    let base_r = tower.base().refine_to_rank(rank)?;
    let pieces = tower.b().refine_to_rank(rank)?.indices().to_vec();
    let mut labels = vec![vec![0usize; pieces.len()]; tower.height() as usize];
    for (i, &start) in pieces.iter().enumerate() {
        let mut c = start;
        for row in labels.iter_mut() {
            row[i] = assignment[c as usize];
            c = base_r.image_of_index(c);
        }
    }
    Ok(RefinedTower {
        tower: tower.clone(),
        rank,
        pieces,
        labels,
    })
}

impl RefinedTower {
    pub fn tower(&self) -> &RokhlinTower {
        &self.tower
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn pieces(&self) -> &[u64] {
        &self.pieces
    }

    /// labels[l][i]: label at level l over piece i.
    pub fn labels(&self) -> &[Vec<usize>] {
        &self.labels
    }
}

/// Certificate for a tower-built conjugator: the conjugated map agrees
/// with the target on every level below the top, and the weak distance is
/// bounded by residual + m(B), the measure the construction cannot see.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConjugatorCertificate {
    pub levels_verified: u64,
    pub bound: Rational,
    pub weak_distance: Rational,
}

/// Builds the fiberwise conjugator S with S^-1 hat S = target on all tower
/// levels except the top one. S is the identity on level 0 and on the
/// residual; up each column it solves the conjugation identity one level
/// at a time: S at the next cell is hat_fiber . S . target_fiber^-1.
pub fn conjugator_from_tower(
    target: &SkewProduct,
    hat: &SkewProduct,
    rt: &RefinedTower,
) -> Result<SkewProduct> {
    let p = target.p();
    if hat.p() != p {
        return Err(Error::BaseMismatch {
            left: p,
            right: hat.p(),
        });
    }
    for rank in [target.base().rank(), hat.base().rank()] {
        if rank > rt.rank() {
            return Err(Error::RankBelow {
                rank,
                target: rt.rank(),
            });
        }
    }
    let base = target.base().refine_to_rank(rt.rank())?;
    if hat.base().refine_to_rank(rt.rank())? != base
        || rt.tower().base().refine_to_rank(rt.rank())? != base
    {
        return Err(Error::invalid(
            "conjugator",
            "target, hat, and tower must share one base map",
        ));
    }
    let fiber_rank = target.fiber_rank().max(hat.fiber_rank());
    let t_n = target.normalize(rt.rank(), fiber_rank)?;
    let h_n = hat.normalize(rt.rank(), fiber_rank)?;
    // the refined tower must describe the target's labels
    for (i, &start) in rt.pieces().iter().enumerate() {
        let mut c = start;
        for (l, row) in rt.labels().iter().enumerate() {
            if t_n.fiber_label_at(c) != row[i] {
                return Err(Error::invalid(
                    "conjugator",
                    format!("tower label at level {l}, piece {i} does not match the target"),
                ));
            }
            c = base.image_of_index(c);
        }
    }
    let identity = PAdicPermutation::identity(p, fiber_rank)?;
    let mut s_fibers = vec![identity.clone(); base.cells() as usize];
    for &start in rt.pieces() {
        let mut cur = start;
        let mut s_cur = identity.clone();
        for _ in 0..rt.tower().height().saturating_sub(1) {
            let step = h_n
                .fiber_at(cur)
                .compose(&s_cur)?
                .compose(&t_n.fiber_at(cur).inverse())?;
            cur = base.image_of_index(cur);
            s_fibers[cur as usize] = step.clone();
            s_cur = step;
        }
    }
    let s = SkewProduct::fiberwise(
        p,
        rt.rank(),
        (0..base.cells() as usize).collect(),
        s_fibers,
    )?;
    // verify the identity on every level below the top
    let conjugated = conjugate(&s, &h_n)?.normalize(rt.rank(), fiber_rank)?;
    for (i, &start) in rt.pieces().iter().enumerate() {
        let mut cur = start;
        for l in 0..rt.tower().height().saturating_sub(1) {
            if conjugated.fiber_at(cur) != t_n.fiber_at(cur) {
                return Err(Error::falsified(format!(
                    "conjugation identity fails at level {l}, piece {i}"
                )));
            }
            cur = base.image_of_index(cur);
        }
    }
    Ok(s)
}

/// Runs the conjugator and checks its weak-distance bound at rank k.
pub fn certify_conjugator(
    target: &SkewProduct,
    hat: &SkewProduct,
    rt: &RefinedTower,
    k: u32,
) -> Result<(SkewProduct, ConjugatorCertificate)> {
    let s = conjugator_from_tower(target, hat, rt)?;
    let conjugated = conjugate(&s, hat)?;
    let weak_distance = weak_distance_skews(&conjugated, target, k)?;
    let bound = &rt.tower().residual() + &rt.tower().b().measure();
    if weak_distance > bound {
        return Err(Error::falsified(format!(
            "weak distance {weak_distance} exceeds the tower bound {bound}"
        )));
    }
    Ok((
        s,
        ConjugatorCertificate {
            levels_verified: rt.tower().height() - 1,
            bound,
            weak_distance,
        },
    ))
}

/// A p-adic interval translation within eps of a piecewise translation in
/// the weak metric, with the exact distance it achieved.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PadicApprox {
    pub perm: PAdicPermutation,
    pub max_discrepancy: Rational,
}

/// Snaps each rank-`rank` cell to the cell holding its midpoint's image;
/// colliding cells take the nearest free target (forward first, cyclic).
fn snap_translation(r: &PiecewiseTranslation, p: u32, rank: u32) -> Result<PAdicPermutation> {
    let cells = cell_count(p, rank)?;
    let scale = Rational::from_integer(cells as i64);
    let mut taken = vec![false; cells as usize];
    let mut map = vec![0u64; cells as usize];
    for (j, slot) in map.iter_mut().enumerate() {
        let mid = Rational::new(2 * j as i64 + 1, 2 * cells as i64)?;
        let image = r.apply(&mid)?;
        let mut want = (&image * &scale)
            .floor_int()
            .to_u64()
            .expect("cell index fits u64");
        if taken[want as usize] {
            want = (1..cells)
                .flat_map(|d| [(want + d) % cells, (want + cells - d) % cells])
                .find(|&t| !taken[t as usize])
                .expect("a free target cell always exists");
        }
        taken[want as usize] = true;
        *slot = want;
    }
    PAdicPermutation::new(p, rank, map)
}

/// Finds a p-adic approximation of `r` with weak distance below eps at
/// reference rank k_ref, searching ranks upward from k_ref. Exactly
/// p-adic inputs return their exact permutation with zero discrepancy.
pub fn padic_approx(
    r: &PiecewiseTranslation,
    eps: &Rational,
    p: u32,
    k_ref: u32,
    limits: Limits,
) -> Result<PadicApprox> {
    if !(eps > &Rational::zero()) {
        return Err(Error::domain("eps must be positive"));
    }
    if let Some(rank) = r.padic_exact_rank(p, limits) {
        return Ok(PadicApprox {
            perm: r.to_permutation(p, rank)?,
            max_discrepancy: Rational::zero(),
        });
    }
    let max_rank = limits.max_rank(p);
    for rank in k_ref..=max_rank {
        let perm = snap_translation(r, p, rank)?;
        let snapped = PiecewiseTranslation::from_permutation(&perm);
        let d = weak_distance_translations(r, &snapped, p, k_ref)?;
        if &d < eps {
            return Ok(PadicApprox {
                perm,
                max_discrepancy: d,
            });
        }
    }
    Err(Error::Resolution {
        required_rank: max_rank + 1,
        max_rank,
    })
}

/// Outcome of periodic rigidification: Q is p-adic, within eps of the
/// input in the weak metric, and its exact order divides p^(m+1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RigidifyRun {
    pub q: SkewProduct,
    pub weak_distance: Rational,
    pub m: u32,
    pub order: u64,
    pub order_verified: bool,
}

/// True rotation angle of a piecewise translation, when it is one.
fn rotation_angle(r: &PiecewiseTranslation) -> Option<Rational> {
    let first = &r.pieces()[0].shift;
    let alpha = if first.is_negative() {
        first + &Rational::one()
    } else {
        first.clone()
    };
    match PiecewiseTranslation::rotation(&alpha) {
        Ok(rot) if rot == *r => Some(alpha),
        _ => None,
    }
}

/// Nearest multiple of 1/cells to alpha in [0, 1), as a cell shift.
fn round_to_cell(alpha: &Rational, cells: u64) -> u64 {
    let scaled = &(alpha * &Rational::from_integer(cells as i64)) + &Rational::new(1, 2).unwrap();
    scaled.floor_int().to_u64().expect("shift fits u64") % cells
}

fn rigid_candidate(s: &TranslationSkew, m: u32) -> Result<SkewProduct> {
    let p = s.p();
    let cells = cell_count(p, m)?;
    let fibers: Vec<PAdicPermutation> = s
        .fibers()
        .iter()
        .map(|f| {
            if let Some(alpha) = rotation_angle(f) {
                PAdicPermutation::rotation(p, m, round_to_cell(&alpha, cells))
            } else if f.padic_exact_rank(p, Limits { max_cells: cells }).is_some() {
                f.to_permutation(p, m)
            } else {
                snap_translation(f, p, m)
            }
        })
        .collect::<Result<_>>()?;
    SkewProduct::new(s.base().clone(), s.assignment().to_vec(), fibers)
}

/// Replaces the fibers of a rotation-class skew by p-adic maps at the
/// smallest rank m >= k_ref putting the weak distance below eps/2, then
/// verifies Q^(p^(m+1)) = 1 by exact order computation. The base must
/// have order exactly p; that is what makes the fiber cocycle close up
/// for rotation fibers. Non-rotation fibers are approximated the same
/// way, and the order claim is where they can fail: a genuinely
/// non-rotation fiber system can carry an order with a factor coprime to
/// p, which this function reports as falsified.
pub fn periodic_rigidify(
    s: &TranslationSkew,
    eps: &Rational,
    k_ref: u32,
    limits: Limits,
) -> Result<RigidifyRun> {
    if !(eps > &Rational::zero()) {
        return Err(Error::domain("eps must be positive"));
    }
    let p = s.p();
    if s.base().order() != p as u128 {
        return Err(Error::domain(format!(
            "base must have order exactly {p}, found {}",
            s.base().order()
        )));
    }
    let half_eps = eps * &Rational::new(1, 2)?;
    let max_rank = limits.max_rank(p);
    for m in k_ref.max(1)..=max_rank {
        let q = rigid_candidate(s, m)?;
        let weak_distance = weak_distance_mixed(s, &q, k_ref)?;
        if weak_distance >= half_eps {
            continue;
        }
        let exponent = (p as u64)
            .checked_pow(m + 1)
            .ok_or_else(|| Error::domain("claimed period p^(m+1) overflows"))?;
        return match q.order_bounded(exponent)? {
            Some(order) if exponent % order == 0 => Ok(RigidifyRun {
                q,
                weak_distance,
                m,
                order,
                order_verified: true,
            }),
            Some(order) => Err(Error::falsified(format!(
                "rigidified map has order {order}, which does not divide p^(m+1) = {exponent}"
            ))),
            None => Err(Error::falsified(format!(
                "rigidified map has order beyond p^(m+1) = {exponent}"
            ))),
        };
    }
    Err(Error::Resolution {
        required_rank: max_rank + 1,
        max_rank,
    })
}

/// Uniform random permutation of the rank-k cells (Fisher-Yates).
pub fn random_permutation(p: u32, rank: u32, rng: &mut impl Rng) -> Result<PAdicPermutation> {
    let cells = cell_count(p, rank)?;
    let mut map: Vec<u64> = (0..cells).collect();
    for i in (1..map.len()).rev() {
        let j = rng.gen_range(0..=i);
        map.swap(i, j);
    }
    PAdicPermutation::new(p, rank, map)
}

fn sample_skew_rng(
    base: &PAdicPermutation,
    fiber_rank: u32,
    n_labels: usize,
    rng: &mut impl Rng,
) -> Result<SkewProduct> {
    if n_labels == 0 {
        return Err(Error::domain("need at least one fiber label"));
    }
    let p = base.p();
    if n_labels == 1 {
        // single label: the identity fiber, i.e. the lifted base
        return SkewProduct::new(
            base.clone(),
            vec![0; base.cells() as usize],
            vec![PAdicPermutation::identity(p, fiber_rank)?],
        );
    }
    let fibers: Vec<PAdicPermutation> = (0..n_labels)
        .map(|_| random_permutation(p, fiber_rank, rng))
        .collect::<Result<_>>()?;
    let assignment: Vec<usize> = (0..base.cells())
        .map(|_| rng.gen_range(0..n_labels))
        .collect();
    SkewProduct::new(base.clone(), assignment, fibers)
}

/// Seeded skew product over a given base.
pub fn sample_skew(
    base: &PAdicPermutation,
    fiber_rank: u32,
    n_labels: usize,
    seed: u64,
) -> Result<SkewProduct> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_skew_rng(base, fiber_rank, n_labels, &mut rng)
}

/// Seeded skew product with a random base and 1..=max_labels fiber maps.
pub fn sample_skew_with(
    p: u32,
    base_rank: u32,
    fiber_rank: u32,
    max_labels: usize,
    seed: u64,
) -> Result<SkewProduct> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = random_permutation(p, base_rank, &mut rng)?;
    let n_labels = rng.gen_range(1..=max_labels.max(1));
    sample_skew_rng(&base, fiber_rank, n_labels, &mut rng)
}

/// Seeded identity-base (fiberwise) skew product.
pub fn sample_fiberwise_with(
    p: u32,
    assignment_rank: u32,
    fiber_rank: u32,
    max_labels: usize,
    seed: u64,
) -> Result<SkewProduct> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = cell_count(p, assignment_rank)?;
    let n_labels = rng.gen_range(1..=max_labels.max(1));
    let fibers: Vec<PAdicPermutation> = (0..n_labels)
        .map(|_| random_permutation(p, fiber_rank, &mut rng))
        .collect::<Result<_>>()?;
    let assignment: Vec<usize> = (0..cells).map(|_| rng.gen_range(0..n_labels)).collect();
    SkewProduct::fiberwise(p, assignment_rank, assignment, fibers)
}

/// Seeded step function on the square with small rational values.
pub fn sample_step_z(p: u32, rank: u32, seed: u64) -> Result<StepFunctionZ> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = cell_count(p, rank)?;
    let values: Vec<Vec<Rational>> = (0..cells)
        .map(|_| {
            (0..cells)
                .map(|_| Rational::new(rng.gen_range(-4i64..=4), rng.gen_range(1i64..=4)))
                .collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;
    StepFunctionZ::new(p, rank, values)
}

/// Seeded corpus of skew products with ranks in 1..=max_rank.
pub fn sample_corpus(p: u32, max_rank: u32, count: usize, seed: u64) -> Result<Vec<SkewProduct>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let base_rank = rng.gen_range(1..=max_rank);
        let fiber_rank = rng.gen_range(1..=max_rank);
        let base = random_permutation(p, base_rank, &mut rng)?;
        let n_labels = rng.gen_range(1..=3usize);
        out.push(sample_skew_rng(&base, fiber_rank, n_labels, &mut rng)?);
    }
    Ok(out)
}

/// Seeded rotation-class input for rigidification: base of order exactly
/// p, rotation fibers with denominators up to 12.
pub fn sample_rotation_skew(p: u32, assignment_rank: u32, seed: u64) -> Result<TranslationSkew> {
    if assignment_rank == 0 {
        return Err(Error::domain("assignment rank must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = cell_count(p, assignment_rank)?;
    // shift u * p^(rank-1) with p not dividing u gives order exactly p
    let unit = if p == 2 { 1 } else { rng.gen_range(1..p) as u64 };
    let shift = (p as u64).pow(assignment_rank - 1) * unit;
    let base = PAdicPermutation::rotation(p, assignment_rank, shift)?;
    let n_fibers = rng.gen_range(1..=3usize);
    let fibers: Vec<PiecewiseTranslation> = (0..n_fibers)
        .map(|_| {
            let den = rng.gen_range(2i64..=12);
            let num = rng.gen_range(0..den);
            PiecewiseTranslation::rotation(&Rational::new(num, den)?)
        })
        .collect::<Result<_>>()?;
    let assignment: Vec<usize> = (0..cells).map(|_| rng.gen_range(0..n_fibers)).collect();
    TranslationSkew::new(base, assignment, fibers)
}
