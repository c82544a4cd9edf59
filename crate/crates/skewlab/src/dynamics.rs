//! Piecewise-constant skew products of the unit square.
//!
//! T(x, y) = (T0 x, T_x y): a p-adic permutation moves the base coordinate
//! and a fiber permutation, constant on each base cell, moves the fiber
//! coordinate. Iterates compose fiber maps along base orbits, so
//! (T^n)_x = T_{T0^(n-1) x} . ... . T_{T0 x} . T_x. The maps form a group:
//! compose, inverse, and power stay in the class, with ranks normalized by
//! refinement wherever two objects meet.
//!
//! The Koopman action here is the pushforward convention
//! (T f)(z) = f(T^-1 z), so indicators move with their sets:
//! T chi_A = chi_{T A}. On step functions this permutes cells and is an
//! exact L2 isometry.
//!
//! `TranslationSkew` is the same shape with arbitrary piecewise
//! translations in the fibers; it is the input class for p-adic
//! approximation and periodic rigidification.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::padic::{cell_count, PAdicPermutation};
use crate::pwtrans::PiecewiseTranslation;
use crate::rational::Rational;
use crate::stepfn::StepFunctionZ;

/// A point of the square with exact rational coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointZ {
    pub x: Rational,
    pub y: Rational,
}

impl PointZ {
    pub fn new(x: Rational, y: Rational) -> Result<Self> {
        for t in [&x, &y] {
            if t.is_negative() || *t >= Rational::one() {
                return Err(Error::invalid("point", format!("{t} is outside [0,1)")));
            }
        }
        Ok(PointZ { x, y })
    }
}

/// Piecewise-constant skew product in canonical form: fiber maps are
/// deduplicated, share one rank, and labels appear in first-use order
/// along the base assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkewProduct {
    p: u32,
    base: PAdicPermutation,
    fiber_rank: u32,
    assignment: Vec<usize>,
    fibers: Vec<PAdicPermutation>,
}

impl SkewProduct {
    /// Builds and canonicalizes. `assignment[i]` names the fiber map used
    /// over base cell i.
    pub fn new(
        base: PAdicPermutation,
        assignment: Vec<usize>,
        fibers: Vec<PAdicPermutation>,
    ) -> Result<Self> {
        let p = base.p();
        if assignment.len() as u64 != base.cells() {
            return Err(Error::invalid(
                "skew product",
                format!(
                    "assignment length {} does not match {} base cells",
                    assignment.len(),
                    base.cells()
                ),
            ));
        }
        if fibers.is_empty() {
            return Err(Error::invalid("skew product", "no fiber maps"));
        }
        for fiber in &fibers {
            if fiber.p() != p {
                return Err(Error::BaseMismatch {
                    left: p,
                    right: fiber.p(),
                });
            }
        }
        if let Some(&bad) = assignment.iter().find(|&&l| l >= fibers.len()) {
            return Err(Error::invalid(
                "skew product",
                format!("label {bad} has no fiber map (only {} given)", fibers.len()),
            ));
        }
        let fiber_rank = fibers.iter().map(|f| f.rank()).max().expect("nonempty");
        let refined: Vec<PAdicPermutation> = fibers
            .iter()
            .map(|f| f.refine_to_rank(fiber_rank))
            .collect::<Result<_>>()?;

        // Canonical form: drop unused maps, merge equal maps, relabel in
        // first-use order.
        let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut out_fibers: Vec<PAdicPermutation> = Vec::new();
        let mut out_assignment = Vec::with_capacity(assignment.len());
        for &l in &assignment {
            let key = refined[l].map().to_vec();
            let idx = *seen.entry(key).or_insert_with(|| {
                out_fibers.push(refined[l].clone());
                out_fibers.len() - 1
            });
            out_assignment.push(idx);
        }
        Ok(SkewProduct {
            p,
            base,
            fiber_rank,
            assignment: out_assignment,
            fibers: out_fibers,
        })
    }

    /// T0 x 1: the base map alone, acting trivially on fibers.
    pub fn lifted_base(base: PAdicPermutation) -> Self {
        let p = base.p();
        let cells = base.cells() as usize;
        let id = PAdicPermutation::identity(p, 0).expect("rank 0 is always valid");
        SkewProduct::new(base, vec![0; cells], vec![id]).expect("trivial fibers are valid")
    }

    /// 1 x R: identity base, one fiber map everywhere.
    pub fn fiber_only(fiber: PAdicPermutation) -> Self {
        let p = fiber.p();
        let base = PAdicPermutation::identity(p, 0).expect("rank 0 is always valid");
        SkewProduct::new(base, vec![0], vec![fiber]).expect("single fiber is valid")
    }

    /// Identity-base skew product with per-cell fiber maps. The assignment
    /// lives on the rank of `assignment_rank`.
    pub fn fiberwise(
        p: u32,
        assignment_rank: u32,
        assignment: Vec<usize>,
        fibers: Vec<PAdicPermutation>,
    ) -> Result<Self> {
        let base = PAdicPermutation::identity(p, assignment_rank)?;
        SkewProduct::new(base, assignment, fibers)
    }

    pub fn identity(p: u32) -> Result<Self> {
        Ok(SkewProduct::lifted_base(PAdicPermutation::identity(p, 0)?))
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn base(&self) -> &PAdicPermutation {
        &self.base
    }

    pub fn fiber_rank(&self) -> u32 {
        self.fiber_rank
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn fibers(&self) -> &[PAdicPermutation] {
        &self.fibers
    }

    pub fn fiber_label_at(&self, base_cell: u64) -> usize {
        self.assignment[base_cell as usize]
    }

    pub fn fiber_at(&self, base_cell: u64) -> &PAdicPermutation {
        &self.fibers[self.assignment[base_cell as usize]]
    }

    /// Same map on finer grids. `base_rank`/`fiber_rank` must be at least
    /// the current ranks.
    pub fn normalize(&self, base_rank: u32, fiber_rank: u32) -> Result<Self> {
        let base = self.base.refine_to_rank(base_rank)?;
        let stride = cell_count(self.p, base_rank - self.base.rank())? as usize;
        let mut assignment = Vec::with_capacity(self.assignment.len() * stride);
        for &l in &self.assignment {
            assignment.extend(std::iter::repeat_n(l, stride));
        }
        let fibers: Vec<PAdicPermutation> = self
            .fibers
            .iter()
            .map(|f| f.refine_to_rank(fiber_rank))
            .collect::<Result<_>>()?;
        Ok(SkewProduct {
            p: self.p,
            base,
            fiber_rank,
            assignment,
            fibers,
        })
    }

    fn common_ranks(&self, other: &Self) -> Result<(Self, Self)> {
        if self.p != other.p {
            return Err(Error::BaseMismatch {
                left: self.p,
                right: other.p,
            });
        }
        let base_rank = self.base.rank().max(other.base.rank());
        let fiber_rank = self.fiber_rank.max(other.fiber_rank);
        Ok((
            self.normalize(base_rank, fiber_rank)?,
            other.normalize(base_rank, fiber_rank)?,
        ))
    }

    /// self after other, with fiber maps composed along the moved base:
    /// (self . other)_x = self_{other0 x} . other_x.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        let (a, b) = self.common_ranks(other)?;
        let base = a.base.compose(&b.base)?;
        let cells = b.base.cells();
        let mut memo: HashMap<(usize, usize), usize> = HashMap::new();
        let mut fibers: Vec<PAdicPermutation> = Vec::new();
        let mut assignment = Vec::with_capacity(cells as usize);
        for c in 0..cells {
            let la = a.fiber_label_at(b.base.image_of_index(c));
            let lb = b.fiber_label_at(c);
            let idx = match memo.get(&(la, lb)) {
                Some(&idx) => idx,
                None => {
                    let composed = a.fibers[la].compose(&b.fibers[lb])?;
                    fibers.push(composed);
                    let idx = fibers.len() - 1;
                    memo.insert((la, lb), idx);
                    idx
                }
            };
            assignment.push(idx);
        }
        SkewProduct::new(base, assignment, fibers)
    }

    /// Inverse skew product: (T^-1)_x = (T_{T0^-1 x})^-1.
    pub fn inverse(&self) -> Self {
        let base_inv = self.base.inverse();
        let cells = self.base.cells();
        let fibers_inv: Vec<PAdicPermutation> =
            self.fibers.iter().map(|f| f.inverse()).collect();
        let mut assignment = vec![0usize; cells as usize];
        for c in 0..cells {
            assignment[self.base.image_of_index(c) as usize] = self.assignment[c as usize];
        }
        SkewProduct::new(base_inv, assignment, fibers_inv).expect("inverse stays valid")
    }

    /// T^n by direct cocycle composition along base orbits. Negative n
    /// goes through the inverse; n = 0 is the identity.
    pub fn power(&self, n: i64) -> Result<Self> {
        if n == 0 {
            return SkewProduct::identity(self.p);
        }
        if n < 0 {
            return self.inverse().power(-n);
        }
        let base_n = self.base.pow(n);
        let cells = self.base.cells();
        let mut fibers: Vec<PAdicPermutation> = Vec::new();
        let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut assignment = Vec::with_capacity(cells as usize);
        for c in 0..cells {
            let mut acc = PAdicPermutation::identity(self.p, self.fiber_rank)?;
            let mut cur = c;
            for _ in 0..n {
                acc = self.fiber_at(cur).compose(&acc)?;
                cur = self.base.image_of_index(cur);
            }
            let idx = *seen.entry(acc.map().to_vec()).or_insert_with(|| {
                fibers.push(acc.clone());
                fibers.len() - 1
            });
            assignment.push(idx);
        }
        SkewProduct::new(base_n, assignment, fibers)
    }

    /// True when the point map is the identity on the square.
    pub fn is_identity(&self) -> bool {
        self.base.is_identity() && self.fibers.iter().all(|f| f.is_identity())
    }

    pub fn is_identity_base(&self) -> bool {
        self.base.is_identity()
    }

    /// Equality as point maps, after refining both to common ranks.
    pub fn equiv(&self, other: &Self) -> Result<bool> {
        let (a, b) = self.common_ranks(other)?;
        if a.base != b.base {
            return Ok(false);
        }
        for c in 0..a.base.cells() {
            if a.fiber_at(c) != b.fiber_at(c) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Smallest k in 1..=max with T^k = identity, or None when the order
    /// exceeds `max`.
    pub fn order_bounded(&self, max: u64) -> Result<Option<u64>> {
        let mut acc = self.clone();
        for k in 1..=max {
            if acc.is_identity() {
                return Ok(Some(k));
            }
            acc = acc.compose(self)?;
        }
        Ok(None)
    }

    /// Forward image of a point, rejecting cell boundaries of the ranks in
    /// use.
    pub fn apply_point(&self, z: &PointZ) -> Result<PointZ> {
        use num_traits::ToPrimitive;
        let new_x = self.base.apply_point(&z.x)?;
        let scaled = &z.x * &Rational::from_integer(self.base.cells() as i64);
        let cell = scaled.floor_int().to_u64().expect("cell index fits u64");
        let new_y = self.fiber_at(cell).apply_point(&z.y)?;
        Ok(PointZ { x: new_x, y: new_y })
    }
}

/// Conjugation by an identity-base (fiberwise) map:
/// (S^-1 T S)_x = S_{T0 x}^-1 . T_x . S_x over the base of T.
pub fn conjugate(s: &SkewProduct, t: &SkewProduct) -> Result<SkewProduct> {
    if !s.is_identity_base() {
        return Err(Error::NonIdentityBase);
    }
    if s.p != t.p {
        return Err(Error::BaseMismatch {
            left: s.p,
            right: t.p,
        });
    }
    let base_rank = s.base.rank().max(t.base.rank());
    let fiber_rank = s.fiber_rank.max(t.fiber_rank);
    let sn = s.normalize(base_rank, fiber_rank)?;
    let tn = t.normalize(base_rank, fiber_rank)?;
    let cells = tn.base.cells();
    let mut memo: HashMap<(usize, usize, usize), usize> = HashMap::new();
    let mut fibers: Vec<PAdicPermutation> = Vec::new();
    let mut assignment = Vec::with_capacity(cells as usize);
    for c in 0..cells {
        let target = tn.base.image_of_index(c);
        let key = (
            sn.fiber_label_at(target),
            tn.fiber_label_at(c),
            sn.fiber_label_at(c),
        );
        let idx = match memo.get(&key) {
            Some(&idx) => idx,
            None => {
                let composed = sn.fibers[key.0]
                    .inverse()
                    .compose(&tn.fibers[key.1])?
                    .compose(&sn.fibers[key.2])?;
                fibers.push(composed);
                let idx = fibers.len() - 1;
                memo.insert(key, idx);
                idx
            }
        };
        assignment.push(idx);
    }
    SkewProduct::new(tn.base, assignment, fibers)
}

/// Pushforward on step functions: (T f)(z) = f(T^-1 z), so
/// T chi_A = chi_{T A}. Exact permutation of cell values.
pub fn koopman_pullback(t: &SkewProduct, f: &StepFunctionZ) -> Result<StepFunctionZ> {
    if t.p() != f.p() {
        return Err(Error::BaseMismatch {
            left: t.p(),
            right: f.p(),
        });
    }
    let rank = f.rank().max(t.base().rank()).max(t.fiber_rank());
    let tn = t.normalize(rank, rank)?;
    let fine = f.refine_to_rank(rank)?;
    let mut out = StepFunctionZ::constant(f.p(), rank, Rational::zero())?;
    {
        let values = out.values_mut();
        for (a, row) in fine.values().iter().enumerate() {
            let ta = tn.base().image_of_index(a as u64) as usize;
            let sigma = tn.fiber_at(a as u64);
            for (b, v) in row.iter().enumerate() {
                values[ta][sigma.image_of_index(b as u64) as usize] = v.clone();
            }
        }
    }
    Ok(out)
}

/// JSON form pinned for skew products.
#[derive(Serialize, Deserialize)]
struct SkewJson {
    p: u32,
    base: SkewBaseJson,
    fibers: SkewFibersJson,
}

#[derive(Serialize, Deserialize)]
struct SkewBaseJson {
    rank: u32,
    perm: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct SkewFibersJson {
    rank: u32,
    assignment: Vec<usize>,
    maps: Vec<Vec<u64>>,
}

impl Serialize for SkewProduct {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SkewJson {
            p: self.p,
            base: SkewBaseJson {
                rank: self.base.rank(),
                perm: self.base.map().to_vec(),
            },
            fibers: SkewFibersJson {
                rank: self.fiber_rank,
                assignment: self.assignment.clone(),
                maps: self.fibers.iter().map(|f| f.map().to_vec()).collect(),
            },
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SkewProduct {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = SkewJson::deserialize(d)?;
        let base = PAdicPermutation::new(raw.p, raw.base.rank, raw.base.perm)
            .map_err(serde::de::Error::custom)?;
        let fibers: Vec<PAdicPermutation> = raw
            .fibers
            .maps
            .into_iter()
            .map(|m| PAdicPermutation::new(raw.p, raw.fibers.rank, m))
            .collect::<Result<_>>()
            .map_err(serde::de::Error::custom)?;
        SkewProduct::new(base, raw.fibers.assignment, fibers).map_err(serde::de::Error::custom)
    }
}

/// Skew product with piecewise-translation fibers: the input class for
/// p-adic approximation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranslationSkew {
    p: u32,
    base: PAdicPermutation,
    assignment: Vec<usize>,
    fibers: Vec<PiecewiseTranslation>,
}

impl TranslationSkew {
    pub fn new(
        base: PAdicPermutation,
        assignment: Vec<usize>,
        fibers: Vec<PiecewiseTranslation>,
    ) -> Result<Self> {
        if assignment.len() as u64 != base.cells() {
            return Err(Error::invalid(
                "translation skew",
                format!(
                    "assignment length {} does not match {} base cells",
                    assignment.len(),
                    base.cells()
                ),
            ));
        }
        if fibers.is_empty() {
            return Err(Error::invalid("translation skew", "no fiber maps"));
        }
        if let Some(&bad) = assignment.iter().find(|&&l| l >= fibers.len()) {
            return Err(Error::invalid(
                "translation skew",
                format!("label {bad} has no fiber map (only {} given)", fibers.len()),
            ));
        }
        // first-use relabeling, merging equal maps
        let mut seen: HashMap<usize, usize> = HashMap::new();
        let mut out_fibers: Vec<PiecewiseTranslation> = Vec::new();
        let mut out_assignment = Vec::with_capacity(assignment.len());
        for &l in &assignment {
            let idx = match seen.get(&l) {
                Some(&idx) => idx,
                None => {
                    let idx = match out_fibers.iter().position(|f| *f == fibers[l]) {
                        Some(idx) => idx,
                        None => {
                            out_fibers.push(fibers[l].clone());
                            out_fibers.len() - 1
                        }
                    };
                    seen.insert(l, idx);
                    idx
                }
            };
            out_assignment.push(idx);
        }
        Ok(TranslationSkew {
            p: base.p(),
            base,
            assignment: out_assignment,
            fibers: out_fibers,
        })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn base(&self) -> &PAdicPermutation {
        &self.base
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn fibers(&self) -> &[PiecewiseTranslation] {
        &self.fibers
    }

    pub fn fiber_at(&self, base_cell: u64) -> &PiecewiseTranslation {
        &self.fibers[self.assignment[base_cell as usize]]
    }

    /// Expands the assignment to a finer base grid.
    pub fn assignment_at_rank(&self, base_rank: u32) -> Result<Vec<usize>> {
        if base_rank < self.base.rank() {
            return Err(Error::RankBelow {
                rank: self.base.rank(),
                target: base_rank,
            });
        }
        let stride = cell_count(self.p, base_rank - self.base.rank())? as usize;
        let mut out = Vec::with_capacity(self.assignment.len() * stride);
        for &l in &self.assignment {
            out.extend(std::iter::repeat_n(l, stride));
        }
        Ok(out)
    }

    pub fn apply_point(&self, z: &PointZ) -> Result<PointZ> {
        use num_traits::ToPrimitive;
        let new_x = self.base.apply_point(&z.x)?;
        let scaled = &z.x * &Rational::from_integer(self.base.cells() as i64);
        let cell = scaled.floor_int().to_u64().expect("cell index fits u64");
        let new_y = self.fiber_at(cell).apply(&z.y)?;
        Ok(PointZ { x: new_x, y: new_y })
    }

    /// A skew product with p-adic fibers is a `SkewProduct`; errors when a
    /// fiber is not grid-aligned at the given rank.
    pub fn to_skew_product(&self, fiber_rank: u32) -> Result<SkewProduct> {
        let fibers: Vec<PAdicPermutation> = self
            .fibers
            .iter()
            .map(|f| f.to_permutation(self.p, fiber_rank))
            .collect::<Result<_>>()?;
        SkewProduct::new(self.base.clone(), self.assignment.clone(), fibers)
    }
}

/// JSON form for translation skews: fibers as explicit piece lists.
#[derive(Serialize, Deserialize)]
struct TransSkewJson {
    p: u32,
    base: SkewBaseJson,
    fibers: TransFibersJson,
}

#[derive(Serialize, Deserialize)]
struct TransFibersJson {
    assignment: Vec<usize>,
    maps: Vec<TransMapJson>,
}

#[derive(Serialize, Deserialize)]
struct TransMapJson {
    pieces: Vec<crate::pwtrans::TranslationPiece>,
}

impl Serialize for TranslationSkew {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TransSkewJson {
            p: self.p,
            base: SkewBaseJson {
                rank: self.base.rank(),
                perm: self.base.map().to_vec(),
            },
            fibers: TransFibersJson {
                assignment: self.assignment.clone(),
                maps: self
                    .fibers
                    .iter()
                    .map(|f| TransMapJson {
                        pieces: f.pieces().to_vec(),
                    })
                    .collect(),
            },
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TranslationSkew {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = TransSkewJson::deserialize(d)?;
        let base = PAdicPermutation::new(raw.p, raw.base.rank, raw.base.perm)
            .map_err(serde::de::Error::custom)?;
        let fibers: Vec<PiecewiseTranslation> = raw
            .fibers
            .maps
            .into_iter()
            .map(|m| PiecewiseTranslation::new(m.pieces))
            .collect::<Result<_>>()
            .map_err(serde::de::Error::custom)?;
        TranslationSkew::new(base, raw.fibers.assignment, fibers).map_err(serde::de::Error::custom)
    }
}
