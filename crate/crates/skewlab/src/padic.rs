//! p-adic intervals, sets, and permutations on the unit interval.
//!
//! Rank-k structure over base p splits [0,1) into p^k half-open cells
//! [j/p^k, (j+1)/p^k). A p-adic permutation of rank k moves each cell onto
//! another cell by a translation; the point map is x -> x + (pi(j) - j)/p^k
//! on cell j. Refining to a higher rank k' sends cell j to its p^(k'-k)
//! children in order and never changes the point map, so objects of
//! different ranks compare after refining to a common rank.
//!
//! Cell counts p^k are capped (default 4096 cells) so exact computations
//! stay bounded; rank-growing operations check the cap and fail loudly
//! rather than degrade.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{cells_measure, unit_cell_measure, Rational};

/// Default bound on p^k cell counts (rank 12 at p = 2).
pub const DEFAULT_MAX_CELLS: u64 = 4096;

/// Hard memory guard for any constructed object, independent of the
/// configurable cap. Constructors refuse anything above this outright.
pub(crate) const ABS_MAX_CELLS: u64 = 1 << 22;

/// Configurable resolution bound for rank-growing searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_cells: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_cells: DEFAULT_MAX_CELLS,
        }
    }
}

impl Limits {
    /// Largest rank r with p^r <= max_cells.
    pub fn max_rank(&self, p: u32) -> u32 {
        let mut rank = 0u32;
        let mut cells = 1u64;
        while cells.checked_mul(p as u64).is_some_and(|c| c <= self.max_cells) {
            cells *= p as u64;
            rank += 1;
        }
        rank
    }
}

fn validate_p(p: u32) -> Result<()> {
    if p < 2 {
        return Err(Error::invalid("base", format!("p must be at least 2, got {p}")));
    }
    Ok(())
}

/// p^rank as u64, enforcing the hard guard. Callers that grow ranks check
/// `Limits` separately via [`checked_cells`].
pub(crate) fn cell_count(p: u32, rank: u32) -> Result<u64> {
    validate_p(p)?;
    let mut n: u64 = 1;
    for _ in 0..rank {
        n = n
            .checked_mul(p as u64)
            .filter(|&n| n <= ABS_MAX_CELLS)
            .ok_or(Error::CapExceeded {
                p,
                rank,
                cells: (p as u128).pow(rank),
                max_cells: ABS_MAX_CELLS,
            })?;
    }
    Ok(n)
}

/// p^rank as u64, enforcing a configurable cap.
pub fn checked_cells(p: u32, rank: u32, limits: Limits) -> Result<u64> {
    let n = cell_count(p, rank)?;
    if n > limits.max_cells {
        return Err(Error::CapExceeded {
            p,
            rank,
            cells: n as u128,
            max_cells: limits.max_cells,
        });
    }
    Ok(n)
}

/// One half-open cell [index/p^rank, (index+1)/p^rank).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PAdicInterval {
    pub p: u32,
    pub rank: u32,
    pub index: u64,
}

impl PAdicInterval {
    pub fn new(p: u32, rank: u32, index: u64) -> Result<Self> {
        let cells = checked_cells(p, rank, Limits::default())?;
        if index >= cells {
            return Err(Error::IndexOutOfRange(index, cells));
        }
        Ok(PAdicInterval { p, rank, index })
    }

    pub fn measure(&self) -> Rational {
        unit_cell_measure(self.p, self.rank)
    }

    /// Endpoints (lo, hi) as exact rationals.
    pub fn endpoints(&self) -> (Rational, Rational) {
        let lo = cells_measure(self.index, self.p, self.rank);
        let hi = cells_measure(self.index + 1, self.p, self.rank);
        (lo, hi)
    }

    /// The children of this cell at a finer rank, in order.
    pub fn refine_to_rank(&self, rank: u32) -> Result<PAdicSet> {
        if rank < self.rank {
            return Err(Error::RankBelow {
                rank: self.rank,
                target: rank,
            });
        }
        checked_cells(self.p, rank, Limits::default())?;
        let stride = cell_count(self.p, rank - self.rank)?;
        let start = self.index * stride;
        PAdicSet::new(self.p, rank, (start..start + stride).collect())
    }

    pub fn contains(&self, x: &Rational) -> bool {
        let (lo, hi) = self.endpoints();
        *x >= lo && *x < hi
    }
}

/// A finite union of same-rank cells, stored as sorted deduplicated indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PAdicSet {
    pub p: u32,
    pub rank: u32,
    indices: Vec<u64>,
}

impl PAdicSet {
    pub fn new(p: u32, rank: u32, mut indices: Vec<u64>) -> Result<Self> {
        let cells = cell_count(p, rank)?;
        indices.sort_unstable();
        indices.dedup();
        if let Some(&last) = indices.last() {
            if last >= cells {
                return Err(Error::IndexOutOfRange(last, cells));
            }
        }
        Ok(PAdicSet { p, rank, indices })
    }

    pub fn empty(p: u32, rank: u32) -> Result<Self> {
        PAdicSet::new(p, rank, Vec::new())
    }

    pub fn full(p: u32, rank: u32) -> Result<Self> {
        let cells = cell_count(p, rank)?;
        PAdicSet::new(p, rank, (0..cells).collect())
    }

    pub fn from_interval(iv: &PAdicInterval) -> Self {
        PAdicSet {
            p: iv.p,
            rank: iv.rank,
            indices: vec![iv.index],
        }
    }

    pub fn indices(&self) -> &[u64] {
        &self.indices
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn measure(&self) -> Rational {
        cells_measure(self.indices.len() as u64, self.p, self.rank)
    }

    pub fn refine_to_rank(&self, rank: u32) -> Result<Self> {
        if rank < self.rank {
            return Err(Error::RankBelow {
                rank: self.rank,
                target: rank,
            });
        }
        checked_cells(self.p, rank, Limits::default())?;
        let stride = cell_count(self.p, rank - self.rank)?;
        let mut indices = Vec::with_capacity(self.indices.len() * stride as usize);
        for &j in &self.indices {
            indices.extend(j * stride..(j + 1) * stride);
        }
        Ok(PAdicSet {
            p: self.p,
            rank,
            indices,
        })
    }

    fn common_rank(&self, other: &Self) -> Result<(Self, Self)> {
        if self.p != other.p {
            return Err(Error::BaseMismatch {
                left: self.p,
                right: other.p,
            });
        }
        let rank = self.rank.max(other.rank);
        Ok((self.refine_to_rank(rank)?, other.refine_to_rank(rank)?))
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        let (a, b) = self.common_rank(other)?;
        let mut indices = a.indices;
        indices.extend(b.indices);
        PAdicSet::new(a.p, a.rank, indices)
    }

    pub fn intersect(&self, other: &Self) -> Result<Self> {
        let (a, b) = self.common_rank(other)?;
        let mut indices = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < a.indices.len() && j < b.indices.len() {
            match a.indices[i].cmp(&b.indices[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    indices.push(a.indices[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        Ok(PAdicSet {
            p: a.p,
            rank: a.rank,
            indices,
        })
    }

    pub fn complement(&self) -> Result<Self> {
        let cells = cell_count(self.p, self.rank)?;
        let mut indices = Vec::with_capacity(cells as usize - self.indices.len());
        let mut it = self.indices.iter().peekable();
        for c in 0..cells {
            if it.peek() == Some(&&c) {
                it.next();
            } else {
                indices.push(c);
            }
        }
        Ok(PAdicSet {
            p: self.p,
            rank: self.rank,
            indices,
        })
    }

    /// Exact measure of the symmetric difference, after refining to a
    /// common rank.
    pub fn symdiff_measure(&self, other: &Self) -> Result<Rational> {
        let (a, b) = self.common_rank(other)?;
        let inter = a.intersect(&b)?;
        let count = a.indices.len() + b.indices.len() - 2 * inter.indices.len();
        Ok(cells_measure(count as u64, a.p, a.rank))
    }
}

/// JSON form pinned for permutations: `{"p": 2, "rank": 1, "perm": [1, 0]}`.
#[derive(Serialize, Deserialize)]
struct PermJson {
    p: u32,
    rank: u32,
    perm: Vec<u64>,
}

/// Rank-k interval translation: cell j moves onto cell map[j].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PAdicPermutation {
    p: u32,
    rank: u32,
    map: Vec<u64>,
}

impl PAdicPermutation {
    pub fn new(p: u32, rank: u32, map: Vec<u64>) -> Result<Self> {
        let cells = cell_count(p, rank)?;
        if map.len() as u64 != cells {
            return Err(Error::NotBijection { rank, cells });
        }
        let mut seen = vec![false; cells as usize];
        for &t in &map {
            if t >= cells || seen[t as usize] {
                return Err(Error::NotBijection { rank, cells });
            }
            seen[t as usize] = true;
        }
        Ok(PAdicPermutation { p, rank, map })
    }

    pub fn identity(p: u32, rank: u32) -> Result<Self> {
        let cells = cell_count(p, rank)?;
        Ok(PAdicPermutation {
            p,
            rank,
            map: (0..cells).collect(),
        })
    }

    /// Cyclic shift by `shift` cells: j -> (j + shift) mod p^rank. These are
    /// exactly the rotations by shift/p^rank.
    pub fn rotation(p: u32, rank: u32, shift: u64) -> Result<Self> {
        let cells = cell_count(p, rank)?;
        let shift = shift % cells;
        Ok(PAdicPermutation {
            p,
            rank,
            map: (0..cells).map(|j| (j + shift) % cells).collect(),
        })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn map(&self) -> &[u64] {
        &self.map
    }

    pub fn cells(&self) -> u64 {
        self.map.len() as u64
    }

    pub fn image_of_index(&self, j: u64) -> u64 {
        self.map[j as usize]
    }

    /// Same point map, expressed on the rank-k' grid: cell j of rank k goes
    /// to map[j] with its children following in order.
    pub fn refine_to_rank(&self, rank: u32) -> Result<Self> {
        if rank < self.rank {
            return Err(Error::RankBelow {
                rank: self.rank,
                target: rank,
            });
        }
        if rank == self.rank {
            return Ok(self.clone());
        }
        checked_cells(self.p, rank, Limits::default())?;
        let stride = cell_count(self.p, rank - self.rank)?;
        let mut map = Vec::with_capacity(self.map.len() * stride as usize);
        for &t in &self.map {
            map.extend(t * stride..(t + 1) * stride);
        }
        Ok(PAdicPermutation {
            p: self.p,
            rank,
            map,
        })
    }

    fn common_rank(&self, other: &Self) -> Result<(Self, Self)> {
        if self.p != other.p {
            return Err(Error::BaseMismatch {
                left: self.p,
                right: other.p,
            });
        }
        let rank = self.rank.max(other.rank);
        Ok((self.refine_to_rank(rank)?, other.refine_to_rank(rank)?))
    }

    /// self after other: (self . other)(j) = self(other(j)).
    pub fn compose(&self, other: &Self) -> Result<Self> {
        let (a, b) = self.common_rank(other)?;
        let map = b.map.iter().map(|&j| a.map[j as usize]).collect();
        Ok(PAdicPermutation {
            p: a.p,
            rank: a.rank,
            map,
        })
    }

    pub fn inverse(&self) -> Self {
        let mut map = vec![0u64; self.map.len()];
        for (j, &t) in self.map.iter().enumerate() {
            map[t as usize] = j as u64;
        }
        PAdicPermutation {
            p: self.p,
            rank: self.rank,
            map,
        }
    }

    /// n-fold composition; negative n uses the inverse.
    pub fn pow(&self, n: i64) -> Self {
        if n < 0 {
            return self.inverse().pow(-n);
        }
        let mut acc = PAdicPermutation {
            p: self.p,
            rank: self.rank,
            map: (0..self.map.len() as u64).collect(),
        };
        let mut sq = self.clone();
        let mut n = n as u64;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.compose(&sq).expect("same base and rank");
            }
            sq = sq.compose(&sq).expect("same base and rank");
            n >>= 1;
        }
        acc
    }

    /// True when the point map is the identity. Canonical per rank: the
    /// identity point map fixes every cell of its own rank.
    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(j, &t)| j as u64 == t)
    }

    /// Order of the permutation (lcm of cycle lengths), as u128 to survive
    /// pathological cycle structures.
    pub fn order(&self) -> u128 {
        let n = self.map.len();
        let mut seen = vec![false; n];
        let mut order: u128 = 1;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut len: u128 = 0;
            let mut j = start;
            while !seen[j] {
                seen[j] = true;
                j = self.map[j] as usize;
                len += 1;
            }
            order = num_integer::lcm(order, len);
        }
        order
    }

    /// The forward orbit of a cell, in visiting order.
    pub fn cycle_from(&self, start: u64) -> Vec<u64> {
        let mut cycle = vec![start];
        let mut j = self.map[start as usize];
        while j != start {
            cycle.push(j);
            j = self.map[j as usize];
        }
        cycle
    }

    pub fn is_single_cycle(&self) -> bool {
        self.cycle_from(0).len() == self.map.len()
    }

    /// Image of a set, computed at the common rank.
    pub fn image_of_set(&self, set: &PAdicSet) -> Result<PAdicSet> {
        if self.p != set.p {
            return Err(Error::BaseMismatch {
                left: self.p,
                right: set.p,
            });
        }
        let rank = self.rank.max(set.rank);
        let perm = self.refine_to_rank(rank)?;
        let set = set.refine_to_rank(rank)?;
        let indices = set.indices().iter().map(|&j| perm.map[j as usize]).collect();
        PAdicSet::new(perm.p, rank, indices)
    }

    /// Point map applied to x in [0,1). Rejects rank-k grid points, where
    /// the cell assignment of the closed endpoint is ambiguous under
    /// inversion.
    pub fn apply_point(&self, x: &Rational) -> Result<Rational> {
        if x.is_negative() || *x >= Rational::one() {
            return Err(Error::invalid("point", format!("{x} is outside [0,1)")));
        }
        let scaled = x * &Rational::from_integer(self.map.len() as i64);
        if self.rank > 0 && scaled.is_integer() {
            return Err(Error::BoundaryPoint {
                value: x.to_string(),
                rank: self.rank,
            });
        }
        use num_traits::ToPrimitive;
        let j = scaled.floor_int().to_u64().expect("cell index fits u64");
        let t = self.map[j as usize];
        let shift = if t >= j {
            cells_measure(t - j, self.p, self.rank)
        } else {
            -cells_measure(j - t, self.p, self.rank)
        };
        Ok(x + &shift)
    }
}

impl Serialize for PAdicPermutation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PermJson {
            p: self.p,
            rank: self.rank,
            perm: self.map.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PAdicPermutation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = PermJson::deserialize(d)?;
        PAdicPermutation::new(raw.p, raw.rank, raw.perm).map_err(serde::de::Error::custom)
    }
}

/// The adding machine over base p with d digits: adds 1/p^d with carry, so
/// the index map increments the most significant digit and carries toward
/// the less significant ones. Single cycle of length p^d.
pub fn odometer(p: u32, d: u32) -> Result<PAdicPermutation> {
    let cells = checked_cells(p, d, Limits::default())?;
    let p64 = p as u64;
    let mut map = Vec::with_capacity(cells as usize);
    for j in 0..cells {
        // Digits of j in base p, most significant first: j = sum d_i p^(d-1-i).
        // Adding 1 at the most significant digit with carry toward less
        // significant digits mirrors x -> x + 1/p^d on the interval.
        let mut t = j;
        let mut place = if d == 0 { 0 } else { cells / p64 }; // weight of the digit being incremented
        loop {
            if place == 0 {
                break; // full wrap: j was the all-(p-1) cell, t is now 0
            }
            let digit = (t / place) % p64;
            if digit + 1 < p64 {
                t += place;
                break;
            }
            t -= digit * place; // set this digit to 0, carry onward
            place /= p64;
        }
        map.push(t);
    }
    PAdicPermutation::new(p, d, map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rat(n: i64, d: i64) -> Rational {
        Rational::new(n, d).unwrap()
    }

    fn swap2() -> PAdicPermutation {
        PAdicPermutation::new(2, 1, vec![1, 0]).unwrap()
    }

    #[test]
    fn interval_refines_to_children_in_order() {
        let iv = PAdicInterval::new(2, 1, 0).unwrap();
        let set = iv.refine_to_rank(2).unwrap();
        assert_eq!(set.indices(), &[0, 1]);
        assert_eq!(set.measure(), rat(1, 2));
    }

    #[test]
    fn interval_endpoints_and_membership() {
        let iv = PAdicInterval::new(3, 2, 4).unwrap();
        assert_eq!(iv.endpoints(), (rat(4, 9), rat(5, 9)));
        assert!(iv.contains(&rat(1, 2)));
        assert!(!iv.contains(&rat(5, 9)));
        assert_eq!(iv.measure(), rat(1, 9));
    }

    #[test]
    fn set_measures_match_hand_counts() {
        let a = PAdicSet::new(2, 2, vec![0, 1]).unwrap();
        assert_eq!(a.measure(), rat(1, 2));
        assert!(PAdicSet::empty(2, 3).unwrap().is_empty());
        assert_eq!(PAdicSet::full(2, 3).unwrap().measure(), rat(1, 1));
    }

    #[test]
    fn symdiff_examples() {
        let a = PAdicSet::new(2, 1, vec![0]).unwrap();
        assert_eq!(a.symdiff_measure(&a).unwrap(), rat(0, 1));
        let b = PAdicSet::new(2, 1, vec![1]).unwrap();
        assert_eq!(a.symdiff_measure(&b).unwrap(), rat(1, 1));
        let c = PAdicSet::new(2, 2, vec![0, 1]).unwrap();
        let d = PAdicSet::new(2, 2, vec![1, 2]).unwrap();
        assert_eq!(c.symdiff_measure(&d).unwrap(), rat(1, 2));
        // mixed ranks refine to the common grid
        let half = PAdicSet::new(2, 1, vec![0]).unwrap();
        let quarter = PAdicSet::new(2, 2, vec![0]).unwrap();
        assert_eq!(half.symdiff_measure(&quarter).unwrap(), rat(1, 4));
    }

    #[test]
    fn identity_refines_to_identity() {
        let id = PAdicPermutation::identity(2, 1).unwrap();
        let fine = id.refine_to_rank(3).unwrap();
        assert!(fine.is_identity());
        assert_eq!(fine.cells(), 8);
    }

    /// Refinement preserves the point map: checked by moving the midpoint of
    /// every child cell with both the coarse and the refined permutation.
    #[test]
    fn swap_refines_to_block_swap() {
        let refined = swap2().refine_to_rank(2).unwrap();
        assert_eq!(refined.map(), &[2, 3, 0, 1]);
        for c in 0u64..4 {
            let mid = rat(2 * c as i64 + 1, 8);
            let coarse_image = swap2().apply_point(&mid).unwrap();
            let child = (&coarse_image * &rat(4, 1)).floor_int();
            assert_eq!(u64::try_from(&child).unwrap(), refined.map()[c as usize]);
        }
    }

    #[test]
    fn compose_inverse_pow_laws() {
        let s = swap2();
        assert!(s.compose(&s.inverse()).unwrap().is_identity());
        assert!(s.pow(2).is_identity());
        assert_eq!(s.pow(-1), s.inverse());
        assert_eq!(s.pow(0).cells(), 2);
        assert!(s.pow(0).is_identity());
        let r = PAdicPermutation::rotation(2, 2, 1).unwrap();
        assert_eq!(r.pow(3), r.inverse());
        assert_eq!(r.order(), 4);
    }

    #[test]
    fn compose_normalizes_ranks() {
        // swap at rank 1 composed with a rank-2 rotation
        let r = PAdicPermutation::rotation(2, 2, 1).unwrap();
        let c = swap2().compose(&r).unwrap();
        assert_eq!(c.rank(), 2);
        let swapped = swap2().refine_to_rank(2).unwrap();
        let expected: Vec<u64> = (0..4).map(|j| swapped.map()[(j + 1) % 4]).collect();
        assert_eq!(c.map(), expected.as_slice());
    }

    #[test]
    fn odometer_small_cases() {
        assert_eq!(odometer(2, 0).unwrap().map(), &[0]);
        assert_eq!(odometer(2, 1).unwrap().map(), &[1, 0]);
        assert_eq!(odometer(2, 2).unwrap().map(), &[2, 3, 1, 0]);
        assert_eq!(odometer(3, 1).unwrap().map(), &[1, 2, 0]);
    }

    #[test]
    fn odometer_cycle_structure() {
        let o = odometer(2, 3).unwrap();
        assert!(o.is_single_cycle());
        assert_eq!(o.cycle_from(0), vec![0, 4, 2, 6, 1, 5, 3, 7]);
        assert_eq!(o.order(), 8);
        assert!(odometer(3, 2).unwrap().is_single_cycle());
        assert!(odometer(5, 3).unwrap().is_single_cycle());
    }

    /// The adding machine is +1 on digit sequences: reading cell indices
    /// with reversed base-p digits turns it into j -> j + 1 mod p^d.
    #[test]
    fn odometer_is_reversed_successor() {
        fn rev(mut j: u64, p: u64, d: u32) -> u64 {
            let mut out = 0;
            for _ in 0..d {
                out = out * p + j % p;
                j /= p;
            }
            out
        }
        for (p, d) in [(2u32, 3u32), (3, 2), (5, 2)] {
            let o = odometer(p, d).unwrap();
            let cells = cell_count(p, d).unwrap();
            for j in 0..cells {
                let expected = rev((rev(j, p as u64, d) + 1) % cells, p as u64, d);
                assert_eq!(o.image_of_index(j), expected);
            }
        }
    }

    #[test]
    fn odometer_above_cap_errors() {
        let err = odometer(2, 13).unwrap_err();
        assert!(matches!(err, Error::CapExceeded { .. }));
    }

    #[test]
    fn apply_point_rejects_boundaries() {
        let s = swap2();
        assert_eq!(s.apply_point(&rat(1, 3)).unwrap(), rat(5, 6));
        assert!(matches!(
            s.apply_point(&rat(1, 2)),
            Err(Error::BoundaryPoint { .. })
        ));
        assert!(matches!(
            s.apply_point(&rat(0, 1)),
            Err(Error::BoundaryPoint { .. })
        ));
        // rank 0 has no interior grid points
        let id0 = PAdicPermutation::identity(2, 0).unwrap();
        assert_eq!(id0.apply_point(&rat(1, 3)).unwrap(), rat(1, 3));
    }

    #[test]
    fn bad_constructions_are_rejected() {
        assert!(matches!(
            PAdicPermutation::new(2, 1, vec![0, 0]),
            Err(Error::NotBijection { .. })
        ));
        assert!(matches!(
            PAdicPermutation::new(2, 1, vec![1]),
            Err(Error::NotBijection { .. })
        ));
        assert!(PAdicSet::new(2, 1, vec![2]).is_err());
        assert!(PAdicInterval::new(2, 1, 2).is_err());
        assert!(PAdicPermutation::identity(1, 1).is_err());
    }

    #[test]
    fn perm_json_round_trip_is_exact() {
        let o = odometer(2, 2).unwrap();
        let js = serde_json::to_string(&o).unwrap();
        assert_eq!(js, r#"{"p":2,"rank":2,"perm":[2,3,1,0]}"#);
        let back: PAdicPermutation = serde_json::from_str(&js).unwrap();
        assert_eq!(back, o);
        assert!(serde_json::from_str::<PAdicPermutation>(r#"{"p":2,"rank":1,"perm":[0,0]}"#).is_err());
    }

    fn arb_perm(p: u32, max_rank: u32) -> impl Strategy<Value = PAdicPermutation> {
        (0..=max_rank, any::<u64>()).prop_map(move |(rank, seed)| {
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
        /// Permutations preserve measure: |image of set| = |set|.
        #[test]
        fn image_preserves_measure(perm in arb_perm(2, 3), raw in proptest::collection::vec(0u64..8, 0..8)) {
            let set = PAdicSet::new(2, 3, raw).unwrap();
            let image = perm.image_of_set(&set).unwrap();
            prop_assert_eq!(image.measure(), set.measure());
        }

        /// Refinement commutes with taking images.
        #[test]
        fn refine_commutes_with_image(perm in arb_perm(2, 2), raw in proptest::collection::vec(0u64..4, 0..4)) {
            let set = PAdicSet::new(2, 2, raw).unwrap();
            let coarse = perm.image_of_set(&set).unwrap().refine_to_rank(4).unwrap();
            let fine = perm.refine_to_rank(4).unwrap().image_of_set(&set.refine_to_rank(4).unwrap()).unwrap();
            prop_assert_eq!(coarse, fine);
        }

        /// Composition against the point map on cell midpoints.
        #[test]
        fn compose_matches_point_maps(a in arb_perm(2, 2), b in arb_perm(2, 2)) {
            let c = a.compose(&b).unwrap();
            let cells = c.cells();
            for j in 0..cells {
                let mid = Rational::new(2 * j as i64 + 1, 2 * cells as i64).unwrap();
                let two_step = a.apply_point(&b.apply_point(&mid).unwrap()).unwrap();
                prop_assert_eq!(c.apply_point(&mid).unwrap(), two_step);
            }
        }

        /// symdiff is a metric-like quantity: symmetric, zero iff equal sets.
        #[test]
        fn symdiff_symmetry(raw_a in proptest::collection::vec(0u64..8, 0..8), raw_b in proptest::collection::vec(0u64..8, 0..8)) {
            let a = PAdicSet::new(2, 3, raw_a).unwrap();
            let b = PAdicSet::new(2, 3, raw_b).unwrap();
            prop_assert_eq!(a.symdiff_measure(&b).unwrap(), b.symdiff_measure(&a).unwrap());
            let zero = a.symdiff_measure(&b).unwrap().is_zero();
            prop_assert_eq!(zero, a == b);
        }
    }
}
