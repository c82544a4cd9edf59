//! Rational step functions, constant on p-adic cells.
//!
//! `StepFunctionX` lives on the interval: one value per rank-k cell.
//! `StepFunctionZ` lives on the square: one value per rank-k cell pair
//! (i, j), stored as a row of fiber values for each base cell. All norms
//! and integrals are exact rationals; the squared L2 norm is used
//! throughout so no square roots appear.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::padic::{cell_count, checked_cells, Limits, PAdicPermutation, PAdicSet};
use crate::rational::{unit_cell_measure, Rational};

/// Step function on [0,1): `values[j]` on cell [j/p^k, (j+1)/p^k).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepFunctionX {
    p: u32,
    rank: u32,
    values: Vec<Rational>,
}

/// Step function on the square: `values[i][j]` on the cell with base index
/// i and fiber index j, both of rank k.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepFunctionZ {
    p: u32,
    rank: u32,
    values: Vec<Vec<Rational>>,
}

impl StepFunctionX {
    pub fn new(p: u32, rank: u32, values: Vec<Rational>) -> Result<Self> {
        let cells = cell_count(p, rank)?;
        if values.len() as u64 != cells {
            return Err(Error::invalid(
                "step function",
                format!("expected {cells} values at rank {rank}, got {}", values.len()),
            ));
        }
        Ok(StepFunctionX { p, rank, values })
    }

    pub fn constant(p: u32, rank: u32, value: Rational) -> Result<Self> {
        let cells = cell_count(p, rank)?;
        Ok(StepFunctionX {
            p,
            rank,
            values: vec![value; cells as usize],
        })
    }

    pub fn indicator(set: &PAdicSet) -> Result<Self> {
        let mut f = StepFunctionX::constant(set.p, set.rank, Rational::zero())?;
        for &j in set.indices() {
            f.values[j as usize] = Rational::one();
        }
        Ok(f)
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn refine_to_rank(&self, rank: u32) -> Result<Self> {
        if rank < self.rank {
            return Err(Error::RankBelow {
                rank: self.rank,
                target: rank,
            });
        }
        checked_cells(self.p, rank, Limits::default())?;
        let stride = cell_count(self.p, rank - self.rank)? as usize;
        let mut values = Vec::with_capacity(self.values.len() * stride);
        for v in &self.values {
            values.extend(std::iter::repeat_n(v.clone(), stride));
        }
        Ok(StepFunctionX {
            p: self.p,
            rank,
            values,
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

    pub fn product(&self, other: &Self) -> Result<Self> {
        let (mut a, b) = self.common_rank(other)?;
        for (x, y) in a.values.iter_mut().zip(&b.values) {
            *x = &*x * y;
        }
        Ok(a)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let (mut a, b) = self.common_rank(other)?;
        for (x, y) in a.values.iter_mut().zip(&b.values) {
            *x -= y;
        }
        Ok(a)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let (mut a, b) = self.common_rank(other)?;
        for (x, y) in a.values.iter_mut().zip(&b.values) {
            *x += y;
        }
        Ok(a)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        StepFunctionX {
            p: self.p,
            rank: self.rank,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn integral(&self) -> Rational {
        let cell = unit_cell_measure(self.p, self.rank);
        let mut sum = Rational::zero();
        for v in &self.values {
            sum += v;
        }
        &sum * &cell
    }

    pub fn l2_norm_sq(&self) -> Rational {
        let cell = unit_cell_measure(self.p, self.rank);
        let mut sum = Rational::zero();
        for v in &self.values {
            let sq = v.square();
            sum += &sq;
        }
        &sum * &cell
    }

    pub fn l1_norm(&self) -> Rational {
        let cell = unit_cell_measure(self.p, self.rank);
        let mut sum = Rational::zero();
        for v in &self.values {
            let a = v.abs();
            sum += &a;
        }
        &sum * &cell
    }

    pub fn sup_norm(&self) -> Rational {
        self.values
            .iter()
            .map(|v| v.abs())
            .max()
            .unwrap_or_else(Rational::zero)
    }

    /// Pullback under the inverse point map: (pi u)(x) = u(pi^-1 x), so the
    /// indicator of a set goes to the indicator of its image.
    pub fn base_pullback(&self, perm: &PAdicPermutation) -> Result<Self> {
        if self.p != perm.p() {
            return Err(Error::BaseMismatch {
                left: self.p,
                right: perm.p(),
            });
        }
        let rank = self.rank.max(perm.rank());
        let f = self.refine_to_rank(rank)?;
        let perm = perm.refine_to_rank(rank)?;
        let mut values = vec![Rational::zero(); f.values.len()];
        for (j, v) in f.values.into_iter().enumerate() {
            values[perm.image_of_index(j as u64) as usize] = v;
        }
        Ok(StepFunctionX {
            p: self.p,
            rank,
            values,
        })
    }

    /// Equality as functions, after refining to a common rank.
    pub fn equiv(&self, other: &Self) -> Result<bool> {
        let (a, b) = self.common_rank(other)?;
        Ok(a.values == b.values)
    }

    pub fn value_at(&self, x: &Rational) -> Result<&Rational> {
        use num_traits::ToPrimitive;
        if x.is_negative() || *x >= Rational::one() {
            return Err(Error::invalid("point", format!("{x} is outside [0,1)")));
        }
        let scaled = x * &Rational::from_integer(self.values.len() as i64);
        let j = scaled.floor_int().to_u64().expect("index fits u64");
        Ok(&self.values[j as usize])
    }
}

/// JSON forms pinned for step functions: values as `num/den` strings.
#[derive(Serialize, Deserialize)]
struct StepXJson {
    p: u32,
    rank: u32,
    values: Vec<Rational>,
}

#[derive(Serialize, Deserialize)]
struct StepZJson {
    p: u32,
    rank: u32,
    values: Vec<Vec<Rational>>,
}

impl Serialize for StepFunctionX {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        StepXJson {
            p: self.p,
            rank: self.rank,
            values: self.values.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for StepFunctionX {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = StepXJson::deserialize(d)?;
        StepFunctionX::new(raw.p, raw.rank, raw.values).map_err(serde::de::Error::custom)
    }
}

impl Serialize for StepFunctionZ {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        StepZJson {
            p: self.p,
            rank: self.rank,
            values: self.values.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for StepFunctionZ {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = StepZJson::deserialize(d)?;
        StepFunctionZ::new(raw.p, raw.rank, raw.values).map_err(serde::de::Error::custom)
    }
}

impl StepFunctionZ {
    pub fn new(p: u32, rank: u32, values: Vec<Vec<Rational>>) -> Result<Self> {
        let cells = cell_count(p, rank)?;
        if values.len() as u64 != cells || values.iter().any(|row| row.len() as u64 != cells) {
            return Err(Error::invalid(
                "step function",
                format!("expected a {cells} x {cells} value grid at rank {rank}"),
            ));
        }
        Ok(StepFunctionZ { p, rank, values })
    }

    pub fn constant(p: u32, rank: u32, value: Rational) -> Result<Self> {
        let cells = cell_count(p, rank)? as usize;
        Ok(StepFunctionZ {
            p,
            rank,
            values: vec![vec![value; cells]; cells],
        })
    }

    /// Indicator of (union of base cells) x (union of fiber cells).
    pub fn rect_indicator(base: &PAdicSet, fiber: &PAdicSet) -> Result<Self> {
        if base.p != fiber.p {
            return Err(Error::BaseMismatch {
                left: base.p,
                right: fiber.p,
            });
        }
        let rank = base.rank.max(fiber.rank);
        let base = base.refine_to_rank(rank)?;
        let fiber = fiber.refine_to_rank(rank)?;
        let mut f = StepFunctionZ::constant(base.p, rank, Rational::zero())?;
        for &i in base.indices() {
            for &j in fiber.indices() {
                f.values[i as usize][j as usize] = Rational::one();
            }
        }
        Ok(f)
    }

    /// The canonical test set: X x [0, 1/2) over p = 2 grids, or more
    /// generally the lower half of each fiber at the stated rank.
    pub fn half_fiber_indicator(p: u32, rank: u32) -> Result<Self> {
        let cells = cell_count(p, rank)?;
        let mut f = StepFunctionZ::constant(p, rank, Rational::zero())?;
        let half = Rational::new(1, 2)?;
        for row in f.values.iter_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                let lo = Rational::new(j as i64, cells as i64)?;
                let hi = Rational::new(j as i64 + 1, cells as i64)?;
                if hi <= half {
                    *v = Rational::one();
                } else if lo < half {
                    return Err(Error::domain(format!(
                        "rank {rank} over base {p} does not resolve the half fiber"
                    )));
                }
            }
        }
        Ok(f)
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn values(&self) -> &[Vec<Rational>] {
        &self.values
    }

    pub fn refine_to_rank(&self, rank: u32) -> Result<Self> {
        if rank < self.rank {
            return Err(Error::RankBelow {
                rank: self.rank,
                target: rank,
            });
        }
        checked_cells(self.p, rank, Limits::default())?;
        let stride = cell_count(self.p, rank - self.rank)? as usize;
        let cells = self.values.len() * stride;
        let mut values = Vec::with_capacity(cells);
        for row in &self.values {
            let mut fine_row = Vec::with_capacity(cells);
            for v in row {
                fine_row.extend(std::iter::repeat_n(v.clone(), stride));
            }
            values.extend(std::iter::repeat_n(fine_row, stride));
        }
        Ok(StepFunctionZ {
            p: self.p,
            rank,
            values,
        })
    }

    pub(crate) fn common_rank(&self, other: &Self) -> Result<(Self, Self)> {
        if self.p != other.p {
            return Err(Error::BaseMismatch {
                left: self.p,
                right: other.p,
            });
        }
        let rank = self.rank.max(other.rank);
        Ok((self.refine_to_rank(rank)?, other.refine_to_rank(rank)?))
    }

    pub fn product(&self, other: &Self) -> Result<Self> {
        let (mut a, b) = self.common_rank(other)?;
        for (ra, rb) in a.values.iter_mut().zip(&b.values) {
            for (x, y) in ra.iter_mut().zip(rb) {
                *x = &*x * y;
            }
        }
        Ok(a)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let (mut a, b) = self.common_rank(other)?;
        for (ra, rb) in a.values.iter_mut().zip(&b.values) {
            for (x, y) in ra.iter_mut().zip(rb) {
                *x -= y;
            }
        }
        Ok(a)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let (mut a, b) = self.common_rank(other)?;
        for (ra, rb) in a.values.iter_mut().zip(&b.values) {
            for (x, y) in ra.iter_mut().zip(rb) {
                *x += y;
            }
        }
        Ok(a)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        StepFunctionZ {
            p: self.p,
            rank: self.rank,
            values: self
                .values
                .iter()
                .map(|row| row.iter().map(|v| v * c).collect())
                .collect(),
        }
    }

    /// Lift of an interval function: constant along fibers.
    pub fn from_base(f: &StepFunctionX) -> Self {
        let cells = f.values.len();
        StepFunctionZ {
            p: f.p,
            rank: f.rank,
            values: f
                .values
                .iter()
                .map(|v| vec![v.clone(); cells])
                .collect(),
        }
    }

    pub fn integral(&self) -> Rational {
        let cell = unit_cell_measure(self.p, 2 * self.rank);
        let mut sum = Rational::zero();
        for row in &self.values {
            for v in row {
                sum += v;
            }
        }
        &sum * &cell
    }

    pub fn l2_norm_sq(&self) -> Rational {
        let cell = unit_cell_measure(self.p, 2 * self.rank);
        let mut sum = Rational::zero();
        for row in &self.values {
            for v in row {
                let sq = v.square();
                sum += &sq;
            }
        }
        &sum * &cell
    }

    pub fn l1_norm(&self) -> Rational {
        let cell = unit_cell_measure(self.p, 2 * self.rank);
        let mut sum = Rational::zero();
        for row in &self.values {
            for v in row {
                let a = v.abs();
                sum += &a;
            }
        }
        &sum * &cell
    }

    pub fn sup_norm(&self) -> Rational {
        self.values
            .iter()
            .flat_map(|row| row.iter().map(|v| v.abs()))
            .max()
            .unwrap_or_else(Rational::zero)
    }

    /// True when every value is 0 or 1.
    pub fn is_indicator(&self) -> bool {
        self.values
            .iter()
            .all(|row| row.iter().all(|v| v.is_zero() || *v == Rational::one()))
    }

    /// Equality as functions, after refining to a common rank.
    pub fn equiv(&self, other: &Self) -> Result<bool> {
        let (a, b) = self.common_rank(other)?;
        Ok(a.values == b.values)
    }

    pub fn value_at(&self, x: &Rational, y: &Rational) -> Result<&Rational> {
        use num_traits::ToPrimitive;
        for t in [x, y] {
            if t.is_negative() || *t >= Rational::one() {
                return Err(Error::invalid("point", format!("{t} is outside [0,1)")));
            }
        }
        let cells = Rational::from_integer(self.values.len() as i64);
        let i = (x * &cells).floor_int().to_u64().expect("index fits u64");
        let j = (y * &cells).floor_int().to_u64().expect("index fits u64");
        Ok(&self.values[i as usize][j as usize])
    }

    pub(crate) fn values_mut(&mut self) -> &mut Vec<Vec<Rational>> {
        &mut self.values
    }
}
