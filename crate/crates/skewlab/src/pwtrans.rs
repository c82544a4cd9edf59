//! Piecewise translations of [0,1) with rational breakpoints.
//!
//! These are the invertible measure-preserving maps that translate each of
//! finitely many half-open pieces; rotations and p-adic permutations are
//! the two special cases used everywhere else. `IntervalUnion` provides the
//! exact set algebra (measures of intersections and symmetric differences)
//! needed to compare images of cells under maps that do not share a grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::padic::{cell_count, checked_cells, Limits, PAdicInterval, PAdicPermutation};
use crate::rational::Rational;

/// Finite union of half-open intervals in [0,1), kept sorted and merged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalUnion {
    spans: Vec<(Rational, Rational)>,
}

impl IntervalUnion {
    pub fn empty() -> Self {
        IntervalUnion { spans: Vec::new() }
    }

    /// Builds from arbitrary [lo, hi) spans; empty spans are dropped and
    /// overlapping or touching spans are merged.
    pub fn from_spans(mut spans: Vec<(Rational, Rational)>) -> Self {
        spans.retain(|(lo, hi)| lo < hi);
        spans.sort();
        let mut merged: Vec<(Rational, Rational)> = Vec::with_capacity(spans.len());
        for (lo, hi) in spans {
            match merged.last_mut() {
                Some((_, last_hi)) if lo <= *last_hi => {
                    if hi > *last_hi {
                        *last_hi = hi;
                    }
                }
                _ => merged.push((lo, hi)),
            }
        }
        IntervalUnion { spans: merged }
    }

    pub fn spans(&self) -> &[(Rational, Rational)] {
        &self.spans
    }

    pub fn measure(&self) -> Rational {
        let mut sum = Rational::zero();
        for (lo, hi) in &self.spans {
            let len = hi - lo;
            sum += &len;
        }
        sum
    }

    pub fn intersection_measure(&self, other: &Self) -> Rational {
        let mut sum = Rational::zero();
        let (mut i, mut j) = (0, 0);
        while i < self.spans.len() && j < other.spans.len() {
            let (alo, ahi) = &self.spans[i];
            let (blo, bhi) = &other.spans[j];
            let lo = if alo > blo { alo } else { blo };
            let hi = if ahi < bhi { ahi } else { bhi };
            if lo < hi {
                let len = hi - lo;
                sum += &len;
            }
            if ahi <= bhi {
                i += 1;
            } else {
                j += 1;
            }
        }
        sum
    }

    pub fn symdiff_measure(&self, other: &Self) -> Rational {
        let inter = self.intersection_measure(other);
        &(&self.measure() + &other.measure()) - &(&inter + &inter)
    }
}

/// One piece [start, end) translated by `shift`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationPiece {
    pub start: Rational,
    pub end: Rational,
    pub shift: Rational,
}

/// Invertible piecewise translation of [0,1): the pieces tile [0,1) and so
/// do their images. Pieces are kept sorted by start.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiecewiseTranslation {
    pieces: Vec<TranslationPiece>,
}

impl PiecewiseTranslation {
    pub fn new(mut pieces: Vec<TranslationPiece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::invalid("piecewise translation", "no pieces"));
        }
        pieces.sort_by(|a, b| a.start.cmp(&b.start));
        let mut cursor = Rational::zero();
        for piece in &pieces {
            if piece.start != cursor {
                return Err(Error::invalid(
                    "piecewise translation",
                    format!("pieces do not tile [0,1): gap or overlap at {cursor}"),
                ));
            }
            if piece.end <= piece.start {
                return Err(Error::invalid(
                    "piecewise translation",
                    format!("empty piece at {}", piece.start),
                ));
            }
            cursor = piece.end.clone();
        }
        if cursor != Rational::one() {
            return Err(Error::invalid(
                "piecewise translation",
                format!("pieces stop at {cursor}, not 1"),
            ));
        }
        // Image spans must tile [0,1) as well; that makes the map an
        // invertible measure-preserving transformation.
        let mut images: Vec<(Rational, Rational)> = pieces
            .iter()
            .map(|piece| (&piece.start + &piece.shift, &piece.end + &piece.shift))
            .collect();
        images.sort();
        let mut cursor = Rational::zero();
        for (lo, hi) in &images {
            if *lo != cursor {
                return Err(Error::invalid(
                    "piecewise translation",
                    format!("images do not tile [0,1): gap or overlap at {cursor}"),
                ));
            }
            cursor = hi.clone();
        }
        if cursor != Rational::one() {
            return Err(Error::invalid(
                "piecewise translation",
                format!("images stop at {cursor}, not 1"),
            ));
        }
        Ok(PiecewiseTranslation { pieces })
    }

    pub fn identity() -> Self {
        PiecewiseTranslation {
            pieces: vec![TranslationPiece {
                start: Rational::zero(),
                end: Rational::one(),
                shift: Rational::zero(),
            }],
        }
    }

    /// Rotation x -> x + alpha mod 1 for alpha in [0,1).
    pub fn rotation(alpha: &Rational) -> Result<Self> {
        if alpha.is_negative() || *alpha >= Rational::one() {
            return Err(Error::invalid("rotation", format!("{alpha} is outside [0,1)")));
        }
        if alpha.is_zero() {
            return Ok(PiecewiseTranslation::identity());
        }
        let split = &Rational::one() - alpha;
        PiecewiseTranslation::new(vec![
            TranslationPiece {
                start: Rational::zero(),
                end: split.clone(),
                shift: alpha.clone(),
            },
            TranslationPiece {
                start: split,
                end: Rational::one(),
                shift: alpha - &Rational::one(),
            },
        ])
    }

    /// The same point map as a rank-k interval translation, merging
    /// adjacent cells that share a shift.
    pub fn from_permutation(perm: &PAdicPermutation) -> Self {
        let cells = perm.cells();
        let mut pieces: Vec<TranslationPiece> = Vec::new();
        for j in 0..cells {
            let t = perm.image_of_index(j);
            let start = Rational::new(j as i64, cells as i64).expect("cells > 0");
            let end = Rational::new(j as i64 + 1, cells as i64).expect("cells > 0");
            let shift = if t >= j {
                Rational::new((t - j) as i64, cells as i64).expect("cells > 0")
            } else {
                -Rational::new((j - t) as i64, cells as i64).expect("cells > 0")
            };
            match pieces.last_mut() {
                Some(last) if last.shift == shift && last.end == start => {
                    last.end = end;
                }
                _ => pieces.push(TranslationPiece { start, end, shift }),
            }
        }
        PiecewiseTranslation { pieces }
    }

    pub fn pieces(&self) -> &[TranslationPiece] {
        &self.pieces
    }

    pub fn apply(&self, x: &Rational) -> Result<Rational> {
        if x.is_negative() || *x >= Rational::one() {
            return Err(Error::invalid("point", format!("{x} is outside [0,1)")));
        }
        for piece in &self.pieces {
            if *x >= piece.start && *x < piece.end {
                return Ok(x + &piece.shift);
            }
        }
        unreachable!("pieces tile [0,1)")
    }

    /// Exact image of [lo, hi) as an interval union.
    pub fn image_of_span(&self, lo: &Rational, hi: &Rational) -> IntervalUnion {
        let mut spans = Vec::new();
        for piece in &self.pieces {
            let s = if lo > &piece.start { lo } else { &piece.start };
            let e = if hi < &piece.end { hi } else { &piece.end };
            if s < e {
                spans.push((s + &piece.shift, e + &piece.shift));
            }
        }
        IntervalUnion::from_spans(spans)
    }

    pub fn image_of_cell(&self, cell: &PAdicInterval) -> IntervalUnion {
        let (lo, hi) = cell.endpoints();
        self.image_of_span(&lo, &hi)
    }

    /// Smallest rank M at which every breakpoint and shift sits on the
    /// p-adic grid, or None when no rank under the cap works.
    pub fn padic_exact_rank(&self, p: u32, limits: Limits) -> Option<u32> {
        let max_rank = limits.max_rank(p);
        'rank: for m in 0..=max_rank {
            let cells = cell_count(p, m).ok()?;
            let scale = Rational::from_integer(cells as i64);
            for piece in &self.pieces {
                for v in [&piece.start, &piece.shift] {
                    if !(v * &scale).is_integer() {
                        continue 'rank;
                    }
                }
            }
            return Some(m);
        }
        None
    }

    /// Rewrites the map as a rank-m interval translation. Requires every
    /// breakpoint and shift on the rank-m grid.
    pub fn to_permutation(&self, p: u32, rank: u32) -> Result<PAdicPermutation> {
        use num_traits::ToPrimitive;
        let cells = checked_cells(p, rank, Limits::default())?;
        let scale = Rational::from_integer(cells as i64);
        let mut map = vec![0u64; cells as usize];
        for piece in &self.pieces {
            let start = &piece.start * &scale;
            let end = &piece.end * &scale;
            let shift = &piece.shift * &scale;
            if !start.is_integer() || !end.is_integer() || !shift.is_integer() {
                return Err(Error::domain(format!(
                    "map is not constant on the rank-{rank} grid over base {p}"
                )));
            }
            let start = start.floor_int().to_i64().expect("fits i64");
            let end = end.floor_int().to_i64().expect("fits i64");
            let shift = shift.floor_int().to_i64().expect("fits i64");
            for j in start..end {
                map[j as usize] = (j + shift) as u64;
            }
        }
        PAdicPermutation::new(p, rank, map)
    }
}
