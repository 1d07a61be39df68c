//! Finite product spaces `X = X_r × … × X_1` and their index arithmetic.
//!
//! Coordinates are written deepest level first, `(x_r, …, x_1)`. In the flat
//! index `x_1` is the slowest-varying digit and `x_r` the fastest, so every
//! node `(x_ℓ, …, x_1)` of the cluster tree owns a contiguous block of leaves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct ProductSpace {
    level_sizes: Vec<usize>,
    total_size: usize,
}

impl ProductSpace {
    /// `level_sizes` is `(|X_r|, …, |X_1|)`.
    pub fn new(level_sizes: Vec<usize>) -> Result<Self> {
        if level_sizes.is_empty() {
            return Err(Error::invalid("level_sizes", "at least one level is required"));
        }
        if let Some(pos) = level_sizes.iter().position(|&s| s == 0) {
            return Err(Error::invalid(
                "level_sizes",
                format!("entry {pos} is zero; every level needs at least one state"),
            ));
        }
        let total_size = level_sizes
            .iter()
            .try_fold(1usize, |acc, &s| acc.checked_mul(s))
            .ok_or_else(|| Error::invalid("level_sizes", "total size overflows usize"))?;
        Ok(Self {
            level_sizes,
            total_size,
        })
    }

    pub fn depth(&self) -> usize {
        self.level_sizes.len()
    }

    pub fn total_size(&self) -> usize {
        self.total_size
    }

    /// Sizes in storage order `(|X_r|, …, |X_1|)`.
    pub fn level_sizes(&self) -> &[usize] {
        &self.level_sizes
    }

    /// `|X_ℓ|` for `1 ≤ ℓ ≤ r`.
    pub fn level_size(&self, level: usize) -> usize {
        debug_assert!(level >= 1 && level <= self.depth());
        self.level_sizes[self.depth() - level]
    }

    /// Number of nodes `(x_ℓ, …, x_1)` at tree depth `ℓ`; one root at `ℓ = 0`.
    pub fn nodes_at(&self, level: usize) -> usize {
        (1..=level).map(|l| self.level_size(l)).product()
    }

    /// Number of leaves below a single node at depth `ℓ`.
    pub fn leaves_below(&self, level: usize) -> usize {
        (level + 1..=self.depth()).map(|l| self.level_size(l)).product()
    }

    /// Index of the depth-`ℓ` ancestor of a leaf.
    pub fn ancestor(&self, flat: usize, level: usize) -> usize {
        flat / self.leaves_below(level)
    }

    /// Coordinate `x_ℓ` of a leaf.
    pub fn coordinate(&self, flat: usize, level: usize) -> usize {
        self.ancestor(flat, level) % self.level_size(level)
    }

    pub fn check_level(&self, level: usize) -> Result<()> {
        if level == 0 || level > self.depth() {
            Err(Error::LevelOutOfRange {
                level,
                depth: self.depth(),
            })
        } else {
            Ok(())
        }
    }

    /// Flat index of `(x_r, …, x_1)`.
    pub fn encode(&self, coords: &[usize]) -> Result<usize> {
        if coords.len() != self.depth() {
            return Err(Error::DepthMismatch {
                expected: self.depth(),
                got: coords.len(),
            });
        }
        // coords[0] is x_r; walk from x_1 (slowest) to x_r (fastest).
        let mut flat = 0usize;
        for (c, &size) in coords.iter().zip(&self.level_sizes).rev() {
            if *c >= size {
                return Err(Error::invalid(
                    "coords",
                    format!("coordinate {c} out of range for level of size {size}"),
                ));
            }
            flat = flat * size + c;
        }
        Ok(flat)
    }

    /// Coordinates `(x_r, …, x_1)` of a flat index.
    pub fn decode(&self, flat: usize) -> Result<Vec<usize>> {
        if flat >= self.total_size {
            return Err(Error::invalid(
                "flat",
                format!("index {flat} out of range for space of size {}", self.total_size),
            ));
        }
        let mut rest = flat;
        let mut coords = vec![0; self.depth()];
        for (slot, &size) in coords.iter_mut().zip(&self.level_sizes) {
            *slot = rest % size;
            rest /= size;
        }
        Ok(coords)
    }
}

impl TryFrom<Vec<usize>> for ProductSpace {
    type Error = Error;

    fn try_from(value: Vec<usize>) -> Result<Self> {
        ProductSpace::new(value)
    }
}

impl From<ProductSpace> for Vec<usize> {
    fn from(value: ProductSpace) -> Self {
        value.level_sizes
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_empty_and_zero_levels() {
        assert!(ProductSpace::new(vec![]).is_err());
        assert!(ProductSpace::new(vec![2, 0, 3]).is_err());
    }

    #[test]
    fn x1_is_slowest_digit() {
        let space = ProductSpace::new(vec![3, 2]).unwrap();
        assert_eq!(space.total_size(), 6);
        assert_eq!(space.encode(&[0, 1]).unwrap(), 3);
        assert_eq!(space.encode(&[2, 0]).unwrap(), 2);
        assert_eq!(space.coordinate(4, 1), 1);
        assert_eq!(space.coordinate(4, 2), 1);
        assert_eq!(space.nodes_at(0), 1);
        assert_eq!(space.nodes_at(1), 2);
        assert_eq!(space.nodes_at(2), 6);
        assert_eq!(space.leaves_below(1), 3);
    }

    proptest! {
        #[test]
        fn encode_decode_round_trip(sizes in prop::collection::vec(1usize..6, 1..5), seed in any::<usize>()) {
            let space = ProductSpace::new(sizes).unwrap();
            let flat = seed % space.total_size();
            let coords = space.decode(flat).unwrap();
            prop_assert_eq!(space.encode(&coords).unwrap(), flat);
            for level in 1..=space.depth() {
                prop_assert_eq!(coords[space.depth() - level], space.coordinate(flat, level));
            }
        }
    }
}
