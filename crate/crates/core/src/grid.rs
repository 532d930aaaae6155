//! Toroidal grid topology.
//!
//! Cells are addressed row-major: `index = row * width + col`. Rows grow
//! southwards and columns eastwards; every axis wraps around.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridShape {
    width: usize,
    height: usize,
}

/// Row-major position of a cell on a [`GridShape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellIndex(pub usize);

impl From<CellIndex> for usize {
    fn from(c: CellIndex) -> usize {
        c.0
    }
}

/// Radius-1 Von Neumann neighborhood of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Neighborhood {
    pub center: CellIndex,
    pub north: CellIndex,
    pub south: CellIndex,
    pub east: CellIndex,
    pub west: CellIndex,
}

impl Neighborhood {
    /// Cells in the fixed order center, north, south, east, west.
    pub fn cells(&self) -> [CellIndex; 5] {
        [self.center, self.north, self.south, self.east, self.west]
    }

    pub fn contains(&self, c: CellIndex) -> bool {
        self.cells().contains(&c)
    }
}

impl GridShape {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width < 3 || height < 3 {
            return Err(Error::InvalidShape { width, height });
        }
        Ok(Self { width, height })
    }

    pub fn square(side: usize) -> Result<Self> {
        Self::new(side, side)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Population size λ.
    pub fn size(&self) -> usize {
        self.width * self.height
    }

    pub fn check(&self, c: CellIndex) -> Result<()> {
        if c.0 < self.size() {
            Ok(())
        } else {
            Err(Error::CellOutOfRange {
                index: c.0,
                size: self.size(),
            })
        }
    }

    pub fn index(&self, row: usize, col: usize) -> Result<CellIndex> {
        if row >= self.height || col >= self.width {
            return Err(Error::Domain(format!(
                "coordinate ({row}, {col}) outside {}x{} grid",
                self.width, self.height
            )));
        }
        Ok(CellIndex(row * self.width + col))
    }

    /// `(row, col)` of a cell.
    pub fn coords(&self, c: CellIndex) -> Result<(usize, usize)> {
        self.check(c)?;
        Ok((c.0 / self.width, c.0 % self.width))
    }

    pub fn neighborhood(&self, c: CellIndex) -> Result<Neighborhood> {
        self.check(c)?;
        Ok(self.neighborhood_unchecked(c))
    }

    /// Same as [`GridShape::neighborhood`] for an index already known to be valid.
    pub(crate) fn neighborhood_unchecked(&self, c: CellIndex) -> Neighborhood {
        let (w, h) = (self.width, self.height);
        let (row, col) = (c.0 / w, c.0 % w);
        let up = if row == 0 { h - 1 } else { row - 1 };
        let down = if row + 1 == h { 0 } else { row + 1 };
        let left = if col == 0 { w - 1 } else { col - 1 };
        let right = if col + 1 == w { 0 } else { col + 1 };
        Neighborhood {
            center: c,
            north: CellIndex(up * w + col),
            south: CellIndex(down * w + col),
            east: CellIndex(row * w + right),
            west: CellIndex(row * w + left),
        }
    }

    /// Shortest wrap-around offsets `(rows, cols)` between two cells.
    pub fn torus_offsets(&self, a: CellIndex, b: CellIndex) -> Result<(usize, usize)> {
        let (ra, ca) = self.coords(a)?;
        let (rb, cb) = self.coords(b)?;
        let dr = ra.abs_diff(rb);
        let dc = ca.abs_diff(cb);
        Ok((dr.min(self.height - dr), dc.min(self.width - dc)))
    }

    /// Shortest toroidal L1 distance.
    pub fn manhattan_torus_distance(&self, a: CellIndex, b: CellIndex) -> Result<usize> {
        let (dr, dc) = self.torus_offsets(a, b)?;
        Ok(dr + dc)
    }

    pub fn cells(&self) -> impl Iterator<Item = CellIndex> {
        (0..self.size()).map(CellIndex)
    }
}
