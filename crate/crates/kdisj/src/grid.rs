//! Unit lattice: topologies, inter-unit distances, neighborhoods and
//! connectivity checks shared by training and the super-class reports.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// How the grid edges behave.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    /// One-dimensional chain (requires a single row or a single column).
    String,
    /// Plain bounded grid.
    Rectangle,
    /// Columns wrap around, rows do not.
    Cylinder,
    /// Both axes wrap around.
    Torus,
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Topology::String => "string",
            Topology::Rectangle => "rectangle",
            Topology::Cylinder => "cylinder",
            Topology::Torus => "torus",
        };
        f.write_str(name)
    }
}

impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "string" => Ok(Topology::String),
            "rectangle" => Ok(Topology::Rectangle),
            "cylinder" => Ok(Topology::Cylinder),
            "torus" => Ok(Topology::Torus),
            other => Err(Error::Config(format!("unknown topology '{other}'"))),
        }
    }
}

/// Index of a grid unit, row-major in `[0, rows*cols)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UnitId(pub usize);

impl UnitId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for UnitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Dimensions and topology of the unit lattice.
///
/// Distances are Chebyshev on (row, col) coordinates; wrapped axes use the
/// circular difference. Radius-1 balls are therefore the 8-connected blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    rows: usize,
    cols: usize,
    topology: Topology,
}

impl GridSpec {
    pub fn new(rows: usize, cols: usize, topology: Topology) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Config(format!(
                "grid must have at least one row and one column, got {rows}x{cols}"
            )));
        }
        if topology == Topology::String && rows != 1 && cols != 1 {
            return Err(Error::Config(format!(
                "string topology requires a single row or column, got {rows}x{cols}"
            )));
        }
        Ok(GridSpec {
            rows,
            cols,
            topology,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    /// Total number of units.
    pub fn units(&self) -> usize {
        self.rows * self.cols
    }

    /// Row-major position of a unit.
    pub fn position(&self, u: UnitId) -> (usize, usize) {
        (u.0 / self.cols, u.0 % self.cols)
    }

    pub fn unit_at(&self, row: usize, col: usize) -> UnitId {
        debug_assert!(row < self.rows && col < self.cols);
        UnitId(row * self.cols + col)
    }

    pub fn check_unit(&self, u: UnitId) -> Result<()> {
        if u.0 < self.units() {
            Ok(())
        } else {
            Err(Error::InvalidUnit {
                index: u.0,
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    fn axis_distance(delta: usize, len: usize, wraps: bool) -> usize {
        if wraps {
            delta.min(len - delta)
        } else {
            delta
        }
    }

    /// Chebyshev distance between two units, wrapping axes per topology.
    pub fn grid_distance(&self, u: UnitId, v: UnitId) -> Result<usize> {
        self.check_unit(u)?;
        self.check_unit(v)?;
        let (ur, uc) = self.position(u);
        let (vr, vc) = self.position(v);
        let wrap_rows = self.topology == Topology::Torus;
        let wrap_cols = matches!(self.topology, Topology::Cylinder | Topology::Torus);
        let dr = Self::axis_distance(ur.abs_diff(vr), self.rows, wrap_rows);
        let dc = Self::axis_distance(uc.abs_diff(vc), self.cols, wrap_cols);
        Ok(dr.max(dc))
    }

    /// All units within `radius` of `u` (inclusive, so always contains `u`),
    /// in ascending unit order.
    pub fn neighbors(&self, u: UnitId, radius: usize) -> Result<Vec<UnitId>> {
        self.check_unit(u)?;
        let mut out = Vec::new();
        for v in 0..self.units() {
            let v = UnitId(v);
            if self.grid_distance(u, v)? <= radius {
                out.push(v);
            }
        }
        Ok(out)
    }

    /// True iff `units` form a single connected component under radius-1
    /// adjacency.
    pub fn is_connected(&self, units: &[UnitId]) -> Result<bool> {
        if units.is_empty() {
            return Err(Error::InvalidArgument(
                "connectivity check needs a non-empty unit set".into(),
            ));
        }
        for &u in units {
            self.check_unit(u)?;
        }
        let mut visited = vec![false; units.len()];
        let mut queue = vec![0usize];
        visited[0] = true;
        let mut seen = 1usize;
        while let Some(i) = queue.pop() {
            for (j, &v) in units.iter().enumerate() {
                if !visited[j] && self.grid_distance(units[i], v)? <= 1 {
                    visited[j] = true;
                    seen += 1;
                    queue.push(j);
                }
            }
        }
        Ok(seen == units.len())
    }
}
