//! Classic stochastic Kohonen training for quantitative data: codebook
//! initialization, winner search with optional component restriction,
//! neighborhood updates and decay schedules.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Topology, UnitId};

/// Linear learning-rate and integer radius decay over a fixed step budget.
///
/// eps(t) falls linearly from `eps0` at t = 0 to `eps_min` at t = T-1;
/// radius(t) = round(radius0 * (1 - t/T)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub total_steps: usize,
    pub eps0: f64,
    pub eps_min: f64,
    pub radius0: usize,
}

impl Schedule {
    pub fn new(total_steps: usize, eps0: f64, eps_min: f64, radius0: usize) -> Result<Self> {
        if total_steps == 0 {
            return Err(Error::Config("schedule needs at least one step".into()));
        }
        if !(eps0.is_finite() && eps_min.is_finite()) || eps_min <= 0.0 || eps0 < eps_min {
            return Err(Error::Config(format!(
                "learning-rate bounds must satisfy eps0 >= eps_min > 0, got eps0={eps0} eps_min={eps_min}"
            )));
        }
        if eps0 > 1.0 {
            return Err(Error::Config(format!("eps0 must be <= 1, got {eps0}")));
        }
        Ok(Schedule {
            total_steps,
            eps0,
            eps_min,
            radius0,
        })
    }

    pub fn eps(&self, t: usize) -> f64 {
        debug_assert!(t < self.total_steps);
        if self.total_steps == 1 {
            self.eps0
        } else {
            self.eps0 + (self.eps_min - self.eps0) * t as f64 / (self.total_steps - 1) as f64
        }
    }

    pub fn radius(&self, t: usize) -> usize {
        debug_assert!(t < self.total_steps);
        (self.radius0 as f64 * (1.0 - t as f64 / self.total_steps as f64)).round() as usize
    }
}

/// Contiguous slice of code-vector components a search or update is
/// restricted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComponentRange {
    pub start: usize,
    pub len: usize,
}

impl ComponentRange {
    pub fn new(start: usize, len: usize) -> Self {
        ComponentRange { start, len }
    }

    pub fn full(dim: usize) -> Self {
        ComponentRange { start: 0, len: dim }
    }

    pub fn end(&self) -> usize {
        self.start + self.len
    }
}

/// One code vector per grid unit, all of the same dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    spec: GridSpec,
    dim: usize,
    data: Vec<f64>,
}

impl Codebook {
    /// Draw every component independently uniform in `[lower_c, upper_c]`
    /// from a seeded generator. Identical arguments give identical codebooks.
    pub fn init(
        spec: GridSpec,
        dim: usize,
        lower: &[f64],
        upper: &[f64],
        seed: u64,
    ) -> Result<Codebook> {
        if dim == 0 || lower.len() != dim || upper.len() != dim {
            return Err(Error::ShapeMismatch(format!(
                "bounds must both have length dim={dim}, got {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for c in 0..dim {
            if !(lower[c].is_finite() && upper[c].is_finite()) || lower[c] > upper[c] {
                return Err(Error::InvalidBounds {
                    component: c,
                    lower: lower[c],
                    upper: upper[c],
                });
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let units = spec.units();
        let mut data = Vec::with_capacity(units * dim);
        for _ in 0..units {
            for c in 0..dim {
                data.push(rng.gen_range(lower[c]..=upper[c]));
            }
        }
        Ok(Codebook { spec, dim, data })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vector(&self, u: UnitId) -> &[f64] {
        &self.data[u.0 * self.dim..(u.0 + 1) * self.dim]
    }

    fn vector_mut(&mut self, u: UnitId) -> &mut [f64] {
        &mut self.data[u.0 * self.dim..(u.0 + 1) * self.dim]
    }

    /// Unit whose code vector minimizes the squared Euclidean distance to `x`
    /// over the `restrict` components. Ties go to the smallest unit index.
    pub fn winner(&self, x: &[f64], restrict: ComponentRange) -> Result<UnitId> {
        if restrict.end() > self.dim {
            return Err(Error::ShapeMismatch(format!(
                "restriction [{}, {}) exceeds codebook dim {}",
                restrict.start,
                restrict.end(),
                self.dim
            )));
        }
        if x.len() < restrict.end() {
            return Err(Error::ShapeMismatch(format!(
                "input of length {} is too short for restriction ending at {}",
                x.len(),
                restrict.end()
            )));
        }
        let mut best = UnitId(0);
        let mut best_d = f64::INFINITY;
        for u in 0..self.spec.units() {
            let v = self.vector(UnitId(u));
            let mut d = 0.0;
            for c in restrict.start..restrict.end() {
                let diff = v[c] - x[c];
                d += diff * diff;
            }
            if d < best_d {
                best_d = d;
                best = UnitId(u);
            }
        }
        Ok(best)
    }

    /// Move the winner and its radius-`r(t)` neighbors toward `x` on the
    /// `restrict_update` components only, with a uniform 0/1 kernel:
    /// `v[c] = (1 - eps)*v[c] + eps*x[c]`.
    pub fn update_step(
        &mut self,
        x: &[f64],
        winner: UnitId,
        t: usize,
        sched: &Schedule,
        restrict_update: ComponentRange,
    ) {
        debug_assert!(restrict_update.end() <= self.dim);
        debug_assert!(x.len() >= restrict_update.end());
        let eps = sched.eps(t);
        let radius = sched.radius(t);
        let neighbors = self
            .spec
            .neighbors(winner, radius)
            .expect("winner was validated");
        for v in neighbors {
            let vec = self.vector_mut(v);
            for c in restrict_update.start..restrict_update.end() {
                vec[c] = (1.0 - eps) * vec[c] + eps * x[c];
            }
        }
    }

    /// Plain-text persistence: a `rows cols topology dim` header line, then
    /// one unit per line with components at 17 significant digits, so a
    /// reread reproduces the values exactly.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "{} {} {} {}",
            self.spec.rows(),
            self.spec.cols(),
            self.spec.topology(),
            self.dim
        )?;
        for u in 0..self.spec.units() {
            let line = self
                .vector(UnitId(u))
                .iter()
                .map(|v| format!("{v:.16e}"))
                .collect::<Vec<_>>()
                .join(" ");
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        self.write_to(&mut f)
    }

    /// Read a codebook written by [`Codebook::write_to`]. Lines starting
    /// with `#` are skipped so files may carry provenance comments.
    pub fn load(path: &Path) -> Result<Codebook> {
        let f = std::fs::File::open(path)?;
        let reader = BufReader::new(f);
        let mut lines = reader
            .lines()
            .collect::<std::io::Result<Vec<_>>>()?
            .into_iter()
            .filter(|l| !l.trim_start().starts_with('#') && !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Data("codebook file is empty".into()))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 4 {
            return Err(Error::Data(format!(
                "codebook header must be 'rows cols topology dim', got '{header}'"
            )));
        }
        let rows: usize = parts[0]
            .parse()
            .map_err(|_| Error::Data(format!("bad row count '{}'", parts[0])))?;
        let cols: usize = parts[1]
            .parse()
            .map_err(|_| Error::Data(format!("bad column count '{}'", parts[1])))?;
        let topology = Topology::from_str(parts[2])
            .map_err(|_| Error::Data(format!("bad topology '{}'", parts[2])))?;
        let dim: usize = parts[3]
            .parse()
            .map_err(|_| Error::Data(format!("bad dimension '{}'", parts[3])))?;
        let spec = GridSpec::new(rows, cols, topology)
            .map_err(|e| Error::Data(format!("bad codebook grid: {e}")))?;
        let mut data = Vec::with_capacity(spec.units() * dim);
        for (i, line) in lines.enumerate() {
            for tok in line.split_whitespace() {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| Error::Data(format!("unit {i}: bad component '{tok}'")))?;
                data.push(v);
            }
        }
        if data.len() != spec.units() * dim {
            return Err(Error::Data(format!(
                "codebook has {} components, expected {}",
                data.len(),
                spec.units() * dim
            )));
        }
        Ok(Codebook { spec, dim, data })
    }
}

fn validate_matrix(data: &[Vec<f64>]) -> Result<usize> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("input has no rows".into()));
    }
    let p = data[0].len();
    if p == 0 {
        return Err(Error::InvalidArgument("input rows are empty".into()));
    }
    for (i, row) in data.iter().enumerate() {
        if row.len() != p {
            return Err(Error::ShapeMismatch(format!(
                "row {i} has length {}, expected {p}",
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data(format!("row {i} contains a non-finite value")));
        }
    }
    Ok(p)
}

/// Classic online training: at each step one row is drawn uniformly, the
/// full-range winner and its neighbors move toward it. Deterministic given
/// the seed; initialization bounds are the per-component data min/max.
pub fn train_quantitative(
    data: &[Vec<f64>],
    spec: GridSpec,
    sched: &Schedule,
    seed: u64,
) -> Result<Codebook> {
    let p = validate_matrix(data)?;
    let mut lower = vec![f64::INFINITY; p];
    let mut upper = vec![f64::NEG_INFINITY; p];
    for row in data {
        for (c, &v) in row.iter().enumerate() {
            lower[c] = lower[c].min(v);
            upper[c] = upper[c].max(v);
        }
    }
    let mut cb = Codebook::init(spec, p, &lower, &upper, seed)?;
    let full = ComponentRange::full(p);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    for t in 0..sched.total_steps {
        let i = rng.gen_range(0..data.len());
        let x = &data[i];
        let w = cb.winner(x, full)?;
        cb.update_step(x, w, t, sched, full);
    }
    Ok(cb)
}

/// Assign every row to its winning unit over the `restrict` components.
pub fn classify(cb: &Codebook, rows: &[Vec<f64>], restrict: ComponentRange) -> Result<Vec<UnitId>> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("nothing to classify".into()));
    }
    rows.iter().map(|x| cb.winner(x, restrict)).collect()
}
