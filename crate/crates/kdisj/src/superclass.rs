//! Regrouping trained units into super classes by agglomerative clustering
//! of their code vectors, plus the per-class profile statistics: sizes,
//! modality percentages, quantitative means, one-way F statistics and
//! deviations from the independence counts.

use std::str::FromStr;

use crate::coding::DisjunctiveTable;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, UnitId};
use crate::som::{Codebook, ComponentRange};

/// Linkage criterion for the hierarchical regrouping.
///
/// Ward heights are the increase in within-cluster sum of squares a merge
/// causes; complete and average heights are plain Euclidean distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Linkage {
    Ward,
    Complete,
    Average,
}

impl std::fmt::Display for Linkage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Linkage::Ward => "ward",
            Linkage::Complete => "complete",
            Linkage::Average => "average",
        };
        f.write_str(name)
    }
}

impl FromStr for Linkage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ward" => Ok(Linkage::Ward),
            "complete" => Ok(Linkage::Complete),
            "average" => Ok(Linkage::Average),
            other => Err(Error::Config(format!("unknown linkage '{other}'"))),
        }
    }
}

/// One agglomerative merge. Cluster ids are 0..U-1 for the leaves (unit
/// indices) and U+s for the cluster created by merge s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

/// Stepwise dendrogram over the grid units.
#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    pub leaves: usize,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    /// First differences of the merge heights; large gaps suggest natural
    /// cut points.
    pub fn height_gaps(&self) -> Vec<f64> {
        self.merges
            .windows(2)
            .map(|w| w[1].height - w[0].height)
            .collect()
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Agglomerative clustering of the code vectors under the given linkage,
/// over the restricted components (full vectors when `restrict` is `None`).
/// Deterministic: ties are broken by the smallest pair of cluster ids.
pub fn hierarchical_cluster(
    cb: &Codebook,
    linkage: Linkage,
    restrict: Option<ComponentRange>,
) -> Result<Dendrogram> {
    let u = cb.spec().units();
    if u < 2 {
        return Err(Error::InvalidArgument(
            "hierarchical clustering needs at least 2 units".into(),
        ));
    }
    let range = restrict.unwrap_or_else(|| ComponentRange::full(cb.dim()));
    if range.end() > cb.dim() {
        return Err(Error::ShapeMismatch(format!(
            "restriction [{}, {}) exceeds codebook dim {}",
            range.start,
            range.end(),
            cb.dim()
        )));
    }
    let points: Vec<&[f64]> = (0..u)
        .map(|i| &cb.vector(UnitId(i))[range.start..range.end()])
        .collect();

    // slot state: current cluster id, size, active flag
    let mut ids: Vec<usize> = (0..u).collect();
    let mut sizes: Vec<usize> = vec![1; u];
    let mut active: Vec<bool> = vec![true; u];
    // pairwise linkage values between slots
    let mut dist = vec![0.0f64; u * u];
    for a in 0..u {
        for b in (a + 1)..u {
            let d2 = squared_distance(points[a], points[b]);
            let v = match linkage {
                Linkage::Ward => 0.5 * d2,
                Linkage::Complete | Linkage::Average => d2.sqrt(),
            };
            dist[a * u + b] = v;
            dist[b * u + a] = v;
        }
    }

    let mut merges = Vec::with_capacity(u - 1);
    for step in 0..(u - 1) {
        // best pair by (value, smaller id, larger id)
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for a in 0..u {
            if !active[a] {
                continue;
            }
            for b in (a + 1)..u {
                if !active[b] {
                    continue;
                }
                let v = dist[a * u + b];
                let (lo, hi) = if ids[a] < ids[b] {
                    (ids[a], ids[b])
                } else {
                    (ids[b], ids[a])
                };
                let candidate = (v, lo, hi, a, b);
                best = match best {
                    None => Some(candidate),
                    Some(cur) => {
                        if (candidate.0, candidate.1, candidate.2) < (cur.0, cur.1, cur.2) {
                            Some(candidate)
                        } else {
                            Some(cur)
                        }
                    }
                };
            }
        }
        let (height, lo, hi, a, b) = best.expect("at least two active clusters");
        let merged_size = sizes[a] + sizes[b];
        merges.push(Merge {
            left: lo,
            right: hi,
            height,
            size: merged_size,
        });

        // Lance-Williams update of the linkage values into slot a
        for c in 0..u {
            if !active[c] || c == a || c == b {
                continue;
            }
            let dac = dist[a * u + c];
            let dbc = dist[b * u + c];
            let dab = dist[a * u + b];
            let (na, nb, nc) = (sizes[a] as f64, sizes[b] as f64, sizes[c] as f64);
            let v = match linkage {
                Linkage::Ward => {
                    ((na + nc) * dac + (nb + nc) * dbc - nc * dab) / (na + nb + nc)
                }
                Linkage::Complete => dac.max(dbc),
                Linkage::Average => (na * dac + nb * dbc) / (na + nb),
            };
            dist[a * u + c] = v;
            dist[c * u + a] = v;
        }
        sizes[a] = merged_size;
        ids[a] = u + step;
        active[b] = false;
    }
    Ok(Dendrogram { leaves: u, merges })
}

/// A cut of the dendrogram into S super classes. Labels are assigned by the
/// order of each class's smallest member unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperClassification {
    pub s: usize,
    /// Super-class label per unit, in [0, S).
    pub labels: Vec<usize>,
    /// Member units per class, ascending within each class.
    pub members: Vec<Vec<UnitId>>,
}

/// Undo the last S-1 merges of the dendrogram.
pub fn cut(d: &Dendrogram, s: usize) -> Result<SuperClassification> {
    let u = d.leaves;
    if s < 1 || s > u {
        return Err(Error::InvalidArgument(format!(
            "super-class count {s} must be in [1, {u}]"
        )));
    }
    let applied = u - s;
    let mut parent: Vec<Option<usize>> = vec![None; u + applied];
    for (step, m) in d.merges[..applied].iter().enumerate() {
        parent[m.left] = Some(u + step);
        parent[m.right] = Some(u + step);
    }
    let root_of = |mut id: usize| -> usize {
        while let Some(p) = parent[id] {
            id = p;
        }
        id
    };
    let mut groups: std::collections::BTreeMap<usize, Vec<UnitId>> = Default::default();
    for leaf in 0..u {
        groups.entry(root_of(leaf)).or_default().push(UnitId(leaf));
    }
    let mut members: Vec<Vec<UnitId>> = groups.into_values().collect();
    members.sort_by_key(|g| g[0]);
    let mut labels = vec![0usize; u];
    for (class, group) in members.iter().enumerate() {
        for &unit in group {
            labels[unit.index()] = class;
        }
    }
    Ok(SuperClassification {
        s,
        labels,
        members,
    })
}

/// Whether each super class forms a contiguous patch on the grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContiguityReport {
    pub contiguous: Vec<bool>,
    pub violations: usize,
}

pub fn contiguity_report(sc: &SuperClassification, spec: &GridSpec) -> Result<ContiguityReport> {
    let mut contiguous = Vec::with_capacity(sc.s);
    for group in &sc.members {
        contiguous.push(spec.is_connected(group)?);
    }
    let violations = contiguous.iter().filter(|&&c| !c).count();
    Ok(ContiguityReport {
        contiguous,
        violations,
    })
}

/// Individuals per super class, from their unit assignments.
pub fn class_sizes(individual_units: &[UnitId], sc: &SuperClassification) -> Vec<usize> {
    let mut sizes = vec![0usize; sc.s];
    for u in individual_units {
        sizes[sc.labels[u.index()]] += 1;
    }
    sizes
}

/// Super-class label per individual.
pub fn individual_labels(individual_units: &[UnitId], sc: &SuperClassification) -> Vec<usize> {
    individual_units.iter().map(|u| sc.labels[u.index()]).collect()
}

/// Percentage each modality accounts for inside each super class. Classes
/// with no individuals yield `None` rows rather than silent NaNs.
pub fn modality_percentages(
    d: &DisjunctiveTable,
    labels: &[usize],
    s: usize,
) -> Result<Vec<Option<Vec<f64>>>> {
    if labels.len() != d.n() {
        return Err(Error::ShapeMismatch(format!(
            "{} labels for {} records",
            labels.len(),
            d.n()
        )));
    }
    let mut counts = vec![vec![0usize; d.m()]; s];
    let mut sizes = vec![0usize; s];
    for (i, &k) in labels.iter().enumerate() {
        sizes[k] += 1;
        for &j in d.row_choices(i) {
            counts[k][j] += 1;
        }
    }
    Ok((0..s)
        .map(|k| {
            if sizes[k] == 0 {
                None
            } else {
                Some(
                    counts[k]
                        .iter()
                        .map(|&c| 100.0 * c as f64 / sizes[k] as f64)
                        .collect(),
                )
            }
        })
        .collect())
}

/// Per-class arithmetic means of the quantitative variables, plus the grand
/// means over the whole population.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMeans {
    pub means: Vec<Option<Vec<f64>>>,
    pub grand: Vec<f64>,
}

pub fn class_means(quant: &[Vec<f64>], labels: &[usize], s: usize) -> Result<ClassMeans> {
    if quant.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} quantitative rows for {} labels",
            quant.len(),
            labels.len()
        )));
    }
    let q = quant.first().map_or(0, |r| r.len());
    let mut sums = vec![vec![0.0f64; q]; s];
    let mut sizes = vec![0usize; s];
    let mut grand = vec![0.0f64; q];
    for (row, &k) in quant.iter().zip(labels) {
        if row.len() != q {
            return Err(Error::ShapeMismatch("ragged quantitative rows".into()));
        }
        sizes[k] += 1;
        for (c, &v) in row.iter().enumerate() {
            sums[k][c] += v;
            grand[c] += v;
        }
    }
    let n = quant.len() as f64;
    for g in &mut grand {
        *g /= n;
    }
    let means = (0..s)
        .map(|k| {
            if sizes[k] == 0 {
                None
            } else {
                Some(sums[k].iter().map(|v| v / sizes[k] as f64).collect())
            }
        })
        .collect();
    Ok(ClassMeans { means, grand })
}

/// One-way analysis-of-variance F statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FStat {
    pub f: f64,
    pub df_between: usize,
    pub df_within: usize,
}

/// F = (SS_between/df_between) / (SS_within/df_within) over the nonempty
/// classes. Returns F = 0 when all class means coincide and an infinite
/// marker when the within-class variance vanishes.
pub fn fisher_f(values: &[f64], labels: &[usize], s: usize) -> Result<FStat> {
    if values.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} values for {} labels",
            values.len(),
            labels.len()
        )));
    }
    let mut sums = vec![0.0f64; s];
    let mut sq_sums = vec![0.0f64; s];
    let mut sizes = vec![0usize; s];
    for (&v, &k) in values.iter().zip(labels) {
        sums[k] += v;
        sq_sums[k] += v * v;
        sizes[k] += 1;
    }
    let groups: Vec<usize> = (0..s).filter(|&k| sizes[k] > 0).collect();
    let g = groups.len();
    if g < 2 {
        return Err(Error::InvalidArgument(
            "F statistic needs at least 2 nonempty classes".into(),
        ));
    }
    let n = values.len();
    if n <= g {
        return Err(Error::InvalidArgument(format!(
            "F statistic needs more observations ({n}) than classes ({g})"
        )));
    }
    let grand = sums.iter().sum::<f64>() / n as f64;
    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for &k in &groups {
        let nk = sizes[k] as f64;
        let mean = sums[k] / nk;
        ss_between += nk * (mean - grand) * (mean - grand);
        ss_within += sq_sums[k] - nk * mean * mean;
    }
    // rounding can leave a tiny negative residue
    ss_within = ss_within.max(0.0);
    let df_between = g - 1;
    let df_within = n - g;
    let f = if ss_between == 0.0 {
        0.0
    } else if ss_within == 0.0 {
        f64::INFINITY
    } else {
        (ss_between / df_between as f64) / (ss_within / df_within as f64)
    };
    Ok(FStat {
        f,
        df_between,
        df_within,
    })
}

/// Number of individuals that hold modality `m` (original global column)
/// and sit in class `k`, minus the independence count `n_m * n_k / n`.
pub fn deviation(d: &DisjunctiveTable, labels: &[usize], m: usize, k: usize) -> f64 {
    let n = d.n() as f64;
    let mut count_mk = 0usize;
    let mut n_m = 0usize;
    let mut n_k = 0usize;
    for i in 0..d.n() {
        let has = d.value(i, m) == 1;
        let in_k = labels[i] == k;
        if has {
            n_m += 1;
        }
        if in_k {
            n_k += 1;
        }
        if has && in_k {
            count_mk += 1;
        }
    }
    count_mk as f64 - (n_m as f64) * (n_k as f64) / n
}

/// Full M x S deviation table.
pub fn deviations(d: &DisjunctiveTable, labels: &[usize], s: usize) -> Vec<Vec<f64>> {
    let n = d.n() as f64;
    let mut counts = vec![vec![0usize; s]; d.m()];
    let mut n_m = vec![0usize; d.m()];
    let mut n_k = vec![0usize; s];
    for (i, &k) in labels.iter().enumerate() {
        n_k[k] += 1;
        for &j in d.row_choices(i) {
            counts[j][k] += 1;
            n_m[j] += 1;
        }
    }
    (0..d.m())
        .map(|m| {
            (0..s)
                .map(|k| counts[m][k] as f64 - (n_m[m] as f64) * (n_k[k] as f64) / n)
                .collect()
        })
        .collect()
}

/// Everything the per-class reports need: sizes, modality percentages,
/// quantitative means, F statistics and the deviation table.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassProfile {
    pub sizes: Vec<usize>,
    /// S rows of M percentages; `None` marks a class with no individuals.
    pub modality_pct: Vec<Option<Vec<f64>>>,
    pub means: ClassMeans,
    /// One statistic per quantitative variable; `None` when the layout is
    /// degenerate (fewer than two nonempty classes, or N <= classes).
    pub fstats: Vec<Option<FStat>>,
    /// M x S.
    pub deviations: Vec<Vec<f64>>,
}

/// Assemble the full profile of a classification.
pub fn compose_profile(
    d: &DisjunctiveTable,
    quant: &[Vec<f64>],
    individual_units: &[UnitId],
    sc: &SuperClassification,
) -> Result<ClassProfile> {
    let labels = individual_labels(individual_units, sc);
    let sizes = class_sizes(individual_units, sc);
    let modality_pct = modality_percentages(d, &labels, sc.s)?;
    let means = class_means(quant, &labels, sc.s)?;
    let q = means.grand.len();
    let mut fstats = Vec::with_capacity(q);
    for col in 0..q {
        let values: Vec<f64> = quant.iter().map(|r| r[col]).collect();
        match fisher_f(&values, &labels, sc.s) {
            Ok(stat) => fstats.push(Some(stat)),
            Err(Error::InvalidArgument(_)) => fstats.push(None),
            Err(e) => return Err(e),
        }
    }
    let deviations = deviations(d, &labels, sc.s);
    Ok(ClassProfile {
        sizes,
        modality_pct,
        means,
        fstats,
        deviations,
    })
}

/// Fraction of modalities whose classified unit lands in a super class
/// where their deviation is strictly positive. `modality_units` pairs each
/// original global column with the unit its profile was classified into.
pub fn positive_deviation_rate(
    d: &DisjunctiveTable,
    labels: &[usize],
    sc: &SuperClassification,
    modality_units: &[(usize, UnitId)],
) -> f64 {
    if modality_units.is_empty() {
        return 0.0;
    }
    let dev = deviations(d, labels, sc.s);
    let positive = modality_units
        .iter()
        .filter(|&&(m, u)| dev[m][sc.labels[u.index()]] > 0.0)
        .count();
    positive as f64 / modality_units.len() as f64
}
