//! Seeded synthetic datasets with planted clusters and known ground-truth
//! labels, for desk-scale validation experiments.
//!
//! Plan file format (whitespace-delimited, `#` comments):
//!
//! ```text
//! variable contract OEC FTC
//! quant dmin
//! cluster A 200
//! cat A contract 0.9 0.1
//! num A dmin 24.0 2.0
//! ```
//!
//! Every cluster must give one `cat` distribution per declared variable
//! (probabilities over its modalities, summing to 1) and one `num`
//! mean/standard-deviation pair per quantitative variable.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::coding::{CategoricalSchema, Variable};
use crate::dataset::Dataset;
use crate::error::{Error, Result};

const PROB_SUM_TOL: f64 = 1e-9;

/// One planted cluster: record count, one modality distribution per
/// variable, one (mean, sd) per quantitative variable.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterPlan {
    pub name: String,
    pub count: usize,
    pub cat_probs: Vec<Vec<f64>>,
    pub quant_params: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthPlan {
    pub schema: CategoricalSchema,
    pub clusters: Vec<ClusterPlan>,
}

impl SynthPlan {
    pub fn new(schema: CategoricalSchema, clusters: Vec<ClusterPlan>) -> Result<Self> {
        if clusters.is_empty() {
            return Err(Error::Plan("plan declares no clusters".into()));
        }
        for c in &clusters {
            if c.count == 0 {
                return Err(Error::Plan(format!("cluster '{}' has count 0", c.name)));
            }
            if c.cat_probs.len() != schema.k() {
                return Err(Error::Plan(format!(
                    "cluster '{}' gives {} distributions for {} variables",
                    c.name,
                    c.cat_probs.len(),
                    schema.k()
                )));
            }
            for (v, probs) in c.cat_probs.iter().enumerate() {
                let var = &schema.variables()[v];
                if probs.len() != var.modalities.len() {
                    return Err(Error::Plan(format!(
                        "cluster '{}', variable '{}': {} probabilities for {} modalities",
                        c.name,
                        var.name,
                        probs.len(),
                        var.modalities.len()
                    )));
                }
                if probs.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                    return Err(Error::Plan(format!(
                        "cluster '{}', variable '{}': probabilities must be in [0, 1]",
                        c.name, var.name
                    )));
                }
                let sum: f64 = probs.iter().sum();
                if (sum - 1.0).abs() > PROB_SUM_TOL {
                    return Err(Error::Plan(format!(
                        "cluster '{}', variable '{}': probabilities sum to {sum}, not 1",
                        c.name, var.name
                    )));
                }
            }
            if c.quant_params.len() != schema.quantitative().len() {
                return Err(Error::Plan(format!(
                    "cluster '{}' gives {} quantitative parameters for {} variables",
                    c.name,
                    c.quant_params.len(),
                    schema.quantitative().len()
                )));
            }
            for (q, &(mean, sd)) in c.quant_params.iter().enumerate() {
                if !mean.is_finite() || !sd.is_finite() || sd < 0.0 {
                    return Err(Error::Plan(format!(
                        "cluster '{}', quantitative '{}': bad mean/sd {mean}/{sd}",
                        c.name,
                        schema.quantitative()[q]
                    )));
                }
            }
        }
        Ok(SynthPlan { schema, clusters })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Plan(format!("cannot read '{}': {e}", path.display())))?;
        Self::from_str_contents(&text)
    }

    pub fn from_str_contents(text: &str) -> Result<Self> {
        let mut variables: Vec<Variable> = Vec::new();
        let mut quantitative: Vec<String> = Vec::new();
        // (name, count, per-variable probs, per-quant params)
        let mut clusters: Vec<(String, usize, Vec<Option<Vec<f64>>>, Vec<Option<(f64, f64)>>)> =
            Vec::new();

        let bad = |lineno: usize, what: &str| Error::Plan(format!("line {}: {what}", lineno + 1));
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            match tokens[0] {
                "variable" => {
                    if tokens.len() < 3 {
                        return Err(bad(lineno, "variable needs a name and modalities"));
                    }
                    variables.push(Variable {
                        name: tokens[1].to_string(),
                        modalities: tokens[2..].iter().map(|s| s.to_string()).collect(),
                    });
                }
                "quant" => {
                    if tokens.len() != 2 {
                        return Err(bad(lineno, "quant takes exactly one name"));
                    }
                    quantitative.push(tokens[1].to_string());
                }
                "cluster" => {
                    if tokens.len() != 3 {
                        return Err(bad(lineno, "cluster needs a name and a count"));
                    }
                    let count: usize = tokens[2]
                        .parse()
                        .map_err(|_| bad(lineno, "cluster count is not an integer"))?;
                    clusters.push((
                        tokens[1].to_string(),
                        count,
                        vec![None; variables.len()],
                        vec![None; quantitative.len()],
                    ));
                }
                "cat" => {
                    if tokens.len() < 4 {
                        return Err(bad(lineno, "cat needs cluster, variable and probabilities"));
                    }
                    let cluster = clusters
                        .iter_mut()
                        .find(|c| c.0 == tokens[1])
                        .ok_or_else(|| bad(lineno, "unknown cluster"))?;
                    let v = variables
                        .iter()
                        .position(|var| var.name == tokens[2])
                        .ok_or_else(|| bad(lineno, "unknown variable"))?;
                    let probs: Vec<f64> = tokens[3..]
                        .iter()
                        .map(|t| t.parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad(lineno, "probabilities must be numbers"))?;
                    cluster.2[v] = Some(probs);
                }
                "num" => {
                    if tokens.len() != 5 {
                        return Err(bad(lineno, "num needs cluster, name, mean and sd"));
                    }
                    let cluster = clusters
                        .iter_mut()
                        .find(|c| c.0 == tokens[1])
                        .ok_or_else(|| bad(lineno, "unknown cluster"))?;
                    let q = quantitative
                        .iter()
                        .position(|name| name == tokens[2])
                        .ok_or_else(|| bad(lineno, "unknown quantitative variable"))?;
                    let mean: f64 = tokens[3]
                        .parse()
                        .map_err(|_| bad(lineno, "mean must be a number"))?;
                    let sd: f64 = tokens[4]
                        .parse()
                        .map_err(|_| bad(lineno, "sd must be a number"))?;
                    cluster.3[q] = Some((mean, sd));
                }
                other => return Err(bad(lineno, &format!("unknown directive '{other}'"))),
            }
        }

        let schema = CategoricalSchema::new(variables, quantitative)
            .map_err(|e| Error::Plan(e.to_string()))?;
        let clusters = clusters
            .into_iter()
            .map(|(name, count, cat, quant)| {
                let cat_probs = cat
                    .into_iter()
                    .enumerate()
                    .map(|(v, p)| {
                        p.ok_or_else(|| {
                            Error::Plan(format!(
                                "cluster '{name}' is missing a distribution for variable '{}'",
                                schema.variables()[v].name
                            ))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let quant_params = quant
                    .into_iter()
                    .enumerate()
                    .map(|(q, p)| {
                        p.ok_or_else(|| {
                            Error::Plan(format!(
                                "cluster '{name}' is missing mean/sd for '{}'",
                                schema.quantitative()[q]
                            ))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(ClusterPlan {
                    name,
                    count,
                    cat_probs,
                    quant_params,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        SynthPlan::new(schema, clusters)
    }

    pub fn total_records(&self) -> usize {
        self.clusters.iter().map(|c| c.count).sum()
    }
}

fn sample_modality(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (m, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return m;
        }
    }
    probs.len() - 1
}

fn sample_normal(rng: &mut ChaCha8Rng, mean: f64, sd: f64) -> f64 {
    // Box-Muller; u1 in (0, 1]
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
    mean + sd * z
}

/// Draw the planned records, grouped by cluster in declaration order.
/// Returns the dataset and the ground-truth cluster name per record.
pub fn generate(plan: &SynthPlan, seed: u64) -> (Dataset, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = plan.total_records();
    let mut ids = Vec::with_capacity(total);
    let mut categorical = Vec::with_capacity(total);
    let mut quantitative = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    let mut serial = 0usize;
    for cluster in &plan.clusters {
        for _ in 0..cluster.count {
            serial += 1;
            ids.push(format!("r{serial:06}"));
            let cat: Vec<String> = plan
                .schema
                .variables()
                .iter()
                .zip(&cluster.cat_probs)
                .map(|(var, probs)| var.modalities[sample_modality(&mut rng, probs)].clone())
                .collect();
            let quant: Vec<f64> = cluster
                .quant_params
                .iter()
                .map(|&(mean, sd)| sample_normal(&mut rng, mean, sd))
                .collect();
            categorical.push(cat);
            quantitative.push(quant);
            labels.push(cluster.name.clone());
        }
    }
    (
        Dataset {
            schema: plan.schema.clone(),
            ids,
            categorical,
            quantitative,
        },
        labels,
    )
}

/// Write the ground-truth labels next to the generated data.
pub fn write_labels(ids: &[String], labels: &[String], path: &Path, prefix: &str) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(prefix.as_bytes())?;
    writeln!(f, "id\tcluster")?;
    for (id, label) in ids.iter().zip(labels) {
        writeln!(f, "{id}\t{label}")?;
    }
    Ok(())
}
