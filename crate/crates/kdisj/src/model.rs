//! Double stochastic Kohonen learning over extended code vectors: the
//! KDISJ algorithm.
//!
//! Each unit holds an (M + N)-dimensional code vector whose first M
//! components live in the space of individuals (rows of the adjusted
//! table) and whose last N components live in the space of modalities
//! (its columns). Training alternates one individual draw and one
//! modality draw per iteration pair:
//!
//! * an individual `i` is paired with its rarest modality `j(i)`, the
//!   winner is searched on the first M components only, and the whole
//!   extended vector of the winner and its neighbors moves toward the
//!   extended vector of `(i, j(i))`;
//! * a modality `j` is matched on the last N components only, and only
//!   those components move — the first M stay bit-identical.
//!
//! After training, individuals and modalities are classified onto the same
//! grid, individuals by the first M components and modalities by the last N.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::coding::AdjustedTable;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, UnitId};
use crate::som::{classify, Codebook, ComponentRange, Schedule};

/// A trained joint map plus the provenance needed to reproduce it.
#[derive(Debug, Clone, PartialEq)]
pub struct KdisjModel {
    pub codebook: Codebook,
    /// Number of individuals N (length of the modality part).
    pub n: usize,
    /// Number of retained modality columns M (length of the individual part).
    pub m: usize,
    pub schema_hash: u64,
    pub seed: u64,
    pub schedule: Schedule,
    /// Iteration pairs executed (one individual step + one modality step each).
    pub pairs: usize,
}

impl KdisjModel {
    /// Components `[0, M)`: the individual part.
    pub fn individual_range(&self) -> ComponentRange {
        ComponentRange::new(0, self.m)
    }

    /// Components `[M, M+N)`: the modality part.
    pub fn modality_range(&self) -> ComponentRange {
        ComponentRange::new(self.m, self.n)
    }
}

/// The extended vector of individual `i`: its adjusted row profile followed
/// by the individual profile of its rarest modality `j(i)`.
pub fn extended_vector(dc: &AdjustedTable, i: usize) -> Vec<f64> {
    let j = dc.rarest_modality(i);
    let mut out = dc.row_dense(i);
    out.extend(dc.column_dense(j));
    out
}

/// One individual step: winner on the first M components, update of the
/// full extended vector of the winner and its neighbors.
pub fn step_individual(
    model: &mut KdisjModel,
    dc: &AdjustedTable,
    i: usize,
    t: usize,
    sched: &Schedule,
) -> Result<UnitId> {
    let target = extended_vector(dc, i);
    let winner = model.codebook.winner(&target, model.individual_range())?;
    let full = ComponentRange::full(model.m + model.n);
    model.codebook.update_step(&target, winner, t, sched, full);
    Ok(winner)
}

/// One modality step: winner on the last N components, update of those
/// components only. The first M components of every code vector are
/// untouched.
pub fn step_modality(
    model: &mut KdisjModel,
    dc: &AdjustedTable,
    j: usize,
    t: usize,
    sched: &Schedule,
) -> Result<UnitId> {
    let mut target = vec![0.0; model.m];
    target.extend(dc.column_dense(j));
    let range = model.modality_range();
    let winner = model.codebook.winner(&target, range)?;
    model.codebook.update_step(&target, winner, t, sched, range);
    Ok(winner)
}

/// Train a joint map on an adjusted table. The codebook is initialized
/// uniformly in `[0, max entry of the table]`; each of the schedule's
/// `total_steps` iterations draws one individual uniformly, then one
/// modality uniformly. Deterministic given the seed.
pub fn train(
    dc: &AdjustedTable,
    spec: GridSpec,
    sched: &Schedule,
    seed: u64,
) -> Result<KdisjModel> {
    let (n, m) = (dc.n(), dc.m());
    if n == 0 || m == 0 {
        return Err(Error::InvalidArgument(
            "adjusted table has no rows or no columns".into(),
        ));
    }
    let dim = m + n;
    let upper = vec![dc.max_entry(); dim];
    let lower = vec![0.0; dim];
    let codebook = Codebook::init(spec, dim, &lower, &upper, seed)?;
    let mut model = KdisjModel {
        codebook,
        n,
        m,
        schema_hash: dc.schema_hash(),
        seed,
        schedule: *sched,
        pairs: sched.total_steps,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    for t in 0..sched.total_steps {
        let i = rng.gen_range(0..n);
        step_individual(&mut model, dc, i, t, sched)?;
        let j = rng.gen_range(0..m);
        step_modality(&mut model, dc, j, t, sched)?;
    }
    Ok(model)
}

/// Winner per individual, restricted to the first M components.
pub fn classify_individuals(model: &KdisjModel, dc: &AdjustedTable) -> Result<Vec<UnitId>> {
    if dc.n() != model.n || dc.m() != model.m {
        return Err(Error::ShapeMismatch(format!(
            "table is {}x{}, model was trained on {}x{}",
            dc.n(),
            dc.m(),
            model.n,
            model.m
        )));
    }
    let rows: Vec<Vec<f64>> = (0..dc.n()).map(|i| dc.row_dense(i)).collect();
    classify(&model.codebook, &rows, model.individual_range())
}

/// Winner per modality column, restricted to the last N components.
pub fn classify_modalities(model: &KdisjModel, dc: &AdjustedTable) -> Result<Vec<UnitId>> {
    if dc.n() != model.n || dc.m() != model.m {
        return Err(Error::ShapeMismatch(format!(
            "table is {}x{}, model was trained on {}x{}",
            dc.n(),
            dc.m(),
            model.n,
            model.m
        )));
    }
    let cols: Vec<Vec<f64>> = (0..dc.m())
        .map(|j| {
            let mut padded = vec![0.0; model.m];
            padded.extend(dc.column_dense(j));
            padded
        })
        .collect();
    classify(&model.codebook, &cols, model.modality_range())
}

/// Write the codebook plus a sidecar header recording everything needed to
/// reread the model and reproduce its assignments exactly.
pub fn save_model(model: &KdisjModel, dir: &Path, provenance: &str) -> Result<()> {
    let cb_path = dir.join("codebook.txt");
    let mut f = std::fs::File::create(&cb_path)?;
    f.write_all(provenance.as_bytes())?;
    model.codebook.write_to(&mut f)?;
    let meta_path = dir.join("model.meta");
    let mut f = std::fs::File::create(&meta_path)?;
    f.write_all(provenance.as_bytes())?;
    writeln!(f, "n={}", model.n)?;
    writeln!(f, "m={}", model.m)?;
    writeln!(f, "schema_hash={:016x}", model.schema_hash)?;
    writeln!(f, "seed={}", model.seed)?;
    writeln!(f, "total_steps={}", model.schedule.total_steps)?;
    writeln!(f, "eps0={:.16e}", model.schedule.eps0)?;
    writeln!(f, "eps_min={:.16e}", model.schedule.eps_min)?;
    writeln!(f, "radius0={}", model.schedule.radius0)?;
    writeln!(f, "pairs={}", model.pairs)?;
    Ok(())
}

/// Read a model saved by [`save_model`].
pub fn load_model(dir: &Path) -> Result<KdisjModel> {
    let codebook = Codebook::load(&dir.join("codebook.txt"))?;
    let meta = std::fs::read_to_string(dir.join("model.meta"))?;
    let mut kv = BTreeMap::new();
    for line in meta.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Data(format!("bad sidecar line '{line}'")))?;
        kv.insert(key.to_string(), value.to_string());
    }
    let get = |key: &str| -> Result<String> {
        kv.get(key)
            .cloned()
            .ok_or_else(|| Error::Data(format!("sidecar is missing '{key}'")))
    };
    let parse_usize = |key: &str| -> Result<usize> {
        get(key)?
            .parse()
            .map_err(|_| Error::Data(format!("sidecar '{key}' is not an integer")))
    };
    let parse_f64 = |key: &str| -> Result<f64> {
        get(key)?
            .parse()
            .map_err(|_| Error::Data(format!("sidecar '{key}' is not a number")))
    };
    let n = parse_usize("n")?;
    let m = parse_usize("m")?;
    if codebook.dim() != n + m {
        return Err(Error::Data(format!(
            "codebook dim {} does not match sidecar m+n={}",
            codebook.dim(),
            n + m
        )));
    }
    let schema_hash = u64::from_str_radix(&get("schema_hash")?, 16)
        .map_err(|_| Error::Data("sidecar 'schema_hash' is not hex".into()))?;
    let seed = get("seed")?
        .parse()
        .map_err(|_| Error::Data("sidecar 'seed' is not an integer".into()))?;
    let schedule = Schedule::new(
        parse_usize("total_steps")?,
        parse_f64("eps0")?,
        parse_f64("eps_min")?,
        parse_usize("radius0")?,
    )?;
    let pairs = parse_usize("pairs")?;
    Ok(KdisjModel {
        codebook,
        n,
        m,
        schema_hash,
        seed,
        schedule,
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::{CategoricalSchema, DisjunctiveTable, EmptyColumnPolicy, Variable};
    use crate::grid::Topology;

    fn schema(sizes: &[usize]) -> CategoricalSchema {
        let variables = sizes
            .iter()
            .enumerate()
            .map(|(v, &s)| Variable {
                name: format!("V{v}"),
                modalities: (0..s).map(|m| format!("m{m}")).collect(),
            })
            .collect();
        CategoricalSchema::new(variables, vec![]).unwrap()
    }

    fn random_table(
        rng: &mut ChaCha8Rng,
        n: usize,
        sizes: &[usize],
    ) -> (DisjunctiveTable, AdjustedTable) {
        let schema = schema(sizes);
        let records: Vec<Vec<String>> = (0..n)
            .map(|_| {
                sizes
                    .iter()
                    .map(|&s| format!("m{}", rng.gen_range(0..s)))
                    .collect()
            })
            .collect();
        let d = DisjunctiveTable::encode(&records, &schema).unwrap();
        let dc = AdjustedTable::adjust(&d, EmptyColumnPolicy::Drop).unwrap();
        (d, dc)
    }

    fn small_sched(t: usize) -> Schedule {
        Schedule::new(t, 0.5, 0.01, 2).unwrap()
    }

    #[test]
    fn extended_vector_has_m_plus_n_components() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (_, dc) = random_table(&mut rng, 2, &[2, 3]);
        // n=2 rows; m is whatever survived the drop policy
        let v = extended_vector(&dc, 0);
        assert_eq!(v.len(), dc.m() + dc.n());
    }

    #[test]
    fn extended_vector_starts_with_the_row() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (_, dc) = random_table(&mut rng, 10, &[2, 3, 2]);
        for i in 0..dc.n() {
            let v = extended_vector(&dc, i);
            assert_eq!(&v[..dc.m()], dc.row_dense(i).as_slice());
        }
    }

    #[test]
    fn extended_vector_tail_matches_recomputed_column() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (_, dc) = random_table(&mut rng, 12, &[3, 2, 4]);
        for i in 0..dc.n() {
            // recompute j(i) from the raw counts
            let mut j_best = dc.row_choices(i)[0];
            for &j in dc.row_choices(i) {
                if dc.column_counts()[j] < dc.column_counts()[j_best] {
                    j_best = j;
                }
            }
            let v = extended_vector(&dc, i);
            assert_eq!(&v[dc.m()..], dc.column_dense(j_best).as_slice());
        }
    }

    #[test]
    fn full_individual_step_copies_extended_vector() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (_, dc) = random_table(&mut rng, 8, &[2, 2]);
        let spec = GridSpec::new(1, 2, Topology::Rectangle).unwrap();
        let sched = Schedule::new(4, 1.0, 1.0, 0).unwrap();
        let mut model = train(&dc, spec, &Schedule::new(1, 0.5, 0.5, 0).unwrap(), 9).unwrap();
        let winner = step_individual(&mut model, &dc, 3, 0, &sched).unwrap();
        assert_eq!(model.codebook.vector(winner), extended_vector(&dc, 3).as_slice());
    }

    #[test]
    fn individual_winner_ignores_modality_part() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (_, dc) = random_table(&mut rng, 10, &[2, 3]);
        let spec = GridSpec::new(2, 3, Topology::Rectangle).unwrap();
        let sched = small_sched(20);
        let model = train(&dc, spec, &sched, 31).unwrap();
        let target = extended_vector(&dc, 4);
        let before = model.codebook.winner(&target, model.individual_range()).unwrap();
        // perturb only the modality parts of every code vector
        let mut perturbed = model.clone();
        let m = model.m;
        for u in 0..spec.units() {
            let mut vec = perturbed.codebook.vector(UnitId(u)).to_vec();
            for c in m..vec.len() {
                vec[c] += 10.0 + u as f64;
            }
            // rebuild through a full-copy update step
            let s = Schedule::new(1, 1.0, 1.0, 0).unwrap();
            perturbed
                .codebook
                .update_step(&vec, UnitId(u), 0, &s, ComponentRange::full(vec.len()));
        }
        let after = perturbed.codebook.winner(&target, model.individual_range()).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn single_individual_step_matches_hand_arithmetic() {
        // 2 records, 1 variable with 2 modalities -> m=2, n=2, dim=4.
        // counts: m0 = 1, m1 = 1; col value = 1/sqrt(1*1) = 1 for both.
        let schema = schema(&[2]);
        let records = vec![vec!["m0".to_string()], vec!["m1".to_string()]];
        let d = DisjunctiveTable::encode(&records, &schema).unwrap();
        let dc = AdjustedTable::adjust(&d, EmptyColumnPolicy::Error).unwrap();
        // row 0 of D^c = (1, 0); j(0) = m0 whose column = (1, 0)
        assert_eq!(extended_vector(&dc, 0), vec![1.0, 0.0, 1.0, 0.0]);

        let spec = GridSpec::new(1, 2, Topology::String).unwrap();
        let mut model = train(&dc, spec, &Schedule::new(1, 0.5, 0.5, 0).unwrap(), 77).unwrap();
        // overwrite both code vectors with known values via full-copy steps
        let s1 = Schedule::new(1, 1.0, 1.0, 0).unwrap();
        let full = ComponentRange::full(4);
        model.codebook.update_step(&[0.8, 0.2, 0.6, 0.4], UnitId(0), 0, &s1, full);
        model.codebook.update_step(&[0.0, 0.9, 0.1, 0.9], UnitId(1), 0, &s1, full);

        // winner for row 0 on first 2 comps: unit 0 at (0.8-1)^2+0.2^2 = 0.08,
        // unit 1 at 1 + 0.81 -> unit 0. Step eps=0.5, radius 0:
        let s = Schedule::new(2, 0.5, 0.5, 0).unwrap();
        let w = step_individual(&mut model, &dc, 0, 0, &s).unwrap();
        assert_eq!(w, UnitId(0));
        let expect = [
            0.5 * 0.8 + 0.5 * 1.0,
            0.5 * 0.2,
            0.5 * 0.6 + 0.5 * 1.0,
            0.5 * 0.4,
        ];
        let got = model.codebook.vector(UnitId(0));
        for (g, e) in got.iter().zip(&expect) {
            assert!((g - e).abs() < 1e-15);
        }
        // unit 1 untouched (radius 0)
        assert_eq!(model.codebook.vector(UnitId(1)), &[0.0, 0.9, 0.1, 0.9]);
    }

    #[test]
    fn modality_steps_never_touch_the_individual_part() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (_, dc) = random_table(&mut rng, 15, &[2, 3, 2]);
        let spec = GridSpec::new(3, 3, Topology::Rectangle).unwrap();
        let sched = small_sched(40);
        let mut model = train(&dc, spec, &sched, 13).unwrap();
        let frozen: Vec<Vec<f64>> = (0..spec.units())
            .map(|u| model.codebook.vector(UnitId(u))[..model.m].to_vec())
            .collect();
        for t in 0..sched.total_steps {
            let j = rng.gen_range(0..dc.m());
            step_modality(&mut model, &dc, j, t, &sched).unwrap();
        }
        for u in 0..spec.units() {
            assert_eq!(
                &model.codebook.vector(UnitId(u))[..model.m],
                frozen[u].as_slice(),
                "unit {u} individual part drifted"
            );
        }
    }

    #[test]
    fn full_modality_step_copies_the_column() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (_, dc) = random_table(&mut rng, 9, &[2, 2]);
        let spec = GridSpec::new(2, 2, Topology::Rectangle).unwrap();
        let mut model = train(&dc, spec, &small_sched(10), 3).unwrap();
        let sched = Schedule::new(4, 1.0, 1.0, 0).unwrap();
        let w = step_modality(&mut model, &dc, 1, 0, &sched).unwrap();
        assert_eq!(
            &model.codebook.vector(w)[model.m..],
            dc.column_dense(1).as_slice()
        );
    }

    #[test]
    fn modality_winner_matches_restricted_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (_, dc) = random_table(&mut rng, 12, &[3, 3]);
        let spec = GridSpec::new(2, 3, Topology::Rectangle).unwrap();
        let model = train(&dc, spec, &small_sched(30), 5).unwrap();
        for j in 0..dc.m() {
            let col = dc.column_dense(j);
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for u in 0..spec.units() {
                let tail = &model.codebook.vector(UnitId(u))[model.m..];
                let d: f64 = tail.iter().zip(&col).map(|(a, b)| (a - b) * (a - b)).sum();
                if d < best_d {
                    best_d = d;
                    best = u;
                }
            }
            let mut padded = vec![0.0; model.m];
            padded.extend(col);
            assert_eq!(
                model.codebook.winner(&padded, model.modality_range()).unwrap(),
                UnitId(best)
            );
        }
    }

    #[test]
    fn training_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (_, dc) = random_table(&mut rng, 30, &[2, 3, 2]);
        let spec = GridSpec::new(3, 3, Topology::Rectangle).unwrap();
        let sched = small_sched(200);
        let a = train(&dc, spec, &sched, 12345).unwrap();
        let b = train(&dc, spec, &sched, 12345).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn paper_scale_run_completes() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let sizes = [2usize, 2, 4, 3, 2, 3, 3, 3, 3, 3, 4, 2, 2, 3];
        let (_, dc) = random_table(&mut rng, 827, &sizes);
        assert_eq!((dc.n(), dc.m()), (827, 39));
        let spec = GridSpec::new(7, 7, Topology::Rectangle).unwrap();
        let sched = Schedule::new(2000, 0.5, 0.01, 3).unwrap();
        let model = train(&dc, spec, &sched, 42).unwrap();
        assert_eq!(model.codebook.dim(), 827 + 39);
    }

    #[test]
    fn classify_individuals_partitions_all_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (_, dc) = random_table(&mut rng, 40, &[2, 3]);
        let spec = GridSpec::new(3, 3, Topology::Rectangle).unwrap();
        let model = train(&dc, spec, &small_sched(300), 8).unwrap();
        let units = classify_individuals(&model, &dc).unwrap();
        assert_eq!(units.len(), 40);
        let mut counts = vec![0usize; spec.units()];
        for u in &units {
            counts[u.index()] += 1;
        }
        assert_eq!(counts.iter().sum::<usize>(), 40);
    }

    #[test]
    fn classify_agrees_with_exhaustive_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let (_, dc) = random_table(&mut rng, 25, &[2, 2, 3]);
        let spec = GridSpec::new(2, 4, Topology::Rectangle).unwrap();
        let model = train(&dc, spec, &small_sched(200), 4).unwrap();
        let ind = classify_individuals(&model, &dc).unwrap();
        for i in 0..dc.n() {
            let row = dc.row_dense(i);
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for u in 0..spec.units() {
                let head = &model.codebook.vector(UnitId(u))[..model.m];
                let d: f64 = head.iter().zip(&row).map(|(a, b)| (a - b) * (a - b)).sum();
                if d < best_d {
                    best_d = d;
                    best = u;
                }
            }
            assert_eq!(ind[i], UnitId(best));
        }
        let modal = classify_modalities(&model, &dc).unwrap();
        assert_eq!(modal.len(), dc.m());
    }

    #[test]
    fn duplicated_modality_columns_share_a_unit() {
        // two variables with identical record patterns give identical columns
        let schema = schema(&[2, 2]);
        let records: Vec<Vec<String>> = (0..10)
            .map(|i| {
                let m = if i < 5 { "m0" } else { "m1" };
                vec![m.to_string(), m.to_string()]
            })
            .collect();
        let d = DisjunctiveTable::encode(&records, &schema).unwrap();
        let dc = AdjustedTable::adjust(&d, EmptyColumnPolicy::Error).unwrap();
        let spec = GridSpec::new(2, 2, Topology::Rectangle).unwrap();
        let model = train(&dc, spec, &small_sched(100), 6).unwrap();
        let modal = classify_modalities(&model, &dc).unwrap();
        // columns 0 and 2 are twins (V0.m0 / V1.m0), as are 1 and 3
        assert_eq!(modal[0], modal[2]);
        assert_eq!(modal[1], modal[3]);
    }

    /// Two planted clusters with disjoint dominant modalities.
    fn planted_two_clusters(
        rng: &mut ChaCha8Rng,
        per_cluster: usize,
    ) -> (AdjustedTable, Vec<usize>) {
        let sizes = [3usize; 8];
        let sch = schema(&sizes);
        let mut records = Vec::new();
        let mut truth = Vec::new();
        for cluster in 0..2usize {
            for _ in 0..per_cluster {
                let rec: Vec<String> = sizes
                    .iter()
                    .map(|&s| {
                        let dominant = cluster; // cluster 0 -> m0, cluster 1 -> m1
                        let m = if rng.gen::<f64>() < 0.8 {
                            dominant
                        } else {
                            (dominant + 1 + rng.gen_range(0..s - 1)) % s
                        };
                        format!("m{m}")
                    })
                    .collect();
                records.push(rec);
                truth.push(cluster);
            }
        }
        let d = DisjunctiveTable::encode(&records, &sch).unwrap();
        (AdjustedTable::adjust(&d, EmptyColumnPolicy::Drop).unwrap(), truth)
    }

    #[test]
    fn planted_clusters_occupy_disjoint_connected_regions() {
        // Each unit's territory label is the cluster of the individual whose
        // profile its code vector sits closest to; the two territories must
        // partition the grid into connected patches.
        let spec = GridSpec::new(5, 5, Topology::Rectangle).unwrap();
        let mut ok = 0;
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let (dc, truth) = planted_two_clusters(&mut rng, 100);
            let sched = Schedule::new(20 * (dc.n() + dc.m()), 0.5, 0.01, 3).unwrap();
            let model = train(&dc, spec, &sched, seed).unwrap();
            let rows: Vec<Vec<f64>> = (0..dc.n()).map(|i| dc.row_dense(i)).collect();
            let mut region0 = Vec::new();
            let mut region1 = Vec::new();
            for u in 0..spec.units() {
                let head = &model.codebook.vector(UnitId(u))[..model.m];
                let mut best = 0;
                let mut best_d = f64::INFINITY;
                for (i, row) in rows.iter().enumerate() {
                    let d: f64 = head.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum();
                    if d < best_d {
                        best_d = d;
                        best = i;
                    }
                }
                if truth[best] == 0 {
                    region0.push(UnitId(u));
                } else {
                    region1.push(UnitId(u));
                }
            }
            let connected = !region0.is_empty()
                && !region1.is_empty()
                && spec.is_connected(&region0).unwrap()
                && spec.is_connected(&region1).unwrap();
            if connected {
                ok += 1;
            }
        }
        assert!(ok >= 18, "only {ok}/20 seeds gave disjoint connected regions");
    }

    #[test]
    fn modalities_colocate_with_their_bearers() {
        let spec = GridSpec::new(5, 5, Topology::Rectangle).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let (dc, _) = planted_two_clusters(&mut rng, 100);
        let sched = Schedule::new(20 * (dc.n() + dc.m()), 0.5, 0.01, 3).unwrap();
        let model = train(&dc, spec, &sched, 7).unwrap();
        let ind = classify_individuals(&model, &dc).unwrap();
        let modal = classify_modalities(&model, &dc).unwrap();
        let mut closer = 0;
        for j in 0..dc.m() {
            let u = modal[j];
            let bearers: Vec<usize> = (0..dc.n())
                .filter(|&i| dc.row_choices(i).contains(&j))
                .collect();
            if bearers.is_empty() {
                continue;
            }
            let mean_to_bearers: f64 = bearers
                .iter()
                .map(|&i| spec.grid_distance(u, ind[i]).unwrap() as f64)
                .sum::<f64>()
                / bearers.len() as f64;
            let mean_to_all: f64 = (0..spec.units())
                .map(|v| spec.grid_distance(u, UnitId(v)).unwrap() as f64)
                .sum::<f64>()
                / spec.units() as f64;
            if mean_to_bearers < mean_to_all {
                closer += 1;
            }
        }
        assert!(
            closer as f64 >= 0.85 * dc.m() as f64,
            "only {closer}/{} modalities sit near their bearers",
            dc.m()
        );
    }

    #[test]
    fn model_round_trips_through_files() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let (_, dc) = random_table(&mut rng, 20, &[2, 3]);
        let spec = GridSpec::new(2, 3, Topology::Rectangle).unwrap();
        let model = train(&dc, spec, &small_sched(100), 55).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_model(&model, dir.path(), "# provenance config=0 seed=55 stage=test\n").unwrap();
        let back = load_model(dir.path()).unwrap();
        assert_eq!(model, back);
        assert_eq!(
            classify_individuals(&model, &dc).unwrap(),
            classify_individuals(&back, &dc).unwrap()
        );
    }
}
