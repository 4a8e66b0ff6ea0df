//! Complete disjunctive coding of categorical records and the chi-square
//! column adjustment that embeds their chi-square distances into plain
//! Euclidean distance.
//!
//! Every record picks exactly one modality per variable, giving an N x M
//! 0/1 table whose rows all sum to K. The adjusted table rescales entries
//! of column j by `1 / sqrt(K * n_j)` where `n_j` is the column count.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::provenance::fnv1a64;

/// One qualitative variable: a name and its ordered modality labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub modalities: Vec<String>,
}

/// Declaration of the K qualitative variables (with their modalities) and
/// the Q quantitative variable names. Global modality indices concatenate
/// the variables in declaration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoricalSchema {
    variables: Vec<Variable>,
    quantitative: Vec<String>,
    /// global index of each variable's first modality, plus a trailing M
    offsets: Vec<usize>,
}

impl CategoricalSchema {
    pub fn new(variables: Vec<Variable>, quantitative: Vec<String>) -> Result<Self> {
        if variables.is_empty() {
            return Err(Error::Config("schema declares no qualitative variables".into()));
        }
        let mut seen_vars = std::collections::BTreeSet::new();
        for v in &variables {
            if v.name.is_empty() {
                return Err(Error::Config("schema has an unnamed variable".into()));
            }
            if !seen_vars.insert(v.name.as_str()) {
                return Err(Error::Config(format!("duplicate variable '{}'", v.name)));
            }
            if v.modalities.is_empty() {
                return Err(Error::Config(format!(
                    "variable '{}' declares no modalities",
                    v.name
                )));
            }
            let mut seen = std::collections::BTreeSet::new();
            for m in &v.modalities {
                if m.is_empty() || !seen.insert(m.as_str()) {
                    return Err(Error::Config(format!(
                        "variable '{}' has an empty or duplicate modality '{m}'",
                        v.name
                    )));
                }
            }
        }
        for q in &quantitative {
            if q.is_empty() || seen_vars.contains(q.as_str()) {
                return Err(Error::Config(format!(
                    "quantitative variable '{q}' is empty or clashes with a qualitative one"
                )));
            }
        }
        let mut offsets = Vec::with_capacity(variables.len() + 1);
        let mut total = 0;
        for v in &variables {
            offsets.push(total);
            total += v.modalities.len();
        }
        offsets.push(total);
        Ok(CategoricalSchema {
            variables,
            quantitative,
            offsets,
        })
    }

    /// Number of qualitative variables K.
    pub fn k(&self) -> usize {
        self.variables.len()
    }

    /// Total number of modalities M.
    pub fn m(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn quantitative(&self) -> &[String] {
        &self.quantitative
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn quantitative_index(&self, name: &str) -> Option<usize> {
        self.quantitative.iter().position(|q| q == name)
    }

    /// Global column index of modality `m_idx` of variable `var`.
    pub fn global_index(&self, var: usize, m_idx: usize) -> usize {
        self.offsets[var] + m_idx
    }

    /// Which variable a global column belongs to.
    pub fn variable_of(&self, global: usize) -> usize {
        debug_assert!(global < self.m());
        match self.offsets.binary_search(&global) {
            Ok(v) if v < self.variables.len() => v,
            Ok(v) => v - 1,
            Err(v) => v - 1,
        }
    }

    /// "VARIABLE.MODALITY" label of a global column.
    pub fn column_label(&self, global: usize) -> String {
        let v = self.variable_of(global);
        let m = global - self.offsets[v];
        format!("{}.{}", self.variables[v].name, self.variables[v].modalities[m])
    }

    pub fn column_labels(&self) -> Vec<String> {
        (0..self.m()).map(|j| self.column_label(j)).collect()
    }

    /// Stable hash over the full declaration, used to tie models to the
    /// schema they were trained with.
    pub fn hash(&self) -> u64 {
        let mut canon = String::new();
        for v in &self.variables {
            canon.push_str(&v.name);
            canon.push(':');
            canon.push_str(&v.modalities.join(","));
            canon.push(';');
        }
        canon.push('|');
        canon.push_str(&self.quantitative.join(","));
        fnv1a64(canon.as_bytes())
    }
}

/// The N x M complete disjunctive table. Stored as the chosen global column
/// per (record, variable), which makes the one-1-per-block invariant
/// structural.
#[derive(Debug, Clone, PartialEq)]
pub struct DisjunctiveTable {
    schema: CategoricalSchema,
    n: usize,
    choices: Vec<usize>, // n * k global column indices
}

impl DisjunctiveTable {
    /// One-hot encode categorical records (one label per variable, in schema
    /// order). Empty labels are treated as missing values.
    pub fn encode(records: &[Vec<String>], schema: &CategoricalSchema) -> Result<Self> {
        let k = schema.k();
        let mut choices = Vec::with_capacity(records.len() * k);
        for (i, rec) in records.iter().enumerate() {
            if rec.len() != k {
                return Err(Error::ShapeMismatch(format!(
                    "record {} has {} values, schema declares {k} variables",
                    i + 1,
                    rec.len()
                )));
            }
            for (v, label) in rec.iter().enumerate() {
                let var = &schema.variables()[v];
                if label.trim().is_empty() {
                    return Err(Error::IncompleteRecord {
                        record: i + 1,
                        variable: var.name.clone(),
                    });
                }
                match var.modalities.iter().position(|m| m == label) {
                    Some(m_idx) => choices.push(schema.global_index(v, m_idx)),
                    None => {
                        return Err(Error::SchemaViolation {
                            record: i + 1,
                            variable: var.name.clone(),
                            label: label.clone(),
                        })
                    }
                }
            }
        }
        Ok(DisjunctiveTable {
            schema: schema.clone(),
            n: records.len(),
            choices,
        })
    }

    pub fn schema(&self) -> &CategoricalSchema {
        &self.schema
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.schema.k()
    }

    pub fn m(&self) -> usize {
        self.schema.m()
    }

    /// The K global columns record `i` has a 1 in, ascending.
    pub fn row_choices(&self, i: usize) -> &[usize] {
        &self.choices[i * self.k()..(i + 1) * self.k()]
    }

    /// Entry d[i][j] of the dense 0/1 table.
    pub fn value(&self, i: usize, j: usize) -> u8 {
        let v = self.schema.variable_of(j);
        u8::from(self.choices[i * self.k() + v] == j)
    }

    /// Column counts d_.j (how many records picked each modality).
    pub fn column_counts(&self) -> Vec<u32> {
        let mut counts = vec![0u32; self.m()];
        for &j in &self.choices {
            counts[j] += 1;
        }
        counts
    }

    /// Inverse of [`DisjunctiveTable::encode`]: per-block argmax back to
    /// modality labels.
    pub fn decode(&self) -> Vec<Vec<String>> {
        (0..self.n)
            .map(|i| {
                self.row_choices(i)
                    .iter()
                    .enumerate()
                    .map(|(v, &j)| {
                        let var = &self.schema.variables()[v];
                        var.modalities[j - self.schema.global_index(v, 0)].clone()
                    })
                    .collect()
            })
            .collect()
    }

    /// Dense delimited-text dump with a header row of global modality names.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.schema.column_labels().join("\t"))?;
        for i in 0..self.n {
            let row: Vec<String> = (0..self.m()).map(|j| self.value(i, j).to_string()).collect();
            writeln!(w, "{}", row.join("\t"))?;
        }
        Ok(())
    }
}

/// What to do with a modality column nobody picked (its adjustment would
/// divide by zero).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmptyColumnPolicy {
    Error,
    Drop,
}

impl std::str::FromStr for EmptyColumnPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "error" => Ok(EmptyColumnPolicy::Error),
            "drop" => Ok(EmptyColumnPolicy::Drop),
            other => Err(Error::Config(format!(
                "empty-modality policy must be 'error' or 'drop', got '{other}'"
            ))),
        }
    }
}

/// The chi-square-adjusted table D^c. Nonzero entries of column j all equal
/// `1 / sqrt(K * n_j)`, so only column values and the per-record choices are
/// stored; dense rows and columns are materialized on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjustedTable {
    n: usize,
    k: usize,
    choices: Vec<usize>,     // n * k, re-indexed over retained columns
    col_counts: Vec<u32>,    // retained columns, all >= 1
    col_values: Vec<f64>,    // 1 / sqrt(k * count)
    var_of: Vec<usize>,      // retained column -> variable index
    labels: Vec<String>,     // retained column labels
    retained: Vec<usize>,    // retained column -> original global column
    dropped: Vec<String>,    // labels of dropped empty columns
    schema_hash: u64,
}

impl AdjustedTable {
    /// Apply the chi-square adjustment `d^c_ij = d_ij / sqrt(d_i. * d_.j)`
    /// with the row sum d_i. = K. Empty columns are handled per policy.
    pub fn adjust(d: &DisjunctiveTable, policy: EmptyColumnPolicy) -> Result<Self> {
        let counts = d.column_counts();
        let k = d.k();
        let mut retained = Vec::with_capacity(d.m());
        let mut dropped = Vec::new();
        for (j, &c) in counts.iter().enumerate() {
            if c == 0 {
                match policy {
                    EmptyColumnPolicy::Error => {
                        return Err(Error::EmptyModality {
                            label: d.schema().column_label(j),
                        })
                    }
                    EmptyColumnPolicy::Drop => dropped.push(d.schema().column_label(j)),
                }
            } else {
                retained.push(j);
            }
        }
        let mut remap = vec![usize::MAX; d.m()];
        for (new, &old) in retained.iter().enumerate() {
            remap[old] = new;
        }
        let choices: Vec<usize> = d.choices.iter().map(|&j| remap[j]).collect();
        debug_assert!(choices.iter().all(|&j| j != usize::MAX));
        let col_counts: Vec<u32> = retained.iter().map(|&j| counts[j]).collect();
        let col_values: Vec<f64> = col_counts
            .iter()
            .map(|&c| 1.0 / (k as f64 * c as f64).sqrt())
            .collect();
        let var_of: Vec<usize> = retained.iter().map(|&j| d.schema().variable_of(j)).collect();
        let labels: Vec<String> = retained.iter().map(|&j| d.schema().column_label(j)).collect();
        Ok(AdjustedTable {
            n: d.n(),
            k,
            choices,
            col_counts,
            col_values,
            var_of,
            labels,
            retained,
            dropped,
            schema_hash: d.schema().hash(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of retained columns.
    pub fn m(&self) -> usize {
        self.col_counts.len()
    }

    pub fn column_counts(&self) -> &[u32] {
        &self.col_counts
    }

    /// The shared nonzero value of column `j`.
    pub fn col_value(&self, j: usize) -> f64 {
        self.col_values[j]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Retained column -> original global column index.
    pub fn retained(&self) -> &[usize] {
        &self.retained
    }

    pub fn dropped(&self) -> &[String] {
        &self.dropped
    }

    pub fn schema_hash(&self) -> u64 {
        self.schema_hash
    }

    pub fn row_choices(&self, i: usize) -> &[usize] {
        &self.choices[i * self.k..(i + 1) * self.k]
    }

    /// Entry d^c[i][j].
    pub fn value(&self, i: usize, j: usize) -> f64 {
        if self.choices[i * self.k + self.var_of[j]] == j {
            self.col_values[j]
        } else {
            0.0
        }
    }

    /// Dense row i of D^c (length m).
    pub fn row_dense(&self, i: usize) -> Vec<f64> {
        let mut row = vec![0.0; self.m()];
        for &j in self.row_choices(i) {
            row[j] = self.col_values[j];
        }
        row
    }

    /// Dense column j of D^c (length n).
    pub fn column_dense(&self, j: usize) -> Vec<f64> {
        let v = self.var_of[j];
        (0..self.n)
            .map(|i| {
                if self.choices[i * self.k + v] == j {
                    self.col_values[j]
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Largest entry of the table (the value of the rarest modality column).
    pub fn max_entry(&self) -> f64 {
        self.col_values.iter().cloned().fold(0.0, f64::max)
    }

    /// Among the K modalities of record `i`, the rarest one (maximal d^c
    /// entry). Ties go to the smallest column index.
    pub fn rarest_modality(&self, i: usize) -> usize {
        let mut best = self.row_choices(i)[0];
        for &j in &self.row_choices(i)[1..] {
            if self.col_counts[j] < self.col_counts[best] {
                best = j;
            }
        }
        best
    }

    /// Dense delimited-text dump with a header row of retained column names.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.labels.join("\t"))?;
        for i in 0..self.n {
            let row: Vec<String> = self
                .row_dense(i)
                .iter()
                .map(|v| format!("{v:.16e}"))
                .collect();
            writeln!(w, "{}", row.join("\t"))?;
        }
        Ok(())
    }

    pub fn save_tsv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        self.write_tsv(&mut f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn toy_schema() -> CategoricalSchema {
        CategoricalSchema::new(
            vec![
                Variable {
                    name: "A".into(),
                    modalities: vec!["a1".into(), "a2".into()],
                },
                Variable {
                    name: "B".into(),
                    modalities: vec!["b1".into(), "b2".into()],
                },
            ],
            vec![],
        )
        .unwrap()
    }

    fn rec(vals: &[&str]) -> Vec<String> {
        vals.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn encode_one_hot() {
        let schema = toy_schema();
        let d = DisjunctiveTable::encode(&[rec(&["a1", "b2"])], &schema).unwrap();
        let row: Vec<u8> = (0..4).map(|j| d.value(0, j)).collect();
        assert_eq!(row, vec![1, 0, 0, 1]);
    }

    #[test]
    fn rows_sum_to_k() {
        use rand::prelude::*;
        let schema = toy_schema();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let records: Vec<Vec<String>> = (0..50)
            .map(|_| {
                rec(&[
                    if rng.gen() { "a1" } else { "a2" },
                    if rng.gen() { "b1" } else { "b2" },
                ])
            })
            .collect();
        let d = DisjunctiveTable::encode(&records, &schema).unwrap();
        for i in 0..50 {
            let sum: u32 = (0..4).map(|j| d.value(i, j) as u32).sum();
            assert_eq!(sum, 2);
        }
    }

    #[test]
    fn encode_rejects_unknown_modality() {
        let schema = toy_schema();
        let err = DisjunctiveTable::encode(&[rec(&["a1", "zz"])], &schema).unwrap_err();
        match err {
            Error::SchemaViolation {
                record, variable, label,
            } => {
                assert_eq!(record, 1);
                assert_eq!(variable, "B");
                assert_eq!(label, "zz");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn encode_rejects_missing_value() {
        let schema = toy_schema();
        let err = DisjunctiveTable::encode(&[rec(&["a1", ""])], &schema).unwrap_err();
        assert!(matches!(err, Error::IncompleteRecord { record: 1, .. }));
    }

    #[test]
    fn column_counts_sum_to_nk() {
        use rand::prelude::*;
        let schema = toy_schema();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(18);
        let records: Vec<Vec<String>> = (0..40)
            .map(|_| {
                rec(&[
                    if rng.gen() { "a1" } else { "a2" },
                    if rng.gen() { "b1" } else { "b2" },
                ])
            })
            .collect();
        let d = DisjunctiveTable::encode(&records, &schema).unwrap();
        let counts = d.column_counts();
        assert_eq!(counts.iter().sum::<u32>() as usize, 40 * 2);
    }

    #[test]
    fn constant_column_counts_n() {
        let schema = toy_schema();
        let records: Vec<Vec<String>> = (0..7).map(|_| rec(&["a1", "b1"])).collect();
        let d = DisjunctiveTable::encode(&records, &schema).unwrap();
        let counts = d.column_counts();
        assert_eq!(counts, vec![7, 0, 7, 0]);
    }

    #[test]
    fn adjust_matches_hand_value() {
        // K=2, column with count 4 -> nonzero entries 1/sqrt(8)
        let schema = toy_schema();
        let records: Vec<Vec<String>> = vec![
            rec(&["a1", "b1"]),
            rec(&["a1", "b2"]),
            rec(&["a1", "b1"]),
            rec(&["a1", "b2"]),
        ];
        let d = DisjunctiveTable::encode(&records, &schema).unwrap();
        let dc = AdjustedTable::adjust(&d, EmptyColumnPolicy::Drop).unwrap();
        let a1 = dc.labels().iter().position(|l| l == "A.a1").unwrap();
        assert!((dc.value(0, a1) - 1.0 / 8.0_f64.sqrt()).abs() < 1e-15);
        assert!((dc.value(0, a1) - 0.353553).abs() < 1e-6);
    }

    #[test]
    fn adjust_preserves_zeros_and_minimizes_full_columns() {
        let schema = toy_schema();
        let records: Vec<Vec<String>> = vec![
            rec(&["a1", "b1"]),
            rec(&["a2", "b1"]),
            rec(&["a1", "b1"]),
        ];
        let d = DisjunctiveTable::encode(&records, &schema).unwrap();
        let dc = AdjustedTable::adjust(&d, EmptyColumnPolicy::Drop).unwrap();
        // a2 has a zero in row 0
        let a2 = dc.labels().iter().position(|l| l == "A.a2").unwrap();
        assert_eq!(dc.value(0, a2), 0.0);
        // b1 chosen by everyone: its nonzero value is the table minimum
        let b1 = dc.labels().iter().position(|l| l == "B.b1").unwrap();
        let min = (0..dc.m()).map(|j| dc.col_value(j)).fold(f64::INFINITY, f64::min);
        assert_eq!(dc.col_value(b1), min);
    }

    #[test]
    fn empty_column_error_names_the_modality() {
        let schema = toy_schema();
        let records: Vec<Vec<String>> = vec![rec(&["a1", "b1"])];
        let d = DisjunctiveTable::encode(&records, &schema).unwrap();
        let err = AdjustedTable::adjust(&d, EmptyColumnPolicy::Error).unwrap_err();
        match err {
            Error::EmptyModality { label } => assert_eq!(label, "A.a2"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn empty_column_drop_records_the_report() {
        let schema = toy_schema();
        let records: Vec<Vec<String>> = vec![rec(&["a1", "b1"]), rec(&["a1", "b2"])];
        let d = DisjunctiveTable::encode(&records, &schema).unwrap();
        let dc = AdjustedTable::adjust(&d, EmptyColumnPolicy::Drop).unwrap();
        assert_eq!(dc.m(), 3);
        assert_eq!(dc.dropped(), &["A.a2".to_string()]);
        assert_eq!(dc.retained(), &[0, 2, 3]);
    }

    #[test]
    fn rarest_modality_picks_unique_minimum() {
        // counts per modality: a1=3, a2=1 -> record 3 (a2) has the rare one
        let schema = toy_schema();
        let records: Vec<Vec<String>> = vec![
            rec(&["a1", "b1"]),
            rec(&["a1", "b1"]),
            rec(&["a1", "b2"]),
            rec(&["a2", "b2"]),
        ];
        let d = DisjunctiveTable::encode(&records, &schema).unwrap();
        let dc = AdjustedTable::adjust(&d, EmptyColumnPolicy::Drop).unwrap();
        // record 0: a1 (count 3) vs b1 (count 2) -> b1
        assert_eq!(dc.labels()[dc.rarest_modality(0)], "B.b1");
        // record 3: a2 (count 1) vs b2 (count 2) -> a2
        assert_eq!(dc.labels()[dc.rarest_modality(3)], "A.a2");
    }

    #[test]
    fn rarest_modality_tie_breaks_by_column_index() {
        let schema = toy_schema();
        // a1 and b1 both have count 2
        let records: Vec<Vec<String>> = vec![
            rec(&["a1", "b1"]),
            rec(&["a1", "b1"]),
            rec(&["a2", "b2"]),
            rec(&["a2", "b2"]),
        ];
        let d = DisjunctiveTable::encode(&records, &schema).unwrap();
        let dc = AdjustedTable::adjust(&d, EmptyColumnPolicy::Error).unwrap();
        assert_eq!(dc.labels()[dc.rarest_modality(0)], "A.a1");
        assert_eq!(dc.labels()[dc.rarest_modality(2)], "A.a2");
    }

    /// Random schema + records for the randomized checks.
    pub(crate) fn random_instance(
        rng: &mut rand_chacha::ChaCha8Rng,
        max_n: usize,
        max_k: usize,
    ) -> (CategoricalSchema, Vec<Vec<String>>) {
        use rand::prelude::*;
        let k = rng.gen_range(1..=max_k);
        let n = rng.gen_range(1..=max_n);
        let variables: Vec<Variable> = (0..k)
            .map(|v| Variable {
                name: format!("V{v}"),
                modalities: (0..rng.gen_range(2..=4)).map(|m| format!("m{m}")).collect(),
            })
            .collect();
        let schema = CategoricalSchema::new(variables.clone(), vec![]).unwrap();
        let records: Vec<Vec<String>> = (0..n)
            .map(|_| {
                variables
                    .iter()
                    .map(|v| v.modalities[rng.gen_range(0..v.modalities.len())].clone())
                    .collect()
            })
            .collect();
        (schema, records)
    }

    #[test]
    fn rarest_matches_raw_row_argmax_oracle() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(44);
        for _ in 0..100 {
            let (schema, records) = random_instance(&mut rng, 20, 4);
            let d = DisjunctiveTable::encode(&records, &schema).unwrap();
            let dc = AdjustedTable::adjust(&d, EmptyColumnPolicy::Drop).unwrap();
            for i in 0..dc.n() {
                let row = dc.row_dense(i);
                let mut best = 0;
                for j in 1..row.len() {
                    if row[j] > row[best] {
                        best = j;
                    }
                }
                assert_eq!(dc.rarest_modality(i), best);
            }
        }
    }

    #[test]
    fn decode_round_trips() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let (schema, records) = random_instance(&mut rng, 15, 4);
            let d = DisjunctiveTable::encode(&records, &schema).unwrap();
            assert_eq!(d.decode(), records);
        }
    }

    #[test]
    fn adjustment_is_structurally_idempotent() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let (schema, records) = random_instance(&mut rng, 25, 4);
        let d = DisjunctiveTable::encode(&records, &schema).unwrap();
        let once = AdjustedTable::adjust(&d, EmptyColumnPolicy::Drop).unwrap();
        let twice = AdjustedTable::adjust(&d, EmptyColumnPolicy::Drop).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn column_energy_is_one_over_k() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(30);
        for _ in 0..20 {
            let (schema, records) = random_instance(&mut rng, 30, 5);
            let d = DisjunctiveTable::encode(&records, &schema).unwrap();
            let dc = AdjustedTable::adjust(&d, EmptyColumnPolicy::Drop).unwrap();
            for j in 0..dc.m() {
                let energy: f64 = dc.column_dense(j).iter().map(|v| v * v).sum();
                assert!(
                    (energy - 1.0 / dc.k() as f64).abs() < 1e-12,
                    "column {j} energy {energy}"
                );
            }
        }
    }

    #[test]
    fn row_energy_matches_direct_sum() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let (schema, records) = random_instance(&mut rng, 30, 5);
        let d = DisjunctiveTable::encode(&records, &schema).unwrap();
        let dc = AdjustedTable::adjust(&d, EmptyColumnPolicy::Drop).unwrap();
        for i in 0..dc.n() {
            let direct: f64 = dc.row_dense(i).iter().map(|v| v * v).sum();
            let formula: f64 = dc
                .row_choices(i)
                .iter()
                .map(|&j| 1.0 / (dc.k() as f64 * dc.column_counts()[j] as f64))
                .sum();
            assert!((direct - formula).abs() < 1e-12);
        }
    }

    #[test]
    fn table1_shape_is_827_by_39() {
        use rand::prelude::*;
        // 14 variables with modality counts summing to 39, 827 records
        let sizes = [2usize, 2, 4, 3, 2, 3, 3, 3, 3, 3, 4, 2, 2, 3];
        assert_eq!(sizes.iter().sum::<usize>(), 39);
        let variables: Vec<Variable> = sizes
            .iter()
            .enumerate()
            .map(|(v, &s)| Variable {
                name: format!("V{v}"),
                modalities: (0..s).map(|m| format!("m{m}")).collect(),
            })
            .collect();
        let schema = CategoricalSchema::new(variables.clone(), vec![]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(827);
        let records: Vec<Vec<String>> = (0..827)
            .map(|_| {
                variables
                    .iter()
                    .map(|v| v.modalities[rng.gen_range(0..v.modalities.len())].clone())
                    .collect()
            })
            .collect();
        let d = DisjunctiveTable::encode(&records, &schema).unwrap();
        assert_eq!((d.n(), d.m(), d.k()), (827, 39, 14));
        assert_eq!(d.column_counts().iter().sum::<u32>(), 827 * 14);
    }
}
