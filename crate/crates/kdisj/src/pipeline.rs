//! End-to-end batch run: encode, adjust, train, classify, regroup, profile
//! and render, writing every artifact with a provenance header. A failing
//! stage aborts with its name and removes the partial artifacts.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::coding::{AdjustedTable, DisjunctiveTable};
use crate::config::RunConfig;
use crate::dataset::{Dataset, LoadReport};
use crate::error::{Error, Result};
use crate::grid::UnitId;
use crate::model::{self, KdisjModel};
use crate::provenance;
use crate::render;
use crate::superclass::{
    self, ClassProfile, ContiguityReport, Dendrogram, SuperClassification,
};

/// Everything a finished run produced, in memory plus the files written.
#[derive(Debug)]
pub struct PipelineResult {
    pub model: KdisjModel,
    pub individual_units: Vec<UnitId>,
    pub modality_units: Vec<UnitId>,
    pub dendrogram: Dendrogram,
    pub superclasses: SuperClassification,
    pub contiguity: ContiguityReport,
    pub profile: ClassProfile,
    pub positive_deviation_rate: f64,
    pub files: Vec<PathBuf>,
}

/// Tracks written files so a failing stage can clean up after itself.
struct ArtifactWriter {
    dir: PathBuf,
    header: String,
    files: Vec<PathBuf>,
}

impl ArtifactWriter {
    fn create(&mut self, name: &str) -> Result<std::fs::File> {
        let path = self.dir.join(name);
        let mut f = std::fs::File::create(&path)?;
        f.write_all(self.header.as_bytes())?;
        self.files.push(path);
        Ok(f)
    }

    fn remove_all(&self) {
        for path in &self.files {
            let _ = std::fs::remove_file(path);
        }
    }
}

fn stage<T>(name: &'static str, result: Result<T>) -> Result<T> {
    result.map_err(|e| e.in_stage(name))
}

/// Run the whole batch on an already-loaded dataset. `load_report`, when
/// given, is echoed into the artifacts so dropped rows stay visible.
pub fn run_pipeline(
    config: &RunConfig,
    dataset: &Dataset,
    load_report: Option<&LoadReport>,
    out_dir: &Path,
) -> Result<PipelineResult> {
    let seed = config
        .seed
        .ok_or_else(|| Error::Config("pipeline needs a seed".into()))?;
    let s = config
        .superclasses
        .ok_or_else(|| Error::Config("pipeline needs a superclass count".into()))?;
    config.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let mut writer = ArtifactWriter {
        dir: out_dir.to_path_buf(),
        header: provenance::header(config.hash(), seed, "pipeline"),
        files: Vec::new(),
    };
    match run_stages(config, dataset, load_report, seed, s, &mut writer) {
        Ok(result) => Ok(result),
        Err(e) => {
            writer.remove_all();
            Err(e)
        }
    }
}

fn run_stages(
    config: &RunConfig,
    dataset: &Dataset,
    load_report: Option<&LoadReport>,
    seed: u64,
    s: usize,
    writer: &mut ArtifactWriter,
) -> Result<PipelineResult> {
    let schema = &dataset.schema;

    let d = stage(
        "encode",
        DisjunctiveTable::encode(&dataset.categorical, schema),
    )?;
    let dc = stage(
        "adjust",
        AdjustedTable::adjust(&d, config.empty_modality_policy),
    )?;

    let spec = config.grid_spec()?;
    let sched = config.schedule_for(dc.n() + dc.m())?;
    let model = stage("train", model::train(&dc, spec, &sched, seed))?;

    let individual_units = stage("classify", model::classify_individuals(&model, &dc))?;
    let modality_units = stage("classify", model::classify_modalities(&model, &dc))?;

    let dendrogram = stage(
        "superclass",
        superclass::hierarchical_cluster(&model.codebook, config.linkage, None),
    )?;
    let sc = stage("superclass", superclass::cut(&dendrogram, s))?;
    let contiguity = stage("superclass", superclass::contiguity_report(&sc, &spec))?;

    let profile = stage(
        "profile",
        superclass::compose_profile(&d, &dataset.quantitative, &individual_units, &sc),
    )?;
    let labels = superclass::individual_labels(&individual_units, &sc);
    let modality_pairs: Vec<(usize, UnitId)> = dc
        .retained()
        .iter()
        .zip(&modality_units)
        .map(|(&orig, &u)| (orig, u))
        .collect();
    let positive_rate = superclass::positive_deviation_rate(&d, &labels, &sc, &modality_pairs);

    stage(
        "report",
        write_reports(
            config,
            dataset,
            load_report,
            &d,
            &dc,
            &model,
            &individual_units,
            &modality_units,
            &dendrogram,
            &sc,
            &contiguity,
            &profile,
            positive_rate,
            writer,
        ),
    )?;

    Ok(PipelineResult {
        model,
        individual_units,
        modality_units,
        dendrogram,
        superclasses: sc,
        contiguity,
        profile,
        positive_deviation_rate: positive_rate,
        files: writer.files.clone(),
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(v) if v.is_infinite() => "inf".to_string(),
        Some(v) => format!("{v:.4}"),
        None => "NA".to_string(),
    }
}

#[allow(clippy::too_many_arguments)]
fn write_reports(
    config: &RunConfig,
    dataset: &Dataset,
    load_report: Option<&LoadReport>,
    d: &DisjunctiveTable,
    dc: &AdjustedTable,
    model: &KdisjModel,
    individual_units: &[UnitId],
    modality_units: &[UnitId],
    dendrogram: &Dendrogram,
    sc: &SuperClassification,
    contiguity: &ContiguityReport,
    profile: &ClassProfile,
    positive_rate: f64,
    writer: &mut ArtifactWriter,
) -> Result<()> {
    let spec = *model.codebook.spec();
    let schema = &dataset.schema;

    // config echo, so a run can be reproduced from its artifacts alone
    let mut f = writer.create("config.txt")?;
    f.write_all(config.canonical_string().as_bytes())?;
    writeln!(f, "seed={}", model.seed)?;

    let mut f = writer.create("disjunctive.tsv")?;
    d.write_tsv(&mut f)?;
    let mut f = writer.create("adjusted.tsv")?;
    dc.write_tsv(&mut f)?;
    if !dc.dropped().is_empty() {
        let mut f = writer.create("dropped_modalities.tsv")?;
        writeln!(f, "modality")?;
        for label in dc.dropped() {
            writeln!(f, "{label}")?;
        }
    }
    if let Some(report) = load_report {
        if !report.dropped.is_empty() {
            let mut f = writer.create("dropped_records.tsv")?;
            writeln!(f, "row\treason")?;
            for (row, reason) in &report.dropped {
                writeln!(f, "{row}\t{reason}")?;
            }
        }
    }

    model::save_model(model, &writer.dir, &writer.header)?;
    writer.files.push(writer.dir.join("codebook.txt"));
    writer.files.push(writer.dir.join("model.meta"));

    let mut f = writer.create("assignments.tsv")?;
    writeln!(f, "id\tunit\trow\tcol\tsuperclass")?;
    for (i, u) in individual_units.iter().enumerate() {
        let (r, c) = spec.position(*u);
        writeln!(
            f,
            "{}\t{}\t{r}\t{c}\t{}",
            dataset.ids[i],
            u.index(),
            sc.labels[u.index()] + 1
        )?;
    }

    let mut f = writer.create("modalities.tsv")?;
    writeln!(f, "modality\tunit\trow\tcol\tsuperclass")?;
    for (j, u) in modality_units.iter().enumerate() {
        let (r, c) = spec.position(*u);
        writeln!(
            f,
            "{}\t{}\t{r}\t{c}\t{}",
            dc.labels()[j],
            u.index(),
            sc.labels[u.index()] + 1
        )?;
    }

    let mut f = writer.create("dendrogram.txt")?;
    writeln!(f, "step\tleft\tright\theight\tsize")?;
    for (step, m) in dendrogram.merges.iter().enumerate() {
        writeln!(
            f,
            "{step}\t{}\t{}\t{:.6}\t{}",
            m.left, m.right, m.height, m.size
        )?;
    }
    writeln!(f)?;
    writeln!(f, "# height gaps between successive merges (cut hints)")?;
    let gaps = dendrogram.height_gaps();
    for (i, gap) in gaps.iter().enumerate().rev().take(10).rev() {
        // undoing the merges after step i leaves leaves - i - 1 classes
        writeln!(f, "# S={}\tgap={gap:.6}", dendrogram.leaves - i - 1)?;
    }

    let mut f = writer.create("superclasses.tsv")?;
    writeln!(f, "unit\trow\tcol\tsuperclass")?;
    for u in 0..spec.units() {
        let (r, c) = spec.position(UnitId(u));
        writeln!(f, "{u}\t{r}\t{c}\t{}", sc.labels[u] + 1)?;
    }

    let mut f = writer.create("contiguity.tsv")?;
    writeln!(f, "superclass\tunits\tcontiguous")?;
    for (k, group) in sc.members.iter().enumerate() {
        writeln!(
            f,
            "{}\t{}\t{}",
            k + 1,
            group.len(),
            if contiguity.contiguous[k] { "yes" } else { "no" }
        )?;
    }
    writeln!(f, "# violations={}", contiguity.violations)?;

    let mut f = writer.create("sizes.tsv")?;
    writeln!(f, "superclass\tsize")?;
    for (k, size) in profile.sizes.iter().enumerate() {
        writeln!(f, "{}\t{size}", k + 1)?;
    }
    writeln!(f, "total\t{}", profile.sizes.iter().sum::<usize>())?;

    // modality percentages: modalities as rows, classes as columns, plus the
    // whole-population column; rendered to the nearest integer
    let mut f = writer.create("modality_pct.tsv")?;
    let header: Vec<String> = std::iter::once("modality".to_string())
        .chain((1..=sc.s).map(|k| k.to_string()))
        .chain(std::iter::once("total".to_string()))
        .collect();
    writeln!(f, "{}", header.join("\t"))?;
    let counts = d.column_counts();
    for m in 0..d.m() {
        let mut row = vec![schema.column_label(m)];
        for class in &profile.modality_pct {
            row.push(match class {
                Some(pct) => format!("{:.0}", pct[m]),
                None => "NA".to_string(),
            });
        }
        row.push(format!("{:.0}", 100.0 * counts[m] as f64 / d.n() as f64));
        writeln!(f, "{}", row.join("\t"))?;
    }

    let mut f = writer.create("means.tsv")?;
    let header: Vec<String> = std::iter::once("variable".to_string())
        .chain((1..=sc.s).map(|k| k.to_string()))
        .chain(std::iter::once("total".to_string()))
        .collect();
    writeln!(f, "{}", header.join("\t"))?;
    for (q, name) in schema.quantitative().iter().enumerate() {
        let mut row = vec![name.clone()];
        for class in &profile.means.means {
            row.push(fmt_opt(class.as_ref().map(|m| m[q])));
        }
        row.push(format!("{:.4}", profile.means.grand[q]));
        writeln!(f, "{}", row.join("\t"))?;
    }

    let mut f = writer.create("fstats.tsv")?;
    writeln!(f, "variable\tF\tdf_between\tdf_within")?;
    for (q, name) in schema.quantitative().iter().enumerate() {
        match &profile.fstats[q] {
            Some(stat) => writeln!(
                f,
                "{name}\t{}\t{}\t{}",
                fmt_opt(Some(stat.f)),
                stat.df_between,
                stat.df_within
            )?,
            None => writeln!(f, "{name}\tNA\tNA\tNA")?,
        }
    }

    let mut f = writer.create("deviations.tsv")?;
    let header: Vec<String> = std::iter::once("modality".to_string())
        .chain((1..=sc.s).map(|k| k.to_string()))
        .collect();
    writeln!(f, "{}", header.join("\t"))?;
    for m in 0..d.m() {
        let mut row = vec![schema.column_label(m)];
        for k in 0..sc.s {
            row.push(format!("{:.4}", profile.deviations[m][k]));
        }
        writeln!(f, "{}", row.join("\t"))?;
    }

    let mut f = writer.create("summary.txt")?;
    writeln!(f, "records={}", dataset.n())?;
    writeln!(f, "modalities={}", dc.m())?;
    writeln!(f, "units={}", spec.units())?;
    writeln!(f, "superclasses={}", sc.s)?;
    writeln!(f, "contiguity_violations={}", contiguity.violations)?;
    writeln!(f, "positive_deviation_rate={positive_rate:.4}")?;
    if let Some(report) = load_report {
        writeln!(f, "dropped_records={}", report.dropped.len())?;
    }

    // maps
    let split = match &config.split_variable {
        None => None,
        Some(name) => {
            let v = schema
                .variable_index(name)
                .ok_or_else(|| Error::Config(format!("split variable '{name}' is not in the schema")))?;
            let arity = schema.variables()[v].modalities.len();
            let ordinals: Vec<usize> = dataset
                .categorical
                .iter()
                .map(|rec| {
                    schema.variables()[v]
                        .modalities
                        .iter()
                        .position(|m| m == &rec[v])
                        .expect("dataset was validated against the schema")
                })
                .collect();
            Some((ordinals, arity))
        }
    };
    let labeled_modalities: Vec<(String, UnitId)> = dc
        .labels()
        .iter()
        .cloned()
        .zip(modality_units.iter().copied())
        .collect();
    let cells = render::assemble_cells(
        &spec,
        individual_units,
        &labeled_modalities,
        split.as_ref().map(|(o, a)| (o.as_slice(), *a)),
    )?;
    let mut f = writer.create("map.txt")?;
    f.write_all(render::render_text(&spec, &cells, None).as_bytes())?;
    let mut f = writer.create("superclass_map.txt")?;
    f.write_all(render::render_text(&spec, &cells, Some(sc)).as_bytes())?;
    let mut f = writer.create("map.svg")?;
    f.write_all(render::render_svg(&spec, &cells, Some(sc)).as_bytes())?;

    Ok(())
}
