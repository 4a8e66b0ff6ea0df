//! Batch CLI over the library: encode, train, regroup, profile, render,
//! run the whole pipeline, or generate synthetic data.
//!
//! Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use kdisj::coding::{AdjustedTable, DisjunctiveTable, EmptyColumnPolicy};
use kdisj::config::RunConfig;
use kdisj::dataset::{self, Dataset, LoadReport, RecordPolicy};
use kdisj::error::{Error, Result};
use kdisj::grid::{Topology, UnitId};
use kdisj::model::{self, KdisjModel};
use kdisj::provenance;
use kdisj::render;
use kdisj::som;
use kdisj::superclass::{self, Linkage, SuperClassification};
use kdisj::synth::{self, SynthPlan};

#[derive(Parser)]
#[command(name = "kdisj", version, about = "Cluster individuals and the modalities of their qualitative variables onto one topological grid")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TrainMode {
    Kdisj,
    Quantitative,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Error,
    Drop,
}

impl From<PolicyArg> for RecordPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Error => RecordPolicy::Error,
            PolicyArg::Drop => RecordPolicy::Drop,
        }
    }
}

impl From<PolicyArg> for EmptyColumnPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Error => EmptyColumnPolicy::Error,
            PolicyArg::Drop => EmptyColumnPolicy::Drop,
        }
    }
}

/// Flags shared by every command that reads a data file.
#[derive(Args)]
struct DataArgs {
    /// Comma-delimited data file with a header row
    #[arg(long)]
    data: PathBuf,
    /// Schema file (one variable per line: name, role, modalities)
    #[arg(long)]
    schema: PathBuf,
    /// How to treat records that violate the schema (default: error, or the
    /// config file's record_policy where one applies)
    #[arg(long, value_enum)]
    record_policy: Option<PolicyArg>,
}

impl DataArgs {
    fn policy_or(&self, fallback: RecordPolicy) -> RecordPolicy {
        self.record_policy.map(Into::into).unwrap_or(fallback)
    }
}

/// Flags mirroring the RunConfig keys.
#[derive(Args)]
struct ConfigArgs {
    /// Config file of key=value lines; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    #[arg(long)]
    topology: Option<String>,
    #[arg(long)]
    total_steps: Option<usize>,
    #[arg(long)]
    eps0: Option<f64>,
    #[arg(long)]
    eps_min: Option<f64>,
    #[arg(long)]
    radius0: Option<usize>,
    #[arg(long)]
    superclasses: Option<usize>,
    #[arg(long)]
    linkage: Option<String>,
    #[arg(long, value_enum)]
    empty_policy: Option<PolicyArg>,
    #[arg(long)]
    split_variable: Option<String>,
}

impl ConfigArgs {
    fn resolve(&self, seed: Option<u64>) -> Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.rows {
            config.rows = v;
        }
        if let Some(v) = self.cols {
            config.cols = v;
        }
        if let Some(v) = &self.topology {
            config.topology = v.parse::<Topology>()?;
        }
        if let Some(v) = self.total_steps {
            config.total_steps = Some(v);
        }
        if let Some(v) = self.eps0 {
            config.eps0 = v;
        }
        if let Some(v) = self.eps_min {
            config.eps_min = v;
        }
        if let Some(v) = self.radius0 {
            config.radius0 = Some(v);
        }
        if let Some(v) = self.superclasses {
            config.superclasses = Some(v);
        }
        if let Some(v) = &self.linkage {
            config.linkage = v.parse::<Linkage>()?;
        }
        if let Some(v) = self.empty_policy {
            config.empty_modality_policy = v.into();
        }
        if let Some(v) = &self.split_variable {
            config.split_variable = Some(v.clone());
        }
        if seed.is_some() {
            config.seed = seed;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Encode a dataset into the disjunctive and adjusted tables
    Encode {
        #[command(flatten)]
        data: DataArgs,
        /// How to treat modalities nobody picked
        #[arg(long, value_enum, default_value = "error")]
        empty_policy: PolicyArg,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a map on a dataset
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        config: ConfigArgs,
        /// Joint categorical training or plain quantitative training
        #[arg(long, value_enum, default_value = "kdisj")]
        mode: TrainMode,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Regroup a trained map's units into super classes
    Superclass {
        /// Directory holding codebook.txt and model.meta
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        superclasses: usize,
        #[arg(long, default_value = "ward")]
        linkage: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Class-profile reports for a trained map and its super classes
    Profile {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        /// superclasses.tsv written by the superclass command
        #[arg(long)]
        superclasses: PathBuf,
        #[arg(long, value_enum, default_value = "error")]
        empty_policy: PolicyArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render the map of classified modalities and individual counts
    Render {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        /// Optional superclasses.tsv to color and number the cells
        #[arg(long)]
        superclasses: Option<PathBuf>,
        /// Variable whose per-cell counts are split out as count(a,b)
        #[arg(long)]
        split_variable: Option<String>,
        #[arg(long, value_enum, default_value = "error")]
        empty_policy: PolicyArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the whole batch: encode, train, classify, regroup, profile, render
    Pipeline {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        config: ConfigArgs,
        /// Training seed; overrides the config file's seed
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a seeded synthetic dataset with planted clusters
    Synth {
        /// Plan file declaring variables, clusters and distributions
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_data(args: &DataArgs) -> Result<(Dataset, LoadReport)> {
    let schema = dataset::load_schema(&args.schema)?;
    dataset::load_dataset(&args.data, &schema, args.policy_or(RecordPolicy::Error))
}

fn create_with_header(path: &Path, header: &str) -> Result<std::fs::File> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(header.as_bytes())?;
    Ok(f)
}

fn read_superclasses(path: &Path, units: usize) -> Result<SuperClassification> {
    let text = std::fs::read_to_string(path)?;
    let mut labels = vec![usize::MAX; units];
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("unit\t") {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(Error::Data(format!("bad superclasses line '{line}'")));
        }
        let unit: usize = fields[0]
            .parse()
            .map_err(|_| Error::Data(format!("bad unit '{}'", fields[0])))?;
        let class: usize = fields[3]
            .parse()
            .map_err(|_| Error::Data(format!("bad superclass '{}'", fields[3])))?;
        if unit >= units || class == 0 {
            return Err(Error::Data(format!("superclasses row out of range: '{line}'")));
        }
        labels[unit] = class - 1;
    }
    if labels.iter().any(|&l| l == usize::MAX) {
        return Err(Error::Data("superclasses file does not cover every unit".into()));
    }
    let s = labels.iter().max().unwrap() + 1;
    let mut members = vec![Vec::new(); s];
    for (unit, &label) in labels.iter().enumerate() {
        members[label].push(UnitId(unit));
    }
    if members.iter().any(|g| g.is_empty()) {
        return Err(Error::Data("superclasses file skips a class number".into()));
    }
    Ok(SuperClassification { s, labels, members })
}

fn check_schema_hash(model: &KdisjModel, dc: &AdjustedTable) -> Result<()> {
    if model.schema_hash != dc.schema_hash() {
        return Err(Error::Data(
            "schema does not match the one the model was trained with".into(),
        ));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Encode {
            data,
            empty_policy,
            out,
        } => {
            let (ds, report) = load_data(&data)?;
            let d = DisjunctiveTable::encode(&ds.categorical, &ds.schema)?;
            let dc = AdjustedTable::adjust(&d, empty_policy.into())?;
            std::fs::create_dir_all(&out)?;
            let header = provenance::header(ds.schema.hash(), 0, "encode");
            let mut f = create_with_header(&out.join("disjunctive.tsv"), &header)?;
            d.write_tsv(&mut f)?;
            let mut f = create_with_header(&out.join("adjusted.tsv"), &header)?;
            dc.write_tsv(&mut f)?;
            if !dc.dropped().is_empty() {
                let mut f = create_with_header(&out.join("dropped_modalities.tsv"), &header)?;
                writeln!(f, "modality")?;
                for label in dc.dropped() {
                    writeln!(f, "{label}")?;
                }
            }
            if !report.dropped.is_empty() {
                eprintln!("dropped {} records", report.dropped.len());
            }
            println!(
                "encoded {} records into {}x{} (adjusted: {} columns)",
                ds.n(),
                d.n(),
                d.m(),
                dc.m()
            );
            Ok(())
        }
        Command::Train {
            data,
            config,
            mode,
            seed,
            out,
        } => {
            let run_config = config.resolve(Some(seed))?;
            let schema = dataset::load_schema(&data.schema)?;
            let (ds, report) = dataset::load_dataset(
                &data.data,
                &schema,
                data.policy_or(run_config.record_policy),
            )?;
            if !report.dropped.is_empty() {
                eprintln!("dropped {} records", report.dropped.len());
            }
            std::fs::create_dir_all(&out)?;
            let header = provenance::header(run_config.hash(), seed, "train");
            match mode {
                TrainMode::Kdisj => {
                    let d = DisjunctiveTable::encode(&ds.categorical, &ds.schema)?;
                    let dc = AdjustedTable::adjust(&d, run_config.empty_modality_policy)?;
                    let sched = run_config.schedule_for(dc.n() + dc.m())?;
                    let model = model::train(&dc, run_config.grid_spec()?, &sched, seed)?;
                    model::save_model(&model, &out, &header)?;
                    println!(
                        "trained {}x{} map on {} individuals and {} modalities",
                        run_config.rows,
                        run_config.cols,
                        dc.n(),
                        dc.m()
                    );
                }
                TrainMode::Quantitative => {
                    if ds.schema.quantitative().is_empty() {
                        return Err(Error::Config(
                            "quantitative training needs quantitative variables".into(),
                        ));
                    }
                    let sched = run_config.schedule_for(ds.n())?;
                    let cb = som::train_quantitative(
                        &ds.quantitative,
                        run_config.grid_spec()?,
                        &sched,
                        seed,
                    )?;
                    let mut f = create_with_header(&out.join("codebook.txt"), &header)?;
                    cb.write_to(&mut f)?;
                    println!(
                        "trained {}x{} map on {} quantitative records",
                        run_config.rows,
                        run_config.cols,
                        ds.n()
                    );
                }
            }
            Ok(())
        }
        Command::Superclass {
            model: model_dir,
            superclasses,
            linkage,
            out,
        } => {
            let model = model::load_model(&model_dir)?;
            let linkage: Linkage = linkage.parse()?;
            let spec = *model.codebook.spec();
            let dendro = superclass::hierarchical_cluster(&model.codebook, linkage, None)?;
            let sc = superclass::cut(&dendro, superclasses)?;
            let contiguity = superclass::contiguity_report(&sc, &spec)?;
            std::fs::create_dir_all(&out)?;
            let header = provenance::header(model.schema_hash, model.seed, "superclass");
            let mut f = create_with_header(&out.join("dendrogram.txt"), &header)?;
            writeln!(f, "step\tleft\tright\theight\tsize")?;
            for (step, m) in dendro.merges.iter().enumerate() {
                writeln!(f, "{step}\t{}\t{}\t{:.6}\t{}", m.left, m.right, m.height, m.size)?;
            }
            let mut f = create_with_header(&out.join("superclasses.tsv"), &header)?;
            writeln!(f, "unit\trow\tcol\tsuperclass")?;
            for u in 0..spec.units() {
                let (r, c) = spec.position(UnitId(u));
                writeln!(f, "{u}\t{r}\t{c}\t{}", sc.labels[u] + 1)?;
            }
            let mut f = create_with_header(&out.join("contiguity.tsv"), &header)?;
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
            println!(
                "cut {} units into {} super classes ({} contiguity violations)",
                spec.units(),
                sc.s,
                contiguity.violations
            );
            Ok(())
        }
        Command::Profile {
            model: model_dir,
            data,
            superclasses,
            empty_policy,
            out,
        } => {
            let model = model::load_model(&model_dir)?;
            let (ds, _) = load_data(&data)?;
            let d = DisjunctiveTable::encode(&ds.categorical, &ds.schema)?;
            let dc = AdjustedTable::adjust(&d, empty_policy.into())?;
            check_schema_hash(&model, &dc)?;
            let sc = read_superclasses(&superclasses, model.codebook.spec().units())?;
            let individual_units = model::classify_individuals(&model, &dc)?;
            let modality_units = model::classify_modalities(&model, &dc)?;
            let profile =
                superclass::compose_profile(&d, &ds.quantitative, &individual_units, &sc)?;
            let labels = superclass::individual_labels(&individual_units, &sc);
            let pairs: Vec<(usize, UnitId)> = dc
                .retained()
                .iter()
                .zip(&modality_units)
                .map(|(&orig, &u)| (orig, u))
                .collect();
            let rate = superclass::positive_deviation_rate(&d, &labels, &sc, &pairs);
            std::fs::create_dir_all(&out)?;
            let header = provenance::header(model.schema_hash, model.seed, "profile");

            let mut f = create_with_header(&out.join("sizes.tsv"), &header)?;
            writeln!(f, "superclass\tsize")?;
            for (k, size) in profile.sizes.iter().enumerate() {
                writeln!(f, "{}\t{size}", k + 1)?;
            }
            writeln!(f, "total\t{}", profile.sizes.iter().sum::<usize>())?;

            let mut f = create_with_header(&out.join("modality_pct.tsv"), &header)?;
            let head: Vec<String> = std::iter::once("modality".to_string())
                .chain((1..=sc.s).map(|k| k.to_string()))
                .chain(std::iter::once("total".to_string()))
                .collect();
            writeln!(f, "{}", head.join("\t"))?;
            let counts = d.column_counts();
            for m in 0..d.m() {
                let mut row = vec![ds.schema.column_label(m)];
                for class in &profile.modality_pct {
                    row.push(match class {
                        Some(pct) => format!("{:.0}", pct[m]),
                        None => "NA".to_string(),
                    });
                }
                row.push(format!("{:.0}", 100.0 * counts[m] as f64 / d.n() as f64));
                writeln!(f, "{}", row.join("\t"))?;
            }

            let mut f = create_with_header(&out.join("means.tsv"), &header)?;
            let head: Vec<String> = std::iter::once("variable".to_string())
                .chain((1..=sc.s).map(|k| k.to_string()))
                .chain(std::iter::once("total".to_string()))
                .collect();
            writeln!(f, "{}", head.join("\t"))?;
            for (q, name) in ds.schema.quantitative().iter().enumerate() {
                let mut row = vec![name.clone()];
                for class in &profile.means.means {
                    row.push(match class {
                        Some(m) => format!("{:.4}", m[q]),
                        None => "NA".to_string(),
                    });
                }
                row.push(format!("{:.4}", profile.means.grand[q]));
                writeln!(f, "{}", row.join("\t"))?;
            }

            let mut f = create_with_header(&out.join("fstats.tsv"), &header)?;
            writeln!(f, "variable\tF\tdf_between\tdf_within")?;
            for (q, name) in ds.schema.quantitative().iter().enumerate() {
                match &profile.fstats[q] {
                    Some(stat) => {
                        let fval = if stat.f.is_infinite() {
                            "inf".to_string()
                        } else {
                            format!("{:.4}", stat.f)
                        };
                        writeln!(f, "{name}\t{fval}\t{}\t{}", stat.df_between, stat.df_within)?
                    }
                    None => writeln!(f, "{name}\tNA\tNA\tNA")?,
                }
            }

            let mut f = create_with_header(&out.join("deviations.tsv"), &header)?;
            let head: Vec<String> = std::iter::once("modality".to_string())
                .chain((1..=sc.s).map(|k| k.to_string()))
                .collect();
            writeln!(f, "{}", head.join("\t"))?;
            for m in 0..d.m() {
                let mut row = vec![ds.schema.column_label(m)];
                for k in 0..sc.s {
                    row.push(format!("{:.4}", profile.deviations[m][k]));
                }
                writeln!(f, "{}", row.join("\t"))?;
            }

            println!(
                "profiled {} super classes over {} records (positive deviation rate {:.2})",
                sc.s,
                ds.n(),
                rate
            );
            Ok(())
        }
        Command::Render {
            model: model_dir,
            data,
            superclasses,
            split_variable,
            empty_policy,
            out,
        } => {
            let model = model::load_model(&model_dir)?;
            let (ds, _) = load_data(&data)?;
            let d = DisjunctiveTable::encode(&ds.categorical, &ds.schema)?;
            let dc = AdjustedTable::adjust(&d, empty_policy.into())?;
            check_schema_hash(&model, &dc)?;
            let spec = *model.codebook.spec();
            let sc = match &superclasses {
                Some(path) => Some(read_superclasses(path, spec.units())?),
                None => None,
            };
            let individual_units = model::classify_individuals(&model, &dc)?;
            let modality_units = model::classify_modalities(&model, &dc)?;
            let split = match &split_variable {
                None => None,
                Some(name) => {
                    let v = ds.schema.variable_index(name).ok_or_else(|| {
                        Error::Config(format!("split variable '{name}' is not in the schema"))
                    })?;
                    let arity = ds.schema.variables()[v].modalities.len();
                    let ordinals: Vec<usize> = ds
                        .categorical
                        .iter()
                        .map(|rec| {
                            ds.schema.variables()[v]
                                .modalities
                                .iter()
                                .position(|m| m == &rec[v])
                                .expect("validated at load")
                        })
                        .collect();
                    Some((ordinals, arity))
                }
            };
            let labeled: Vec<(String, UnitId)> = dc
                .labels()
                .iter()
                .cloned()
                .zip(modality_units.iter().copied())
                .collect();
            let cells = render::assemble_cells(
                &spec,
                &individual_units,
                &labeled,
                split.as_ref().map(|(o, a)| (o.as_slice(), *a)),
            )?;
            std::fs::create_dir_all(&out)?;
            let header = provenance::header(model.schema_hash, model.seed, "render");
            let mut f = create_with_header(&out.join("map.txt"), &header)?;
            f.write_all(render::render_text(&spec, &cells, sc.as_ref()).as_bytes())?;
            let mut f = create_with_header(&out.join("map.svg"), &header)?;
            f.write_all(render::render_svg(&spec, &cells, sc.as_ref()).as_bytes())?;
            println!("rendered {} units", spec.units());
            Ok(())
        }
        Command::Pipeline {
            data,
            config,
            seed,
            out,
        } => {
            let run_config = config.resolve(seed)?;
            if run_config.seed.is_none() {
                return Err(Error::Config(
                    "pipeline needs a seed (--seed or seed= in the config file)".into(),
                ));
            }
            if run_config.superclasses.is_none() {
                return Err(Error::Config(
                    "pipeline needs a superclass count (--superclasses or superclasses=)".into(),
                ));
            }
            let schema = dataset::load_schema(&data.schema)?;
            let (ds, report) = dataset::load_dataset(
                &data.data,
                &schema,
                data.policy_or(run_config.record_policy),
            )?;
            let result = kdisj::pipeline::run_pipeline(&run_config, &ds, Some(&report), &out)?;
            println!(
                "pipeline complete: {} records, {} super classes, {} contiguity violations, {} files",
                ds.n(),
                result.superclasses.s,
                result.contiguity.violations,
                result.files.len()
            );
            Ok(())
        }
        Command::Synth { plan, seed, out } => {
            let plan = SynthPlan::from_file(&plan)?;
            let (ds, labels) = synth::generate(&plan, seed);
            std::fs::create_dir_all(&out)?;
            let hash = kdisj::provenance::fnv1a64(format!("{plan:?}").as_bytes());
            let header = provenance::header(hash, seed, "synth");
            ds.write_csv(&out.join("data.csv"), &header)?;
            dataset::write_schema(&ds.schema, &out.join("schema.txt"), &header)?;
            synth::write_labels(&ds.ids, &labels, &out.join("labels.tsv"), &header)?;
            println!(
                "generated {} records across {} clusters",
                ds.n(),
                plan.clusters.len()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
