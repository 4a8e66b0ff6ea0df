//! Run configuration: plain-text `key=value` lines, unknown keys rejected.
//! CLI flags mirror these keys and override the file.

use std::path::Path;
use std::str::FromStr;

use crate::coding::EmptyColumnPolicy;
use crate::dataset::RecordPolicy;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, Topology};
use crate::provenance::fnv1a64;
use crate::som::Schedule;
use crate::superclass::Linkage;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub rows: usize,
    pub cols: usize,
    pub topology: Topology,
    /// Training iterations; defaults to 20x the number of drawable items.
    pub total_steps: Option<usize>,
    pub eps0: f64,
    pub eps_min: f64,
    /// Initial neighborhood radius; defaults to max(rows, cols) / 2.
    pub radius0: Option<usize>,
    pub seed: Option<u64>,
    pub superclasses: Option<usize>,
    pub linkage: Linkage,
    pub empty_modality_policy: EmptyColumnPolicy,
    pub record_policy: RecordPolicy,
    /// Variable whose per-unit modality counts are appended to rendered
    /// cell counts as `count(a,b)`.
    pub split_variable: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            rows: 7,
            cols: 7,
            topology: Topology::Rectangle,
            total_steps: None,
            eps0: 0.5,
            eps_min: 0.01,
            radius0: None,
            seed: None,
            superclasses: None,
            linkage: Linkage::Ward,
            empty_modality_policy: EmptyColumnPolicy::Error,
            record_policy: RecordPolicy::Error,
            split_variable: None,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value '{value}' for key '{key}'")))
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read '{}': {e}", path.display())))?;
        Self::from_kv_lines(&text)
    }

    pub fn from_kv_lines(text: &str) -> Result<Self> {
        let mut config = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key=value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "rows" => config.rows = parse(key, value)?,
                "cols" => config.cols = parse(key, value)?,
                "topology" => config.topology = Topology::from_str(value)?,
                "total_steps" => config.total_steps = Some(parse(key, value)?),
                "eps0" => config.eps0 = parse(key, value)?,
                "eps_min" => config.eps_min = parse(key, value)?,
                "radius0" => config.radius0 = Some(parse(key, value)?),
                "seed" => config.seed = Some(parse(key, value)?),
                "superclasses" => config.superclasses = Some(parse(key, value)?),
                "linkage" => config.linkage = Linkage::from_str(value)?,
                "empty_modality_policy" => {
                    config.empty_modality_policy = EmptyColumnPolicy::from_str(value)?
                }
                "record_policy" => config.record_policy = RecordPolicy::from_str(value)?,
                "split_variable" => config.split_variable = Some(value.to_string()),
                other => return Err(Error::Config(format!("unknown config key '{other}'"))),
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid_spec()?;
        if let Some(s) = self.superclasses {
            let units = self.rows * self.cols;
            if s < 1 || s > units {
                return Err(Error::Config(format!(
                    "superclasses {s} must be in [1, {units}]"
                )));
            }
        }
        if let Some(t) = self.total_steps {
            if t == 0 {
                return Err(Error::Config("total_steps must be positive".into()));
            }
        }
        // surfaces bad eps bounds without needing an item count
        Schedule::new(1, self.eps0, self.eps_min, self.radius0.unwrap_or(0))?;
        Ok(())
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.rows, self.cols, self.topology)
    }

    /// Schedule for a training run over `items` drawable items.
    pub fn schedule_for(&self, items: usize) -> Result<Schedule> {
        let total = self.total_steps.unwrap_or(20 * items.max(1));
        let radius0 = self.radius0.unwrap_or(self.rows.max(self.cols) / 2);
        Schedule::new(total, self.eps0, self.eps_min, radius0)
    }

    /// Canonical `key=value` serialization used for hashing and for the
    /// config echo artifact. The seed is excluded; it travels separately in
    /// every provenance header.
    pub fn canonical_string(&self) -> String {
        let fmt_opt_usize = |v: Option<usize>| match v {
            Some(v) => v.to_string(),
            None => "auto".to_string(),
        };
        let mut out = String::new();
        out.push_str(&format!("rows={}\n", self.rows));
        out.push_str(&format!("cols={}\n", self.cols));
        out.push_str(&format!("topology={}\n", self.topology));
        out.push_str(&format!("total_steps={}\n", fmt_opt_usize(self.total_steps)));
        out.push_str(&format!("eps0={}\n", self.eps0));
        out.push_str(&format!("eps_min={}\n", self.eps_min));
        out.push_str(&format!("radius0={}\n", fmt_opt_usize(self.radius0)));
        out.push_str(&format!(
            "superclasses={}\n",
            fmt_opt_usize(self.superclasses)
        ));
        out.push_str(&format!("linkage={}\n", self.linkage));
        out.push_str(&format!(
            "empty_modality_policy={}\n",
            match self.empty_modality_policy {
                EmptyColumnPolicy::Error => "error",
                EmptyColumnPolicy::Drop => "drop",
            }
        ));
        out.push_str(&format!(
            "record_policy={}\n",
            match self.record_policy {
                RecordPolicy::Error => "error",
                RecordPolicy::Drop => "drop",
            }
        ));
        out.push_str(&format!(
            "split_variable={}\n",
            self.split_variable.as_deref().unwrap_or("none")
        ));
        out
    }

    pub fn hash(&self) -> u64 {
        fnv1a64(self.canonical_string().as_bytes())
    }
}
