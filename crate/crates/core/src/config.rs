//! Run configuration: a flat, diff-friendly `key = value` format with two
//! sections. Serialization and parsing round-trip field-exactly (floats
//! print in shortest round-trip form).

use thiserror::Error;

use crate::radial::Family;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("missing section [{0}]")]
    MissingSection(&'static str),
    #[error("unknown section [{0}]")]
    UnknownSection(String),
    #[error("unknown key '{key}' in section [{section}]")]
    UnknownKey { section: String, key: String },
    #[error("missing key '{key}' in section [{section}]")]
    MissingKey { section: &'static str, key: &'static str },
    #[error("bad value for '{key}': {value}")]
    BadValue { key: String, value: String },
    #[error("line {0} is not 'key = value' or '[section]': {1}")]
    Malformed(usize, String),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, ConfigError>;

/// Which analytic family the run starts from.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilySpec {
    Flat,
    ModelBall { c: f64 },
    PerturbedModel { c: f64, eps: f64, bump_center: f64, bump_width: f64 },
}

impl FamilySpec {
    /// Lowers to the geometry family; a zero-amplitude bump is the pure
    /// model.
    pub fn to_family(&self) -> Family {
        match *self {
            FamilySpec::Flat => Family::Flat,
            FamilySpec::ModelBall { c } => Family::ModelBall { c },
            FamilySpec::PerturbedModel { c, eps, bump_center, bump_width } => {
                if eps == 0.0 {
                    Family::ModelBall { c }
                } else {
                    Family::PerturbedModel { c, eps, center: bump_center, width: bump_width }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub family: FamilySpec,
    pub grid_n: usize,
    pub s_max: f64,
    pub s_buf: f64,
    pub cfl_safety: f64,
    pub t_end: f64,
    pub snapshot_cadence: f64,
    pub early_stop_residual: f64,
    pub seed: u64,
    pub out_dir: Option<String>,
    pub force: bool,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.n) {
            return Err(ConfigError::Invalid(format!("n must be 1, 2 or 3, got {}", self.n)));
        }
        if self.grid_n < crate::flow::MIN_GRID {
            return Err(ConfigError::Invalid(format!(
                "grid_n must be at least {}, got {}",
                crate::flow::MIN_GRID,
                self.grid_n
            )));
        }
        if !(self.s_buf > 0.0 && self.s_buf < self.s_max && self.s_max < 1.0) {
            return Err(ConfigError::Invalid(format!(
                "need 0 < s_buf < s_max < 1, got s_buf = {}, s_max = {}",
                self.s_buf, self.s_max
            )));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(ConfigError::Invalid(format!(
                "cfl_safety must lie in (0, 1], got {}",
                self.cfl_safety
            )));
        }
        if !(self.t_end >= 0.0) {
            return Err(ConfigError::Invalid(format!("t_end must be nonnegative, got {}", self.t_end)));
        }
        if !(self.snapshot_cadence > 0.0) {
            return Err(ConfigError::Invalid(format!(
                "snapshot_cadence must be positive, got {}",
                self.snapshot_cadence
            )));
        }
        if !(self.early_stop_residual >= 0.0) {
            return Err(ConfigError::Invalid(
                "early_stop_residual must be nonnegative (0 disables)".into(),
            ));
        }
        match self.family {
            FamilySpec::Flat => {}
            FamilySpec::ModelBall { c } => {
                if !(c > 0.0) {
                    return Err(ConfigError::Invalid(format!("c must be positive, got {c}")));
                }
            }
            FamilySpec::PerturbedModel { c, eps, bump_center, bump_width } => {
                if !(c > 0.0) {
                    return Err(ConfigError::Invalid(format!("c must be positive, got {c}")));
                }
                if !(eps >= 0.0) {
                    return Err(ConfigError::Invalid(format!("eps must be nonnegative, got {eps}")));
                }
                if !(bump_width > 0.0)
                    || bump_center - bump_width < 0.0
                    || bump_center + bump_width > self.s_buf
                {
                    return Err(ConfigError::Invalid(format!(
                        "bump [{} - {w}, {} + {w}] must sit inside [0, s_buf = {}]",
                        bump_center,
                        bump_center,
                        self.s_buf,
                        w = bump_width
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        out.push_str("[run]\n");
        out.push_str(&format!("n = {}\n", self.n));
        out.push_str(&format!("grid_n = {}\n", self.grid_n));
        out.push_str(&format!("s_max = {}\n", self.s_max));
        out.push_str(&format!("s_buf = {}\n", self.s_buf));
        out.push_str(&format!("cfl_safety = {}\n", self.cfl_safety));
        out.push_str(&format!("t_end = {}\n", self.t_end));
        out.push_str(&format!("snapshot_cadence = {}\n", self.snapshot_cadence));
        out.push_str(&format!("early_stop_residual = {}\n", self.early_stop_residual));
        out.push_str(&format!("seed = {}\n", self.seed));
        if let Some(dir) = &self.out_dir {
            out.push_str(&format!("out_dir = {dir}\n"));
        }
        out.push_str(&format!("force = {}\n", self.force));
        out.push_str("\n[family]\n");
        match &self.family {
            FamilySpec::Flat => out.push_str("kind = flat\n"),
            FamilySpec::ModelBall { c } => {
                out.push_str("kind = model_ball\n");
                out.push_str(&format!("c = {c}\n"));
            }
            FamilySpec::PerturbedModel { c, eps, bump_center, bump_width } => {
                out.push_str("kind = perturbed_model\n");
                out.push_str(&format!("c = {c}\n"));
                out.push_str(&format!("eps = {eps}\n"));
                out.push_str(&format!("bump_center = {bump_center}\n"));
                out.push_str(&format!("bump_width = {bump_width}\n"));
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut section = String::new();
        let mut run_kv: Vec<(String, String)> = Vec::new();
        let mut family_kv: Vec<(String, String)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                match section.as_str() {
                    "run" | "family" => {}
                    other => return Err(ConfigError::UnknownSection(other.to_string())),
                }
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Malformed(lineno + 1, raw.to_string()));
            };
            let kv = (key.trim().to_string(), value.trim().to_string());
            match section.as_str() {
                "run" => run_kv.push(kv),
                "family" => family_kv.push(kv),
                _ => return Err(ConfigError::Malformed(lineno + 1, raw.to_string())),
            }
        }
        if run_kv.is_empty() {
            return Err(ConfigError::MissingSection("run"));
        }
        if family_kv.is_empty() {
            return Err(ConfigError::MissingSection("family"));
        }

        fn take(
            kvs: &mut Vec<(String, String)>,
            section: &'static str,
            key: &'static str,
        ) -> Result<String> {
            let idx = kvs
                .iter()
                .position(|(k, _)| k == key)
                .ok_or(ConfigError::MissingKey { section, key })?;
            Ok(kvs.remove(idx).1)
        }
        fn take_opt(kvs: &mut Vec<(String, String)>, key: &str) -> Option<String> {
            kvs.iter().position(|(k, _)| k == key).map(|i| kvs.remove(i).1)
        }
        fn num<T: std::str::FromStr>(key: &str, v: String) -> Result<T> {
            v.parse().map_err(|_| ConfigError::BadValue { key: key.into(), value: v })
        }

        let n = num("n", take(&mut run_kv, "run", "n")?)?;
        let grid_n = num("grid_n", take(&mut run_kv, "run", "grid_n")?)?;
        let s_max = num("s_max", take(&mut run_kv, "run", "s_max")?)?;
        let s_buf = num("s_buf", take(&mut run_kv, "run", "s_buf")?)?;
        let cfl_safety = num("cfl_safety", take(&mut run_kv, "run", "cfl_safety")?)?;
        let t_end = num("t_end", take(&mut run_kv, "run", "t_end")?)?;
        let snapshot_cadence =
            num("snapshot_cadence", take(&mut run_kv, "run", "snapshot_cadence")?)?;
        let early_stop_residual =
            num("early_stop_residual", take(&mut run_kv, "run", "early_stop_residual")?)?;
        let seed = num("seed", take(&mut run_kv, "run", "seed")?)?;
        let out_dir = take_opt(&mut run_kv, "out_dir");
        let force = match take(&mut run_kv, "run", "force")?.as_str() {
            "true" => true,
            "false" => false,
            other => {
                return Err(ConfigError::BadValue { key: "force".into(), value: other.into() })
            }
        };
        if let Some((key, _)) = run_kv.first() {
            return Err(ConfigError::UnknownKey { section: "run".into(), key: key.clone() });
        }

        let kind = take(&mut family_kv, "family", "kind")?;
        let family = match kind.as_str() {
            "flat" => FamilySpec::Flat,
            "model_ball" => FamilySpec::ModelBall {
                c: num("c", take(&mut family_kv, "family", "c")?)?,
            },
            "perturbed_model" => FamilySpec::PerturbedModel {
                c: num("c", take(&mut family_kv, "family", "c")?)?,
                eps: num("eps", take(&mut family_kv, "family", "eps")?)?,
                bump_center: num("bump_center", take(&mut family_kv, "family", "bump_center")?)?,
                bump_width: num("bump_width", take(&mut family_kv, "family", "bump_width")?)?,
            },
            other => {
                return Err(ConfigError::BadValue { key: "kind".into(), value: other.into() })
            }
        };
        if let Some((key, _)) = family_kv.first() {
            return Err(ConfigError::UnknownKey { section: "family".into(), key: key.clone() });
        }

        Ok(RunConfig {
            n,
            family,
            grid_n,
            s_max,
            s_buf,
            cfl_safety,
            t_end,
            snapshot_cadence,
            early_stop_residual,
            seed,
            out_dir,
            force,
        })
    }
}
