//! Flat `key = value` experiment configuration.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::capillary::{CapillaryAngle, DEFAULT_SIN_MIN};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    AffineRecovery,
    LiouvilleLinearGrowth,
    LiouvilleOneSided,
    GradientBoundSweep,
    AngleSweep,
    MinimizerTest,
    ConormalCheck,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::AffineRecovery,
        Scenario::LiouvilleLinearGrowth,
        Scenario::LiouvilleOneSided,
        Scenario::GradientBoundSweep,
        Scenario::AngleSweep,
        Scenario::MinimizerTest,
        Scenario::ConormalCheck,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::AffineRecovery => "affine-recovery",
            Scenario::LiouvilleLinearGrowth => "liouville-linear-growth",
            Scenario::LiouvilleOneSided => "liouville-one-sided",
            Scenario::GradientBoundSweep => "gradient-bound-sweep",
            Scenario::AngleSweep => "angle-sweep",
            Scenario::MinimizerTest => "minimizer-test",
            Scenario::ConormalCheck => "conormal-check",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scenario `{s}`")))
    }
}

/// One experiment's parameters. Every key has a default, so an empty file
/// is a valid configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub dim: usize,
    pub theta_rad: f64,
    pub r_levels: Vec<f64>,
    /// Mesh width per level; when empty each level uses `r / 16`.
    pub h_levels: Vec<f64>,
    /// Linear-growth constant `C0` the data must respect.
    pub c0: f64,
    pub perturb_amp: f64,
    pub perturb_decay: f64,
    pub l_slope: Vec<f64>,
    pub l_offset: f64,
    pub seed: u64,
    pub out_csv: Option<PathBuf>,
    pub strict_angle_range: bool,
    pub sin_min: f64,
    /// Dimension used for the admissible-angle check of the gradient sweep.
    pub range_n: usize,
    /// Tangential slope `b'` of the background affine solution.
    pub base_slope: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scenario: Scenario::AffineRecovery,
            dim: 2,
            theta_rad: std::f64::consts::FRAC_PI_3,
            r_levels: vec![4.0, 8.0, 16.0],
            h_levels: Vec::new(),
            c0: 2.0,
            perturb_amp: 0.1,
            perturb_decay: 1.0,
            l_slope: Vec::new(),
            l_offset: 0.0,
            seed: 0,
            out_csv: None,
            strict_angle_range: false,
            sin_min: DEFAULT_SIN_MIN,
            range_n: 4,
            base_slope: 0.0,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("key `{key}`: cannot parse `{value}`")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| parse_num(key, v.trim())).collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("key `{key}`: expected a boolean, got `{value}`"))),
    }
}

impl ExperimentConfig {
    /// Parses the `key = value` format; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "scenario" => self.scenario = value.parse()?,
            "dim" => self.dim = parse_num(key, value)?,
            "theta_rad" => self.theta_rad = parse_num(key, value)?,
            "r_levels" => self.r_levels = parse_list(key, value)?,
            "h_levels" => self.h_levels = parse_list(key, value)?,
            "c0" => self.c0 = parse_num(key, value)?,
            "perturb_amp" => self.perturb_amp = parse_num(key, value)?,
            "perturb_decay" => self.perturb_decay = parse_num(key, value)?,
            "L_slope" => self.l_slope = parse_list(key, value)?,
            "L_offset" => self.l_offset = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "out_csv" => self.out_csv = (!value.is_empty()).then(|| PathBuf::from(value)),
            "strict_angle_range" => self.strict_angle_range = parse_bool(key, value)?,
            "sin_min" => self.sin_min = parse_num(key, value)?,
            "range_n" => self.range_n = parse_num(key, value)?,
            "base_slope" => self.base_slope = parse_num(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !matches!(self.dim, 1 | 2) {
            return Err(Error::Config(format!("dim must be 1 or 2, got {}", self.dim)));
        }
        if !(self.sin_min > 0.0 && self.sin_min < 1.0) {
            return Err(Error::Config(format!("sin_min must lie in (0, 1), got {}", self.sin_min)));
        }
        self.angle()?;
        if self.r_levels.is_empty() && self.h_levels.is_empty() {
            return Err(Error::Config("r_levels must not be empty".into()));
        }
        if self.r_levels.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::Config("r_levels must be positive".into()));
        }
        if self.r_levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("r_levels must be strictly increasing".into()));
        }
        if self.h_levels.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
            return Err(Error::Config("h_levels must be positive".into()));
        }
        let per_level = !matches!(self.scenario, Scenario::ConormalCheck | Scenario::AngleSweep);
        if per_level && !self.h_levels.is_empty() && self.h_levels.len() != self.r_levels.len() {
            return Err(Error::Config(format!(
                "h_levels has {} entries for {} r_levels",
                self.h_levels.len(),
                self.r_levels.len()
            )));
        }
        if self.l_slope.len() > self.dim {
            return Err(Error::Config(format!("L_slope has {} entries for dim {}", self.l_slope.len(), self.dim)));
        }
        if !(self.c0 > 0.0) || !self.perturb_amp.is_finite() || !self.perturb_decay.is_finite() {
            return Err(Error::Config("c0 must be positive and perturbation parameters finite".into()));
        }
        if self.range_n < 2 {
            return Err(Error::Config(format!("range_n must be at least 2, got {}", self.range_n)));
        }
        Ok(())
    }

    pub fn angle(&self) -> Result<CapillaryAngle> {
        CapillaryAngle::with_floor(self.theta_rad, self.sin_min)
            .map_err(|e| Error::Config(format!("theta_rad: {e}")))
    }

    /// Mesh width for level `k`.
    pub fn h_at(&self, k: usize) -> f64 {
        self.h_levels.get(k).copied().unwrap_or_else(|| self.r_levels[k] / 16.0)
    }

    /// `L` slope padded to `dim` components.
    pub fn l_slope_full(&self) -> Vec<f64> {
        let mut s = self.l_slope.clone();
        s.resize(self.dim, 0.0);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse_from_empty() {
        assert_eq!(ExperimentConfig::parse("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn parses_documented_keys() {
        let text = "# comment\nscenario = liouville-one-sided\ndim = 1\ntheta_rad = 1.2\nr_levels = 2, 4\nh_levels = 0.5,0.25\n\
                    c0 = 3\nperturb_amp = 0.2\nperturb_decay = 0.5\nL_slope = 0.0001\nL_offset = 1\nseed = 42\n\
                    out_csv = out.csv\nstrict_angle_range = true\nsin_min = 0.1\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.scenario, Scenario::LiouvilleOneSided);
        assert_eq!(cfg.r_levels, vec![2.0, 4.0]);
        assert_eq!(cfg.h_at(1), 0.25);
        assert_eq!(cfg.seed, 42);
        assert!(cfg.strict_angle_range);
        assert_eq!(cfg.out_csv, Some(PathBuf::from("out.csv")));
        assert_eq!(cfg.l_slope_full(), vec![0.0001]);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = ExperimentConfig::parse("thetta = 1.0").unwrap_err();
        assert!(err.to_string().contains("thetta"));
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ExperimentConfig::parse("r_levels = 4, 2").is_err());
        assert!(ExperimentConfig::parse("dim = 3").is_err());
        assert!(ExperimentConfig::parse("theta_rad = 0.01").is_err());
        assert!(ExperimentConfig::parse("scenario = nope").is_err());
        assert!(ExperimentConfig::parse("just text").is_err());
        assert!(ExperimentConfig::parse("h_levels = 0.1").is_err());
    }
}
