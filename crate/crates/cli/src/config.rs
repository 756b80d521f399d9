use std::fs;
use std::path::{Path, PathBuf};

use gpclab::de::Schedule;
use gpclab::GpcSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::exit::Failure;

/// Either an inline spec or a path to a spec file (relative to the config).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpecSource {
    Inline(GpcSpec),
    Path(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScheduleDesc {
    Full { steps: usize },
    Window { width: usize, steps_per_slide: usize },
    Cyclic { pattern: Vec<Vec<usize>>, steps: usize },
    Explicit { sets: Vec<Vec<usize>> },
}

impl ScheduleDesc {
    /// Parses `full:STEPS`, `window:WIDTH:STEPS` or `cyclic:0,1/2,3:STEPS`.
    pub fn parse(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |p: &str| p.parse::<usize>().map_err(|e| format!("bad schedule number {p:?}: {e}"));
        match parts.as_slice() {
            ["full", steps] => Ok(Self::Full { steps: num(steps)? }),
            ["window", w, k] => Ok(Self::Window {
                width: num(w)?,
                steps_per_slide: num(k)?,
            }),
            ["cyclic", pat, steps] => {
                let pattern = pat
                    .split('/')
                    .map(|g| g.split(',').map(num).collect::<Result<Vec<_>, _>>())
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Self::Cyclic {
                    pattern,
                    steps: num(steps)?,
                })
            }
            _ => Err(format!(
                "schedule {s:?} is not full:STEPS, window:WIDTH:STEPS or cyclic:GROUPS:STEPS"
            )),
        }
    }

    pub fn build(&self, positions: usize) -> gpclab::Result<Schedule> {
        match self {
            Self::Full { steps } => Schedule::full(positions, *steps),
            Self::Window {
                width,
                steps_per_slide,
            } => Schedule::window(positions, *width, *steps_per_slide),
            Self::Cyclic { pattern, steps } => Schedule::cyclic(pattern, *steps, positions),
            Self::Explicit { sets } => Schedule::new(sets.clone(), positions),
        }
    }
}

/// One run's parameters. Fields a command does not use are ignored.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<SpecSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_hi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bracket_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleDesc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_min: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root: Option<(usize, u32)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::io(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Failure::input(format!("config {}: {e}", path.display())))?;
        // spec paths are relative to the config file
        if let Some(SpecSource::Path(p)) = &cfg.spec {
            if p.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                cfg.spec = Some(SpecSource::Path(base.join(p)));
            }
        }
        Ok(cfg)
    }

    /// Replaces a spec path with the spec it points to.
    pub fn resolve_spec(&mut self) -> Result<(), Failure> {
        if let Some(SpecSource::Path(p)) = &self.spec {
            let text = fs::read_to_string(p)
                .map_err(|e| Failure::io(format!("cannot read spec {}: {e}", p.display())))?;
            let spec = GpcSpec::from_json(&text)
                .map_err(|e| Failure::input(format!("spec {}: {e}", p.display())))?;
            self.spec = Some(SpecSource::Inline(spec));
        }
        Ok(())
    }

    pub fn spec(&self) -> Result<&GpcSpec, Failure> {
        match &self.spec {
            Some(SpecSource::Inline(s)) => Ok(s),
            Some(SpecSource::Path(_)) => unreachable!("spec resolved before use"),
            None => Err(Failure::input("no spec given (use --spec or a config spec field)")),
        }
    }

    /// SHA-256 of the resolved config. The output path is left out so the
    /// same run written elsewhere hashes the same.
    pub fn hash(&self) -> String {
        let mut cfg = self.clone();
        cfg.out = None;
        let bytes = serde_json::to_vec(&cfg).expect("config serializes");
        hex(&Sha256::digest(bytes))
    }
}

pub fn spec_hash(spec: &GpcSpec) -> String {
    let bytes = serde_json::to_vec(spec).expect("spec serializes");
    hex(&Sha256::digest(bytes))[..16].to_string()
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Parses `lo:hi:step` or a comma-separated list.
pub fn parse_c_grid(s: &str) -> Result<Vec<f64>, String> {
    let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("bad number {p:?}: {e}"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let (lo, hi, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) || !(hi >= lo) {
            return Err(format!("range {s:?} needs lo <= hi and step > 0"));
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|k| lo + k as f64 * step).collect());
    }
    s.split(',').map(num).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_strings() {
        assert_eq!(ScheduleDesc::parse("full:3").unwrap(), ScheduleDesc::Full { steps: 3 });
        assert_eq!(
            ScheduleDesc::parse("window:5:4").unwrap(),
            ScheduleDesc::Window {
                width: 5,
                steps_per_slide: 4
            }
        );
        assert_eq!(
            ScheduleDesc::parse("cyclic:0/1:6").unwrap(),
            ScheduleDesc::Cyclic {
                pattern: vec![vec![0], vec![1]],
                steps: 6
            }
        );
        assert!(ScheduleDesc::parse("window:5").is_err());
    }

    #[test]
    fn c_grids() {
        assert_eq!(parse_c_grid("1:2:0.5").unwrap(), vec![1.0, 1.5, 2.0]);
        assert_eq!(parse_c_grid("3,4.5").unwrap(), vec![3.0, 4.5]);
        assert!(parse_c_grid("2:1:0.5").is_err());
    }

    #[test]
    fn hash_ignores_out_path() {
        let mut a = RunConfig {
            c: Some(6.5),
            ..RunConfig::default()
        };
        let h = a.hash();
        a.out = Some("x.csv".into());
        assert_eq!(a.hash(), h);
        a.c = Some(6.6);
        assert_ne!(a.hash(), h);
    }
}
