//! Experiment configuration: a flat `key = value` file with sections.
//!
//! Every key lives in exactly one section and can be overridden from the
//! command line by a flag of the same name. Missing keys keep their defaults,
//! which reproduce the sinusoidal-correlation experiment.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::photon::{
    self, AngularProfile, FwhmOf, PhaseFunction, PixelGrid, WindowPolicy, DEFAULT_FWHM_MRAD,
    DEFAULT_HALF_WINDOW, DEFAULT_V0,
};
use crate::tomography::ProjectorSetKind;

/// `(section, key, description)` for every recognised key, in file order.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("grid", "pixel_width_um", "SLM pixel width h in micrometers"),
    (
        "grid",
        "slm_distance_mm",
        "SLM distance D from the source in millimeters",
    ),
    ("grid", "half_window", "half window N; pixels -N..=N"),
    (
        "profile",
        "fwhm_mrad",
        "FWHM of the Gaussian angular shape in mrad",
    ),
    (
        "profile",
        "fwhm_of",
        "what the FWHM describes: intensity (|g|^2) | amplitude (|g|)",
    ),
    (
        "profile",
        "profile_table",
        "two-column |g|^2 table replacing the Gaussian (empty: none)",
    ),
    ("state", "v0", "baseline visibility in (0, 1]"),
    (
        "state",
        "phase1",
        "phase of the first preparation: zero | linear:TAU | sin:LAMBDA | table:PATH",
    ),
    ("state", "phase2", "phase of the second preparation"),
    ("sweep", "a_start", "first evolution parameter (rad/pixel)"),
    ("sweep", "a_stop", "last evolution parameter (rad/pixel)"),
    ("sweep", "a_step", "evolution parameter step (rad/pixel)"),
    (
        "tomography",
        "a_tomo",
        "evolution parameter of the reconstructed state",
    ),
    (
        "tomography",
        "projector_set",
        "overcomplete-36 | minimal-16",
    ),
    (
        "counts",
        "n_total",
        "trials per polarizer setting or projector",
    ),
    ("counts", "seed", "base RNG seed"),
    (
        "bound",
        "random_trials",
        "number of seeded random odd phases for the bound demo",
    ),
    ("output", "out", "output directory"),
];

/// Named presets with a one-line description.
pub const PRESETS: &[(&str, &str)] = &[
    (
        "fig2-sin",
        "zero vs sin(-0.6 m): revival of the trace distance near a = 0.6",
    ),
    (
        "fig2-linear",
        "zero vs linear 0.1 m: early maximum at a = 0.1, semigroup violation",
    ),
    (
        "fig3-left",
        "tomography of the purified state, f = 0 at a = 0",
    ),
    (
        "fig3-right",
        "tomography of the sinusoidally correlated state at a = 0.6",
    ),
    ("uncorrelated", "zero vs zero: no correlations, no increase"),
];

/// Engineered phase as written in a config: analytic or a table file.
#[derive(Debug, Clone, PartialEq)]
pub enum PhaseSpec {
    Analytic(PhaseFunction),
    Table(PathBuf),
}

impl PhaseSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(path) = s.strip_prefix("table:") {
            if path.trim().is_empty() {
                return Err(Error::InvalidParameter("table: needs a path".into()));
            }
            return Ok(Self::Table(PathBuf::from(path.trim())));
        }
        Ok(Self::Analytic(s.parse()?))
    }

    pub fn resolve(&self) -> Result<PhaseFunction> {
        match self {
            Self::Analytic(f) => Ok(f.clone()),
            Self::Table(path) => Ok(PhaseFunction::tabulated(photon::load_two_column(path)?)),
        }
    }
}

impl std::fmt::Display for PhaseSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Analytic(p) => f.write_str(&p.describe()),
            Self::Table(path) => write!(f, "table:{}", path.display()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub pixel_width_um: f64,
    pub slm_distance_mm: f64,
    pub half_window: usize,
    pub fwhm_mrad: f64,
    pub fwhm_of: FwhmOf,
    pub profile_table: Option<PathBuf>,
    pub v0: f64,
    pub phase1: PhaseSpec,
    pub phase2: PhaseSpec,
    pub a_start: f64,
    pub a_stop: f64,
    pub a_step: f64,
    pub a_tomo: f64,
    pub projector_set: ProjectorSetKind,
    pub n_total: u64,
    pub seed: u64,
    pub random_trials: usize,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            pixel_width_um: photon::DEFAULT_PIXEL_WIDTH_M * 1e6,
            slm_distance_mm: photon::DEFAULT_SLM_DISTANCE_M * 1e3,
            half_window: DEFAULT_HALF_WINDOW,
            fwhm_mrad: DEFAULT_FWHM_MRAD,
            fwhm_of: FwhmOf::Intensity,
            profile_table: None,
            v0: DEFAULT_V0,
            phase1: PhaseSpec::Analytic(PhaseFunction::Zero),
            phase2: PhaseSpec::Analytic(PhaseFunction::Sinusoidal {
                lambda: photon::DEFAULT_LAMBDA,
            }),
            a_start: 0.0,
            a_stop: 1.0,
            a_step: 0.01,
            a_tomo: 0.0,
            projector_set: ProjectorSetKind::Overcomplete36,
            n_total: crate::counts::DEFAULT_N_TOTAL,
            seed: 2011,
            random_trials: 20,
            out: PathBuf::from("out"),
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse::<T>()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{}'", value.trim())))
}

fn finite(key: &str, value: &str) -> Result<f64> {
    let x: f64 = num(key, value)?;
    if !x.is_finite() {
        return Err(Error::Config(format!("{key}: must be finite")));
    }
    Ok(x)
}

impl ExperimentConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let mut c = Self::default();
        let set = |c: &mut Self, f1: PhaseFunction, f2: PhaseFunction| {
            c.phase1 = PhaseSpec::Analytic(f1);
            c.phase2 = PhaseSpec::Analytic(f2);
        };
        match name {
            "fig2-sin" => {}
            "fig2-linear" => set(
                &mut c,
                PhaseFunction::Zero,
                PhaseFunction::Linear {
                    tau: photon::DEFAULT_TAU,
                },
            ),
            "fig3-left" => {
                set(&mut c, PhaseFunction::Zero, PhaseFunction::Zero);
                c.a_tomo = 0.0;
                c.n_total = 100_000;
            }
            "fig3-right" => {
                c.a_tomo = 0.6;
                c.n_total = 100_000;
            }
            "uncorrelated" => set(&mut c, PhaseFunction::Zero, PhaseFunction::Zero),
            other => {
                let names: Vec<&str> = PRESETS.iter().map(|p| p.0).collect();
                return Err(Error::Config(format!(
                    "unknown preset '{other}' (available: {})",
                    names.join(", ")
                )));
            }
        }
        c.out = PathBuf::from(format!("out/{name}"));
        Ok(c)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "pixel_width_um" => self.pixel_width_um = finite(key, v)?,
            "slm_distance_mm" => self.slm_distance_mm = finite(key, v)?,
            "half_window" => self.half_window = num(key, v)?,
            "fwhm_mrad" => self.fwhm_mrad = num(key, v)?,
            "fwhm_of" => {
                self.fwhm_of = v
                    .parse()
                    .map_err(|e| Error::Config(format!("{key}: {e}")))?
            }
            "profile_table" => self.profile_table = (!v.is_empty()).then(|| PathBuf::from(v)),
            "v0" => self.v0 = finite(key, v)?,
            "phase1" => {
                self.phase1 =
                    PhaseSpec::parse(v).map_err(|e| Error::Config(format!("{key}: {e}")))?
            }
            "phase2" => {
                self.phase2 =
                    PhaseSpec::parse(v).map_err(|e| Error::Config(format!("{key}: {e}")))?
            }
            "a_start" => self.a_start = finite(key, v)?,
            "a_stop" => self.a_stop = finite(key, v)?,
            "a_step" => self.a_step = finite(key, v)?,
            "a_tomo" => self.a_tomo = finite(key, v)?,
            "projector_set" => {
                self.projector_set = v
                    .parse()
                    .map_err(|e| Error::Config(format!("{key}: {e}")))?
            }
            "n_total" => self.n_total = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "random_trials" => self.random_trials = num(key, v)?,
            "out" => self.out = PathBuf::from(v),
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Textual value of a key, as written by [`ExperimentConfig::serialize`].
    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "pixel_width_um" => self.pixel_width_um.to_string(),
            "slm_distance_mm" => self.slm_distance_mm.to_string(),
            "half_window" => self.half_window.to_string(),
            "fwhm_mrad" => self.fwhm_mrad.to_string(),
            "fwhm_of" => self.fwhm_of.to_string(),
            "profile_table" => self
                .profile_table
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
            "v0" => self.v0.to_string(),
            "phase1" => self.phase1.to_string(),
            "phase2" => self.phase2.to_string(),
            "a_start" => self.a_start.to_string(),
            "a_stop" => self.a_stop.to_string(),
            "a_step" => self.a_step.to_string(),
            "a_tomo" => self.a_tomo.to_string(),
            "projector_set" => self.projector_set.to_string(),
            "n_total" => self.n_total.to_string(),
            "seed" => self.seed.to_string(),
            "random_trials" => self.random_trials.to_string(),
            "out" => self.out.display().to_string(),
            _ => return None,
        })
    }

    /// Parses a config file body on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut section: Option<String> = None;
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                if !KEYS.iter().any(|(s, _, _)| *s == name) {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("unknown section [{name}]"),
                    });
                }
                section = Some(name.to_string());
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected 'key = value', got '{line}'"),
                });
            };
            let key = key.trim();
            let Some(&(home, _, _)) = KEYS.iter().find(|(_, k, _)| *k == key) else {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("unknown key '{key}'"),
                });
            };
            match &section {
                Some(s) if s == home => {}
                _ => {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("key '{key}' belongs in section [{home}]"),
                    })
                }
            }
            self.set(key, value).map_err(|e| Error::Parse {
                line: line_no,
                msg: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Canonical text form with every key.
    pub fn serialize(&self) -> String {
        let mut out = String::from("# corrwitness experiment config\n");
        let mut current = "";
        for (section, key, _) in KEYS {
            if *section != current {
                if !current.is_empty() {
                    out.push('\n');
                }
                let _ = writeln!(out, "[{section}]");
                current = section;
            }
            let _ = writeln!(out, "{key} = {}", self.get(key).expect("listed key"));
        }
        out
    }

    /// Range checks and existence of referenced tables.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if !(self.pixel_width_um > 0.0) {
            return fail("pixel_width_um: must be positive".into());
        }
        if !(self.slm_distance_mm > 0.0) {
            return fail("slm_distance_mm: must be positive".into());
        }
        if !(self.fwhm_mrad > 0.0) {
            return fail("fwhm_mrad: must be positive".into());
        }
        if !(self.v0 > 0.0 && self.v0 <= 1.0) {
            return fail(format!("v0: must lie in (0, 1], got {}", self.v0));
        }
        if !(self.a_step > 0.0) {
            return fail("a_step: must be positive".into());
        }
        if !(self.a_start <= self.a_stop) {
            return fail("a_start: must not exceed a_stop".into());
        }
        if self.n_total == 0 {
            return fail("n_total: must be positive".into());
        }
        let mut tables: Vec<(&str, &Path)> = Vec::new();
        if let Some(p) = &self.profile_table {
            tables.push(("profile_table", p));
        }
        for (key, spec) in [("phase1", &self.phase1), ("phase2", &self.phase2)] {
            if let PhaseSpec::Table(p) = spec {
                tables.push((key, p));
            }
        }
        for (key, path) in tables {
            if !path.is_file() {
                return fail(format!(
                    "{key}: table file '{}' does not exist",
                    path.display()
                ));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<PixelGrid> {
        PixelGrid::new(
            self.pixel_width_um * 1e-6,
            self.slm_distance_mm * 1e-3,
            self.half_window,
        )
    }

    pub fn profile(&self) -> Result<AngularProfile> {
        let grid = self.grid()?;
        match &self.profile_table {
            Some(path) => AngularProfile::from_table(grid, &photon::load_two_column(path)?),
            None => photon::gaussian_profile_with(
                &grid,
                self.fwhm_mrad,
                self.fwhm_of,
                WindowPolicy::Warn,
            ),
        }
    }

    pub fn a_grid(&self) -> Result<Vec<f64>> {
        crate::dynamics::a_grid(self.a_start, self.a_stop, self.a_step)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve() {
        for (name, _) in PRESETS {
            let c = ExperimentConfig::preset(name).unwrap();
            c.validate().unwrap();
        }
        assert!(ExperimentConfig::preset("fig4").is_err());
        let lin = ExperimentConfig::preset("fig2-linear").unwrap();
        assert_eq!(
            lin.phase2,
            PhaseSpec::Analytic(PhaseFunction::Linear { tau: 0.1 })
        );
    }

    #[test]
    fn defaults_match_the_experiment() {
        let c = ExperimentConfig::default();
        assert_eq!(
            (c.pixel_width_um, c.slm_distance_mm, c.fwhm_mrad, c.v0),
            (100.0, 330.0, 6.0, 0.914)
        );
        assert_eq!(c.phase2.to_string(), "sin:-0.6");
    }

    #[test]
    fn serialize_parse_is_idempotent() {
        let mut c = ExperimentConfig::preset("fig2-linear").unwrap();
        c.set("a_step", "0.005").unwrap();
        c.set("phase1", "sin:0.3").unwrap();
        let once = c.serialize();
        let back = ExperimentConfig::parse(&once).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.serialize(), once);
    }

    #[test]
    fn diagnostics_carry_line_numbers() {
        let text = "[grid]\nhalf_window = 12\n[state]\nv0 = abc\n";
        match ExperimentConfig::parse(text) {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 4);
                assert!(msg.contains("v0"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            ExperimentConfig::parse("[grid]\nv0 = 0.5\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            ExperimentConfig::parse("[nope]\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            ExperimentConfig::parse("v0 0.5\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn validation_catches_ranges_and_missing_tables() {
        let c = ExperimentConfig {
            a_step: 0.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = ExperimentConfig {
            v0: 1.5,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.set("phase2", "table:/definitely/not/here.txt").unwrap();
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("phase2"), "{err}");
    }
}
