use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::discretization::{DomainKind, Grid, SourceSpec, MIN_RESOLUTION};
use crate::error::{Error, Result};
use crate::inverse::{UnknownSelection, COMPOSITION_LIMIT, DEFAULT_TAU};

/// Medium profile before the contrast multiplier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum Medium {
    Zero,
    /// `amplitude / sqrt(2 pi epsilon) * exp(-|x - center|^2 / (2 epsilon))`,
    /// optionally cut to `support[0] <= x <= support[1]`.
    Gaussian {
        center: [f64; 2],
        epsilon: f64,
        amplitude: f64,
        #[serde(default)]
        support: Option<[f64; 2]>,
    },
    /// `value` on `|x - center|^2 <= radius_sq`.
    Disk {
        center: [f64; 2],
        radius_sq: f64,
        #[serde(default = "one")]
        value: f64,
    },
    /// `value` on `lo <= x <= hi` (first coordinate).
    Interval {
        lo: f64,
        hi: f64,
        #[serde(default = "one")]
        value: f64,
    },
    /// Tent `value * max(0, 1 - |x - center| / half_width)`; with
    /// `half_width` equal to the inversion spacing this is one nodal cell.
    Hat {
        center: [f64; 2],
        half_width: f64,
        #[serde(default = "one")]
        value: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl Medium {
    pub fn eval(&self, p: [f64; 2]) -> f64 {
        match *self {
            Medium::Zero => 0.0,
            Medium::Gaussian {
                center,
                epsilon,
                amplitude,
                support,
            } => {
                if let Some([lo, hi]) = support {
                    if p[0] < lo || p[0] > hi {
                        return 0.0;
                    }
                }
                let d2 = (p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2);
                amplitude / (2.0 * std::f64::consts::PI * epsilon).sqrt() * (-d2 / (2.0 * epsilon)).exp()
            }
            Medium::Disk {
                center,
                radius_sq,
                value,
            } => {
                let d2 = (p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2);
                if d2 <= radius_sq {
                    value
                } else {
                    0.0
                }
            }
            Medium::Interval { lo, hi, value } => {
                if p[0] >= lo && p[0] <= hi {
                    value
                } else {
                    0.0
                }
            }
            Medium::Hat {
                center,
                half_width,
                value,
            } => {
                let d = (p[0] - center[0]).hypot(p[1] - center[1]);
                value * (1.0 - d / half_width).max(0.0)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        let ok = match *self {
            Medium::Zero => true,
            Medium::Gaussian {
                center,
                epsilon,
                amplitude,
                support,
            } => {
                finite(&[center[0], center[1], epsilon, amplitude])
                    && epsilon > 0.0
                    && support.is_none_or(|[lo, hi]| finite(&[lo, hi]) && lo <= hi)
            }
            Medium::Disk {
                center,
                radius_sq,
                value,
            } => finite(&[center[0], center[1], radius_sq, value]) && radius_sq >= 0.0,
            Medium::Interval { lo, hi, value } => finite(&[lo, hi, value]) && lo <= hi,
            Medium::Hat {
                center,
                half_width,
                value,
            } => finite(&[center[0], center[1], half_width, value]) && half_width > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid medium parameters: {self:?}")))
        }
    }
}

/// Where the unknown coefficients may be nonzero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum Region {
    #[default]
    All,
    Interval {
        lo: f64,
        hi: f64,
    },
    Ball {
        center: [f64; 2],
        radius: f64,
    },
}

impl Region {
    /// Interior nodes of `grid` inside the region.
    pub fn select(&self, grid: &Grid) -> Vec<usize> {
        let eps = 1e-12;
        grid.interior()
            .iter()
            .copied()
            .filter(|&i| {
                let p = grid.coords()[i];
                match *self {
                    Region::All => true,
                    Region::Interval { lo, hi } => p[0] >= lo - eps && p[0] <= hi + eps,
                    Region::Ball { center, radius } => {
                        (p[0] - center[0]).hypot(p[1] - center[1]) <= radius + eps
                    }
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSet {
    pub count: usize,
    pub locations: Vec<[f64; 2]>,
    pub scales: Vec<f64>,
    pub frequencies: Vec<f64>,
}

impl SourceSet {
    /// Frequency-major, then location, then scale.
    pub fn expand(&self) -> Vec<SourceSpec> {
        let mut out = Vec::with_capacity(self.count);
        for &k in &self.frequencies {
            for &loc in &self.locations {
                for &s in &self.scales {
                    out.push(SourceSpec {
                        location: loc,
                        scale: s,
                        wavenumber: k,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resolutions {
    pub synthesis: usize,
    pub inversion: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ForwardSolverKind {
    FixedPoint,
    Newton,
    /// Fixed point first, Newton when it does not converge.
    #[default]
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForwardSettings {
    #[serde(default)]
    pub solver: ForwardSolverKind,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "one")]
    pub gamma: f64,
}

fn default_tol() -> f64 {
    1e-12
}

fn default_max_iter() -> usize {
    500
}

impl Default for ForwardSettings {
    fn default() -> Self {
        Self {
            solver: ForwardSolverKind::default(),
            tol: default_tol(),
            max_iter: default_max_iter(),
            gamma: 1.0,
        }
    }
}

fn default_born_order() -> usize {
    8
}

fn default_order() -> usize {
    3
}

fn default_tau() -> f64 {
    DEFAULT_TAU
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub domain: DomainKind,
    pub medium: Medium,
    #[serde(default = "one")]
    pub contrast: f64,
    pub unknowns: UnknownSelection,
    pub sources: SourceSet,
    pub resolution: Resolutions,
    #[serde(default)]
    pub region: Region,
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_born_order")]
    pub born_order: usize,
    #[serde(default)]
    pub forward: ForwardSettings,
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Parse(format!("scenario: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read scenario {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Parse(format!("scenario: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        self.medium.validate()?;
        if !(self.contrast >= 0.0 && self.contrast.is_finite()) {
            return cfg(format!("contrast must be finite and nonnegative, got {}", self.contrast));
        }
        let r = self.resolution;
        if r.synthesis < MIN_RESOLUTION || r.inversion < MIN_RESOLUTION {
            return cfg(format!("resolutions must be at least {MIN_RESOLUTION}"));
        }
        if 2 * r.synthesis < 3 * r.inversion {
            return cfg(format!(
                "synthesis resolution {} must be at least 1.5x the inversion resolution {}",
                r.synthesis, r.inversion
            ));
        }
        if self.order == 0 || self.order > COMPOSITION_LIMIT {
            return cfg(format!("order must be in 1..={COMPOSITION_LIMIT}, got {}", self.order));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return cfg(format!("tau must lie in (0, 1), got {}", self.tau));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return cfg(format!("noise must be finite and nonnegative, got {}", self.noise));
        }
        let s = &self.sources;
        let product = s.locations.len() * s.scales.len() * s.frequencies.len();
        if product == 0 || s.count != product {
            return cfg(format!(
                "source count {} does not match {} locations x {} scales x {} frequencies",
                s.count,
                s.locations.len(),
                s.scales.len(),
                s.frequencies.len()
            ));
        }
        if s.scales.iter().any(|x| !x.is_finite() || *x == 0.0) {
            return cfg("source scales must be finite and nonzero".into());
        }
        if s.frequencies.iter().any(|k| !(k.is_finite() && *k > 0.0)) {
            return cfg("frequencies must be positive".into());
        }
        let f = &self.forward;
        if !(f.tol > 0.0) || f.max_iter == 0 || !(f.gamma > 0.5) {
            return cfg("forward settings need tol > 0, max_iter > 0 and gamma > 1/2".into());
        }
        Ok(())
    }

    /// Truth on a grid: the contrast-scaled medium in each selected coefficient.
    pub fn truth_on(&self, grid: &Grid) -> Result<crate::forward::Susceptibility> {
        let n = grid.len();
        let mut prof = vec![0.0; n];
        for i in 0..n {
            if !grid.is_boundary(i) {
                prof[i] = self.contrast * self.medium.eval(grid.coords()[i]);
            }
        }
        let zero = vec![0.0; n];
        let (a, b) = match self.unknowns {
            UnknownSelection::AlphaOnly => (prof, zero),
            UnknownSelection::BetaOnly => (zero, prof),
            UnknownSelection::Both => (prof.clone(), prof),
        };
        crate::forward::Susceptibility::new(grid, a, b)
    }
}

/// Geometric ladder `0.25 * 1.25^j`, `j = 0..12`.
pub fn default_scales() -> Vec<f64> {
    (0..12).map(|j| 0.25 * 1.25f64.powi(j)).collect()
}

/// Interval, Gaussian `alpha = beta` cut to `[0.4, 0.6]`, 2 sides x 12 scales
/// x 3 frequencies.
pub fn scenario_1d() -> Scenario {
    let scales = default_scales();
    Scenario {
        name: "interval-gaussian".into(),
        domain: DomainKind::Interval,
        medium: Medium::Gaussian {
            center: [0.5, 0.0],
            epsilon: 0.01,
            amplitude: 0.2,
            support: Some([0.4, 0.6]),
        },
        contrast: 1.0,
        unknowns: UnknownSelection::Both,
        sources: SourceSet {
            count: 2 * scales.len() * 3,
            locations: vec![[0.0, 0.0], [1.0, 0.0]],
            scales,
            frequencies: vec![0.9, 1.0, 1.1],
        },
        resolution: Resolutions {
            synthesis: 301,
            inversion: 101,
        },
        region: Region::Interval { lo: 0.4, hi: 0.6 },
        order: 4,
        tau: DEFAULT_TAU,
        noise: 0.0,
        seed: 0,
        born_order: 8,
        forward: ForwardSettings::default(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiskMedium {
    Disk,
    Gaussian,
}

impl std::str::FromStr for DiskMedium {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "disk" => Ok(Self::Disk),
            "gaussian" => Ok(Self::Gaussian),
            other => Err(Error::Config(format!("unknown medium {other:?}; expected disk or gaussian"))),
        }
    }
}

pub const DISK_SOURCE_COUNT: usize = 12;
pub const DISK_WAVENUMBER: f64 = 2.0;

/// Unit disk, 12 equally spaced boundary sources at one wavenumber.
pub fn scenario_2d(contrast: f64, medium: DiskMedium, unknowns: UnknownSelection) -> Result<Scenario> {
    if !(contrast > 0.0 && contrast.is_finite()) {
        return Err(Error::Config(format!("contrast must be positive, got {contrast}")));
    }
    let medium_def = match medium {
        DiskMedium::Disk => Medium::Disk {
            center: [0.3, 0.0],
            radius_sq: 0.2,
            value: 1.0,
        },
        DiskMedium::Gaussian => Medium::Gaussian {
            center: [-0.3, 0.3],
            epsilon: 0.04,
            amplitude: 2.0,
            support: None,
        },
    };
    let locations = (0..DISK_SOURCE_COUNT)
        .map(|j| {
            let t = 2.0 * std::f64::consts::PI * j as f64 / DISK_SOURCE_COUNT as f64;
            [t.cos(), t.sin()]
        })
        .collect();
    let name = format!(
        "disk-{}-x{}-{}",
        match medium {
            DiskMedium::Disk => "disk",
            DiskMedium::Gaussian => "gaussian",
        },
        contrast,
        match unknowns {
            UnknownSelection::AlphaOnly => "alpha",
            UnknownSelection::BetaOnly => "beta",
            UnknownSelection::Both => "both",
        }
    );
    let s = Scenario {
        name,
        domain: DomainKind::Disk,
        medium: medium_def,
        contrast,
        unknowns,
        sources: SourceSet {
            count: DISK_SOURCE_COUNT,
            locations,
            scales: vec![1.0],
            frequencies: vec![DISK_WAVENUMBER],
        },
        resolution: Resolutions {
            synthesis: 40,
            inversion: 24,
        },
        region: Region::All,
        order: 3,
        tau: DEFAULT_TAU,
        noise: 0.0,
        seed: 0,
        born_order: 8,
        forward: ForwardSettings::default(),
    };
    s.validate()?;
    Ok(s)
}
