//! TOML run configuration shared by the command-line subcommands.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geometry::{build_ellipsoid_mesh, build_sphere_mesh, Domain, ScanGrid, TriSurface, Vec3};
use crate::indicator::{LimitCriteria, NeedleStrategy};
use crate::io::{read_mesh, read_needle};
use crate::runge::{Construction, NeedleSequenceConfig};

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub runge: RungeConfig,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Seed for every randomized sample.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Directory against which relative paths are resolved.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_seed() -> u64 {
    20240607
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SurfaceConfig {
    Sphere { center: [f64; 3], radius: f64 },
    Ellipsoid { center: [f64; 3], semi_axes: [f64; 3] },
    Mesh { path: PathBuf },
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub outer: SurfaceConfig,
    #[serde(default)]
    pub obstacle: Option<SurfaceConfig>,
    #[serde(default = "default_level")]
    pub level: usize,
}

fn default_level() -> usize {
    3
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub lambda0: PathBuf,
    pub lambda_d: PathBuf,
    pub binary: bool,
    /// Synthesize on this finer level and project down, avoiding the
    /// inverse crime.
    pub fine_level: Option<usize>,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig { lambda0: "lambda0.dtn".into(), lambda_d: "lambdaD.dtn".into(), binary: false, fine_level: None }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum NeedleChoice {
    NearestBoundary,
    AxisSet,
    AxisAndNearest,
    Polylines,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    pub spacing: f64,
    /// Explicit points; when present the box is ignored.
    pub points: Option<Vec<[f64; 3]>>,
    pub needles: NeedleChoice,
    /// Needle files for the `polylines` strategy.
    pub polylines: Vec<PathBuf>,
    /// Run the data-side classification at every point.
    pub classify: bool,
    /// Column written to `scan.vtk`, if any.
    pub vtk_column: Option<String>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            lo: [-0.9; 3],
            hi: [0.9; 3],
            spacing: 0.18,
            points: None,
            needles: NeedleChoice::AxisAndNearest,
            polylines: Vec::new(),
            classify: true,
            vtk_column: None,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RungeConfig {
    pub construction: Option<String>,
    pub n_max: Option<usize>,
    pub delta0: Option<f64>,
    pub alpha0: Option<f64>,
    pub poles_base: Option<usize>,
    pub poles_step: Option<usize>,
    pub order_start: Option<usize>,
    pub order_step: Option<usize>,
    pub min_center_offset: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceConfig {
    pub plateau: Option<f64>,
    pub blowup_factor: Option<f64>,
    pub min_growth: Option<f64>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: "out".into() }
    }
}

fn v3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

impl SurfaceConfig {
    fn build(&self, level: usize, base: &Path) -> Result<TriSurface> {
        match self {
            SurfaceConfig::Sphere { center, radius } => {
                if !(*radius > 0.0) {
                    return Err(Error::Config("sphere radius must be positive".into()));
                }
                Ok(build_sphere_mesh(v3(*center), *radius, level))
            }
            SurfaceConfig::Ellipsoid { center, semi_axes } => {
                if semi_axes.iter().any(|a| !(*a > 0.0)) {
                    return Err(Error::Config("ellipsoid semi-axes must be positive".into()));
                }
                Ok(build_ellipsoid_mesh(v3(*center), v3(*semi_axes), level))
            }
            SurfaceConfig::Mesh { path } => read_mesh(&base.join(path)),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let mut c: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.base_dir = base_dir.to_path_buf();
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn validate(&self) -> Result<()> {
        if self.geometry.level > 5 {
            return Err(Error::Config("mesh level above 5 is not supported".into()));
        }
        if let Some(f) = self.data.fine_level {
            if f <= self.geometry.level || f > 5 {
                return Err(Error::Config("fine_level must exceed level and be at most 5".into()));
            }
        }
        if self.scan.points.is_none() && !(self.scan.spacing > 0.0) {
            return Err(Error::Config("scan spacing must be positive".into()));
        }
        if let Some(c) = &self.scan.vtk_column {
            if !crate::indicator::COLUMNS.contains(&c.as_str()) {
                return Err(Error::Config(format!("unknown vtk column {c}")));
            }
        }
        self.sequences()?.validate()?;
        self.criteria().validate()
    }

    /// Resolves a path from the config against its directory.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.base_dir.join(p)
    }

    pub fn domain_at(&self, level: usize) -> Result<Domain> {
        let g = &self.geometry;
        let outer = g.outer.build(level, &self.base_dir)?;
        let obstacle = g.obstacle.as_ref().map(|o| o.build(level, &self.base_dir)).transpose()?;
        Domain::new(outer, obstacle)
    }

    pub fn domain(&self) -> Result<Domain> {
        self.domain_at(self.geometry.level)
    }

    /// (center, R0, R1) when both surfaces are concentric spheres, or the
    /// obstacle is absent.
    pub fn concentric(&self) -> Option<(Vec3, f64, Option<f64>)> {
        let SurfaceConfig::Sphere { center, radius } = &self.geometry.outer else {
            return None;
        };
        match &self.geometry.obstacle {
            None => Some((v3(*center), *radius, None)),
            Some(SurfaceConfig::Sphere { center: c1, radius: r1 }) if c1 == center => Some((v3(*center), *radius, Some(*r1))),
            _ => None,
        }
    }

    pub fn sequences(&self) -> Result<NeedleSequenceConfig> {
        let r = &self.runge;
        let mut c = NeedleSequenceConfig::default();
        if let Some(s) = &r.construction {
            c.construction = match s.as_str() {
                "expansion" => Construction::Expansion,
                "pole_fit" => Construction::PoleFit,
                _ => return Err(Error::Config(format!("unknown construction {s}"))),
            };
        }
        c.n_max = r.n_max.unwrap_or(c.n_max);
        c.delta0 = r.delta0.or(c.delta0);
        c.alpha0 = r.alpha0.unwrap_or(c.alpha0);
        c.poles_base = r.poles_base.unwrap_or(c.poles_base);
        c.poles_step = r.poles_step.unwrap_or(c.poles_step);
        c.order_start = r.order_start.unwrap_or(c.order_start);
        c.order_step = r.order_step.unwrap_or(c.order_step);
        c.min_center_offset = r.min_center_offset.unwrap_or(c.min_center_offset);
        Ok(c)
    }

    pub fn criteria(&self) -> LimitCriteria {
        let t = &self.tolerances;
        let d = LimitCriteria::default();
        LimitCriteria {
            plateau: t.plateau.unwrap_or(d.plateau),
            blowup_factor: t.blowup_factor.unwrap_or(d.blowup_factor),
            min_growth: t.min_growth.unwrap_or(d.min_growth),
            ..d
        }
    }

    pub fn strategy(&self) -> Result<NeedleStrategy> {
        Ok(match self.scan.needles {
            NeedleChoice::NearestBoundary => NeedleStrategy::NearestBoundary,
            NeedleChoice::AxisSet => NeedleStrategy::AxisSet,
            NeedleChoice::AxisAndNearest => NeedleStrategy::AxisAndNearest,
            NeedleChoice::Polylines => {
                NeedleStrategy::Polylines(self.scan.polylines.iter().map(|p| read_needle(&self.resolve(p))).collect::<Result<_>>()?)
            }
        })
    }

    pub fn grid(&self, domain: &Domain) -> ScanGrid {
        match &self.scan.points {
            Some(pts) => ScanGrid::from_points(domain, &pts.iter().map(|p| v3(*p)).collect::<Vec<_>>()),
            None => ScanGrid::from_box(domain, v3(self.scan.lo), v3(self.scan.hi), self.scan.spacing),
        }
    }

    pub fn lambda0_path(&self, out: &Path) -> PathBuf {
        out.join(&self.data.lambda0)
    }

    pub fn lambda_d_path(&self, out: &Path) -> PathBuf {
        out.join(&self.data.lambda_d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CANONICAL: &str = r#"
seed = 7
[geometry]
level = 2
outer = { kind = "sphere", center = [0, 0, 0], radius = 1.0 }
obstacle = { kind = "sphere", center = [0, 0, 0], radius = 0.3 }
[scan]
spacing = 0.3
[runge]
n_max = 4
"#;

    #[test]
    fn parses_canonical() {
        let c = RunConfig::from_toml(CANONICAL, Path::new(".")).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.sequences().unwrap().n_max, 4);
        assert_eq!(c.concentric(), Some((Vec3::zeros(), 1.0, Some(0.3))));
        let d = c.domain().unwrap();
        assert_eq!(d.outer.n_vertices(), 162);
        assert!(!c.grid(&d).is_empty());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(RunConfig::from_toml("[geometry]\n", Path::new(".")), Err(Error::Config(_))));
        let bad = CANONICAL.replace("n_max = 4", "n_max = 1");
        assert!(RunConfig::from_toml(&bad, Path::new(".")).is_err());
        let typo = CANONICAL.replace("[runge]", "[runge]\nnmax = 3");
        assert!(RunConfig::from_toml(&typo, Path::new(".")).is_err());
        let missing = CANONICAL.replace("kind = \"sphere\", center = [0, 0, 0], radius = 0.3", "kind = \"mesh\", path = \"nope.mesh\"");
        let c = RunConfig::from_toml(&missing, Path::new(".")).unwrap();
        assert!(matches!(c.domain(), Err(Error::Io(_))));
    }
}
