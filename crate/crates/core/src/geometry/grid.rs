use super::domain::{Domain, Region};
use super::Vec3;

/// One probe point with its surface distances.
#[derive(Clone, Copy, Debug)]
pub struct GridPoint {
    pub x: Vec3,
    pub region: Region,
    pub dist_outer: f64,
    pub dist_obstacle: f64,
    /// Closer than the exclusion radius to either surface.
    pub near: bool,
}

/// Probe points inside Ω, in a fixed order.
#[derive(Clone, Debug, Default)]
pub struct ScanGrid {
    pub points: Vec<GridPoint>,
}

impl ScanGrid {
    /// Keeps the points strictly inside Ω; points within mesh tolerance of
    /// a surface are dropped.
    pub fn from_points(domain: &Domain, pts: &[Vec3]) -> Self {
        let (eo, ed) = (domain.eps_near_outer(), domain.eps_near_obstacle());
        let points = pts
            .iter()
            .filter_map(|x| {
                let c = domain.classify_point(x).ok()?;
                (c.region != Region::Exterior).then(|| GridPoint {
                    x: *x,
                    region: c.region,
                    dist_outer: c.dist_outer,
                    dist_obstacle: c.dist_obstacle,
                    near: c.dist_outer < eo || c.dist_obstacle < ed,
                })
            })
            .collect();
        ScanGrid { points }
    }

    /// Regular lattice `lo + h·(i, j, k)` covering the box, clipped to Ω.
    pub fn from_box(domain: &Domain, lo: Vec3, hi: Vec3, spacing: f64) -> Self {
        assert!(spacing > 0.0);
        let n = ((hi - lo) / spacing).map(|v| v.round() as usize + 1);
        let mut pts = Vec::with_capacity(n.x * n.y * n.z);
        for i in 0..n.x {
            for j in 0..n.y {
                for k in 0..n.z {
                    pts.push(lo + spacing * Vec3::new(i as f64, j as f64, k as f64));
                }
            }
        }
        Self::from_points(domain, &pts)
    }

    /// `n` points per axis spanning the box, clipped to Ω.
    pub fn from_box_count(domain: &Domain, lo: Vec3, hi: Vec3, n: usize) -> Self {
        assert!(n >= 2);
        let mut pts = Vec::with_capacity(n * n * n);
        let step = (hi - lo) / (n - 1) as f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    pts.push(lo + step.component_mul(&Vec3::new(i as f64, j as f64, k as f64)));
                }
            }
        }
        Self::from_points(domain, &pts)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
