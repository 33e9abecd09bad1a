use rayon::prelude::*;

use super::data::{DataModel, SequenceStatus, SequenceValue};
use crate::geometry::{axis_needles, nearest_boundary_needle, ray_exit, Needle, Vec3};

/// Which needles to try at a point.
#[derive(Clone, Debug, PartialEq, Default)]
pub enum NeedleStrategy {
    NearestBoundary,
    /// The six axis-aligned straight needles.
    AxisSet,
    /// The nearest-boundary needle followed by the axis set, without
    /// repeating a needle.
    #[default]
    AxisAndNearest,
    /// Given polylines, each ending at the probe point.
    Polylines(Vec<Needle>),
}

impl NeedleStrategy {
    pub fn needles(&self, data: &DataModel, x: &Vec3) -> Vec<Needle> {
        let d = data.domain();
        match self {
            NeedleStrategy::NearestBoundary => vec![nearest_boundary_needle(d, x)],
            NeedleStrategy::AxisSet => axis_needles(d, x),
            NeedleStrategy::AxisAndNearest => {
                let near = nearest_boundary_needle(d, x);
                let axes = axis_needles(d, x);
                let tol = d.mesh_tolerance();
                let mut v = Vec::with_capacity(axes.len() + 1);
                if axes.iter().all(|a| (a.entry() - near.entry()).norm() > tol) {
                    v.push(near);
                }
                v.extend(axes);
                v
            }
            NeedleStrategy::Polylines(v) => v.iter().filter(|n| (n.tip() - x).norm() < 1e-12).cloned().collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Verdict {
    Converged(f64),
    BlowsUp,
    Inconclusive,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Converged(_) => "converged",
            Verdict::BlowsUp => "blows_up",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// One needle's ⟨gap G_n, G_n⟩ sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct NeedleTrial {
    pub needle: Needle,
    /// Empty when the sequence could not be built.
    pub sequence: SequenceValue,
    pub status: SequenceStatus,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SideBVerdict {
    pub x: Vec3,
    pub trials: Vec<NeedleTrial>,
    /// The needle behind a Converged verdict.
    pub needle: Option<Needle>,
    pub verdict: Verdict,
}

/// The corrected-sequence pairing for one needle, or None when the needle
/// or R_x cannot be built.
fn carleman_sequence(data: &DataModel, needle: &Needle) -> Option<SequenceValue> {
    needle.validate(data.domain()).ok()?;
    let seq = data.sequence(needle).ok()?;
    let cs = data.corrected(&seq).ok()?;
    data.star(&cs).ok().map(|s| s.carleman)
}

/// Classifies x from data alone: Converged if some needle's sequence
/// settles, BlowsUp if every tried needle's sequence grows.
pub fn sideb_classify(data: &DataModel, x: &Vec3, strategy: &NeedleStrategy, baseline: Option<f64>) -> SideBVerdict {
    let trials: Vec<NeedleTrial> = strategy
        .needles(data, x)
        .into_iter()
        .map(|needle| {
            let sequence = carleman_sequence(data, &needle).unwrap_or_default();
            let status = if sequence.stages.is_empty() { SequenceStatus::Undecided } else { sequence.status(&data.criteria, baseline) };
            NeedleTrial { needle, sequence, status }
        })
        .collect();
    let best = trials
        .iter()
        .filter(|t| matches!(t.status, SequenceStatus::Converged(_)))
        .min_by(|a, b| a.sequence.last_change().total_cmp(&b.sequence.last_change()));
    let (verdict, needle) = match best {
        Some(t) => (Verdict::Converged(t.sequence.last()), Some(t.needle.clone())),
        None if !trials.is_empty() && trials.iter().all(|t| t.status == SequenceStatus::Grows) => (Verdict::BlowsUp, None),
        None => (Verdict::Inconclusive, None),
    };
    SideBVerdict { x: *x, trials, needle, verdict }
}

/// Reference points near ∂Ω: 0.85 of the way from the centroid to ∂Ω
/// along the six axis directions.
pub fn reference_points(data: &DataModel) -> Vec<Vec3> {
    let outer = &data.domain().outer;
    let c = outer.centroid();
    let mut out = Vec::new();
    for k in 0..3 {
        for s in [1.0, -1.0] {
            let mut d = Vec3::zeros();
            d[k] = s;
            if let Some(e) = ray_exit(outer, &c, &d) {
                out.push(c + 0.85 * (e - c));
            }
        }
    }
    out
}

/// Median of the converged sequence limits at the reference points, a
/// scale for "large" that comes from the data alone.
pub fn reference_baseline(data: &DataModel) -> Option<f64> {
    let mut v: Vec<f64> = reference_points(data)
        .par_iter()
        .filter_map(|x| carleman_sequence(data, &nearest_boundary_needle(data.domain(), x))?.limit(&data.criteria))
        .collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    Some(v[v.len() / 2])
}
