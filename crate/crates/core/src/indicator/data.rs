use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::bvp::Solver;
use crate::dtn::{assemble_dtn, DtNMatrix, TraceProjector};
use crate::error::{Error, Result};
use crate::geometry::{Domain, Needle, Vec3};
use crate::potential::{g, grad_g, integrate};
use crate::runge::{build_needle_sequence, corrected_sequence, NeedleSequence, NeedleSequenceConfig};

/// Operational limit and growth tests for indicator sequences.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimitCriteria {
    /// Converged when the last two stages differ by less than this,
    /// relative to the last stage.
    pub plateau: f64,
    /// Differences below this are treated as zero (sequences of a
    /// vanishing gap).
    pub floor: f64,
    /// Grows when the last stage exceeds this multiple of the baseline.
    pub blowup_factor: f64,
    /// and the last stage exceeds the third-last by at least this factor.
    pub min_growth: f64,
}

impl Default for LimitCriteria {
    fn default() -> Self {
        LimitCriteria { plateau: 1e-2, floor: 1e-12, blowup_factor: 10.0, min_growth: 2.0 }
    }
}

impl LimitCriteria {
    pub fn validate(&self) -> Result<()> {
        if !(self.plateau > 0.0 && self.floor >= 0.0 && self.blowup_factor > 1.0 && self.min_growth >= 1.0) {
            return Err(Error::Config(format!("invalid limit criteria {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SequenceStatus {
    Converged(f64),
    Grows,
    Undecided,
}

/// Per-stage values of an indicator sequence.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SequenceValue {
    pub stages: Vec<f64>,
}

impl SequenceValue {
    pub fn last(&self) -> f64 {
        self.stages.last().copied().unwrap_or(f64::NAN)
    }

    /// |s_N − s_{N−1}| / |s_N|.
    pub fn last_change(&self) -> f64 {
        match self.stages.as_slice() {
            [.., a, b] => super::rel(b - a, *b),
            _ => f64::INFINITY,
        }
    }

    pub fn limit(&self, c: &LimitCriteria) -> Option<f64> {
        let [.., a, b] = self.stages.as_slice() else {
            return None;
        };
        ((b - a).abs() <= c.plateau * b.abs() || (b - a).abs() <= c.floor).then_some(*b)
    }

    /// The limit, or NotConverged with the stage trace.
    pub fn value(&self, c: &LimitCriteria) -> Result<f64> {
        self.limit(c).ok_or_else(|| Error::NotConverged(format!("stages {:?}", self.stages)))
    }

    pub fn status(&self, c: &LimitCriteria, baseline: Option<f64>) -> SequenceStatus {
        if let Some(v) = self.limit(c) {
            return SequenceStatus::Converged(v);
        }
        if let [.., a, b, z] = self.stages.as_slice() {
            let increasing = a < b && b < z;
            let ratio = *a > 0.0 && z / a >= c.min_growth;
            let above = baseline.map_or(true, |base| *z > c.blowup_factor * base);
            if increasing && ratio && above {
                return SequenceStatus::Grows;
            }
        }
        SequenceStatus::Undecided
    }
}

/// Indicator values computed from the pair of DtN matrices. Knows ∂Ω but
/// not D; the background solver is only used for R_x.
#[derive(Clone, Debug)]
pub struct DataModel {
    pub omega: Solver,
    pub l0: DtNMatrix,
    pub ld: DtNMatrix,
    pub proj: TraceProjector,
    pub sequences: NeedleSequenceConfig,
    pub criteria: LimitCriteria,
    gap: DMatrix<f64>,
}

impl DataModel {
    /// `outer` must be the domain the matrices were assembled on; any
    /// obstacle it carries is dropped.
    pub fn new(outer: &Domain, l0: DtNMatrix, ld: DtNMatrix, sequences: NeedleSequenceConfig, criteria: LimitCriteria) -> Result<Self> {
        let bg = outer.background();
        Self::with_solver(Solver::new(&bg)?, l0, ld, sequences, criteria)
    }

    /// Synthesizes both matrices from a solver that knows D.
    pub fn synthesize(solver: &Solver, sequences: NeedleSequenceConfig, criteria: LimitCriteria) -> Result<Self> {
        let l0 = assemble_dtn(&solver.background)?;
        let ld = assemble_dtn(&solver.op)?;
        let omega = Solver { op: solver.background.clone(), background: solver.background.clone(), images: solver.images };
        Self::with_solver(omega, l0, ld, sequences, criteria)
    }

    fn with_solver(omega: Solver, l0: DtNMatrix, ld: DtNMatrix, sequences: NeedleSequenceConfig, criteria: LimitCriteria) -> Result<Self> {
        sequences.validate()?;
        criteria.validate()?;
        l0.check_compatible(&ld)?;
        let fp = omega.domain().outer.fingerprint();
        if l0.fingerprint != fp {
            return Err(Error::FingerprintMismatch { expected: fp, found: l0.fingerprint.clone() });
        }
        let proj = TraceProjector::new(omega.domain().outer.clone())?;
        let gap = &l0.lambda - &ld.lambda;
        Ok(DataModel { omega, l0, ld, proj, sequences, criteria, gap })
    }

    pub fn domain(&self) -> &Domain {
        self.omega.domain()
    }

    /// ⟨(Λ₀−Λ_D) f, h⟩.
    pub fn gap(&self, f: &DVector<f64>, h: &DVector<f64>) -> f64 {
        (&self.gap * f).dot(&(&self.l0.mass * h))
    }

    pub fn sequence(&self, needle: &Needle) -> Result<NeedleSequence> {
        build_needle_sequence(self.domain(), needle, &self.sequences)
    }

    /// The sequence with R_x added to every stage.
    pub fn corrected(&self, seq: &NeedleSequence) -> Result<NeedleSequence> {
        let r = self.omega.green_regular(&seq.tip())?;
        corrected_sequence(seq, Arc::new(r))
    }

    /// Projected trace of G(·−x) on ∂Ω.
    pub fn g_trace(&self, x: &Vec3) -> DVector<f64> {
        let x = *x;
        self.proj.project(&[x], |y, _| g(&(y - x)))
    }

    /// ∫_{∂Ω} ∂νG(·−x) G(·−y).
    pub fn normal_pair(&self, x: &Vec3, y: &Vec3) -> f64 {
        let (x, y) = (*x, *y);
        integrate(&self.domain().outer, &[x, y], |p| p.normal.dot(&grad_g(&(p.pos - x))) * g(&(p.pos - y)))
    }

    fn traces(&self, seq: &NeedleSequence) -> Result<Vec<DVector<f64>>> {
        (0..seq.n_stages()).map(|n| seq.trace(n, &self.proj)).collect()
    }

    fn carleman_traces(&self, seq: &NeedleSequence) -> Result<Vec<DVector<f64>>> {
        (0..seq.n_stages()).map(|n| seq.carleman_trace(n, &self.proj)).collect()
    }

    /// ⟨(Λ₀−Λ_D)v_n, v_n⟩.
    pub fn probe(&self, seq: &NeedleSequence) -> Result<SequenceValue> {
        let t = self.traces(seq)?;
        Ok(SequenceValue { stages: t.iter().map(|v| self.gap(v, v)).collect() })
    }

    /// ⟨(Λ₀−Λ_D)v_n(x), v_n(y)⟩ over the common stages.
    pub fn probe_cross(&self, sx: &NeedleSequence, sy: &NeedleSequence) -> Result<SequenceValue> {
        let n = sx.n_stages().min(sy.n_stages());
        let stages = (0..n).map(|k| Ok(self.gap(&sx.trace(k, &self.proj)?, &sy.trace(k, &self.proj)?))).collect::<Result<_>>()?;
        Ok(SequenceValue { stages })
    }

    /// −⟨(Λ₀−Λ_D)v_n, G_n⟩, tending to w_x(x).
    pub fn sss(&self, seq: &NeedleSequence) -> Result<SequenceValue> {
        let t = self.traces(seq)?;
        let c = self.carleman_traces(seq)?;
        Ok(SequenceValue { stages: t.iter().zip(&c).map(|(v, gn)| -self.gap(v, gn)).collect() })
    }

    /// ⟨(Λ₀−Λ_D)v_n(x), G(·−y)⟩.
    pub fn gap_sequence_g(&self, seq: &NeedleSequence, y: &Vec3) -> Result<SequenceValue> {
        let gy = self.g_trace(y);
        let t = self.traces(seq)?;
        Ok(SequenceValue { stages: t.iter().map(|v| self.gap(v, &gy)).collect() })
    }

    /// I¹(x) = ⟨Λ_D G_x − ∂νG_x, G_x⟩; no needle needed.
    pub fn i1(&self, x: &Vec3) -> Result<f64> {
        self.i1_cross(x, x)
    }

    /// I¹(x,y) = ⟨Λ_D G_x − ∂νG_x, G_y⟩.
    pub fn i1_cross(&self, x: &Vec3, y: &Vec3) -> Result<f64> {
        let (gx, gy) = (self.g_trace(x), self.g_trace(y));
        Ok(self.ld.pair(&gx, &gy)? - self.normal_pair(x, y))
    }

    /// w¹_x(x) = I¹(x) + ⟨(Λ₀−Λ_D)v_n, G(·−x)⟩ in the limit.
    pub fn w1(&self, seq: &NeedleSequence) -> Result<SequenceValue> {
        let x = seq.tip();
        let i1 = self.i1(&x)?;
        let mut s = self.gap_sequence_g(seq, &x)?;
        s.stages.iter_mut().for_each(|v| *v += i1);
        Ok(s)
    }

    /// ⟨(Λ₀−Λ_D)G(·−x), G(·−y)⟩.
    pub fn gap_gg(&self, x: &Vec3, y: &Vec3) -> f64 {
        self.gap(&self.g_trace(x), &self.g_trace(y))
    }

    /// The three sequences of the integrated method for a corrected
    /// sequence: ⟨gap G_n, G_n⟩, ⟨gap (v_n+R), (v_n+R)⟩ and
    /// −⟨gap (v_n+R), G_n⟩.
    pub fn star(&self, corrected: &NeedleSequence) -> Result<StarSequences> {
        if !corrected.is_corrected() {
            return Err(Error::DomainMismatch("the integrated method needs a corrected sequence".into()));
        }
        let t = self.traces(corrected)?;
        let c = self.carleman_traces(corrected)?;
        Ok(StarSequences {
            carleman: SequenceValue { stages: c.iter().map(|v| self.gap(v, v)).collect() },
            corrected: SequenceValue { stages: t.iter().map(|v| self.gap(v, v)).collect() },
            mixed: SequenceValue { stages: t.iter().zip(&c).map(|(v, gn)| -self.gap(v, gn)).collect() },
        })
    }

    /// All data-side values along one needle.
    pub fn values(&self, needle: &Needle) -> Result<DataValues> {
        let seq = self.sequence(needle)?;
        let x = seq.tip();
        let cs = self.corrected(&seq)?;
        Ok(DataValues {
            probe: self.probe(&seq)?,
            sss: self.sss(&seq)?,
            i1: self.i1(&x)?,
            w1: self.w1(&seq)?,
            gap_gg: self.gap_gg(&x, &x),
            star: self.star(&cs)?,
            fit_errors: seq.stages.iter().map(|s| s.fit_error).collect(),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StarSequences {
    pub carleman: SequenceValue,
    pub corrected: SequenceValue,
    pub mixed: SequenceValue,
}

/// Data-side sequences at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct DataValues {
    pub probe: SequenceValue,
    pub sss: SequenceValue,
    pub i1: f64,
    pub w1: SequenceValue,
    pub gap_gg: f64,
    pub star: StarSequences,
    pub fit_errors: Vec<f64>,
}
