use super::data::{DataModel, DataValues, LimitCriteria};
use super::direct::{rel, RepresentationResiduals, DirectModel, DirectValues};
use crate::error::Result;
use crate::geometry::{nearest_boundary_needle, needle_hits_obstacle, Contact, Needle, Vec3};

/// Relative residuals of the identities between direct values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Residuals {
    /// W = w + w¹.
    pub r_natural: f64,
    /// W = I + I¹.
    pub r_split: f64,
    /// w − I = I¹ − w¹, relative to W.
    pub r_cross: f64,
    /// w = I + ∫_{∂Ω} ∂νw G.
    pub r_flux: f64,
    /// I* = w*.
    pub r_star: f64,
    /// I* = I + 2(I¹ − w¹) + ⟨gap G, G⟩.
    pub r_star_sum: f64,
    /// w* = w + (I¹ − w¹) + ⟨gap G, G⟩.
    pub r_wstar_sum: f64,
    /// W as an energy.
    pub r_energy: f64,
    pub representation: RepresentationResiduals,
}

impl Residuals {
    pub fn from_values(v: &DirectValues, gap_gg: f64, representation: RepresentationResiduals) -> Self {
        let scale = v.big_w_xx;
        Residuals {
            r_natural: rel(v.big_w_xx - v.w_xx - v.w1_xx, scale),
            r_split: rel(v.big_w_xx - v.i - v.i1, scale),
            r_cross: rel((v.w_xx - v.i) - (v.i1 - v.w1_xx), scale),
            r_flux: rel(v.w_xx - v.i - v.flux, v.w_xx),
            r_star: rel(v.i_star - v.w_star_xx, v.i_star),
            r_star_sum: rel(v.i_star - (v.i + 2.0 * (v.i1 - v.w1_xx) + gap_gg), v.i_star),
            r_wstar_sum: rel(v.w_star_xx - (v.w_xx + (v.i1 - v.w1_xx) + gap_gg), v.w_star_xx),
            r_energy: rel(v.big_w_xx - v.energy_w, scale),
            representation,
        }
    }
}

/// Data-side limits compared with their direct counterparts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DataComparison {
    pub i: Option<f64>,
    pub w_xx: Option<f64>,
    pub i1: f64,
    pub w1_xx: Option<f64>,
    pub i_star: Option<f64>,
    /// I* from the corrected sequence itself.
    pub i_star_corrected: Option<f64>,
    /// −lim ⟨gap (v_n+R), G_n⟩.
    pub w_star_xx: Option<f64>,
    pub gap_gg: f64,
    pub res_i: Option<f64>,
    pub res_w_xx: Option<f64>,
    pub res_i1: f64,
    pub res_w1_xx: Option<f64>,
    /// I* from data against w*_x(x) from the solver.
    pub res_star: Option<f64>,
    /// The I* reassembly with the data-side gap term and I*.
    pub res_star_sum: Option<f64>,
}

impl DataComparison {
    pub fn new(d: &DataValues, v: &DirectValues, c: &LimitCriteria) -> Self {
        let i = d.probe.limit(c);
        let w_xx = d.sss.limit(c);
        let w1_xx = d.w1.limit(c);
        let i_star = d.star.carleman.limit(c);
        DataComparison {
            i,
            w_xx,
            i1: d.i1,
            w1_xx,
            i_star,
            i_star_corrected: d.star.corrected.limit(c),
            w_star_xx: d.star.mixed.limit(c),
            gap_gg: d.gap_gg,
            res_i: i.map(|a| rel(a - v.i, v.i)),
            res_w_xx: w_xx.map(|a| rel(a - v.w_xx, v.w_xx)),
            res_i1: rel(d.i1 - v.i1, v.i1),
            res_w1_xx: w1_xx.map(|a| rel(a - v.w1_xx, v.w1_xx)),
            res_star: i_star.map(|a| rel(a - v.w_star_xx, a)),
            res_star_sum: i_star.map(|a| rel(a - (v.i + 2.0 * (v.i1 - v.w1_xx) + d.gap_gg), a)),
        }
    }
}

/// Everything known at one probe point.
#[derive(Clone, Debug)]
pub struct IndicatorRecord {
    pub x: Vec3,
    pub direct: DirectValues,
    pub residuals: Residuals,
    pub needle: Option<Needle>,
    pub contact: Option<Contact>,
    pub data: Option<DataValues>,
    pub comparison: Option<DataComparison>,
}

/// Direct values, their identities and, given a data model, the data-side
/// sequences along `needle` (the nearest-boundary needle by default).
pub fn third_indicator(direct: &DirectModel, data: Option<&DataModel>, x: &Vec3, needle: Option<&Needle>) -> Result<IndicatorRecord> {
    let f = direct.fields(x)?;
    let v = direct.values(&f)?;
    let representation = direct.representation_residuals(&f, &f)?;
    let residuals = Residuals::from_values(&v, v.gap_gg, representation);
    let mut rec = IndicatorRecord { x: *x, direct: v, residuals, needle: None, contact: None, data: None, comparison: None };
    if let Some(dm) = data {
        let needle = needle.cloned().unwrap_or_else(|| nearest_boundary_needle(direct.domain(), x));
        needle.validate(direct.domain())?;
        let d = dm.values(&needle)?;
        rec.comparison = Some(DataComparison::new(&d, &v, &dm.criteria));
        rec.contact = Some(needle_hits_obstacle(direct.domain(), &needle));
        rec.needle = Some(needle);
        rec.data = Some(d);
    }
    Ok(rec)
}

/// I*, w*_x(x) and the residuals of the integrated method.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StarReport {
    pub i_star: f64,
    pub w_star_xx: f64,
    pub i_star_data: Option<f64>,
    pub r_star: f64,
    pub r_star_sum: f64,
    pub r_wstar_sum: f64,
}

pub fn star_indicator(direct: &DirectModel, data: Option<&DataModel>, x: &Vec3, needle: Option<&Needle>) -> Result<StarReport> {
    let rec = third_indicator(direct, data, x, needle)?;
    let c = rec.comparison.as_ref();
    Ok(StarReport {
        i_star: rec.direct.i_star,
        w_star_xx: rec.direct.w_star_xx,
        i_star_data: c.and_then(|c| c.i_star),
        r_star: rec.residuals.r_star,
        r_star_sum: c.and_then(|c| c.res_star_sum).unwrap_or(rec.residuals.r_star_sum),
        r_wstar_sum: rec.residuals.r_wstar_sum,
    })
}
