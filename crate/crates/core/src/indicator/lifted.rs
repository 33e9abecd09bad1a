use super::data::DataModel;
use super::direct::{rel, DirectFields, DirectModel};
use crate::error::Result;
use crate::geometry::{nearest_boundary_needle, Needle, Vec3};

/// Two-point indicators at a pair (x, y) and the identities linking them
/// to the fields.
#[derive(Clone, Debug, PartialEq)]
pub struct LiftedSample {
    pub x: Vec3,
    pub y: Vec3,
    pub i_xy: f64,
    pub i_yx: f64,
    pub i1_xy: f64,
    pub i1_yx: f64,
    pub w_x_y: f64,
    pub w_y_x: f64,
    pub w1_x_y: f64,
    pub w1_y_x: f64,
    pub big_w_x_y: f64,
    pub big_w_y_x: f64,
    /// lim ⟨gap v_n(x), G(·−y)⟩, from data when available, else from the
    /// flux of w_x through ∂Ω.
    pub gap_x_gy: f64,
    pub gap_y_gx: f64,
    pub data: Option<LiftedData>,
    pub sym_i: f64,
    pub sym_i1: f64,
    pub res_w_gap: f64,
    pub res_w1_gap: f64,
    pub res_big_w_gap: f64,
    pub res_sym: f64,
    pub res_cross_xy: f64,
    pub res_cross_yx: f64,
}

/// The data-side versions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LiftedData {
    /// lim ⟨gap v_n(x), v_n(y)⟩.
    pub i_xy: Option<f64>,
    pub i1_xy: f64,
    pub res_i: Option<f64>,
    pub res_i1: f64,
}

fn gap_limit(dm: &DataModel, needle: &Needle, y: &Vec3) -> Result<Option<f64>> {
    let seq = dm.sequence(needle)?;
    Ok(dm.gap_sequence_g(&seq, y)?.limit(&dm.criteria))
}

pub fn lifted_indicators(direct: &DirectModel, data: Option<&DataModel>, x: &Vec3, y: &Vec3) -> Result<LiftedSample> {
    let fx = direct.fields(x)?;
    let fy = direct.fields(y)?;
    lifted_from_fields(direct, data, &fx, &fy)
}

pub fn lifted_from_fields(direct: &DirectModel, data: Option<&DataModel>, fx: &DirectFields, fy: &DirectFields) -> Result<LiftedSample> {
    let (x, y) = (fx.x, fy.x);
    let i_xy = direct.lifted_i(fx, &y, true)?;
    let i_yx = direct.lifted_i(fy, &x, true)?;
    let i1_xy = direct.lifted_i1(fx, &y, true)?;
    let i1_yx = direct.lifted_i1(fy, &x, true)?;
    let (w_x_y, w_y_x) = (fx.w.value(&y)?, fy.w.value(&x)?);
    let (w1_x_y, w1_y_x) = (fx.w1.value(&y)?, fy.w1.value(&x)?);
    let (big_w_x_y, big_w_y_x) = (fx.big_w.value(&y)?, fy.big_w.value(&x)?);

    let t = [x, y];
    let mut gap_x_gy = -direct.outer_flux_pair(&fx.w, &y, &t);
    let mut gap_y_gx = -direct.outer_flux_pair(&fy.w, &x, &t);
    let mut lifted_data = None;
    if let Some(dm) = data {
        let (nx, ny) = (nearest_boundary_needle(direct.domain(), &x), nearest_boundary_needle(direct.domain(), &y));
        if let Some(v) = gap_limit(dm, &nx, &y)? {
            gap_x_gy = v;
        }
        if let Some(v) = gap_limit(dm, &ny, &x)? {
            gap_y_gx = v;
        }
        let cross = dm.probe_cross(&dm.sequence(&nx)?, &dm.sequence(&ny)?)?.limit(&dm.criteria);
        let i1 = dm.i1_cross(&x, &y)?;
        lifted_data = Some(LiftedData { i_xy: cross, i1_xy: i1, res_i: cross.map(|c| rel(c - i_xy, i_xy)), res_i1: rel(i1 - i1_xy, i1_xy) });
    }

    let (i, i1) = (0.5 * (i_xy + i_yx), 0.5 * (i1_xy + i1_yx));
    let sym_w = 0.5 * (big_w_x_y + big_w_y_x);
    Ok(LiftedSample {
        x,
        y,
        i_xy,
        i_yx,
        i1_xy,
        i1_yx,
        w_x_y,
        w_y_x,
        w1_x_y,
        w1_y_x,
        big_w_x_y,
        big_w_y_x,
        gap_x_gy,
        gap_y_gx,
        data: lifted_data,
        sym_i: rel(i_xy - i_yx, i),
        sym_i1: rel(i1_xy - i1_yx, i1),
        res_w_gap: rel(w_x_y - (i - gap_x_gy), w_x_y),
        res_w1_gap: rel(w1_x_y - (i1 + gap_y_gx), w1_x_y),
        res_big_w_gap: rel(big_w_x_y - (i + i1 + gap_y_gx - gap_x_gy), big_w_x_y),
        res_sym: rel(sym_w - (i + i1), sym_w),
        res_cross_xy: rel(w1_x_y + w_y_x - (i + i1), i + i1),
        res_cross_yx: rel(w1_y_x + w_x_y - (i + i1), i + i1),
    })
}

/// 7-point Laplacians in y of I(x,·) and I¹(x,·) at `y` with step `h`,
/// scaled by the value at `y`.
pub fn lifted_laplacian(direct: &DirectModel, fx: &DirectFields, y: &Vec3, h: f64) -> Result<(f64, f64)> {
    let mut li = -6.0 * direct.lifted_i(fx, y, false)?;
    let mut l1 = -6.0 * direct.lifted_i1(fx, y, false)?;
    let (i0, i10) = (li.abs() / 6.0, l1.abs() / 6.0);
    for k in 0..3 {
        for s in [1.0, -1.0] {
            let mut p = *y;
            p[k] += s * h;
            li += direct.lifted_i(fx, &p, false)?;
            l1 += direct.lifted_i1(fx, &p, false)?;
        }
    }
    Ok((rel(li / (h * h), i0), rel(l1 / (h * h), i10)))
}
