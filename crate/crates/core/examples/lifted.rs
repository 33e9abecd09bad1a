//! Two-point indicators I(x,y), I1(x,y) and their decompositions.
use probekit::geometry::{canonical_domain, Vec3};
use probekit::indicator::{lifted_indicators, DirectModel};

fn main() -> probekit::Result<()> {
    let direct = DirectModel::new(&canonical_domain(2))?;
    let (x, y) = (Vec3::new(0.6, 0.0, 0.0), Vec3::new(0.0, 0.55, 0.2));
    let s = lifted_indicators(&direct, None, &x, &y)?;
    println!("I(x,y) {:.6e}  I(y,x) {:.6e}", s.i_xy, s.i_yx);
    println!("I1(x,y) {:.6e}  I1(y,x) {:.6e}", s.i1_xy, s.i1_yx);
    println!("(W_x(y) + W_y(x))/2 {:.6e}  I + I1 {:.6e}", 0.5 * (s.big_w_x_y + s.big_w_y_x), s.i_xy + s.i1_xy);
    println!("residuals: w {:.1e} w1 {:.1e} W {:.1e} sym {:.1e} cross {:.1e} {:.1e}", s.res_w_gap, s.res_w1_gap, s.res_big_w_gap, s.res_sym, s.res_cross_xy, s.res_cross_yx);
    Ok(())
}
