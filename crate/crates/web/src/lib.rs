//! Browser bindings: draw a geodesic tree with its interface portrait, trace a
//! point-to-point geodesic, and run the finite duality check.

use kpzlab::duality::{edges_csv, interface_portrait, verify_duality};
use kpzlab::lattice::{LatticePoint, WeightField, Window};
use kpzlab::lpp::geodesic;
use kpzlab::trees::{build_tree, Direction};
use wasm_bindgen::prelude::*;

fn js(e: kpzlab::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn check_side(side: i32) -> Result<i64, JsError> {
    if !(2..=256).contains(&side) {
        return Err(JsError::new("side must be between 2 and 256"));
    }
    Ok(side as i64)
}

/// Down tree and its up interface portrait on a centred window, as
/// `x1,y1,x2,y2,kind` rows.
#[wasm_bindgen]
pub fn tree_edges(seed: u32, side: i32, k: i32) -> Result<String, JsError> {
    let side = check_side(side)?;
    let k = (k as i64).max(side);
    let window = Window::centered(side, 2 * k + side + 4).map_err(js)?;
    let x = WeightField::new(seed.into(), window);
    let down = build_tree(&x, &window, Direction::Down, k).map_err(js)?;
    let portrait = interface_portrait(&down);
    Ok(edges_csv(&[&down], &[&portrait]))
}

/// Vertices `i0, j0, i1, j1, ...` of the geodesic from `(i0, j0)` to `(i1, j1)`.
#[wasm_bindgen]
pub fn geodesic_points(seed: u32, i0: i32, j0: i32, i1: i32, j1: i32) -> Result<Vec<i32>, JsError> {
    check_side((i1 - i0).max(j1 - j0) + 1)?;
    let (p, q) = (LatticePoint::new(i0.into(), j0.into()), LatticePoint::new(i1.into(), j1.into()));
    let x = WeightField::new(seed.into(), Window::new(p, q, 0).map_err(js)?);
    let path = geodesic(&x, p, q).map_err(js)?;
    Ok(path.points().iter().flat_map(|p| [p.i as i32, p.j as i32]).collect())
}

/// `[match_down, match_up, compared_cells, ties, dual_mean]` for one seed.
#[wasm_bindgen]
pub fn duality_check(seed: u32, side: i32, k: i32) -> Result<Vec<f64>, JsError> {
    let side = check_side(side)?;
    let window = Window::centered(side, 0).map_err(js)?;
    let (r, _) = verify_duality(seed.into(), &window, (k as i64).max(side)).map_err(js)?;
    Ok(vec![r.match_down, r.match_up, r.compared_cells as f64, r.ties as f64, r.dual_mean])
}
