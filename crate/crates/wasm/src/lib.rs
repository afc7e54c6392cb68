//! Browser bindings: a potential curve, the predicted spectrum and the
//! oracle's levels on a coarse grid.
//!
//! Families travel as the JSON form of [`FamilySpec`], e.g.
//! `{"l":2,"chain":[{"k":-1,"lambda":2}]}`; every result is a JSON string.
//! The exported functions are thin wrappers over the plain functions below.

use isospec::families::{build_potential, predicted_spectrum};
use isospec::verify::{compare_spectrum, SpectrumReport};
use isospec::{FamilySpec, RadialGrid};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Grid for in-browser eigenvalues: first node at `h`, so the Dirichlet
/// wall sits at the origin.
pub fn demo_grid() -> RadialGrid {
    RadialGrid::new(0.01, 100.0, 10_000).expect("valid constant grid")
}

pub const MAX_CURVE_POINTS: usize = 20_000;
pub const MAX_LEVELS: usize = 8;

#[derive(Debug, Serialize)]
pub struct Curve {
    pub l_out: u32,
    pub r: Vec<f64>,
    pub v_partner: Vec<f64>,
    pub v_base: Vec<f64>,
}

fn parse(family_json: &str) -> Result<FamilySpec, String> {
    serde_json::from_str(family_json).map_err(|e| format!("invalid family: {e}"))
}

fn to_json(value: &impl Serialize) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

pub fn curve(family_json: &str, r_min: f64, r_max: f64, n: usize) -> Result<Curve, String> {
    if n > MAX_CURVE_POINTS {
        return Err(format!("at most {MAX_CURVE_POINTS} points"));
    }
    let family = parse(family_json)?;
    let potential = build_potential(&family).map_err(|e| e.to_string())?;
    let grid = RadialGrid::new(r_min, r_max, n).map_err(|e| e.to_string())?;
    let v_partner = potential.sample(&grid).map_err(|e| e.to_string())?.into_values();
    let r: Vec<f64> = grid.points().collect();
    let v_base = r.iter().map(|&x| potential.base_value(x)).collect();
    Ok(Curve {
        l_out: potential.l_out(),
        r,
        v_partner,
        v_base,
    })
}

pub fn spectrum_json(family_json: &str, levels: usize) -> Result<String, String> {
    let family = parse(family_json)?;
    let levels = levels.clamp(1, MAX_LEVELS);
    family.validated_seeds().map_err(|e| e.to_string())?;
    let s = predicted_spectrum(&family, levels as u32).map_err(|e| e.to_string())?;
    to_json(&s.lowest(levels))
}

pub fn levels_report(family_json: &str, levels: usize) -> Result<SpectrumReport, String> {
    let family = parse(family_json)?;
    let levels = levels.clamp(1, MAX_LEVELS);
    let potential = build_potential(&family).map_err(|e| e.to_string())?;
    let predicted = predicted_spectrum(&family, levels as u32)
        .map_err(|e| e.to_string())?
        .lowest(levels);
    // the coarse grid resolves levels to about 1e-3
    compare_spectrum(&potential, &predicted, &demo_grid(), 5e-3).map_err(|e| e.to_string())
}

/// `{"l_out", "r", "v_partner", "v_base"}` for plotting.
#[wasm_bindgen(js_name = potentialCurve)]
pub fn potential_curve(family_json: &str, r_min: f64, r_max: f64, n: usize) -> Result<String, JsError> {
    curve(family_json, r_min, r_max, n)
        .and_then(|c| to_json(&c))
        .map_err(|e| JsError::new(&e))
}

/// Predicted levels with their origin and the holes between them.
#[wasm_bindgen(js_name = predictedSpectrum)]
pub fn predicted_spectrum_js(family_json: &str, levels: usize) -> Result<String, JsError> {
    spectrum_json(family_json, levels).map_err(|e| JsError::new(&e))
}

/// Eigenvalues of the discretized partner next to the prediction.
#[wasm_bindgen(js_name = computedLevels)]
pub fn computed_levels(family_json: &str, levels: usize) -> Result<String, JsError> {
    levels_report(family_json, levels)
        .and_then(|r| to_json(&r))
        .map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HOLE: &str = r#"{"l":2,"chain":[{"k":-1,"lambda":2}]}"#;

    #[test]
    fn curve_shape() {
        let c = curve(HOLE, 0.1, 20.0, 200).unwrap();
        assert_eq!(c.l_out, 1);
        assert_eq!(c.r.len(), 200);
        assert!((c.v_base[0] - (2.0 / 0.01 - 2.0 / 0.1)).abs() < 1e-9);
        assert!(curve(HOLE, 0.1, 20.0, MAX_CURVE_POINTS + 1).is_err());
    }

    #[test]
    fn spectrum_has_hole() {
        let s: serde_json::Value = serde_json::from_str(&spectrum_json(HOLE, 3).unwrap()).unwrap();
        assert_eq!(s["holes"][0]["n"], 2);
        assert_eq!(s["levels"][0]["energy"], -1.0);
    }

    #[test]
    fn coarse_levels_match() {
        let r = levels_report(HOLE, 3).unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn bad_input() {
        assert!(spectrum_json("{", 3).is_err());
        assert!(spectrum_json(r#"{"l":2,"chain":[{"k":-1,"lambda":0}]}"#, 3).is_err());
    }
}
