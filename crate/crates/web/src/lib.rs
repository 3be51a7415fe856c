//! Browser demo. Each operation is a plain Rust function over [`Scene`],
//! testable natively, with a `wasm_bindgen` wrapper that takes and returns
//! JSON strings.

use momp_core::channel::{
    complete_direction, full_scale_arrays, full_scale_training, ArrayGeometry, Mount, PathParams,
};
use momp_core::locate::{localize, ClassifierThresholds, LocationFix, PathClass, PathEstimate};
use momp_core::pipeline::{Link, LinkConfig};
use momp_core::scenario::{trace_paths, Placement, Room, TraceOptions};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

/// Room, wall-mounted access point and user, in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub room: [f64; 3],
    pub anchor: [f64; 3],
    pub user: [f64; 3],
    #[serde(default)]
    pub second_order: bool,
}

impl Default for Scene {
    fn default() -> Self {
        Self {
            room: [6.0, 8.0, 3.0],
            anchor: [3.0, 0.05, 2.5],
            user: [2.0, 4.0, 1.2],
            second_order: false,
        }
    }
}

impl Scene {
    fn placement(&self) -> Result<(Room, Placement), String> {
        let room = Room::new(self.room[0], self.room[1], self.room[2]).map_err(|e| e.to_string())?;
        let placement =
            Placement::new(&room, Vector3::from(self.anchor), Vector3::from(self.user)).map_err(|e| e.to_string())?;
        Ok((room, placement))
    }

    fn paths(&self) -> Result<(Placement, Vec<(PathParams, PathClass)>), String> {
        let (room, placement) = self.placement()?;
        let opts = TraceOptions {
            second_order: self.second_order,
            ..TraceOptions::default()
        };
        let traced = trace_paths(&room, &placement, &opts).map_err(|e| e.to_string())?;
        Ok((placement, traced.into_iter().map(|t| (t.params, t.class)).collect()))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PathView {
    pub class: PathClass,
    pub delay_ns: f64,
    pub gain_db: f64,
    pub doa: [f64; 3],
    pub dod: [f64; 3],
    /// Whether the wall-mounted arrays of the demo links can see the path.
    pub visible: bool,
}

fn arr(v: &Vector3<f64>) -> [f64; 3] {
    [v.x, v.y, v.z]
}

/// Image-method paths of a scene.
pub fn trace(scene: &Scene) -> Result<Vec<PathView>, String> {
    let (_, paths) = scene.paths()?;
    let cfg = LinkConfig::tiny();
    Ok(paths
        .iter()
        .map(|(p, class)| PathView {
            class: *class,
            delay_ns: p.delay * 1e9,
            gain_db: 20.0 * p.gain.norm().log10(),
            doa: arr(&p.doa),
            dod: arr(&p.dod),
            visible: cfg.rx.sees(&p.doa) && cfg.tx.sees(&p.dod),
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct FixView {
    pub status: &'static str,
    pub position: Option<[f64; 3]>,
    pub tau0_ns: Option<f64>,
    pub error_m: Option<f64>,
    pub n_wall: usize,
    pub n_floorceil: usize,
    pub n_spurious: usize,
}

impl FixView {
    fn new(fix: &LocationFix, truth: &Vector3<f64>) -> Self {
        Self {
            status: fix.status.label(),
            position: fix.position.as_ref().map(arr),
            tau0_ns: fix.tau0.map(|t| t * 1e9),
            error_m: fix.position.map(|p| (p - truth).norm()),
            n_wall: fix.n_wall,
            n_floorceil: fix.n_floorceil,
            n_spurious: fix.n_spurious,
        }
    }
}

/// Nearest point of the angular grid `-1 + 2j/n`, `j = 0..n`.
fn snap(v: f64, n: usize) -> f64 {
    let j = ((v + 1.0) * n as f64 / 2.0).round().clamp(0.0, (n - 1) as f64);
    -1.0 + 2.0 * j / n as f64
}

/// Moves a direction onto the dictionary grid of `array` at `k_res`.
pub fn quantize_direction(dir: &Vector3<f64>, array: &ArrayGeometry, k_res: f64) -> Option<Vector3<f64>> {
    let local = array.mount.to_local(dir);
    let nx = (k_res * array.nx as f64).round() as usize;
    let ny = (k_res * array.ny as f64).round() as usize;
    let (cx, cy) = (snap(local.x, nx), snap(local.y, ny));
    let r = cx.hypot(cy);
    let (cx, cy) = if r > 1.0 { (cx / r, cy / r) } else { (cx, cy) };
    complete_direction(array, cx, cy)
}

/// Localizes from the true paths after snapping every angle and relative
/// delay to the full-scale dictionary grid at `k_res`: the error a perfect
/// solver would still make.
pub fn localize_quantized(scene: &Scene, k_res: f64) -> Result<FixView, String> {
    if !(k_res >= 1.0 && k_res.is_finite()) {
        return Err(format!("K_res must be at least 1, got {k_res}"));
    }
    let (placement, paths) = scene.paths()?;
    let (tx, rx) = full_scale_arrays();
    let (tx, rx) = (tx.with_mount(Mount::NegY), rx.with_mount(Mount::PosY));
    let t_s = full_scale_training().sampling_time_s;
    let visible: Vec<&PathParams> = paths
        .iter()
        .map(|(p, _)| p)
        .filter(|p| rx.sees(&p.doa) && tx.sees(&p.dod))
        .collect();
    let tau0 = visible.iter().map(|p| p.delay).fold(f64::INFINITY, f64::min) - t_s;
    let step = t_s / k_res;
    let estimates: Vec<PathEstimate> = visible
        .iter()
        .filter_map(|p| {
            Some(PathEstimate {
                doa: quantize_direction(&p.doa, &rx, k_res)?,
                dod: quantize_direction(&p.dod, &tx, k_res)?,
                relative_delay: ((p.delay - tau0) / step).round() * step,
                gain: p.gain.norm(),
                valid: true,
            })
        })
        .collect();
    let fix = localize(&estimates, &placement.anchor, &ClassifierThresholds::default());
    Ok(FixView::new(&fix, &placement.user))
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimatedPath {
    pub doa: [f64; 3],
    pub dod: [f64; 3],
    pub relative_delay_ns: f64,
    pub gain: f64,
    pub valid: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LinkView {
    pub visible_paths: usize,
    pub paths: Vec<EstimatedPath>,
    pub residual_norms: Vec<f64>,
    pub nmse_db: f64,
    pub fix: FixView,
}

/// Largest `K_res` the browser demo builds dictionaries for.
pub const MAX_DEMO_K_RES: f64 = 64.0;

/// Named link for [`estimate_link`]: `tiny` or `desk`.
pub fn link_config(name: &str, k_res: f64) -> Result<(LinkConfig, ClassifierThresholds), String> {
    if k_res > MAX_DEMO_K_RES {
        return Err(format!("K_res above {MAX_DEMO_K_RES} is too large for the demo"));
    }
    let cfg = match name {
        "tiny" => LinkConfig::tiny(),
        "desk" => LinkConfig::desk(),
        _ => return Err(format!("unknown link {name:?}; expected tiny or desk")),
    };
    let cfg = LinkConfig { k_res, ..cfg };
    cfg.validate().map_err(|e| e.to_string())?;
    Ok((cfg, ClassifierThresholds { r_az: 0.5, r_el: 0.25 }))
}

/// Synthesizes the training observation, runs MOMP and localizes.
pub fn estimate_link(scene: &Scene, link: &str, k_res: f64, seed: u64) -> Result<LinkView, String> {
    let (cfg, th) = link_config(link, k_res)?;
    let (placement, paths) = scene.paths()?;
    let paths: Vec<PathParams> = paths.into_iter().map(|(p, _)| p).collect();
    let link = Link::new(cfg).map_err(|e| e.to_string())?;
    let est = link.estimate(&paths, seed).map_err(|e| e.to_string())?;
    let (mut err, mut norm) = (0.0, 0.0);
    for (h, g) in est.taps.iter().zip(&est.estimated_taps) {
        err += (h - g).norm_squared();
        norm += h.norm_squared();
    }
    let nmse_db = if err == 0.0 {
        -300.0
    } else {
        10.0 * (err / norm).log10()
    };
    let fix = localize(&est.estimates, &placement.anchor, &th);
    Ok(LinkView {
        visible_paths: est.paths.len(),
        paths: est
            .estimates
            .iter()
            .map(|p| EstimatedPath {
                doa: arr(&p.doa),
                dod: arr(&p.dod),
                relative_delay_ns: p.relative_delay * 1e9,
                gain: p.gain,
                valid: p.valid,
            })
            .collect(),
        residual_norms: est.solution.residual_norm_history.clone(),
        nmse_db,
        fix: FixView::new(&fix, &placement.user),
    })
}

fn parse(scene: &str) -> Result<Scene, JsError> {
    serde_json::from_str(scene).map_err(|e| JsError::new(&e.to_string()))
}

fn reply<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = defaultScene)]
pub fn default_scene_js() -> String {
    serde_json::to_string(&Scene::default()).expect("scene serializes")
}

#[wasm_bindgen(js_name = trace)]
pub fn trace_js(scene: &str) -> Result<String, JsError> {
    reply(trace(&parse(scene)?))
}

#[wasm_bindgen(js_name = localizeQuantized)]
pub fn localize_quantized_js(scene: &str, k_res: f64) -> Result<String, JsError> {
    reply(localize_quantized(&parse(scene)?, k_res))
}

#[wasm_bindgen(js_name = estimateLink)]
pub fn estimate_link_js(scene: &str, link: &str, k_res: f64, seed: u32) -> Result<String, JsError> {
    reply(estimate_link(&parse(scene)?, link, k_res, u64::from(seed)))
}
