use momp_core::channel::{full_scale_arrays, ArrayGeometry, Mount};
use momp_core::locate::PathClass;
use momp_web::{estimate_link, link_config, localize_quantized, quantize_direction, trace, Scene};
use nalgebra::Vector3;

#[test]
fn trace_lists_los_and_six_reflections() {
    let scene = Scene::default();
    let paths = trace(&scene).unwrap();
    assert_eq!(paths.len(), 7);
    assert_eq!(paths[0].class, PathClass::LineOfSight);
    let a = Vector3::from(scene.anchor);
    let u = Vector3::from(scene.user);
    let los_ns = (u - a).norm() / momp_core::SPEED_OF_LIGHT * 1e9;
    assert!((paths[0].delay_ns - los_ns).abs() < 1e-9);
    assert!(paths[1..].iter().all(|p| p.delay_ns > paths[0].delay_ns));
    // the y = 0 wall reflection arrives from behind the access point
    assert!(!paths[3].visible && paths[0].visible);

    let second = trace(&Scene {
        second_order: true,
        ..scene
    })
    .unwrap();
    assert!(second.len() > 7);
    assert!(second[7..].iter().all(|p| p.class == PathClass::Spurious));
}

#[test]
fn scene_errors_are_reported() {
    let outside = Scene {
        user: [7.0, 4.0, 1.0],
        ..Scene::default()
    };
    assert!(trace(&outside).is_err());
    assert!(localize_quantized(&Scene::default(), 0.5).is_err());
    assert!(link_config("huge", 2.0).is_err());
    assert!(link_config("tiny", 0.0).is_err());
    assert!(link_config("desk", 1000.0).is_err());
}

#[test]
fn quantized_directions_sit_on_the_grid() {
    let array = ArrayGeometry {
        nx: 4,
        ny: 4,
        mount: Mount::PosY,
    };
    let k_res = 8.0;
    let n = 32.0;
    let dir = Vector3::new(0.3, 0.8, -0.2).normalize();
    let q = quantize_direction(&dir, &array, k_res).unwrap();
    assert!((q.norm() - 1.0).abs() < 1e-12);
    let local = array.mount.to_local(&q);
    for c in [local.x, local.y] {
        let j = (c + 1.0) * n / 2.0;
        assert!((j - j.round()).abs() < 1e-9, "{c} off grid");
    }
    assert!((q - dir).norm() < 2.0 * 2.0 / n);
}

#[test]
fn quantized_localization_tightens_with_resolution() {
    let scene = Scene::default();
    let coarse = localize_quantized(&scene, 2.0).unwrap();
    let fine = localize_quantized(&scene, 256.0).unwrap();
    assert_eq!(fine.status, "located");
    assert!(fine.error_m.unwrap() < 0.05, "{:?}", fine.error_m);
    if let Some(e) = coarse.error_m {
        assert!(fine.error_m.unwrap() <= e);
    }
    let (tx, rx) = full_scale_arrays();
    assert_eq!((tx.len(), rx.len()), (16, 64));
}

#[test]
fn tiny_link_recovers_visible_paths() {
    let r = estimate_link(&Scene::default(), "tiny", 2.0, 1).unwrap();
    assert!(r.visible_paths >= 1);
    assert!(!r.paths.is_empty() && r.paths.len() <= 3);
    assert!(r.residual_norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    assert!(r.nmse_db < 0.0, "{}", r.nmse_db);
    let again = estimate_link(&Scene::default(), "tiny", 2.0, 1).unwrap();
    assert_eq!(r.nmse_db, again.nmse_db);
}

#[test]
fn desk_link_runs_and_serializes() {
    let r = estimate_link(&Scene::default(), "desk", 4.0, 7).unwrap();
    let json = serde_json::to_value(&r).unwrap();
    for key in ["visible_paths", "paths", "residual_norms", "nmse_db", "fix"] {
        assert!(json.get(key).is_some(), "{key}");
    }
    assert!(json["fix"]["status"].is_string());
}
