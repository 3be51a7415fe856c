use momp_core::locate::*;
use momp_core::scenario::*;
use momp_core::SPEED_OF_LIGHT;
use nalgebra::{Rotation3, Vector3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const C: f64 = SPEED_OF_LIGHT;

fn room() -> Room {
    Room::new(6.0, 8.0, 3.0).unwrap()
}

fn random_placement(rng: &mut ChaCha8Rng, room: &Room) -> Placement {
    let mut point = || {
        Vector3::new(
            rng.random_range(0.2..room.lx - 0.2),
            rng.random_range(0.2..room.ly - 0.2),
            rng.random_range(0.2..room.lz - 0.2),
        )
    };
    let anchor = point();
    let user = point();
    Placement::new(room, anchor, user).unwrap()
}

/// Exact estimates from traced paths, with the receiver clock at `tau0`.
fn exact_estimates(paths: &[TracedPath], tau0: f64) -> Vec<PathEstimate> {
    paths
        .iter()
        .map(|p| PathEstimate {
            doa: p.params.doa,
            dod: p.params.dod,
            relative_delay: p.params.delay - tau0,
            gain: p.params.gain.norm(),
            valid: true,
        })
        .collect()
}

fn est(doa: Vector3<f64>, dod: Vector3<f64>, relative_delay: f64) -> PathEstimate {
    PathEstimate {
        doa: doa.normalize(),
        dod: dod.normalize(),
        relative_delay,
        gain: 1.0,
        valid: true,
    }
}

// ---------------------------------------------------------------- scenario

#[test]
fn user_above_anchor_gives_vertical_floor_and_ceiling() {
    let r = room();
    let pl = Placement::new(&r, Vector3::new(2.0, 3.0, 1.0), Vector3::new(2.0, 3.0, 2.0)).unwrap();
    let paths = trace_paths(&r, &pl, &TraceOptions::default()).unwrap();
    for p in &paths[5..7] {
        assert_eq!(p.params.doa.x, 0.0);
        assert_eq!(p.params.doa.y, 0.0);
    }
}

#[test]
fn los_delay_is_distance_over_c() {
    let r = room();
    let pl = Placement::new(&r, Vector3::new(1.0, 1.0, 2.5), Vector3::new(4.0, 6.0, 1.0)).unwrap();
    let paths = trace_paths(&r, &pl, &TraceOptions::default()).unwrap();
    assert_eq!(paths.len(), 7);
    assert_eq!(paths[0].params.delay, (pl.user - pl.anchor).norm() / C);
    assert_eq!(paths[0].params.dod, -paths[0].params.doa);
}

#[test]
fn wall_bounce_matches_explicit_reflection_point() {
    let r = room();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let pl = random_placement(&mut rng, &r);
        let paths = trace_paths(&r, &pl, &TraceOptions::default()).unwrap();
        let planes = [(0, 0.0), (0, r.lx), (1, 0.0), (1, r.ly), (2, 0.0), (2, r.lz)];
        for (p, &(axis, offset)) in paths[1..].iter().zip(&planes) {
            let mut image = pl.user;
            image[axis] = 2.0 * offset - image[axis];
            assert_eq!(p.image, image);
            // where the anchor-to-image segment crosses the plane
            let t = (offset - pl.anchor[axis]) / (image[axis] - pl.anchor[axis]);
            let bounce = pl.anchor + (image - pl.anchor) * t;
            assert!((bounce[axis] - offset).abs() < 1e-12);
            let length = (bounce - pl.anchor).norm() + (pl.user - bounce).norm();
            assert!((length / C - p.params.delay).abs() < 1e-20);
            assert!(((bounce - pl.anchor).normalize() - p.params.doa).norm() < 1e-12);
            assert!(((bounce - pl.user).normalize() - p.params.dod).norm() < 1e-12);
        }
    }
}

#[test]
fn classes_by_construction() {
    let r = room();
    let pl = Placement::new(&r, Vector3::new(1.0, 1.0, 2.5), Vector3::new(4.0, 6.0, 1.0)).unwrap();
    let paths = trace_paths(&r, &pl, &TraceOptions::default()).unwrap();
    use PathClass::*;
    assert_eq!(
        ground_truth_classes(&paths),
        vec![
            LineOfSight,
            WallReflection,
            WallReflection,
            WallReflection,
            WallReflection,
            FloorCeilingReflection,
            FloorCeilingReflection
        ]
    );
    let th = ClassifierThresholds::default();
    let got: Vec<PathClass> = exact_estimates(&paths, 0.0)
        .iter()
        .map(|p| classify_path(p, &th))
        .collect();
    assert_eq!(got, ground_truth_classes(&paths));
}

#[test]
fn classifier_agrees_with_construction_on_random_rooms() {
    let r = room();
    let th = ClassifierThresholds::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut los_like_walls = 0;
    for _ in 0..200 {
        let pl = random_placement(&mut rng, &r);
        let paths = trace_paths(&r, &pl, &TraceOptions::default()).unwrap();
        for (p, e) in paths.iter().zip(exact_estimates(&paths, 0.0)) {
            let got = classify_path(&e, &th);
            if p.class == PathClass::WallReflection && got == PathClass::LineOfSight {
                // a wall bounce nearly parallel to its wall keeps azimuths ~180 deg apart
                let az = |v: Vector3<f64>| v.y.atan2(v.x);
                assert!((az(e.doa) - az(e.dod)).cos() < th.r_az - 1.0);
                los_like_walls += 1;
            } else {
                assert_eq!(got, p.class, "{pl:?}");
            }
        }
    }
    assert!(los_like_walls < 40, "{los_like_walls}");
}

#[test]
fn equal_heights_keep_walls_walls() {
    let r = room();
    let pl = Placement::new(&r, Vector3::new(1.0, 2.0, 1.5), Vector3::new(4.5, 5.0, 1.5)).unwrap();
    let paths = trace_paths(&r, &pl, &TraceOptions::default()).unwrap();
    let th = ClassifierThresholds::default();
    for (p, e) in paths[1..5].iter().zip(&exact_estimates(&paths, 0.0)[1..5]) {
        assert_eq!(e.doa.z, 0.0);
        assert_eq!(classify_path(e, &th), PathClass::WallReflection, "{:?}", p.bounces);
    }
}

#[test]
fn second_order_images_are_spurious_and_distinct() {
    let r = room();
    let pl = Placement::new(&r, Vector3::new(1.0, 1.0, 2.5), Vector3::new(4.0, 6.0, 1.0)).unwrap();
    let opts = TraceOptions {
        second_order: true,
        ..TraceOptions::default()
    };
    let paths = trace_paths(&r, &pl, &opts).unwrap();
    // 6 parallel-pair orderings + 12 perpendicular pairs
    assert_eq!(paths.len(), 7 + 18);
    assert!(paths[7..]
        .iter()
        .all(|p| p.class == PathClass::Spurious && p.bounces.len() == 2));
    let los = paths[0].params.gain.norm();
    assert!(paths[1..].iter().all(|p| p.params.gain.norm() < los));
}

#[test]
fn gain_follows_free_space_and_loss() {
    let r = room();
    let pl = Placement::new(&r, Vector3::new(1.0, 1.0, 2.5), Vector3::new(4.0, 6.0, 1.0)).unwrap();
    let opts = TraceOptions::default();
    let paths = trace_paths(&r, &pl, &opts).unwrap();
    for p in &paths {
        let d = p.params.delay * C;
        let want =
            opts.wavelength_m / (4.0 * std::f64::consts::PI * d) * 10f64.powf(-(p.bounces.len() as f64) * 6.0 / 20.0);
        assert!((p.params.gain.norm() - want).abs() < 1e-15 * want.max(1.0));
        assert!(((p.params.gain.arg() + 2.0 * std::f64::consts::PI * d / opts.wavelength_m).sin()).abs() < 1e-6);
    }
}

#[test]
fn placement_validation() {
    let r = room();
    assert!(Placement::new(&r, Vector3::new(0.0, 1.0, 1.0), Vector3::new(1.0, 1.0, 1.0)).is_err());
    assert!(Placement::new(&r, Vector3::new(1.0, 1.0, 1.0), Vector3::new(1.0, 1.0, 1.0)).is_err());
    assert!(Room::new(1.0, -1.0, 1.0).is_err());
}

#[test]
fn geometric_identities_hold() {
    let r = room();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let pl = random_placement(&mut rng, &r);
        let paths = trace_paths(&r, &pl, &TraceOptions::default()).unwrap();
        let los = &paths[0].params;
        for p in &paths[1..] {
            let (lhs, rhs) = match p.class {
                PathClass::WallReflection => (p.params.doa.z * p.params.delay, los.doa.z * los.delay),
                _ => (
                    p.params.doa.xy().norm() * p.params.delay,
                    los.doa.xy().norm() * los.delay,
                ),
            };
            assert!(
                (lhs - rhs).abs() <= 1e-12 * rhs.abs().max(lhs.abs()).max(1e-300),
                "{lhs} {rhs}"
            );
            // virtual image consistency
            let v = p.image - pl.anchor;
            assert!((p.params.doa - v.normalize()).norm() < 1e-15);
            assert!((p.params.delay - v.norm() / C).abs() <= 1e-15 * p.params.delay);
        }
    }
}

// ---------------------------------------------------------------- classification

#[test]
fn back_to_back_ray_is_los() {
    let v = Vector3::new(0.3, -0.5, 0.2).normalize();
    assert_eq!(
        classify_path(&est(v, -v, 0.0), &ClassifierThresholds::default()),
        PathClass::LineOfSight
    );
}

#[test]
fn mirrored_horizontal_is_floor_ceiling() {
    let v = Vector3::new(0.3, -0.5, 0.2);
    let w = Vector3::new(-0.3, 0.5, 0.2);
    assert_eq!(
        classify_path(&est(v, w, 0.0), &ClassifierThresholds::default()),
        PathClass::FloorCeilingReflection
    );
}

#[test]
fn opposite_elevation_other_azimuth_is_wall() {
    let v = Vector3::new(0.6, 0.5, 0.2);
    let w = Vector3::new(0.6, -0.5, -0.2);
    assert_eq!(
        classify_path(&est(v, w, 0.0), &ClassifierThresholds::default()),
        PathClass::WallReflection
    );
    let odd = Vector3::new(0.6, -0.5, 0.7);
    assert_eq!(
        classify_path(&est(v, odd, 0.0), &ClassifierThresholds::default()),
        PathClass::Spurious
    );
}

// ---------------------------------------------------------------- ranging

#[test]
fn clock_offset_from_one_wall_bounce() {
    // anchor at the origin, user at (3, 4, 1), wall x = -1
    let (a, u) = (Vector3::zeros(), Vector3::new(3.0, 4.0, 1.0));
    let image = Vector3::new(-5.0, 4.0, 1.0);
    let tau0 = 2.5e-9;
    let tau1 = (u - a).norm() / C;
    let tau2 = (image - a).norm() / C;
    let los = est(u - a, a - u, tau1 - tau0);
    let mut dod = -(image - a).normalize();
    dod.x = -dod.x;
    let wall = est(image - a, dod, tau2 - tau0);
    let got = estimate_clock_offset(&los, &[(wall, classify_path(&wall, &ClassifierThresholds::default()))]).unwrap();
    assert!((got.tau0 - tau0).abs() <= 1e-12);
    assert!((got.tau0 - (tau1 - los.relative_delay)).abs() <= 1e-12);
    assert_eq!(got.rows, 1);
}

#[test]
fn duplicate_rows_do_not_change_tau0() {
    let los = est(Vector3::new(0.5, 0.5, 0.3), Vector3::new(-0.5, -0.5, -0.3), 4e-9);
    let wall = est(Vector3::new(-0.7, 0.5, 0.1), Vector3::new(-0.7, -0.5, -0.1), 9e-9);
    let one = estimate_clock_offset(&los, &[(wall, PathClass::WallReflection)]).unwrap();
    let three = estimate_clock_offset(&los, &[(wall, PathClass::WallReflection); 3]).unwrap();
    assert!((one.tau0 - three.tau0).abs() <= 1e-24);
}

#[test]
fn inconsistent_rows_give_least_squares() {
    let los = est(Vector3::new(0.5, 0.5, 0.3), Vector3::new(-0.5, -0.5, -0.3), 4e-9);
    let w1 = est(Vector3::new(-0.7, 0.5, 0.1), Vector3::new(-0.7, -0.5, -0.1), 9e-9);
    let f1 = est(Vector3::new(0.2, 0.1, -0.6), Vector3::new(-0.2, -0.1, -0.6), 7e-9);
    let got = estimate_clock_offset(
        &los,
        &[(w1, PathClass::WallReflection), (f1, PathClass::FloorCeilingReflection)],
    )
    .unwrap();
    // rows k_l (d_l + t) = k_1 (d_1 + t) as a 2x1 system, solved by SVD
    let (z1, zl) = (los.doa.z, w1.doa.z);
    let (h1, hl) = (los.doa.xy().norm(), f1.doa.xy().norm());
    let a = nalgebra::DMatrix::from_column_slice(2, 1, &[zl - z1, hl - h1]);
    let b = nalgebra::DMatrix::from_column_slice(
        2,
        1,
        &[
            z1 * los.relative_delay - zl * w1.relative_delay,
            h1 * los.relative_delay - hl * f1.relative_delay,
        ],
    );
    let x = a.svd(true, true).solve(&b, 0.0).unwrap();
    assert!((got.tau0 - x[(0, 0)]).abs() <= 1e-12 * x[(0, 0)].abs());
    assert_eq!(got.rows, 2);
}

#[test]
fn degenerate_rows_are_dropped() {
    let los = est(Vector3::new(0.5, 0.5, 0.3), Vector3::new(-0.5, -0.5, -0.3), 4e-9);
    let flat = est(Vector3::new(-0.5, 0.5, 0.3), Vector3::new(-0.5, -0.5, -0.3), 9e-9);
    let got = estimate_clock_offset(&los, &[(flat, PathClass::WallReflection)]);
    assert!(got.is_none());
    let spurious = estimate_clock_offset(&los, &[(flat, PathClass::Spurious)]);
    assert!(spurious.is_none());
}

#[test]
fn locate_user_arithmetic() {
    let los = est(Vector3::x(), -Vector3::x(), 4e-9);
    let u = locate_user(&Vector3::zeros(), &los, 6e-9).unwrap();
    assert!((u - Vector3::new(C * 1e-8, 0.0, 0.0)).norm() < 1e-12);
    assert!((u.x - 2.99792458).abs() < 1e-12);
    let shift = Vector3::new(1.0, -2.0, 0.5);
    let v = locate_user(&shift, &los, 6e-9).unwrap();
    assert_eq!(v - u, shift);
    assert!(locate_user(&Vector3::zeros(), &los, -5e-9).is_none());
}

// ---------------------------------------------------------------- localize

#[test]
fn exact_paths_locate_exactly() {
    let r = room();
    let th = ClassifierThresholds::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let pl = random_placement(&mut rng, &r);
        let paths = trace_paths(&r, &pl, &TraceOptions::default()).unwrap();
        let tau0 = paths[0].params.delay - rng.random_range(0.0..5e-9);
        let fix = localize(&exact_estimates(&paths, tau0), &pl.anchor, &th);
        assert!(fix.is_located());
        assert!((fix.position.unwrap() - pl.user).norm() <= 1e-9);
        assert!((fix.tau0.unwrap() - tau0).abs() <= 1e-12);
        assert_eq!(fix.n_wall + fix.n_floorceil + fix.n_spurious, 6);
    }
}

#[test]
fn too_few_or_spurious_only_is_no_detection() {
    let los = est(Vector3::new(0.5, 0.5, 0.3), Vector3::new(-0.5, -0.5, -0.3), 4e-9);
    let fix = localize(&[los], &Vector3::zeros(), &ClassifierThresholds::default());
    assert_eq!(fix.status, FixStatus::NoDetection(NoDetection::TooFewPaths));
    let mut junk = est(Vector3::new(0.1, 0.5, 0.3), Vector3::new(0.6, -0.5, 0.7), 6e-9);
    junk.gain = 0.5;
    let fix = localize(&[los, junk], &Vector3::zeros(), &ClassifierThresholds::default());
    assert_eq!(fix.status, FixStatus::NoDetection(NoDetection::NoRangingRows));
    assert_eq!(fix.n_spurious, 1);
}

#[test]
fn strongest_path_must_be_los() {
    let los = est(Vector3::new(0.5, 0.5, 0.3), Vector3::new(-0.5, -0.5, -0.3), 4e-9);
    let mut wall = est(Vector3::new(-0.7, 0.5, 0.1), Vector3::new(-0.7, -0.5, -0.1), 9e-9);
    wall.gain = 2.0;
    let fix = localize(&[los, wall], &Vector3::zeros(), &ClassifierThresholds::default());
    assert_eq!(fix.status, FixStatus::NoDetection(NoDetection::StrongestNotLos));
}

#[test]
fn invalid_paths_are_ignored() {
    let r = room();
    let pl = Placement::new(&r, Vector3::new(1.0, 1.0, 2.5), Vector3::new(4.0, 6.0, 1.0)).unwrap();
    let paths = trace_paths(&r, &pl, &TraceOptions::default()).unwrap();
    let mut e = exact_estimates(&paths, 0.0);
    let mut bogus = e[0];
    bogus.gain = 10.0;
    bogus.doa = Vector3::x();
    bogus.valid = false;
    e.push(bogus);
    let fix = localize(&e, &pl.anchor, &ClassifierThresholds::default());
    assert!((fix.position.unwrap() - pl.user).norm() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn classification_ignores_gain(seed in any::<u64>(), scale in 1e-6f64..1e6) {
        let r = room();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pl = random_placement(&mut rng, &r);
        let paths = trace_paths(&r, &pl, &TraceOptions::default()).unwrap();
        let th = ClassifierThresholds::default();
        for mut e in exact_estimates(&paths, 0.0) {
            let before = classify_path(&e, &th);
            e.gain *= scale;
            prop_assert_eq!(classify_path(&e, &th), before);
        }
    }

    #[test]
    fn delay_shift_moves_tau0_back(seed in any::<u64>(), shift in -3e-9f64..3e-9) {
        let r = room();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pl = random_placement(&mut rng, &r);
        let paths = trace_paths(&r, &pl, &TraceOptions::default()).unwrap();
        let th = ClassifierThresholds::default();
        let e = exact_estimates(&paths, 0.0);
        let classified: Vec<_> = e[1..].iter().map(|p| (*p, classify_path(p, &th))).collect();
        let base = estimate_clock_offset(&e[0], &classified).unwrap();
        let moved: Vec<_> = classified.iter().map(|(p, c)| {
            let mut q = *p;
            q.relative_delay += shift;
            (q, *c)
        }).collect();
        let mut los = e[0];
        los.relative_delay += shift;
        let got = estimate_clock_offset(&los, &moved).unwrap();
        prop_assert!((got.tau0 - (base.tau0 - shift)).abs() <= 1e-18);
    }

    #[test]
    fn vertical_rotation_keeps_error(seed in any::<u64>(), angle in 0.0f64..std::f64::consts::TAU) {
        let r = room();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pl = random_placement(&mut rng, &r);
        let paths = trace_paths(&r, &pl, &TraceOptions::default()).unwrap();
        let th = ClassifierThresholds::default();
        // perturb so the error is not identically zero
        let mut e = exact_estimates(&paths, 0.0);
        for (k, p) in e.iter_mut().enumerate() {
            p.relative_delay += 1e-11 * k as f64;
        }
        let fix = localize(&e, &pl.anchor, &th);
        let rot = Rotation3::from_axis_angle(&Vector3::z_axis(), angle);
        let rotated: Vec<PathEstimate> = e.iter().map(|p| PathEstimate { doa: rot * p.doa, dod: rot * p.dod, ..*p }).collect();
        let fix_r = localize(&rotated, &(rot * pl.anchor), &th);
        prop_assert_eq!(fix.status, fix_r.status);
        if let (Some(u), Some(v)) = (fix.position, fix_r.position) {
            let err = (u - pl.user).xy().norm();
            let err_r = (v - rot * pl.user).xy().norm();
            prop_assert!((err - err_r).abs() <= 1e-9);
        }
    }
}
