use fusiontrack::bgmotion::ShapeEstimate;
use fusiontrack::geometry::BoundingBox;
use fusiontrack::trajectory::{predict_step, TrajectoryBuffer};
use nalgebra::{Matrix2, SymmetricEigen};
use proptest::prelude::*;

fn buffer(centers: &[(f64, f64)]) -> TrajectoryBuffer {
    let mut b = TrajectoryBuffer::new(20);
    for &(x, y) in centers {
        b.push(BoundingBox::new(x, y, 16.0, 12.0));
    }
    b
}

/// OLS through `(i, v_i)` evaluated at `i = n`, by the normal equations.
fn line_oracle(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let (mut st, mut stt, mut sv, mut stv) = (0.0, 0.0, 0.0, 0.0);
    for (i, &y) in v.iter().enumerate() {
        let t = i as f64;
        st += t;
        stt += t * t;
        sv += y;
        stv += t * y;
    }
    let slope = (n * stv - st * sv) / (n * stt - st * st);
    let icept = (sv - slope * st) / n;
    icept + slope * n
}

fn rotate(p: (f64, f64), about: (f64, f64), angle: f64) -> (f64, f64) {
    let (s, c) = angle.sin_cos();
    let (x, y) = (p.0 - about.0, p.1 - about.1);
    (about.0 + c * x - s * y, about.1 + s * x + c * y)
}

fn path() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-8.0f64..8.0, -8.0f64..8.0), 3..20).prop_map(|steps| {
        let mut p = (300.0, 200.0);
        let mut out = vec![p];
        for (dx, dy) in steps {
            p = (p.0 + dx, p.1 + dy);
            out.push(p);
        }
        out
    })
}

#[test]
fn accelerating_motion_extrapolates_the_line() {
    let mut x = 0.0;
    let mut centers = vec![(x, 50.0)];
    for k in 1..20 {
        x += k as f64;
        centers.push((x, 50.0));
    }
    let (px, py) = buffer(&centers).predict_center().unwrap();
    assert!((px - (x + 20.0)).abs() < 1e-9 && (py - 50.0).abs() < 1e-9);
}

#[test]
fn growing_width_predicts_next_width() {
    let mut b = TrajectoryBuffer::new(20);
    for k in 0..20 {
        b.push(BoundingBox::new(0.0, 0.0, 10.0 + k as f64, 8.0));
    }
    let (w, h) = b.predict_size().unwrap();
    assert!((w - 30.0).abs() < 1e-9 && (h - 8.0).abs() < 1e-9);
}

#[test]
fn short_history_falls_back_to_last_box() {
    let b = buffer(&[(5.0, 6.0)]);
    assert!(b.predict_center().is_err());
    assert_eq!(b.predict_box(), Some(BoundingBox::new(5.0, 6.0, 16.0, 12.0)));
    assert_eq!(TrajectoryBuffer::new(20).predict_box(), None);
}

#[test]
fn deviation_boundary_is_accepted() {
    let b = buffer(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]);
    let shape = |w: f64, h: f64| ShapeEstimate {
        width: w,
        height: h,
        x_min: 0.0,
        x_max: w,
        y_min: 0.0,
        y_max: h,
    };
    assert!(!b.reject_deviation(&shape(16.0, 12.0), 0.25));
    assert!(!b.reject_deviation(&shape(20.0, 9.0), 0.25));
    assert!(b.reject_deviation(&shape(32.0, 12.0), 0.25));
    assert!(b.reject_deviation(&shape(16.0, 8.9), 0.25));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn linear_motion_is_predicted_exactly(
        x0 in -500.0f64..500.0, y0 in -500.0f64..500.0,
        vx in -20.0f64..20.0, vy in -20.0f64..20.0, len in 2usize..=20
    ) {
        let centers: Vec<(f64, f64)> = (0..len).map(|k| (x0 + vx * k as f64, y0 + vy * k as f64)).collect();
        let (px, py) = buffer(&centers).predict_center().unwrap();
        prop_assert!((px - (x0 + vx * len as f64)).abs() < 1e-9);
        prop_assert!((py - (y0 + vy * len as f64)).abs() < 1e-9);
    }

    #[test]
    fn collinear_displacements_match_line_fit(
        angle in 0.0f64..std::f64::consts::TAU,
        mags in prop::collection::vec(-10.0f64..10.0, 3..20)
    ) {
        let u = (angle.cos(), angle.sin());
        let mut pts = vec![[0.0, 0.0]];
        for m in &mags {
            let last = *pts.last().unwrap();
            pts.push([last[0] + m * u.0, last[1] + m * u.1]);
        }
        let d = predict_step(&pts).unwrap();
        let expected = line_oracle(&mags);
        prop_assert!((d[0] - expected * u.0).abs() < 1e-7, "{:?} vs {}", d, expected);
        prop_assert!((d[1] - expected * u.1).abs() < 1e-7, "{:?} vs {}", d, expected);
    }

    #[test]
    fn prediction_is_translation_equivariant(centers in path(), a in -300.0f64..300.0, b in -300.0f64..300.0) {
        let p = buffer(&centers).predict_center().unwrap();
        let moved: Vec<(f64, f64)> = centers.iter().map(|&(x, y)| (x + a, y + b)).collect();
        let q = buffer(&moved).predict_center().unwrap();
        prop_assert!((q.0 - p.0 - a).abs() < 1e-8 && (q.1 - p.1 - b).abs() < 1e-8);
    }

    #[test]
    fn prediction_is_rotation_equivariant(centers in path(), angle in -3.1f64..3.1) {
        let last = *centers.last().unwrap();
        let p = buffer(&centers).predict_center().unwrap();
        let turned: Vec<(f64, f64)> = centers.iter().map(|&c| rotate(c, last, angle)).collect();
        let q = buffer(&turned).predict_center().unwrap();
        let expected = rotate(p, last, angle);
        prop_assert!((q.0 - expected.0).abs() < 1e-7 && (q.1 - expected.1).abs() < 1e-7);
    }

    #[test]
    fn prediction_has_no_second_component(centers in path()) {
        let pts: Vec<[f64; 2]> = centers.iter().map(|&(x, y)| [x, y]).collect();
        let deltas: Vec<(f64, f64)> = centers.windows(2).map(|w| (w[1].0 - w[0].0, w[1].1 - w[0].1)).collect();
        let n = deltas.len() as f64;
        let mean = (deltas.iter().map(|d| d.0).sum::<f64>() / n, deltas.iter().map(|d| d.1).sum::<f64>() / n);
        let mut cov = Matrix2::zeros();
        for d in &deltas {
            let v = nalgebra::Vector2::new(d.0 - mean.0, d.1 - mean.1);
            cov += v * v.transpose();
        }
        let eig = SymmetricEigen::new(cov);
        let (hi, lo) = if eig.eigenvalues[0] >= eig.eigenvalues[1] { (0, 1) } else { (1, 0) };
        prop_assume!(eig.eigenvalues[hi] - eig.eigenvalues[lo] > 1e-6);
        let second = eig.eigenvectors.column(lo);
        let d = predict_step(&pts).unwrap();
        let off = (d[0] - mean.0) * second[0] + (d[1] - mean.1) * second[1];
        prop_assert!(off.abs() < 1e-9 * (1.0 + d[0].abs() + d[1].abs()), "second component {}", off);
    }

    #[test]
    fn buffer_keeps_the_newest(n in 0usize..60, cap in 1usize..30) {
        let mut b = TrajectoryBuffer::new(cap);
        for k in 0..n {
            b.push(BoundingBox::new(k as f64, 0.0, 4.0, 4.0));
        }
        prop_assert_eq!(b.len(), n.min(cap));
        if n > 0 {
            prop_assert_eq!(b.last().unwrap().cx, (n - 1) as f64);
            prop_assert_eq!(b.iter().next().unwrap().cx, n.saturating_sub(cap) as f64);
        }
    }
}
