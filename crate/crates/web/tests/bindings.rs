use edgefit_web::{sweep_sigma, Fitter, Scene};

#[test]
fn every_shape_renders() {
    for shape in ["cube", "solid", "ring", "square"] {
        let s = Scene::new(shape, 64, 0).unwrap();
        let maps = s.render(90.0, -20.0, 1.0).unwrap();
        assert_eq!(maps.len(), 3 * 4096);
        assert!(maps[..4096].iter().any(|&v| v > 0.0), "{shape}");
    }
}

#[test]
fn sweep_rejects_bad_variance() {
    assert!(sweep_sigma(vec![0.5, -1.0], 24, 0.15).is_err());
    assert!(sweep_sigma(vec![], 24, 0.15).is_err());
}

#[test]
fn visual_terms_change_the_trajectory() {
    let mut with = Fitter::new(64, 0.05, 1, true).unwrap();
    let mut without = Fitter::new(64, 0.05, 1, false).unwrap();
    with.advance(10).unwrap();
    without.advance(10).unwrap();
    assert_ne!(with.points(), without.points());
}
