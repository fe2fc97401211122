mod oracles;

use maternal_core::stats::pearson;
use proptest::prelude::*;

#[test]
fn matrix_properties_on_random_data() {
    for seed in 0..200 {
        oracles::correlation_case(seed).unwrap();
    }
}

#[test]
fn hand_value() {
    assert!((pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn large_offset_is_stable() {
    let x = [1e9 + 1.0, 1e9 + 2.0, 1e9 + 3.0];
    let y = [1.0, 3.0, 2.0];
    assert!((pearson(&x, &y).unwrap() - 0.5).abs() < 1e-9);
}

proptest! {
    #[test]
    fn bounded_and_symmetric(pairs in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 2..50)) {
        let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        if let (Ok(r), Ok(s)) = (pearson(&x, &y), pearson(&y, &x)) {
            prop_assert!((-1.0..=1.0).contains(&r));
            prop_assert!((r - s).abs() <= 1e-12);
            let naive = oracles::naive_pearson(&x, &y);
            prop_assert!((r - naive.clamp(-1.0, 1.0)).abs() <= 1e-9);
        }
    }
}
