use flowdepth::certificates::{certify_not_a4, hard_instance, Verdict};
use flowdepth::coupling::LayerSequence;
use flowdepth::decomposer::{decompose, verify, MAX_MATRICES};
use flowdepth::matcore::{format_mat1, parse_mat1, DenseMatrix};
use flowdepth::metrics::relative_frobenius;
use flowdepth::rng::{normal_matrix, seeded};
use proptest::prelude::*;

fn positive_det(seed: u64, n: usize) -> DenseMatrix {
    let mut t = normal_matrix(&mut seeded(seed), n, n);
    if t.det().unwrap() < 0.0 {
        for j in 0..n {
            t[(0, j)] = -t[(0, j)];
        }
    }
    t
}

#[test]
fn mat1_decompose_json_round_trip() {
    let t = positive_det(1, 8);
    let parsed = parse_mat1(&format_mat1(&t)).unwrap();
    assert_eq!(parsed, t);
    let r = decompose(&parsed).unwrap();
    assert!(r.matrix_count <= MAX_MATRICES);
    let back = LayerSequence::from_json(&r.layers.to_json()).unwrap();
    assert_eq!(back, r.layers);
    assert!(relative_frobenius(&back.as_matrix().unwrap(), &t).unwrap() <= 1e-9);
    assert!(verify(&r, &t).unwrap() <= 1e-9);
}

#[test]
fn hard_instance_survives_text_round_trip() {
    let t = hard_instance(5, &[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
    let parsed = parse_mat1(&format_mat1(&t)).unwrap();
    assert_eq!(certify_not_a4(&parsed, 5).unwrap().verdict, Verdict::NotInA4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn decomposed_flow_inverts(seed in any::<u64>(), half in 1usize..6) {
        let n = 2 * half;
        let t = positive_det(seed, n);
        prop_assume!(flowdepth::matcore::condition_number(&t) < 1e4);
        let r = decompose(&t).unwrap();
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let y = r.layers.apply(&x).unwrap();
        let want = t.mul_vec(&x).unwrap();
        for (a, b) in y.iter().zip(&want) {
            prop_assert!((a - b).abs() <= 1e-8 * (1.0 + b.abs()));
        }
        let x2 = r.layers.invert(&y).unwrap();
        for (a, b) in x2.iter().zip(&x) {
            prop_assert!((a - b).abs() <= 1e-8);
        }
    }
}
