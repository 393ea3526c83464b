//! Algebraic identities of signatures, shuffles and the truncated tensor
//! product on random inputs.

use expsig::embedding::{embed_time_joined, PiecewiseLinearPath, TimeSeries};
use expsig::tensor::{shuffle_words, TruncatedTensor, Word};
use expsig::{signature, signature_of_time_series};
use proptest::prelude::*;

fn path_strategy(dim: usize, max_segments: usize) -> impl Strategy<Value = PiecewiseLinearPath> {
    prop::collection::vec(prop::collection::vec(-1.5f64..1.5, dim), 2..=max_segments + 1)
        .prop_map(|v| PiecewiseLinearPath::new(v).unwrap())
}

fn tensor_strategy(dim: usize, degree: usize) -> impl Strategy<Value = TruncatedTensor> {
    let size = expsig::tensor_size(dim, degree);
    prop::collection::vec(-2.0f64..2.0, size)
        .prop_map(move |c| TruncatedTensor::from_flat(dim, degree, c).unwrap())
}

fn word_pairs(dim: usize, total: usize) -> Vec<(Word, Word)> {
    let words = Word::all(dim, total);
    let mut out = Vec::new();
    for a in &words {
        for b in &words {
            if a.len() + b.len() <= total {
                out.push((a.clone(), b.clone()));
            }
        }
    }
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn product_of_coordinates_is_shuffle(path in path_strategy(2, 6)) {
        let sig = signature(&path, 4);
        for (a, b) in word_pairs(2, 4) {
            let lhs = sig.project(&a).unwrap() * sig.project(&b).unwrap();
            let rhs = shuffle_words(&a, &b, 2).apply(&sig).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()), "{} {}: {} vs {}", a, b, lhs, rhs);
        }
    }

    #[test]
    fn chen_identity(a in path_strategy(2, 4), b in path_strategy(2, 4)) {
        // translate b so it starts where a ends
        let end = a.vertices().last().unwrap().clone();
        let start = b.vertices()[0].clone();
        let shifted = PiecewiseLinearPath::new(
            b.vertices().iter().map(|v| vec![v[0] - start[0] + end[0], v[1] - start[1] + end[1]]).collect(),
        ).unwrap();
        let joined = a.concat(&shifted).unwrap();
        let lhs = signature(&joined, 5);
        let rhs = signature(&a, 5).mul(&signature(&b, 5)).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-12 * (1.0 + lhs.coeffs().iter().fold(0.0f64, |m, x| m.max(x.abs()))));
    }

    #[test]
    fn product_is_associative_and_distributive(
        a in tensor_strategy(2, 3), b in tensor_strategy(2, 3), c in tensor_strategy(2, 3)
    ) {
        let left = a.mul(&b).unwrap().mul(&c).unwrap();
        let right = a.mul(&b.mul(&c).unwrap()).unwrap();
        prop_assert!(left.max_abs_diff(&right).unwrap() <= 1e-12 * 64.0);
        let dist = a.mul(&b.add(&c).unwrap()).unwrap();
        let sum = a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap();
        prop_assert!(dist.max_abs_diff(&sum).unwrap() <= 1e-12 * 16.0);
        prop_assert!(a.scale(2.0).max_abs_diff(&a.add(&a).unwrap()).unwrap() == 0.0);
    }

    #[test]
    fn truncation_commutes_with_product(a in tensor_strategy(3, 4), b in tensor_strategy(3, 4), m in 0usize..=4) {
        let lhs = a.mul(&b).unwrap().truncate(m).unwrap();
        let rhs = a.truncate(m).unwrap().mul(&b.truncate(m).unwrap()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() == 0.0);
    }

    #[test]
    fn single_segment_levels_are_symmetric(u in prop::collection::vec(-2.0f64..2.0, 3)) {
        let s = TruncatedTensor::exp(&u, 3);
        for (w, v) in s.iter_words() {
            let mut sorted = w.letters().to_vec();
            sorted.sort_unstable();
            let other = s.coeff(&sorted).unwrap();
            prop_assert!((v - other).abs() <= 1e-15 * (1.0 + v.abs()));
        }
    }

    #[test]
    fn refining_a_segment_keeps_the_signature(path in path_strategy(2, 5), at in 0.05f64..0.95) {
        let mut v = path.vertices().to_vec();
        let (p, q) = (v[0].clone(), v[1].clone());
        v.insert(1, vec![p[0] + at * (q[0] - p[0]), p[1] + at * (q[1] - p[1])]);
        let refined = PiecewiseLinearPath::new(v).unwrap();
        let d = signature(&path, 4).max_abs_diff(&signature(&refined, 4)).unwrap();
        prop_assert!(d <= 1e-12);
    }

    #[test]
    fn time_joined_path_shape(values in prop::collection::vec(-3.0f64..3.0, 1..10)) {
        let ts = TimeSeries::uniform(values.clone()).unwrap();
        let path = embed_time_joined(&ts);
        prop_assert_eq!(path.vertices().len(), 2 * (values.len() - 1) + 2);
        for w in path.vertices().windows(2) {
            prop_assert!(w[1][0] >= w[0][0]);
        }
        let direct = signature_of_time_series(&ts, 4);
        prop_assert!(direct.max_abs_diff(&signature(&path, 4)).unwrap() <= 1e-12);
        prop_assert!((direct.coeff(&[2]).unwrap() - values[values.len() - 1]).abs() <= 1e-12);
    }
}

#[test]
fn shuffle_multiplicity_is_binomial() {
    for (a, b) in word_pairs(2, 6) {
        let total: f64 = shuffle_words(&a, &b, 2).terms().values().sum();
        assert_eq!(total, binomial(a.len() + b.len(), a.len()), "{a} ⧢ {b}");
    }
    let w = |l: &[usize]| Word::new(l.to_vec(), 2).unwrap();
    assert_eq!(shuffle_words(&Word::empty(), &w(&[1, 2]), 2), expsig::LinearForm::word(w(&[1, 2]), 2));
}

#[test]
fn exponentials_commute_only_along_a_line() {
    let u = [0.5, -1.0];
    let v = [1.5, -3.0];
    let prod = TruncatedTensor::exp(&u, 4).mul(&TruncatedTensor::exp(&v, 4)).unwrap();
    let sum = TruncatedTensor::exp(&[2.0, -4.0], 4);
    assert!(prod.max_abs_diff(&sum).unwrap() < 1e-12);
    let w = [0.3, 0.8];
    let ab = TruncatedTensor::exp(&u, 2).mul(&TruncatedTensor::exp(&w, 2)).unwrap();
    let ba = TruncatedTensor::exp(&w, 2).mul(&TruncatedTensor::exp(&u, 2)).unwrap();
    assert!((ab.coeff(&[1, 2]).unwrap() - ba.coeff(&[1, 2]).unwrap()).abs() > 0.1);
    assert_eq!(ab.level(1), ba.level(1));
}
