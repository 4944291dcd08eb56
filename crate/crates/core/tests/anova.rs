use pitman_core::anova::{
    decomposability_test, hoeffding_decompose, loewner_ge, subsets, variance_drop_check, SubsetFunction,
};
use proptest::prelude::*;

fn uniform(k: usize) -> Vec<f64> {
    vec![1.0 / k as f64; k]
}

fn brute_mean_var(f: &SubsetFunction, dists: &[Vec<f64>]) -> (f64, f64) {
    let sizes = &f.sizes;
    let mut idx = vec![0usize; sizes.len()];
    let (mut m1, mut m2) = (0.0, 0.0);
    for cell in 0..f.cells() {
        let mut rem = cell;
        for j in (0..sizes.len()).rev() {
            idx[j] = rem % sizes[j];
            rem /= sizes[j];
        }
        let p: f64 = f.subset.iter().zip(&idx).map(|(&c, &v)| dists[c][v]).product();
        let x = f.table[cell];
        m1 += p * x;
        m2 += p * x * x;
    }
    (m1, m2 - m1 * m1)
}

#[test]
fn sum_and_product_components() {
    let dists = vec![uniform(2), uniform(2)];
    let pm = [-1.0, 1.0];
    let sum = SubsetFunction::from_fn(vec![0, 1], vec![2, 2], |i| pm[i[0]] + pm[i[1]]).unwrap();
    let d = hoeffding_decompose(&sum, &dists).unwrap();
    assert!(d.component_variance_of(&[0, 1]).unwrap().abs() < 1e-15);
    assert!((d.component_variance_of(&[0]).unwrap() - 1.0).abs() < 1e-15);

    let prod = SubsetFunction::from_fn(vec![0, 1], vec![2, 2], |i| pm[i[0]] * pm[i[1]]).unwrap();
    let d = hoeffding_decompose(&prod, &dists).unwrap();
    assert!((d.component_variance_of(&[0, 1]).unwrap() - 1.0).abs() < 1e-15);
    assert!(d.component_variance_of(&[0]).unwrap().abs() < 1e-15);
    assert!(d.component_variance_of(&[1]).unwrap().abs() < 1e-15);

    assert!(decomposability_test(&sum, &dists).unwrap());
    assert!(!decomposability_test(&prod, &dists).unwrap());
    // A product with a degenerate coordinate is additive.
    let degenerate = vec![uniform(2), vec![1.0]];
    let f = SubsetFunction::from_fn(vec![0, 1], vec![2, 1], |i| pm[i[0]] * 3.0).unwrap();
    assert!(decomposability_test(&f, &degenerate).unwrap());
}

#[test]
fn product_pairs_drop_strictly() {
    // Pairwise products of centred +-1 coordinates are uncorrelated with unit
    // variance, so lhs = Σ w² and rhs = C(2, 1) Σ w².
    let dists = vec![uniform(2); 3];
    let pm = [-1.0, 1.0];
    let subs = subsets(3, 2);
    let weights = [0.2, 0.3, 0.5];
    let fs: Vec<SubsetFunction> = subs
        .iter()
        .map(|s| SubsetFunction::from_fn(s.clone(), vec![2, 2], |i| pm[i[0]] * pm[i[1]]).unwrap())
        .collect();
    let r = variance_drop_check(&fs, &weights, &dists).unwrap();
    let w2: f64 = weights.iter().map(|w| w * w).sum();
    assert!((r.lhs[0] - w2).abs() < 1e-15);
    assert!((r.rhs[0] - 2.0 * w2).abs() < 1e-15);
    assert!(!r.equality_predicted);
}

#[test]
fn independent_singletons_are_tight() {
    let dists = vec![uniform(3), vec![0.2, 0.8]];
    let fs = vec![
        SubsetFunction::scalar(vec![0], vec![3], vec![1.0, -2.0, 0.5]).unwrap(),
        SubsetFunction::scalar(vec![1], vec![2], vec![4.0, 1.0]).unwrap(),
    ];
    let r = variance_drop_check(&fs, &[0.4, 0.6], &dists).unwrap();
    assert!(r.gap.abs() < 1e-14);
    assert!(r.equality_predicted);
}

#[test]
fn loewner_examples() {
    use nalgebra::DMatrix;
    let i = DMatrix::<f64>::identity(2, 2);
    assert!(loewner_ge(&i, &DMatrix::zeros(2, 2), 1e-12).unwrap());
    let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
    let b = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
    assert!(!loewner_ge(&a, &b, 1e-12).unwrap());
    assert!(loewner_ge(&(&i * 2.0), &i, 1e-12).unwrap());
}

fn random_function() -> impl Strategy<Value = (Vec<usize>, Vec<Vec<f64>>, Vec<f64>)> {
    prop::collection::vec(2usize..=3, 1..=3).prop_flat_map(|sizes| {
        let cells: usize = sizes.iter().product();
        let dists = sizes
            .iter()
            .map(|&k| prop::collection::vec(0.1f64..1.0, k).prop_map(|v| {
                let s: f64 = v.iter().sum();
                v.into_iter().map(|p| p / s).collect::<Vec<f64>>()
            }))
            .collect::<Vec<_>>();
        (Just(sizes), dists, prop::collection::vec(-5.0f64..5.0, cells))
    })
}

proptest! {
    #[test]
    fn decomposition_is_orthogonal_and_complete((sizes, dists, table) in random_function()) {
        let subset: Vec<usize> = (0..sizes.len()).collect();
        let f = SubsetFunction::scalar(subset, sizes, table).unwrap();
        let d = hoeffding_decompose(&f, &dists).unwrap();
        let (_, var) = brute_mean_var(&f, &dists);
        prop_assert!((d.variance() - var).abs() < 1e-10 * var.max(1.0));
        prop_assert!(d.orthogonality_error() < 1e-10);
        prop_assert!(d.reconstruction_error(&f) < 1e-10);
    }
}
