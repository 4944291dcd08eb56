use std::collections::HashMap;

use pitman_core::dist::{DistributionSpec, Lattice};
use pitman_core::pitman::{
    closed_form_variance, lattice_estimate, multi_lattice_covariance_exact, pitman_closed, pitman_discrete,
    pitman_estimate, pitman_multivariate, pitman_quadrature, pitman_variance_exact, pitman_variance_mc, Sample,
};
use pitman_core::rng::SeededStream;
use pitman_core::Error;
use proptest::prelude::*;

fn sample(xs: &[f64]) -> Sample {
    Sample::univariate(xs.to_vec()).unwrap()
}

/// Brute force over all `K^n` index tuples: groups tuples by their index
/// differences from the first coordinate, which is the residual class.
fn brute_lattice(points: &[f64], probs: &[f64], n: usize) -> (f64, HashMap<Vec<i64>, f64>) {
    let k = points.len();
    let mut classes: HashMap<Vec<i64>, (f64, f64)> = HashMap::new();
    let mut tuples = Vec::new();
    for code in 0..k.pow(n as u32) {
        let idx: Vec<usize> = (0..n).map(|j| (code / k.pow(j as u32)) % k).collect();
        let p: f64 = idx.iter().map(|&i| probs[i]).product();
        let mean = idx.iter().map(|&i| points[i]).sum::<f64>() / n as f64;
        let key: Vec<i64> = idx.iter().map(|&i| i as i64 - idx[0] as i64).collect();
        let e = classes.entry(key.clone()).or_default();
        e.0 += p;
        e.1 += p * mean;
        tuples.push((key, p, mean));
    }
    let cond: HashMap<Vec<i64>, f64> = classes.iter().map(|(k, (p, pm))| (k.clone(), pm / p)).collect();
    let var = tuples.iter().map(|(key, p, mean)| p * (mean - cond[key]).powi(2)).sum();
    (var, cond)
}

#[test]
fn gaussian_uniform_exponential_closed_forms() {
    let g = DistributionSpec::gaussian(0.0, 2.0);
    assert_eq!(pitman_closed(&g, &sample(&[1.0, 3.0])).unwrap(), Some(2.0));
    let u = DistributionSpec::uniform(-1.0, 1.0);
    assert!((pitman_estimate(&u, &sample(&[-0.5, 0.9])).unwrap() - 0.2).abs() < 1e-14);
    let e = DistributionSpec::exponential(1.0);
    let t = pitman_estimate(&e, &sample(&[0.4, 1.3, 2.2])).unwrap();
    assert!((t - (0.4 - 1.0 / 3.0)).abs() < 1e-14);
    assert_eq!(pitman_closed(&DistributionSpec::laplace(1.0), &sample(&[0.0, 1.0])).unwrap(), None);
}

#[test]
fn quadrature_confirms_closed_forms() {
    let cases = [
        (DistributionSpec::uniform(-1.0, 1.0), vec![-0.5, 0.9]),
        (DistributionSpec::exponential(1.0), vec![0.4, 1.3, 2.2]),
        (DistributionSpec::gaussian(0.5, 1.5), vec![0.1, -2.0, 3.3, 0.7]),
        (DistributionSpec::uniform(0.0, 3.0), vec![1.0, 2.5, 2.9]),
    ];
    for (spec, xs) in cases {
        let s = sample(&xs);
        let closed = pitman_closed(&spec, &s).unwrap().unwrap();
        let quad = pitman_quadrature(&spec, &s).unwrap();
        assert!((closed - quad).abs() < 1e-8, "{}: {closed} vs {quad}", spec.label());
    }
}

#[test]
fn lattice_estimates_match_examples() {
    let coin = Lattice::new(&[-1.0, 1.0], &[0.5, 0.5]).unwrap();
    assert!(lattice_estimate(&coin, &[-1.0, 1.0]).unwrap().abs() < 1e-15);
    assert!((lattice_estimate(&coin, &[1.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
    let skew = DistributionSpec::lattice(&[0.0, 3.0], &[0.75, 0.25]);
    assert!(pitman_discrete(&skew, &sample(&[0.0, 3.0])).unwrap().abs() < 1e-15);
}

#[test]
fn residual_class_enumeration_matches_brute_force() {
    let cases: [(&[f64], &[f64]); 4] = [
        (&[-1.0, 1.0], &[0.5, 0.5]),
        (&[-1.0, 0.0, 1.0], &[0.25, 0.5, 0.25]),
        (&[0.0, 3.0], &[0.75, 0.25]),
        (&[0.0, 1.0, 2.0, 3.0], &[0.1, 0.4, 0.2, 0.3]),
    ];
    for (points, probs) in cases {
        let l = Lattice::new(points, probs).unwrap();
        for n in 1..=5 {
            let (brute, cond) = brute_lattice(points, probs, n);
            let exact = pitman_variance_exact(&l, n).unwrap().variance;
            assert!((exact - brute).abs() < 1e-12, "{points:?} n={n}: {exact} vs {brute}");
            // Estimate on one observed tuple: mean minus its class's conditional mean.
            let xs: Vec<f64> = (0..n).map(|j| points[(j * 7 + 1) % points.len()]).collect();
            let key: Vec<i64> = xs.iter().map(|x| ((x - xs[0]) / (points[1] - points[0])).round() as i64).collect();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let t = lattice_estimate(&l, &xs).unwrap();
            assert!((t - (mean - cond[&key])).abs() < 1e-12);
        }
    }
}

#[test]
fn lattice_variance_examples() {
    let coin = Lattice::new(&[-1.0, 1.0], &[0.5, 0.5]).unwrap();
    assert!((pitman_variance_exact(&coin, 2).unwrap().variance - 0.5).abs() < 1e-15);
    assert!((pitman_variance_exact(&coin, 1).unwrap().variance - 1.0).abs() < 1e-15);
    let l = Lattice::new(&[0.0, 1.0, 2.0], &[0.2, 0.3, 0.5]).unwrap();
    assert!((pitman_variance_exact(&l, 1).unwrap().variance - l.variance()).abs() < 1e-15);
}

#[test]
fn enumeration_guard_refuses_large_problems() {
    let points: Vec<f64> = (0..200).map(f64::from).collect();
    let probs = vec![1.0 / 200.0; 200];
    let l = Lattice::new(&points, &probs).unwrap();
    assert!(matches!(pitman_variance_exact(&l, 6), Err(Error::Size { .. })));
}

#[test]
fn monte_carlo_covers_oracles() {
    let stream = SeededStream::new(5);
    let cases = [
        (DistributionSpec::gaussian(0.0, 1.0), 4, 0.25),
        (DistributionSpec::uniform(-1.0, 1.0), 2, 1.0 / 6.0),
        (DistributionSpec::exponential(1.0), 3, 1.0 / 9.0),
    ];
    for (i, (spec, n, oracle)) in cases.into_iter().enumerate() {
        let v = pitman_variance_mc(&spec, n, 100_000, &stream.fork(i as u64)).unwrap();
        assert!((v.value - oracle).abs() < 4.0 * v.stderr, "{}: {} +- {}", spec.label(), v.value, v.stderr);
        let closed = closed_form_variance(&spec, n).unwrap().unwrap();
        assert!((closed - oracle).abs() < 1e-15);
    }
}

#[test]
fn monte_carlo_is_reproducible() {
    let spec = DistributionSpec::laplace(1.0);
    let s = SeededStream::new(9);
    let a = pitman_variance_mc(&spec, 3, 2_000, &s).unwrap();
    let b = pitman_variance_mc(&spec, 3, 2_000, &s).unwrap();
    assert_eq!(a, b);
}

#[test]
fn multivariate_products_act_per_coordinate() {
    let spec = DistributionSpec::product(vec![DistributionSpec::uniform(-1.0, 1.0), DistributionSpec::gaussian(0.0, 1.0)]);
    let s = Sample::multivariate(vec![vec![-0.5, 1.0], vec![0.9, 2.0], vec![0.1, 0.0]]).unwrap();
    let t = pitman_multivariate(&spec, &s).unwrap();
    assert!((t[0] - 0.2).abs() < 1e-14);
    assert!((t[1] - 1.0).abs() < 1e-14);
}

#[test]
fn bivariate_lattice_on_the_diagonal() {
    // Mass on (0,0) and (1,1): both coordinates are the same coin on {0, 1}.
    let spec = DistributionSpec::multi_lattice(vec![vec![0.0, 0.0], vec![1.0, 1.0]], vec![0.5, 0.5]);
    let pop = spec.compile_multi().unwrap();
    let l = pop.as_lattice().unwrap();
    let cov = multi_lattice_covariance_exact(&l, 2).unwrap();
    let coin = Lattice::new(&[0.0, 1.0], &[0.5, 0.5]).unwrap();
    let v = pitman_variance_exact(&coin, 2).unwrap().variance;
    for c in cov {
        assert!((c - v).abs() < 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shift_equivariance(xs in prop::collection::vec(-0.9f64..0.9, 1..5), c in -5.0f64..5.0) {
        for spec in [
            DistributionSpec::uniform(-1.0, 1.0),
            DistributionSpec::laplace(1.0),
            DistributionSpec::gaussian(0.0, 1.0),
        ] {
            let t = pitman_estimate(&spec, &sample(&xs)).unwrap();
            let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
            let ts = pitman_estimate(&spec, &sample(&shifted)).unwrap();
            prop_assert!((ts - t - c).abs() < 1e-7, "{}: {} vs {}", spec.label(), ts, t + c);
        }
    }

    #[test]
    fn lattice_shift_by_steps(k in -3i32..3, a in 0usize..3, b in 0usize..3) {
        let points = [0.0, 1.0, 2.0];
        let l = Lattice::new(&points, &[0.2, 0.5, 0.3]).unwrap();
        let xs = [points[a], points[b]];
        let t = lattice_estimate(&l, &xs).unwrap();
        let shifted: Vec<f64> = xs.iter().map(|x| x + f64::from(k)).collect();
        prop_assert!((lattice_estimate(&l, &shifted).unwrap() - t - f64::from(k)).abs() < 1e-12);
    }
}
