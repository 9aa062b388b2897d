use binsense::certificates::build_certificate;
use binsense::proof_analysis::*;
use binsense::randomness::{sample_binary_signal, sample_generator, sample_selection, Ensemble, Seed, Stream};
use binsense::{BinarySignal, IndexSet, MeasurementOperator};
use nalgebra::{DMatrix, DVector};

const RADEMACHER: Ensemble = Ensemble::Rademacher { amplitude: 1.0 };

fn instance(n: usize, m: usize, s: usize, seed: u64) -> (IndexSet, IndexSet) {
    let sd = Seed::new(seed);
    let theta = sample_selection(n, m, &mut sd.rng(Stream::Selection, &[])).unwrap();
    let sup = sample_binary_signal(n, s, &mut sd.rng(Stream::Signal, &[])).unwrap();
    (
        IndexSet::new(n, theta).unwrap(),
        IndexSet::new(n, sup.support().iter().copied()).unwrap(),
    )
}

/// Top singular value by power iteration on `AᵀA`, then the next one after
/// deflating, as an oracle independent of the eigen decomposition.
fn power_singular_values(a: &DMatrix<f64>) -> (f64, f64) {
    let g = a.transpose() * a;
    let n = g.nrows();
    let run = |g: &DMatrix<f64>| {
        let mut v = DVector::from_fn(n, |i, _| 1.0 + ((i * 7919) % 13) as f64 / 13.0);
        let mut lambda = 0.0;
        for _ in 0..5000 {
            let w = g * &v;
            let norm = w.norm();
            if norm == 0.0 {
                return (0.0, v);
            }
            let next = v.dot(&w) / v.dot(&v);
            v = w / norm;
            if (next - lambda).abs() <= 1e-14 * next.abs() {
                lambda = next;
                break;
            }
            lambda = next;
        }
        (lambda, v)
    };
    let (l1, v1) = run(&g);
    let deflated = &g - l1 * &v1 * v1.transpose();
    let (l2, _) = run(&deflated);
    (l1.max(0.0).sqrt(), l2.max(0.0).sqrt())
}

#[test]
fn representers_reproduce_x_terms() {
    for (seed, (n, m, s)) in [(32, 12, 5), (20, 20, 3), (17, 5, 9), (64, 30, 8)].into_iter().enumerate() {
        let (theta, sup) = instance(n, m, s, seed as u64);
        for i in [0, n / 3, n - 1] {
            let l2 = representer_x2(n, &theta, &sup, i).unwrap();
            let x3 = representer_x3(n, &theta, &sup, i).unwrap();
            assert_eq!(x3.l3, &x3.k1 * &x3.k2);
            for d in 0..50 {
                let b = sample_generator(
                    &Ensemble::Gaussian { sigma: 1.3 },
                    n,
                    &mut Seed::new(seed as u64).rng(Stream::Generator, &[i as u64, d]),
                )
                .unwrap()
                .centered;
                let x = x_terms(&b, theta.as_slice(), sup.as_slice(), i).unwrap();
                let q2 = quadratic_form(&l2, &b);
                let q3 = quadratic_form(&x3.l3, &b);
                assert!((q2 - x.x2).abs() <= 1e-10 * (1.0 + x.x2.abs()), "{q2} vs {}", x.x2);
                assert!((q3 - x.x3).abs() <= 1e-10 * (1.0 + x.x3.abs()), "{q3} vs {}", x.x3);
            }
        }
    }
}

#[test]
fn representer_norm_bounds_hold() {
    for (seed, (n, m, s)) in [(24, 10, 4), (40, 25, 7), (64, 16, 12), (64, 64, 3)].into_iter().enumerate() {
        let (theta, sup) = instance(n, m, s, 100 + seed as u64);
        for i in [1, n / 2] {
            let (r2, r3) = audit_representers(n, &theta, &sup, i, &RADEMACHER, 9).unwrap();
            for r in [&r2, &r3] {
                assert!(r.exactness_error <= 1e-10);
                assert!(r.op_within_bound(), "{r:?}");
                assert!(r.gershgorin_sound(), "{r:?}");
            }
            // unit entries of L(i) number Ms
            assert_eq!(r2.audit.hs_norm_sq, (m * s) as f64);
            assert!(r2.audit.gershgorin_bound <= s as f64);

            let l2 = representer_x2(n, &theta, &sup, i).unwrap();
            let (sv1, _) = power_singular_values(&l2);
            assert!((sv1 - r2.audit.op_norm).abs() <= 1e-6 * (1.0 + sv1));
            let l3 = representer_x3(n, &theta, &sup, i).unwrap().l3;
            let (sv1, _) = power_singular_values(&l3);
            assert!((sv1 - r3.audit.op_norm).abs() <= 1e-6 * (1.0 + sv1));
        }
        let g = gram_representer(n, &theta, &sup).unwrap();
        let ka = norm_audit(&g.k).unwrap();
        assert!(ka.op_norm <= (s * s) as f64 + 1e-9);
        assert!(ka.op_norm <= ka.gershgorin_bound + 1e-9);
        for k in 0..n {
            for l in 0..n {
                let want = theta
                    .as_slice()
                    .iter()
                    .filter(|&&t| sup.contains((t + k) % n) && sup.contains((t + l) % n))
                    .count();
                assert_eq!(g.k[(k, l)], want as f64);
            }
        }
        assert!(counting_lemma_sums(n, &theta, &sup).iter().all(|&c| c <= s * s));
    }
}

#[test]
fn deflation_oracle_on_known_spectrum() {
    let a = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 4.0, 2.0]));
    let (s1, s2) = power_singular_values(&a);
    assert!((s1 - 4.0).abs() < 1e-9 && (s2 - 2.0).abs() < 1e-6);
}

#[test]
fn shifted_set_example() {
    let t = IndexSet::new(4, [0, 1]).unwrap();
    // {1, 2} ∩ {0, 1} = {1}
    assert_eq!(shifted_overlap(&t, 1, 4), 1);
    assert_eq!(shifted_overlap(&t, 0, 4), 2);
    let s = IndexSet::new(4, [1]).unwrap();
    assert_eq!(expected_x3(&t, &s, 1.0, 0), 1.0);
    assert_eq!(expected_x3(&t, &s, 1.0, 1), 2.0);
}

#[test]
fn x3_expectation_stays_in_bracket() {
    for seed in 0..20 {
        let (n, m, s) = (30, 12, 6);
        let (theta, sup) = instance(n, m, s, 500 + seed);
        for i in 0..n {
            let e = expected_x3(&theta, &sup, 1.0, i);
            let (lo, hi) = x3_bracket(m, s, 1.0, sup.contains(i));
            assert!(lo <= e && e <= hi, "{lo} <= {e} <= {hi}");
        }
    }
}

#[test]
fn monte_carlo_means_match_formulas() {
    let cfg = SweepConfig {
        n: 32,
        m: 14,
        s: 5,
        ensemble: RADEMACHER,
        seed: 77,
        indices: 6,
    };
    let r = concentration_sweep(&cfg, 5000).unwrap();
    let within = r.reports.iter().filter(|q| q.z_score.abs() <= 4.0).count();
    assert!(within as f64 >= 0.95 * r.reports.len() as f64);
    for q in &r.reports {
        assert!(!q.degenerate);
        assert_eq!(q.trials, 5000);
        assert!(q.tail_3sd <= q.tail_2sd);
        if q.quantity == Quantity::X1 {
            let var = 14.0;
            assert!((q.variance - var).abs() <= 0.1 * var, "{}", q.variance);
        }
        if q.quantity == Quantity::Gram {
            assert_eq!(q.formula_value, 70.0);
        }
    }
}

#[test]
fn margins_decompose_into_x_terms() {
    let (n, m, s) = (32, 20, 6);
    let sd = Seed::new(4);
    let b = sample_generator(&RADEMACHER, n, &mut sd.rng(Stream::Generator, &[])).unwrap().centered;
    let theta = sample_selection(n, m, &mut sd.rng(Stream::Selection, &[])).unwrap();
    let x0 = sample_binary_signal(n, s, &mut sd.rng(Stream::Signal, &[])).unwrap();
    let mu = 0.8;
    let op = MeasurementOperator::circulant(b.clone(), &theta, mu)
        .unwrap()
        .with_statistics(1.0, 1.0);
    let cert = build_certificate(&op, &x0).unwrap();
    for i in 0..n {
        let ei = BinarySignal::from_support(n, [i]).unwrap().to_f64();
        let col = op.apply(&ei).unwrap();
        let direct: f64 = -cert.nu.iter().zip(&col).map(|(u, v)| u * v).sum::<f64>();
        let x = x_terms_for(&op, &cert.support, i).unwrap();
        let mf = m as f64;
        let want = cert.rho * mu * mf + cert.rho * x.x1 + x.x2 - x.x3 / mf;
        assert!((direct - want).abs() <= 1e-9 * (1.0 + want.abs()), "{direct} vs {want}");
    }
}

#[test]
fn x_terms_require_circulant() {
    let op = MeasurementOperator::toeplitz(vec![1.0, 2.0, 3.0], &[0], 0.0).unwrap();
    assert!(x_terms_for(&op, &BinarySignal::zeros(2), 0).is_err());
}

#[test]
fn validate_proof_passes_on_a_small_instance() {
    let rows = validate_proof(&ValidateConfig {
        n: 24,
        m: 12,
        s: 4,
        ensemble: RADEMACHER,
        mu: 1.0,
        seed: 3,
        trials: 1000,
        indices: 3,
    })
    .unwrap();
    for r in &rows {
        assert!(r.pass, "{r:?}");
    }
    assert!(rows.iter().any(|r| r.quantity == "margin decomposition"));
    assert!(rows
        .iter()
        .any(|r| r.note == "stated value matches the squared norm"));
}
