use std::sync::Arc;

use num_complex::Complex64;

use randpoly_core::chebyshev::{
    circled_nodes, coeff_ratio_probe, direction_scan, homogenize, l2_chebyshev, l2_chebyshev_normal_equations, sandwich,
    sup_chebyshev, BundleMeasure, HomogeneousPolynomial, ScanRoute,
};
use randpoly_core::ensemble::{purpose, CoefficientLaw, RandomPolynomial, SeedStream};
use randpoly_core::geometry::{quadrature_measure, MultiIndex, SetKind, WeightExpr, WeightedSet};
use randpoly_core::orthopoly::OrthonormalBasis;

fn random_lifts(set: &WeightedSet, n: u32, count: u64) -> Vec<(RandomPolynomial, HomogeneousPolynomial)> {
    let basis = Arc::new(OrthonormalBasis::for_set(set, n, 128).unwrap());
    (0..count)
        .map(|t| {
            let s = SeedStream::new(5, t, purpose::at_degree(purpose::COEFFICIENTS, n));
            let g = RandomPolynomial::sample(basis.clone(), &CoefficientLaw::ComplexGaussian { sigma: 1.0 }, s).unwrap();
            let p = homogenize(1, &g.monomial_coefficients().unwrap(), n).unwrap();
            (g, p)
        })
        .collect()
}

#[test]
fn lift_preserves_weighted_norms() {
    let n = 10;
    for set in [WeightedSet::unit_circle(), WeightedSet::ginibre_disk()] {
        let tau = quadrature_measure(&set, 2 * n).unwrap();
        let nu = BundleMeasure::for_degree(&set, &tau, n).unwrap();
        for (g, p) in random_lifts(&set, n, 20) {
            let mut l2 = 0.0;
            let mut sup: f64 = 0.0;
            for (x, w) in tau.iter() {
                let v = (-(n as f64) * set.q(x).unwrap()).exp() * g.evaluate(x).norm();
                l2 += w * v * v;
                sup = sup.max(v);
            }
            let l2 = l2.sqrt();
            assert!((nu.l2_norm(&p) / l2 - 1.0).abs() < 1e-10, "{}", set.label());
            assert!((nu.sup_norm(&p) / sup - 1.0).abs() < 1e-10, "{}", set.label());
        }
    }
}

#[test]
fn lifted_basis_is_orthonormal_in_bundle_measure() {
    for (set, n) in [
        (WeightedSet::unit_circle(), 8),
        (WeightedSet::unit_circle(), 10),
        (WeightedSet::ginibre_disk(), 10),
    ] {
        let tau = quadrature_measure(&set, 2 * n).unwrap();
        let basis = OrthonormalBasis::build(&tau, &set, n, 128).unwrap();
        let nu = BundleMeasure::for_degree(&set, &tau, n).unwrap();
        let lifts: Vec<_> = (0..basis.len())
            .map(|a| HomogeneousPolynomial::from_basis_column(&basis, a).unwrap())
            .collect();
        let r = nu.orthonormality_residual(&lifts);
        assert!(r < 1e-10, "{} n={n}: {r:e}", set.label());
    }
}

#[test]
fn l2_constants_agree_with_normal_equations() {
    let cases = [
        (WeightedSet::unit_circle(), 20),
        (WeightedSet::unit_interval(), 20),
        (WeightedSet::ginibre_disk(), 20),
        (WeightedSet::new(SetKind::Ball { radius: 1.0 }, WeightExpr::zero()), 6),
        (WeightedSet::new(SetKind::Polydisk { radius: 1.0 }, WeightExpr::norm_sq(2, 0.5)), 6),
    ];
    for (set, n_max) in cases {
        for n in [n_max / 2, n_max] {
            let tau = quadrature_measure(&set, 2 * n).unwrap();
            let basis = OrthonormalBasis::build_dense(&tau, &set, n, 106).unwrap();
            let t = l2_chebyshev_normal_equations(&tau, &set, n, 106).unwrap();
            for (j, alpha) in basis.order().indices().iter().enumerate() {
                let direct = l2_chebyshev(&basis, alpha).unwrap();
                assert!((direct * basis.leading_coefficients()[j] - 1.0).abs() < 1e-10);
                assert!((t[j] / direct - 1.0).abs() < 1e-8, "{} n={n} {alpha}: {} {}", set.label(), t[j], direct);
            }
        }
    }
}

#[test]
fn probe_examples() {
    let interval = OrthonormalBasis::for_set(&WeightedSet::unit_interval(), 40, 256).unwrap();
    for j in 1..40 {
        let v = coeff_ratio_probe(&interval, j, j + 1).unwrap();
        assert!((v - 0.5f64.ln() / 40.0).abs() < 1e-12, "{j} {v}");
    }
    let ginibre = OrthonormalBasis::for_set(&WeightedSet::ginibre_disk(), 40, 256).unwrap();
    for j in 10..=30 {
        assert!(coeff_ratio_probe(&ginibre, j, j - 1).unwrap().abs() <= 0.05);
    }
}

fn ellipsoid(r: f64, a: f64) -> WeightedSet {
    WeightedSet::new(SetKind::Ellipsoid { r, a }, WeightExpr::zero())
}

/// Monomials are optimal on Reinhardt sets, so `τ_(a,b)` is the `n`-th root
/// of `max |z^a w^b|` on the ellipsoid boundary.
fn ellipsoid_tau(r: f64, big_a: f64, a: u32, b: u32) -> f64 {
    let n = (a + b) as f64;
    let xlogx = |e: u32| if e == 0 { 0.0 } else { e as f64 * (e as f64 / n).ln() };
    let log = a as f64 * r.ln() + b as f64 * big_a.ln() + 0.5 * (xlogx(a) + xlogx(b));
    (log / n).exp()
}

#[test]
fn ellipsoid_boundary_direction() {
    let set = ellipsoid(0.5, 2.0);
    let nodes = circled_nodes(&set, 30, 1).unwrap();
    let r = sup_chebyshev(&nodes, &MultiIndex::new(&[30, 0]), true).unwrap();
    assert!((r.tau - 0.5).abs() < 1e-12);

    let scan = direction_scan(&set, &[1.0, 0.0], &[10, 20, 30], ScanRoute::Sup, 64).unwrap();
    for row in scan.rows.iter().filter(|r| r.n == 30) {
        let oracle = ellipsoid_tau(0.5, 2.0, row.alpha[0], row.alpha[1]);
        assert!((row.value - oracle).abs() < 1e-3, "{row:?} {oracle}");
        if row.alpha[1] <= 2 {
            assert!((row.value - 0.5).abs() <= 0.05, "{row:?}");
        }
    }
    let csv = scan.to_csv();
    assert!(csv.starts_with("n,alpha,value,diff\n"));
    assert_eq!(csv.lines().count(), 1 + scan.rows.len());
}

#[test]
fn lifted_circle_and_polydisk_scans() {
    let circle = direction_scan(&WeightedSet::unit_circle(), &[0.0, 1.0], &[10, 20, 30], ScanRoute::L2, 128).unwrap();
    for row in &circle.rows {
        assert!((row.value - 1.0).abs() < 1e-12);
    }
    assert!(circle.stabilized(1e-10));

    let poly = WeightedSet::new(SetKind::Polydisk { radius: 1.0 }, WeightExpr::zero());
    let scan = direction_scan(&poly, &[0.5, 0.5], &[10, 20, 30], ScanRoute::Sup, 64).unwrap();
    for row in &scan.rows {
        assert!((row.value - 1.0).abs() < 1e-6, "{row:?}");
    }
}

#[test]
fn sup_constants_sit_between_l2_bounds() {
    let cases = [
        (WeightedSet::new(SetKind::Ball { radius: 1.0 }, WeightExpr::zero()), vec![[1, 1], [2, 1], [3, 0], [0, 4]]),
        (WeightedSet::new(SetKind::Polydisk { radius: 1.0 }, WeightExpr::zero()), vec![[1, 1], [2, 2], [4, 0]]),
        (ellipsoid(0.5, 2.0), vec![[4, 0], [3, 1], [2, 2]]),
    ];
    for (set, alphas) in cases {
        for a in alphas {
            let alpha = MultiIndex::new(&a);
            let nodes = circled_nodes(&set, alpha.degree(), 1).unwrap();
            let s = sandwich(&set, &alpha, &nodes, 128).unwrap();
            assert!(s.holds(1e-9), "{} {a:?} {s:?}", set.label());
        }
    }
}

#[test]
fn node_refinement_is_stable() {
    let cases = [
        (WeightedSet::new(SetKind::Ball { radius: 1.0 }, WeightExpr::zero()), [3, 2]),
        (WeightedSet::new(SetKind::Polydisk { radius: 1.0 }, WeightExpr::zero()), [3, 2]),
        (ellipsoid(0.5, 2.0), [8, 2]),
    ];
    for (set, a) in cases {
        let alpha = MultiIndex::new(&a);
        let coarse = sup_chebyshev(&circled_nodes(&set, alpha.degree(), 1).unwrap(), &alpha, true).unwrap();
        let fine = sup_chebyshev(&circled_nodes(&set, alpha.degree(), 2).unwrap(), &alpha, true).unwrap();
        assert!((coarse.tau - fine.tau).abs() <= 1e-3, "{} {coarse:?} {fine:?}", set.label());
    }
}

#[test]
fn sheared_ellipsoid_keeps_its_constants() {
    // (z, w) -> (z, w + s z) maps each class P(α) to itself
    let set = ellipsoid(0.5, 2.0);
    let s = Complex64::new(0.6, -0.3);
    for a in [[5, 1], [4, 2], [6, 0]] {
        let alpha = MultiIndex::new(&a);
        let nodes = circled_nodes(&set, alpha.degree(), 1).unwrap();
        let sheared: Vec<Vec<Complex64>> = nodes.iter().map(|x| vec![x[0], x[1] + s * x[0]]).collect();
        let base = sup_chebyshev(&nodes, &alpha, true).unwrap();
        let moved = sup_chebyshev(&sheared, &alpha, true).unwrap();
        assert!(moved.certified, "{moved:?}");
        assert!((base.tau - moved.tau).abs() < 1e-4, "{a:?} {base:?} {moved:?}");
    }
}
