#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

mod common;

use common::*;
use lattice_extremes::lattice::{apply_scaling, enumerate_box, siegel_transform, DEFAULT_NODE_BUDGET};
use lattice_extremes::minima::{
    count_hits, dirichlet_k, eta_tilde, gallagher_g, minkowski_c, minkowski_c_dual, product_min,
    LatticeSource,
};
use lattice_extremes::pairs::PairKind;
use lattice_extremes::samplers::unipotent_lattice;
use lattice_extremes::stats::{factorial_moments, ks_distance, weibull_cdf, Distribution};
use lattice_extremes::{ExactLattice, Lattice, RegularPair, ScalingVector};
use proptest::prelude::*;

fn dim() -> impl Strategy<Value = usize> {
    2usize..=3
}

fn logs(d: usize, max: f64) -> impl Strategy<Value = ScalingVector> {
    prop::collection::vec(-max..max, d - 1).prop_map(|mut v| {
        let s: f64 = v.iter().sum();
        v.push(-s);
        ScalingVector::from_logs(v).unwrap()
    })
}

fn lattice_and_scaling(max_log: f64) -> impl Strategy<Value = (Lattice, ScalingVector)> {
    (dim(), any::<u64>()).prop_flat_map(move |(d, seed)| (Just(random_lattice(d, seed)), logs(d, max_log)))
}

/// `L U` for an integer unimodular `U` built from elementary column operations.
fn change_basis(l: &Lattice, ops: &[(usize, usize, i64)]) -> Lattice {
    let d = l.dim();
    let mut cols: Vec<Vec<f64>> = (0..d).map(|j| l.column(j)).collect();
    for &(i, j, k) in ops {
        let (i, j) = (i % d, j % d);
        if i == j {
            continue;
        }
        for p in 0..d {
            cols[i][p] += k as f64 * cols[j][p];
        }
    }
    let basis = (0..d).map(|p| (0..d).map(|j| cols[j][p]).collect()).collect();
    Lattice::from_raw(basis).unwrap()
}

fn all_pairs(d: usize) -> Vec<RegularPair> {
    let mut v = vec![RegularPair::ball(d).unwrap(), RegularPair::product(d).unwrap()];
    for d1 in 1..d {
        v.push(RegularPair::strip(d1, d - d1).unwrap());
        v.push(RegularPair::product_strip(d1, d - d1).unwrap());
    }
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn enumeration_matches_brute_force(
        (d, seed) in (dim(), any::<u64>()),
        w in prop::collection::vec(0.2f64..1.8, 3),
    ) {
        let l = random_lattice(d, seed);
        let w = &w[..d];
        let got: Vec<Vec<i64>> = enumerate_box(&l, w, DEFAULT_NODE_BUDGET)
            .unwrap()
            .into_iter()
            .map(|p| p.coeffs)
            .collect();
        prop_assert_eq!(got, brute_box(&l, w));
    }

    #[test]
    fn enumeration_is_symmetric(
        (d, seed) in (dim(), any::<u64>()),
        w in prop::collection::vec(0.2f64..1.8, 3),
    ) {
        let l = random_lattice(d, seed);
        let pts = enumerate_box(&l, &w[..d], DEFAULT_NODE_BUDGET).unwrap();
        let coeffs: Vec<Vec<i64>> = pts.iter().map(|p| p.coeffs.clone()).collect();
        for c in &coeffs {
            let neg: Vec<i64> = c.iter().map(|x| -x).collect();
            prop_assert!(coeffs.contains(&neg));
        }
        for p in &pts {
            let back = l.point(&p.coeffs);
            for (a, b) in back.iter().zip(&p.coords) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn primitive_count_ignores_basis_choice(
        (l, t) in lattice_and_scaling(0.5),
        ops in prop::collection::vec((0usize..3, 0usize..3, -2i64..=2), 0..4),
        radius in 0.3f64..1.2,
    ) {
        let other = change_basis(&l, &ops);
        prop_assert_eq!(
            siegel_transform(&l, &t, radius).unwrap(),
            siegel_transform(&other, &t, radius).unwrap()
        );
    }

    #[test]
    fn primitive_flag_matches_gcd(
        (d, seed) in (dim(), any::<u64>()),
    ) {
        let l = random_lattice(d, seed);
        for p in enumerate_box(&l, &vec![1.5; d], DEFAULT_NODE_BUDGET).unwrap() {
            let g = p.coeffs.iter().fold(0, |g, &c| gcd(g, c));
            prop_assert_eq!(p.is_primitive(), g == 1);
        }
    }

    #[test]
    fn minkowski_matches_oracle_and_bound((l, t) in lattice_and_scaling(0.8)) {
        let c = minkowski_c(&l, &t).unwrap();
        prop_assert!(c <= 1.0 + 1e-9, "Minkowski bound violated: {}", c);
        prop_assert!((c - brute_minkowski(&l, &t.values())).abs() < 1e-9);
        prop_assert!((c - minkowski_c_dual(&l, &t).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn product_min_matches_oracle((l, t) in lattice_and_scaling(0.8)) {
        let got = product_min(&l, &t).unwrap();
        let want = brute_product(&l, &t.values());
        prop_assert!((got - want).abs() < 1e-9, "{} vs {}", got, want);
    }

    #[test]
    fn eta_is_even_and_homogeneous(
        x in prop::collection::vec(-1.0f64..1.0, 3),
        s in 0.1f64..3.0,
    ) {
        for d in 2..=3 {
            for pair in all_pairs(d) {
                let x = &x[..d];
                let neg: Vec<f64> = x.iter().map(|v| -v).collect();
                let scaled: Vec<f64> = x.iter().map(|v| s * v).collect();
                let e = pair.eta(x).unwrap();
                prop_assert_eq!(e, pair.eta(&neg).unwrap());
                let want = s.powf(pair.gamma) * e;
                prop_assert!((pair.eta(&scaled).unwrap() - want).abs() <= 1e-12 * (1.0 + want));
            }
        }
    }

    #[test]
    fn scaling_composes((d, seed) in (dim(), any::<u64>()), a in prop::collection::vec(-2.0f64..2.0, 2), b in prop::collection::vec(-2.0f64..2.0, 2)) {
        let mk = |v: &[f64]| {
            let mut v = v[..d - 1].to_vec();
            v.push(-v.iter().sum::<f64>());
            ScalingVector::from_logs(v).unwrap()
        };
        let (s, t) = (mk(&a), mk(&b));
        let l = random_lattice(d, seed);
        let twice = apply_scaling(&s, &apply_scaling(&t, &l).unwrap()).unwrap();
        let once = apply_scaling(&s.compose(&t).unwrap(), &l).unwrap();
        for (r1, r2) in twice.basis().iter().zip(once.basis()) {
            for (x, y) in r1.iter().zip(r2) {
                prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
            }
        }
        let id = s.compose(&s.inverse()).unwrap();
        prop_assert!(id.log_t().iter().all(|x| x.abs() < 1e-12));
        prop_assert!((l.det().abs() - once.det().abs()).abs() < 1e-9);
    }

    #[test]
    fn hit_counts_are_monotone(
        (l, _) in lattice_and_scaling(0.1),
        fam in prop::collection::vec(logs(3, 1.0), 1..5),
        t1 in 0.0f64..1.5,
        t2 in 0.0f64..1.5,
    ) {
        let l = if l.dim() == 3 { l } else { random_lattice(3, 7) };
        let src = LatticeSource::Float(l);
        let pair = RegularPair::ball(3).unwrap();
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let a = count_hits(&pair, &fam, &src, lo).unwrap();
        let b = count_hits(&pair, &fam, &src, hi).unwrap();
        prop_assert!(a <= b && b <= fam.len() as u64);
    }

    #[test]
    fn dirichlet_and_gallagher_two_paths(
        alpha in prop::collection::vec(0.0f64..1.0, 2),
        a in 0.0f64..1.5,
        b in 0.0f64..1.5,
    ) {
        let alpha = vec![vec![alpha[0]], vec![alpha[1]]];
        let t = ScalingVector::from_logs(vec![a, b, -a - b]).unwrap();
        let l = apply_scaling(&t, &unipotent_lattice(&alpha).unwrap()).unwrap();
        let k = dirichlet_k(&alpha, &t).unwrap();
        prop_assert!((k - eta_tilde(&RegularPair::strip(2, 1).unwrap(), &l).unwrap()).abs() < 1e-9);
        prop_assert!((k - brute_dirichlet(&alpha, &t.values())).abs() < 1e-9);
        let g = gallagher_g(&alpha, &t).unwrap();
        prop_assert!((g - eta_tilde(&RegularPair::product_strip(2, 1).unwrap(), &l).unwrap()).abs() < 1e-9);
        prop_assert!((g - brute_gallagher(&alpha, &t.values())).abs() < 1e-9);
    }

    #[test]
    fn exact_and_float_scaling_agree(
        (l, t) in lattice_and_scaling(3.0),
        inverse in any::<bool>(),
    ) {
        let exact = ExactLattice::from_lattice(&l).unwrap();
        let pair = RegularPair::ball(l.dim()).unwrap();
        let via_exact = eta_tilde(&pair, &exact.scaled(&t, inverse).unwrap()).unwrap();
        let s = if inverse { t.inverse() } else { t.clone() };
        let via_float = eta_tilde(&pair, &apply_scaling(&s, &l).unwrap()).unwrap();
        prop_assert!((via_exact - via_float).abs() <= 1e-9 * (1.0 + via_float));
    }

    #[test]
    fn ks_is_a_bounded_permutation_invariant(
        mut xs in prop::collection::vec(0.0f64..3.0, 1..60),
        scale in 0.2f64..3.0,
        shape in 0.5f64..4.0,
    ) {
        let law = Distribution::Weibull { scale, shape };
        let a = ks_distance(&xs, &law).unwrap().distance;
        prop_assert!((0.0..=1.0).contains(&a));
        xs.reverse();
        prop_assert_eq!(a, ks_distance(&xs, &law).unwrap().distance);
    }

    #[test]
    fn weibull_cdf_is_monotone(rate in 0.1f64..5.0, shape in 0.2f64..5.0, s in 0.0f64..4.0, ds in 0.0f64..4.0) {
        let a = weibull_cdf(rate, shape, s).unwrap();
        let b = weibull_cdf(rate, shape, s + ds).unwrap();
        prop_assert!(0.0 <= a && a <= b && b <= 1.0);
    }

    #[test]
    fn poisson_references(m in 0.01f64..5.0, counts in prop::collection::vec(0u64..8, 1..30)) {
        let fm = factorial_moments(&counts, 3, m).unwrap();
        let mut fact = 1.0;
        for (r, f) in fm.iter().enumerate() {
            fact *= (r + 1) as f64;
            prop_assert!((f.reference - m.powi(r as i32 + 1) / fact).abs() < 1e-12 * (1.0 + f.reference));
        }
    }

    #[test]
    fn sublevel_volumes_are_monotone(t1 in 1e-6f64..1.0, t2 in 1e-6f64..1.0) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        for kind in [
            PairKind::NormBallSup { d: 3 },
            PairKind::ProductForm { d: 3 },
            PairKind::NormedStrip { d1: 2, d2: 1 },
            PairKind::ProductStrip { d1: 2, d2: 1 },
        ] {
            let pair = RegularPair::new(kind).unwrap();
            prop_assert!(pair.volume_c(lo).unwrap() <= pair.volume_c(hi).unwrap());
        }
    }
}
