//! Brute-force oracles and fixtures shared by the integration tests. Nothing
//! here goes through the reduction or enumeration code of the library.
#![allow(dead_code)]

use lattice_extremes::Lattice;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn det(m: &[Vec<f64>]) -> f64 {
    match m.len() {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => panic!("oracle supports d <= 3"),
    }
}

/// Inverse by cofactors (d <= 3).
pub fn inverse(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = m.len();
    let det = det(m);
    if d == 1 {
        return vec![vec![1.0 / det]];
    }
    let mut inv = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..d {
            let minor: Vec<Vec<f64>> = (0..d)
                .filter(|&r| r != j)
                .map(|r| (0..d).filter(|&c| c != i).map(|c| m[r][c]).collect())
                .collect();
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            inv[i][j] = sign * self::det(&minor) / det;
        }
    }
    inv
}

/// A random basis with entries in `[-2, 2]`, normalised to determinant `±1`.
/// Draws with `|det| < 0.5` before normalising are rejected to keep the
/// coefficient ranges of the brute-force oracles small.
pub fn random_lattice(d: usize, seed: u64) -> Lattice {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let m: Vec<Vec<f64>> = (0..d)
            .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let det = det(&m);
        if det.abs() < 0.5 {
            continue;
        }
        let s = det.abs().powf(-1.0 / d as f64);
        let m = m.iter().map(|r| r.iter().map(|x| x * s).collect()).collect();
        return Lattice::new(m).unwrap();
    }
}

/// Every coefficient vector whose point could lie in the box of half-widths
/// `widths`, by inverting the basis.
pub fn coefficient_ranges(lattice: &Lattice, widths: &[f64]) -> Vec<i64> {
    let inv = inverse(lattice.basis());
    inv.iter()
        .map(|row| {
            let r: f64 = row.iter().zip(widths).map(|(a, w)| a.abs() * w).sum();
            (r + 1e-6).floor() as i64
        })
        .collect()
}

/// Calls `f(coeffs, point)` for every nonzero coefficient vector in the ranges.
pub fn for_each_point(lattice: &Lattice, ranges: &[i64], mut f: impl FnMut(&[i64], &[f64])) {
    let d = ranges.len();
    let mut c: Vec<i64> = ranges.iter().map(|r| -r).collect();
    loop {
        if c.iter().any(|&x| x != 0) {
            let p = lattice.point(&c);
            f(&c, &p);
        }
        let mut k = 0;
        loop {
            if k == d {
                return;
            }
            if c[k] < ranges[k] {
                c[k] += 1;
                break;
            }
            c[k] = -ranges[k];
            k += 1;
        }
    }
}

/// Sorted coefficient vectors of the nonzero points with `|v_p| <= widths[p]`.
pub fn brute_box(lattice: &Lattice, widths: &[f64]) -> Vec<Vec<i64>> {
    let ranges = coefficient_ranges(lattice, widths);
    let mut out = Vec::new();
    for_each_point(lattice, &ranges, |c, p| {
        if p.iter().zip(widths).all(|(x, w)| x.abs() <= w * (1.0 + 1e-9)) {
            out.push(c.to_vec());
        }
    });
    out.sort();
    out
}

pub fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// `min_v max_p |v_p| / T_p` by brute force (the box `B_T` itself always
/// contains a point of a unimodular lattice).
pub fn brute_minkowski(lattice: &Lattice, t: &[f64]) -> f64 {
    let widths: Vec<f64> = t.iter().map(|x| x * (1.0 + 1e-9)).collect();
    let mut best = f64::INFINITY;
    for_each_point(lattice, &coefficient_ranges(lattice, &widths), |_, p| {
        let v = p.iter().zip(t).fold(0.0f64, |m, (x, s)| m.max(x.abs() / s));
        best = best.min(v);
    });
    best
}

/// `min |v_1 ... v_d|` over nonzero points of `B_T`.
pub fn brute_product(lattice: &Lattice, t: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    for_each_point(lattice, &coefficient_ranges(lattice, t), |_, p| {
        if p.iter().zip(t).all(|(x, w)| x.abs() <= w * (1.0 + 1e-9)) {
            best = best.min(p.iter().map(|x| x.abs()).product());
        }
    });
    best
}

/// All `q != 0 or p != 0` in the Dirichlet search region, with `p` scanned
/// over a generous window instead of rounding.
fn for_each_pq(alpha: &[Vec<f64>], t: &[f64], mut f: impl FnMut(&[f64])) {
    let d1 = alpha.len();
    let d2 = alpha[0].len();
    let qr: Vec<i64> = (0..d2).map(|j| (1.0 / t[d1 + j] + 1e-9).floor() as i64).collect();
    let mut q: Vec<i64> = qr.iter().map(|r| -r).collect();
    loop {
        let aq: Vec<f64> = (0..d1)
            .map(|l| (0..d2).map(|j| alpha[l][j] * q[j] as f64).sum())
            .collect();
        let lo: Vec<i64> = aq.iter().map(|x| (-x).floor() as i64 - 2).collect();
        let mut p = lo.clone();
        loop {
            if q.iter().any(|&x| x != 0) || p.iter().any(|&x| x != 0) {
                let r: Vec<f64> = (0..d1).map(|l| p[l] as f64 + aq[l]).collect();
                f(&r);
            }
            let mut k = 0;
            loop {
                if k == d1 {
                    break;
                }
                if p[k] < lo[k] + 5 {
                    p[k] += 1;
                    break;
                }
                p[k] = lo[k];
                k += 1;
            }
            if k == d1 {
                break;
            }
        }
        let mut k = 0;
        loop {
            if k == d2 {
                return;
            }
            if q[k] < qr[k] {
                q[k] += 1;
                break;
            }
            q[k] = -qr[k];
            k += 1;
        }
    }
}

pub fn brute_dirichlet(alpha: &[Vec<f64>], t: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    for_each_pq(alpha, t, |r| {
        let v = r.iter().zip(t).fold(0.0f64, |m, (x, s)| m.max(s * x.abs()));
        best = best.min(v);
    });
    best
}

pub fn brute_gallagher(alpha: &[Vec<f64>], t: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    for_each_pq(alpha, t, |r| {
        if r.iter().zip(t).all(|(x, s)| x.abs() <= (1.0 / s) * (1.0 + 1e-9)) {
            best = best.min(r.iter().zip(t).map(|(x, s)| s * x.abs()).product());
        }
    });
    best
}
