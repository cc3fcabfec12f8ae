//! Independent oracles shared by the integration tests and the acceptance run.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::PI;

use laakso::analytic::Rational;
use laakso::JSequence;

/// Gaussian elimination with partial pivoting on a row-major square matrix.
/// Returns the determinant and the numerical rank at `tol` (relative to the
/// largest entry).
pub fn det_and_rank(mut a: Vec<Vec<f64>>, tol: f64) -> (f64, usize) {
    let n = a.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let mut det = 1.0;
    let mut rank = 0;
    let mut row = 0;
    for col in 0..n {
        let p = (row..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()));
        let Some(p) = p else { break };
        if a[p][col].abs() <= tol * scale {
            det = 0.0;
            continue;
        }
        if p != row {
            a.swap(p, row);
            det = -det;
        }
        det *= a[row][col];
        for r in row + 1..n {
            let f = a[r][col] / a[row][col];
            for c in col..n {
                a[r][c] -= f * a[row][c];
            }
        }
        rank += 1;
        row += 1;
    }
    (det, rank)
}

/// Matching conditions for four Dirichlet arms of length `d` meeting at a
/// Kirchhoff centre. Unknowns: the amplitudes `A_i` of `sin(w t)` on each arm
/// (`t` measured from the outer end) and the centre value `c`.
pub fn star_matrix(w: f64, d: f64) -> Vec<Vec<f64>> {
    let s = (w * d).sin();
    let c = (w * d).cos();
    let mut m = vec![vec![0.0; 5]; 5];
    for i in 0..4 {
        m[i][i] = s;
        m[i][4] = -1.0;
    }
    for i in 0..4 {
        m[4][i] = w * c;
    }
    m
}

/// Eigenvalues `value * pi^2` of the star with multiplicities, found by
/// bracketing sign changes of the matching determinant, bisecting and
/// taking the nullity of the matching matrix at the root.
pub fn star_oracle(d: Rational, lambda_max: f64) -> BTreeMap<Rational, u64> {
    let df = *d.numer() as f64 / *d.denom() as f64;
    let w_max = lambda_max.sqrt();
    let spacing = PI / (2.0 * df);
    let step = spacing / 64.0;
    let det = |w: f64| det_and_rank(star_matrix(w, df), 0.0).0;
    let mut out = BTreeMap::new();
    let mut a = step / 2.0;
    let mut fa = det(a);
    while a < w_max + step {
        let b = a + step;
        let fb = det(b);
        if fa.signum() != fb.signum() {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let fm = det(mid);
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
                if hi - lo <= 4.0 * f64::EPSILON * hi {
                    break;
                }
            }
            let w = 0.5 * (lo + hi);
            let nullity = 5 - det_and_rank(star_matrix(w, df), 1e-9).1;
            // w d / pi is a multiple of 1/2 at every root
            let m = (2.0 * w * df / PI).round();
            assert!((2.0 * w * df / PI - m).abs() < 1e-9, "root {w} is not a half-integer multiple");
            let m = m as i128;
            let value = Rational::from_integer(m * m) / (Rational::from_integer(4) * d * d);
            if laakso::analytic::to_lambda(value) <= lambda_max {
                *out.entry(value).or_insert(0) += nullity as u64;
            }
        }
        a = b;
        fa = fb;
    }
    out
}

/// Vertex and edge counts of `F_n` by explicit union-find over
/// `(column, sheet)` pairs.
pub fn union_find_counts(j_seq: &JSequence, n: usize) -> (usize, usize) {
    let jn = j_seq.columns(n).unwrap() as u64;
    let words = 1u64 << n;
    let id = |c: u64, w: u64| (c * words + w) as usize;
    let mut parent: Vec<usize> = (0..((jn + 1) * words) as usize).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for c in 1..jn {
        let level = (1..=n).find(|&m| c % (jn / j_seq.columns(m).unwrap() as u64) == 0).unwrap();
        let bit = 1u64 << (level - 1);
        for w in 0..words {
            let (a, b) = (find(&mut parent, id(c, w)), find(&mut parent, id(c, w ^ bit)));
            parent[a] = b;
        }
    }
    let roots = (0..parent.len()).filter(|&x| find(&mut parent, x) == x).count();
    (roots, (jn * words) as usize)
}
