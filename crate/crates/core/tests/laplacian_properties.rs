use std::f64::consts::PI;

use laakso::eigen::solve_dense;
use laakso::{assemble_laplacian, build_graph, symmetrize, Form, JSequence, MatrixFreeLaplacian, Operator};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cases() -> impl Strategy<Value = (u64, usize)> {
    (2u64..=5, 0usize..=3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// `cos(k pi x)` pulled back to every sheet is an exact eigenvector of
    /// the raw operator, since every vertex sees its neighbours symmetrically
    /// at `x - h` and `x + h` (or reflects at the ends).
    #[test]
    fn pulled_back_cosines_are_eigenvectors((j, n) in cases(), k in 0u32..6) {
        let g = build_graph(&JSequence::constant(j).unwrap(), n).unwrap();
        let m = assemble_laplacian(&g);
        let h = g.h();
        let f: Vec<f64> = (0..g.vertex_count()).map(|u| (k as f64 * PI * g.x(u)).cos()).collect();
        let mf = m.matvec(&f).unwrap();
        let mu = 2.0 / (h * h) * (1.0 - (k as f64 * PI * h).cos());
        for (a, b) in mf.iter().zip(&f) {
            prop_assert!((a - mu * b).abs() <= 1e-9 * (1.0 / (h * h)));
        }
    }

    #[test]
    fn rows_sum_to_zero((j, n) in cases()) {
        let m = assemble_laplacian(&build_graph(&JSequence::constant(j).unwrap(), n).unwrap());
        for u in 0..m.dim() {
            let s: f64 = m.row(u).map(|(_, v)| v).sum();
            prop_assert_eq!(s, 0.0);
        }
    }

    #[test]
    fn stored_and_matrix_free_agree((j, n) in cases(), seed in any::<u64>()) {
        let g = build_graph(&JSequence::constant(j).unwrap(), n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..g.vertex_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let raw = assemble_laplacian(&g);
        let sym = symmetrize(&raw);
        for (stored, form) in [(&raw, Form::Raw), (&sym, Form::Symmetrized)] {
            let free = MatrixFreeLaplacian::new(&g, form);
            let a = stored.matvec(&x).unwrap();
            let b = free.matvec(&x).unwrap();
            let scale = stored.spectral_bound();
            for (p, q) in a.iter().zip(&b) {
                prop_assert!((p - q).abs() <= 1e-14 * scale);
            }
        }
    }

    #[test]
    fn symmetrization_preserves_the_spectrum((j, n) in (2u64..=4, 1usize..=2)) {
        let g = build_graph(&JSequence::constant(j).unwrap(), n).unwrap();
        let raw = assemble_laplacian(&g);
        let sym = symmetrize(&raw);
        prop_assert!(sym.max_asymmetry() == 0.0);
        let r = solve_dense(&sym).unwrap();
        // pulled back to the raw basis every pair satisfies M x = lambda x
        for i in 0..r.len() {
            let x = r.raw_eigenvector(i, sym.vertex_weights());
            let mx = raw.matvec(&x).unwrap();
            let scale = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for (a, b) in mx.iter().zip(&x) {
                prop_assert!((a - r.eigenvalues[i] * b).abs() <= 1e-9 * raw.spectral_bound() * scale);
            }
        }
        prop_assert!(r.eigenvalues.iter().all(|&l| l > -1e-9 && l <= raw.spectral_bound() + 1e-9));
    }
}

#[test]
fn kernel_is_one_dimensional() {
    // F_n is connected, so the constant vector spans the kernel
    for (j, n) in [(2, 3), (3, 2), (5, 1)] {
        let s = symmetrize(&assemble_laplacian(&build_graph(&JSequence::constant(j).unwrap(), n).unwrap()));
        let r = solve_dense(&s).unwrap();
        assert!(r.eigenvalues[0].abs() < 1e-9);
        assert!(r.eigenvalues[1] > 1.0);
    }
}

#[test]
fn dimension_mismatch_is_reported() {
    let m = assemble_laplacian(&build_graph(&JSequence::constant(2).unwrap(), 1).unwrap());
    assert!(matches!(m.matvec(&[1.0, 2.0]), Err(laakso::Error::DimensionMismatch { expected: 5, got: 2 })));
}
