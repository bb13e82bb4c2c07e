use gcl_core::graph::{FeatureMatrix, Graph, NormalizedAdjacency};
use gcl_core::nn::row_normalize;
use gcl_core::objectives::{enhanced_loss, infonce};
use gcl_core::similarity::{compute_similarity, ppr_exact, ppr_iterative, SimilarityConfig};
use gcl_core::weighting::{negative_weights_from_sims, positive_weights_from_sims};
use ndarray::Array2;
use proptest::prelude::*;

fn sims(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..1.0f64, 1..=len)
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Array2<f64>> {
    prop::collection::vec(-1.0..1.0f64, rows * cols)
        .prop_map(move |v| Array2::from_shape_vec((rows, cols), v).unwrap())
}

fn graph(n: usize) -> impl Strategy<Value = Graph> {
    prop::collection::vec((0..n, 0..n), 0..3 * n).prop_map(move |e| Graph::from_edges(n, &e).unwrap())
}

proptest! {
    #[test]
    fn weights_have_mean_one(s in sims(20), tau_p in 0.01..5.0f64, tau_n in 0.01..5.0f64) {
        for w in [positive_weights_from_sims(&s, tau_p).unwrap(), negative_weights_from_sims(&s, tau_n).unwrap()] {
            let mean = w.iter().sum::<f64>() / w.len() as f64;
            prop_assert!((mean - 1.0).abs() < 1e-9);
            prop_assert!(w.iter().all(|&v| v >= 0.0 && v.is_finite()));
        }
    }

    #[test]
    fn weights_follow_similarity_order(s in sims(20), tau in 0.01..5.0f64) {
        let wp = positive_weights_from_sims(&s, tau).unwrap();
        let wn = negative_weights_from_sims(&s, tau).unwrap();
        for i in 0..s.len() {
            for j in 0..s.len() {
                if s[i] < s[j] {
                    prop_assert!(wp[i] <= wp[j]);
                    prop_assert!(wn[i] >= wn[j]);
                }
            }
        }
    }

    #[test]
    fn tiny_positive_temperature_stays_finite(s in sims(20), tau in 1e-6..1e-3f64) {
        let w = positive_weights_from_sims(&s, tau).unwrap();
        prop_assert!(w.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn enhanced_loss_ignores_candidate_order(
        x in matrix(8, 4),
        w in prop::collection::vec(0.1..3.0f64, 6),
        shift in 0usize..6,
    ) {
        let emb = row_normalize(&x).0;
        let vm = [2, 3, 4];
        let vn = [5, 6, 7];
        let a = enhanced_loss(emb.view(), 0, 1, &vm, &w[..3], &vn, &w[3..], 0.5).unwrap();
        let rot = |v: &[usize], k: usize| { let mut v = v.to_vec(); v.rotate_left(k % 3); v };
        let rotw = |v: &[f64], k: usize| { let mut v = v.to_vec(); v.rotate_left(k % 3); v };
        let b = enhanced_loss(
            emb.view(), 0, 1, &rot(&vm, shift), &rotw(&w[..3], shift), &rot(&vn, shift), &rotw(&w[3..], shift), 0.5,
        ).unwrap();
        prop_assert!((a.loss - b.loss).abs() < 1e-12);
        prop_assert!((&a.grad - &b.grad).iter().all(|d| d.abs() < 1e-12));
    }

    #[test]
    fn unit_weights_reduce_to_infonce(x in matrix(7, 3), tau in 0.1..2.0f64) {
        let emb = row_normalize(&x).0;
        let neg = [2, 3, 4, 5, 6];
        let base = infonce(emb.view(), 0, 1, &neg, tau).unwrap();
        let enh = enhanced_loss(emb.view(), 0, 1, &[1], &[1.0], &neg, &[1.0; 5], tau).unwrap();
        prop_assert!((base.loss - enh.loss).abs() < 1e-12);
    }

    #[test]
    fn row_normalize_gives_unit_rows(x in matrix(6, 5)) {
        let (y, norms) = row_normalize(&x);
        for (row, n) in y.rows().into_iter().zip(norms) {
            let len = row.dot(&row).sqrt();
            let ok = if n > 0.0 { (len - 1.0).abs() < 1e-12 } else { len == 0.0 };
            prop_assert!(ok);
        }
    }

    #[test]
    fn ppr_routes_agree(g in graph(8), alpha in 0.2..0.9f64) {
        let a = NormalizedAdjacency::new(&g, false);
        let exact = ppr_exact(&a, alpha).unwrap();
        let iter = ppr_iterative(&a, alpha, 200);
        prop_assert!((&exact - &iter).iter().all(|d| d.abs() < 1e-8));
    }

    #[test]
    fn fused_similarity_is_symmetric_and_clamped(g in graph(8), x in matrix(8, 3), beta in 0.0..=1.0f64) {
        let cfg = SimilarityConfig { beta, ..SimilarityConfig::default() };
        let s = compute_similarity(&g, &FeatureMatrix::new(x).unwrap(), &cfg).unwrap();
        let v = s.as_array();
        prop_assert!(v.iter().all(|&e| e >= 0.0 && e.is_finite()));
        prop_assert!((v - &v.t()).iter().all(|d| d.abs() < 1e-12));
    }
}
