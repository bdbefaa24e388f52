use proptest::prelude::*;
use sptk_core::extraction::{
    build_counts_group, build_counts_hash, build_counts_hybrid, build_counts_sort, extract, Method,
    MethodChoice,
};
use sptk_core::features::{KindStats, Scope};
use sptk_core::oracle::reference_extract;
use sptk_core::{load_frostt, write_frostt, CooTensor, DuplicatePolicy, ModeOrder};

/// Random duplicate-free tensor of order 3..=5 with small dims.
fn tensor() -> impl Strategy<Value = CooTensor> {
    (3usize..=5)
        .prop_flat_map(|m| (proptest::collection::vec(1u64..7, m), 0usize..80))
        .prop_flat_map(|(dims, n)| {
            let coord = dims.iter().map(|&d| 0..d).collect::<Vec<_>>();
            (Just(dims), proptest::collection::vec(coord, n))
        })
        .prop_map(|(dims, coords)| {
            let mut coords = coords;
            coords.sort();
            coords.dedup();
            let entries = coords.into_iter().enumerate().map(|(i, c)| (c, i as f64 + 0.5)).collect();
            CooTensor::from_entries(dims, entries).unwrap()
        })
}

fn order3() -> impl Strategy<Value = CooTensor> {
    tensor().prop_filter("order 3", |t| t.order() == 3)
}

fn mode_orders(m: usize) -> Vec<ModeOrder> {
    fn rec(m: usize, cur: &mut Vec<usize>, out: &mut Vec<ModeOrder>) {
        if cur.len() == m {
            out.push(ModeOrder::new(cur.clone()).unwrap());
            return;
        }
        for i in 0..m {
            if !cur.contains(&i) {
                cur.push(i);
                rec(m, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(m, &mut Vec::new(), &mut out);
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mode_order_methods_match_oracle(t in tensor()) {
        for mo in mode_orders(t.order()) {
            let r = reference_extract(&t, &mo).unwrap();
            r.check(t.nnz()).unwrap();
            prop_assert_eq!(&build_counts_sort(&t, &mo).unwrap(), &r);
            prop_assert_eq!(&build_counts_group(&t, &mo).unwrap(), &r);
            prop_assert_eq!(&build_counts_hybrid(&t, &mo, 1e11).unwrap(), &r);
            prop_assert_eq!(&build_counts_hybrid(&t, &mo, 1.0).unwrap(), &r);
        }
    }

    #[test]
    fn hash_blocks_match_oracle(t in order3()) {
        let b = build_counts_hash(&t, &[0, 1, 2]).unwrap();
        for mo in ModeOrder::cyclic_set() {
            let r = reference_extract(&t, &mo).unwrap();
            let p = mo.perm();
            let f = b.fibers.iter().find(|f| f.mode == p[2]).unwrap();
            let mut a = f.n_nz_fib.clone();
            let mut e = r.n_nz_fib.clone();
            a.sort();
            e.sort();
            prop_assert_eq!(a, e);
            let pair = (p[1].min(p[2]), p[1].max(p[2]));
            let s = b.slices.iter().find(|s| s.pair == pair).unwrap();
            prop_assert_eq!(s.fiber_mode, p[2]);
            let mut a: Vec<(u64, u64)> = s.n_nz_slc.iter().copied().zip(s.n_fib_slc.iter().copied()).collect();
            let mut e: Vec<(u64, u64)> = r.n_nz_slc.iter().copied().zip(r.n_fib_slc.iter().copied()).collect();
            a.sort();
            e.sort();
            prop_assert_eq!(a, e);
        }
    }

    #[test]
    fn methods_agree_on_features(t in tensor()) {
        let reference = extract(&t, &MethodChoice::new(Method::Hash, Scope::Only3Mode)).unwrap();
        for m in [Method::Sort, Method::Group, Method::Hybrid] {
            let fs = extract(&t, &MethodChoice::new(m, Scope::Only3Mode)).unwrap();
            prop_assert!(fs.compare(&reference, 1e-12).is_empty());
        }
        if t.order() == 3 {
            let all = extract(&t, &MethodChoice::new(Method::Hash, Scope::AllModes)).unwrap();
            prop_assert!(all.compare(&reference, 1e-12).is_empty());
        }
    }

    #[test]
    fn block_sums_are_conserved(t in tensor()) {
        let fs = extract(&t, &MethodChoice::new(Method::Hash, Scope::AllModes)).unwrap();
        for b in &fs.blocks {
            match b.kind {
                sptk_core::features::Kind::FibPerSlice => {}
                _ => prop_assert_eq!(b.stats.sum, t.nnz() as u64),
            }
        }
        let g = &fs.global;
        prop_assert!(g.d_fib <= 1.0 && g.d_slc <= 1.0 && g.d_nz <= 1.0);
    }

    #[test]
    fn sort_is_a_sorted_permutation(t in tensor(), pick in 0usize..120) {
        let orders = mode_orders(t.order());
        let mo = &orders[pick % orders.len()];
        let s = t.sort_by_mode_order(mo).unwrap();
        let key = |x: &CooTensor, k: usize| mo.perm().iter().map(|&p| x.column(p)[k]).collect::<Vec<_>>();
        for k in 1..s.nnz() {
            prop_assert!(key(&s, k - 1) <= key(&s, k));
        }
        let mut a: Vec<(Vec<u64>, u64)> = (0..t.nnz()).map(|k| (t.coord(k), t.values()[k].to_bits())).collect();
        let mut b: Vec<(Vec<u64>, u64)> = (0..s.nnz()).map(|k| (s.coord(k), s.values()[k].to_bits())).collect();
        a.sort();
        b.sort();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn frostt_round_trip(t in tensor(), scale in -300i32..300) {
        let vals: Vec<f64> = t.values().iter().map(|v| v * 10f64.powi(scale)).collect();
        let t = CooTensor::new(t.dims().to_vec(), t.columns().to_vec(), vals).unwrap();
        let mut buf = Vec::new();
        write_frostt(&t, &mut buf).unwrap();
        if t.nnz() == 0 {
            prop_assert!(buf.is_empty());
        } else {
            let back = load_frostt(buf.as_slice(), Some(t.dims()), DuplicatePolicy::Reject).unwrap();
            prop_assert_eq!(back, t);
        }
    }

    #[test]
    fn stats_imbalance_ordering(counts in proptest::collection::vec(1u64..1000, 1..100), extra in 0u128..1000) {
        let s = KindStats::compute(&counts, counts.len() as u128 + extra).unwrap();
        prop_assert!(s.imbal_all >= s.imbal_nz && s.imbal_nz >= 0.0);
        prop_assert!(s.avg_all <= s.avg_nz);
    }
}

#[test]
fn projection_keeps_multiplicity() {
    // modes 1 and 4 are dropped; two nonzeros collapse onto one projected coordinate
    let t = CooTensor::from_entries(
        vec![2, 5, 5, 5],
        vec![
            (vec![0, 1, 2, 3], 1.0),
            (vec![1, 1, 2, 3], 1.0),
            (vec![0, 4, 4, 4], 1.0),
        ],
    )
    .unwrap();
    let fs = extract(&t, &MethodChoice::new(Method::Sort, Scope::Only3Mode)).unwrap();
    assert_eq!(fs.global.size_modes, vec![1, 2, 3]);
    let nz_fib = fs
        .block(sptk_core::features::Kind::NzPerFiber, sptk_core::features::ModeId::Fiber(3))
        .unwrap();
    assert_eq!((nz_fib.n_nz, nz_fib.sum, nz_fib.max), (2, 3, 2));
    assert_eq!(fs.global.d_nz, 3.0 / 250.0);
    let hash = extract(&t, &MethodChoice::new(Method::Hash, Scope::Only3Mode)).unwrap();
    assert!(hash.compare(&fs, 0.0).is_empty());
}
