use std::sync::Arc;

use dpc_core::ch::ChIndex;
use dpc_core::dataset::{generate, Dataset, GeneratorSpec};
use dpc_core::oracle::oracle_profile;
use dpc_core::quadtree::QuadConfig;
use dpc_core::rtree::RConfig;
use dpc_core::tree::{DeltaOptions, Frontier, TreeIndex};
use dpc_core::{assign, select_centers, BackendSpec, CenterSelection, DensityIndex};

fn backends() -> Vec<BackendSpec> {
    vec![
        BackendSpec::List,
        BackendSpec::Ch { w: 0.75 },
        BackendSpec::Quadtree(QuadConfig::with_capacity(8)),
        BackendSpec::Rtree(RConfig::with_fanout(6)),
    ]
}

#[test]
fn blobs_in_three_dimensions() {
    let ds = Arc::new(
        generate(&GeneratorSpec::blobs(4, 600, 21).with_dim(3))
            .unwrap()
            .dataset,
    );
    for dc in [0.05, 1.0, 2.5, 500.0] {
        let expect = oracle_profile(&ds, dc).unwrap();
        for spec in backends() {
            let got = spec.build(ds.clone()).unwrap().profile(dc).unwrap();
            assert_eq!(got, expect, "{} dc={dc}", spec.name());
        }
    }
}

#[test]
fn heavy_duplicates_and_ties() {
    let rows: Vec<[f64; 2]> = (0..240)
        .map(|i| [(i % 4) as f64, ((i / 4) % 3) as f64])
        .collect();
    let ds = Arc::new(Dataset::from_rows(&rows).unwrap());
    for dc in [0.5, 1.0, 1.0000001, 2.0, 3.0] {
        let expect = oracle_profile(&ds, dc).unwrap();
        for spec in backends() {
            let got = spec.build(ds.clone()).unwrap().profile(dc).unwrap();
            assert_eq!(got, expect, "{} dc={dc}", spec.name());
        }
    }
}

#[test]
fn stack_and_queue_frontiers_agree() {
    let ds = generate(&GeneratorSpec::uniform(800, 3)).unwrap().dataset;
    let idx = TreeIndex::rtree(ds, RConfig::with_fanout(8)).unwrap();
    let rho = idx.rho(4.0).unwrap();
    let queue = idx.delta_with(&rho, DeltaOptions::default()).unwrap();
    let stack_opts = DeltaOptions {
        frontier: Frontier::Stack,
        ..DeltaOptions::default()
    };
    let stack = idx.delta_with(&rho, stack_opts).unwrap();
    for (a, b) in queue.iter().zip(&stack) {
        assert_eq!((a.delta, a.mu), (b.delta, b.mu));
    }
}

#[test]
fn clusterings_match_across_backends() {
    let g = generate(&GeneratorSpec::blobs(3, 500, 8)).unwrap();
    let ds = Arc::new(g.dataset);
    let reference = oracle_profile(&ds, 2.0).unwrap();
    let centers = select_centers(&reference, &CenterSelection::TopK(3)).unwrap();
    let expect = assign(&reference, &centers).unwrap();
    for spec in backends() {
        let p = spec.build(ds.clone()).unwrap().profile(2.0).unwrap();
        assert_eq!(
            select_centers(&p, &CenterSelection::TopK(3)).unwrap(),
            centers
        );
        assert_eq!(assign(&p, &centers).unwrap(), expect);
    }
}

#[test]
fn ch_width_sweep_is_exact() {
    let ds = generate(&GeneratorSpec::blobs(2, 300, 2)).unwrap().dataset;
    for w in [0.01, 0.3, 1.0, 7.5, 1000.0] {
        let idx = ChIndex::build(&ds, w).unwrap();
        for k in [1usize, 2, 5, 13] {
            let dc = k as f64 * w;
            assert_eq!(
                idx.rho(dc).unwrap(),
                dpc_core::oracle::oracle_rho(&ds, dc).unwrap()
            );
        }
    }
}
