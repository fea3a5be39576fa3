//! Stitched walks against exact walk laws.

use std::collections::BTreeMap;

use num_traits::ToPrimitive;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use stitchwalk::oracle;
use stitchwalk::rng::Substreams;
use stitchwalk::walk::{
    is_valid_walk, run_budgeted, run_multi_source, FailPolicy, Laziness, Mode, RunOptions, StitchParams, WalkBatch,
};
use stitchwalk::{fixtures, ClusterConfig, Graph, VertexId};

fn desk(ell: usize, target: u64, mode: Mode) -> StitchParams {
    StitchParams::custom(ell, 10.0, 10.0, 100.0, 1.25)
        .unwrap()
        .with_target(target)
        .with_mode(mode)
        .with_fail_policy(FailPolicy::Tolerate)
}

fn chi_square(walks: &WalkBatch, exact: &BTreeMap<Vec<VertexId>, f64>) -> (f64, f64) {
    let mut counts: BTreeMap<&[VertexId], u64> = BTreeMap::new();
    for w in walks.iter() {
        assert!(exact.contains_key(w), "walk {w:?} has zero probability");
        *counts.entry(w).or_default() += 1;
    }
    let m = walks.len() as f64;
    let stat = exact
        .iter()
        .map(|(path, p)| {
            let o = *counts.get(path.as_slice()).unwrap_or(&0) as f64;
            (o - m * p).powi(2) / (m * p)
        })
        .sum();
    let limit = ChiSquared::new((exact.len() - 1) as f64).unwrap().inverse_cdf(0.999);
    (stat, limit)
}

fn exact_paths(g: &Graph, r: VertexId, ell: usize, lazy: bool) -> BTreeMap<Vec<VertexId>, f64> {
    oracle::enumerate_walks(g, r, ell, lazy).unwrap().into_iter().map(|(k, p)| (k, p.to_f64().unwrap())).collect()
}

fn max_step_tvd(g: &Graph, walks: &WalkBatch, r: VertexId, lazy: bool) -> f64 {
    let exact = oracle::step_dists_from(g, r, walks.ell(), lazy).unwrap();
    let m = walks.len() as f64;
    (1..=walks.ell())
        .map(|t| {
            let mut emp = vec![0.0; g.n()];
            for w in walks.iter() {
                emp[w[t] as usize] += 1.0 / m;
            }
            oracle::tvd(&emp, &exact[t])
        })
        .fold(0.0, f64::max)
}

#[test]
fn path_frequencies_on_p4_labeled() {
    let g = fixtures::path(4);
    let run = run_budgeted(
        &g,
        1,
        &desk(4, 10_000, Mode::Theory),
        &ClusterConfig::default(),
        &Substreams::new(3),
        RunOptions::default(),
    )
    .unwrap();
    let mut walks = run.root_walks().clone();
    walks.truncate(10_000);
    assert_eq!(walks.len(), 10_000);
    let exact = exact_paths(&g, 1, 4, false);
    let (stat, limit) = chi_square(&walks, &exact);
    assert!(stat < limit, "chi2 {stat} >= {limit}");
}

#[test]
fn path_frequencies_on_p4_pooled() {
    let g = fixtures::path(4);
    let run = run_budgeted(
        &g,
        0,
        &desk(4, 10_000, Mode::Practical),
        &ClusterConfig::default(),
        &Substreams::new(4),
        RunOptions::default(),
    )
    .unwrap();
    let mut walks = run.root_walks().clone();
    walks.truncate(10_000);
    let (stat, limit) = chi_square(&walks, &exact_paths(&g, 0, 4, false));
    assert!(stat < limit, "chi2 {stat} >= {limit}");
}

#[test]
fn lazy_paths_on_triangle() {
    let g = fixtures::complete(3);
    let p = desk(2, 10_000, Mode::Practical).with_laziness(Laziness::Half);
    let run = run_budgeted(&g, 2, &p, &ClusterConfig::default(), &Substreams::new(5), RunOptions::default()).unwrap();
    let walks = run.root_walks();
    assert!(walks.lazy());
    assert!(walks.iter().all(|w| is_valid_walk(&g, w, true)));
    let exact = exact_paths(&g, 2, 2, true);
    assert_eq!(exact.len(), 9);
    let (stat, limit) = chi_square(walks, &exact);
    assert!(stat < limit, "chi2 {stat} >= {limit}");
}

#[test]
fn step_laws_on_random_graph() {
    let g = fixtures::gnp(30, 0.25, 2);
    let run = run_budgeted(
        &g,
        4,
        &desk(8, 10_000, Mode::Practical),
        &ClusterConfig::default(),
        &Substreams::new(6),
        RunOptions::default(),
    )
    .unwrap();
    assert!(max_step_tvd(&g, run.root_walks(), 4, false) < 0.05);
}

#[test]
fn multi_source_step_laws_on_c8() {
    let g = fixtures::cycle(8);
    let mut b = vec![0u64; 8];
    b[0] = 4000;
    b[3] = 3000;
    b[6] = 500;
    let run =
        run_multi_source(&g, &b, &desk(8, 1, Mode::Practical), &ClusterConfig::default(), &Substreams::new(7)).unwrap();
    assert_eq!(run.groups.len(), 2);
    assert!(run.shortfall.is_empty(), "{:?}", run.shortfall);
    for (u, tol) in [(0, 0.04), (3, 0.04), (6, 0.1)] {
        let walks = run.walks_of(u).unwrap();
        assert_eq!(walks.len() as u64, b[u as usize]);
        assert!(walks.iter().all(|w| w[0] == u && is_valid_walk(&g, w, false)));
        let d = max_step_tvd(&g, walks, u, false);
        assert!(d < tol, "root {u}: tvd {d}");
    }
}
