//! Recorded search experiments. The assertions only cover the search
//! contract; what was found is printed.

use std::collections::BTreeMap;

use vortex_chorus::choreography::Classification;
use vortex_chorus::hamiltonians::SystemSpec;
use vortex_chorus::search::{search, SearchConfig, StartStatus};

#[test]
fn bec_triangle_level_point_three() {
    let spec = SystemSpec::bec(vec![1.0; 3], 1.0, 1.0).unwrap();
    let cfg =
        SearchConfig { i_level: 0.3, n_starts: 64, seed: 7, perturbation_scale: 0.05, ..Default::default() };
    let out = search(&spec, &cfg).unwrap();
    let mut by_class: BTreeMap<String, usize> = BTreeMap::new();
    for r in &out.results {
        *by_class.entry(format!("{:?}", r.classification)).or_default() += 1;
    }
    let mut by_status: BTreeMap<String, usize> = BTreeMap::new();
    for r in &out.reports {
        *by_status.entry(format!("{:?}", r.status)).or_default() += 1;
    }
    println!("BEC n=3 I=0.3: statuses {by_status:?}, classes {by_class:?}");
    let nontrivial: Vec<_> =
        out.results.iter().filter(|r| r.classification == Classification::NonTrivial).collect();
    if let (Some(lo), Some(hi)) = (nontrivial.first(), nontrivial.last()) {
        println!(
            "non-trivial: {} orbits, energy {:.6} .. {:.6}, reduced diameter {:.2e} .. {:.2e}",
            nontrivial.len(),
            lo.energy,
            hi.energy,
            nontrivial.iter().map(|r| r.fs_diameter).fold(f64::INFINITY, f64::min),
            nontrivial.iter().map(|r| r.fs_diameter).fold(0.0, f64::max),
        );
    }
    assert!(out.converged_any());
    for r in &out.results {
        assert!(r.residual < cfg.newton_tol);
        assert!(r.chore_defect < 10.0 * cfg.newton_tol);
        assert!(r.h_deviation < 10.0 * cfg.newton_tol && r.i_deviation < 10.0 * cfg.newton_tol);
    }
    let accepted = out.reports.iter().filter(|r| r.status == StartStatus::Accepted).count();
    assert_eq!(accepted, out.results.len());
}
