mod common;

use common::*;

const RES: [usize; 3] = [24, 48, 96];

#[test]
fn transformed_operators_converge_at_second_order() {
    let errs: Vec<[f64; 3]> = RES.iter().map(|&n| hat_operator_errors(n)).collect();
    for op in 0..3 {
        for w in errs.windows(2) {
            let p = order(w[0][op], w[1][op]);
            assert!(p >= 1.9, "operator {op}: errors {:?}, order {p}", errs.iter().map(|e| e[op]).collect::<Vec<_>>());
        }
    }
}

#[test]
fn evolution_operator_matches_continuum_rates() {
    let errs: Vec<f64> = RES.iter().map(|&n| evolution_error(n)).collect();
    for w in errs.windows(2) {
        assert!(order(w[0], w[1]) >= 1.9, "errors {errs:?}");
    }
}

#[test]
fn stationary_forcing_matches_continuum_identity() {
    // The cutoff's fourth derivative is 360 at the boundary, so the one-sided
    // stencil there reaches its asymptotic rate only on finer grids.
    let errs: Vec<(f64, f64)> = [96, 192, 384].iter().map(|&n| source_errors(n)).collect();
    for w in errs.windows(2) {
        assert!(w[1].0 < w[0].0 && w[1].1 < w[0].1, "errors {errs:?}");
    }
    assert!(order(errs[1].0, errs[2].0) >= 1.85, "F errors {errs:?}");
    assert!(order(errs[1].1, errs[2].1) >= 1.9, "G errors {errs:?}");
}
