//! Statistical behaviour of the Monte Carlo aggregates.

use opm::sim::{monte_carlo, ScenarioConfig};

/// Standard error of the association-error estimate over repeated
/// aggregates shrinks like one over the square root of the run count:
/// sixteen times the runs should cut the spread by about four.
#[test]
fn association_error_standard_error_scales_with_runs() {
    let aggregates = 32;
    let spread = |runs: usize| -> f64 {
        let values: Vec<f64> = (0..aggregates)
            .map(|i| {
                let cfg = ScenarioConfig {
                    seed: 1000 * runs as u64 + i as u64,
                    n_steps: 25,
                    p_d: 0.8,
                    ..ScenarioConfig::default()
                };
                monte_carlo(&cfg, &[0.8], runs).unwrap()[0].assoc_error
            })
            .collect();
        let mean = values.iter().sum::<f64>() / aggregates as f64;
        let var =
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (aggregates - 1) as f64;
        var.sqrt()
    };
    let small = spread(4);
    let large = spread(64);
    let ratio = small / large;
    // The expected ratio is 4; estimating a standard deviation from 32
    // aggregates carries roughly 25% relative noise on the ratio.
    assert!(
        (2.2..=7.0).contains(&ratio),
        "spread ratio {ratio:.2} not consistent with 1/sqrt(runs) scaling \
         (runs 4: {small:.5}, runs 64: {large:.5})"
    );
}
