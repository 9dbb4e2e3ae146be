//! Helpers shared by the integration test targets.

use ledqkd::config::LinkParams;
use ledqkd::pipeline::simulate_link;
use ledqkd::postproc::{sift_seeded, temporal_filter, SiftOutcome, SyncResult};

/// Prints one pass/fail line and asserts.
pub fn check(name: &str, pass: bool, details: &str) {
    println!(
        "acceptance {name}: {} — {details}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "{name}: {details}");
}

/// Repo-relative path to a shipped config.
pub fn config_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

/// Simulates a run and sifts it against the ground-truth frame alignment,
/// leaving synchronization quality to its own tests.
pub fn sift_with_truth(cfg: &LinkParams) -> (SiftOutcome, f64) {
    let sim = simulate_link(cfg).expect("simulation runs");
    let filtered = temporal_filter(
        &sim.tags,
        sim.pattern.period(),
        cfg.filter_ratio,
        cfg.sync.fold_bins,
    )
    .expect("filter runs");
    let sync = SyncResult {
        frame_offset: cfg.frame.start_offset_symbols as usize,
        clock_phase_s: 0.0,
        correlation_peak: 1.0,
        locked: true,
    };
    let outcome = sift_seeded(
        &filtered.tags,
        &sim.pattern,
        &sync,
        cfg.report.double_click,
        cfg.seed,
        32,
    );
    let duration = sim.pattern.payload().len() as f64 * sim.pattern.period();
    (outcome, duration)
}
