//! Statistical integration tests of the receiver pipeline against the
//! closed-form oracle and Monte-Carlo expectations.

use ledqkd::config::tests_support::base_link;
use ledqkd::detection::DoubleClickPolicy;
use ledqkd::pipeline::{analyze_tags, simulate_link, AnalyzeParams};
use ledqkd::postproc::{
    estimate_qber, frame_sync, sift_seeded, temporal_filter, SyncResult,
};
use ledqkd::txchain::Basis;

/// Sift a simulated run against the ground-truth frame alignment
/// (synchronization quality is covered by its own tests).
fn sift_with_truth(
    cfg: &ledqkd::config::LinkParams,
) -> (ledqkd::postproc::SiftOutcome, f64) {
    let sim = simulate_link(cfg).unwrap();
    let filtered = temporal_filter(
        &sim.tags,
        sim.pattern.period(),
        cfg.filter_ratio,
        cfg.sync.fold_bins,
    )
    .unwrap();
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

#[test]
fn sift_emits_only_matching_bases_checked_against_pattern_csv() {
    let mut cfg = base_link();
    cfg.frame.payload_len = 100_000;
    let sim = simulate_link(&cfg).unwrap();

    // round-trip the pattern through its CSV export before cross-checking
    let mut buf = Vec::new();
    sim.pattern.write_csv(&mut buf).unwrap();
    let pattern = ledqkd::txchain::SymbolPattern::read_csv(buf.as_slice()).unwrap();

    let (outcome, _) = sift_with_truth(&cfg);
    assert!(!outcome.records.is_empty());
    for r in &outcome.records {
        let alice = pattern.symbols()[r.symbol_index as usize];
        assert_eq!(alice.basis, r.basis);
        assert_eq!(alice.bit, r.alice_bit);
    }
}

#[test]
fn dark_limited_qber_improves_with_tighter_filter() {
    // dark-dominated link: half-width filtering keeps the signal gate but
    // cuts dark counts, so the measured QBER must drop
    let mut cfg = base_link();
    cfg.channel.loss_db = 12.0;
    cfg.frame.payload_len = 2_000_000;

    let mut qber = Vec::new();
    for ratio in [1.0, 0.5] {
        cfg.filter_ratio = ratio;
        let (outcome, duration) = sift_with_truth(&cfg);
        let report = estimate_qber(&outcome.records, duration, ratio).unwrap();
        qber.push(report.qber_avg);
    }
    assert!(
        qber[1] < qber[0],
        "QBER(0.5) = {} should beat QBER(1.0) = {}",
        qber[1],
        qber[0]
    );
}

#[test]
fn noiseless_sync_recovers_exact_offset() {
    let mut cfg = base_link();
    cfg.detector.dark_rate_hz = 0.0;
    cfg.frame.header_len = 8192;
    cfg.frame.payload_len = 50_000;
    cfg.frame.start_offset_symbols = 1234;
    let sim = simulate_link(&cfg).unwrap();
    let sync = frame_sync(&sim.tags, &sim.pattern, &cfg.sync).unwrap();
    assert!(sync.locked, "peak {}", sync.correlation_peak);
    assert_eq!(sync.frame_offset, 1234);
    assert!(sync.correlation_peak > 0.95);
}

#[test]
fn lossy_dark_sync_recovers_offset_over_100_trials() {
    // 10 dB channel loss with the characterized dark rate; faster symbols
    // keep the per-window dark occupancy low enough for a clean lock
    let mut cfg = base_link();
    cfg.symbol_rate_hz = 10e6;
    cfg.channel.loss_db = 10.0;
    cfg.frame.header_len = 131_072;
    cfg.frame.payload_len = 100_000;

    let mut locked_right = 0;
    for trial in 0..100u64 {
        cfg.seed = 1000 + trial;
        cfg.frame.start_offset_symbols = (trial * 37) % 2048;
        let sim = simulate_link(&cfg).unwrap();
        let filtered = temporal_filter(
            &sim.tags,
            sim.pattern.period(),
            cfg.filter_ratio,
            cfg.sync.fold_bins,
        )
        .unwrap();
        let sync = frame_sync(&filtered.tags, &sim.pattern, &cfg.sync).unwrap();
        if sync.locked && sync.frame_offset == cfg.frame.start_offset_symbols as usize {
            locked_right += 1;
        }
    }
    assert!(locked_right >= 99, "only {locked_right}/100 locked correctly");
}

#[test]
fn analyze_pipeline_agrees_with_oracle_at_base_point() {
    let mut cfg = base_link();
    cfg.frame.header_len = 16384;
    cfg.frame.payload_len = 2_000_000;
    cfg.frame.start_offset_symbols = 512;
    cfg.channel.misalignment_deg = 3.0;

    let sim = simulate_link(&cfg).unwrap();
    let analysis = analyze_tags(&sim.tags, &sim.pattern, &AnalyzeParams::from(&cfg)).unwrap();
    assert!(analysis.sync.locked);
    assert_eq!(analysis.sync.frame_offset, 512);
    let report = analysis.report.unwrap();

    let predicted = ledqkd::postproc::predicted_qber(&cfg);
    let sigma = (predicted * (1.0 - predicted) / report.sifted_count as f64).sqrt();
    assert!(
        (report.qber_avg - predicted).abs() < 3.0 * sigma,
        "sim {} vs oracle {} (3sigma {})",
        report.qber_avg,
        predicted,
        3.0 * sigma
    );
}

#[test]
fn pooled_qber_over_30_seeded_runs_matches_oracle() {
    let mut cfg = base_link();
    cfg.channel.misalignment_deg = 3.0;
    cfg.channel.loss_db = 3.0;
    cfg.frame.payload_len = 1_000_000;
    let predicted = ledqkd::postproc::predicted_qber(&cfg);

    let (mut errors, mut records) = (0u64, 0u64);
    for seed in 0..30u64 {
        cfg.seed = 300 + seed;
        let (outcome, _) = sift_with_truth(&cfg);
        records += outcome.records.len() as u64;
        errors += outcome
            .records
            .iter()
            .filter(|r| r.alice_bit != r.bob_bit)
            .count() as u64;
    }
    let pooled = errors as f64 / records as f64;
    let sigma = (predicted * (1.0 - predicted) / records as f64).sqrt();
    assert!(
        (pooled - predicted).abs() < 3.0 * sigma,
        "pooled {pooled:.6} vs oracle {predicted:.6} over {records} records (3sigma {:.6})",
        3.0 * sigma
    );
}

#[test]
fn double_click_discard_reduces_records() {
    let mut cfg = base_link();
    cfg.mu_q = 2.0; // strong light: double clicks become common
    cfg.detector.dead_time_s = 0.0;
    cfg.frame.payload_len = 200_000;

    cfg.report.double_click = DoubleClickPolicy::Random;
    let (with_random, _) = sift_with_truth(&cfg);
    cfg.report.double_click = DoubleClickPolicy::Discard;
    let (with_discard, _) = sift_with_truth(&cfg);

    assert!(with_random.double_click_windows > 0);
    assert!(with_discard.records.len() < with_random.records.len());
}

#[test]
fn per_basis_reports_match_pattern_composition() {
    let mut cfg = base_link();
    cfg.frame.payload_len = 1_000_000;
    let (outcome, duration) = sift_with_truth(&cfg);
    let report = estimate_qber(&outcome.records, duration, cfg.filter_ratio).unwrap();

    // both bases participate and carry comparable traffic
    assert!(report.sifted_hv > 0 && report.sifted_ad > 0);
    let balance = report.sifted_hv as f64 / report.sifted_ad as f64;
    assert!((0.9..1.1).contains(&balance), "balance {balance}");
    assert_eq!(report.sifted_count, report.sifted_hv + report.sifted_ad);
    assert!(report.qber_hv.is_some() && report.qber_ad.is_some());

    // pooled average equals count-weighted mean of the basis QBERs
    let hv = report.qber_hv.unwrap();
    let ad = report.qber_ad.unwrap();
    let pooled = (hv * report.sifted_hv as f64 + ad * report.sifted_ad as f64)
        / report.sifted_count as f64;
    assert!((report.qber_avg - pooled).abs() < 1e-12);

    // records sit only in matching bases
    assert!(outcome
        .records
        .iter()
        .all(|r| matches!(r.basis, Basis::HV | Basis::AD)));
}
