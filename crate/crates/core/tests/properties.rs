//! Property-based invariants of the core math and stream plumbing.

use ledqkd::detection::{Channel, DetectionEvent};
use ledqkd::emitter::{modulated_rate, DriveWaveform, EmitterModel};
use ledqkd::postproc::{fold_histogram, temporal_filter};
use ledqkd::tagfile::TagStream;
use ledqkd::txchain::{emission_table, ChannelParams};
use ledqkd::units::{
    binary_entropy, dbm_to_watts, photon_rate, qber_threshold, secret_fraction, MeanPhotonNumber,
    OpticalPower, Wavelength,
};
use proptest::prelude::*;

fn wavelength() -> Wavelength {
    Wavelength::from_nanometers(1547.0).unwrap()
}

proptest! {
    #[test]
    fn dbm_watts_round_trip(p in -120.0f64..30.0) {
        let back = dbm_to_watts(p).dbm().unwrap();
        prop_assert!((back - p).abs() <= 1e-12 * p.abs().max(1.0));
    }

    #[test]
    fn photon_rate_is_linear_in_power(w in 1e-15f64..1e-3, a in 1e-3f64..1e3) {
        let lam = wavelength();
        let r1 = photon_rate(OpticalPower::from_watts(w).unwrap(), lam);
        let r2 = photon_rate(OpticalPower::from_watts(a * w).unwrap(), lam);
        prop_assert!((r2 - a * r1).abs() <= 1e-12 * r2.abs());
    }

    #[test]
    fn entropy_is_symmetric(x in 0.0f64..=1.0) {
        let h1 = binary_entropy(x).unwrap();
        let h2 = binary_entropy(1.0 - x).unwrap();
        prop_assert!((h1 - h2).abs() < 1e-12);
    }

    #[test]
    fn secret_fraction_monotone_and_clamped(a in 0.0f64..=0.5, b in 0.0f64..=0.5) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let s_lo = secret_fraction(lo).unwrap();
        let s_hi = secret_fraction(hi).unwrap();
        prop_assert!(s_lo + 1e-12 >= s_hi);
        if hi >= qber_threshold::<f64>() {
            prop_assert_eq!(s_hi, 0.0);
        }
    }

    #[test]
    fn li_power_monotone_over_random_tables(
        raw in proptest::collection::vec((0.1f64..5.0, 0.0f64..1e-11), 2..8),
        query in 0.0f64..1.0,
    ) {
        // build a strictly-increasing-current, non-decreasing-power table
        let mut current = 0.0;
        let mut power = 0.0;
        let mut table = vec![(0.0, 0.0)];
        for (dc, dp) in raw {
            current += dc;
            power += dp;
            table.push((current, power));
        }
        let model = EmitterModel::new(table, wavelength(), 10e6).unwrap();
        let max = model.max_current_ma();
        let a = query * max;
        let b = (query * 0.5) * max;
        let pa = model.li_power(a).unwrap().watts();
        let pb = model.li_power(b).unwrap().watts();
        if a >= b {
            prop_assert!(pa + 1e-18 >= pb);
        }
    }

    #[test]
    fn modulated_rate_never_negative(m in 0.0f64..=1.0, f in 1e3f64..1e9, t in 0.0f64..1e-3) {
        let model = EmitterModel::default_model();
        let w = DriveWaveform::new(1e6, m, f).unwrap();
        prop_assert!(modulated_rate(&w, &model, t) >= 0.0);
    }

    #[test]
    fn emission_total_invariant_under_rotation(
        loss in 0.0f64..30.0,
        angle in -180.0f64..180.0,
        ext in 10.0f64..60.0,
    ) {
        let mu = MeanPhotonNumber::new(0.1).unwrap();
        let ch = ChannelParams {
            loss_db: loss,
            misalignment_deg: angle,
            gate_extinction_db: ext,
            gate_duty: 0.2,
        };
        let expected = 0.1 * 10f64.powf(-loss / 10.0) * (1.0 + 10f64.powf(-ext / 10.0));
        for e in emission_table(mu, &ch) {
            prop_assert!((e.total_mu() - expected).abs() <= 1e-12 * expected);
        }
    }

    #[test]
    fn fold_preserves_total_and_filter_never_grows(
        ticks in proptest::collection::vec(0u64..10_000_000_000u64, 0..300),
        ratio in 0.05f64..=1.0,
    ) {
        let mut events: Vec<DetectionEvent> = ticks
            .iter()
            .map(|&t| DetectionEvent { channel: Channel::D, ticks: t })
            .collect();
        events.sort_unstable_by_key(|e| e.ticks);
        let tags = TagStream { resolution_s: 1e-12, events };
        let hist = fold_histogram(&tags, 1e-6, 32).unwrap();
        prop_assert_eq!(hist.total as usize, tags.len());
        prop_assert_eq!(hist.bins.iter().sum::<u64>(), hist.total);

        let out = temporal_filter(&tags, 1e-6, ratio, 32).unwrap();
        prop_assert!(out.tags.len() <= tags.len());
        if ratio == 1.0 {
            prop_assert_eq!(out.tags.len(), tags.len());
        }
    }

    #[test]
    fn tag_file_round_trip(
        ticks in proptest::collection::vec((0u64..u64::MAX / 2, 0u8..4), 0..200),
        res_fs in 1u64..100_000,
    ) {
        let mut events: Vec<DetectionEvent> = ticks
            .iter()
            .map(|&(t, c)| DetectionEvent {
                channel: Channel::from_code(c).unwrap(),
                ticks: t,
            })
            .collect();
        events.sort_unstable_by_key(|e| (e.ticks, e.channel.code()));
        let tags = TagStream {
            resolution_s: res_fs as f64 * 1e-15,
            events,
        };
        let mut buf = Vec::new();
        tags.write_qtt(&mut buf).unwrap();
        let back = TagStream::read_qtt(buf.as_slice()).unwrap();
        prop_assert_eq!(back.events, tags.events);
        prop_assert!((back.resolution_s - tags.resolution_s).abs() < 1e-20);
    }
}
