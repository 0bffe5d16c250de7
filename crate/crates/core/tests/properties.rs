//! Property tests for the score, analysis, and indices invariants.

mod common;

use anthemetrics::analysis::{
    cluster_agreement, kmeans_fit, mid_ranks, pearson, silhouette_score, spearman, standardize,
};
use anthemetrics::features::{FeatureStore, FeatureVector};
use anthemetrics::indices::normalize_country_name;
use anthemetrics::score::{
    build_beat_grid, merged_sounding_intervals, Note, TempoMap, TempoSegment,
};
use proptest::prelude::*;

fn tempo_map_strategy() -> impl Strategy<Value = TempoMap> {
    (
        1u16..2000,
        proptest::collection::vec((1u64..50_000, 1u32..4_000_000), 0..6),
    )
        .prop_map(|(division, raw)| {
            let mut segments = vec![TempoSegment {
                start_tick: 0,
                micros_per_quarter: 500_000,
            }];
            let mut ticks: Vec<u64> = raw.iter().map(|(t, _)| *t).collect();
            ticks.sort_unstable();
            ticks.dedup();
            for (tick, (_, micros)) in ticks.into_iter().zip(raw) {
                segments.push(TempoSegment {
                    start_tick: tick,
                    micros_per_quarter: micros,
                });
            }
            TempoMap { segments, division }
        })
}

fn notes_strategy() -> impl Strategy<Value = Vec<Note>> {
    proptest::collection::vec((0u64..2000, 1u64..500, 0u8..128, 1u8..128), 1..30).prop_map(|raw| {
        raw.into_iter()
            .map(|(onset, len, pitch, velocity)| {
                let offset = onset + len;
                Note {
                    channel: 0,
                    pitch,
                    velocity,
                    onset_tick: onset,
                    offset_tick: offset,
                    onset_beats: onset as f64 / 480.0,
                    duration_beats: len as f64 / 480.0,
                    onset_seconds: 0.0,
                    duration_seconds: 0.0,
                }
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn ticks_to_seconds_is_monotone(map in tempo_map_strategy(), a in 0u64..100_000, b in 0u64..100_000) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(map.seconds_at(lo) <= map.seconds_at(hi));
    }

    #[test]
    fn beat_grid_strictly_increasing(map in tempo_map_strategy(), beats in 0u64..64) {
        let grid = build_beat_grid(beats as f64, &map);
        prop_assert!(!grid.is_empty());
        for pair in grid.windows(2) {
            prop_assert!(pair[1] > pair[0], "grid not strictly increasing: {pair:?}");
        }
    }

    #[test]
    fn beat_grid_spacing_matches_bpm_on_constant_tempo(
        division in 24u16..2000,
        micros in 100_000u32..2_000_000,
        beats in 1u64..64,
    ) {
        let map = TempoMap {
            segments: vec![TempoSegment { start_tick: 0, micros_per_quarter: micros }],
            division,
        };
        let grid = build_beat_grid(beats as f64, &map);
        let bpm = 60_000_000.0 / f64::from(micros);
        for pair in grid.windows(2) {
            prop_assert!(((pair[1] - pair[0]) - 60.0 / bpm).abs() < 1e-9);
        }
    }

    #[test]
    fn merged_intervals_disjoint_sorted_and_bounded(notes in notes_strategy()) {
        let mut sorted = notes.clone();
        sorted.sort_by_key(|n| n.onset_tick);
        let merged = merged_sounding_intervals(&sorted);
        for pair in merged.windows(2) {
            prop_assert!(pair[0].1 < pair[1].0, "intervals touch or overlap: {pair:?}");
        }
        let merged_total: f64 = merged.iter().map(|(s, e)| e - s).sum();
        let note_total: f64 = sorted.iter().map(|n| n.duration_beats).sum();
        prop_assert!(merged_total <= note_total + 1e-9);
    }

    #[test]
    fn correlations_symmetric_and_affine_invariant(
        xs in proptest::collection::vec(-1000.0f64..1000.0, 3..20),
        noise in proptest::collection::vec(-1000.0f64..1000.0, 3..20),
        scale in 0.001f64..100.0,
        shift in -500.0f64..500.0,
    ) {
        let n = xs.len().min(noise.len());
        let x = &xs[..n];
        let y = &noise[..n];
        prop_assume!(n >= 3);
        prop_assume!(!x.iter().all(|&v| v == x[0]));
        prop_assume!(!y.iter().all(|&v| v == y[0]));

        let r = pearson(x, y).unwrap();
        prop_assert!((-1.0..=1.0).contains(&r));
        prop_assert!((r - pearson(y, x).unwrap()).abs() < 1e-12);

        let x_affine: Vec<f64> = x.iter().map(|v| v * scale + shift).collect();
        prop_assert!((pearson(&x_affine, y).unwrap() - r).abs() < 1e-9);

        let rho = spearman(x, y).unwrap();
        prop_assert!((rho - spearman(y, x).unwrap()).abs() < 1e-12);
        // Any strictly monotone transform preserves ranks exactly.
        let x_monotone: Vec<f64> = x.iter().map(|v| (v / 1000.0).exp()).collect();
        prop_assert!((spearman(&x_monotone, y).unwrap() - rho).abs() < 1e-12);
    }

    #[test]
    fn mid_ranks_are_a_permutation_invariant_summary(
        values in proptest::collection::vec(-100.0f64..100.0, 1..30),
    ) {
        let ranks = mid_ranks(&values);
        let total: f64 = ranks.iter().sum();
        let n = values.len() as f64;
        prop_assert!((total - n * (n + 1.0) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn silhouette_stays_in_unit_interval(
        data in proptest::collection::vec(proptest::collection::vec(-50.0f64..50.0, 2), 4..24),
        labels in proptest::collection::vec(0usize..3, 4..24),
    ) {
        let n = data.len().min(labels.len());
        let data = &data[..n];
        // Compact labels (first-appearance order) so every cluster in 0..k
        // is populated; single-cluster draws are rejected by the scorer.
        let mut mapping = std::collections::HashMap::new();
        let mut next = 0usize;
        let labels: Vec<usize> = labels[..n]
            .iter()
            .map(|&l| {
                *mapping.entry(l).or_insert_with(|| {
                    let v = next;
                    next += 1;
                    v
                })
            })
            .collect();
        if let Ok(score) = silhouette_score(data, &labels) {
            prop_assert!((-1.0..=1.0).contains(&score), "silhouette {score}");
        }
    }

    #[test]
    fn ari_self_symmetry_and_relabeling(
        labels in proptest::collection::vec(0usize..4, 2..30),
        other in proptest::collection::vec(0usize..4, 2..30),
    ) {
        let n = labels.len().min(other.len());
        let a = &labels[..n];
        let b = &other[..n];
        let self_agreement = cluster_agreement(a, a).unwrap();
        prop_assert!((self_agreement.ari - 1.0).abs() < 1e-12);

        let ab = cluster_agreement(a, b).unwrap();
        let ba = cluster_agreement(b, a).unwrap();
        prop_assert!((ab.ari - ba.ari).abs() < 1e-12);
        prop_assert!((ab.cramers_v - ba.cramers_v).abs() < 1e-12);

        // Relabeling one side never changes agreement.
        let relabeled: Vec<usize> = a.iter().map(|&l| 3 - l).collect();
        let rel = cluster_agreement(&relabeled, b).unwrap();
        prop_assert!((rel.ari - ab.ari).abs() < 1e-12);
    }

    #[test]
    fn positive_column_scaling_leaves_assignments_unchanged(
        rows in proptest::collection::vec(proptest::collection::vec(-10.0f64..10.0, 3), 6..20),
        scale in 0.01f64..50.0,
        seed in 0u64..50,
    ) {
        let k = 2;
        let scaled: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| vec![r[0] * scale, r[1], r[2]])
            .collect();
        let a = standardize(&rows).unwrap();
        let b = standardize(&scaled).unwrap();
        for (ra, rb) in a.values.iter().zip(&b.values) {
            for (va, vb) in ra.iter().zip(rb) {
                prop_assert!((va - vb).abs() < 1e-9);
            }
        }
        let model_a = kmeans_fit(&a.values, k, seed).unwrap();
        let model_b = kmeans_fit(&b.values, k, seed).unwrap();
        prop_assert_eq!(model_a.assignments, model_b.assignments);
    }

    #[test]
    fn country_normalization_is_idempotent(raw in "\\PC{0,40}") {
        if let Ok(once) = normalize_country_name(&raw) {
            let twice = normalize_country_name(&once).unwrap();
            prop_assert_eq!(once, twice);
        }
    }

    #[test]
    fn feature_store_csv_round_trips(
        entries in proptest::collection::vec(
            ("[a-z][a-z ']{0,20}", -10.0f64..10.0, 0u8..128, 0.01f64..8.0, 20.0f64..400.0),
            1..12,
        ),
    ) {
        let mut seen = std::collections::BTreeSet::new();
        let vectors: Vec<FeatureVector> = entries
            .into_iter()
            .filter(|(c, ..)| seen.insert(c.clone()))
            .map(|(country, contour, mode, density, tempo)| FeatureVector {
                country,
                melodic_contour_mean: contour,
                pitch_mode: mode.min(127),
                beat_onset_density: density,
                tempo_bpm: tempo,
                velocity_median: 64.0,
                note_duration_mean: 1.0,
                rest_duration_median: 0.25,
                time_signature_changes: 2,
            })
            .collect();
        let store = FeatureStore::new(vectors);
        let parsed = FeatureStore::from_csv(&store.to_csv().unwrap()).unwrap();
        prop_assert_eq!(parsed, store);
    }
}
