mod common;

use common::*;
use mksc::eigen::symmetric_eigen;
use mksc::graph::{build_affinity, kernel_adjacency, knn_sparsify, remove_self_loops, shift_scale, GraphConfig, Symmetrization, Weighting};
use mksc::kernels::{compute_kernel, compute_kernel_bank, default_bank, KernelId, KernelMatrix};
use mksc::pipeline::{labels_to_timeline, read_rttm, write_rttm, Segment, SpeakerTurn, Timeline, MERGE_EPS};
use mksc::scoring::{score_der, DerConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn embeddings() -> impl Strategy<Value = mksc::EmbeddingSet> {
    (2usize..=50, 1usize..=64, any::<u64>()).prop_map(|(n, d, seed)| random_embeddings(&mut ChaCha8Rng::seed_from_u64(seed), n, d))
}

fn turns(speakers: usize, max: usize) -> impl Strategy<Value = Vec<GridTurn>> {
    prop::collection::vec((0..speakers, 0i64..100, 1i64..20), 1..max)
        .prop_map(|v| v.into_iter().map(|(spk, s, len)| (spk, 4 * s, 4 * (s + len))).collect())
}

fn assert_close(a: f64, b: f64, what: &str) {
    assert!((a - b).abs() < 1e-6, "{what}: {a} vs {b}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn default_bank_is_psd(emb in embeddings()) {
        for km in compute_kernel_bank(&emb, &default_bank()).unwrap() {
            let values = symmetric_eigen(&km.values).unwrap().values;
            let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            prop_assert!(values[0] >= -1e-8 * scale, "{}: min {} max {}", km.id, values[0], scale);
        }
    }

    #[test]
    fn kernels_are_exactly_symmetric(emb in embeddings()) {
        for km in compute_kernel_bank(&emb, &mksc::kernels::parse_bank("all").unwrap()).unwrap() {
            let n = km.values.nrows();
            for i in 0..n {
                for j in 0..i {
                    prop_assert_eq!(km.values[[i, j]].to_bits(), km.values[[j, i]].to_bits());
                }
            }
        }
    }

    #[test]
    fn arccos1_is_homogeneous(emb in embeddings(), t in 0.1f64..10.0) {
        let id = KernelId::ArcCos { degree: 1 };
        let base = compute_kernel(&emb, id).unwrap().values;
        let scaled = mksc::EmbeddingSet::new(emb.vectors().to_owned() * t).unwrap();
        let k = compute_kernel(&scaled, id).unwrap().values;
        for (a, b) in k.iter().zip(base.iter()) {
            prop_assert!((a - t * t * b).abs() <= 1e-9 * (1.0 + (t * t * b).abs()));
        }
    }

    #[test]
    fn affinity_invariants(
        emb in embeddings(),
        c in 1usize..20,
        sparsify in any::<bool>(),
        entropy in any::<bool>(),
        max_sym in any::<bool>(),
    ) {
        let cfg = GraphConfig {
            neighbors: c,
            sparsify,
            weighting: if entropy { Weighting::Entropy } else { Weighting::Equal },
            symmetrization: if max_sym { Symmetrization::Max } else { Symmetrization::Average },
        };
        let a = match build_affinity(&emb, &default_bank(), &cfg) {
            // with two points the only off-diagonal entry is the global minimum
            Err(mksc::Error::DisconnectedGraph) if emb.len() == 2 => return Ok(()),
            r => r.unwrap(),
        };
        let m = a.matrix();
        prop_assert!(m.is_symmetric());
        prop_assert!(m.entries().all(|(i, j, v)| i != j && v > 0.0));
        prop_assert!((m.frobenius_norm() - 1.0).abs() <= 1e-12);
        if sparsify {
            // each kernel keeps at most 2c entries per row; the fused support
            // is their union
            let bank = default_bank();
            for km in compute_kernel_bank(&emb, &bank).unwrap() {
                prop_assert!(kernel_adjacency(&km, &cfg).unwrap().nnz() <= 2 * c * a.n());
            }
            prop_assert!(a.nnz() <= 2 * c * a.n() * bank.len());
        }
        let again = build_affinity(&emb, &default_bank(), &cfg).unwrap();
        prop_assert_eq!(m, again.matrix());
    }

    #[test]
    fn neighborhoods_survive_monotone_transforms(emb in embeddings(), c in 1usize..10, cube in any::<bool>()) {
        let km = compute_kernel(&emb, KernelId::Poly { offset: 1.0, degree: 2 }).unwrap();
        let scale = km.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let transformed = KernelMatrix {
            values: km.values.mapv(|x| if cube { x * x * x + x } else { (x / scale).exp() }),
            id: km.id,
        };
        let support = |k: &KernelMatrix| {
            let adj = remove_self_loops(shift_scale(k).unwrap());
            knn_sparsify(&adj, c, Symmetrization::Average).unwrap().entries().map(|(i, j, _)| (i, j)).collect::<Vec<_>>()
        };
        prop_assert_eq!(support(&km), support(&transformed));
    }

    #[test]
    fn timeline_covers_segments(
        raw in prop::collection::vec((0u32..2000, 1u32..3000, 0usize..4), 1..40),
    ) {
        let mut raw = raw;
        raw.sort_by_key(|r| r.0);
        let segments: Vec<Segment> = raw.iter().map(|&(s, len, _)| Segment::new("r", s as f64 / 1000.0 * 10.0, (s + len) as f64 / 1000.0 * 10.0).unwrap()).collect();
        let labels: Vec<usize> = raw.iter().map(|r| r.2).collect();
        let tl = labels_to_timeline(&segments, &labels).unwrap();

        let union = |mut v: Vec<(f64, f64)>| {
            v.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut out: Vec<(f64, f64)> = Vec::new();
            for (s, e) in v {
                match out.last_mut() {
                    Some(last) if s <= last.1 + 1e-9 => last.1 = last.1.max(e),
                    _ => out.push((s, e)),
                }
            }
            out
        };
        let seg_union = union(segments.iter().map(|s| (s.start, s.end)).collect());
        let turn_union = union(tl.turns().iter().map(|t| (t.start, t.end())).collect());
        prop_assert_eq!(seg_union.len(), turn_union.len());
        for (a, b) in seg_union.iter().zip(&turn_union) {
            prop_assert!((a.0 - b.0).abs() <= 1e-3 && (a.1 - b.1).abs() <= 1e-3);
        }
        for spk in tl.speakers() {
            let mine: Vec<&SpeakerTurn> = tl.turns().iter().filter(|t| t.speaker == spk).collect();
            for w in mine.windows(2) {
                prop_assert!(w[1].start > w[0].end() + MERGE_EPS);
            }
        }
    }

    #[test]
    fn rttm_round_trip(raw in prop::collection::vec((0usize..3, 0u32..100_000, 1u32..20_000, 0usize..5), 100)) {
        let tl = Timeline::new(raw.iter().map(|&(rec, start, dur, spk)| SpeakerTurn {
            recording_id: format!("rec{rec}"),
            start: start as f64 / 1000.0,
            duration: dur as f64 / 1000.0,
            speaker: format!("s{spk}"),
        }).collect());
        let mut bytes = Vec::new();
        write_rttm(&tl, &mut bytes).unwrap();
        let back = read_rttm(bytes.as_slice(), std::path::Path::new("mem")).unwrap();
        prop_assert_eq!(back.len(), tl.len());
        for (a, b) in tl.turns().iter().zip(back.turns()) {
            prop_assert_eq!(&a.recording_id, &b.recording_id);
            prop_assert_eq!(&a.speaker, &b.speaker);
            prop_assert!((a.start - b.start).abs() <= 1e-3 && (a.end() - b.end()).abs() <= 1e-3);
        }
    }

    #[test]
    fn der_matches_grid_oracle(r in turns(3, 6), h in turns(4, 8), half in 0i64..8, include_overlap in any::<bool>()) {
        let cfg = DerConfig { collar: 2.0 * half as f64 * UNIT, include_overlap };
        let (missed, fa, conf, total) = der_oracle(&r, &h, half, include_overlap);
        let got = score_der(&grid_timeline(&r, "r"), &grid_timeline(&h, "h"), &cfg);
        if total == 0.0 {
            prop_assert!(got.is_err());
        } else {
            let got = got.unwrap();
            assert_close(got.missed, missed, "missed");
            assert_close(got.false_alarm, fa, "false alarm");
            assert_close(got.confusion, conf, "confusion");
            assert_close(got.total_ref, total, "total");
        }
    }

    #[test]
    fn der_is_relabel_invariant(r in turns(3, 6), h in turns(4, 8), shift in 1usize..10) {
        let relabeled: Vec<GridTurn> = h.iter().map(|&(s, a, b)| ((s * 7 + shift) % 11 + 20, a, b)).collect();
        let cfg = DerConfig::default();
        let a = score_der(&grid_timeline(&r, "r"), &grid_timeline(&h, "h"), &cfg);
        let b = score_der(&grid_timeline(&r, "r"), &grid_timeline(&relabeled, "x"), &cfg);
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (a, b) => prop_assert!(a.is_err() && b.is_err()),
        }
    }

    #[test]
    fn der_of_reference_is_zero(r in turns(3, 8), collar in 0.0f64..1.0) {
        let tl = grid_timeline(&r, "r");
        let cfg = DerConfig { collar, include_overlap: true };
        if let Ok(b) = score_der(&tl, &tl.relabel(|s| format!("x{s}")), &cfg) {
            prop_assert_eq!(b.der, 0.0);
        }
    }

    #[test]
    fn removing_correct_speech_never_helps(r in turns(3, 6), extra in turns(3, 4), pick in any::<prop::sample::Index>()) {
        let removed = r[pick.index(r.len())];
        // extra hypothesis speech stays clear of the removed span
        let extra: Vec<GridTurn> = extra.into_iter().filter(|t| t.2 <= removed.1 || t.1 >= removed.2).map(|(s, a, b)| (s + 10, a, b)).collect();
        let mut hyp: Vec<GridTurn> = r.iter().copied().chain(extra.iter().copied()).collect();
        let cfg = DerConfig::default();
        let reference = grid_timeline(&r, "r");
        let Ok(before) = score_der(&reference, &grid_timeline(&hyp, "h"), &cfg) else { return Ok(()) };
        let at = hyp.iter().position(|t| *t == removed).unwrap();
        hyp.remove(at);
        // the same speaker may still cover part of the span through another turn
        let after = score_der(&reference, &grid_timeline(&hyp, "h"), &cfg).unwrap();
        prop_assert!(after.der >= before.der - 1e-12, "{} -> {}", before.der, after.der);
    }

    #[test]
    fn overlap_flag_is_neutral_without_overlap(raw in prop::collection::vec((0usize..3, 1i64..20), 1..10)) {
        let mut t = 0;
        let r: Vec<GridTurn> = raw.iter().map(|&(spk, len)| { let s = t; t += 4 * len; (spk, s, t) }).collect();
        let h: Vec<GridTurn> = r.iter().map(|&(spk, s, e)| ((spk + 1) % 3, s, e - 2)).collect();
        let reference = grid_timeline(&r, "r");
        let hyp = grid_timeline(&h, "h");
        let a = score_der(&reference, &hyp, &DerConfig { collar: 0.25, include_overlap: true });
        let b = score_der(&reference, &hyp, &DerConfig { collar: 0.25, include_overlap: false });
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (a, b) => prop_assert!(a.is_err() && b.is_err()),
        }
    }
}
