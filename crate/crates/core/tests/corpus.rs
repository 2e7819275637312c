use std::collections::HashSet;

use num_rational::Ratio;
use patchbench::corpus::{
    apply_hunks, extract_hunks, extract_single_hunk, load_dataset, reserve_test, sample_fraction, sample_shots,
    sample_shots_excluding, split_dataset, split_ids, DatasetSchema, RepairInstance, FRACTION_STREAM, SHOTS_STREAM,
    SPLIT_STREAM,
};
use patchbench::LanguageId;
use proptest::prelude::*;

/// Straight transcription of the PCG reference `pcg64` (setseq, 128-bit
/// LCG, XSL-RR output), Lemire's bounded draw and a downward Fisher–Yates.
mod oracle {
    const MULT: u128 = (2549297995355413924u128 << 64) | 4865540595714422341u128;

    pub struct Pcg {
        state: u128,
        inc: u128,
    }

    impl Pcg {
        pub fn seeded(initstate: u128, initseq: u128) -> Pcg {
            let mut rng = Pcg { state: 0, inc: (initseq << 1) | 1 };
            rng.step();
            rng.state = rng.state.wrapping_add(initstate);
            rng.step();
            rng
        }

        fn step(&mut self) {
            self.state = self.state.wrapping_mul(MULT).wrapping_add(self.inc);
        }

        pub fn next(&mut self) -> u64 {
            self.step();
            let rot = (self.state >> 122) as u32;
            let xored = ((self.state >> 64) as u64) ^ (self.state as u64);
            xored.rotate_right(rot)
        }

        pub fn bounded(&mut self, n: u64) -> u64 {
            let mut x = self.next();
            let mut m = (x as u128) * (n as u128);
            let mut l = m as u64;
            if l < n {
                let t = (0u64.wrapping_sub(n)) % n;
                while l < t {
                    x = self.next();
                    m = (x as u128) * (n as u128);
                    l = m as u64;
                }
            }
            (m >> 64) as u64
        }
    }

    pub fn shuffled(ids: &[String], seed: u64, stream: u128) -> Vec<String> {
        let mut rng = Pcg::seeded(seed as u128, stream);
        let mut v = ids.to_vec();
        let mut i = v.len();
        while i > 1 {
            i -= 1;
            let j = rng.bounded(i as u64 + 1) as usize;
            v.swap(i, j);
        }
        v
    }
}

fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("inst-{i:04}")).collect()
}

#[test]
fn oracle_matches_published_pcg64_vector() {
    // first outputs of pcg64 seeded with (42, 54) in the PCG reference suite
    let mut rng = oracle::Pcg::seeded(42, 54);
    let got: Vec<u64> = (0..6).map(|_| rng.next()).collect();
    assert_eq!(
        got,
        [0x86b1da1d72062b68, 0x1304aa46c9853d39, 0xa3670e9e0dd50358, 0xf9090e529a7dae00, 0xc85b9fd837996f2c, 0x606121f8e3919196]
    );
}

#[test]
fn library_generator_matches_oracle() {
    use rand_core::RngCore;
    for (seed, stream) in [(0u64, 0u128), (1, 1), (2, 3), (u64::MAX, 4)] {
        let mut ours = patchbench::corpus::rng(seed, stream);
        let mut theirs = oracle::Pcg::seeded(seed as u128, stream);
        for _ in 0..100 {
            assert_eq!(ours.next_u64(), theirs.next());
        }
    }
}

#[test]
fn split_matches_oracle() {
    let all = ids(653);
    for seed in [1, 2, 3, 17] {
        let split = split_ids(&all, seed).unwrap();
        let order = oracle::shuffled(&all, seed, SPLIT_STREAM);
        assert_eq!(split.val, order[..65]);
        assert_eq!(split.test, order[65..130]);
        assert_eq!(split.train, order[130..]);
        assert_eq!((split.train.len(), split.val.len(), split.test.len()), (523, 65, 65));
        assert_eq!(split, split_ids(&all, seed).unwrap());
    }
}

#[test]
fn fraction_matches_oracle() {
    let all = ids(1000);
    let s1 = sample_fraction(&all, Ratio::new(1, 100), 1).unwrap();
    let s2 = sample_fraction(&all, Ratio::new(1, 100), 2).unwrap();
    assert_eq!(s1, oracle::shuffled(&all, 1, FRACTION_STREAM)[..10]);
    assert_eq!(s2, oracle::shuffled(&all, 2, FRACTION_STREAM)[..10]);
    assert_ne!(s1.iter().collect::<HashSet<_>>(), s2.iter().collect::<HashSet<_>>());
}

#[test]
fn shots_match_oracle() {
    let all = ids(2000);
    for seed in [1, 2, 3] {
        let got = sample_shots(&all, 32, seed).unwrap();
        assert_eq!(got, oracle::shuffled(&all, seed, SHOTS_STREAM)[..32]);
        assert_eq!(got, sample_shots(&all, 32, seed).unwrap());
    }
}

#[test]
fn shots_avoid_reserved_test_set() {
    let all = ids(300);
    let test: HashSet<String> = reserve_test(&all, 100, 5).unwrap().into_iter().collect();
    for k in [1, 8, 16, 32, 100, 200] {
        let shots = sample_shots_excluding(&all, &test, k, 5).unwrap();
        assert_eq!(shots.len(), k);
        assert!(shots.iter().all(|s| !test.contains(s)));
    }
    assert!(sample_shots_excluding(&all, &test, 201, 5).is_err());
}

#[test]
fn loads_many_bugsinpy_records() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bip.jsonl");
    let text: String = (0..932)
        .map(|i| format!("{{\"project\":\"p{}\",\"bug_id\":{i},\"buggy\":\"x = {i}\",\"fixed\":\"x = {}\"}}\n", i % 17, i + 1))
        .collect();
    std::fs::write(&path, text).unwrap();
    let got = load_dataset(&path, DatasetSchema::Bugsinpy).unwrap();
    assert_eq!(got.len(), 932);
    assert_eq!(got[5].id, "p5-5");
    assert!(got.iter().all(|i| i.language == LanguageId::Python));
    let split = split_dataset(&got, 1).unwrap();
    assert_eq!(split.source_count(), 932);
}

/// A 50-line file with three separated edits.
fn fifty_line_pair() -> (String, String) {
    let before: Vec<String> = (1..=50).map(|i| format!("    int v{i} = compute({i});")).collect();
    let mut after = before.clone();
    after[4] = "    int v5 = compute(5) + 1;".into();
    after.insert(20, "    check(v20);".into());
    after.remove(41);
    after[42] = "    int v45 = compute(45, true);".into();
    (before.join("\n") + "\n", after.join("\n") + "\n")
}

/// Re-applies instances by searching for each buggy segment after the
/// previous replacement.
fn reapply_by_search(before: &str, instances: &[RepairInstance]) -> String {
    let mut out = String::new();
    let mut rest = before;
    for inst in instances {
        let at = rest.find(&inst.buggy_code).expect("buggy segment present");
        out.push_str(&rest[..at]);
        out.push_str(&inst.fixed_code);
        rest = &rest[at + inst.buggy_code.len()..];
    }
    out.push_str(rest);
    out
}

#[test]
fn three_hunk_round_trip() {
    let (before, after) = fifty_line_pair();
    let diff = similar::TextDiff::from_lines(&before, &after)
        .unified_diff()
        .context_radius(3)
        .header("a/Foo.java", "b/Foo.java")
        .to_string();
    let instances = extract_single_hunk(&diff, &before, LanguageId::Java).unwrap();
    assert_eq!(instances.len(), 3);
    assert_eq!(reapply_by_search(&before, &instances), after);
    assert_eq!(apply_hunks(&before, &extract_hunks(&diff).unwrap()).unwrap(), after);
    for inst in &instances {
        assert!(inst.buggy_code.lines().count() <= 10, "hunk too wide: {}", inst.buggy_code);
    }
}

#[test]
fn round_trip_without_final_newline() {
    let before = "a\nb\nc";
    let after = "a\nb\nC";
    let diff = similar::TextDiff::from_lines(before, after).unified_diff().to_string();
    let instances = extract_single_hunk(&diff, before, LanguageId::C).unwrap();
    assert_eq!(reapply_by_search(before, &instances), after);
}

proptest! {
    #[test]
    fn split_is_a_partition(n in 10usize..400, seed in any::<u64>()) {
        let all = ids(n);
        let s = split_ids(&all, seed).unwrap();
        let (tr, va, te): (HashSet<_>, HashSet<_>, HashSet<_>) =
            (s.train.iter().collect(), s.val.iter().collect(), s.test.iter().collect());
        prop_assert!(tr.is_disjoint(&va) && tr.is_disjoint(&te) && va.is_disjoint(&te));
        let union: HashSet<_> = tr.union(&va).chain(te.iter()).copied().collect();
        prop_assert_eq!(union, all.iter().collect::<HashSet<_>>());
        prop_assert_eq!(s.val.len(), n / 10);
        prop_assert_eq!(s.test.len(), n / 10);
    }

    #[test]
    fn samples_are_distinct_subsets(n in 1usize..300, num in 1u64..=100, seed in any::<u64>()) {
        let all = ids(n);
        let frac = sample_fraction(&all, Ratio::new(num, 100), seed).unwrap();
        prop_assert_eq!(frac.len(), ((n as u64 * num / 100) as usize).max(1));
        prop_assert_eq!(frac.iter().collect::<HashSet<_>>().len(), frac.len());
        let k = (seed as usize % n) + 1;
        let shots = sample_shots(&all, k, seed).unwrap();
        prop_assert_eq!(shots.iter().collect::<HashSet<_>>().len(), k);
        prop_assert_eq!(&shots, &sample_shots(&all, k, seed).unwrap());
    }

    #[test]
    fn random_edits_round_trip(
        lines in prop::collection::vec("[a-e]{0,3}", 1..40),
        edits in prop::collection::vec((0usize..40, 0u8..3, "[x-z]{1,2}"), 1..6),
    ) {
        let before = lines.iter().map(|l| format!("{l}\n")).collect::<String>();
        let mut after_lines = lines.clone();
        for (pos, op, text) in edits {
            let pos = pos % (after_lines.len() + 1);
            match op {
                0 => after_lines.insert(pos, text),
                1 if pos < after_lines.len() && after_lines.len() > 1 => { after_lines.remove(pos); }
                _ if pos < after_lines.len() => after_lines[pos] = text,
                _ => after_lines.push(text),
            }
        }
        let after = after_lines.iter().map(|l| format!("{l}\n")).collect::<String>();
        prop_assume!(before != after);
        let diff = similar::TextDiff::from_lines(&before, &after).unified_diff().to_string();
        let hunks = extract_hunks(&diff).unwrap();
        prop_assert_eq!(apply_hunks(&before, &hunks).unwrap(), after);
    }
}
