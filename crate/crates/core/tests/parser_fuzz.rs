use lof_core::llm::{format_assessment, parse_response, AssessmentStatus};
use lof_core::LofRank;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PIECES: [&str; 16] = [
    "LoF", "Rating", "**", ":", " ", "\n", "-", "lof rating", "Coverage", "%", "6", "-1", "3", "ranked", "é", "\u{0}",
];

fn random_text(rng: &mut ChaCha8Rng) -> String {
    let n = rng.random_range(0..24);
    let mut s = String::new();
    for _ in 0..n {
        if rng.random_bool(0.3) {
            s.push(char::from_u32(rng.random_range(0..0x2FFF)).unwrap_or('?'));
        } else {
            s.push_str(PIECES[rng.random_range(0..PIECES.len())]);
        }
    }
    s
}

#[test]
fn ten_thousand_random_responses() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xF022);
    for _ in 0..10_000 {
        let text = random_text(&mut rng);
        let p = parse_response(&text);
        assert_eq!(p.raw_text, text);
        match p.status {
            AssessmentStatus::Classified(r) => assert!(r.value() <= 5),
            AssessmentStatus::Unclassified => {}
        }
    }
}

#[test]
fn formatted_assessment_round_trips() {
    for rank in LofRank::all() {
        let text = format_assessment(rank, 12.5, "barnacles", "moderate");
        let p = parse_response(&text);
        assert_eq!(p.rank(), Some(rank));
        assert_eq!(p.coverage_pct, Some(12.5));
    }
}

#[test]
fn out_of_range_is_unclassified() {
    for text in ["**LoF Rating:** 6", "LoF Rating: 9 - extreme", "LoF -1"] {
        assert_eq!(parse_response(text).rank(), None, "{text}");
    }
}
