use keyprosody_core::scoring::{
    correctness, correctness_with, gestalt_similarity, metaphone_encode, CorrectnessOptions,
};

mod oracles;
use oracles::{CODES, SAME_CODE_PAIRS};

#[test]
fn codes_match_reference() {
    let mut bad = Vec::new();
    for (word, primary, alternate) in CODES {
        let want_alt = if alternate.is_empty() { primary } else { alternate };
        let got = metaphone_encode(word);
        if got.primary != *primary || got.alternate != *want_alt {
            bad.push(format!(
                "{word}: got ({}, {}), want ({primary}, {want_alt})",
                got.primary, got.alternate
            ));
        }
    }
    assert!(bad.is_empty(), "{}", bad.join("\n"));
}

#[test]
fn misspellings_with_equal_codes_score_one() {
    assert!(SAME_CODE_PAIRS.len() >= 20);
    for (gold, typed) in SAME_CODE_PAIRS {
        assert_eq!(correctness(typed, gold).value(), 1.0, "{typed} vs {gold}");
    }
}

#[test]
fn different_codes_score_below_one() {
    // frozen from difflib.SequenceMatcher on the primary codes
    assert!((correctness("Areta", "Aretha").value() - 2.0 / 3.0).abs() < 1e-12);
    assert!((correctness("Schmidt", "Smith").value() - 1.0 / 3.0).abs() < 1e-12);
    assert!((correctness("Sean", "Shawn").value() - 0.5).abs() < 1e-12);
    assert!(correctness("Aretha Franklin", "Jimi Hendrix").value() < 0.5);
}

#[test]
fn alternates_rescue_split_encodings() {
    let opts = CorrectnessOptions {
        accept_alternates: true,
    };
    assert_eq!(correctness_with("Areta", "Aretha", opts).value(), 1.0);
    assert_eq!(correctness_with("Micheal", "Michael", opts).value(), 1.0);
    assert!(correctness("Micheal", "Michael").value() < 1.0);
}

#[test]
fn case_and_punctuation_are_ignored() {
    for typed in [
        "jimi hendrix",
        "JIMI HENDRIX",
        "Jimi Hendrix.",
        "  jimi, hendrix!  ",
        "\"Jimi Hendrix\"",
    ] {
        assert_eq!(correctness(typed, "Jimi Hendrix").value(), 1.0, "{typed}");
    }
}

#[test]
fn gestalt_values_match_difflib() {
    // difflib.SequenceMatcher(None, a, b).ratio()
    let cases = [
        ("abcd", "bcde", 0.75),
        ("XMT", "SM0", 1.0 / 3.0),
        ("ALSP0", "ALSPT", 0.8),
        ("HNTRKS", "HNRKS", 10.0 / 11.0),
    ];
    for (a, b, want) in cases {
        assert!((gestalt_similarity(a, b) - want).abs() < 1e-12, "{a} {b}");
    }
    assert_eq!(gestalt_similarity("abcd", "bcde"), 0.75);
}
