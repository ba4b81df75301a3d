use keyprosody_core::corpus::QaItem;
use keyprosody_core::prosody::{render_ssml, strip_tags, EngineProfile, ModificationKind, ProsodyError};
use proptest::prelude::*;

const TABLE_ONE: &str = "Queen drew artistic influence from British rock acts of the 1960s, in addition to American guitarist Jimi Hendrix, with Mercury also inspired by the gospel singer Aretha Franklin.";

fn item(sentence: &str, key: &str) -> QaItem {
    let b = sentence.find(key).unwrap();
    let s = sentence[..b].chars().count();
    QaItem {
        item_id: "q1".into(),
        article_title: "Queen_(band)".into(),
        question: "Which guitarist inspired Queen?".into(),
        paragraph: sentence.into(),
        answer_sentence: sentence.into(),
        answer_key: key.into(),
        key_char_span: (s, s + key.chars().count()),
    }
}

/// Element names under `<speak>`, with the text each wraps.
fn elements(markup: &str) -> Vec<(String, Vec<(String, String)>, String)> {
    let doc = roxmltree::Document::parse(markup).expect("well-formed");
    let root = doc.root_element();
    assert_eq!(root.tag_name().name(), "speak");
    root.descendants()
        .filter(|n| n.is_element() && *n != root)
        .map(|n| {
            let attrs = n
                .attributes()
                .map(|a| (a.name().to_string(), a.value().to_string()))
                .collect();
            let text: String = n
                .descendants()
                .filter(|d| d.is_text())
                .map(|d| d.text().unwrap())
                .collect();
            (n.tag_name().name().to_string(), attrs, text)
        })
        .collect()
}

#[test]
fn golden_rate_fragment() {
    let doc = render_ssml(
        &item(TABLE_ONE, "Jimi Hendrix"),
        ModificationKind::Rate,
        &EngineProfile::google_wavenet_f(),
    )
    .unwrap();
    assert!(doc.markup.contains(r#"<prosody rate="slow">Jimi Hendrix</prosody>"#));
    assert_eq!(
        doc.markup,
        format!(
            "<speak>{}<prosody rate=\"slow\">Jimi Hendrix</prosody>{}</speak>",
            &TABLE_ONE[..TABLE_ONE.find("Jimi").unwrap()],
            &TABLE_ONE[TABLE_ONE.find(", with").unwrap()..]
        )
    );
}

#[test]
fn every_kind_parses_with_one_site() {
    for profile in EngineProfile::builtin() {
        for kind in ModificationKind::MODIFIED {
            let got = render_ssml(&item(TABLE_ONE, "Jimi Hendrix"), kind, &profile);
            if !profile.supports(kind) {
                assert_eq!(
                    got.unwrap_err(),
                    ProsodyError::UnsupportedModification {
                        profile: profile.name.clone(),
                        kind
                    }
                );
                continue;
            }
            let doc = got.unwrap();
            let els = elements(&doc.markup);
            match kind {
                ModificationKind::Pause => {
                    assert_eq!(els.len(), 2);
                    for (name, attrs, _) in &els {
                        assert_eq!(name, "break");
                        assert_eq!(attrs, &[("strength".to_string(), profile.pause_strength.clone())]);
                    }
                    assert!(doc.markup.contains(&format!(
                        "<break strength=\"{0}\"/>Jimi Hendrix<break strength=\"{0}\"/>",
                        profile.pause_strength
                    )));
                }
                _ => {
                    assert_eq!(els.len(), 1, "{kind}");
                    let (name, attrs, text) = &els[0];
                    assert_eq!(text, "Jimi Hendrix");
                    let (want_name, want_attr, want_val) = match kind {
                        ModificationKind::Rate => ("prosody", "rate", profile.rate_value.clone()),
                        ModificationKind::Pitch => ("prosody", "pitch", profile.pitch_value.clone()),
                        _ => ("emphasis", "level", profile.emphasis_level.clone().unwrap()),
                    };
                    assert_eq!(name, want_name);
                    assert_eq!(attrs, &[(want_attr.to_string(), want_val)]);
                }
            }
        }
    }
}

#[test]
fn baseline_has_no_elements() {
    let doc = render_ssml(
        &item(TABLE_ONE, "Jimi Hendrix"),
        ModificationKind::Baseline,
        &EngineProfile::ibm_lisa(),
    )
    .unwrap();
    assert!(elements(&doc.markup).is_empty());
    assert_eq!(doc.markup, format!("<speak>{TABLE_ONE}</speak>"));
}

#[test]
fn special_characters_stay_well_formed() {
    let s = "AT&T said <yes> to \"R&D\" at Ben & Jerry's.";
    let doc = render_ssml(
        &item(s, "R&D"),
        ModificationKind::Pitch,
        &EngineProfile::google_wavenet_f(),
    )
    .unwrap();
    let els = elements(&doc.markup);
    assert_eq!(els[0].2, "R&D");
    let parsed = roxmltree::Document::parse(&doc.markup).unwrap();
    let text: String = parsed
        .descendants()
        .filter(|n| n.is_text())
        .map(|n| n.text().unwrap())
        .collect();
    assert_eq!(text, s);
}

proptest! {
    #[test]
    fn random_sentences_parse_and_keep_text(
        pre in "[A-Za-z&<>\"' ,.]{0,30}",
        key in "[A-Za-z&<>0-9]{1,12}",
        post in "[A-Za-z&<>\"' ,.]{0,30}",
        k in 0usize..5,
    ) {
        let sentence = format!("{pre}{key}{post}");
        let s = pre.chars().count();
        let it = QaItem {
            key_char_span: (s, s + key.chars().count()),
            answer_key: key.clone(),
            ..item(&sentence, &sentence)
        };
        let kind = [ModificationKind::Baseline, ModificationKind::Pause, ModificationKind::Rate, ModificationKind::Pitch, ModificationKind::Emphasis][k];
        let doc = render_ssml(&it, kind, &EngineProfile::google_wavenet_f()).unwrap();
        let parsed = roxmltree::Document::parse(&doc.markup);
        prop_assert!(parsed.is_ok(), "{}", doc.markup);
        let parsed = parsed.unwrap();
        let text: String = parsed.descendants().filter(|n| n.is_text()).map(|n| n.text().unwrap()).collect();
        prop_assert_eq!(text, sentence);
        let base = render_ssml(&it, ModificationKind::Baseline, &EngineProfile::google_wavenet_f()).unwrap();
        prop_assert_eq!(strip_tags(&doc.markup), strip_tags(&base.markup));
    }
}
