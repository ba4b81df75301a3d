use std::path::PathBuf;

use keyprosody_core::corpus::{item_features, load_corpus, Unit};

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/squad_mini.json")
}

#[test]
fn loads_items_and_rejects_bad_offsets() {
    let c = load_corpus(&fixture(), None, Unit::Sentence).unwrap();
    let ids: Vec<&str> = c.items.iter().map(|i| i.item_id.as_str()).collect();
    assert_eq!(ids, ["q1", "q2", "c1", "t1"]);
    let rejected: Vec<&str> = c.rejected.iter().map(|r| r.item_id.as_str()).collect();
    assert_eq!(rejected, ["bad", "none"]);
}

#[test]
fn table_one_item_from_file() {
    let c = load_corpus(&fixture(), None, Unit::Sentence).unwrap();
    let q1 = &c.items[0];
    assert!(q1.answer_sentence.starts_with("Queen drew artistic influence"));
    assert!(q1.answer_sentence.ends_with("Aretha Franklin."));
    let f = item_features(q1);
    assert_eq!((f.key_len_words, f.key_len_chars, f.offset_from_end_words), (2, 12, 10));
    // first answer wins
    assert_eq!(c.items[1].answer_key, "London");
}

#[test]
fn non_ascii_offsets_are_characters() {
    let c = load_corpus(&fixture(), None, Unit::Sentence).unwrap();
    let c1 = c.items.iter().find(|i| i.item_id == "c1").unwrap();
    assert_eq!(c1.answer_sentence, "Its owner, J. R. Smith, served espresso.");
    assert_eq!(&c1.answer_sentence[c1.key_byte_range()], "J. R. Smith");
}

#[test]
fn paragraph_unit_and_article_limit() {
    let c = load_corpus(&fixture(), Some(1), Unit::Paragraph).unwrap();
    assert_eq!(c.items.len(), 2);
    assert_eq!(c.items[0].answer_sentence, c.items[0].paragraph);
    assert_eq!(&c.items[0].answer_sentence[c.items[0].key_byte_range()], "Jimi Hendrix");
}

#[test]
fn missing_file_is_an_error() {
    assert!(load_corpus(&PathBuf::from("/nonexistent/squad.json"), None, Unit::Sentence).is_err());
}
