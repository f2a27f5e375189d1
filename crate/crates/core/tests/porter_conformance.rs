//! Conformance of the Porter stemmer against the frozen reference fixture
//! (vocabulary and expected output generated by tools/gen_porter_fixture.py).

use kszsl::porter::porter_stem;

const VOCAB: &str = include_str!("data/porter_vocab.txt");
const EXPECTED: &str = include_str!("data/porter_expected.txt");

#[test]
fn matches_reference_output_exactly() {
    let words: Vec<&str> = VOCAB.lines().collect();
    let expected: Vec<&str> = EXPECTED.lines().collect();
    assert_eq!(words.len(), expected.len(), "fixture files out of sync");
    assert!(words.len() >= 1000, "fixture too small: {}", words.len());

    let mut mismatches = Vec::new();
    for (word, want) in words.iter().zip(&expected) {
        let got = porter_stem(word);
        if got != **want {
            mismatches.push(format!("{word}: got {got}, want {want}"));
        }
    }
    assert!(
        mismatches.is_empty(),
        "{} mismatches out of {}:\n{}",
        mismatches.len(),
        words.len(),
        mismatches[..mismatches.len().min(25)].join("\n")
    );
}

#[test]
fn spec_examples() {
    assert_eq!(porter_stem("ponies"), "poni");
    assert_eq!(porter_stem("caresses"), "caress");
    assert_eq!(porter_stem("sky"), "sky");
}
