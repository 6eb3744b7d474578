//! The offline attribute scorer built from the shipped lexicon files.

use recaudit_core::source::LexiconScorer;

/// `(attribute, file contents)` in attribute order.
pub const LEXICONS: [(&str, &str); 7] = [
    ("toxicity", include_str!("../data/lexicons/toxicity.txt")),
    ("spam", include_str!("../data/lexicons/spam.txt")),
    ("unsubstantial", include_str!("../data/lexicons/unsubstantial.txt")),
    ("threat", include_str!("../data/lexicons/threat.txt")),
    ("incoherent", include_str!("../data/lexicons/incoherent.txt")),
    ("profanity", include_str!("../data/lexicons/profanity.txt")),
    ("inflammatory", include_str!("../data/lexicons/inflammatory.txt")),
];

pub fn default_scorer() -> LexiconScorer {
    let mut scorer = LexiconScorer::new();
    for (name, text) in LEXICONS {
        scorer
            .load_lexicon(name, text)
            .expect("shipped lexicon parses");
    }
    scorer
}
