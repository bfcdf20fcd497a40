//! Rule-based tokenizer used before subword segmentation.
//!
//! Splits on Unicode whitespace, then repeatedly detaches leading and
//! trailing punctuation characters from each piece as separate tokens.
//! Interior punctuation (hyphenated words, abbreviations with inner dots)
//! is left alone. The output never contains empty tokens and the function
//! is idempotent over `join(" ")`.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

/// Punctuation detached at token edges.
const PUNCT: &[char] = &['.', ',', '!', '?', ';', ':', '(', ')', '"', '\'', '«', '»', '-'];

pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for piece in text.split_whitespace() {
        split_piece(piece, &mut out);
    }
    out
}

fn split_piece(piece: &str, out: &mut Vec<String>) {
    let chars: Vec<char> = piece.chars().collect();
    let mut lo = 0;
    let mut hi = chars.len();
    let mut leading: Vec<char> = Vec::new();
    let mut trailing: Vec<char> = Vec::new();
    while hi - lo > 1 && PUNCT.contains(&chars[lo]) {
        leading.push(chars[lo]);
        lo += 1;
    }
    while hi - lo > 1 && PUNCT.contains(&chars[hi - 1]) {
        trailing.push(chars[hi - 1]);
        hi -= 1;
    }
    for c in leading {
        out.push(c.to_string());
    }
    out.push(chars[lo..hi].iter().collect());
    for c in trailing.into_iter().rev() {
        out.push(c.to_string());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn detaches_edge_punctuation() {
        assert_eq!(toks("Hello, world!"), vec!["Hello", ",", "world", "!"]);
        assert_eq!(toks("(oui)."), vec!["(", "oui", ")", "."]);
        assert_eq!(toks("«Bonjour»"), vec!["«", "Bonjour", "»"]);
    }

    #[test]
    fn keeps_interior_punctuation() {
        assert_eq!(toks("well-known"), vec!["well-known"]);
        assert_eq!(toks("z.B."), vec!["z.B", "."]);
    }

    #[test]
    fn all_punctuation_runs_split_to_single_chars() {
        assert_eq!(toks("..."), vec![".", ".", "."]);
        assert_eq!(toks("?!"), vec!["?", "!"]);
        assert_eq!(toks("-"), vec!["-"]);
    }

    #[test]
    fn never_emits_empty_tokens() {
        for s in ["", "   ", "\t\n", "a  b", " .a. "] {
            for t in toks(s) {
                assert!(!t.is_empty());
            }
        }
        assert!(toks("   ").is_empty());
    }

    #[test]
    fn idempotent_over_space_join() {
        for s in [
            "Hello, world!",
            "«Ceci n'est-pas», dit-il (encore)...",
            "a.b.c -- x?!",
            "...",
        ] {
            let once = toks(s);
            let twice = toks(&once.join(" "));
            assert_eq!(once, twice);
        }
    }
}
