//! Correctness of a typed answer key: Double Metaphone codes compared with
//! Ratcliff/Obershelp gestalt similarity.

use serde::{Deserialize, Serialize};

use crate::collection::{Judgment, ScoredJudgment};

/// Primary and alternate Double Metaphone codes. `alternate` equals
/// `primary` when the word has no alternate pronunciation.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PhoneticCode {
    pub primary: String,
    pub alternate: String,
}

impl PhoneticCode {
    pub fn is_empty(&self) -> bool {
        self.primary.is_empty()
    }
}

/// Correctness value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CorrectnessScore(f64);

impl CorrectnessScore {
    pub fn new(v: f64) -> Self {
        debug_assert!((0.0..=1.0).contains(&v));
        CorrectnessScore(v.clamp(0.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CorrectnessOptions {
    /// Also try alternate codes and keep the best of the four pairings.
    #[serde(default)]
    pub accept_alternates: bool,
}

/// Uppercase ASCII letters of `word`. Latin-1 accented letters fold to their
/// base letter; C-cedilla is kept as a marker byte and N-tilde folds to N.
fn fold_letters(word: &str) -> Vec<u8> {
    let mut out = Vec::with_capacity(word.len());
    for c in word.chars() {
        let u = match c {
            'a'..='z' | 'A'..='Z' => c.to_ascii_uppercase() as u8,
            'À'..='Å' | 'à'..='å' => b'A',
            'È'..='Ë' | 'è'..='ë' => b'E',
            'Ì'..='Ï' | 'ì'..='ï' => b'I',
            'Ò'..='Ö' | 'ò'..='ö' | 'Ø' | 'ø' => b'O',
            'Ù'..='Ü' | 'ù'..='ü' => b'U',
            'Ý' | 'ý' | 'ÿ' => b'Y',
            'Ñ' | 'ñ' => b'N',
            'Ç' | 'ç' => CEDILLA,
            _ => continue,
        };
        out.push(u);
    }
    out
}

const CEDILLA: u8 = b'%';

struct Word {
    chars: Vec<u8>,
    slavo_germanic: bool,
}

impl Word {
    fn new(chars: Vec<u8>) -> Self {
        let has = |pat: &[u8]| chars.windows(pat.len()).any(|w| w == pat);
        let slavo_germanic = has(b"W") || has(b"K") || has(b"CZ") || has(b"WITZ");
        Word { chars, slavo_germanic }
    }

    fn last(&self) -> isize {
        self.chars.len() as isize - 1
    }

    fn at(&self, i: isize) -> u8 {
        if i < 0 {
            return 0;
        }
        self.chars.get(i as usize).copied().unwrap_or(0)
    }

    fn is_vowel(&self, i: isize) -> bool {
        matches!(self.at(i), b'A' | b'E' | b'I' | b'O' | b'U' | b'Y')
    }

    /// True if the `len` characters starting at `start` equal any option.
    fn string_at(&self, start: isize, len: usize, options: &[&str]) -> bool {
        if start < 0 {
            return false;
        }
        let s = start as usize;
        match self.chars.get(s..s + len) {
            Some(slice) => options.iter().any(|o| o.as_bytes() == slice),
            None => false,
        }
    }

    fn one_of(&self, i: isize, options: &[u8]) -> bool {
        options.contains(&self.at(i))
    }
}

#[derive(Default)]
struct Codes {
    primary: String,
    alternate: String,
}

impl Codes {
    fn add(&mut self, code: &str) {
        self.primary.push_str(code);
        self.alternate.push_str(code);
    }

    fn add2(&mut self, primary: &str, alternate: &str) {
        self.primary.push_str(primary);
        self.alternate.push_str(alternate);
    }
}

/// Double Metaphone codes of a single word, without length truncation.
///
/// Non-letters are ignored and case does not matter. A word with no letters
/// encodes to the empty code.
pub fn metaphone_encode(word: &str) -> PhoneticCode {
    let w = Word::new(fold_letters(word));
    if w.chars.is_empty() {
        return PhoneticCode::default();
    }
    let last = w.last();
    let mut out = Codes::default();
    let mut cur: isize = 0;

    if w.string_at(0, 2, &["GN", "KN", "PN", "WR", "PS"]) {
        cur += 1;
    }
    // initial 'X' is pronounced 'Z', e.g. 'Xavier'
    if w.at(0) == b'X' {
        out.add("S");
        cur += 1;
    }

    while cur <= last {
        let c = w.at(cur);
        match c {
            b'A' | b'E' | b'I' | b'O' | b'U' | b'Y' => {
                if cur == 0 {
                    out.add("A");
                }
                cur += 1;
            }
            b'B' => {
                // "-mb", e.g. "dumb", is handled under 'M'
                out.add("P");
                cur += if w.at(cur + 1) == b'B' { 2 } else { 1 };
            }
            CEDILLA => {
                out.add("S");
                cur += 1;
            }
            b'C' => cur = encode_c(&w, cur, &mut out),
            b'D' => {
                if w.string_at(cur, 2, &["DG"]) {
                    if w.one_of(cur + 2, b"IEY") {
                        // 'edge'
                        out.add("J");
                        cur += 3;
                    } else {
                        // 'edgar'
                        out.add("TK");
                        cur += 2;
                    }
                } else if w.string_at(cur, 2, &["DT", "DD"]) {
                    out.add("T");
                    cur += 2;
                } else {
                    out.add("T");
                    cur += 1;
                }
            }
            b'F' => {
                out.add("F");
                cur += if w.at(cur + 1) == b'F' { 2 } else { 1 };
            }
            b'G' => cur = encode_g(&w, cur, &mut out),
            b'H' => {
                // keep only if first and before a vowel, or between vowels
                if (cur == 0 || w.is_vowel(cur - 1)) && w.is_vowel(cur + 1) {
                    out.add("H");
                    cur += 2;
                } else {
                    cur += 1;
                }
            }
            b'J' => cur = encode_j(&w, cur, &mut out),
            b'K' => {
                out.add("K");
                cur += if w.at(cur + 1) == b'K' { 2 } else { 1 };
            }
            b'L' => {
                if w.at(cur + 1) == b'L' {
                    // spanish, e.g. 'cabrillo', 'gallegos'
                    if (cur == last - 2 && w.string_at(cur - 1, 4, &["ILLO", "ILLA", "ALLE"]))
                        || ((w.string_at(last - 1, 2, &["AS", "OS"]) || w.one_of(last, b"AO"))
                            && w.string_at(cur - 1, 4, &["ALLE"]))
                    {
                        out.add2("L", "");
                    } else {
                        out.add("L");
                    }
                    cur += 2;
                } else {
                    out.add("L");
                    cur += 1;
                }
            }
            b'M' => {
                out.add("M");
                if (w.string_at(cur - 1, 3, &["UMB"]) && (cur + 1 == last || w.string_at(cur + 2, 2, &["ER"])))
                    || w.at(cur + 1) == b'M'
                {
                    cur += 2;
                } else {
                    cur += 1;
                }
            }
            b'N' => {
                out.add("N");
                cur += if w.at(cur + 1) == b'N' { 2 } else { 1 };
            }
            b'P' => {
                if w.at(cur + 1) == b'H' {
                    out.add("F");
                    cur += 2;
                } else {
                    // 'campbell', 'raspberry'
                    out.add("P");
                    cur += if w.one_of(cur + 1, b"PB") { 2 } else { 1 };
                }
            }
            b'Q' => {
                out.add("K");
                cur += if w.at(cur + 1) == b'Q' { 2 } else { 1 };
            }
            b'R' => {
                // french, e.g. 'rogier', but not 'hochmeier'
                if cur == last
                    && !w.slavo_germanic
                    && w.string_at(cur - 2, 2, &["IE"])
                    && !w.string_at(cur - 4, 2, &["ME", "MA"])
                {
                    out.add2("", "R");
                } else {
                    out.add("R");
                }
                cur += if w.at(cur + 1) == b'R' { 2 } else { 1 };
            }
            b'S' => cur = encode_s(&w, cur, &mut out),
            b'T' => {
                if w.string_at(cur, 4, &["TION"]) || w.string_at(cur, 3, &["TIA", "TCH"]) {
                    out.add("X");
                    cur += 3;
                } else if w.string_at(cur, 2, &["TH"]) || w.string_at(cur, 3, &["TTH"]) {
                    // 'thomas', 'thames' or germanic
                    if w.string_at(cur + 2, 2, &["OM", "AM"])
                        || w.string_at(0, 4, &["VAN ", "VON "])
                        || w.string_at(0, 3, &["SCH"])
                    {
                        out.add("T");
                    } else {
                        out.add2("0", "T");
                    }
                    cur += 2;
                } else {
                    out.add("T");
                    cur += if w.one_of(cur + 1, b"TD") { 2 } else { 1 };
                }
            }
            b'V' => {
                out.add("F");
                cur += if w.at(cur + 1) == b'V' { 2 } else { 1 };
            }
            b'W' => cur = encode_w(&w, cur, &mut out),
            b'X' => {
                // french, e.g. 'breaux'
                if !(cur == last
                    && (w.string_at(cur - 3, 3, &["IAU", "EAU"]) || w.string_at(cur - 2, 2, &["AU", "OU"])))
                {
                    out.add("KS");
                }
                cur += if w.one_of(cur + 1, b"CX") { 2 } else { 1 };
            }
            b'Z' => {
                if w.at(cur + 1) == b'H' {
                    // chinese pinyin, e.g. 'zhao'
                    out.add("J");
                    cur += 2;
                } else {
                    if w.string_at(cur + 1, 2, &["ZO", "ZI", "ZA"])
                        || (w.slavo_germanic && cur > 0 && w.at(cur - 1) != b'T')
                    {
                        out.add2("S", "TS");
                    } else {
                        out.add("S");
                    }
                    cur += if w.at(cur + 1) == b'Z' { 2 } else { 1 };
                }
            }
            _ => cur += 1,
        }
    }

    let Codes { primary, alternate } = out;
    PhoneticCode { primary, alternate }
}

fn encode_c(w: &Word, cur: isize, out: &mut Codes) -> isize {
    // various germanic
    if cur > 1
        && !w.is_vowel(cur - 2)
        && w.string_at(cur - 1, 3, &["ACH"])
        && w.at(cur + 2) != b'I'
        && (w.at(cur + 2) != b'E' || w.string_at(cur - 2, 6, &["BACHER", "MACHER"]))
    {
        out.add("K");
        return cur + 2;
    }
    if cur == 0 && w.string_at(cur, 6, &["CAESAR"]) {
        out.add("S");
        return cur + 2;
    }
    // italian 'chianti'
    if w.string_at(cur, 4, &["CHIA"]) {
        out.add("K");
        return cur + 2;
    }
    if w.string_at(cur, 2, &["CH"]) {
        // 'michael'
        if cur > 0 && w.string_at(cur, 4, &["CHAE"]) {
            out.add2("K", "X");
            return cur + 2;
        }
        // greek roots, e.g. 'chemistry', 'chorus'
        if cur == 0
            && (w.string_at(cur + 1, 5, &["HARAC", "HARIS"]) || w.string_at(cur + 1, 3, &["HOR", "HYM", "HIA", "HEM"]))
            && !w.string_at(0, 5, &["CHORE"])
        {
            out.add("K");
            return cur + 2;
        }
        if w.string_at(0, 4, &["VAN ", "VON "])
            || w.string_at(0, 3, &["SCH"])
            || w.string_at(cur - 2, 6, &["ORCHES", "ARCHIT", "ORCHID"])
            || w.one_of(cur + 2, b"TS")
            || ((w.one_of(cur - 1, b"AOUE") || cur == 0) && w.one_of(cur + 2, b"LRNMBHFVW "))
        {
            out.add("K");
        } else if cur > 0 {
            if w.string_at(0, 2, &["MC"]) {
                out.add("K");
            } else {
                out.add2("X", "K");
            }
        } else {
            out.add("X");
        }
        return cur + 2;
    }
    // 'czerny'
    if w.string_at(cur, 2, &["CZ"]) && !w.string_at(cur - 2, 4, &["WICZ"]) {
        out.add2("S", "X");
        return cur + 2;
    }
    // 'focaccia'
    if w.string_at(cur + 1, 3, &["CIA"]) {
        out.add("X");
        return cur + 3;
    }
    // double 'C', but not 'McClellan'
    if w.string_at(cur, 2, &["CC"]) && !(cur == 1 && w.at(0) == b'M') {
        // 'bellocchio' but not 'bacchus'
        if w.one_of(cur + 2, b"IEH") && !w.string_at(cur + 2, 2, &["HU"]) {
            // 'accident', 'accede', 'succeed'
            if (cur == 1 && w.at(cur - 1) == b'A') || w.string_at(cur - 1, 5, &["UCCEE", "UCCES"]) {
                out.add("KS");
            } else {
                // 'bacci', 'bertucci'
                out.add("X");
            }
            return cur + 3;
        }
        out.add("K");
        return cur + 2;
    }
    if w.string_at(cur, 2, &["CK", "CG", "CQ"]) {
        out.add("K");
        return cur + 2;
    }
    if w.string_at(cur, 2, &["CI", "CE", "CY"]) {
        if w.string_at(cur, 3, &["CIO", "CIE", "CIA"]) {
            out.add2("S", "X");
        } else {
            out.add("S");
        }
        return cur + 2;
    }
    out.add("K");
    // 'mac caffrey', 'mac gregor'
    if w.string_at(cur + 1, 2, &[" C", " Q", " G"]) {
        cur + 3
    } else if w.one_of(cur + 1, b"CKQ") && !w.string_at(cur + 1, 2, &["CE", "CI"]) {
        cur + 2
    } else {
        cur + 1
    }
}

fn encode_g(w: &Word, cur: isize, out: &mut Codes) -> isize {
    if w.at(cur + 1) == b'H' {
        if cur > 0 && !w.is_vowel(cur - 1) {
            out.add("K");
            return cur + 2;
        }
        // 'ghislane', 'ghiradelli'
        if cur == 0 {
            out.add(if w.at(cur + 2) == b'I' { "J" } else { "K" });
            return cur + 2;
        }
        // Parker's rule, e.g. 'hugh'
        if (cur > 1 && w.one_of(cur - 2, b"BHD"))
            || (cur > 2 && w.one_of(cur - 3, b"BHD"))
            || (cur > 3 && w.one_of(cur - 4, b"BH"))
        {
            return cur + 2;
        }
        // 'laugh', 'mclaughlin', 'cough', 'rough', 'tough'
        if cur > 2 && w.at(cur - 1) == b'U' && w.one_of(cur - 3, b"CGLRT") {
            out.add("F");
        } else if cur > 0 && w.at(cur - 1) != b'I' {
            out.add("K");
        }
        return cur + 2;
    }
    if w.at(cur + 1) == b'N' {
        if cur == 1 && w.is_vowel(0) && !w.slavo_germanic {
            out.add2("KN", "N");
        } else if !w.string_at(cur + 2, 2, &["EY"]) && w.at(cur + 1) != b'Y' && !w.slavo_germanic {
            // not e.g. 'cagney'
            out.add2("N", "KN");
        } else {
            out.add("KN");
        }
        return cur + 2;
    }
    // 'tagliaro'
    if w.string_at(cur + 1, 2, &["LI"]) && !w.slavo_germanic {
        out.add2("KL", "L");
        return cur + 2;
    }
    // -ges-, -gep-, -gel-, -gie- at the beginning
    if cur == 0
        && (w.at(cur + 1) == b'Y'
            || w.string_at(
                cur + 1,
                2,
                &["ES", "EP", "EB", "EL", "EY", "IB", "IL", "IN", "IE", "EI", "ER"],
            ))
    {
        out.add2("K", "J");
        return cur + 2;
    }
    // -ger-, -gy-
    if (w.string_at(cur + 1, 2, &["ER"]) || w.at(cur + 1) == b'Y')
        && !w.string_at(0, 6, &["DANGER", "RANGER", "MANGER"])
        && !w.one_of(cur - 1, b"EI")
        && !w.string_at(cur - 1, 3, &["RGY", "OGY"])
    {
        out.add2("K", "J");
        return cur + 2;
    }
    // italian, e.g. 'biaggi'
    if w.one_of(cur + 1, b"EIY") || w.string_at(cur - 1, 4, &["AGGI", "OGGI"]) {
        if w.string_at(0, 4, &["VAN ", "VON "]) || w.string_at(0, 3, &["SCH"]) || w.string_at(cur + 1, 2, &["ET"]) {
            // obvious germanic
            out.add("K");
        } else if w.string_at(cur + 1, 4, &["IER "]) {
            out.add("J");
        } else {
            out.add2("J", "K");
        }
        return cur + 2;
    }
    out.add("K");
    if w.at(cur + 1) == b'G' {
        cur + 2
    } else {
        cur + 1
    }
}

fn encode_j(w: &Word, cur: isize, out: &mut Codes) -> isize {
    // obvious spanish, 'jose', 'san jacinto'
    if w.string_at(cur, 4, &["JOSE"]) || w.string_at(0, 4, &["SAN "]) {
        if (cur == 0 && w.at(cur + 4) == b' ') || w.string_at(0, 4, &["SAN "]) {
            out.add("H");
        } else {
            out.add2("J", "H");
        }
        return cur + 1;
    }
    if cur == 0 && !w.string_at(cur, 4, &["JOSE"]) {
        // 'Yankelovich' / 'Jankelowicz'
        out.add2("J", "A");
    } else if w.is_vowel(cur - 1) && !w.slavo_germanic && w.one_of(cur + 1, b"AO") {
        // spanish pronunciation of e.g. 'bajador'
        out.add2("J", "H");
    } else if cur == w.last() {
        // the reference adds a blank alternate here; blanks are not code symbols
        out.add2("J", "");
    } else if !w.one_of(cur + 1, b"LTKSNMBZ") && !w.one_of(cur - 1, b"SKL") {
        out.add("J");
    }
    if w.at(cur + 1) == b'J' {
        cur + 2
    } else {
        cur + 1
    }
}

fn encode_s(w: &Word, cur: isize, out: &mut Codes) -> isize {
    // 'island', 'isle', 'carlisle', 'carlysle'
    if w.string_at(cur - 1, 3, &["ISL", "YSL"]) {
        return cur + 1;
    }
    // 'sugar-'
    if cur == 0 && w.string_at(cur, 5, &["SUGAR"]) {
        out.add2("X", "S");
        return cur + 1;
    }
    if w.string_at(cur, 2, &["SH"]) {
        // germanic
        if w.string_at(cur + 1, 4, &["HEIM", "HOEK", "HOLM", "HOLZ"]) {
            out.add("S");
        } else {
            out.add("X");
        }
        return cur + 2;
    }
    // italian and armenian
    if w.string_at(cur, 3, &["SIO", "SIA"]) || w.string_at(cur, 4, &["SIAN"]) {
        if w.slavo_germanic {
            out.add("S");
        } else {
            out.add2("S", "X");
        }
        return cur + 3;
    }
    // german and anglicisations, e.g. 'smith' matches 'schmidt', 'snider'
    // matches 'schneider'; -sz- in slavic languages
    if (cur == 0 && w.one_of(cur + 1, b"MNLW")) || w.at(cur + 1) == b'Z' {
        out.add2("S", "X");
        return if w.at(cur + 1) == b'Z' { cur + 2 } else { cur + 1 };
    }
    if w.string_at(cur, 2, &["SC"]) {
        // Schlesinger's rule
        if w.at(cur + 2) == b'H' {
            // dutch origin, e.g. 'school', 'schooner'
            if w.string_at(cur + 3, 2, &["OO", "ER", "EN", "UY", "ED", "EM"]) {
                // 'schermerhorn', 'schenker'
                if w.string_at(cur + 3, 2, &["ER", "EN"]) {
                    out.add2("X", "SK");
                } else {
                    out.add("SK");
                }
            } else if cur == 0 && !w.is_vowel(3) && w.at(3) != b'W' {
                out.add2("X", "S");
            } else {
                out.add("X");
            }
            return cur + 3;
        }
        if w.one_of(cur + 2, b"IEY") {
            out.add("S");
        } else {
            out.add("SK");
        }
        return cur + 3;
    }
    // french, e.g. 'resnais', 'artois'
    if cur == w.last() && w.string_at(cur - 2, 2, &["AI", "OI"]) {
        out.add2("", "S");
    } else {
        out.add("S");
    }
    if w.one_of(cur + 1, b"SZ") {
        cur + 2
    } else {
        cur + 1
    }
}

fn encode_w(w: &Word, cur: isize, out: &mut Codes) -> isize {
    // can also be in the middle of a word
    if w.string_at(cur, 2, &["WR"]) {
        out.add("R");
        return cur + 2;
    }
    if cur == 0 && (w.is_vowel(cur + 1) || w.string_at(cur, 2, &["WH"])) {
        // 'Wasserman' should match 'Vasserman'
        if w.is_vowel(cur + 1) {
            out.add2("A", "F");
        } else {
            out.add("A");
        }
    }
    // 'Arnow' should match 'Arnoff'
    if (cur == w.last() && w.is_vowel(cur - 1))
        || w.string_at(cur - 1, 5, &["EWSKI", "EWSKY", "OWSKI", "OWSKY"])
        || w.string_at(0, 3, &["SCH"])
    {
        out.add2("", "F");
        return cur + 1;
    }
    // polish, e.g. 'filipowicz'
    if w.string_at(cur, 4, &["WICZ", "WITZ"]) {
        out.add2("TS", "FX");
        return cur + 4;
    }
    cur + 1
}

/// Primary codes of each whitespace-separated word, joined by single spaces.
/// A word without letters contributes its digits (so "1975" and "1984" still
/// differ); a word with neither contributes nothing.
pub fn encode_phrase(text: &str) -> String {
    encode_phrase_with(text, |c| c.primary)
}

fn encode_phrase_with(text: &str, pick: impl Fn(PhoneticCode) -> String) -> String {
    text.split_whitespace()
        .filter_map(|w| {
            let code = metaphone_encode(w);
            if !code.is_empty() {
                return Some(pick(code));
            }
            let digits: String = w.chars().filter(char::is_ascii_digit).collect();
            (!digits.is_empty()).then_some(digits)
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Adds the correctness column. `gold_for` returns the gold key of a
/// judgment's item or trap, or `None` when there is none.
pub fn score_judgments<'a>(
    judgments: &'a [Judgment],
    gold_for: impl Fn(&'a Judgment) -> Option<&'a str>,
    opts: CorrectnessOptions,
) -> Vec<ScoredJudgment> {
    judgments
        .iter()
        .map(|j| ScoredJudgment {
            judgment: j.clone(),
            correctness: gold_for(j).map(|g| correctness_with(&j.typed_key, g, opts).value()),
        })
        .collect()
}

/// Ratcliff/Obershelp similarity `2M / (|a| + |b|)` over characters.
///
/// `M` counts characters matched by taking the longest common substring
/// (leftmost in the first argument, then leftmost in the second, on ties) and
/// recursing on the unmatched flanks. The arguments are put in lexicographic
/// order first so the score is symmetric. Two empty strings score 1.0.
pub fn gestalt_similarity(a: &str, b: &str) -> f64 {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let total = a.len() + b.len();
    if total == 0 {
        return 1.0;
    }
    2.0 * matched_chars(&a, &b) as f64 / total as f64
}

fn matched_chars(a: &[char], b: &[char]) -> usize {
    let mut stack = vec![(0, a.len(), 0, b.len())];
    let mut matched = 0;
    while let Some((a_lo, a_hi, b_lo, b_hi)) = stack.pop() {
        let (i, j, len) = longest_common_substring(&a[a_lo..a_hi], &b[b_lo..b_hi]);
        if len == 0 {
            continue;
        }
        matched += len;
        stack.push((a_lo, a_lo + i, b_lo, b_lo + j));
        stack.push((a_lo + i + len, a_hi, b_lo + j + len, b_hi));
    }
    matched
}

/// `(start_a, start_b, len)` of the leftmost-longest common substring.
fn longest_common_substring(a: &[char], b: &[char]) -> (usize, usize, usize) {
    let mut best = (0, 0, 0);
    // run[j + 1] = length of the common suffix of a[..=i] and b[..=j]
    let mut prev = vec![0usize; b.len() + 1];
    let mut run = vec![0usize; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        for (j, cb) in b.iter().enumerate() {
            run[j + 1] = if ca == cb { prev[j] + 1 } else { 0 };
            let len = run[j + 1];
            if len > best.2 {
                best = (i + 1 - len, j + 1 - len, len);
            }
        }
        std::mem::swap(&mut prev, &mut run);
    }
    best
}

/// Phonetic correctness of a typed key against the gold key.
pub fn correctness(typed: &str, gold: &str) -> CorrectnessScore {
    correctness_with(typed, gold, CorrectnessOptions::default())
}

pub fn correctness_with(typed: &str, gold: &str, opts: CorrectnessOptions) -> CorrectnessScore {
    let typed = typed.trim().to_lowercase();
    let gold = gold.trim().to_lowercase();
    let primary = gestalt_similarity(&encode_phrase(&typed), &encode_phrase(&gold));
    if !opts.accept_alternates {
        return CorrectnessScore::new(primary);
    }
    let alt = |t: &str| encode_phrase_with(t, |c| c.alternate);
    let typed_codes = [encode_phrase(&typed), alt(&typed)];
    let gold_codes = [encode_phrase(&gold), alt(&gold)];
    let best = typed_codes
        .iter()
        .flat_map(|t| gold_codes.iter().map(move |g| gestalt_similarity(t, g)))
        .fold(primary, f64::max);
    CorrectnessScore::new(best)
}
