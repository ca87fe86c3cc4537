//! One pass of the Porter suffix-stripping rules.
//!
//! The rule tables follow the original published algorithm: steps 1a through
//! 5b, with rule conditions evaluated on the stem left after removing the
//! candidate suffix and longest-suffix-first matching inside each step.
//! Input must be lowercase ASCII letters; the caller guarantees that.

/// Consonant test at position `i`; `y` counts as a consonant only at the
/// start of the word or after a vowel.
fn is_cons(word: &[u8], i: usize) -> bool {
    match word[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => false,
        b'y' => i == 0 || !is_cons(word, i - 1),
        _ => true,
    }
}

/// The measure m of a stem: the number of vowel-consonant sequences in the
/// form `[C](VC){m}[V]`.
fn measure(word: &[u8]) -> usize {
    let mut m = 0;
    let mut prev_vowel = false;
    for i in 0..word.len() {
        let cons = is_cons(word, i);
        if cons && prev_vowel {
            m += 1;
        }
        prev_vowel = !cons;
    }
    m
}

fn has_vowel(word: &[u8]) -> bool {
    (0..word.len()).any(|i| !is_cons(word, i))
}

/// `*d`: ends with a double consonant.
fn ends_double_cons(word: &[u8]) -> bool {
    let n = word.len();
    n >= 2 && word[n - 1] == word[n - 2] && is_cons(word, n - 1)
}

/// `*o`: ends consonant-vowel-consonant where the final consonant is not
/// `w`, `x`, or `y`.
fn ends_cvc(word: &[u8]) -> bool {
    let n = word.len();
    if n < 3 {
        return false;
    }
    is_cons(word, n - 3)
        && !is_cons(word, n - 2)
        && is_cons(word, n - 1)
        && !matches!(word[n - 1], b'w' | b'x' | b'y')
}

fn ends_with<'a>(word: &'a [u8], suffix: &str) -> Option<&'a [u8]> {
    let s = suffix.as_bytes();
    if word.len() >= s.len() && &word[word.len() - s.len()..] == s {
        Some(&word[..word.len() - s.len()])
    } else {
        None
    }
}

fn step1a(word: &[u8]) -> Vec<u8> {
    if let Some(stem) = ends_with(word, "sses") {
        return [stem, b"ss"].concat();
    }
    if let Some(stem) = ends_with(word, "ies") {
        return [stem, b"i"].concat();
    }
    if ends_with(word, "ss").is_some() {
        return word.to_vec();
    }
    if let Some(stem) = ends_with(word, "s") {
        return stem.to_vec();
    }
    word.to_vec()
}

fn step1b(word: &[u8]) -> Vec<u8> {
    if let Some(stem) = ends_with(word, "eed") {
        if measure(stem) > 0 {
            return word[..word.len() - 1].to_vec();
        }
        return word.to_vec();
    }
    let stripped = match (ends_with(word, "ed"), ends_with(word, "ing")) {
        (Some(stem), _) if has_vowel(stem) => stem,
        (_, Some(stem)) if has_vowel(stem) => stem,
        _ => return word.to_vec(),
    };
    if ends_with(stripped, "at").is_some()
        || ends_with(stripped, "bl").is_some()
        || ends_with(stripped, "iz").is_some()
    {
        return [stripped, b"e"].concat();
    }
    if ends_double_cons(stripped) && !matches!(stripped[stripped.len() - 1], b'l' | b's' | b'z') {
        return stripped[..stripped.len() - 1].to_vec();
    }
    if measure(stripped) == 1 && ends_cvc(stripped) {
        return [stripped, b"e"].concat();
    }
    stripped.to_vec()
}

fn step1c(word: &[u8]) -> Vec<u8> {
    if let Some(stem) = ends_with(word, "y") {
        if has_vowel(stem) {
            return [stem, b"i"].concat();
        }
    }
    word.to_vec()
}

const STEP2_RULES: &[(&str, &str)] = &[
    ("ational", "ate"),
    ("tional", "tion"),
    ("enci", "ence"),
    ("anci", "ance"),
    ("izer", "ize"),
    ("abli", "able"),
    ("alli", "al"),
    ("entli", "ent"),
    ("eli", "e"),
    ("ousli", "ous"),
    ("ization", "ize"),
    ("ation", "ate"),
    ("ator", "ate"),
    ("alism", "al"),
    ("iveness", "ive"),
    ("fulness", "ful"),
    ("ousness", "ous"),
    ("aliti", "al"),
    ("iviti", "ive"),
    ("biliti", "ble"),
];

const STEP3_RULES: &[(&str, &str)] = &[
    ("icate", "ic"),
    ("ative", ""),
    ("alize", "al"),
    ("iciti", "ic"),
    ("ical", "ic"),
    ("ful", ""),
    ("ness", ""),
];

const STEP4_SUFFIXES: &[&str] = &[
    "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment", "ent", "ion", "ou",
    "ism", "ate", "iti", "ous", "ive", "ize",
];

/// Longest matching rule whose stem satisfies m > 0.
fn replace_table(word: &[u8], rules: &[(&str, &str)]) -> Vec<u8> {
    let mut best: Option<(&str, &str)> = None;
    for &(suffix, replacement) in rules {
        if ends_with(word, suffix).is_some()
            && best.map_or(true, |(b, _)| suffix.len() > b.len())
        {
            best = Some((suffix, replacement));
        }
    }
    if let Some((suffix, replacement)) = best {
        let stem = &word[..word.len() - suffix.len()];
        if measure(stem) > 0 {
            return [stem, replacement.as_bytes()].concat();
        }
    }
    word.to_vec()
}

fn step4(word: &[u8]) -> Vec<u8> {
    let mut best: Option<&str> = None;
    for &suffix in STEP4_SUFFIXES {
        if ends_with(word, suffix).is_some() && best.map_or(true, |b| suffix.len() > b.len()) {
            best = Some(suffix);
        }
    }
    if let Some(suffix) = best {
        let stem = &word[..word.len() - suffix.len()];
        if suffix == "ion" && !matches!(stem.last(), Some(b's') | Some(b't')) {
            return word.to_vec();
        }
        if measure(stem) > 1 {
            return stem.to_vec();
        }
    }
    word.to_vec()
}

fn step5a(word: &[u8]) -> Vec<u8> {
    if let Some(stem) = ends_with(word, "e") {
        let m = measure(stem);
        if m > 1 || (m == 1 && !ends_cvc(stem)) {
            return stem.to_vec();
        }
    }
    word.to_vec()
}

fn step5b(word: &[u8]) -> Vec<u8> {
    if word.ends_with(b"ll") && measure(&word[..word.len() - 1]) > 1 {
        return word[..word.len() - 1].to_vec();
    }
    word.to_vec()
}

/// Run steps 1a-5b once over a lowercase ASCII word.
pub(crate) fn porter_pass(word: &str) -> String {
    let mut w = word.as_bytes().to_vec();
    w = step1a(&w);
    w = step1b(&w);
    w = step1c(&w);
    w = replace_table(&w, STEP2_RULES);
    w = replace_table(&w, STEP3_RULES);
    w = step4(&w);
    w = step5a(&w);
    w = step5b(&w);
    String::from_utf8(w).expect("ascii stays ascii")
}
