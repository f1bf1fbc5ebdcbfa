//! Classic Porter (1980) suffix-stripping stemmer, steps 1a through 5b.
//!
//! No later extensions: `abli -> able` rather than `bli -> ble`, no `logi`
//! rule, and step 1c fires on any stem containing a vowel. Within a step the
//! first rule whose suffix matches is the only one considered; if its
//! condition fails the step leaves the word alone.
//!
//! Tokens of length two or less and tokens containing anything other than
//! ASCII lowercase letters and digits are returned unchanged.

type Condition = fn(&[u8]) -> bool;

pub fn stem(token: &str) -> String {
    let bytes = token.as_bytes();
    if bytes.len() <= 2
        || !bytes
            .iter()
            .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit())
    {
        return token.to_string();
    }

    let mut w = bytes.to_vec();
    step1a(&mut w);
    step1b(&mut w);
    step1c(&mut w);
    apply_rules(&mut w, STEP2);
    apply_rules(&mut w, STEP3);
    apply_rules(&mut w, STEP4);
    step5a(&mut w);
    step5b(&mut w);

    // Only ASCII bytes were ever written.
    String::from_utf8(w).expect("stemmer output is ASCII")
}

fn is_consonant(w: &[u8], i: usize) -> bool {
    match w[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => false,
        b'y' => i == 0 || !is_consonant(w, i - 1),
        _ => true,
    }
}

/// m in `[C](VC){m}[V]`.
fn measure(w: &[u8]) -> usize {
    let mut m = 0;
    let mut prev_vowel = false;
    for i in 0..w.len() {
        let cons = is_consonant(w, i);
        if cons && prev_vowel {
            m += 1;
        }
        prev_vowel = !cons;
    }
    m
}

fn contains_vowel(w: &[u8]) -> bool {
    (0..w.len()).any(|i| !is_consonant(w, i))
}

fn ends_double_consonant(w: &[u8]) -> bool {
    let n = w.len();
    n >= 2 && w[n - 1] == w[n - 2] && is_consonant(w, n - 1)
}

/// `*o`: ends consonant-vowel-consonant, the last not w, x or y.
fn ends_cvc(w: &[u8]) -> bool {
    let n = w.len();
    n >= 3
        && is_consonant(w, n - 3)
        && !is_consonant(w, n - 2)
        && is_consonant(w, n - 1)
        && !matches!(w[n - 1], b'w' | b'x' | b'y')
}

fn m_gt0(stem: &[u8]) -> bool {
    measure(stem) > 0
}

fn m_gt1(stem: &[u8]) -> bool {
    measure(stem) > 1
}

fn m_gt1_st(stem: &[u8]) -> bool {
    measure(stem) > 1 && matches!(stem.last(), Some(b's') | Some(b't'))
}

fn apply_rules(w: &mut Vec<u8>, rules: &[(&str, &str, Condition)]) {
    for (suffix, replacement, condition) in rules {
        if w.ends_with(suffix.as_bytes()) {
            let stem_len = w.len() - suffix.len();
            if condition(&w[..stem_len]) {
                w.truncate(stem_len);
                w.extend_from_slice(replacement.as_bytes());
            }
            return;
        }
    }
}

fn step1a(w: &mut Vec<u8>) {
    if w.ends_with(b"sses") || w.ends_with(b"ies") {
        w.truncate(w.len() - 2);
    } else if w.ends_with(b"ss") {
    } else if w.ends_with(b"s") {
        w.pop();
    }
}

fn step1b(w: &mut Vec<u8>) {
    if w.ends_with(b"eed") {
        if measure(&w[..w.len() - 3]) > 0 {
            w.pop();
        }
        return;
    }

    let stripped = [&b"ed"[..], &b"ing"[..]].into_iter().find_map(|suffix| {
        let stem = w.strip_suffix(suffix)?;
        contains_vowel(stem).then_some(stem.len())
    });
    let Some(stem_len) = stripped else {
        return;
    };
    w.truncate(stem_len);

    if w.ends_with(b"at") || w.ends_with(b"bl") || w.ends_with(b"iz") {
        w.push(b'e');
    } else if ends_double_consonant(w) {
        if !matches!(w[w.len() - 1], b'l' | b's' | b'z') {
            w.pop();
        }
    } else if measure(w) == 1 && ends_cvc(w) {
        w.push(b'e');
    }
}

fn step1c(w: &mut [u8]) {
    let n = w.len();
    if w[n - 1] == b'y' && contains_vowel(&w[..n - 1]) {
        w[n - 1] = b'i';
    }
}

const STEP2: &[(&str, &str, Condition)] = &[
    ("ational", "ate", m_gt0),
    ("tional", "tion", m_gt0),
    ("enci", "ence", m_gt0),
    ("anci", "ance", m_gt0),
    ("izer", "ize", m_gt0),
    ("abli", "able", m_gt0),
    ("alli", "al", m_gt0),
    ("entli", "ent", m_gt0),
    ("eli", "e", m_gt0),
    ("ousli", "ous", m_gt0),
    ("ization", "ize", m_gt0),
    ("ation", "ate", m_gt0),
    ("ator", "ate", m_gt0),
    ("alism", "al", m_gt0),
    ("iveness", "ive", m_gt0),
    ("fulness", "ful", m_gt0),
    ("ousness", "ous", m_gt0),
    ("aliti", "al", m_gt0),
    ("iviti", "ive", m_gt0),
    ("biliti", "ble", m_gt0),
];

const STEP3: &[(&str, &str, Condition)] = &[
    ("icate", "ic", m_gt0),
    ("ative", "", m_gt0),
    ("alize", "al", m_gt0),
    ("iciti", "ic", m_gt0),
    ("ical", "ic", m_gt0),
    ("ful", "", m_gt0),
    ("ness", "", m_gt0),
];

const STEP4: &[(&str, &str, Condition)] = &[
    ("al", "", m_gt1),
    ("ance", "", m_gt1),
    ("ence", "", m_gt1),
    ("er", "", m_gt1),
    ("ic", "", m_gt1),
    ("able", "", m_gt1),
    ("ible", "", m_gt1),
    ("ant", "", m_gt1),
    ("ement", "", m_gt1),
    ("ment", "", m_gt1),
    ("ent", "", m_gt1),
    ("ion", "", m_gt1_st),
    ("ou", "", m_gt1),
    ("ism", "", m_gt1),
    ("ate", "", m_gt1),
    ("iti", "", m_gt1),
    ("ous", "", m_gt1),
    ("ive", "", m_gt1),
    ("ize", "", m_gt1),
];

fn step5a(w: &mut Vec<u8>) {
    if let Some(stem) = w.strip_suffix(b"e") {
        let m = measure(stem);
        if m > 1 || (m == 1 && !ends_cvc(stem)) {
            w.pop();
        }
    }
}

fn step5b(w: &mut Vec<u8>) {
    if w.ends_with(b"ll") && measure(&w[..w.len() - 1]) > 1 {
        w.pop();
    }
}
