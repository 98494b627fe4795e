//! The classic Porter suffix-stripping stemmer.
//!
//! A direct port of the reference implementation of the original algorithm
//! (Porter, 1980), without the later Snowball departures. Operates on
//! lowercase ASCII words; anything else is returned unchanged.

struct Stemmer {
    b: Vec<u8>,
    /// Index of the last letter of the current word.
    k: isize,
    /// End of the stem set by the most recent successful `ends` call.
    j: isize,
}

impl Stemmer {
    fn at(&self, i: isize) -> u8 {
        self.b[i as usize]
    }

    /// True when b[i] is a consonant. `y` is a consonant at position 0 and
    /// after a vowel.
    fn cons(&self, i: isize) -> bool {
        match self.at(i) {
            b'a' | b'e' | b'i' | b'o' | b'u' => false,
            b'y' => i == 0 || !self.cons(i - 1),
            _ => true,
        }
    }

    /// The measure of the stem b[0..=j]: the m in [C](VC)^m[V].
    fn measure(&self) -> usize {
        let mut n = 0;
        let mut i = 0isize;
        loop {
            if i > self.j {
                return n;
            }
            if !self.cons(i) {
                break;
            }
            i += 1;
        }
        i += 1;
        loop {
            loop {
                if i > self.j {
                    return n;
                }
                if self.cons(i) {
                    break;
                }
                i += 1;
            }
            i += 1;
            n += 1;
            loop {
                if i > self.j {
                    return n;
                }
                if !self.cons(i) {
                    break;
                }
                i += 1;
            }
            i += 1;
        }
    }

    fn vowel_in_stem(&self) -> bool {
        (0..=self.j).any(|i| !self.cons(i))
    }

    /// b[i-1], b[i] is a double consonant.
    fn double_c(&self, i: isize) -> bool {
        i >= 1 && self.at(i) == self.at(i - 1) && self.cons(i)
    }

    /// consonant-vowel-consonant ending at i, where the final consonant is
    /// not w, x, or y.
    fn cvc(&self, i: isize) -> bool {
        if i < 2 || !self.cons(i) || self.cons(i - 1) || !self.cons(i - 2) {
            return false;
        }
        !matches!(self.at(i), b'w' | b'x' | b'y')
    }

    /// Tests for suffix `s`; on success records the stem end in `j`.
    fn ends(&mut self, s: &[u8]) -> bool {
        let len = s.len() as isize;
        if len > self.k + 1 {
            return false;
        }
        if &self.b[(self.k - len + 1) as usize..=(self.k as usize)] != s {
            return false;
        }
        self.j = self.k - len;
        true
    }

    /// Replaces b[j+1..=k] with `s`.
    fn set_to(&mut self, s: &[u8]) {
        self.b.truncate((self.j + 1) as usize);
        self.b.extend_from_slice(s);
        self.k = self.j + s.len() as isize;
    }

    fn replace(&mut self, s: &[u8]) {
        if self.measure() > 0 {
            self.set_to(s);
        }
    }

    /// Step 1ab: plurals and -ed / -ing.
    fn step1ab(&mut self) {
        if self.at(self.k) == b's' {
            if self.ends(b"sses") {
                self.k -= 2;
            } else if self.ends(b"ies") {
                self.set_to(b"i");
            } else if self.at(self.k - 1) != b's' {
                self.k -= 1;
            }
        }
        if self.ends(b"eed") {
            if self.measure() > 0 {
                self.k -= 1;
            }
        } else if (self.ends(b"ed") || self.ends(b"ing")) && self.vowel_in_stem() {
            self.k = self.j;
            if self.ends(b"at") {
                self.set_to(b"ate");
            } else if self.ends(b"bl") {
                self.set_to(b"ble");
            } else if self.ends(b"iz") {
                self.set_to(b"ize");
            } else if self.double_c(self.k) {
                self.k -= 1;
                if matches!(self.at(self.k), b'l' | b's' | b'z') {
                    self.k += 1;
                }
            } else if self.measure() == 1 && self.cvc(self.k) {
                self.set_to(b"e");
            }
        }
    }

    /// Step 1c: terminal y -> i when there is another vowel in the stem.
    fn step1c(&mut self) {
        if self.ends(b"y") && self.vowel_in_stem() {
            self.b[self.k as usize] = b'i';
        }
    }

    /// Step 2: double suffixes -> single ones, when m > 0.
    fn step2(&mut self) {
        if self.k < 1 {
            return;
        }
        macro_rules! rule {
            ($($suf:literal => $rep:literal),+ $(,)?) => {{
                $(if self.ends($suf) { self.replace($rep); return; })+
            }};
        }
        match self.at(self.k - 1) {
            b'a' => rule!(b"ational" => b"ate", b"tional" => b"tion"),
            b'c' => rule!(b"enci" => b"ence", b"anci" => b"ance"),
            b'e' => rule!(b"izer" => b"ize"),
            b'l' => rule!(
                b"abli" => b"able",
                b"alli" => b"al",
                b"entli" => b"ent",
                b"eli" => b"e",
                b"ousli" => b"ous",
            ),
            b'o' => rule!(b"ization" => b"ize", b"ation" => b"ate", b"ator" => b"ate"),
            b's' => rule!(
                b"alism" => b"al",
                b"iveness" => b"ive",
                b"fulness" => b"ful",
                b"ousness" => b"ous",
            ),
            b't' => rule!(b"aliti" => b"al", b"iviti" => b"ive", b"biliti" => b"ble"),
            _ => {}
        }
    }

    /// Step 3: -ic-, -full, -ness and similar.
    fn step3(&mut self) {
        if self.k < 1 {
            return;
        }
        macro_rules! rule {
            ($($suf:literal => $rep:literal),+ $(,)?) => {{
                $(if self.ends($suf) { self.replace($rep); return; })+
            }};
        }
        match self.at(self.k) {
            b'e' => rule!(b"icate" => b"ic", b"ative" => b"", b"alize" => b"al"),
            b'i' => rule!(b"iciti" => b"ic"),
            b'l' => rule!(b"ical" => b"ic", b"ful" => b""),
            b's' => rule!(b"ness" => b""),
            _ => {}
        }
    }

    /// Step 4: strips -ant, -ence and similar, when m > 1.
    fn step4(&mut self) {
        if self.k < 1 {
            return;
        }
        let matched = match self.at(self.k - 1) {
            b'a' => self.ends(b"al"),
            b'c' => self.ends(b"ance") || self.ends(b"ence"),
            b'e' => self.ends(b"er"),
            b'i' => self.ends(b"ic"),
            b'l' => self.ends(b"able") || self.ends(b"ible"),
            b'n' => {
                self.ends(b"ant") || self.ends(b"ement") || self.ends(b"ment") || self.ends(b"ent")
            }
            b'o' => {
                (self.ends(b"ion") && self.j >= 0 && matches!(self.at(self.j), b's' | b't'))
                    || self.ends(b"ou")
            }
            b's' => self.ends(b"ism"),
            b't' => self.ends(b"ate") || self.ends(b"iti"),
            b'u' => self.ends(b"ous"),
            b'v' => self.ends(b"ive"),
            b'z' => self.ends(b"ize"),
            _ => false,
        };
        if matched && self.measure() > 1 {
            self.k = self.j;
        }
    }

    /// Step 5: final -e and -ll cleanup.
    fn step5(&mut self) {
        self.j = self.k;
        if self.at(self.k) == b'e' {
            let a = self.measure();
            if a > 1 || (a == 1 && !self.cvc(self.k - 1)) {
                self.k -= 1;
            }
        }
        if self.at(self.k) == b'l' && self.double_c(self.k) && self.measure() > 1 {
            self.k -= 1;
        }
    }
}

/// Stems a single word. Words shorter than 3 characters or containing
/// anything but lowercase ASCII letters are returned unchanged.
pub fn stem(word: &str) -> String {
    if word.len() <= 2 || !word.bytes().all(|b| b.is_ascii_lowercase()) {
        return word.to_string();
    }
    let mut s = Stemmer {
        b: word.as_bytes().to_vec(),
        k: word.len() as isize - 1,
        j: 0,
    };
    s.step1ab();
    s.step1c();
    s.step2();
    s.step3();
    s.step4();
    s.step5();
    s.b.truncate((s.k + 1) as usize);
    String::from_utf8(s.b).expect("stemmer output is ASCII")
}
