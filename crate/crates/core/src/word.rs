//! Words in a preset's generators.
//!
//! Syntax: one character per generator, its inverse written with the paired
//! character (for example `a`/`A`, or `T`/`t` in the modular preset).
//! A letter or a parenthesized group may carry an integer exponent:
//! `T^2ST`, `(TTST)^104`, `a^-3`. The empty word, `1` and `e` denote the identity.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Syllable {
    Gen { index: usize, exp: i64 },
    Group { word: Word, exp: i64 },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Word(pub Vec<Syllable>);

impl Word {
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    pub fn gen(index: usize, exp: i64) -> Self {
        if exp == 0 {
            return Word::identity();
        }
        Word(vec![Syllable::Gen { index, exp }])
    }

    /// Word length in the generators (a group's exponent multiplies its length).
    pub fn len(&self) -> u64 {
        self.0
            .iter()
            .map(|s| match s {
                Syllable::Gen { exp, .. } => exp.unsigned_abs(),
                Syllable::Group { word, exp } => word.len() * exp.unsigned_abs(),
            })
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn concat(&self, o: &Word) -> Word {
        let mut out = self.0.clone();
        for s in &o.0 {
            push_merged(&mut out, s.clone());
        }
        Word(out)
    }

    pub fn inverse(&self) -> Word {
        Word(
            self.0
                .iter()
                .rev()
                .map(|s| match s {
                    Syllable::Gen { index, exp } => Syllable::Gen { index: *index, exp: -exp },
                    Syllable::Group { word, exp } => Syllable::Group { word: word.clone(), exp: -exp },
                })
                .collect(),
        )
    }

    pub fn pow(&self, n: i64) -> Word {
        if n == 0 || self.is_empty() {
            return Word::identity();
        }
        if n == 1 {
            return self.clone();
        }
        if self.0.len() == 1 {
            match &self.0[0] {
                Syllable::Gen { index, exp } => return Word::gen(*index, exp * n),
                Syllable::Group { word, exp } => {
                    return Word(vec![Syllable::Group { word: word.clone(), exp: exp * n }])
                }
            }
        }
        Word(vec![Syllable::Group { word: self.clone(), exp: n }])
    }

    pub fn conjugate_by(&self, g: &Word) -> Word {
        g.concat(self).concat(&g.inverse())
    }

    /// Flattened sequence of (generator, ±1) letters. Only for short words.
    pub fn letters(&self) -> Vec<(usize, i64)> {
        let mut out = Vec::new();
        self.push_letters(&mut out);
        out
    }

    fn push_letters(&self, out: &mut Vec<(usize, i64)>) {
        for s in &self.0 {
            match s {
                Syllable::Gen { index, exp } => {
                    for _ in 0..exp.unsigned_abs() {
                        out.push((*index, exp.signum()));
                    }
                }
                Syllable::Group { word, exp } => {
                    let w = if *exp < 0 { word.inverse() } else { word.clone() };
                    for _ in 0..exp.unsigned_abs() {
                        w.push_letters(out);
                    }
                }
            }
        }
    }

    pub fn display(&self, alphabet: &Alphabet) -> String {
        if self.is_empty() {
            return "1".to_string();
        }
        let mut s = String::new();
        for syl in &self.0 {
            match syl {
                Syllable::Gen { index, exp } => {
                    let (g, inv) = alphabet.pairs[*index];
                    s.push(if *exp > 0 { g } else { inv });
                    if exp.abs() > 1 {
                        s.push_str(&format!("^{}", exp.abs()));
                    }
                }
                Syllable::Group { word, exp } => {
                    s.push('(');
                    s.push_str(&word.display(alphabet));
                    s.push(')');
                    s.push_str(&format!("^{exp}"));
                }
            }
        }
        s
    }
}

fn push_merged(out: &mut Vec<Syllable>, s: Syllable) {
    if let (Some(Syllable::Gen { index: i, exp: e }), Syllable::Gen { index, exp }) = (out.last_mut(), &s) {
        if i == index {
            *e += exp;
            if *e == 0 {
                out.pop();
            }
            return;
        }
    }
    out.push(s);
}

/// Generator characters of a preset, each paired with its inverse character.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    pub pairs: Vec<(char, char)>,
}

impl Alphabet {
    pub fn new(pairs: Vec<(char, char)>) -> Self {
        Alphabet { pairs }
    }

    /// Lowercase generators with uppercase inverses: `a/A, b/B, ...`.
    pub fn lower_upper(rank: usize) -> Self {
        Alphabet::new(
            (0..rank)
                .map(|i| {
                    let c = (b'a' + i as u8) as char;
                    (c, c.to_ascii_uppercase())
                })
                .collect(),
        )
    }

    pub fn lookup(&self, c: char) -> Option<(usize, i64)> {
        self.pairs.iter().enumerate().find_map(|(i, &(g, inv))| {
            if c == g {
                Some((i, 1))
            } else if c == inv {
                Some((i, -1))
            } else {
                None
            }
        })
    }

    pub fn name(&self, index: usize) -> char {
        self.pairs[index].0
    }

    pub fn parse(&self, text: &str) -> Result<Word> {
        let chars: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
        if chars.is_empty() || chars == ['1'] || chars == ['e'] && self.lookup('e').is_none() {
            return Ok(Word::identity());
        }
        let mut pos = 0;
        let w = self.parse_seq(&chars, &mut pos)?;
        if pos != chars.len() {
            return Err(Error::Parse(format!("unexpected '{}' at {pos} in {text:?}", chars[pos])));
        }
        Ok(w)
    }

    fn parse_seq(&self, chars: &[char], pos: &mut usize) -> Result<Word> {
        let mut out = Vec::new();
        while *pos < chars.len() && chars[*pos] != ')' {
            let c = chars[*pos];
            *pos += 1;
            let item = if c == '(' {
                let inner = self.parse_seq(chars, pos)?;
                if *pos >= chars.len() || chars[*pos] != ')' {
                    return Err(Error::Parse("unbalanced parenthesis".into()));
                }
                *pos += 1;
                let e = parse_exp(chars, pos)?;
                if inner.is_empty() || e == 0 {
                    continue;
                }
                inner.pow(e)
            } else {
                let (i, s) = self
                    .lookup(c)
                    .ok_or_else(|| Error::Parse(format!("'{c}' is not a generator of this preset")))?;
                let e = parse_exp(chars, pos)?;
                Word::gen(i, s * e)
            };
            for s in item.0 {
                push_merged(&mut out, s);
            }
        }
        Ok(Word(out))
    }
}

fn parse_exp(chars: &[char], pos: &mut usize) -> Result<i64> {
    if *pos >= chars.len() || chars[*pos] != '^' {
        return Ok(1);
    }
    *pos += 1;
    let start = *pos;
    if *pos < chars.len() && chars[*pos] == '-' {
        *pos += 1;
    }
    while *pos < chars.len() && chars[*pos].is_ascii_digit() {
        *pos += 1;
    }
    let s: String = chars[start..*pos].iter().collect();
    s.parse::<i64>().map_err(|_| Error::Parse(format!("bad exponent {s:?}")))
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ab = Alphabet::lower_upper(26);
        write!(f, "{}", self.display(&ab))
    }
}
