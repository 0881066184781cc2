//! The Cayley tree of a free group: vertices are reduced words, ideal points
//! are eventually periodic reduced sequences.

use std::fmt;

use crate::error::{Error, Result};
use crate::word::Alphabet;

/// Generator `i` is letter `2i`, its inverse `2i + 1`.
pub type Letter = u8;

#[inline]
pub fn inv(l: Letter) -> Letter {
    l ^ 1
}

pub fn letter(gen: usize, sign: i64) -> Letter {
    (2 * gen) as u8 + u8::from(sign < 0)
}

/// A freely reduced word, i.e. a vertex of the tree and an element of the free group.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FreeWord(Vec<Letter>);

impl FreeWord {
    pub fn identity() -> Self {
        FreeWord(Vec::new())
    }

    pub fn from_letters(letters: impl IntoIterator<Item = Letter>) -> Self {
        let mut w = FreeWord::identity();
        for l in letters {
            w.push(l);
        }
        w
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, l: Letter) {
        if self.0.last() == Some(&inv(l)) {
            self.0.pop();
        } else {
            self.0.push(l);
        }
    }

    pub fn mul(&self, o: &FreeWord) -> FreeWord {
        let mut k = 0;
        while k < self.0.len() && k < o.0.len() && self.0[self.0.len() - 1 - k] == inv(o.0[k]) {
            k += 1;
        }
        let mut v = Vec::with_capacity(self.0.len() + o.0.len() - 2 * k);
        v.extend_from_slice(&self.0[..self.0.len() - k]);
        v.extend_from_slice(&o.0[k..]);
        FreeWord(v)
    }

    pub fn inverse(&self) -> FreeWord {
        FreeWord(self.0.iter().rev().map(|&l| inv(l)).collect())
    }

    pub fn pow(&self, n: i64) -> FreeWord {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let (conj, core) = base.cyclic_decomposition();
        let mut mid = Vec::with_capacity(core.len() * n.unsigned_abs() as usize);
        for _ in 0..n.unsigned_abs() {
            mid.extend_from_slice(&core.0);
        }
        conj.mul(&FreeWord(mid)).mul(&conj.inverse())
    }

    /// `self = w c w^-1` with `c` cyclically reduced; returns `(w, c)`.
    pub fn cyclic_decomposition(&self) -> (FreeWord, FreeWord) {
        let n = self.0.len();
        let mut k = 0;
        while 2 * k + 1 < n && self.0[k] == inv(self.0[n - 1 - k]) {
            k += 1;
        }
        (FreeWord(self.0[..k].to_vec()), FreeWord(self.0[k..n - k].to_vec()))
    }

    pub fn common_prefix(&self, o: &FreeWord) -> usize {
        self.0.iter().zip(&o.0).take_while(|(a, b)| a == b).count()
    }

    pub fn display(&self, alphabet: &Alphabet) -> String {
        if self.0.is_empty() {
            return "1".into();
        }
        self.0
            .iter()
            .map(|&l| {
                let (g, i) = alphabet.pairs[(l / 2) as usize];
                if l % 2 == 0 {
                    g
                } else {
                    i
                }
            })
            .collect()
    }
}

impl fmt::Display for FreeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display(&Alphabet::lower_upper(26)))
    }
}

/// An eventually periodic reduced sequence `prefix . period^inf`, kept in the
/// unique normal form (shortest prefix, primitive period) so equality is structural.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RaySeq {
    prefix: Vec<Letter>,
    period: Vec<Letter>,
}

impl RaySeq {
    pub fn new(prefix: Vec<Letter>, period: Vec<Letter>) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::Precondition("ideal point needs a nonempty period".into()));
        }
        let reduced = |s: &[Letter]| s.windows(2).all(|w| w[1] != inv(w[0]));
        let cyc_ok = period.len() == 1 || period[0] != inv(*period.last().unwrap());
        let join_ok = prefix.last().is_none_or(|&l| l != inv(period[0]));
        if !reduced(&prefix) || !reduced(&period) || !cyc_ok || !join_ok {
            return Err(Error::Precondition("ideal point sequence is not reduced".into()));
        }
        Ok(Self::normalize(prefix, period))
    }

    /// The ray `c^inf` for a cyclically reduced nonempty word.
    pub fn periodic(c: &FreeWord) -> Result<Self> {
        Self::new(Vec::new(), c.letters().to_vec())
    }

    fn normalize(mut prefix: Vec<Letter>, mut period: Vec<Letter>) -> Self {
        let n = period.len();
        if let Some(p) = (1..=n).find(|&p| n.is_multiple_of(p) && (0..n).all(|i| period[i] == period[i % p])) {
            period.truncate(p);
        }
        while let Some(&l) = prefix.last() {
            if l != *period.last().unwrap() {
                break;
            }
            prefix.pop();
            period.rotate_right(1);
        }
        RaySeq { prefix, period }
    }

    pub fn at(&self, i: usize) -> Letter {
        if i < self.prefix.len() {
            self.prefix[i]
        } else {
            self.period[(i - self.prefix.len()) % self.period.len()]
        }
    }

    pub fn prefix(&self) -> &[Letter] {
        &self.prefix
    }

    pub fn period(&self) -> &[Letter] {
        &self.period
    }

    /// The sequence with its first `m` letters dropped.
    pub fn shifted(&self, m: usize) -> RaySeq {
        if m <= self.prefix.len() {
            return Self::normalize(self.prefix[m..].to_vec(), self.period.clone());
        }
        let mut period = self.period.clone();
        period.rotate_left((m - self.prefix.len()) % self.period.len());
        Self::normalize(Vec::new(), period)
    }

    /// Left action of a free-group element.
    pub fn act(&self, g: &FreeWord) -> RaySeq {
        let copies = g.len() / self.period.len() + 2;
        let mut w = g.clone();
        for &l in &self.prefix {
            w.push(l);
        }
        for _ in 0..copies {
            for &l in &self.period {
                w.push(l);
            }
        }
        // At least one full period survives the cancellation at the end of `w`.
        Self::normalize(w.0, self.period.clone())
    }

    /// Length of the common prefix with another ray, `None` if they are equal.
    pub fn common_prefix(&self, o: &RaySeq) -> Option<usize> {
        if self == o {
            return None;
        }
        let bound = self.prefix.len() + o.prefix.len() + self.period.len() * o.period.len() + 1;
        (0..bound).find(|&i| self.at(i) != o.at(i)).or(Some(bound))
    }

    pub fn display(&self, alphabet: &Alphabet) -> String {
        let p = FreeWord(self.prefix.clone()).display(alphabet);
        let c = FreeWord(self.period.clone()).display(alphabet);
        if self.prefix.is_empty() {
            format!("({c})^inf")
        } else {
            format!("{p}({c})^inf")
        }
    }
}

/// Letters read off along one side of a tree path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TreeSeq {
    Finite(Vec<Letter>),
    Ray(RaySeq),
}

impl TreeSeq {
    pub fn len(&self) -> Option<usize> {
        match self {
            TreeSeq::Finite(v) => Some(v.len()),
            TreeSeq::Ray(_) => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    pub fn at(&self, i: usize) -> Option<Letter> {
        match self {
            TreeSeq::Finite(v) => v.get(i).copied(),
            TreeSeq::Ray(r) => Some(r.at(i)),
        }
    }

    fn prefix_word(&self, n: usize) -> FreeWord {
        FreeWord::from_letters((0..n).map_while(|i| self.at(i)))
    }

    fn common_prefix(&self, y: &FreeWord) -> usize {
        y.letters()
            .iter()
            .enumerate()
            .take_while(|&(i, &l)| self.at(i) == Some(l))
            .count()
    }
}

/// A geodesic in the tree: a base vertex and the letter sequences read forward
/// and backward from it. Parameter `t` is the signed number of edges from the base.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreePath {
    pub base: FreeWord,
    pub forward: TreeSeq,
    pub backward: TreeSeq,
}

impl TreePath {
    pub fn segment(p: &FreeWord, q: &FreeWord) -> Self {
        TreePath {
            base: p.clone(),
            forward: TreeSeq::Finite(p.inverse().mul(q).letters().to_vec()),
            backward: TreeSeq::Finite(Vec::new()),
        }
    }

    pub fn ray(p: &FreeWord, xi: &RaySeq) -> Self {
        TreePath {
            base: p.clone(),
            forward: TreeSeq::Ray(xi.act(&p.inverse())),
            backward: TreeSeq::Finite(Vec::new()),
        }
    }

    pub fn line(minus: &RaySeq, plus: &RaySeq) -> Result<Self> {
        let m = minus.common_prefix(plus).ok_or(Error::DegenerateLine)?;
        Ok(TreePath {
            base: FreeWord::from_letters((0..m).map(|i| plus.at(i))),
            forward: TreeSeq::Ray(plus.shifted(m)),
            backward: TreeSeq::Ray(minus.shifted(m)),
        })
    }

    pub fn domain(&self) -> (f64, f64) {
        let lo = self.backward.len().map_or(f64::NEG_INFINITY, |n| -(n as f64));
        let hi = self.forward.len().map_or(f64::INFINITY, |n| n as f64);
        (lo, hi)
    }

    /// Vertex relative to the base (already reduced).
    fn relative(&self, t: i64) -> FreeWord {
        if t >= 0 {
            self.forward.prefix_word(t as usize)
        } else {
            self.backward.prefix_word(t.unsigned_abs() as usize)
        }
    }

    pub fn vertex_at(&self, t: i64) -> FreeWord {
        self.base.mul(&self.relative(t))
    }

    /// Nearest-point parameter and the distance to it. Exact and unique.
    pub fn project(&self, x: &FreeWord) -> (i64, u64) {
        let y = self.base.inverse().mul(x);
        let mf = self.forward.common_prefix(&y);
        let mb = self.backward.common_prefix(&y);
        let t = if mf > 0 { mf as i64 } else { -(mb as i64) };
        let d = y.len() - t.unsigned_abs() as usize;
        (t, d as u64)
    }

    pub fn endpoints(&self) -> (Option<&RaySeq>, Option<&RaySeq>) {
        fn r(s: &TreeSeq) -> Option<&RaySeq> {
            match s {
                TreeSeq::Ray(r) => Some(r),
                TreeSeq::Finite(_) => None,
            }
        }
        (r(&self.backward), r(&self.forward))
    }

    /// Ideal endpoints in absolute coordinates `(minus, plus)` for complete lines.
    pub fn absolute_endpoints(&self) -> Option<(RaySeq, RaySeq)> {
        match (&self.backward, &self.forward) {
            (TreeSeq::Ray(b), TreeSeq::Ray(f)) => Some((b.act(&self.base), f.act(&self.base))),
            _ => None,
        }
    }
}
