//! Group presets: generator realizations, alphabets and default models.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::arith::Mat2;
use crate::error::{Error, Result};
use crate::geometry::tree::{letter, FreeWord};
use crate::geometry::{Point, SpaceModel};
use crate::isometry::{GroupElement, Isometry};
use crate::word::{Alphabet, Syllable, Word};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PresetKind {
    Free { rank: usize },
    Modular,
    Sanov,
    Cyclic,
    FiniteCyclic { n: u64 },
    Custom,
}

#[derive(Clone, Debug)]
pub struct Preset {
    pub id: String,
    pub kind: PresetKind,
    pub alphabet: Alphabet,
    pub gens: Vec<Isometry>,
    pub model: SpaceModel,
}

impl Preset {
    pub fn free(rank: usize) -> Result<Preset> {
        if rank == 0 || rank > 13 {
            return Err(Error::UnknownPreset(format!("free({rank}): rank must be in 1..=13")));
        }
        let gens = (0..rank).map(|i| Isometry::Tree(FreeWord::from_letters([letter(i, 1)]))).collect();
        let id = if rank == 2 { "free2".to_string() } else { format!("free({rank})") };
        Ok(Preset { id, kind: PresetKind::Free { rank }, alphabet: Alphabet::lower_upper(rank), gens, model: SpaceModel::tree(rank) })
    }

    /// PSL(2,Z) generated by `S = [[0,-1],[1,0]]` and `T = [[1,1],[0,1]]`.
    pub fn modular() -> Preset {
        Preset {
            id: "modular".into(),
            kind: PresetKind::Modular,
            alphabet: Alphabet::new(vec![('S', 's'), ('T', 't')]),
            gens: vec![mat(0, -1, 1, 0), mat(1, 1, 0, 1)],
            model: SpaceModel::h2(),
        }
    }

    /// The free group generated by `[[1,2],[0,1]]` and `[[1,0],[2,1]]`.
    pub fn sanov() -> Preset {
        Preset {
            id: "sanov".into(),
            kind: PresetKind::Sanov,
            alphabet: Alphabet::lower_upper(2),
            gens: vec![mat(1, 2, 0, 1), mat(1, 0, 2, 1)],
            model: SpaceModel::h2(),
        }
    }

    /// The infinite cyclic group acting on its Cayley graph, a line.
    pub fn cyclic() -> Preset {
        Preset {
            id: "cyclic".into(),
            kind: PresetKind::Cyclic,
            alphabet: Alphabet::new(vec![('t', 'T')]),
            gens: vec![Isometry::Tree(FreeWord::from_letters([letter(0, 1)]))],
            model: SpaceModel::tree(1),
        }
    }

    /// Z/n acting on the half-plane by rotations about `i`.
    pub fn finite_cyclic(n: u64) -> Result<Preset> {
        if n == 0 {
            return Err(Error::UnknownPreset("finite-cyclic(0)".into()));
        }
        Ok(Preset {
            id: format!("finite-cyclic({n})"),
            kind: PresetKind::FiniteCyclic { n },
            alphabet: Alphabet::new(vec![('t', 'T')]),
            gens: vec![Isometry::Rotation { k: 1 % n, n }],
            model: SpaceModel::h2(),
        })
    }

    /// Matrices in the syntax `a,b;c,d` with integer or `p/q` entries, one per generator.
    pub fn custom(matrices: &[&str]) -> Result<Preset> {
        if matrices.is_empty() {
            return Err(Error::EmptySet);
        }
        if matrices.len() > 13 {
            return Err(Error::Parse("at most 13 custom generators".into()));
        }
        let gens = matrices.iter().map(|s| parse_matrix(s).map(Isometry::Mobius)).collect::<Result<Vec<_>>>()?;
        Ok(Preset {
            id: "custom".into(),
            kind: PresetKind::Custom,
            alphabet: Alphabet::lower_upper(gens.len()),
            gens,
            model: SpaceModel::h2(),
        })
    }

    /// Looks up `free2`, `free(r)`, `modular`, `sanov`, `cyclic`, `finite-cyclic(n)`.
    pub fn by_name(name: &str) -> Result<Preset> {
        let arg = |prefix: &str| -> Option<&str> { name.strip_prefix(prefix)?.strip_suffix(')') };
        let parse_n = |s: &str| s.trim().parse::<u64>().map_err(|_| Error::UnknownPreset(name.to_string()));
        match name {
            "free2" => Preset::free(2),
            "modular" => Ok(Preset::modular()),
            "sanov" => Ok(Preset::sanov()),
            "cyclic" => Ok(Preset::cyclic()),
            _ => {
                if let Some(r) = arg("free(") {
                    Preset::free(parse_n(r)? as usize)
                } else if let Some(n) = arg("finite-cyclic(") {
                    Preset::finite_cyclic(parse_n(n)?)
                } else {
                    Err(Error::UnknownPreset(name.to_string()))
                }
            }
        }
    }

    pub fn rank(&self) -> usize {
        self.gens.len()
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        if !self.model.is_tree() {
            self.model.delta = delta;
        }
        self
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement::new(Word::identity(), self.gens[0].identity_like())
    }

    pub fn generator(&self, i: usize) -> GroupElement {
        GroupElement::new(Word::gen(i, 1), self.gens[i].clone())
    }

    pub fn generators(&self) -> Vec<GroupElement> {
        (0..self.rank()).map(|i| self.generator(i)).collect()
    }

    pub fn eval(&self, w: &Word) -> Result<Isometry> {
        let mut acc = self.gens[0].identity_like();
        for s in &w.0 {
            let piece = match s {
                Syllable::Gen { index, exp } => {
                    let g = self.gens.get(*index).ok_or_else(|| Error::Parse(format!("generator {index} out of range")))?;
                    g.pow(*exp)
                }
                Syllable::Group { word, exp } => self.eval(word)?.pow(*exp),
            };
            acc = acc.compose(&piece)?;
        }
        Ok(acc)
    }

    pub fn element(&self, w: &Word) -> Result<GroupElement> {
        Ok(GroupElement::new(w.clone(), self.eval(w)?))
    }

    pub fn parse(&self, text: &str) -> Result<GroupElement> {
        self.element(&self.alphabet.parse(text)?)
    }

    /// Generating set from a comma-separated list of words.
    pub fn parse_set(&self, text: &str) -> Result<Vec<GroupElement>> {
        let set: Vec<GroupElement> =
            text.split(',').filter(|s| !s.trim().is_empty()).map(|s| self.parse(s.trim())).collect::<Result<_>>()?;
        if set.is_empty() {
            return Err(Error::EmptySet);
        }
        Ok(set)
    }

    pub fn display(&self, w: &Word) -> String {
        w.display(&self.alphabet)
    }

    /// Whether the words in `set` reach every preset generator as a single
    /// element, which certifies that they generate the preset group.
    pub fn reaches_generators(&self, set: &[GroupElement]) -> bool {
        self.gens.iter().all(|g| set.iter().any(|s| s.iso == *g || s.iso.inverse() == *g))
    }

    /// A standard basepoint: the tree root or `i`.
    pub fn basepoint(&self) -> Point {
        if self.model.is_tree() {
            Point::root()
        } else {
            Point::h2(0.0, 1.0).expect("i is in the half-plane")
        }
    }

    /// Declared relations hold for the realized generators.
    pub fn self_check(&self) -> Result<()> {
        let rel = |text: &str| -> Result<()> {
            let g = self.parse(text)?;
            if g.iso.is_identity() {
                Ok(())
            } else {
                Err(Error::Precondition(format!("{}: relation {text} fails", self.id)))
            }
        };
        match &self.kind {
            PresetKind::Modular => {
                rel("S^2")?;
                rel("(ST)^3")
            }
            PresetKind::FiniteCyclic { n } => rel(&format!("t^{n}")),
            PresetKind::Sanov => {
                // Both generators are parabolic with distinct fixed points.
                let a = crate::isometry::classify(&self.gens[0]);
                let b = crate::isometry::classify(&self.gens[1]);
                if a.kind == crate::isometry::Kind::Parabolic && b.kind == crate::isometry::Kind::Parabolic && a.fixed_points != b.fixed_points {
                    Ok(())
                } else {
                    Err(Error::Precondition("sanov generators are not independent parabolics".into()))
                }
            }
            _ => Ok(()),
        }
    }
}

fn mat(a: i64, b: i64, c: i64, d: i64) -> Isometry {
    Isometry::Mobius(Mat2::from_ints(a, b, c, d).expect("preset matrix is unimodular"))
}

fn parse_entry(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("bad matrix entry {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d == BigInt::from(0) {
                return Err(bad());
            }
            Ok(BigRational::new(n, d))
        }
        None => Ok(BigRational::from(s.parse::<BigInt>().map_err(|_| bad())?)),
    }
}

/// Parses `a,b;c,d` (rows separated by `;`).
pub fn parse_matrix(s: &str) -> Result<Mat2> {
    let rows: Vec<&str> = s.split(';').collect();
    if rows.len() != 2 {
        return Err(Error::Parse(format!("matrix {s:?} must have two rows separated by ';'")));
    }
    let mut entries = Vec::with_capacity(4);
    for r in rows {
        let cols: Vec<&str> = r.split(',').collect();
        if cols.len() != 2 {
            return Err(Error::Parse(format!("matrix row {r:?} must have two entries")));
        }
        for c in cols {
            entries.push(parse_entry(c)?);
        }
    }
    let arr: [BigRational; 4] = entries.try_into().expect("four entries");
    Mat2::from_rationals(arr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_and_self_checks() {
        for name in ["free2", "free(3)", "modular", "sanov", "cyclic", "finite-cyclic(6)"] {
            let p = Preset::by_name(name).unwrap();
            p.self_check().unwrap();
        }
        assert!(matches!(Preset::by_name("nope"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn modular_words_evaluate_to_matrices() {
        let p = Preset::modular();
        let g = p.parse("TTST").unwrap();
        assert_eq!(g.iso, Isometry::Mobius(Mat2::from_ints(2, 1, 1, 1).unwrap()));
        assert_eq!(p.parse("(TTST)^3").unwrap().iso, g.iso.pow(3));
    }

    #[test]
    fn custom_matrices() {
        let p = Preset::custom(&["1,2;0,1", "1,0;2,1"]).unwrap();
        assert_eq!(p.gens, Preset::sanov().gens);
        assert!(matches!(parse_matrix("2,0;0,1"), Err(Error::NonUnimodular(_))));
        assert!(parse_matrix("1/2,0;0,2").is_ok());
        assert!(parse_matrix("1,2,3").is_err());
    }
}
