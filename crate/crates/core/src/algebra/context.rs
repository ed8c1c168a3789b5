use std::collections::HashMap;
use std::sync::Arc;

use crate::degree::{canonical_order, Degree};
use crate::error::{Error, Result};

pub const MAX_GENERATORS: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generator {
    pub name: String,
    pub degree: Degree,
    /// Contribution of one factor to the truncation order.
    pub weight: u32,
}

/// Generator table, grading rank and truncation order of a formal algebra.
///
/// Terms of weighted total degree `>= trunc` are dropped by every operation.
#[derive(Debug)]
pub struct AlgebraContext {
    n: usize,
    gens: Vec<Generator>,
    trunc: u32,
    index: HashMap<String, usize>,
    odd_mask: u64,
    pair_mask: Vec<u64>,
}

impl PartialEq for AlgebraContext {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.trunc == other.trunc && self.gens == other.gens
    }
}

impl Eq for AlgebraContext {}

pub type Ctx = Arc<AlgebraContext>;

impl AlgebraContext {
    pub fn new(n: usize, gens: &[(&str, Degree)], trunc: u32) -> Result<Ctx> {
        let gens = gens
            .iter()
            .map(|(name, degree)| Generator {
                name: name.to_string(),
                degree: *degree,
                weight: 1,
            })
            .collect();
        AlgebraContext::from_generators(n, gens, trunc)
    }

    /// Builds a context; generators are stably sorted by canonical degree order.
    pub fn from_generators(n: usize, mut gens: Vec<Generator>, trunc: u32) -> Result<Ctx> {
        canonical_order(n)?;
        if trunc == 0 {
            return Err(Error::Config("truncation order must be at least 1".into()));
        }
        if gens.len() > MAX_GENERATORS {
            return Err(Error::Config(format!(
                "{} generators exceed the limit of {MAX_GENERATORS}",
                gens.len()
            )));
        }
        for g in &gens {
            if g.degree.rank() != n {
                return Err(Error::Dimension(format!(
                    "generator {} has degree {} of rank {}, context rank is {n}",
                    g.name,
                    g.degree,
                    g.degree.rank()
                )));
            }
            if g.name.is_empty() {
                return Err(Error::Config("empty generator name".into()));
            }
        }
        gens.sort_by(|a, b| a.degree.cmp(&b.degree));
        let mut index = HashMap::new();
        for (i, g) in gens.iter().enumerate() {
            if index.insert(g.name.clone(), i).is_some() {
                return Err(Error::Config(format!("duplicate generator {}", g.name)));
            }
        }
        let odd_mask = gens
            .iter()
            .enumerate()
            .filter(|(_, g)| g.degree.is_odd())
            .fold(0u64, |m, (i, _)| m | 1 << i);
        let pair_mask = gens
            .iter()
            .map(|gj| {
                gens.iter()
                    .enumerate()
                    .filter(|(_, gi)| gi.degree.dot(&gj.degree) == 1)
                    .fold(0u64, |m, (i, _)| m | 1 << i)
            })
            .collect();
        Ok(Arc::new(AlgebraContext {
            n,
            gens,
            trunc,
            index,
            odd_mask,
            pair_mask,
        }))
    }

    /// Same generators with a different truncation order.
    pub fn with_trunc(&self, trunc: u32) -> Result<Ctx> {
        AlgebraContext::from_generators(self.n, self.gens.clone(), trunc)
    }

    pub fn rank(&self) -> usize {
        self.n
    }

    pub fn trunc(&self) -> u32 {
        self.trunc
    }

    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    pub fn generators(&self) -> &[Generator] {
        &self.gens
    }

    pub fn generator(&self, i: usize) -> &Generator {
        &self.gens[i]
    }

    pub fn degree(&self, i: usize) -> Degree {
        self.gens[i].degree
    }

    pub fn name(&self, i: usize) -> &str {
        &self.gens[i].name
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownGenerator(name.to_string()))
    }

    pub fn is_odd(&self, i: usize) -> bool {
        self.odd_mask >> i & 1 == 1
    }

    pub(crate) fn odd_mask(&self) -> u64 {
        self.odd_mask
    }

    /// Bit `i` set iff ⟨deg i, deg j⟩ = 1.
    pub(crate) fn pair_mask(&self, j: usize) -> u64 {
        self.pair_mask[j]
    }

    /// Number of generators per degree, listed in canonical degree order.
    pub fn signature(&self) -> Vec<(Degree, usize)> {
        canonical_order(self.n)
            .expect("rank validated at construction")
            .into_iter()
            .map(|d| (d, self.gens.iter().filter(|g| g.degree == d).count()))
            .collect()
    }

    /// True when every generator is nilpotent, so the algebra is finite-dimensional.
    pub fn purely_odd(&self) -> bool {
        self.gens.iter().all(|g| g.degree.is_odd())
    }

    pub fn zero_degree(&self) -> Degree {
        Degree::zero(self.n)
    }
}
