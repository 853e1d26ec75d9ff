//! Per-epoch permutation schedules: IGD, Single Shuffle, Random Reshuffle and
//! the FlipFlop wrapper.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::rng::Xoshiro256;
use crate::{Error, Result};

/// A bijection on `0..n`. Displayed and serialized 1-based.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    /// Builds from 0-based indices, checking bijectivity with a bitmap.
    pub fn from_zero_based(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        let mut seen = vec![false; n];
        for &i in &order {
            if i >= n || seen[i] {
                return Err(Error::InvalidPermutation(format!(
                    "{:?} is not a permutation of 0..{n}",
                    order
                )));
            }
            seen[i] = true;
        }
        Ok(Permutation(order))
    }

    pub fn from_one_based(order: &[usize]) -> Result<Self> {
        if order.contains(&0) {
            return Err(Error::InvalidPermutation("1-based index 0".into()));
        }
        Self::from_zero_based(order.iter().map(|i| i - 1).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.0.iter().map(|i| i + 1).collect()
    }

    pub fn reversed(&self) -> Self {
        let mut v = self.0.clone();
        v.reverse();
        Permutation(v)
    }

    /// Advances to the next permutation in lexicographic order.
    /// Returns `false` (leaving `self` untouched) at the last one.
    pub fn advance_lexicographic(&mut self) -> bool {
        let v = &mut self.0;
        if v.len() < 2 {
            return false;
        }
        let mut i = v.len() - 1;
        while i > 0 && v[i - 1] >= v[i] {
            i -= 1;
        }
        if i == 0 {
            return false;
        }
        let mut j = v.len() - 1;
        while v[j] <= v[i - 1] {
            j -= 1;
        }
        v.swap(i - 1, j);
        v[i..].reverse();
        true
    }

    /// All permutations of `0..n` in lexicographic order.
    pub fn all(n: usize) -> Vec<Permutation> {
        let mut out = Vec::new();
        let mut p = Permutation::identity(n);
        loop {
            out.push(p.clone());
            if !p.advance_lexicographic() {
                return out;
            }
        }
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, ")")
    }
}

impl Serialize for Permutation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_one_based().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Permutation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(d)?;
        Permutation::from_one_based(&v).map_err(serde::de::Error::custom)
    }
}

/// Uniform random permutation by Fisher–Yates, last index downward.
pub fn shuffle(rng: &mut Xoshiro256, n: usize) -> Permutation {
    let mut v: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.below(i as u64 + 1) as usize;
        v.swap(i, j);
    }
    Permutation(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseOrder {
    Igd,
    SingleShuffle,
    RandomReshuffle,
}

impl BaseOrder {
    pub fn short_name(self) -> &'static str {
        match self {
            BaseOrder::Igd => "igd",
            BaseOrder::SingleShuffle => "ss",
            BaseOrder::RandomReshuffle => "rr",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "igd" => Ok(BaseOrder::Igd),
            "ss" | "single_shuffle" => Ok(BaseOrder::SingleShuffle),
            "rr" | "random_reshuffle" => Ok(BaseOrder::RandomReshuffle),
            other => Err(Error::InvalidParameter {
                name: "algo",
                reason: format!("unknown strategy '{other}' (expected igd, ss or rr)"),
            }),
        }
    }
}

/// Strategy label such as `rr` or `ff-rr`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StrategySpec {
    pub base: BaseOrder,
    pub flipflop: bool,
}

impl StrategySpec {
    pub fn new(base: BaseOrder, flipflop: bool) -> Self {
        Self { base, flipflop }
    }

    pub fn label(&self) -> String {
        if self.flipflop {
            format!("ff-{}", self.base.short_name())
        } else {
            self.base.short_name().to_string()
        }
    }

    /// Parses `igd`, `ss`, `rr`, optionally prefixed by `ff-`.
    pub fn parse(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        match lower.strip_prefix("ff-") {
            Some(rest) => Ok(Self::new(BaseOrder::parse(rest)?, true)),
            None => Ok(Self::new(BaseOrder::parse(&lower)?, false)),
        }
    }
}

impl fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Stateful per-epoch permutation source.
///
/// Every base rule draws a permutation at construction (so SS, RR and the
/// FlipFlop variants consume the stream identically); RR redraws on every
/// epoch after the first, and with FlipFlop the even epochs are overwritten
/// by the reverse of the preceding epoch.
#[derive(Debug, Clone)]
pub struct PermutationStrategy {
    spec: StrategySpec,
    n: usize,
    seed: u64,
    rng: Xoshiro256,
    initial: Permutation,
    previous: Option<Permutation>,
    next_epoch: usize,
}

impl PermutationStrategy {
    pub fn new(base: BaseOrder, flipflop: bool, seed: u64, n: usize) -> Result<Self> {
        Self::from_spec(StrategySpec::new(base, flipflop), seed, n)
    }

    pub fn from_spec(spec: StrategySpec, seed: u64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                reason: "need at least one component".into(),
            });
        }
        let mut rng = Xoshiro256::seed_from_u64(seed);
        let initial = shuffle(&mut rng, n);
        Ok(Self {
            spec,
            n,
            seed,
            rng,
            initial,
            previous: None,
            next_epoch: 1,
        })
    }

    pub fn spec(&self) -> StrategySpec {
        self.spec
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Permutation for epoch `k` (1-based). Epochs must be queried in order.
    pub fn next_permutation(&mut self, k: usize) -> Result<Permutation> {
        if k != self.next_epoch {
            return Err(Error::EpochOutOfOrder {
                expected: self.next_epoch,
                got: k,
            });
        }
        let mut sigma = match self.spec.base {
            BaseOrder::Igd => Permutation::identity(self.n),
            BaseOrder::SingleShuffle => self.initial.clone(),
            BaseOrder::RandomReshuffle => {
                if k == 1 {
                    self.initial.clone()
                } else {
                    shuffle(&mut self.rng, self.n)
                }
            }
        };
        if self.spec.flipflop && k.is_multiple_of(2) {
            if let Some(prev) = &self.previous {
                sigma = prev.reversed();
            }
        }
        self.previous = Some(sigma.clone());
        self.next_epoch += 1;
        Ok(sigma)
    }

    /// The first `epochs` permutations of a fresh strategy.
    pub fn sequence(
        spec: StrategySpec,
        seed: u64,
        n: usize,
        epochs: usize,
    ) -> Result<Vec<Permutation>> {
        let mut s = Self::from_spec(spec, seed, n)?;
        (1..=epochs).map(|k| s.next_permutation(k)).collect()
    }
}
