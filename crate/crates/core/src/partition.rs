//! Admissible partitions of the entry positions `[n]×[n]` into symmetric
//! blocks of equal size parameter `ν`.
//!
//! Positions are 0-based in memory; every rendered form (files, violation
//! messages) is 1-based.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{BufRead, Write};

use rand::seq::{index, SliceRandom};
use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::Position;

/// A symmetric set of positions.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Block {
    positions: Vec<Position>,
    upper: Vec<Position>,
}

impl Block {
    /// Rejects sets that are not closed under transposition.
    pub fn new(positions: impl IntoIterator<Item = Position>) -> Result<Self> {
        let set: BTreeSet<Position> = positions.into_iter().collect();
        if let Some(&(i, j)) = set.iter().find(|&&(i, j)| !set.contains(&(j, i))) {
            return Err(Error::InvalidPartition(PartitionViolation::Asymmetric { block: None, i, j }));
        }
        Ok(Self::from_sorted(set.into_iter().collect()))
    }

    /// Block generated by positions with `i ≤ j` and their mirrors.
    pub fn from_upper(upper: impl IntoIterator<Item = Position>) -> Self {
        let mut set = BTreeSet::new();
        for (i, j) in upper {
            set.insert((i, j));
            set.insert((j, i));
        }
        Self::from_sorted(set.into_iter().collect())
    }

    fn from_sorted(positions: Vec<Position>) -> Self {
        let upper = positions.iter().copied().filter(|&(i, j)| i <= j).collect();
        Self { positions, upper }
    }

    pub fn positions(&self) -> &[Position] {
        &self.positions
    }

    /// Positions with `i ≤ j`, one per free matrix entry.
    pub fn upper(&self) -> &[Position] {
        &self.upper
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn contains(&self, pos: Position) -> bool {
        self.positions.binary_search(&pos).is_ok()
    }

    /// `ν(B) = |B| + #{i : (i,i) ∈ B}`.
    pub fn nu(&self) -> usize {
        self.positions.len() + self.positions.iter().filter(|(i, j)| i == j).count()
    }
}

/// `ν(B)` of a block.
pub fn nu(block: &Block) -> usize {
    block.nu()
}

/// First violated admissibility condition, with a witness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PartitionViolation {
    Empty { block: usize },
    OutOfRange { block: usize, i: usize, j: usize },
    Asymmetric { block: Option<usize>, i: usize, j: usize },
    Uncovered { i: usize, j: usize },
    Overlap { i: usize, j: usize, first: usize, second: usize },
    UnequalNu { block: usize, nu: usize, expected: usize },
    Header(String),
}

impl fmt::Display for PartitionViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use PartitionViolation::*;
        match *self {
            Empty { block } => write!(f, "block {} is empty", block + 1),
            OutOfRange { block, i, j } => {
                write!(f, "block {} holds out-of-range position ({}, {})", block + 1, i + 1, j + 1)
            }
            Asymmetric { block, i, j } => {
                let owner = block.map(|b| format!("block {} ", b + 1)).unwrap_or_default();
                write!(f, "symmetry: {owner}contains ({}, {}) but not ({}, {})", i + 1, j + 1, j + 1, i + 1)
            }
            Uncovered { i, j } => write!(f, "coverage: position ({}, {}) is in no block", i + 1, j + 1),
            Overlap { i, j, first, second } => write!(
                f,
                "disjointness: position ({}, {}) is in blocks {} and {}",
                i + 1,
                j + 1,
                first + 1,
                second + 1
            ),
            UnequalNu { block, nu, expected } => {
                write!(f, "equal nu: block {} has nu = {nu}, block 1 has nu = {expected}", block + 1)
            }
            Header(ref msg) => write!(f, "header: {msg}"),
        }
    }
}

/// Checks raw position lists against the admissibility conditions in the
/// order range, symmetry, coverage, disjointness, equal `ν`.
pub fn validate_partition(n: usize, blocks: &[Vec<Position>]) -> std::result::Result<(), PartitionViolation> {
    for (b, block) in blocks.iter().enumerate() {
        if block.is_empty() {
            return Err(PartitionViolation::Empty { block: b });
        }
        if let Some(&(i, j)) = block.iter().find(|&&(i, j)| i >= n || j >= n) {
            return Err(PartitionViolation::OutOfRange { block: b, i, j });
        }
    }
    for (b, block) in blocks.iter().enumerate() {
        let set: BTreeSet<Position> = block.iter().copied().collect();
        if let Some(&(i, j)) = set.iter().find(|&&(i, j)| !set.contains(&(j, i))) {
            return Err(PartitionViolation::Asymmetric { block: Some(b), i, j });
        }
    }
    let mut owner: Vec<Option<usize>> = vec![None; n * n];
    let mut overlap = None;
    for (b, block) in blocks.iter().enumerate() {
        for &(i, j) in block {
            match owner[i * n + j] {
                Some(first) if overlap.is_none() && first != b => {
                    overlap = Some(PartitionViolation::Overlap { i, j, first, second: b })
                }
                Some(_) => {}
                None => owner[i * n + j] = Some(b),
            }
        }
    }
    if let Some(k) = owner.iter().position(Option::is_none) {
        return Err(PartitionViolation::Uncovered { i: k / n, j: k % n });
    }
    if let Some(v) = overlap {
        return Err(v);
    }
    let nu_of = |block: &Vec<Position>| {
        let set: BTreeSet<Position> = block.iter().copied().collect();
        set.len() + set.iter().filter(|(i, j)| i == j).count()
    };
    let expected = nu_of(&blocks[0]);
    for (b, block) in blocks.iter().enumerate().skip(1) {
        let nu = nu_of(block);
        if nu != expected {
            return Err(PartitionViolation::UnequalNu { block: b, nu, expected });
        }
    }
    Ok(())
}

/// Disjoint symmetric blocks covering `[n]×[n]`, all with the same `ν`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdmissiblePartition {
    n: usize,
    nu: usize,
    blocks: Vec<Block>,
    owner: Vec<u32>,
}

impl AdmissiblePartition {
    pub fn new(n: usize, blocks: Vec<Block>) -> Result<Self> {
        if n == 0 || blocks.is_empty() {
            return Err(Error::invalid("partition needs n >= 1 and at least one block"));
        }
        let raw: Vec<Vec<Position>> = blocks.iter().map(|b| b.positions().to_vec()).collect();
        validate_partition(n, &raw).map_err(Error::InvalidPartition)?;
        let mut owner = vec![0u32; n * n];
        for (b, block) in blocks.iter().enumerate() {
            for &(i, j) in block.positions() {
                owner[i * n + j] = b as u32;
            }
        }
        Ok(Self { n, nu: blocks[0].nu(), blocks, owner })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of blocks `m`.
    pub fn m(&self) -> usize {
        self.blocks.len()
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, b: usize) -> &Block {
        &self.blocks[b]
    }

    /// Index of the unique block containing `(i, j)`.
    #[inline]
    pub fn block_of(&self, i: usize, j: usize) -> usize {
        self.owner[i * self.n + j] as usize
    }

    /// Re-runs the admissibility checks.
    pub fn validate(&self) -> std::result::Result<(), PartitionViolation> {
        let raw: Vec<Vec<Position>> = self.blocks.iter().map(|b| b.positions().to_vec()).collect();
        validate_partition(self.n, &raw)
    }

    /// Union of the listed blocks.
    pub fn union_of(&self, blocks: &[usize]) -> Result<UnionSet> {
        let mut ids = blocks.to_vec();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != blocks.len() {
            return Err(Error::invalid("union blocks must be distinct"));
        }
        if let Some(&b) = ids.iter().find(|&&b| b >= self.m()) {
            return Err(Error::invalid(format!("block index {b} out of range")));
        }
        let mut mask = vec![false; self.n * self.n];
        for &b in &ids {
            for &(i, j) in self.blocks[b].positions() {
                mask[i * self.n + j] = true;
            }
        }
        Ok(UnionSet { n: self.n, blocks: ids, mask })
    }

    /// Uniform random ordering of the block indices. Its length-`k` prefixes
    /// are uniform on `A_k` and nested in `k`.
    pub fn random_order<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.m()).collect();
        order.shuffle(rng);
        order
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} {} {}\n", self.n, self.m(), self.nu);
        for block in &self.blocks {
            let cells: Vec<String> = block.positions().iter().map(|(i, j)| format!("{},{}", i + 1, j + 1)).collect();
            s.push_str(&cells.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    /// Parses the text form and validates it.
    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate().filter_map(|(k, l)| match l {
            Ok(l) if l.trim().is_empty() => None,
            other => Some((k + 1, other)),
        });
        let (hl, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty partition file".into() })?;
        let header = header?;
        let nums: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse { line: hl, msg: format!("bad header {header:?}") })?;
        let [n, m, nu] = nums[..] else {
            return Err(Error::Parse { line: hl, msg: "header must be \"n m nu\"".into() });
        };
        let mut raw = Vec::with_capacity(m);
        for (lineno, line) in lines {
            let line = line?;
            let mut block = Vec::new();
            for cell in line.split_whitespace() {
                let parsed = cell.split_once(',').and_then(|(a, b)| {
                    Some((a.trim().parse::<usize>().ok()?, b.trim().parse::<usize>().ok()?))
                });
                match parsed {
                    Some((i, j)) if i >= 1 && j >= 1 => block.push((i - 1, j - 1)),
                    _ => return Err(Error::Parse { line: lineno, msg: format!("bad position {cell:?}") }),
                }
            }
            raw.push(block);
        }
        if n == 0 {
            return Err(Error::Parse { line: hl, msg: "n must be positive".into() });
        }
        if raw.len() != m {
            return Err(Error::InvalidPartition(PartitionViolation::Header(format!(
                "declares m = {m} but lists {} blocks",
                raw.len()
            ))));
        }
        validate_partition(n, &raw).map_err(Error::InvalidPartition)?;
        let p = Self::new(n, raw.into_iter().map(|b| Block::new(b).expect("validated")).collect())?;
        if p.nu != nu {
            return Err(Error::InvalidPartition(PartitionViolation::Header(format!(
                "declares nu = {nu} but blocks have nu = {}",
                p.nu
            ))));
        }
        Ok(p)
    }

    pub fn from_text(s: &str) -> Result<Self> {
        Self::read_text(s.as_bytes())
    }
}

/// `B_entries`: one block per free entry, `{(i,j),(j,i)}` or `{(i,i)}`.
pub fn entries_partition(n: usize) -> Result<AdmissiblePartition> {
    let blocks = (0..n).flat_map(|i| (i..n).map(move |j| Block::from_upper([(i, j)]))).collect();
    AdmissiblePartition::new(n, blocks)
}

/// Blocks of `ν = 2·width²`: whole off-diagonal `width×width` tiles paired
/// with their mirror images first, then the remaining upper-triangle
/// positions taken along diagonals (offset `j − i`, then `i`) in runs of
/// `width²`. Feasible exactly when `width²` divides `n(n+1)/2`.
pub fn band_partition(n: usize, width: usize) -> Result<AdmissiblePartition> {
    if n == 0 || width == 0 {
        return Err(Error::invalid("band_partition needs n >= 1 and width >= 1"));
    }
    let w2 = width * width;
    if (n * (n + 1) / 2) % w2 != 0 {
        return Err(Error::InfeasibleTiling { n, width });
    }
    let tiles = n / width;
    let mut used = vec![false; n * n];
    let mut blocks = Vec::new();
    for ti in 0..tiles {
        for tj in ti + 1..tiles {
            let upper: Vec<Position> = (ti * width..(ti + 1) * width)
                .flat_map(|i| (tj * width..(tj + 1) * width).map(move |j| (i, j)))
                .collect();
            for &(i, j) in &upper {
                used[i * n + j] = true;
            }
            blocks.push(Block::from_upper(upper));
        }
    }
    let rest: Vec<Position> = (0..n)
        .flat_map(|d| (0..n - d).map(move |i| (i, i + d)))
        .filter(|&(i, j)| !used[i * n + j])
        .collect();
    for chunk in rest.chunks(w2) {
        blocks.push(Block::from_upper(chunk.iter().copied()));
    }
    AdmissiblePartition::new(n, blocks)
}

/// Union of `k` distinct blocks of a partition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnionSet {
    n: usize,
    blocks: Vec<usize>,
    mask: Vec<bool>,
}

impl UnionSet {
    /// Number of constituent blocks.
    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    #[inline]
    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.mask[i * self.n + j]
    }

    pub fn positions(&self) -> Vec<Position> {
        (0..self.n * self.n).filter(|&k| self.mask[k]).map(|k| (k / self.n, k % self.n)).collect()
    }

    pub fn dim(&self) -> usize {
        self.n
    }
}

/// `k` distinct blocks chosen uniformly without replacement.
pub fn sample_union<R: Rng + ?Sized>(p: &AdmissiblePartition, k: usize, rng: &mut R) -> Result<UnionSet> {
    if k > p.m() {
        return Err(Error::invalid(format!("k = {k} exceeds block count m = {}", p.m())));
    }
    let chosen = index::sample(rng, p.m(), k).into_vec();
    p.union_of(&chosen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedStream;

    fn sorted_blocks(p: &AdmissiblePartition) -> Vec<Block> {
        let mut b = p.blocks().to_vec();
        b.sort();
        b
    }

    #[test]
    fn nu_examples() {
        assert_eq!(Block::new([(0, 1), (1, 0)]).unwrap().nu(), 2);
        assert_eq!(Block::new([(0, 0)]).unwrap().nu(), 2);
        assert_eq!(Block::new([(0, 0), (0, 1), (1, 0)]).unwrap().nu(), 4);
        assert!(Block::new([(0, 1)]).is_err());
    }

    #[test]
    fn entries_partition_shape() {
        let p = entries_partition(2).unwrap();
        assert_eq!((p.m(), p.nu()), (3, 2));
        let expected = vec![
            Block::new([(0, 0)]).unwrap(),
            Block::new([(0, 1), (1, 0)]).unwrap(),
            Block::new([(1, 1)]).unwrap(),
        ];
        assert_eq!(sorted_blocks(&p), expected);
        let p10 = entries_partition(10).unwrap();
        assert_eq!(p10.m(), 55);
        assert_eq!(p10.blocks().iter().map(Block::nu).sum::<usize>(), 110);
        assert!(entries_partition(5).unwrap().validate().is_ok());
    }

    #[test]
    fn band_partition_cases() {
        for n in 1..8 {
            assert_eq!(sorted_blocks(&band_partition(n, 1).unwrap()), sorted_blocks(&entries_partition(n).unwrap()));
        }
        let p = band_partition(7, 2).unwrap();
        assert!(p.blocks().iter().all(|b| b.nu() == 8));
        assert_eq!(p.m(), 7);
        assert!(p.validate().is_ok());
        let p = band_partition(8, 2).unwrap();
        assert!(p.blocks().iter().all(|b| b.nu() == 8));
        assert!(matches!(band_partition(3, 2), Err(Error::InfeasibleTiling { n: 3, width: 2 })));
        assert!(matches!(band_partition(4, 2), Err(Error::InfeasibleTiling { .. })));
    }

    #[test]
    fn violation_reports() {
        let v = validate_partition(2, &[vec![(0, 0)], vec![(1, 1)]]).unwrap_err();
        assert_eq!(v, PartitionViolation::Uncovered { i: 0, j: 1 });
        assert!(v.to_string().contains("(1, 2)"));
        let v = validate_partition(2, &[vec![(0, 0), (1, 1)], vec![(0, 1), (1, 0)]]).unwrap_err();
        assert_eq!(v, PartitionViolation::UnequalNu { block: 1, nu: 2, expected: 4 });
        let v = validate_partition(2, &[vec![(0, 0), (0, 1)], vec![(1, 0), (1, 1)]]).unwrap_err();
        assert!(matches!(v, PartitionViolation::Asymmetric { block: Some(0), i: 0, j: 1 }));
        let v = validate_partition(1, &[vec![(0, 0)], vec![(0, 0)]]).unwrap_err();
        assert!(matches!(v, PartitionViolation::Overlap { .. }));
    }

    #[test]
    fn union_extremes_and_file_round_trip() {
        let p = entries_partition(3).unwrap();
        let mut rng = SeedStream::new(5, 0).rng();
        assert!(sample_union(&p, 0, &mut rng).unwrap().positions().is_empty());
        assert_eq!(sample_union(&p, 6, &mut rng).unwrap().positions().len(), 9);
        assert!(sample_union(&p, 7, &mut rng).is_err());
        let back = AdmissiblePartition::from_text(&p.to_text()).unwrap();
        assert_eq!(back, p);
        let bad = "2 2 2\n1,1\n2,2\n";
        assert!(matches!(AdmissiblePartition::from_text(bad), Err(Error::InvalidPartition(_))));
    }

    #[test]
    fn union_sampling_is_uniform_over_pairs() {
        let p = entries_partition(3).unwrap();
        let mut counts = std::collections::HashMap::new();
        let draws = 100_000;
        let mut rng = SeedStream::new(6, 0).rng();
        for _ in 0..draws {
            let u = sample_union(&p, 2, &mut rng).unwrap();
            *counts.entry(u.blocks().to_vec()).or_insert(0u64) += 1;
        }
        assert_eq!(counts.len(), 15);
        let q = 1.0 / 15.0;
        let se = (q * (1.0 - q) / draws as f64).sqrt();
        for c in counts.values() {
            assert!((*c as f64 / draws as f64 - q).abs() <= 4.0 * se);
        }
    }
}
