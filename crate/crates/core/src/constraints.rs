//! Independence systems: uniform and partition matroids, matroid
//! intersections (p-extendible), and overlapping group caps (p-system).

use crate::error::{Error, Result};
use crate::oracle::{ElementId, IndependenceSystem, SolutionSet};

/// Exact rank for group caps is computed by enumeration up to this size.
pub const EXACT_RANK_LIMIT: usize = 20;

fn check_ground(n: usize, set: &[ElementId]) -> bool {
    set.iter().all(|e| e.index() < n)
}

/// Every subset is feasible.
#[derive(Clone, Debug)]
pub struct Unconstrained {
    n: usize,
}

impl Unconstrained {
    pub fn new(n: usize) -> Self {
        Unconstrained { n }
    }
}

impl IndependenceSystem for Unconstrained {
    fn ground_size(&self) -> usize {
        self.n
    }
    fn is_feasible(&self, set: &[ElementId]) -> bool {
        check_ground(self.n, set)
    }
    fn p(&self) -> usize {
        1
    }
    fn rank_bound(&self) -> usize {
        self.n
    }
    fn is_extendible(&self) -> bool {
        true
    }
    fn extensions(&self, _base: &SolutionSet, candidates: &[ElementId]) -> Vec<bool> {
        vec![true; candidates.len()]
    }
}

/// `|S| ≤ k`.
#[derive(Clone, Debug)]
pub struct UniformMatroid {
    n: usize,
    k: usize,
}

impl UniformMatroid {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        Ok(UniformMatroid { n, k })
    }

    pub fn cap(&self) -> usize {
        self.k
    }
}

impl IndependenceSystem for UniformMatroid {
    fn ground_size(&self) -> usize {
        self.n
    }
    fn is_feasible(&self, set: &[ElementId]) -> bool {
        set.len() <= self.k && check_ground(self.n, set)
    }
    fn p(&self) -> usize {
        1
    }
    fn rank_bound(&self) -> usize {
        self.k.min(self.n)
    }
    fn is_extendible(&self) -> bool {
        true
    }
    fn extensions(&self, base: &SolutionSet, candidates: &[ElementId]) -> Vec<bool> {
        candidates
            .iter()
            .map(|&e| base.len() + usize::from(!base.contains(e)) <= self.k)
            .collect()
    }
}

/// At most `caps[b]` elements from each block `b`; elements outside every
/// block are unconstrained.
#[derive(Clone, Debug)]
pub struct PartitionMatroid {
    block_of: Vec<Option<u32>>,
    caps: Vec<usize>,
    block_sizes: Vec<usize>,
}

impl PartitionMatroid {
    pub fn new(n: usize, block_of: Vec<Option<usize>>, caps: Vec<usize>) -> Result<Self> {
        if block_of.len() != n {
            return Err(Error::InvalidConstraint(format!(
                "block assignment has {} entries for {n} elements",
                block_of.len()
            )));
        }
        let mut block_sizes = vec![0; caps.len()];
        for (e, b) in block_of.iter().enumerate() {
            if let Some(b) = *b {
                if b >= caps.len() {
                    return Err(Error::InvalidConstraint(format!(
                        "element {e} assigned to block {b}, but only {} caps given",
                        caps.len()
                    )));
                }
                block_sizes[b] += 1;
            }
        }
        Ok(PartitionMatroid {
            block_of: block_of.into_iter().map(|b| b.map(|b| b as u32)).collect(),
            caps,
            block_sizes,
        })
    }

    /// Builds from explicit disjoint blocks.
    pub fn from_blocks(n: usize, blocks: &[Vec<usize>], caps: Vec<usize>) -> Result<Self> {
        if blocks.len() != caps.len() {
            return Err(Error::InvalidConstraint(format!(
                "{} blocks but {} caps",
                blocks.len(),
                caps.len()
            )));
        }
        let mut block_of = vec![None; n];
        for (b, block) in blocks.iter().enumerate() {
            for &e in block {
                if e >= n {
                    return Err(Error::InvalidConstraint(format!("block {b} contains {e} >= n = {n}")));
                }
                if block_of[e].replace(b).is_some() {
                    return Err(Error::InvalidConstraint(format!("element {e} appears in two blocks")));
                }
            }
        }
        Self::new(n, block_of, caps)
    }

    pub fn caps(&self) -> &[usize] {
        &self.caps
    }

    pub fn block_of(&self, e: ElementId) -> Option<usize> {
        self.block_of.get(e.index()).copied().flatten().map(|b| b as usize)
    }

    fn counts(&self, set: &[ElementId]) -> Vec<usize> {
        let mut counts = vec![0; self.caps.len()];
        for &e in set {
            if let Some(b) = self.block_of[e.index()] {
                counts[b as usize] += 1;
            }
        }
        counts
    }
}

impl IndependenceSystem for PartitionMatroid {
    fn ground_size(&self) -> usize {
        self.block_of.len()
    }
    fn is_feasible(&self, set: &[ElementId]) -> bool {
        check_ground(self.block_of.len(), set) && self.counts(set).iter().zip(&self.caps).all(|(c, cap)| c <= cap)
    }
    fn p(&self) -> usize {
        1
    }
    fn rank_bound(&self) -> usize {
        let free = self.block_of.iter().filter(|b| b.is_none()).count();
        free + self
            .caps
            .iter()
            .zip(&self.block_sizes)
            .map(|(&cap, &size)| cap.min(size))
            .sum::<usize>()
    }
    fn is_extendible(&self) -> bool {
        true
    }
    fn extensions(&self, base: &SolutionSet, candidates: &[ElementId]) -> Vec<bool> {
        let counts = self.counts(base.members());
        let base_ok = counts.iter().zip(&self.caps).all(|(c, cap)| c <= cap);
        candidates
            .iter()
            .map(|&e| {
                if !base_ok {
                    return false;
                }
                if base.contains(e) {
                    return true;
                }
                match self.block_of[e.index()] {
                    Some(b) => counts[b as usize] < self.caps[b as usize],
                    None => true,
                }
            })
            .collect()
    }
}

/// A member of a [`MatroidIntersection`].
#[derive(Clone, Debug)]
pub enum Matroid {
    Uniform(UniformMatroid),
    Partition(PartitionMatroid),
}

impl Matroid {
    fn inner(&self) -> &dyn IndependenceSystem {
        match self {
            Matroid::Uniform(m) => m,
            Matroid::Partition(m) => m,
        }
    }
}

impl From<UniformMatroid> for Matroid {
    fn from(m: UniformMatroid) -> Self {
        Matroid::Uniform(m)
    }
}

impl From<PartitionMatroid> for Matroid {
    fn from(m: PartitionMatroid) -> Self {
        Matroid::Partition(m)
    }
}

/// Sets independent in every member matroid; k-extendible for k members.
#[derive(Clone, Debug)]
pub struct MatroidIntersection {
    n: usize,
    members: Vec<Matroid>,
}

impl MatroidIntersection {
    pub fn new(members: Vec<Matroid>) -> Result<Self> {
        let Some(first) = members.first() else {
            return Err(Error::InvalidConstraint(
                "intersection needs at least one matroid".into(),
            ));
        };
        let n = first.inner().ground_size();
        if let Some(i) = members.iter().position(|m| m.inner().ground_size() != n) {
            return Err(Error::InvalidConstraint(format!(
                "member {i} has a different ground set"
            )));
        }
        Ok(MatroidIntersection { n, members })
    }

    pub fn members(&self) -> &[Matroid] {
        &self.members
    }
}

impl IndependenceSystem for MatroidIntersection {
    fn ground_size(&self) -> usize {
        self.n
    }
    fn is_feasible(&self, set: &[ElementId]) -> bool {
        self.members.iter().all(|m| m.inner().is_feasible(set))
    }
    fn p(&self) -> usize {
        self.members.len()
    }
    fn rank_bound(&self) -> usize {
        self.members
            .iter()
            .map(|m| m.inner().rank_bound())
            .min()
            .unwrap_or(self.n)
    }
    fn is_extendible(&self) -> bool {
        true
    }
    fn extensions(&self, base: &SolutionSet, candidates: &[ElementId]) -> Vec<bool> {
        let mut out = vec![true; candidates.len()];
        for m in &self.members {
            for (o, ok) in out.iter_mut().zip(m.inner().extensions(base, candidates)) {
                *o &= ok;
            }
        }
        out
    }
}

/// `{S : |S ∩ V_i| ≤ k_i for all i}` over possibly overlapping groups `V_i`.
///
/// `p` is estimated as the number of groups larger than their cap (at least 1).
#[derive(Clone, Debug)]
pub struct GroupCapSystem {
    n: usize,
    groups: Vec<Vec<ElementId>>,
    caps: Vec<usize>,
    element_groups: Vec<Vec<u32>>,
    p: usize,
    rank_bound: usize,
}

impl GroupCapSystem {
    pub fn new(n: usize, groups: Vec<Vec<usize>>, caps: Vec<usize>) -> Result<Self> {
        if groups.len() != caps.len() {
            return Err(Error::InvalidConstraint(format!(
                "{} groups but {} caps",
                groups.len(),
                caps.len()
            )));
        }
        let mut element_groups = vec![Vec::new(); n];
        let mut clean = Vec::with_capacity(groups.len());
        for (g, mut group) in groups.into_iter().enumerate() {
            group.sort_unstable();
            group.dedup();
            for &e in &group {
                if e >= n {
                    return Err(Error::InvalidConstraint(format!("group {g} contains {e} >= n = {n}")));
                }
                element_groups[e].push(g as u32);
            }
            clean.push(group.into_iter().map(ElementId::from).collect::<Vec<_>>());
        }
        let mut sys = GroupCapSystem {
            n,
            groups: clean,
            caps,
            element_groups,
            p: 1,
            rank_bound: n,
        };
        sys.p = sys.estimate_p();
        sys.rank_bound = sys.compute_rank_bound();
        Ok(sys)
    }

    pub fn groups(&self) -> &[Vec<ElementId>] {
        &self.groups
    }

    pub fn caps(&self) -> &[usize] {
        &self.caps
    }

    /// Number of groups whose size exceeds their cap, floored at 1.
    pub fn estimate_p(&self) -> usize {
        self.groups
            .iter()
            .zip(&self.caps)
            .filter(|(g, &cap)| g.len() > cap)
            .count()
            .max(1)
    }

    fn counts(&self, set: &[ElementId]) -> Vec<usize> {
        let mut counts = vec![0; self.caps.len()];
        for &e in set {
            for &g in &self.element_groups[e.index()] {
                counts[g as usize] += 1;
            }
        }
        counts
    }

    /// Size of the maximal feasible set built by scanning elements in order.
    fn greedy_fill(&self) -> usize {
        let mut counts = vec![0; self.caps.len()];
        let mut size = 0;
        for groups in &self.element_groups {
            if groups.iter().all(|&g| counts[g as usize] < self.caps[g as usize]) {
                groups.iter().for_each(|&g| counts[g as usize] += 1);
                size += 1;
            }
        }
        size
    }

    fn exact_rank(&self) -> usize {
        let n = self.n;
        let mut best = 0;
        for mask in 0u32..(1u32 << n) {
            let size = mask.count_ones() as usize;
            if size <= best {
                continue;
            }
            let set: Vec<ElementId> = (0..n).filter(|i| mask >> i & 1 == 1).map(ElementId::from).collect();
            if self.is_feasible(&set) {
                best = size;
            }
        }
        best
    }

    fn compute_rank_bound(&self) -> usize {
        if self.n <= EXACT_RANK_LIMIT {
            self.exact_rank()
        } else {
            (self.greedy_fill() * self.p).min(self.n)
        }
    }
}

impl IndependenceSystem for GroupCapSystem {
    fn ground_size(&self) -> usize {
        self.n
    }
    fn is_feasible(&self, set: &[ElementId]) -> bool {
        check_ground(self.n, set) && self.counts(set).iter().zip(&self.caps).all(|(c, cap)| c <= cap)
    }
    fn p(&self) -> usize {
        self.p
    }
    fn rank_bound(&self) -> usize {
        self.rank_bound
    }
    fn extensions(&self, base: &SolutionSet, candidates: &[ElementId]) -> Vec<bool> {
        let counts = self.counts(base.members());
        let base_ok = counts.iter().zip(&self.caps).all(|(c, cap)| c <= cap);
        candidates
            .iter()
            .map(|&e| {
                base_ok
                    && (base.contains(e)
                        || self.element_groups[e.index()]
                            .iter()
                            .all(|&g| counts[g as usize] < self.caps[g as usize]))
            })
            .collect()
    }
}
