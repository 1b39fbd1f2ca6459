use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Occupation numbers of every exponential component: all real-part components
/// first, then all imaginary-part components.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HierarchyIndex {
    pub counts: Vec<u32>,
}

impl HierarchyIndex {
    pub fn depth(&self) -> u32 {
        self.counts.iter().sum()
    }
}

fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

/// Number of multi-indices over `n` components with total depth `<= depth`.
pub fn hierarchy_size(n: usize, depth: usize) -> u128 {
    binomial((n + depth) as u64, depth as u64)
}

/// All admissible multi-indices under the total-depth truncation, with
/// neighbour tables.
///
/// Indices are stored as sorted component lists (a multiset per index) and
/// ordered by depth, then by their rank in the combinatorial number system.
/// Position 0 is the all-zero index.
#[derive(Debug, Clone)]
pub struct HierarchySpace {
    n_r: usize,
    n_i: usize,
    depth: usize,
    /// Start of each depth level; `level_offset[depth + 1]` is the total count.
    level_offset: Vec<usize>,
    /// `binom[i][m] = C(m, i)` for the ranking.
    binom: Vec<Vec<u64>>,
    members: Vec<u32>,
    members_start: Vec<usize>,
    /// Per index, the distinct components present with multiplicity and the
    /// position of the index with that component lowered.
    down: Vec<Down>,
    down_start: Vec<usize>,
    /// Row-major `[position][component]` table of raised indices for positions
    /// below the deepest level.
    up: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Down {
    pub component: u32,
    pub count: u32,
    pub position: u32,
}

impl HierarchySpace {
    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn n_i(&self) -> usize {
        self.n_i
    }

    pub fn components(&self) -> usize {
        self.n_r + self.n_i
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.members_start.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of positions whose depth is below the truncation depth.
    pub fn shallow_len(&self) -> usize {
        self.level_offset[self.depth]
    }

    /// Sorted component list of the index at `pos`.
    pub fn members(&self, pos: usize) -> &[u32] {
        &self.members[self.members_start[pos]..self.members_start[pos + 1]]
    }

    pub fn downs(&self, pos: usize) -> &[Down] {
        &self.down[self.down_start[pos]..self.down_start[pos + 1]]
    }

    /// Raised neighbours of `pos`, indexed by component; `None` at the deepest level.
    pub fn ups(&self, pos: usize) -> Option<&[u32]> {
        if pos < self.shallow_len() {
            let n = self.components();
            Some(&self.up[pos * n..(pos + 1) * n])
        } else {
            None
        }
    }

    pub fn index(&self, pos: usize) -> HierarchyIndex {
        let mut counts = vec![0u32; self.components()];
        for &k in self.members(pos) {
            counts[k as usize] += 1;
        }
        HierarchyIndex { counts }
    }

    pub fn position(&self, idx: &HierarchyIndex) -> Option<usize> {
        if idx.counts.len() != self.components() {
            return None;
        }
        let d = idx.depth() as usize;
        if d > self.depth {
            return None;
        }
        let mut sorted = Vec::with_capacity(d);
        for (k, &c) in idx.counts.iter().enumerate() {
            sorted.extend(std::iter::repeat_n(k as u32, c as usize));
        }
        Some(self.rank(&sorted))
    }

    pub fn up_position(&self, pos: usize, component: usize) -> Option<usize> {
        self.ups(pos).map(|u| u[component] as usize)
    }

    pub fn down_position(&self, pos: usize, component: usize) -> Option<usize> {
        self.downs(pos)
            .iter()
            .find(|d| d.component as usize == component)
            .map(|d| d.position as usize)
    }

    fn rank(&self, sorted: &[u32]) -> usize {
        let mut r = self.level_offset[sorted.len()];
        for (i, &k) in sorted.iter().enumerate() {
            r += self.binom[i + 1][k as usize + i] as usize;
        }
        r
    }
}

/// Enumerates the hierarchy for `n_r + n_i` components truncated at total depth
/// `n_c`, refusing when the count exceeds `max_ados`.
pub fn enumerate_hierarchy(n_r: usize, n_i: usize, n_c: usize, max_ados: usize) -> Result<HierarchySpace> {
    let n = n_r + n_i;
    if n == 0 {
        return Err(Error::invalid("n_r + n_i", "need at least one component"));
    }
    if n_c == 0 {
        return Err(Error::invalid("depth", "must be at least 1"));
    }
    let count = hierarchy_size(n, n_c);
    if count > max_ados as u128 || count > u32::MAX as u128 {
        return Err(Error::Capacity {
            count,
            budget: max_ados,
        });
    }
    let total = count as usize;

    let max_m = n + n_c;
    let binom: Vec<Vec<u64>> = (0..=n_c)
        .map(|i| (0..=max_m).map(|m| binomial(m as u64, i as u64) as u64).collect())
        .collect();
    let mut level_offset = vec![0usize; n_c + 2];
    for d in 0..=n_c {
        level_offset[d + 1] = level_offset[d] + binomial((n + d - 1) as u64, d as u64) as usize;
    }

    let mut space = HierarchySpace {
        n_r,
        n_i,
        depth: n_c,
        level_offset,
        binom,
        members: Vec::new(),
        members_start: Vec::new(),
        down: Vec::new(),
        down_start: Vec::new(),
        up: Vec::new(),
    };

    // Members, laid out by position.
    let mut members = vec![0u32; (0..=n_c).map(|d| d * (space.level_offset[d + 1] - space.level_offset[d])).sum()];
    let mut members_start = vec![0usize; total + 1];
    for d in 0..=n_c {
        let base = space.level_offset[d];
        let level_len = space.level_offset[d + 1] - base;
        let start = members_start[base];
        for j in 0..=level_len {
            members_start[base + j] = start + j * d;
        }
    }
    for d in 1..=n_c {
        let mut cur = vec![0u32; d];
        loop {
            let pos = space.rank(&cur);
            members[members_start[pos]..members_start[pos] + d].copy_from_slice(&cur);
            // Next non-decreasing sequence over 0..n.
            let mut i = d;
            while i > 0 && cur[i - 1] as usize == n - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            let v = cur[i - 1] + 1;
            for c in cur[i - 1..].iter_mut() {
                *c = v;
            }
        }
    }
    space.members = members;
    space.members_start = members_start;

    let mut down = Vec::with_capacity(total * n_c);
    let mut down_start = Vec::with_capacity(total + 1);
    let mut scratch = Vec::with_capacity(n_c);
    for pos in 0..total {
        down_start.push(down.len());
        let m = space.members(pos);
        let mut i = 0;
        while i < m.len() {
            let k = m[i];
            let mut j = i;
            while j < m.len() && m[j] == k {
                j += 1;
            }
            scratch.clear();
            scratch.extend_from_slice(&m[..i]);
            scratch.extend_from_slice(&m[i + 1..]);
            down.push(Down {
                component: k,
                count: (j - i) as u32,
                position: space.rank(&scratch) as u32,
            });
            i = j;
        }
    }
    down_start.push(down.len());
    space.down = down;
    space.down_start = down_start;

    let shallow = space.shallow_len();
    let mut up = vec![0u32; shallow * n];
    for pos in 0..shallow {
        let m = space.members(pos).to_vec();
        for k in 0..n as u32 {
            scratch.clear();
            let at = m.partition_point(|&x| x <= k);
            scratch.extend_from_slice(&m[..at]);
            scratch.push(k);
            scratch.extend_from_slice(&m[at..]);
            up[pos * n + k as usize] = space.rank(&scratch) as u32;
        }
    }
    space.up = up;
    Ok(space)
}
