use std::fmt::Write as _;
use std::ops::Range;

use serde::Serialize;

use crate::error::ModelError;

/// Default ceiling on `q^|V_n|` for exhaustive enumeration.
pub const DEFAULT_CAP: u64 = 1_000_000;

const MAX_VERTICES: usize = 1 << 22;

/// The ball `V_n` of radius `n` in the Cayley tree of order `k`: the root has
/// `k + 1` successors, every other vertex `k`.
///
/// Vertices are numbered breadth-first, so `V_(n-1)` is a prefix of `V_n`
/// and the successors of each vertex are contiguous.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CayleyVolume {
    k: u32,
    n: u32,
    parent: Vec<Option<usize>>,
    /// `shell_start[m]..shell_start[m + 1]` is `W_m`.
    shell_start: Vec<usize>,
    /// Successors of `x` are `child_start[x]..child_start[x + 1]`.
    child_start: Vec<usize>,
    edges: Vec<(usize, usize)>,
}

impl CayleyVolume {
    pub fn new(k: u32, n: u32) -> Result<Self, ModelError> {
        if k < 1 {
            return Err(ModelError::InvalidVolume(
                "tree order k must be at least 1".into(),
            ));
        }
        if n < 1 {
            return Err(ModelError::InvalidVolume(
                "radius n must be at least 1 (a single vertex has no boundary law)".into(),
            ));
        }
        let mut shell_start = vec![0usize, 1];
        let mut width = 1usize;
        for m in 1..=n {
            let branching = if m == 1 { k + 1 } else { k } as usize;
            width = width
                .checked_mul(branching)
                .filter(|w| shell_start[m as usize] + w <= MAX_VERTICES)
                .ok_or_else(|| {
                    ModelError::InvalidVolume(format!("V_{n} for k = {k} has too many vertices"))
                })?;
            shell_start.push(shell_start[m as usize] + width);
        }
        let size = *shell_start.last().expect("nonempty");
        let mut parent = vec![None; size];
        let mut child_start = vec![0usize; size + 1];
        let mut edges = Vec::with_capacity(size - 1);
        let mut next = 1usize;
        for x in 0..size {
            child_start[x] = next.min(size);
            let depth = shell_start.partition_point(|&s| s <= x) - 1;
            if depth as u32 == n {
                continue;
            }
            let branching = if x == 0 { k + 1 } else { k } as usize;
            for c in next..next + branching {
                parent[c] = Some(x);
                edges.push((x, c));
            }
            next += branching;
        }
        child_start[size] = size;
        Ok(Self {
            k,
            n,
            parent,
            shell_start,
            child_start,
            edges,
        })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn radius(&self) -> u32 {
        self.n
    }

    /// `|V_n|`.
    pub fn size(&self) -> usize {
        self.parent.len()
    }

    /// `W_m` as a range of vertex indices.
    pub fn shell(&self, m: u32) -> Range<usize> {
        self.shell_start[m as usize]..self.shell_start[m as usize + 1]
    }

    /// `W_n`.
    pub fn boundary(&self) -> Range<usize> {
        self.shell(self.n)
    }

    /// `L_n`, as (parent, child) pairs.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// `S(x)`.
    pub fn successors(&self, x: usize) -> Range<usize> {
        self.child_start[x]..self.child_start[x + 1]
    }

    pub fn parent(&self, x: usize) -> Option<usize> {
        self.parent[x]
    }

    /// `q^|V_n|`, or `None` on overflow.
    pub fn configuration_count(&self, q: u32) -> Option<u64> {
        (q as u64).checked_pow(self.size() as u32)
    }

    pub fn check_cap(&self, q: u32, cap: u64) -> Result<u64, ModelError> {
        match self.configuration_count(q) {
            Some(c) if c <= cap => Ok(c),
            Some(c) => Err(ModelError::EnumerationCap {
                configs: c.to_string(),
                cap,
            }),
            None => Err(ModelError::EnumerationCap {
                configs: format!("{q}^{}", self.size()),
                cap,
            }),
        }
    }

    /// Human-readable dump of shells and successor lists.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "Cayley volume k={} n={}: |V|={} |L|={}",
            self.k,
            self.n,
            self.size(),
            self.edges.len()
        );
        for m in 0..=self.n {
            let r = self.shell(m);
            let _ = writeln!(
                out,
                "  W_{m}: {} vertices [{}..{})",
                r.len(),
                r.start,
                r.end
            );
        }
        for x in 0..self.size() {
            let s = self.successors(x);
            if !s.is_empty() {
                let _ = writeln!(out, "  S({x}) = {:?}", s.collect::<Vec<_>>());
            }
        }
        out
    }
}

/// Builds `V_n` and checks that `q^|V_n|` configurations fit under `cap`.
pub fn build_volume(k: u32, n: u32, q: u32, cap: u64) -> Result<CayleyVolume, ModelError> {
    let v = CayleyVolume::new(k, n)?;
    v.check_cap(q, cap)?;
    Ok(v)
}

/// A spin assignment on `V_n`, labels `0..q`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Configuration {
    spins: Vec<u8>,
}

impl Configuration {
    pub fn new(spins: Vec<u8>) -> Self {
        Self { spins }
    }

    /// Mixed-radix decoding with vertex 0 least significant, so the id of the
    /// restriction to `V_(n-1)` is `id mod q^|V_(n-1)|`.
    pub fn from_id(mut id: u64, q: u32, size: usize) -> Self {
        let q = q as u64;
        let spins = (0..size)
            .map(|_| {
                let s = (id % q) as u8;
                id /= q;
                s
            })
            .collect();
        Self { spins }
    }

    pub fn id(&self, q: u32) -> u64 {
        self.spins
            .iter()
            .rev()
            .fold(0u64, |acc, &s| acc * q as u64 + s as u64)
    }

    pub fn spins(&self) -> &[u8] {
        &self.spins
    }

    pub fn spin(&self, x: usize) -> usize {
        self.spins[x] as usize
    }

    /// Number of edges whose endpoints carry equal spins.
    pub fn monochromatic_edges(&self, volume: &CayleyVolume) -> usize {
        volume
            .edges()
            .iter()
            .filter(|(a, b)| self.spins[*a] == self.spins[*b])
            .count()
    }

    /// 1-based labels, e.g. `"1 3 2 2"`.
    pub fn render(&self) -> String {
        self.spins
            .iter()
            .map(|s| (s + 1).to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }
}
