//! Reference implementations for tests. Goods are plain `usize` ids in
//! sorted vectors, valuations are re-read from their specs, and nothing
//! here goes through the crate's bundles, cuts or checkers.

#![allow(dead_code)]

use efx_core::{AgentId, Allocation, Instance, ValuationSpec};

pub struct Reference {
    pub n: usize,
    pub m: usize,
    ends: Vec<[usize; 2]>,
    specs: Vec<ValuationSpec>,
}

impl Reference {
    pub fn new(instance: &Instance) -> Self {
        Reference {
            n: instance.agent_count(),
            m: instance.good_count(),
            ends: instance
                .goods()
                .iter()
                .map(|g| [g.endpoints[0].index(), g.endpoints[1].index()])
                .collect(),
            specs: instance.valuations().iter().map(|v| v.to_spec()).collect(),
        }
    }

    pub fn incident(&self, a: usize) -> Vec<usize> {
        (0..self.m).filter(|&g| self.ends[g].contains(&a)).collect()
    }

    pub fn value(&self, a: usize, goods: &[usize]) -> u64 {
        let local: Vec<usize> = goods
            .iter()
            .copied()
            .filter(|&g| self.ends[g].contains(&a))
            .collect();
        match &self.specs[a] {
            ValuationSpec::Additive { weights } => local
                .iter()
                .map(|&g| weights.get(&efx_core::GoodId(g)).copied().unwrap_or(0))
                .sum(),
            ValuationSpec::TransformedAdditive { weights, transform } => {
                let w: u64 = local
                    .iter()
                    .map(|&g| weights.get(&efx_core::GoodId(g)).copied().unwrap_or(0))
                    .sum();
                transform[w as usize]
            }
            ValuationSpec::MonotoneTable { table } => {
                let inc = self.incident(a);
                let mask: usize = local
                    .iter()
                    .map(|g| 1usize << inc.iter().position(|x| x == g).unwrap())
                    .fold(0, |acc, b| acc | b);
                table[mask]
            }
        }
    }

    /// `Some(g)` if `i` strongly envies the holder of `other`, witnessed by `g`.
    pub fn strong_envy(&self, i: usize, own: &[usize], other: &[usize]) -> Option<usize> {
        let base = self.value(i, own);
        other.iter().copied().find(|&g| {
            let rest: Vec<usize> = other.iter().copied().filter(|&h| h != g).collect();
            self.value(i, &rest) > base
        })
    }

    pub fn is_efx(&self, bundles: &[Vec<usize>]) -> bool {
        (0..self.n).all(|i| {
            (0..self.n)
                .filter(|&j| j != i)
                .all(|j| self.strong_envy(i, &bundles[i], &bundles[j]).is_none())
        })
    }

    /// Every complete EFX allocation, as owner vectors.
    pub fn efx_owner_vectors(&self) -> Vec<Vec<usize>> {
        let total = (self.n as u64).pow(self.m as u32);
        let mut out = Vec::new();
        for code in 0..total {
            let mut owner = vec![0; self.m];
            let mut c = code;
            for g in (0..self.m).rev() {
                owner[g] = (c % self.n as u64) as usize;
                c /= self.n as u64;
            }
            if self.is_efx(&self.bundles_of(&owner)) {
                out.push(owner);
            }
        }
        out
    }

    pub fn bundles_of(&self, owner: &[usize]) -> Vec<Vec<usize>> {
        let mut b = vec![Vec::new(); self.n];
        for (g, &a) in owner.iter().enumerate() {
            b[a].push(g);
        }
        b
    }

    /// Both parts EFX-feasible for the cutter.
    pub fn is_cut(&self, cutter: usize, first: &[usize], second: &[usize]) -> bool {
        self.strong_envy(cutter, first, second).is_none()
            && self.strong_envy(cutter, second, first).is_none()
    }

    /// All ordered 2-partitions of `s` that are EFX cuts.
    pub fn cuts_of(&self, cutter: usize, s: &[usize]) -> Vec<(Vec<usize>, Vec<usize>)> {
        let mut out = Vec::new();
        for mask in 0u64..(1 << s.len()) {
            let (a, b): (Vec<usize>, Vec<usize>) = (0..s.len()).partition(|&k| mask >> k & 1 == 1);
            let a: Vec<usize> = a.into_iter().map(|k| s[k]).collect();
            let b: Vec<usize> = b.into_iter().map(|k| s[k]).collect();
            if self.is_cut(cutter, &a, &b) {
                out.push((a, b));
            }
        }
        out
    }
}

pub fn ids(b: &efx_core::Bundle) -> Vec<usize> {
    b.iter().map(|g| g.index()).collect()
}

pub fn bundles(x: &Allocation) -> Vec<Vec<usize>> {
    x.bundles().iter().map(ids).collect()
}

pub fn owners(x: &Allocation, m: usize) -> Vec<Option<usize>> {
    (0..m)
        .map(|g| x.owner_of(efx_core::GoodId(g)).map(AgentId::index))
        .collect()
}

/// Additive instance from `(u, v, weight for u, weight for v)` per good.
pub fn additive(n: usize, goods: &[(usize, usize, u64, u64)]) -> Instance {
    let ends: Vec<[usize; 2]> = goods.iter().map(|g| [g.0, g.1]).collect();
    let specs = (0..n)
        .map(|a| ValuationSpec::Additive {
            weights: goods
                .iter()
                .enumerate()
                .filter_map(|(k, g)| {
                    let w = if g.0 == a {
                        g.2
                    } else if g.1 == a {
                        g.3
                    } else {
                        return None;
                    };
                    Some((efx_core::GoodId(k), w))
                })
                .collect(),
        })
        .collect();
    Instance::new(n, &ends, specs).unwrap()
}
