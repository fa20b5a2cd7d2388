use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

/// Undirected lattice graph. Edges are stored as `(i, j)` with `i < j`,
/// sorted ascending, which fixes the bond order of every builder downstream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lattice {
    n_sites: usize,
    edges: Vec<(usize, usize)>,
    name: String,
}

impl Lattice {
    pub fn new(n_sites: usize, edges: &[(usize, usize)], name: impl Into<String>) -> Result<Self> {
        if n_sites == 0 {
            return invalid("lattice needs at least one site");
        }
        let mut norm = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= n_sites || b >= n_sites {
                return invalid(format!("edge ({a}, {b}) outside [0, {n_sites})"));
            }
            if a == b {
                return invalid(format!("self-loop on site {a}"));
            }
            norm.push((a.min(b), a.max(b)));
        }
        norm.sort_unstable();
        if norm.windows(2).any(|w| w[0] == w[1]) {
            return invalid("duplicate edge");
        }
        Ok(Self {
            n_sites,
            edges: norm,
            name: name.into(),
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn degree(&self, site: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(a, b)| a == site || b == site)
            .count()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.binary_search(&(a.min(b), a.max(b))).is_ok()
    }
}

impl fmt::Display for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Accepts `hexagon6`, `triangle`, `chain:N` and `ring:N`.
impl FromStr for Lattice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "hexagon6" | "hexagon" => return Ok(hexagon6()),
            "triangle" => return ring(3),
            _ => {}
        }
        let (kind, n) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("unknown lattice {s:?}")))?;
        let n: usize = n
            .parse()
            .map_err(|_| Error::Parse(format!("bad site count in {s:?}")))?;
        match kind {
            "chain" => chain(n),
            "ring" => ring(n),
            _ => Err(Error::Parse(format!("unknown lattice kind {kind:?}"))),
        }
    }
}

/// Six-site benzene-like ring, sites 0..5 in cyclic order.
pub fn hexagon6() -> Lattice {
    Lattice::new(
        6,
        &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 5)],
        "hexagon6",
    )
    .expect("static lattice")
}

/// Open chain with bonds `(i, i+1)`.
pub fn chain(n: usize) -> Result<Lattice> {
    if n == 0 {
        return invalid("chain length must be positive");
    }
    let edges: Vec<_> = (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect();
    Lattice::new(n, &edges, format!("chain:{n}"))
}

/// Closed ring; `ring(3)` is the triangle used for the reduced noisy runs.
pub fn ring(n: usize) -> Result<Lattice> {
    if n < 3 {
        return invalid("ring needs at least three sites");
    }
    let mut edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
    edges.push((0, n - 1));
    let name = if n == 3 {
        "triangle".to_string()
    } else {
        format!("ring:{n}")
    };
    Lattice::new(n, &edges, name)
}
