use serde::{Deserialize, Serialize};

/// Regular lattice of `k^n` training affordances covering `[-1, 1]^n`.
///
/// Vertex `i` has lattice index `(i_0, ..., i_{n-1})` with
/// `i = Σ i_d · k^d`; coordinate `d` is `-1 + 2·i_d/(k-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffordanceGrid {
    n: usize,
    k: usize,
    vertices: Vec<Vec<f64>>,
    edges: Vec<(usize, usize)>,
}

impl AffordanceGrid {
    /// Panics unless `n ≥ 1` and `k ≥ 2`.
    pub fn new(n: usize, k: usize) -> Self {
        assert!(n >= 1 && k >= 2, "grid needs n ≥ 1 and k ≥ 2");
        let count = k.pow(n as u32);
        let spacing = 2.0 / (k - 1) as f64;
        let mut vertices = Vec::with_capacity(count);
        let mut edges = Vec::new();
        for i in 0..count {
            let idx = Self::unravel(i, n, k);
            vertices.push(idx.iter().map(|&c| -1.0 + spacing * c as f64).collect());
            for (d, &c) in idx.iter().enumerate() {
                if c + 1 < k {
                    edges.push((i, i + k.pow(d as u32)));
                }
            }
        }
        Self {
            n,
            k,
            vertices,
            edges,
        }
    }

    fn unravel(mut i: usize, n: usize, k: usize) -> Vec<usize> {
        let mut idx = Vec::with_capacity(n);
        for _ in 0..n {
            idx.push(i % k);
            i /= k;
        }
        idx
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn side(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        2.0 / (self.k - 1) as f64
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.vertices[i]
    }

    /// Axis-aligned neighbour pairs `(i, j)` with `i < j`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn lattice_index(&self, i: usize) -> Vec<usize> {
        Self::unravel(i, self.n, self.k)
    }

    /// Vertex index of the 2-D lattice point `(ix, iy)`.
    pub fn index2(&self, ix: usize, iy: usize) -> usize {
        debug_assert_eq!(self.n, 2);
        ix + self.k * iy
    }

    /// Corners of 2-D cell `(cx, cy)` in counter-clockwise ω order:
    /// `(cx, cy), (cx+1, cy), (cx+1, cy+1), (cx, cy+1)`.
    pub fn cell_corners(&self, cx: usize, cy: usize) -> [usize; 4] {
        [
            self.index2(cx, cy),
            self.index2(cx + 1, cy),
            self.index2(cx + 1, cy + 1),
            self.index2(cx, cy + 1),
        ]
    }

    /// The vertices in `keep` (in that order) and the edges between them.
    pub fn subset(&self, keep: &[usize]) -> Self {
        let mut pos = vec![usize::MAX; self.len()];
        for (p, &i) in keep.iter().enumerate() {
            pos[i] = p;
        }
        let edges = self
            .edges
            .iter()
            .filter(|&&(i, j)| pos[i] != usize::MAX && pos[j] != usize::MAX)
            .map(|&(i, j)| (pos[i].min(pos[j]), pos[i].max(pos[j])))
            .collect();
        Self {
            n: self.n,
            k: self.k,
            vertices: keep.iter().map(|&i| self.vertices[i].clone()).collect(),
            edges,
        }
    }

    pub fn contains(omega: &[f64]) -> bool {
        omega.iter().all(|v| (-1.0..=1.0).contains(v))
    }
}

/// Which dynamics produced an outcome grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeSource {
    Environment,
    Predictor,
}

/// Per-vertex outcomes in target space.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeGrid {
    pub outcomes: Vec<Vec<f64>>,
    /// Mean predicted σ per vertex, when rolled through a Gaussian predictor.
    pub sigma: Option<Vec<f64>>,
    pub source: OutcomeSource,
}

impl OutcomeGrid {
    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.outcomes.iter().flatten().all(|v| v.is_finite())
    }
}
