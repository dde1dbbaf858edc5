//! Legendre chaos basis for a uniform random variable on `[-1, 1]`.
//!
//! Expectations are always taken against the uniform probability density
//! `1/2`, so `E[L_r^2] = 1 / (2r + 1)`. The stochastic Galerkin coupling is
//! carried by two tensors built from Gauss-Legendre quadrature:
//!
//! * [`TripleTensor`]: `c[l][m][r] = E[L_l L_m L_r] / E[L_r^2]`
//! * [`QuadTensor`]: `d[r1][r2][r3][r4] = E[L_r1 L_r2 L_r3 L_r4]`

use crate::error::{MzError, Result};

/// Largest polynomial order accepted by [`legendre`].
pub const MAX_LEGENDRE_ORDER: usize = 64;

const NEWTON_TOL: f64 = 1e-14;
const NEWTON_MAX_ITER: usize = 100;
const MIN_TENSOR_NODES: usize = 16;

/// Evaluates the Legendre polynomial `L_order(xi)` by the three-term recurrence.
///
/// ```
/// assert_eq!(mzuq::basis::legendre(1, -0.3), -0.3);
/// assert!((mzuq::basis::legendre(2, 0.5) + 0.125).abs() < 1e-15);
/// ```
pub fn legendre(order: usize, xi: f64) -> f64 {
    assert!(
        order <= MAX_LEGENDRE_ORDER,
        "Legendre order {order} exceeds {MAX_LEGENDRE_ORDER}"
    );
    legendre_pair(order, xi).0
}

/// Returns `(L_n(x), L_{n-1}(x))`; for `n = 0` the second entry is 0.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut prev = 1.0;
    let mut curr = x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * curr - kf * prev) / (kf + 1.0);
        prev = curr;
        curr = next;
    }
    (curr, prev)
}

/// Gauss-Legendre rule for the unweighted integral over `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Approximates `∫_{-1}^{1} f(x) dx`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Approximates `E[f(ξ)]` for `ξ ~ U[-1, 1]`.
    pub fn expectation<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        0.5 * self.integrate(f)
    }
}

/// Builds the `n`-point Gauss-Legendre rule, exact for polynomials of degree `2n - 1`.
///
/// Nodes are the roots of `L_n`, found by Newton iteration from Chebyshev-like
/// initial guesses; the derivative comes from
/// `(x^2 - 1) L_n'(x) = n (x L_n(x) - L_{n-1}(x))`.
pub fn gauss_legendre_rule(n: usize) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(MzError::InvalidArgument(
            "quadrature needs at least one node".into(),
        ));
    }
    let nf = n as f64;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    // roots come in ± pairs; solve for the positive half
    for i in 0..(n + 1) / 2 {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..NEWTON_MAX_ITER {
            let (p, p_prev) = legendre_pair(n, x);
            dp = nf * (x * p - p_prev) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < NEWTON_TOL {
                let (p, p_prev) = legendre_pair(n, x);
                dp = nf * (x * p - p_prev) / (x * x - 1.0);
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // ascending order: negative root first
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadratureRule { nodes, weights })
}

/// True when the sparsity pattern forces `E[L_l L_m L_r] = 0`.
pub fn triple_is_structural_zero(l: usize, m: usize, r: usize) -> bool {
    l + m < r || l + r < m || m + r < l || (l + m + r) % 2 == 1
}

/// One nonzero `c[l][m][r]` entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripleEntry {
    pub l: usize,
    pub m: usize,
    pub r: usize,
    pub value: f64,
}

/// Normalized Legendre triple products `c[l][m][r] = E[L_l L_m L_r] / E[L_r^2]`.
///
/// Only entries allowed by the sparsity pattern are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleTensor {
    order: usize,
    entries: Vec<TripleEntry>,
    dense: Vec<f64>,
}

impl TripleTensor {
    /// Builds the tensor for chaos orders `0..order`.
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(MzError::InvalidArgument(
                "triple tensor needs at least one chaos order".into(),
            ));
        }
        let degree = 3 * (order - 1);
        let n_nodes = MIN_TENSOR_NODES.max((degree + 2) / 2);
        let rule = gauss_legendre_rule(n_nodes)?;
        let table = tabulate(&rule, order);

        let mut entries = Vec::new();
        let mut dense = vec![0.0; order * order * order];
        for l in 0..order {
            for m in 0..order {
                for r in 0..order {
                    if triple_is_structural_zero(l, m, r) {
                        continue;
                    }
                    let value = if m < l {
                        // symmetric in (l, m): reuse the mirrored entry bit for bit
                        dense[(m * order + l) * order + r]
                    } else {
                        let numerator: f64 = rule
                            .weights
                            .iter()
                            .enumerate()
                            .map(|(q, &w)| w * table[l][q] * table[m][q] * table[r][q])
                            .sum::<f64>()
                            * 0.5;
                        numerator * (2 * r + 1) as f64
                    };
                    dense[(l * order + m) * order + r] = value;
                    entries.push(TripleEntry { l, m, r, value });
                }
            }
        }
        Ok(Self {
            order,
            entries,
            dense,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, l: usize, m: usize, r: usize) -> f64 {
        self.dense[(l * self.order + m) * self.order + r]
    }

    /// Stored (structurally nonzero) entries, ordered by `(l, m, r)`.
    pub fn entries(&self) -> &[TripleEntry] {
        &self.entries
    }

    pub fn nonzero_count(&self) -> usize {
        self.entries.len()
    }
}

/// Fully symmetric fourth moments `d[r1][r2][r3][r4] = E[L_r1 L_r2 L_r3 L_r4]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadTensor {
    order: usize,
    dense: Vec<f64>,
}

impl QuadTensor {
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(MzError::InvalidArgument(
                "quad tensor needs at least one chaos order".into(),
            ));
        }
        let degree = 4 * (order - 1);
        let rule = gauss_legendre_rule(MIN_TENSOR_NODES.max((degree + 2) / 2))?;
        let table = tabulate(&rule, order);
        let mut dense = vec![0.0; order.pow(4)];
        for a in 0..order {
            for b in 0..order {
                for c in 0..order {
                    for d in 0..order {
                        if (a + b + c + d) % 2 == 1 {
                            continue;
                        }
                        dense[((a * order + b) * order + c) * order + d] = rule
                            .weights
                            .iter()
                            .enumerate()
                            .map(|(q, &w)| w * table[a][q] * table[b][q] * table[c][q] * table[d][q])
                            .sum::<f64>()
                            * 0.5;
                    }
                }
            }
        }
        Ok(Self { order, dense })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, r1: usize, r2: usize, r3: usize, r4: usize) -> f64 {
        let n = self.order;
        self.dense[((r1 * n + r2) * n + r3) * n + r4]
    }
}

/// `table[r][q] = L_r(node_q)`
fn tabulate(rule: &QuadratureRule, order: usize) -> Vec<Vec<f64>> {
    (0..order)
        .map(|r| rule.nodes.iter().map(|&x| legendre(r, x)).collect())
        .collect()
}
