use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Quadrature rule on the reference simplex, points in barycentric
/// coordinates. All weights are positive.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    dim: usize,
    order: usize,
    points: Vec<Vec<f64>>,
    // weights normalized to sum to 1 (reference volume 1/N!)
    unit_weights: Vec<f64>,
}

fn factorial(n: usize) -> f64 {
    (1..=n).product::<usize>() as f64
}

/// Gauss-Legendre nodes and weights on [0, 1].
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            // three-term recurrence for P_n and its derivative
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn orbit3(a: f64) -> Vec<Vec<f64>> {
    let c = 1.0 - 2.0 * a;
    vec![vec![c, a, a], vec![a, c, a], vec![a, a, c]]
}

fn orbit4(a: f64) -> Vec<Vec<f64>> {
    let c = 1.0 - 3.0 * a;
    (0..4)
        .map(|i| (0..4).map(|j| if i == j { c } else { a }).collect())
        .collect()
}

fn orbit22(a: f64) -> Vec<Vec<f64>> {
    let c = 0.5 - a;
    let mut out = Vec::new();
    for i in 0..4 {
        for j in i + 1..4 {
            out.push((0..4).map(|k| if k == i || k == j { a } else { c }).collect());
        }
    }
    out
}

impl QuadratureRule {
    /// Rule exact for polynomials of total degree ≤ `order` on N-simplices,
    /// N ∈ {2, 3}.
    pub fn new(dim: usize, order: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidInput(format!("quadrature dimension must be 2 or 3, got {dim}")));
        }
        if order == 0 {
            return Err(Error::Config("quadrature order must be at least 1".into()));
        }
        let (points, unit_weights) = match (dim, order) {
            (_, 1) => (vec![vec![1.0 / (dim + 1) as f64; dim + 1]], vec![1.0]),
            (2, 2) => (orbit3(1.0 / 6.0), vec![1.0 / 3.0; 3]),
            (3, 2) => (orbit4((5.0 - 5f64.sqrt()) / 20.0), vec![0.25; 4]),
            (2, 3..=5) => {
                // 7-point degree-5 rule
                let s = 15f64.sqrt();
                let mut pts = vec![vec![1.0 / 3.0; 3]];
                let mut w = vec![9.0 / 40.0];
                pts.extend(orbit3((6.0 - s) / 21.0));
                w.extend([(155.0 - s) / 1200.0; 3]);
                pts.extend(orbit3((6.0 + s) / 21.0));
                w.extend([(155.0 + s) / 1200.0; 3]);
                (pts, w)
            }
            (3, 3..=5) => {
                // 14-point degree-5 rule
                let mut pts = orbit4(0.092_735_250_310_891_226_4);
                let mut w = vec![0.073_493_043_116_361_949_5; 4];
                pts.extend(orbit4(0.310_885_919_263_300_609_8));
                w.extend([0.112_687_925_718_015_850_8; 4]);
                pts.extend(orbit22(0.045_503_704_125_649_649_5));
                w.extend([0.042_546_020_777_081_466_4; 6]);
                (pts, w)
            }
            _ => Self::collapsed(dim, order),
        };
        Ok(Self { dim, order, points, unit_weights })
    }

    /// Conical product of Gauss-Legendre rules through the collapsed-
    /// coordinate map; any order.
    fn collapsed(dim: usize, order: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        // the Jacobian adds up to dim − 1 to the degree in the first variable
        let n = (order + dim).div_ceil(2);
        let (x, w) = gauss_legendre(n);
        let mut pts = Vec::new();
        let mut wts = Vec::new();
        let scale = factorial(dim);
        if dim == 2 {
            for i in 0..n {
                for j in 0..n {
                    let (a, b) = (x[i], x[j]);
                    let (px, py) = (a, (1.0 - a) * b);
                    pts.push(vec![1.0 - px - py, px, py]);
                    wts.push(scale * w[i] * w[j] * (1.0 - a));
                }
            }
        } else {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let (a, b, c) = (x[i], x[j], x[k]);
                        let px = a;
                        let py = (1.0 - a) * b;
                        let pz = (1.0 - a) * (1.0 - b) * c;
                        pts.push(vec![1.0 - px - py - pz, px, py, pz]);
                        wts.push(scale * w[i] * w[j] * w[k] * (1.0 - a).powi(2) * (1.0 - b));
                    }
                }
            }
        }
        (pts, wts)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Barycentric coordinates of the points.
    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Weights on the reference simplex; they sum to 1/N!.
    pub fn weights(&self) -> Vec<f64> {
        let v = factorial(self.dim);
        self.unit_weights.iter().map(|w| w / v).collect()
    }

    /// Weights scaled to sum to 1, so that ∫_T f ≈ |T| Σ wᵢ f(xᵢ).
    pub fn unit_weights(&self) -> &[f64] {
        &self.unit_weights
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// ∫ over the reference simplex of ∏ x_i^{a_i} = ∏ a_i! / (|a| + N)!.
    fn monomial_exact(exps: &[usize]) -> f64 {
        let num: f64 = exps.iter().map(|&e| factorial(e)).product();
        num / factorial(exps.iter().sum::<usize>() + exps.len())
    }

    fn monomials(dim: usize, max_deg: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut e = vec![0; dim];
        loop {
            if e.iter().sum::<usize>() <= max_deg {
                out.push(e.clone());
            }
            let mut i = 0;
            loop {
                if i == dim {
                    return out;
                }
                e[i] += 1;
                if e[i] <= max_deg {
                    break;
                }
                e[i] = 0;
                i += 1;
            }
        }
    }

    #[test]
    fn exact_for_monomials_up_to_order() {
        for dim in [2, 3] {
            for order in 1..=9 {
                let rule = QuadratureRule::new(dim, order).unwrap();
                let w = rule.weights();
                assert!(w.iter().all(|&x| x > 0.0));
                assert!((w.iter().sum::<f64>() - 1.0 / factorial(dim)).abs() < 1e-15);
                for m in monomials(dim, order) {
                    let q: f64 = rule
                        .points()
                        .iter()
                        .zip(&w)
                        .map(|(p, wi)| wi * m.iter().enumerate().map(|(i, &e)| p[i + 1].powi(e as i32)).product::<f64>())
                        .sum();
                    let exact = monomial_exact(&m);
                    assert!((q - exact).abs() < 1e-13, "dim {dim} order {order} monomial {m:?}: {q} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn points_are_interior() {
        for dim in [2, 3] {
            for order in 1..=8 {
                let rule = QuadratureRule::new(dim, order).unwrap();
                for p in rule.points() {
                    assert!(p.iter().all(|&l| l > 0.0));
                    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn invalid_rules() {
        assert!(QuadratureRule::new(3, 0).is_err());
        assert!(QuadratureRule::new(1, 2).is_err());
    }
}
