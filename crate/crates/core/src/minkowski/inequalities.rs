use super::{check_point, MinkowskiNorm, SINGULAR_TOL};
use crate::error::{Error, Result};

/// Signed slack of an inequality (`residual >= 0` means it holds) together
/// with the magnitude used for relative tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityResidual {
    pub residual: f64,
    pub scale: f64,
}

impl InequalityResidual {
    /// `residual >= -tol * max(1, scale)`.
    pub fn holds(&self, tol: f64) -> bool {
        self.residual >= -tol * self.scale.max(1.0)
    }
}

fn check_lf(l_f: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&l_f) {
        return Err(Error::OutOfRange { what: "l_F", value: l_f, expected: "[0, 1]" });
    }
    Ok(())
}

/// Slack of
/// F^r(β) ≥ F^r(ξ) + r F^{r−1}(ξ) ∇F(ξ)·(β−ξ) + l_F^{r/2} / 2^{r−1} · F^r(β−ξ).
///
/// At ξ = 0 the gradient term is replaced by its continuous extension 0.
pub fn lindqvist_check(
    norm: &dyn MinkowskiNorm,
    xi: &[f64],
    beta: &[f64],
    r: f64,
    l_f: f64,
) -> Result<InequalityResidual> {
    if !(r >= 2.0) || !r.is_finite() {
        return Err(Error::OutOfRange { what: "r", value: r, expected: "r >= 2" });
    }
    check_lf(l_f)?;
    check_point(norm, xi)?;
    check_point(norm, beta)?;

    let lhs = norm.value(beta).powf(r);
    let diff: Vec<f64> = beta.iter().zip(xi).map(|(b, x)| b - x).collect();
    let xi_len = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    let (f_xi_r, tangent) = if xi_len < SINGULAR_TOL {
        (0.0, 0.0)
    } else {
        let f_xi = norm.value(xi);
        let mut g = vec![0.0; xi.len()];
        norm.gradient(xi, &mut g);
        let dot: f64 = g.iter().zip(&diff).map(|(a, b)| a * b).sum();
        (f_xi.powf(r), r * f_xi.powf(r - 1.0) * dot)
    };
    let remainder = l_f.powf(r / 2.0) / 2f64.powf(r - 1.0) * norm.value(&diff).powf(r);
    let rhs = f_xi_r + tangent + remainder;
    Ok(InequalityResidual { residual: lhs - rhs, scale: lhs })
}

/// Slack of
/// F²(tξ + (1−t)β) ≤ t F²(ξ) + (1−t) F²(β) − l_F t(1−t) F²(β−ξ).
pub fn parallelogram_check(
    norm: &dyn MinkowskiNorm,
    xi: &[f64],
    beta: &[f64],
    t: f64,
    l_f: f64,
) -> Result<InequalityResidual> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::OutOfRange { what: "t", value: t, expected: "[0, 1]" });
    }
    check_lf(l_f)?;
    check_point(norm, xi)?;
    check_point(norm, beta)?;

    let sq = |v: &[f64]| norm.value(v).powi(2);
    let mix: Vec<f64> = xi.iter().zip(beta).map(|(x, b)| t * x + (1.0 - t) * b).collect();
    let diff: Vec<f64> = beta.iter().zip(xi).map(|(b, x)| b - x).collect();
    let (f_xi, f_beta) = (sq(xi), sq(beta));
    let lhs = sq(&mix);
    let rhs = t * f_xi + (1.0 - t) * f_beta - l_f * t * (1.0 - t) * sq(&diff);
    let scale = lhs.max(f_xi).max(f_beta);
    Ok(InequalityResidual { residual: rhs - lhs, scale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minkowski::Euclidean;

    #[test]
    fn lindqvist_equality_on_diagonal() {
        let e = Euclidean::new(3).unwrap();
        let x = [0.4, -1.0, 2.0];
        for r in [2.0, 3.5, 6.0] {
            let res = lindqvist_check(&e, &x, &x, r, 0.7).unwrap();
            assert!(res.residual.abs() < 1e-12, "{res:?}");
        }
    }

    #[test]
    fn lindqvist_at_origin() {
        let e = Euclidean::new(3).unwrap();
        let beta = [1.0, 2.0, -2.0];
        let res = lindqvist_check(&e, &[0.0; 3], &beta, 2.0, 1.0).unwrap();
        assert!((res.residual - 9.0 * 0.5).abs() < 1e-13);
    }

    #[test]
    fn lindqvist_rejects_small_r() {
        let e = Euclidean::new(2).unwrap();
        let err = lindqvist_check(&e, &[1.0, 0.0], &[0.0, 1.0], 1.5, 1.0).unwrap_err();
        assert!(matches!(err, Error::OutOfRange { what: "r", .. }));
    }

    #[test]
    fn parallelogram_endpoints_and_midpoint() {
        let e = Euclidean::new(3).unwrap();
        let (x, b) = ([1.0, 0.5, -0.2], [-0.3, 2.0, 0.9]);
        assert_eq!(parallelogram_check(&e, &x, &b, 0.0, 1.0).unwrap().residual.abs(), 0.0);
        assert!(parallelogram_check(&e, &x, &b, 1.0, 1.0).unwrap().residual.abs() < 1e-15);
        assert!(parallelogram_check(&e, &x, &b, 0.5, 1.0).unwrap().residual.abs() < 1e-14);
        assert!(parallelogram_check(&e, &x, &b, 1.5, 1.0).is_err());
    }
}
