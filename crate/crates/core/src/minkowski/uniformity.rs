use std::f64::consts::PI;

use serde::Serialize;

use super::MinkowskiNorm;
use crate::error::{Error, Result};
use crate::par::{argmin, map_indexed, Execution};

const MIN_SPHERE_POINTS: usize = 8;
const REFINE_MAX_ITER: usize = 200;

/// Estimate of l_F = min { ∇²(F²/2)(x) y·y : F(x) = F(y) = 1 }.
#[derive(Debug, Clone, Serialize)]
pub struct UniformityEstimate {
    /// Estimate clamped to [0, 1].
    pub value: f64,
    /// Minimum before clamping.
    pub raw_value: f64,
    pub grid_resolution: f64,
    pub grid_points_per_sphere: usize,
    pub refined: bool,
    /// Minimizing pair on the F-unit sphere.
    pub argmin_x: Vec<f64>,
    pub argmin_y: Vec<f64>,
}

/// Unit vector for angle parameters: one angle in 2D, (polar, azimuth)
/// about the first axis in 3D.
fn direction(dim: usize, angles: &[f64]) -> Vec<f64> {
    match dim {
        2 => vec![angles[0].cos(), angles[0].sin()],
        _ => {
            let (t, p) = (angles[0], angles[1]);
            vec![t.cos(), t.sin() * p.cos(), t.sin() * p.sin()]
        }
    }
}

/// Angle grid with step `h`. Halving `h` yields a superset of the points.
fn sphere_grid(dim: usize, h: f64) -> Vec<Vec<f64>> {
    let steps = |upper: f64| (0..).map(move |k| k as f64 * h).take_while(move |&a| a < upper - 1e-12);
    match dim {
        2 => steps(2.0 * PI).map(|a| vec![a]).collect(),
        _ => {
            let mut out = vec![vec![0.0, 0.0]];
            for theta in steps(PI).skip(1) {
                out.extend(steps(2.0 * PI).map(|phi| vec![theta, phi]));
            }
            out.push(vec![PI, 0.0]);
            out
        }
    }
}

fn to_unit_sphere(norm: &dyn MinkowskiNorm, z: Vec<f64>) -> Vec<f64> {
    let f = norm.value(&z);
    z.into_iter().map(|v| v / f).collect()
}

fn quad_form(h: &nalgebra::DMatrix<f64>, y: &[f64]) -> f64 {
    let n = y.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += h[(i, j)] * y[i] * y[j];
        }
    }
    s
}

/// Estimates l_F by a product grid over two copies of the F-unit sphere
/// followed by simplex refinement.
pub fn uniformity_constant(norm: &dyn MinkowskiNorm, resolution: f64) -> Result<UniformityEstimate> {
    uniformity_constant_with(norm, resolution, Execution::default())
}

pub fn uniformity_constant_with(
    norm: &dyn MinkowskiNorm,
    resolution: f64,
    exec: Execution,
) -> Result<UniformityEstimate> {
    let dim = norm.dim();
    if dim != 2 && dim != 3 {
        return Err(Error::InvalidInput(format!("l_F search supports N in {{2, 3}}, got {dim}")));
    }
    if !(resolution > 0.0) || !resolution.is_finite() {
        return Err(Error::Config(format!("l_F resolution must be positive, got {resolution}")));
    }
    let grid = sphere_grid(dim, resolution);
    if grid.len() < MIN_SPHERE_POINTS {
        return Err(Error::Config(format!(
            "l_F resolution {resolution} gives {} points per sphere, need at least {MIN_SPHERE_POINTS}",
            grid.len()
        )));
    }

    let units: Vec<Vec<f64>> = grid.iter().map(|a| to_unit_sphere(norm, direction(dim, a))).collect();
    let per_x = map_indexed(units.len(), exec, |ix| {
        let h = norm.hessian_half_sq(&units[ix]);
        let vals: Vec<f64> = units.iter().map(|y| quad_form(&h, y)).collect();
        let iy = argmin(&vals).unwrap_or(0);
        (vals[iy], iy)
    });
    let mins: Vec<f64> = per_x.iter().map(|m| m.0).collect();
    let ix = argmin(&mins)
        .ok_or_else(|| Error::Numerical("l_F grid search produced no finite value".into()))?;
    let iy = per_x[ix].1;
    let grid_min = mins[ix];

    let k = dim - 1;
    let objective = |params: &[f64]| {
        let x = to_unit_sphere(norm, direction(dim, &params[..k]));
        let y = to_unit_sphere(norm, direction(dim, &params[k..]));
        quad_form(&norm.hessian_half_sq(&x), &y)
    };
    let start: Vec<f64> = grid[ix].iter().chain(grid[iy].iter()).copied().collect();
    let (best_params, refined_min) = nelder_mead(&objective, &start, resolution, REFINE_MAX_ITER);

    let (raw, params) = if refined_min < grid_min {
        (refined_min, best_params)
    } else {
        (grid_min, start)
    };
    let value = raw.clamp(0.0, 1.0);
    if (value - raw).abs() > 1e-6 {
        log::warn!("l_F estimate {raw} clamped to {value}");
    }
    Ok(UniformityEstimate {
        value,
        raw_value: raw,
        grid_resolution: resolution,
        grid_points_per_sphere: grid.len(),
        refined: true,
        argmin_x: to_unit_sphere(norm, direction(dim, &params[..k])),
        argmin_y: to_unit_sphere(norm, direction(dim, &params[k..])),
    })
}

/// Derivative-free simplex descent; returns the best vertex and its value.
fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], step: f64, max_iter: usize) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        let fx = f(&x);
        simplex.push((x, fx));
    }
    let lerp = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(u, v)| u + t * (v - u)).collect()
    };
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if (simplex[n].1 - simplex[0].1).abs() <= 1e-15 * simplex[0].1.abs().max(1e-300) {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].0.clone();
        let reflected = lerp(&centroid, &worst, -1.0);
        let fr = f(&reflected);
        if fr < simplex[0].1 {
            let expanded = lerp(&centroid, &worst, -2.0);
            let fe = f(&expanded);
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let contracted = if fr < simplex[n].1 {
                lerp(&centroid, &worst, -0.5)
            } else {
                lerp(&centroid, &worst, 0.5)
            };
            let fc = f(&contracted);
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (contracted, fc);
            } else {
                let best = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    let x = lerp(&best, &v.0, 0.5);
                    let fx = f(&x);
                    *v = (x, fx);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minkowski::{Euclidean, NormSpec};

    #[test]
    fn euclidean_is_one() {
        for dim in [2, 3] {
            let e = Euclidean::new(dim).unwrap();
            let est = uniformity_constant(&e, 0.2).unwrap();
            assert!((est.value - 1.0).abs() < 1e-8, "{est:?}");
        }
    }

    #[test]
    fn riemannian_is_one() {
        let f = NormSpec::Riemannian { a: vec![4.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0] }
            .build(3)
            .unwrap();
        let est = uniformity_constant(&f, 0.15).unwrap();
        assert!((est.value - 1.0).abs() < 1e-6, "{est:?}");
    }

    #[test]
    fn coarse_resolution_rejected() {
        let e = Euclidean::new(2).unwrap();
        assert!(matches!(uniformity_constant(&e, 1.0), Err(Error::Config(_))));
        assert!(matches!(uniformity_constant(&e, 0.0), Err(Error::Config(_))));
    }

    #[test]
    fn halved_grid_is_superset() {
        for dim in [2, 3] {
            let coarse = sphere_grid(dim, 0.3);
            let fine = sphere_grid(dim, 0.15);
            for p in &coarse {
                assert!(fine.iter().any(|q| q.iter().zip(p).all(|(a, b)| (a - b).abs() < 1e-12)));
            }
        }
    }

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 0.5).powi(2);
        let (x, fx) = nelder_mead(&f, &[0.0, 0.0], 0.1, 200);
        assert!(fx < 1e-10 && (x[0] - 1.0).abs() < 1e-4, "{x:?} {fx}");
    }
}
