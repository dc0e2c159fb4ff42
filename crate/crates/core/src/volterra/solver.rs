use super::abel::{apply_all, AbelWeights};
use super::{Forcing, LambdaGrid, LaplaceSpec, SolverGrid};
use crate::error::Result;
use crate::Error;

/// Marching solution of `y = F - K J(y²)` for an arbitrary forcing.
///
/// At step `i` the unknown enters through the diagonal weight `w`, leaving
/// the scalar quadratic `y + K w y² = R_i` whose nonnegative root is taken.
/// A negative `R_i` (only possible transiently after a jump in the forcing
/// slope) clamps `y_i` to zero.
pub fn solve_forcing(forcing: Forcing, k: f64, grid: SolverGrid) -> Result<LambdaGrid> {
    if !k.is_finite() || k < 0.0 {
        return Err(Error::Domain(format!("K must be finite and >= 0, got {k}")));
    }
    if grid.end() > forcing.horizon() * (1.0 + 1e-12) {
        return Err(Error::Config(format!(
            "grid.S = {} exceeds the forcing horizon {}",
            grid.end(),
            forcing.horizon()
        )));
    }
    let rhs = forcing.sample(&grid);
    let values = if k == 0.0 {
        rhs.iter().map(|&f| f.max(0.0)).collect()
    } else {
        march(&rhs, k, &grid)?
    };
    Ok(LambdaGrid {
        grid,
        values,
        k,
        forcing,
    })
}

fn march(rhs: &[f64], k: f64, grid: &SolverGrid) -> Result<Vec<f64>> {
    let weights = AbelWeights::new(grid);
    let kw = k * weights.diagonal();
    let mut y = vec![0.0; rhs.len()];
    let mut y2 = vec![0.0; rhs.len()];
    y[0] = rhs[0].max(0.0);
    y2[0] = y[0] * y[0];
    for i in 1..rhs.len() {
        let r = rhs[i] - k * weights.history(&y2, i);
        let disc = 1.0 + 4.0 * kw * r;
        if !r.is_finite() || !disc.is_finite() {
            return Err(Error::SolverFailure {
                s: grid.point(i),
                reason: format!("non-finite right-hand side {r}"),
            });
        }
        let yi = if r <= 0.0 {
            0.0
        } else {
            // (-1 + sqrt(disc)) / (2Kw), without the cancellation
            2.0 * r / (1.0 + disc.sqrt())
        };
        y[i] = yi;
        y2[i] = yi * yi;
    }
    Ok(y)
}

/// Solves the multi-time equation on `[0, 1]`. The grid must end at 1.
pub fn solve_lambda(spec: &LaplaceSpec, k: f64, grid: SolverGrid) -> Result<LambdaGrid> {
    if (grid.end() - 1.0).abs() > 1e-12 {
        return Err(Error::Config(format!("grid.S must be 1 for a Laplace spec, got {}", grid.end())));
    }
    solve_forcing(Forcing::Spec(spec.clone()), k, grid)
}

/// Solves `y(s) = θ sqrt(2s/π) - K J(y²)(s)` on `[0, S]` for any `S > 0`.
pub fn solve_lambda_extended(theta: f64, k: f64, grid: SolverGrid) -> Result<LambdaGrid> {
    if !theta.is_finite() || theta < 0.0 {
        return Err(Error::Domain(format!("theta must be finite and >= 0, got {theta}")));
    }
    if !k.is_finite() || k <= 0.0 {
        return Err(Error::Domain(format!("K must be finite and > 0, got {k}")));
    }
    solve_forcing(Forcing::Single { theta }, k, grid)
}

#[derive(Debug, Clone)]
pub struct PicardSolution {
    pub lambda: LambdaGrid,
    pub iterations: usize,
    pub last_change: f64,
}

/// Fixed-point iteration `y ← max(0, F - K J(y²))` from `y = 0` until the
/// sup-norm change drops to `tol`.
pub fn picard_solve(
    forcing: Forcing,
    k: f64,
    grid: SolverGrid,
    max_iter: usize,
    tol: f64,
) -> Result<PicardSolution> {
    if max_iter == 0 {
        return Err(Error::Config("max_iter must be at least 1".into()));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Config(format!("tol must be positive, got {tol}")));
    }
    if !k.is_finite() || k < 0.0 {
        return Err(Error::Domain(format!("K must be finite and >= 0, got {k}")));
    }
    let rhs = forcing.sample(&grid);
    let weights = AbelWeights::new(&grid);
    let mut y = vec![0.0; rhs.len()];
    let mut last_change = f64::INFINITY;
    for iteration in 1..=max_iter {
        let sq: Vec<f64> = y.iter().map(|v| v * v).collect();
        let memory = apply_all(&weights, &sq);
        let next: Vec<f64> = rhs
            .iter()
            .zip(&memory)
            .map(|(f, j)| (f - k * j).max(0.0))
            .collect();
        last_change = next
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if !last_change.is_finite() {
            break;
        }
        y = next;
        if last_change <= tol {
            return Ok(PicardSolution {
                lambda: LambdaGrid {
                    grid,
                    values: y,
                    k,
                    forcing,
                },
                iterations: iteration,
                last_change,
            });
        }
    }
    Err(Error::IterationLimit {
        iterations: max_iter,
        last_change,
    })
}

/// Sup-norm residual of `y + K J(y²) - F` at the solver nodes, with `J`
/// evaluated on a grid `refine` times finer and `y` interpolated linearly.
pub fn equation_residual(lambda: &LambdaGrid, refine: usize) -> f64 {
    let refine = refine.max(1);
    let fine = lambda.grid.refined(refine);
    let sq: Vec<f64> = fine
        .points()
        .map(|s| {
            let v = lambda.interpolate(s);
            v * v
        })
        .collect();
    let weights = AbelWeights::new(&fine);
    (0..=lambda.grid.steps())
        .map(|i| {
            let s = lambda.grid.point(i);
            let memory = weights.apply_at(&sq, i * refine);
            (lambda.values[i] + lambda.k * memory - lambda.forcing.value(s)).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_grid(m: usize) -> SolverGrid {
        SolverGrid::new(1.0, m).unwrap()
    }

    fn single(theta: f64) -> LaplaceSpec {
        LaplaceSpec::single(theta, 1.0).unwrap()
    }

    fn is_nondecreasing(values: &[f64]) -> bool {
        values.windows(2).all(|w| w[1] >= w[0] - 1e-12)
    }

    #[test]
    fn zero_forcing_gives_zero_solution() {
        let spec = LaplaceSpec::new(vec![(0.0, 0.3), (0.0, 1.0)]).unwrap();
        let lambda = solve_lambda(&spec, 2.0, unit_grid(200)).unwrap();
        assert!(lambda.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bounded_by_sqrt_theta_over_k() {
        let lambda = solve_lambda(&single(1.0), 1.0, unit_grid(1000)).unwrap();
        assert!(lambda.values.iter().all(|&v| (0.0..=1.0 + 1e-12).contains(&v)));
        assert!(is_nondecreasing(&lambda.values));
    }

    #[test]
    fn vanishes_before_last_time() {
        let spec = LaplaceSpec::single(1.0, 0.5).unwrap();
        let lambda = solve_lambda(&spec, 1.0, unit_grid(1000)).unwrap();
        for (i, s) in lambda.grid.points().enumerate() {
            if s < 0.5 {
                assert!(lambda.values[i].abs() <= 1e-14);
            }
        }
        assert!(lambda.last() > 0.0);
    }

    #[test]
    fn linear_case_returns_forcing() {
        let spec = LaplaceSpec::new(vec![(1.0, 0.5), (2.0, 1.0)]).unwrap();
        let lambda = solve_lambda(&spec, 0.0, unit_grid(100)).unwrap();
        for (i, s) in lambda.grid.points().enumerate() {
            assert_eq!(lambda.values[i], Forcing::Spec(spec.clone()).value(s));
        }
    }

    #[test]
    fn solve_lambda_requires_unit_interval() {
        let err = solve_lambda(&single(1.0), 1.0, SolverGrid::new(2.0, 100).unwrap());
        assert!(matches!(err, Err(Error::Config(_))));
        assert!(matches!(solve_lambda(&single(1.0), -1.0, unit_grid(10)), Err(Error::Domain(_))));
    }

    #[test]
    fn extended_solution_approaches_asymptote() {
        let lambda = solve_lambda_extended(1.0, 1.0, SolverGrid::new(200.0, 20_000).unwrap()).unwrap();
        assert!(is_nondecreasing(&lambda.values));
        let end = lambda.last();
        // numpy prototype of the same scheme gives 0.971376
        assert!((end - 0.971_376).abs() < 1e-5, "{end}");
        assert!(end <= 1.0);
    }

    #[test]
    fn extended_zero_theta() {
        let lambda = solve_lambda_extended(0.0, 1.0, SolverGrid::new(10.0, 100).unwrap()).unwrap();
        assert!(lambda.values.iter().all(|&v| v == 0.0));
        assert!(solve_lambda_extended(1.0, 0.0, SolverGrid::new(10.0, 100).unwrap()).is_err());
    }

    #[test]
    fn scaling_identity() {
        let dx = 1e-3;
        let k = 1.0;
        for &theta in &[0.5, 1.0, 2.0] {
            for &s in &[0.25, 0.5, 2.0, 4.0] {
                let left = solve_lambda_extended(theta, k, SolverGrid::with_step(s, dx).unwrap())
                    .unwrap()
                    .last();
                let right = solve_lambda(&single(theta * s), k, unit_grid(1000)).unwrap().last() / s.sqrt();
                assert!((left - right).abs() <= 10.0 * dx, "theta {theta}, s {s}: {left} vs {right}");
            }
        }
    }

    #[test]
    fn picard_agrees_with_marching() {
        let grid = unit_grid(1000);
        let dx = grid.step();
        let specs = [
            single(1.0),
            single(2.0),
            LaplaceSpec::single(1.0, 0.5).unwrap(),
            LaplaceSpec::new(vec![(1.0, 0.5), (2.0, 1.0)]).unwrap(),
            LaplaceSpec::new(vec![(0.5, 0.2), (1.0, 0.7), (0.25, 0.95)]).unwrap(),
        ];
        for spec in &specs {
            let marched = solve_lambda(spec, 1.0, grid).unwrap();
            let picard = picard_solve(Forcing::Spec(spec.clone()), 1.0, grid, 500, 1e-13).unwrap();
            assert!(marched.sup_distance(&picard.lambda) <= 10.0 * dx);
        }
    }

    #[test]
    fn picard_iteration_counts() {
        let grid = unit_grid(100);
        let zero = picard_solve(Forcing::Spec(single(0.0)), 1.0, grid, 10, 1e-12).unwrap();
        assert_eq!(zero.iterations, 1);
        assert!(zero.lambda.values.iter().all(|&v| v == 0.0));

        let spec = LaplaceSpec::new(vec![(1.0, 0.5), (2.0, 1.0)]).unwrap();
        let linear = picard_solve(Forcing::Spec(spec.clone()), 0.0, grid, 10, 1e-12).unwrap();
        assert_eq!(linear.iterations, 2);
        assert_eq!(linear.lambda.values, Forcing::Spec(spec).sample(&grid));
    }

    #[test]
    fn picard_reports_iteration_limit() {
        let res = picard_solve(Forcing::Spec(single(1.0)), 1.0, unit_grid(100), 2, 1e-14);
        assert!(matches!(res, Err(Error::IterationLimit { iterations: 2, .. })));
        assert!(picard_solve(Forcing::Spec(single(1.0)), 1.0, unit_grid(100), 0, 1e-9).is_err());
    }

    #[test]
    fn residual_is_first_order_small() {
        for spec in [single(1.0), LaplaceSpec::new(vec![(1.0, 0.5), (2.0, 1.0)]).unwrap()] {
            let lambda = solve_lambda(&spec, 1.0, unit_grid(1000)).unwrap();
            assert!(equation_residual(&lambda, 4) <= 20.0 * 1e-3);
        }
    }

    #[test]
    fn self_differences_shrink_under_refinement() {
        let spec = single(1.0);
        let solves: Vec<LambdaGrid> = [250, 500, 1000]
            .iter()
            .map(|&m| solve_lambda(&spec, 1.0, unit_grid(m)).unwrap())
            .collect();
        let diff = |a: &LambdaGrid, b: &LambdaGrid| {
            let ratio = b.grid.steps() / a.grid.steps();
            (0..=a.grid.steps())
                .map(|i| (a.values[i] - b.values[i * ratio]).abs())
                .fold(0.0, f64::max)
        };
        let d1 = diff(&solves[0], &solves[1]);
        let d2 = diff(&solves[1], &solves[2]);
        assert!(d1 / d2 >= 1.8, "{d1} / {d2}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn single_theta_invariants(theta in 0.0f64..4.0, k in 0.05f64..4.0) {
            let lambda = solve_lambda(&single(theta), k, unit_grid(400)).unwrap();
            let bound = (theta / k).sqrt();
            prop_assert!(lambda.values.iter().all(|&v| v >= 0.0 && v <= bound + 1e-12));
            prop_assert!(is_nondecreasing(&lambda.values));
        }

        #[test]
        fn multi_time_zero_segment(
            t1 in 0.05f64..0.5,
            gap in 0.05f64..0.5,
            th1 in 0.0f64..3.0,
            th2 in 0.0f64..3.0,
        ) {
            let spec = LaplaceSpec::new(vec![(th1, t1), (th2, t1 + gap)]).unwrap();
            let lambda = solve_lambda(&spec, 1.0, unit_grid(400)).unwrap();
            let cut = spec.zero_segment_end();
            for (i, s) in lambda.grid.points().enumerate() {
                prop_assert!(lambda.values[i] >= 0.0);
                if s < cut {
                    prop_assert_eq!(lambda.values[i], 0.0);
                }
            }
        }
    }
}
