//! Step-refinement helpers: observed order of accuracy and a step-halving harness.

/// Least-squares slope of `ln(error)` against `ln(step)`.
///
/// Panics if fewer than two points are given or any value is not positive.
pub fn observed_order(steps: &[f64], errors: &[f64]) -> f64 {
    assert_eq!(steps.len(), errors.len(), "observed_order: length mismatch");
    assert!(steps.len() >= 2, "observed_order: need at least two points");
    assert!(
        steps.iter().chain(errors).all(|&v| v > 0.0),
        "observed_order: steps and errors must be positive"
    );
    let xs: Vec<f64> = steps.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub n_steps: usize,
    pub values: Vec<f64>,
    /// Max-norm change from the previous refinement level.
    pub change: f64,
}

/// Doubles the step count starting from `n0` until the max-norm change
/// between successive results of `run` drops below `tol` (relative to the
/// result's max norm, floored at 1). Gives up after `max_doublings`.
pub fn refine_steps<E, F>(n0: usize, tol: f64, max_doublings: usize, mut run: F) -> Result<Option<Refinement>, E>
where
    F: FnMut(usize) -> Result<Vec<f64>, E>,
{
    let mut n = n0.max(1);
    let mut prev = run(n)?;
    for _ in 0..max_doublings {
        n *= 2;
        let next = run(n)?;
        let scale = next.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let change = prev.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if change <= tol * scale {
            return Ok(Some(Refinement { n_steps: n, values: next, change }));
        }
        prev = next;
    }
    Ok(None)
}
