//! Polynomial helpers over `Z_p`.

use crate::group::{batch_inverse, GroupError, ScalarField};

/// Coefficients of `prod_i (y + roots[i])`, lowest degree first. The leading
/// coefficient is always one; no roots gives the constant polynomial `1`.
pub fn expand_poly<S: ScalarField>(roots: &[S], one: S) -> Vec<S> {
    let mut coeffs = Vec::with_capacity(roots.len() + 1);
    coeffs.push(one);
    for &root in roots {
        // (c_0 + c_1 y + ...) * (y + root)
        coeffs.push(one);
        for i in (1..coeffs.len() - 1).rev() {
            coeffs[i] = coeffs[i - 1] + coeffs[i] * root;
        }
        coeffs[0] = coeffs[0] * root;
    }
    coeffs
}

/// Partial-fraction weights `w_i = 1 / prod_{j != i} (x_j - x_i)`, so that
/// `1 / prod_i (y + x_i) = sum_i w_i / (y + x_i)`.
///
/// Fails on repeated points, where the weights are undefined.
pub fn partial_fraction_weights<S: ScalarField>(
    points: &[S],
    one: S,
) -> Result<Vec<S>, GroupError> {
    let mut weights: Vec<S> = points
        .iter()
        .enumerate()
        .map(|(i, xi)| {
            points
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .fold(one, |acc, (_, xj)| acc * (*xj - *xi))
        })
        .collect();
    batch_inverse(&mut weights, one)?;
    Ok(weights)
}

/// Quotient of `coeffs` (lowest degree first) by `y + root`, by synthetic
/// division. Returns `None` when the division leaves a remainder.
pub fn divide_by_linear<S: ScalarField>(coeffs: &[S], root: S) -> Option<Vec<S>> {
    let (&lead, rest) = coeffs.split_last()?;
    if rest.is_empty() {
        return None;
    }
    let mut quotient = vec![lead; rest.len()];
    for i in (1..rest.len()).rev() {
        quotient[i - 1] = rest[i] - root * quotient[i];
    }
    (rest[0] - root * quotient[0]).is_zero().then_some(quotient)
}

pub fn eval<S: ScalarField>(coeffs: &[S], at: S, zero: S) -> S {
    coeffs.iter().rev().fold(zero, |acc, c| acc * at + *c)
}
