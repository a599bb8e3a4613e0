use crate::error::{Error, Result};

/// Replica count `T = (1 - p) / (eps^2 p)` needed so that the Monte Carlo
/// estimate of a p-value near `p_target` has coefficient of variation `epsilon`.
pub fn required_replicas(p_target: f64, epsilon: f64) -> Result<u64> {
    if !(p_target > 0.0 && p_target < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "target p-value must lie in (0, 1), got {p_target}"
        )));
    }
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "relative error must be positive, got {epsilon}"
        )));
    }
    let t = (1.0 - p_target) / (epsilon * epsilon * p_target);
    // Absorb representation error so exact products do not round up.
    let nearest = t.round();
    let t = if (t - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        t.ceil()
    };
    Ok((t as u64).max(1))
}

/// Standard error `sqrt(p (1 - p) / T)` of a Monte Carlo p-value estimate.
pub fn replica_standard_error(p: f64, replicas: u64) -> f64 {
    (p * (1.0 - p) / replicas as f64).sqrt()
}
