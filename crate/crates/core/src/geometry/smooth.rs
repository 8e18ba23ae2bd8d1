use super::GeometryError;
use crate::scalar::Real;

/// Softmax-weighted aggregate of a set of values.
///
/// `S_beta(v) = sum_i w_i v_i` with `w_i ∝ exp(beta v_i)`. Large positive
/// `beta` approaches the maximum, large negative `beta` the minimum, and
/// `beta = 0` is the arithmetic mean. Weights are computed with the usual
/// max-shift so extreme `beta * v` products cannot overflow.
pub fn smooth_aggregate<T: Real>(values: &[T], beta: T) -> Result<T, GeometryError> {
    Ok(SmoothAggregate::new(values, beta)?.value)
}

/// [`smooth_aggregate`] together with its exact first and second partial
/// derivatives, used by penalty costs that need gradients and Hessians.
#[derive(Debug, Clone)]
pub struct SmoothAggregate<T> {
    /// Aggregated value.
    pub value: T,
    /// Normalized softmax weights `w_i`.
    pub weights: Vec<T>,
    /// First partials `dS/dv_i = w_i (1 + beta (v_i - S))`.
    pub first: Vec<T>,
    beta: T,
}

impl<T: Real> SmoothAggregate<T> {
    pub fn new(values: &[T], beta: T) -> Result<Self, GeometryError> {
        if values.is_empty() {
            return Err(GeometryError::EmptyAggregate);
        }
        let mut shift = beta * values[0];
        for &v in &values[1..] {
            shift = shift.max(beta * v);
        }
        let mut weights: Vec<T> = values.iter().map(|&v| (beta * v - shift).exp()).collect();
        let mut total = T::zero();
        for &w in &weights {
            total += w;
        }
        for w in &mut weights {
            *w /= total;
        }
        let mut value = T::zero();
        for (&w, &v) in weights.iter().zip(values) {
            value += w * v;
        }
        let first: Vec<T> = weights
            .iter()
            .zip(values)
            .map(|(&w, &v)| w * (T::one() + beta * (v - value)))
            .collect();
        Ok(Self { value, weights, first, beta })
    }

    /// Second partial `d2S / (dv_k dv_m)`.
    ///
    /// With `s_k` the first partials and `w_k` the weights this is
    /// `beta * (delta_km (s_k + w_k) - (s_k w_m + w_k s_m))`, symmetric in
    /// `(k, m)` by construction.
    pub fn second(&self, k: usize, m: usize) -> T {
        let w_k = self.weights[k];
        let w_m = self.weights[m];
        let s_k = self.first[k];
        let s_m = self.first[m];
        let diag = if k == m { s_k + w_k } else { T::zero() };
        self.beta * (diag - (s_k * w_m + w_k * s_m))
    }
}
