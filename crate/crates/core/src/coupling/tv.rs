use crate::scalar::Scalar;

/// Total variation distance `½ Σ |p(v) − q(v)|` between two pmfs on one
/// alphabet.
pub fn total_variation<T: Scalar>(p: &[T], q: &[T]) -> T {
    assert_eq!(p.len(), q.len(), "pmfs must share an alphabet");
    let sum = p
        .iter()
        .zip(q)
        .fold(T::zero(), |acc, (a, b)| acc + (a.clone() - b.clone()).abs());
    sum * T::from_ratio(1, 2)
}

/// Largest `Pr[X = Y]` over all couplings of `X ~ p` and `Y ~ q`, which is
/// `1 − TV(p, q)` (attained by putting `min(p(v), q(v))` on each diagonal cell).
pub fn max_equality_probability<T: Scalar>(p: &[T], q: &[T]) -> T {
    T::one() - total_variation(p, q)
}
