use crate::error::{Error, Result};

use super::Vector;

/// Central-difference gradient of `f` at `x` with step `h`.
///
/// Any non-finite evaluation is reported with the coordinate being probed.
pub fn finite_diff_grad<F>(f: F, x: &Vector, h: f64) -> Result<Vector>
where
    F: Fn(&Vector) -> f64,
{
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Contract(format!(
            "step size must be positive, got {h}"
        )));
    }
    let mut probe = x.clone();
    let mut grad = Vector::zeros(x.len());
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + h;
        let plus = f(&probe);
        probe[i] = orig - h;
        let minus = f(&probe);
        probe[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite {
                context: format!("finite_diff_grad probe index {i}"),
            });
        }
        grad[i] = (plus - minus) / (2.0 * h);
    }
    Ok(grad)
}

/// `|a - b| / max(|a|, |b|, floor)`
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_at_three() {
        let g = finite_diff_grad(|x| x[0] * x[0], &vec![3.0].into(), 1e-5).unwrap();
        assert!((g[0] - 6.0).abs() < 1e-6);
    }

    #[test]
    fn constant_function() {
        let g = finite_diff_grad(|_| 4.2, &vec![1.0, -3.0, 8.0].into(), 1e-5).unwrap();
        assert_eq!(&*g, &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn product_partials() {
        let g = finite_diff_grad(|x| x[0] * x[1], &vec![2.0, 5.0].into(), 1e-5).unwrap();
        assert!((g[0] - 5.0).abs() < 1e-6);
        assert!((g[1] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn non_finite_names_probe() {
        let err = finite_diff_grad(
            |x| if x[1] > 0.5 { f64::INFINITY } else { 0.0 },
            &vec![0.0, 0.5].into(),
            1e-3,
        )
        .unwrap_err();
        assert!(err.to_string().contains("probe index 1"), "{err}");
    }

    #[test]
    fn rejects_bad_step() {
        assert!(finite_diff_grad(|_| 0.0, &vec![0.0].into(), 0.0).is_err());
        assert!(finite_diff_grad(|_| 0.0, &vec![0.0].into(), -1.0).is_err());
    }
}
