//! Front-to-back alpha compositing and its backward scan.
//!
//! Weights are w_i = a_i * prod_{j<i} (1 - a_j) with a_i = alpha_i * G_i.
//! The backward uses the rear-accumulated form
//! dL/da_i = T_i * (dL.b_i - R_i), R_i = sum_{k>i} (dL.b_k) a_k prod_{i<j<k}(1-a_j),
//! which stays finite for fully opaque contributions.

/// Composite one pixel. `contributions` are (attributes, opacity, weight)
/// triples sorted front to back; returns the blended attribute vector, the
/// accumulated alpha, and the per-contribution blend weights.
///
/// Debug builds assert the front-to-back precondition via the caller's
/// depth ordering; this function itself only sees opacities.
pub fn composite_pixel(contributions: &[(&[f64], f64, f64)]) -> (Vec<f64>, f64, Vec<f64>) {
    let channels = contributions.first().map_or(0, |(b, _, _)| b.len());
    let mut out = vec![0.0; channels];
    let mut weights = Vec::with_capacity(contributions.len());
    let mut transmittance = 1.0;
    let mut accum = 0.0;
    for (b, alpha, g) in contributions {
        debug_assert_eq!(b.len(), channels);
        let a = alpha * g;
        debug_assert!((0.0..=1.0).contains(&a), "alpha*G out of range: {a}");
        let w = a * transmittance;
        for (o, bi) in out.iter_mut().zip(b.iter()) {
            *o += bi * w;
        }
        accum += w;
        weights.push(w);
        transmittance *= 1.0 - a;
    }
    (out, accum, weights)
}

/// Reverse scan producing dL/da_i from per-contribution channel dots.
///
/// `items` yields, front to back, (a_i, w_i, dot_i) where dot_i =
/// sum_c upstream_c * b_{i,c} including any channels with constant b (the
/// accumulated-alpha channel uses b = 1). The result is written back via
/// `sink(i, dL_da_i)` in reverse order.
pub fn backward_alpha_scan(
    a: &[f64],
    w: &[f64],
    dot: &[f64],
    mut sink: impl FnMut(usize, f64),
) {
    debug_assert_eq!(a.len(), w.len());
    debug_assert_eq!(a.len(), dot.len());
    let mut rear = 0.0;
    for i in (0..a.len()).rev() {
        // transmittance in front of i; a_i > 0 whenever the contribution
        // was rasterized (G > 0, alpha > 0)
        let t_i = if a[i] > 0.0 { w[i] / a[i] } else { 0.0 };
        sink(i, t_i * (dot[i] - rear));
        rear = a[i] * dot[i] + (1.0 - a[i]) * rear;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn opaque_front_wins() {
        let b = [0.3, 0.7];
        let (out, accum, w) = composite_pixel(&[(&b, 1.0, 1.0)]);
        assert_eq!(out, vec![0.3, 0.7]);
        assert_eq!(accum, 1.0);
        assert_eq!(w, vec![1.0]);
    }

    #[test]
    fn two_layer_closed_form() {
        let b1 = [1.0, 0.0];
        let b2 = [0.0, 1.0];
        let (out, accum, _) = composite_pixel(&[(&b1, 0.5, 1.0), (&b2, 1.0, 1.0)]);
        assert_relative_eq!(out[0], 0.5);
        assert_relative_eq!(out[1], 0.5);
        assert_relative_eq!(accum, 1.0);
    }

    #[test]
    fn matches_naive_fold() {
        // naive reference: left fold carrying explicit transmittance product
        let mut rng = 99u64;
        let mut next = move || {
            rng ^= rng << 13;
            rng ^= rng >> 7;
            rng ^= rng << 17;
            (rng >> 11) as f64 / (1u64 << 53) as f64
        };
        let contribs: Vec<([f64; 3], f64, f64)> = (0..10)
            .map(|_| {
                (
                    [next(), next(), next()],
                    next(),
                    next().max(1e-3),
                )
            })
            .collect();
        let borrowed: Vec<(&[f64], f64, f64)> =
            contribs.iter().map(|(b, a, g)| (b.as_slice(), *a, *g)).collect();
        let (out, accum, weights) = composite_pixel(&borrowed);

        let mut naive = [0.0; 3];
        let mut naive_accum = 0.0;
        for (i, (b, alpha, g)) in contribs.iter().enumerate() {
            let mut t = 1.0;
            for (bj, aj, gj) in contribs.iter().take(i) {
                let _ = bj;
                t *= 1.0 - aj * gj;
            }
            let w = alpha * g * t;
            assert_relative_eq!(w, weights[i], epsilon = 1e-12);
            for c in 0..3 {
                naive[c] += b[c] * w;
            }
            naive_accum += w;
        }
        for c in 0..3 {
            assert_relative_eq!(out[c], naive[c], epsilon = 1e-12);
        }
        assert_relative_eq!(accum, naive_accum, epsilon = 1e-12);
    }

    #[test]
    fn front_to_back_equals_back_to_front_over() {
        // "over" from the back: c = c_back * (1 - a_front) + b_front * a_front
        let layers = [
            ([0.9, 0.1], 0.3, 0.8),
            ([0.2, 0.5], 0.9, 0.5),
            ([0.4, 0.4], 0.6, 1.0),
        ];
        let borrowed: Vec<(&[f64], f64, f64)> =
            layers.iter().map(|(b, a, g)| (b.as_slice(), *a, *g)).collect();
        let (front, _, _) = composite_pixel(&borrowed);

        let mut back = [0.0, 0.0];
        for (b, alpha, g) in layers.iter().rev() {
            let a = alpha * g;
            for c in 0..2 {
                back[c] = back[c] * (1.0 - a) + b[c] * a;
            }
        }
        for c in 0..2 {
            assert_relative_eq!(front[c], back[c], epsilon = 1e-6);
        }
    }

    #[test]
    fn backward_scan_matches_finite_differences() {
        let a = [0.4, 0.9, 1.0, 0.2];
        let dot = [0.7, -0.3, 0.5, 0.9];
        let forward = |a: &[f64]| -> f64 {
            // loss = sum_i w_i * dot_i
            let mut t = 1.0;
            let mut loss = 0.0;
            for i in 0..a.len() {
                loss += a[i] * t * dot[i];
                t *= 1.0 - a[i];
            }
            loss
        };
        let mut w = Vec::new();
        {
            let mut t = 1.0;
            for &ai in &a {
                w.push(ai * t);
                t *= 1.0 - ai;
            }
        }
        let mut grads = vec![0.0; a.len()];
        backward_alpha_scan(&a, &w, &dot, |i, g| grads[i] = g);
        for i in 0..a.len() {
            let h = 1e-7;
            let mut ap = a;
            ap[i] += h;
            let mut am = a;
            am[i] -= h;
            let fd = (forward(&ap) - forward(&am)) / (2.0 * h);
            assert_relative_eq!(grads[i], fd, epsilon = 1e-6, max_relative = 1e-6);
        }
    }
}
