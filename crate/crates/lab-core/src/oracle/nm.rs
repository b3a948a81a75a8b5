//! Deterministic Nelder-Mead simplex minimizer.
//!
//! Classic coefficients (reflect 1, expand 2, contract 1/2, shrink 1/2) with
//! a fixed evaluation budget. All tie-breaks are index-ordered and every
//! floating comparison is total, so a given start point and budget always
//! produce the same trajectory.

pub struct NmResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: u64,
    pub converged: bool,
}

pub fn minimize<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    step: f64,
    max_evals: u64,
    ftol: f64,
) -> NmResult {
    let n = x0.len();
    assert!(n > 0, "empty parameter vector");
    let mut evals = 0u64;
    let mut eval = |x: &[f64], evals: &mut u64| -> f64 {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += if p[i].abs() > 1.0 { step * p[i].abs() } else { step };
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| eval(p, &mut evals)).collect();

    let mut converged = false;
    while evals < max_evals {
        // Stable order: by value, then by original insertion index.
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];

        let spread = values[worst] - values[best];
        if spread <= ftol * (values[best].abs() + 1e-12) + 1e-15 {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; n];
        for &i in &order[..n] {
            for (c, xi) in centroid.iter_mut().zip(&simplex[i]) {
                *c += xi;
            }
        }
        for c in &mut centroid {
            *c /= n as f64;
        }

        let blend = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let reflected = blend(1.0);
        let fr = eval(&reflected, &mut evals);
        if fr < values[best] {
            let expanded = blend(2.0);
            let fe = eval(&expanded, &mut evals);
            if fe < fr {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
        } else if fr < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = fr;
        } else {
            let contracted = if fr < values[worst] { blend(0.5) } else { blend(-0.5) };
            let fc = eval(&contracted, &mut evals);
            if fc < values[worst].min(fr) {
                simplex[worst] = contracted;
                values[worst] = fc;
            } else {
                // Shrink toward the best vertex.
                let anchor = simplex[best].clone();
                for &i in order.iter().skip(1) {
                    let p: Vec<f64> = anchor
                        .iter()
                        .zip(&simplex[i])
                        .map(|(a, x)| a + 0.5 * (x - a))
                        .collect();
                    values[i] = eval(&p, &mut evals);
                    simplex[i] = p;
                    if evals >= max_evals {
                        break;
                    }
                }
            }
        }
    }

    let mut best = 0;
    for i in 1..=n {
        if values[i].total_cmp(&values[best]).is_lt() {
            best = i;
        }
    }
    NmResult {
        x: simplex[best].clone(),
        value: values[best],
        evals,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let r = minimize(
            |x| (x[0] - 3.0).powi(2) + 4.0 * (x[1] + 1.0).powi(2),
            &[0.0, 0.0],
            0.5,
            4000,
            1e-14,
        );
        assert!(r.converged);
        assert!((r.x[0] - 3.0).abs() < 1e-6);
        assert!((r.x[1] + 1.0).abs() < 1e-6);
    }

    #[test]
    fn rosenbrock_two_dim() {
        let r = minimize(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            &[-1.2, 1.0],
            0.5,
            20000,
            1e-15,
        );
        assert!(r.value < 1e-10, "value {}", r.value);
    }

    #[test]
    fn deterministic_trajectory() {
        let run = || {
            minimize(
                |x| x.iter().enumerate().map(|(i, v)| (v - i as f64).powi(2)).sum(),
                &[0.3; 6],
                0.7,
                3000,
                1e-14,
            )
        };
        let a = run();
        let b = run();
        assert_eq!(a.x, b.x);
        assert_eq!(a.evals, b.evals);
        assert!(a.value.to_bits() == b.value.to_bits());
    }
}
