//! Brute-force reference solution: every state `(n1, n2, n3)` with
//! `n1 + n2 + n3 = W` weighted by `y1^n1 · y2^n2 · y3^n3 / n3!` and summed
//! directly. Only meant for small populations, as ground truth for [`crate::qnet`].

use crate::error::{Error, Result};
use crate::qnet::{NormalizationConstants, QnetSolution, QnetSpec};

/// Largest population the enumeration accepts.
pub const MAX_POPULATION: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateWeight {
    pub state: [u32; 3],
    pub weight: f64,
}

fn power(y: f64, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, _| acc * y)
}

/// All states of population `w`, each exactly once, with unnormalized mass.
pub fn state_weights(loads: [f64; 3], w: u32) -> Vec<StateWeight> {
    let [y1, y2, y3] = loads;
    let mut out = Vec::with_capacity(((w + 1) * (w + 2) / 2) as usize);
    for n1 in 0..=w {
        for n2 in 0..=(w - n1) {
            let n3 = w - n1 - n2;
            let mut delay = 1.0;
            for j in 1..=n3 {
                delay *= y3 / f64::from(j);
            }
            out.push(StateWeight {
                state: [n1, n2, n3],
                weight: power(y1, n1) * power(y2, n2) * delay,
            });
        }
    }
    out
}

fn total(loads: [f64; 3], w: u32) -> f64 {
    state_weights(loads, w).iter().map(|s| s.weight).sum()
}

pub fn enumerate_solution(spec: &QnetSpec) -> Result<QnetSolution> {
    spec.validate()?;
    let w = spec.population;
    if w > MAX_POPULATION {
        return Err(Error::EnumerationBound { population: w, bound: MAX_POPULATION });
    }
    let loads = spec.loads();
    let states = state_weights(loads, w);
    let g_w: f64 = states.iter().map(|s| s.weight).sum();

    let mut marginals = [vec![0.0; w as usize + 1], vec![0.0; w as usize + 1], vec![0.0; w as usize + 1]];
    for s in &states {
        let p = s.weight / g_w;
        for c in 0..3 {
            marginals[c][s.state[c] as usize] += p;
        }
    }
    let mean = |pmf: &[f64]| pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum::<f64>();
    let (n_ap, n_sta, n_rtpd) = (mean(&marginals[0]), mean(&marginals[1]), mean(&marginals[2]));

    let e = spec.unit_visits();
    let t_h = if w == 0 {
        0.0
    } else if loads[2] > 0.0 {
        // Little's law at the delay center: n3 = X · e3 · tau.
        e[0] * n_rtpd / loads[2]
    } else {
        e[0] * total(loads, w - 1) / g_w
    };

    let log_g = (0..=w).map(|n| total(loads, n).ln()).collect();
    Ok(QnetSolution {
        g: Some(NormalizationConstants { log_g }),
        t_h,
        n_ap,
        n_sta,
        n_rtpd,
        marginals: Some(marginals),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_customer_uniform() {
        let s = enumerate_solution(&QnetSpec::new(1, 1.0, 1.0, 1.0)).unwrap();
        for n in [s.n_ap, s.n_sta, s.n_rtpd] {
            assert!((n - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn two_customers_no_delay_weights() {
        let ws = state_weights([1.0, 1.0, 0.0], 2);
        assert_eq!(ws.len(), 6);
        for s in ws {
            let want = if s.state[2] == 0 { 1.0 } else { 0.0 };
            assert_eq!(s.weight, want, "{:?}", s.state);
        }
    }

    #[test]
    fn three_unit_centers() {
        let s = enumerate_solution(&QnetSpec::new(3, 1.0, 1.0, 1.0)).unwrap();
        let g = s.g.unwrap().get(3);
        // 4 states with n3 = 0, 3 with n3 = 1, 2 with n3 = 2 (weight 1/2), 1 with n3 = 3.
        assert!((g - 49.0 / 6.0).abs() < 1e-13);
    }

    #[test]
    fn bound_enforced() {
        let err = enumerate_solution(&QnetSpec::new(31, 1.0, 1.0, 1.0)).unwrap_err();
        assert!(matches!(err, Error::EnumerationBound { population: 31, .. }));
    }
}
