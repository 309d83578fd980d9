//! Shared seeded corpus for the integration suites.

#![allow(dead_code)]

use stociso::channel::{ComponentKind, MixedIsometryForm, generate_form};

use ComponentKind::{Antiunitary as A, Unitary as U};

pub struct Instance {
    pub dim_in: usize,
    pub dim_out: usize,
    pub weights: Vec<f64>,
    pub kinds: Vec<ComponentKind>,
    pub seed: u64,
}

impl Instance {
    pub fn form(&self) -> MixedIsometryForm {
        generate_form(self.dim_in, self.dim_out, &self.weights, &self.kinds, self.seed)
            .expect("corpus instance is valid")
    }
}

/// 50 instances: 4 with d = 1 (unitary kinds only: on C¹ the antiunitary
/// action coincides with the unitary one), 13 patterns for each d in {2,3,4},
/// and 7 extra irregular ones. Output dims leave room for a nontrivial
/// residual space where they can.
pub fn corpus() -> Vec<Instance> {
    let third = 1.0 / 3.0;
    let mut out = Vec::with_capacity(50);
    let mut seed = 100u64;
    let mut push = |dim_in: usize, extra: usize, weights: Vec<f64>, kinds: Vec<ComponentKind>| {
        let dim_out = (dim_in * kinds.len() + extra).min(16);
        seed += 1;
        out.push(Instance {
            dim_in,
            dim_out,
            weights,
            kinds,
            seed,
        });
    };

    for (w, k) in [
        (vec![1.0], vec![U]),
        (vec![0.5, 0.5], vec![U, U]),
        (vec![0.6, 0.4], vec![U, U]),
        (vec![third, third, third], vec![U, U, U]),
    ] {
        push(1, 2, w, k);
    }

    for d in [2usize, 3, 4] {
        let patterns: Vec<(Vec<f64>, Vec<ComponentKind>)> = vec![
            (vec![1.0], vec![U]),
            (vec![1.0], vec![A]),
            (vec![0.5, 0.5], vec![U, U]),
            (vec![0.5, 0.5], vec![U, A]),
            (vec![0.5, 0.5], vec![A, A]),
            (vec![0.7, 0.3], vec![U, A]),
            (vec![0.6, 0.4], vec![A, U]),
            (vec![third, third, third], vec![U, U, U]),
            (vec![third, third, third], vec![U, U, A]),
            (vec![third, third, third], vec![U, A, A]),
            (vec![third, third, third], vec![A, A, A]),
            (vec![0.5, 0.3, 0.2], vec![U, A, U]),
            (vec![0.4, 0.4, 0.2], vec![U, A, U]),
        ];
        for (i, (w, k)) in patterns.into_iter().enumerate() {
            push(d, [0, 1, 2][i % 3], w, k);
        }
    }

    push(2, 3, vec![0.9, 0.1], vec![U, A]);
    push(2, 1, vec![0.25, 0.25, 0.5], vec![U, A, U]);
    push(2, 0, vec![0.5, 0.5], vec![A, U]);
    push(3, 2, vec![0.9, 0.1], vec![A, U]);
    push(3, 1, vec![0.45, 0.45, 0.1], vec![U, U, A]);
    push(4, 4, vec![0.8, 0.2], vec![U, A]);
    push(4, 0, vec![0.5, 0.25, 0.25], vec![U, A, A]);

    assert_eq!(out.len(), 50);
    out
}
