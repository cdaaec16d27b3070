//! Instances found by seeded search that make specific solver paths fire.
//! Each good is `(u, v, weight for u, weight for v)`.

use super::{additive_instance, Sample};

type GoodRow = (usize, usize, u64, u64);

const SAMPLES: &[(&str, usize, &[GoodRow])] = &[
    // A non-envied agent ends phase one preferring its free incident goods to its bundle.
    (
        "branch_b_exchange",
        4,
        &[
            (2, 3, 3, 4),
            (0, 2, 5, 6),
            (0, 1, 5, 7),
            (1, 3, 2, 3),
            (2, 3, 2, 5),
        ],
    ),
    // An envied agent prefers its envier's unit bundle plus its own free goods.
    (
        "branch_c_swap",
        3,
        &[(0, 1, 6, 4), (1, 2, 3, 0), (0, 1, 5, 3)],
    ),
    // Two adjacent envied agents; their shared goods go to two different enviers.
    (
        "adjacent_envied_pair",
        4,
        &[(2, 3, 6, 4), (0, 1, 6, 8), (1, 3, 0, 3)],
    ),
    // After phase one agent 0 envies two agents that share a further neighbour.
    (
        "envy_star_on_c4",
        4,
        &[(0, 3, 5, 4), (1, 3, 0, 2), (0, 2, 3, 7), (1, 2, 0, 0)],
    ),
    // An envied agent next to a non-envied agent that does not envy it.
    ("envied_next_to_bystander", 4, &[(0, 3, 3, 9), (2, 3, 0, 0)]),
    // Two envied agents, each dumping onto the same centre.
    ("two_dumps", 4, &[(0, 3, 4, 9), (0, 2, 6, 9)]),
];

pub(super) fn samples() -> Vec<Sample> {
    SAMPLES
        .iter()
        .map(|&(name, n, goods)| {
            let ends: Vec<[usize; 2]> = goods.iter().map(|g| [g.0, g.1]).collect();
            let weights: Vec<[u64; 2]> = goods.iter().map(|g| [g.2, g.3]).collect();
            Sample {
                name,
                instance: additive_instance(n, &ends, &weights),
            }
        })
        .collect()
}
