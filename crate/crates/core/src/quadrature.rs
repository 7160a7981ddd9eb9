//! Gauss–Legendre rules, cached per order.

use std::sync::OnceLock;

const MAX_ORDER: usize = 128;

/// Nodes and weights on [-1, 1].
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

fn compute(n: usize) -> GaussLegendre {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 {
                1.0
            } else if n == 1 {
                x
            } else {
                p1
            };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pnm1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    GaussLegendre { nodes, weights }
}

/// Cached n-point rule (1 ≤ n ≤ 128).
pub fn gauss_legendre(n: usize) -> &'static GaussLegendre {
    static TABLE: OnceLock<Vec<GaussLegendre>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        (0..=MAX_ORDER)
            .map(|n| {
                if n == 0 {
                    GaussLegendre {
                        nodes: vec![],
                        weights: vec![],
                    }
                } else {
                    compute(n)
                }
            })
            .collect()
    });
    &table[n.clamp(1, MAX_ORDER)]
}
