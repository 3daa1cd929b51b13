// Shared fixtures for the integration suites. Metrics are generated from
// seeded RNGs so failures reproduce.
#![allow(dead_code, clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statica_core::expr::VarEnv;
use statica_core::{parse, ChartMetric, Interval, Point};

pub const XYZ: [&str; 3] = ["x", "y", "z"];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn coords() -> Vec<String> {
    XYZ.iter().map(|s| s.to_string()).collect()
}

fn cube(half: f64) -> Vec<Interval> {
    vec![Interval::new(-half, half); 3]
}

fn affine(rng: &mut ChaCha8Rng, scale: f64) -> String {
    let c: Vec<f64> = (0..4).map(|_| rng.gen_range(-scale..scale)).collect();
    format!("({:.6}*x + {:.6}*y + {:.6}*z + {:.6})", c[0], c[1], c[2], c[3])
}

/// A dense 3-metric built from trigonometric, exponential and root terms.
/// The diagonal dominates the off-diagonal by a wide margin on `[-1, 1]³`.
pub fn random_analytic_metric(seed: u64) -> ChartMetric {
    let mut r = rng(seed);
    let mut upper = Vec::new();
    for i in 0..3 {
        for j in i..3 {
            let src = if i == j {
                let b = r.gen_range(0.05..0.3);
                let e = r.gen_range(0.0..0.2);
                format!(
                    "2 + {b:.6}*sin({}) + {e:.6}*{}^2 + 0.1*sqrt(1 + {}^2)",
                    affine(&mut r, 1.5),
                    XYZ[(i + 1) % 3],
                    affine(&mut r, 1.0)
                )
            } else {
                let a = r.gen_range(-0.2..0.2);
                format!("{a:.6}*cos({})*exp(0.1*{})", affine(&mut r, 1.5), XYZ[i])
            };
            upper.push(parse(&src).expect("generated source parses"));
        }
    }
    ChartMetric::from_upper(coords(), upper, cube(1.0), None).expect("generated metric is valid")
}

/// `δ + ε P(x)` with random quadratic polynomials `P`, positive on `[-1, 1]³`.
pub fn perturbed_flat(seed: u64) -> ChartMetric {
    let mut r = rng(seed);
    let mut quad = || {
        let mut terms = vec![format!("{:.6}", r.gen_range(-1.0..1.0))];
        for (a, va) in XYZ.iter().enumerate() {
            terms.push(format!("{:.6}*{va}", r.gen_range(-1.0..1.0)));
            for vb in &XYZ[a..] {
                terms.push(format!("{:.6}*{va}*{vb}", r.gen_range(-1.0..1.0)));
            }
        }
        terms.join(" + ")
    };
    let mut upper = Vec::new();
    for i in 0..3 {
        for j in i..3 {
            let base = if i == j { "1" } else { "0" };
            upper.push(parse(&format!("{base} + 0.05*({})", quad())).unwrap());
        }
    }
    ChartMetric::from_upper(coords(), upper, cube(1.0), None).unwrap()
}

/// Uniform points inside the metric's (bounded) box, away from its faces.
pub fn box_points(metric: &ChartMetric, count: usize, seed: u64) -> Vec<Point> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            Point::new(
                metric
                    .domain()
                    .iter()
                    .map(|iv| {
                        let pad = 0.05 * (iv.hi - iv.lo);
                        r.gen_range(iv.lo + pad..iv.hi - pad)
                    })
                    .collect::<Vec<_>>(),
            )
        })
        .collect()
}

fn metric_at(metric: &ChartMetric, x: &[f64]) -> [[f64; 3]; 3] {
    let mut env = VarEnv::new();
    for (name, v) in metric.coords().iter().zip(x) {
        env.set(name, *v);
    }
    let mut g = [[0.0; 3]; 3];
    for (i, row) in g.iter_mut().enumerate() {
        for (j, gij) in row.iter_mut().enumerate() {
            *gij = metric.component(i, j).evaluate(&env).unwrap();
        }
    }
    g
}

fn inverse3(g: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let det = g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1])
        - g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0])
        + g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0]);
    let mut inv = [[0.0; 3]; 3];
    for (i, row) in inv.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let (a, b) = ((j + 1) % 3, (j + 2) % 3);
            let (c, d) = ((i + 1) % 3, (i + 2) % 3);
            *v = (g[a][c] * g[b][d] - g[a][d] * g[b][c]) / det;
        }
    }
    inv
}

/// `Γ^k_ij` from central differences of the components.
fn fd_christoffel(metric: &ChartMetric, x: &[f64], h: f64) -> [[[f64; 3]; 3]; 3] {
    let mut dg = [[[0.0; 3]; 3]; 3];
    for (m, dgm) in dg.iter_mut().enumerate() {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[m] += h;
        xm[m] -= h;
        let (gp, gm) = (metric_at(metric, &xp), metric_at(metric, &xm));
        for i in 0..3 {
            for j in 0..3 {
                dgm[i][j] = (gp[i][j] - gm[i][j]) / (2.0 * h);
            }
        }
    }
    let ginv = inverse3(&metric_at(metric, x));
    let mut gam = [[[0.0; 3]; 3]; 3];
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                gam[k][i][j] = (0..3)
                    .map(|l| 0.5 * ginv[k][l] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]))
                    .sum();
            }
        }
    }
    gam
}

/// Ricci tensor of a 3-metric by nested central differences, independent of
/// the symbolic engine. Accurate to roughly `1e-6`.
pub fn fd_ricci(metric: &ChartMetric, x: &[f64]) -> [[f64; 3]; 3] {
    let h = 1e-3;
    let gam = fd_christoffel(metric, x, h);
    let mut dgam = Vec::new();
    for m in 0..3 {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[m] += h;
        xm[m] -= h;
        let (p, q) = (fd_christoffel(metric, &xp, h), fd_christoffel(metric, &xm, h));
        let mut d = [[[0.0; 3]; 3]; 3];
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    d[k][i][j] = (p[k][i][j] - q[k][i][j]) / (2.0 * h);
                }
            }
        }
        dgam.push(d);
    }
    let mut ric = [[0.0; 3]; 3];
    for j in 0..3 {
        for k in 0..3 {
            let mut s = 0.0;
            for i in 0..3 {
                s += dgam[i][i][j][k] - dgam[j][i][i][k];
                for p in 0..3 {
                    s += gam[i][i][p] * gam[p][j][k] - gam[i][j][p] * gam[p][i][k];
                }
            }
            ric[j][k] = s;
        }
    }
    ric
}
