#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn workspace_file(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

pub fn fixture_text() -> String {
    std::fs::read_to_string(workspace_file("data/greece_2020.csv")).expect("fixture readable")
}

pub fn golden_table_text() -> String {
    std::fs::read_to_string(workspace_file("fixtures/table1.csv")).expect("table1 readable")
}

/// Row of the truncated power basis written out independently of the crate.
pub fn power_row(x: f64, degree: usize, knots: &[f64]) -> Vec<f64> {
    let mut row: Vec<f64> = (0..=degree).map(|p| x.powi(p as i32)).collect();
    for &k in knots {
        let d = x - k;
        row.push(if d > 0.0 { d.powi(degree as i32) } else { 0.0 });
    }
    row
}

/// Double-double number: `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn from(v: f64) -> Self {
        Dd { hi: v, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        Dd {
            hi: s,
            lo: (a - (s - bb)) + (b - bb),
        }
    }

    fn renorm(hi: f64, lo: f64) -> Dd {
        let s = hi + lo;
        Dd {
            hi: s,
            lo: lo - (s - hi),
        }
    }

    pub fn add(self, o: Dd) -> Dd {
        let s = Dd::two_sum(self.hi, o.hi);
        let t = Dd::two_sum(self.lo, o.lo);
        let r = Dd::renorm(s.hi, s.lo + t.hi);
        Dd::renorm(r.hi, r.lo + t.lo)
    }

    pub fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    pub fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        Dd::renorm(p, e + (self.hi * o.lo + self.lo * o.hi))
    }

    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul(Dd::from(q1)));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul(Dd::from(q2)));
        let q3 = r.hi / o.hi;
        Dd::renorm(q1, q2).add(Dd::from(q3))
    }

    pub fn abs(self) -> Dd {
        if self.hi < 0.0 {
            self.neg()
        } else {
            self
        }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// Gaussian elimination with full (row and column) pivoting, carried out in
/// double-double precision.
pub fn solve_full_pivot(a: Vec<Vec<f64>>, b: Vec<f64>) -> Option<Vec<f64>> {
    let a = a.into_iter().map(|r| r.into_iter().map(Dd::from).collect()).collect();
    let b = b.into_iter().map(Dd::from).collect();
    solve_full_pivot_dd(a, b).map(|x| x.into_iter().map(Dd::to_f64).collect())
}

#[allow(clippy::needless_range_loop)]
pub fn solve_full_pivot_dd(mut a: Vec<Vec<Dd>>, mut b: Vec<Dd>) -> Option<Vec<Dd>> {
    let n = b.len();
    let mut col_perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (mut pr, mut pc, mut best) = (k, k, 0.0f64);
        for (r, row) in a.iter().enumerate().skip(k) {
            for (c, v) in row.iter().enumerate().skip(k) {
                if v.abs().hi > best {
                    best = v.abs().hi;
                    pr = r;
                    pc = c;
                }
            }
        }
        if best == 0.0 {
            return None;
        }
        a.swap(k, pr);
        b.swap(k, pr);
        for row in a.iter_mut() {
            row.swap(k, pc);
        }
        col_perm.swap(k, pc);
        for r in k + 1..n {
            let f = a[r][k].div(a[k][k]);
            if f.hi != 0.0 {
                for c in k..n {
                    a[r][c] = a[r][c].sub(f.mul(a[k][c]));
                }
                b[r] = b[r].sub(f.mul(b[k]));
            }
        }
    }
    let mut z = vec![Dd::ZERO; n];
    for k in (0..n).rev() {
        let mut s = Dd::ZERO;
        for c in k + 1..n {
            s = s.add(a[k][c].mul(z[c]));
        }
        z[k] = b[k].sub(s).div(a[k][k]);
    }
    let mut x = vec![Dd::ZERO; n];
    for (k, &c) in col_perm.iter().enumerate() {
        x[c] = z[k];
    }
    Some(x)
}

/// Least squares through `X^T X beta = X^T y`, with the cross products
/// accumulated and solved in double-double precision.
pub fn normal_equations(x: &[f64], y: &[f64], degree: usize, knots: &[f64]) -> Option<Vec<f64>> {
    let rows: Vec<Vec<f64>> = x.iter().map(|&v| power_row(v, degree, knots)).collect();
    let j = rows[0].len();
    let mut xtx = vec![vec![Dd::ZERO; j]; j];
    let mut xty = vec![Dd::ZERO; j];
    for (row, &yi) in rows.iter().zip(y) {
        for a in 0..j {
            xty[a] = xty[a].add(Dd::from(row[a]).mul(Dd::from(yi)));
            for b in 0..j {
                xtx[a][b] = xtx[a][b].add(Dd::from(row[a]).mul(Dd::from(row[b])));
            }
        }
    }
    solve_full_pivot_dd(xtx, xty).map(|v| v.into_iter().map(Dd::to_f64).collect())
}

pub fn evaluate(beta: &[f64], x: f64, degree: usize, knots: &[f64]) -> f64 {
    power_row(x, degree, knots).iter().zip(beta).map(|(r, b)| r * b).sum()
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let den = b.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    num / den
}

/// Random regression-spline problem on `[0, 1]` with every knot interval
/// holding at least `degree + 2` points.
#[derive(Debug, Clone)]
pub struct SplineInstance {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub degree: usize,
    pub knots: Vec<f64>,
}

pub fn spline_instance(rng: &mut ChaCha8Rng) -> SplineInstance {
    let degree = rng.random_range(0..=3usize);
    let k = rng.random_range(0..=5usize);
    let per = degree + 2;
    let min_n = (k + 1) * per;
    let n = rng.random_range(min_n.max(8)..=50);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    x.sort_by(|a, b| a.partial_cmp(b).unwrap());
    x.dedup();
    let n = x.len();
    let mut knots = Vec::with_capacity(k);
    let mut lo = per;
    for i in 0..k {
        let remaining = k - i;
        let hi = n - remaining * per;
        let cut = if hi > lo { rng.random_range(lo..=hi) } else { lo };
        knots.push(0.5 * (x[cut - 1] + x[cut]));
        lo = cut + per;
    }
    let a: f64 = rng.random_range(-3.0..3.0);
    let w: f64 = rng.random_range(1.0..8.0);
    let y = x
        .iter()
        .map(|&v| a * (w * v).sin() + v * v + 0.1 * (rng.random::<f64>() - 0.5))
        .collect();
    SplineInstance { x, y, degree, knots }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Pairwise visibility checked against every intermediate point.
pub fn brute_visibility(values: &[f64]) -> Vec<(usize, usize)> {
    let n = values.len();
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let visible = (a + 1..b).all(|c| {
                let chord = values[b] + (values[a] - values[b]) * (b - c) as f64 / (b - a) as f64;
                values[c] < chord
            });
            if visible {
                edges.push((a, b));
            }
        }
    }
    edges
}

/// Same criterion in exact integer arithmetic.
pub fn brute_visibility_int(values: &[i64]) -> Vec<(usize, usize)> {
    let n = values.len();
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let visible = (a + 1..b).all(|c| {
                let (ya, yb, yc) = (values[a] as i128, values[b] as i128, values[c] as i128);
                (yc - yb) * ((b - a) as i128) < (ya - yb) * ((b - c) as i128)
            });
            if visible {
                edges.push((a, b));
            }
        }
    }
    edges
}

/// Newman modularity from the adjacency matrix definition.
pub fn modularity_oracle(n: usize, edges: &[(usize, usize)], assignment: &[usize]) -> f64 {
    let m = edges.len() as f64;
    let mut adj = vec![vec![0.0; n]; n];
    let mut deg = vec![0.0; n];
    for &(a, b) in edges {
        adj[a][b] = 1.0;
        adj[b][a] = 1.0;
        deg[a] += 1.0;
        deg[b] += 1.0;
    }
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if assignment[i] == assignment[j] {
                q += adj[i][j] - deg[i] * deg[j] / (2.0 * m);
            }
        }
    }
    q / (2.0 * m)
}

/// Best modularity over every set partition (restricted growth strings).
pub fn exhaustive_best_modularity(n: usize, edges: &[(usize, usize)]) -> f64 {
    fn rec(i: usize, max: usize, cur: &mut Vec<usize>, n: usize, edges: &[(usize, usize)], best: &mut f64) {
        if i == n {
            *best = best.max(modularity_oracle(n, edges, cur));
            return;
        }
        for c in 0..=max + 1 {
            cur.push(c);
            rec(i + 1, max.max(c), cur, n, edges, best);
            cur.pop();
        }
    }
    let mut best = f64::NEG_INFINITY;
    let mut cur = vec![0];
    rec(1, 0, &mut cur, n, edges, &mut best);
    best
}
