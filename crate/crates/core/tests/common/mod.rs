#![allow(dead_code)]

use std::collections::BTreeMap;

use mkf_core::invariants::{Laurent, Var};

/// Rolfsen 3_1 as tabulated by KnotTheory (left-handed).
pub const TABLE_TREFOIL: [[usize; 4]; 3] = [[1, 4, 2, 5], [3, 6, 4, 1], [5, 2, 6, 3]];
/// Rolfsen 4_1.
pub const TABLE_FIGURE_EIGHT: [[usize; 4]; 4] = [[4, 2, 5, 1], [8, 6, 1, 5], [6, 3, 7, 4], [2, 7, 3, 8]];

type Poly = BTreeMap<i64, i64>;

fn mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = Poly::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            *out.entry(ea + eb).or_insert(0) += ca * cb;
        }
    }
    out.retain(|_, c| *c != 0);
    out
}

fn find(p: &mut [usize], mut x: usize) -> usize {
    while p[x] != x {
        p[x] = p[p[x]];
        x = p[x];
    }
    x
}

fn positive(x: &[usize; 4]) -> bool {
    let [i, j, k, l] = *x;
    i == j || k == l || j == l + 1 || l > j + 1
}

/// Kauffman bracket in `A` by brute force over all `2^n` states, then
/// `V(t) = (-A³)^{-w} ⟨D⟩` with `A = t^{-1/4}`.
pub fn state_sum_jones(pd: &[[usize; 4]], extra_circles: usize) -> Laurent {
    let n = pd.len();
    assert!(n <= 18, "oracle is exponential");
    let d: Poly = [(2, -1), (-2, -1)].into_iter().collect();
    let mut bracket = Poly::new();
    let labels = 2 * n;
    for state in 0u64..(1 << n) {
        let mut p: Vec<usize> = (0..=labels).collect();
        let mut a_count = 0i64;
        for (i, x) in pd.iter().enumerate() {
            let (u, v) = if state >> i & 1 == 0 {
                a_count += 1;
                ((x[0], x[1]), (x[2], x[3]))
            } else {
                ((x[0], x[3]), (x[1], x[2]))
            };
            for (s, t) in [u, v] {
                let (rs, rt) = (find(&mut p, s), find(&mut p, t));
                p[rs] = rt;
            }
        }
        let loops = if n == 0 { 1 } else { (1..=labels).filter(|&l| find(&mut p, l) == l).count() };
        let mut term: Poly = [(a_count - (n as i64 - a_count), 1)].into_iter().collect();
        for _ in 1..loops + extra_circles {
            term = mul(&term, &d);
        }
        for (e, c) in term {
            *bracket.entry(e).or_insert(0) += c;
        }
    }
    bracket.retain(|_, c| *c != 0);
    let w: i64 = pd.iter().map(|x| if positive(x) { 1 } else { -1 }).sum();
    let sign = if w % 2 == 0 { 1 } else { -1 };
    Laurent::from_terms(
        Var::T,
        bracket.into_iter().map(|(e, c)| {
            let e = e - 3 * w;
            assert_eq!(e % 4, 0, "knot diagrams have exponents in 4Z");
            (-e / 4, sign * c)
        }),
    )
}

pub fn poly(text: &str) -> Laurent {
    text.parse().unwrap()
}
