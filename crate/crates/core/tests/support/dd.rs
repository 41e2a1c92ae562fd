//! Double-double arithmetic (~106-bit significand) and a forward pass of the
//! arrangement loss written against it. Used as a finite-difference oracle:
//! with a 1e-5 step the f64 loss's rounding noise would swamp the smallest
//! gradient entries, the double-double loss does not.

#![allow(dead_code)]

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    const LN2: Dd = Dd {
        hi: std::f64::consts::LN_2,
        lo: 2.319_046_813_846_299_6e-17,
    };

    pub fn from_f64(v: f64) -> Dd {
        Dd { hi: v, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn mul_pow2(self, p: f64) -> Dd {
        Dd {
            hi: self.hi * p,
            lo: self.lo * p,
        }
    }

    pub fn exp(self) -> Dd {
        if self.hi > 700.0 {
            return Dd::from_f64(f64::INFINITY);
        }
        if self.hi < -700.0 {
            return Dd::ZERO;
        }
        let k = (self.hi / std::f64::consts::LN_2).round();
        let r = self - Dd::LN2 * Dd::from_f64(k);
        // exp(r) = exp(r / 2^10)^(2^10)
        let s = r.mul_pow2(1.0 / 1024.0);
        let mut term = Dd::ONE;
        let mut sum = Dd::ONE;
        for n in 1..=14 {
            term = term * s / Dd::from_f64(n as f64);
            sum = sum + term;
        }
        for _ in 0..10 {
            sum = sum * sum;
        }
        sum.mul_pow2(2f64.powi(k as i32))
    }

    pub fn tanh(self) -> Dd {
        if self.hi < 0.0 {
            return -(-self).tanh();
        }
        let e = (-(self + self)).exp();
        (Dd::ONE - e) / (Dd::ONE + e)
    }

    pub fn sigmoid(self) -> Dd {
        Dd::ONE / (Dd::ONE + (-self).exp())
    }

    pub fn abs(self) -> Dd {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::from_f64(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Dd::from_f64(q2);
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from_f64(q3)
    }
}

/// Flat parameter layout mirroring the library's canonical order:
/// four gates (input, forget, cell, output) of `w_input (H x C)`,
/// `w_hidden (H x H)`, `bias (H)`, then head layers `weight`, `bias`.
pub struct DdNet {
    pub c: usize,
    pub h: usize,
    pub layers: usize,
    pub n: usize,
}

impl DdNet {
    /// Negated expected score of `levels` (N rows of C levels) under the
    /// flat parameters `theta`, with `score[a][b][c]` the triple scores.
    pub fn loss(&self, theta: &[f64], levels: &[Vec<u8>], score: &dyn Fn(usize, usize, usize) -> f64) -> Dd {
        let (c, h, n) = (self.c, self.h, self.n);
        let mut cursor = 0;
        let mut take = |len: usize| {
            let out: Vec<Dd> = theta[cursor..cursor + len].iter().map(|&v| Dd::from_f64(v)).collect();
            cursor += len;
            out
        };
        let mut gates = Vec::new();
        for _ in 0..4 {
            gates.push((take(h * c), take(h * h), take(h)));
        }
        let mut head = Vec::new();
        if self.layers == 2 {
            head.push((take(h * h), take(h), h));
        }
        head.push((take(n * h), take(n), n));
        assert_eq!(cursor, theta.len());

        let matvec = |w: &[Dd], x: &[Dd], rows: usize| -> Vec<Dd> {
            let cols = x.len();
            (0..rows)
                .map(|r| (0..cols).fold(Dd::ZERO, |acc, k| acc + w[r * cols + k] * x[k]))
                .collect()
        };

        // LSTM
        let mut hprev = vec![Dd::ZERO; h];
        let mut cprev = vec![Dd::ZERO; h];
        let mut probs: Vec<Vec<Dd>> = Vec::new();
        for row in levels {
            let x: Vec<Dd> = row.iter().map(|&v| Dd::from_f64(v as f64) / Dd::from_f64(15.0)).collect();
            let pre: Vec<Vec<Dd>> = gates
                .iter()
                .map(|(wi, wh, b)| {
                    let a = matvec(wi, &x, h);
                    let r = matvec(wh, &hprev, h);
                    (0..h).map(|u| a[u] + r[u] + b[u]).collect()
                })
                .collect();
            let mut hnew = vec![Dd::ZERO; h];
            let mut cnew = vec![Dd::ZERO; h];
            for u in 0..h {
                let i = pre[0][u].sigmoid();
                let f = pre[1][u].sigmoid();
                let g = pre[2][u].tanh();
                let o = pre[3][u].sigmoid();
                cnew[u] = f * cprev[u] + i * g;
                hnew[u] = o * cnew[u].tanh();
            }
            // head
            let mut act = hnew.clone();
            for (li, (w, b, rows)) in head.iter().enumerate() {
                let z = matvec(w, &act, *rows);
                let z: Vec<Dd> = (0..*rows).map(|r| z[r] + b[r]).collect();
                act = if li + 1 < head.len() {
                    z.into_iter().map(|v| if v.hi > 0.0 { v } else { Dd::ZERO }).collect()
                } else {
                    z
                };
            }
            let max = act.iter().fold(f64::NEG_INFINITY, |m, v| m.max(v.hi));
            let e: Vec<Dd> = act.iter().map(|&v| (v - Dd::from_f64(max)).exp()).collect();
            let sum = e.iter().fold(Dd::ZERO, |a, &b| a + b);
            probs.push(e.into_iter().map(|v| v / sum).collect());
            hprev = hnew;
            cprev = cnew;
        }

        // non-repetition transform
        let mut psg = vec![vec![Dd::ZERO; n]; n];
        for j in 0..n {
            let mut prior = Dd::ONE;
            for i in 0..n {
                psg[i][j] = probs[i][j] * prior;
                prior = prior * (Dd::ONE - psg[i][j]);
            }
        }

        let mut total = Dd::ZERO;
        for t in 0..n - 2 {
            for a in 0..n {
                for b in 0..n {
                    for cc in 0..n {
                        let s = score(a, b, cc);
                        if s != 0.0 {
                            total = total + psg[t][a] * psg[t + 1][b] * psg[t + 2][cc] * Dd::from_f64(s);
                        }
                    }
                }
            }
        }
        -total
    }
}
