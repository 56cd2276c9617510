//! Symmetric quadrature rules on reference triangles (barycentric, orders
//! 1-4) and tetrahedra (orders 1-3). Weights sum to one; scale by the
//! physical area or volume.

pub struct TriRule {
    pub bary: &'static [[f64; 3]],
    pub weights: &'static [f64],
}

pub struct TetRule {
    pub bary: &'static [[f64; 4]],
    pub weights: &'static [f64],
}

const THIRD: f64 = 1.0 / 3.0;

static TRI_1: TriRule = TriRule {
    bary: &[[THIRD, THIRD, THIRD]],
    weights: &[1.0],
};

static TRI_2: TriRule = TriRule {
    bary: &[
        [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
        [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
        [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
    ],
    weights: &[THIRD, THIRD, THIRD],
};

static TRI_3: TriRule = TriRule {
    bary: &[
        [THIRD, THIRD, THIRD],
        [0.6, 0.2, 0.2],
        [0.2, 0.6, 0.2],
        [0.2, 0.2, 0.6],
    ],
    weights: &[-9.0 / 16.0, 25.0 / 48.0, 25.0 / 48.0, 25.0 / 48.0],
};

// 6-point degree-4 rule (Dunavant)
const TA: f64 = 0.445948490915965;
const TB: f64 = 0.091576213509771;
const WA: f64 = 0.223381589678011;
const WB: f64 = 0.109951743655322;

static TRI_4: TriRule = TriRule {
    bary: &[
        [1.0 - 2.0 * TA, TA, TA],
        [TA, 1.0 - 2.0 * TA, TA],
        [TA, TA, 1.0 - 2.0 * TA],
        [1.0 - 2.0 * TB, TB, TB],
        [TB, 1.0 - 2.0 * TB, TB],
        [TB, TB, 1.0 - 2.0 * TB],
    ],
    weights: &[WA, WA, WA, WB, WB, WB],
};

pub fn triangle_rule(order: u8) -> &'static TriRule {
    match order {
        0 | 1 => &TRI_1,
        2 => &TRI_2,
        3 => &TRI_3,
        _ => &TRI_4,
    }
}

static TET_1: TetRule = TetRule {
    bary: &[[0.25, 0.25, 0.25, 0.25]],
    weights: &[1.0],
};

// degree-2: 4 symmetric points
const KA: f64 = 0.585410196624969; // (5 + 3 sqrt 5) / 20
const KB: f64 = 0.138196601125011; // (5 - sqrt 5) / 20

static TET_2: TetRule = TetRule {
    bary: &[
        [KA, KB, KB, KB],
        [KB, KA, KB, KB],
        [KB, KB, KA, KB],
        [KB, KB, KB, KA],
    ],
    weights: &[0.25, 0.25, 0.25, 0.25],
};

static TET_3: TetRule = TetRule {
    bary: &[
        [0.25, 0.25, 0.25, 0.25],
        [0.5, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0],
        [1.0 / 6.0, 0.5, 1.0 / 6.0, 1.0 / 6.0],
        [1.0 / 6.0, 1.0 / 6.0, 0.5, 1.0 / 6.0],
        [1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 0.5],
    ],
    weights: &[-0.8, 0.45, 0.45, 0.45, 0.45],
};

pub fn tet_rule(order: u8) -> &'static TetRule {
    match order {
        0 | 1 => &TET_1,
        2 => &TET_2,
        _ => &TET_3,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // exact integral of lambda0^a lambda1^b over the reference triangle,
    // divided by its area: a! b! 2! / (a + b + 2)!
    fn tri_monomial(a: u32, b: u32) -> f64 {
        let fact = |n: u32| (1..=n).map(|k| k as f64).product::<f64>();
        fact(a) * fact(b) * 2.0 / fact(a + b + 2)
    }

    fn tet_monomial(a: u32, b: u32, c: u32) -> f64 {
        let fact = |n: u32| (1..=n).map(|k| k as f64).product::<f64>();
        fact(a) * fact(b) * fact(c) * 6.0 / fact(a + b + c + 3)
    }

    #[test]
    fn triangle_rules_integrate_monomials_exactly() {
        for order in 1..=4u8 {
            let rule = triangle_rule(order);
            let wsum: f64 = rule.weights.iter().sum();
            assert!((wsum - 1.0).abs() < 1e-14, "order {order} weight sum {wsum}");
            for a in 0..=order as u32 {
                for b in 0..=(order as u32 - a) {
                    let num: f64 = rule
                        .bary
                        .iter()
                        .zip(rule.weights)
                        .map(|(l, w)| w * l[0].powi(a as i32) * l[1].powi(b as i32))
                        .sum();
                    let exact = tri_monomial(a, b);
                    assert!(
                        (num - exact).abs() < 1e-14,
                        "order {order}: l0^{a} l1^{b} = {num}, want {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn tet_rules_integrate_monomials_exactly() {
        for order in 1..=3u8 {
            let rule = tet_rule(order);
            let wsum: f64 = rule.weights.iter().sum();
            assert!((wsum - 1.0).abs() < 1e-14);
            for a in 0..=order as u32 {
                for b in 0..=(order as u32 - a) {
                    for c in 0..=(order as u32 - a - b) {
                        let num: f64 = rule
                            .bary
                            .iter()
                            .zip(rule.weights)
                            .map(|(l, w)| {
                                w * l[0].powi(a as i32) * l[1].powi(b as i32) * l[2].powi(c as i32)
                            })
                            .sum();
                        let exact = tet_monomial(a, b, c);
                        assert!(
                            (num - exact).abs() < 2e-14,
                            "order {order}: monomial ({a},{b},{c}) = {num}, want {exact}"
                        );
                    }
                }
            }
        }
    }
}
