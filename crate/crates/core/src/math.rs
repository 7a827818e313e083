//! CES cost-function evaluation and the Fréchet price-index constant.

use statrs::function::gamma::gamma;

/// Unit cost of a two-input CES aggregate in calibrated-share form:
/// `[w1*p1^(1-s) + w2*p2^(1-s)]^(1/(1-s))`.
///
/// `s = 0` is the Leontief limit (weighted sum of prices), `s = 1` the
/// Cobb-Douglas limit (weighted geometric mean).
pub fn ces_cost2(weight1: f64, price1: f64, weight2: f64, price2: f64, elasticity: f64) -> f64 {
    if weight1 == 0.0 {
        return price2;
    }
    if weight2 == 0.0 {
        return price1;
    }
    if elasticity == 0.0 {
        weight1 * price1 + weight2 * price2
    } else if elasticity == 1.0 {
        price1.powf(weight1) * price2.powf(weight2)
    } else {
        let e = 1.0 - elasticity;
        (weight1 * price1.powf(e) + weight2 * price2.powf(e)).powf(1.0 / e)
    }
}

/// Unit cost of an n-input CES aggregate with calibrated shares `weights`.
pub fn ces_cost(weights: &[f64], prices: &[f64], elasticity: f64) -> f64 {
    debug_assert_eq!(weights.len(), prices.len());
    if elasticity == 0.0 {
        weights.iter().zip(prices).map(|(w, p)| w * p).sum()
    } else if elasticity == 1.0 {
        weights
            .iter()
            .zip(prices)
            .map(|(&w, &p)| if w > 0.0 { w * p.ln() } else { 0.0 })
            .sum::<f64>()
            .exp()
    } else {
        let e = 1.0 - elasticity;
        weights
            .iter()
            .zip(prices)
            .map(|(&w, &p)| if w > 0.0 { w * p.powf(e) } else { 0.0 })
            .sum::<f64>()
            .powf(1.0 / e)
    }
}

/// Value share of input 1 in the two-input CES bundle at the given prices.
/// The bundle cost `total` must be `ces_cost2(..)` of the same arguments.
pub fn ces_value_share2(weight1: f64, price1: f64, total: f64, elasticity: f64) -> f64 {
    if weight1 == 0.0 {
        return 0.0;
    }
    if elasticity == 1.0 {
        // Cobb-Douglas value shares equal the weights.
        weight1
    } else {
        weight1 * (price1 / total).powf(1.0 - elasticity)
    }
}

/// Price-index constant of the Bertrand/Fréchet market structure:
/// `([1 - (s-1)/t + ((s-1)/t)(s/(s-1))^(-t)] * Gamma((1-s+t)/t))^(1/(1-s))`
/// with `t` the Fréchet dispersion and `s` the variety elasticity. Finite
/// only for `t > s - 1`.
pub fn gamma1(theta: f64, sigma: f64) -> f64 {
    let a = (sigma - 1.0) / theta;
    let markup_term = 1.0 - a + a * (sigma / (sigma - 1.0)).powf(-theta);
    let g = gamma((1.0 - sigma + theta) / theta);
    (markup_term * g).powf(1.0 / (1.0 - sigma))
}

/// `Gamma(1 - beta)`, the constant of the idea-diffusion law of motion.
pub fn gamma_one_minus(beta: f64) -> f64 {
    gamma(1.0 - beta)
}

/// Cobb-Douglas price-index constant `prod_i w_i^(-w_i)`; zero weights
/// contribute a factor of one.
pub fn cobb_douglas_constant(weights: &[f64]) -> f64 {
    weights
        .iter()
        .map(|&w| if w > 0.0 { -w * w.ln() } else { 0.0 })
        .sum::<f64>()
        .exp()
}
