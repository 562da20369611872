//! Symmetric quadrature rules on the reference triangle.
//!
//! Points are given in barycentric coordinates and weights sum to the
//! reference area 1/2, so a physical integral is `Σ w · f · 2|T|`.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("no quadrature rule of order {0}")]
pub struct UnsupportedOrder(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Rule exact for polynomials of total degree `order` (1 to 4).
    pub fn new(order: usize) -> Result<Self, UnsupportedOrder> {
        let (points, weights) = match order {
            1 => (vec![[1.0 / 3.0; 3]], vec![0.5]),
            2 => {
                let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
                (
                    vec![[a, b, b], [b, a, b], [b, b, a]],
                    vec![1.0 / 6.0; 3],
                )
            }
            // Six-point degree-4 rule (Dunavant); also serves order 3.
            3 | 4 => {
                let a = 0.445_948_490_915_965;
                let wa = 0.223_381_589_678_011 / 2.0;
                let b = 0.091_576_213_509_771;
                let wb = 0.109_951_743_655_322 / 2.0;
                let a1 = 1.0 - 2.0 * a;
                let b1 = 1.0 - 2.0 * b;
                (
                    vec![
                        [a1, a, a],
                        [a, a1, a],
                        [a, a, a1],
                        [b1, b, b],
                        [b, b1, b],
                        [b, b, b1],
                    ],
                    vec![wa, wa, wa, wb, wb, wb],
                )
            }
            _ => return Err(UnsupportedOrder(order)),
        };
        Ok(Self { points, weights })
    }

    /// Rule of degree `2 · element_order`, used for all bilinear forms.
    pub fn for_element(element_order: usize) -> Self {
        Self::new((2 * element_order).min(4)).expect("element order is 1 or 2")
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}
