//! Adaptive composite Gauss–Legendre quadrature.
//!
//! Each panel is integrated with a 15-point rule and compared against the
//! sum over its two halves; panels whose halves disagree are bisected.

use crate::scalar::Scalar;

/// Fixed Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Scalar> GaussLegendre<T> {
    /// Computes nodes and weights by Newton iteration on `P_order`.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![T::zero(); order];
        let mut weights = vec![T::zero(); order];
        let n = T::from_count(order as u64);
        let half = order.div_ceil(2);
        for i in 0..half {
            // Tricomi initial guess for the i-th largest root
            let k = T::from_count(i as u64);
            let mut x = (T::PI() * (k + T::lit(0.75)) / (n + T::lit(0.5))).cos();
            let mut deriv = T::one();
            for _ in 0..100 {
                let (p, dp) = legendre(order, x);
                deriv = dp;
                let step = p / dp;
                x = x - step;
                if step.abs() <= T::epsilon() * T::lit(4.0) {
                    let (_, dp) = legendre(order, x);
                    deriv = dp;
                    break;
                }
            }
            let w = T::lit(2.0) / ((T::one() - x * x) * deriv * deriv);
            nodes[i] = -x;
            weights[i] = w;
            nodes[order - 1 - i] = x;
            weights[order - 1 - i] = w;
        }
        if order % 2 == 1 {
            nodes[order / 2] = T::zero();
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Applies the rule on `[a, b]`.
    pub fn apply<F: Fn(T) -> T>(&self, f: &F, a: T, b: T) -> T {
        let half = (b - a) * T::lit(0.5);
        let mid = (a + b) * T::lit(0.5);
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (&x, &w)| acc + w * f(mid + half * x))
            * half
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre<T: Scalar>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    for k in 2..=n {
        let kf = T::from_count(k as u64);
        let p2 = ((T::lit(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (T::one(), T::zero());
    }
    let nf = T::from_count(n as u64);
    (p1, nf * (x * p1 - p0) / (x * x - T::one()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance<T> {
    pub relative: T,
    pub absolute: T,
    pub max_panels: usize,
}

impl<T: Scalar> Default for Tolerance<T> {
    fn default() -> Self {
        Self {
            relative: T::lit(1e-12),
            absolute: T::lit(1e-15),
            max_panels: 20_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult<T> {
    pub value: T,
    pub error_estimate: T,
    pub panels: usize,
    pub converged: bool,
}

/// Adaptive integrator holding a fixed panel rule.
#[derive(Debug, Clone)]
pub struct Integrator<T> {
    rule: GaussLegendre<T>,
    tol: Tolerance<T>,
}

impl<T: Scalar> Default for Integrator<T> {
    fn default() -> Self {
        Self::new(15, Tolerance::default())
    }
}

impl<T: Scalar> Integrator<T> {
    pub fn new(order: usize, tol: Tolerance<T>) -> Self {
        Self {
            rule: GaussLegendre::new(order),
            tol,
        }
    }

    /// Integrates `f` over `[a, b]`, splitting first at the given interior
    /// breakpoints. An empty or reversed interval yields exactly zero
    /// without evaluating `f`.
    pub fn integrate<F: Fn(T) -> T>(&self, f: F, a: T, b: T, breakpoints: &[T]) -> QuadResult<T> {
        if !(b > a) {
            return QuadResult {
                value: T::zero(),
                error_estimate: T::zero(),
                panels: 0,
                converged: true,
            };
        }
        let mut cuts: Vec<T> = breakpoints
            .iter()
            .copied()
            .filter(|&c| c > a && c < b)
            .collect();
        cuts.sort_by(|x, y| x.partial_cmp(y).expect("finite breakpoints"));
        cuts.dedup();

        let mut edges = Vec::with_capacity(cuts.len() + 2);
        edges.push(a);
        edges.extend(cuts);
        edges.push(b);

        // (lo, hi, whole-panel estimate)
        let mut stack: Vec<(T, T, T)> = edges
            .windows(2)
            .map(|w| (w[0], w[1], self.rule.apply(&f, w[0], w[1])))
            .collect();
        let coarse = stack.iter().fold(T::zero(), |acc, p| acc + p.2.abs());
        let width = b - a;
        let threshold = (self.tol.relative * coarse).max(self.tol.absolute);

        let mut value = T::zero();
        let mut error = T::zero();
        let mut panels = 0usize;
        let mut converged = true;
        while let Some((lo, hi, whole)) = stack.pop() {
            let mid = (lo + hi) * T::lit(0.5);
            let left = self.rule.apply(&f, lo, mid);
            let right = self.rule.apply(&f, mid, hi);
            let refined = left + right;
            let diff = (refined - whole).abs();
            let budget = threshold * ((hi - lo) / width).max(T::lit(1e-3));
            let exhausted = panels + stack.len() >= self.tol.max_panels || !(mid > lo && mid < hi);
            if diff <= budget || exhausted {
                if diff > budget {
                    converged = false;
                }
                value = value + refined;
                error = error + diff;
                panels += 1;
            } else {
                stack.push((lo, mid, left));
                stack.push((mid, hi, right));
            }
        }
        QuadResult {
            value,
            error_estimate: error,
            panels,
            converged,
        }
    }
}
