use serde::{Deserialize, Serialize};

use super::CouplingError;
use crate::matcore::DenseMatrix;
use crate::rng::{normal, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn eval(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative; ReLU uses 0 at the kink.
    #[inline]
    pub fn deriv(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
        }
    }

    /// Derivative expressed through the activation's output `a = eval(z)`.
    #[inline]
    pub fn deriv_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputTransform {
    Identity,
    /// `exp(tanh(z))`, bounded in `(1/e, e)`.
    ExpTanh,
    /// `exp(z)`.
    Exp,
}

impl OutputTransform {
    pub fn is_positive(self) -> bool {
        !matches!(self, OutputTransform::Identity)
    }

    #[inline]
    pub fn eval(self, z: f64) -> f64 {
        match self {
            OutputTransform::Identity => z,
            OutputTransform::ExpTanh => z.tanh().exp(),
            OutputTransform::Exp => z.exp(),
        }
    }

    /// Log of the output; only meaningful for positive transforms.
    #[inline]
    pub fn eval_ln(self, z: f64) -> f64 {
        match self {
            OutputTransform::Identity => z.ln(),
            OutputTransform::ExpTanh => z.tanh(),
            OutputTransform::Exp => z,
        }
    }

    #[inline]
    pub fn deriv(self, z: f64) -> f64 {
        match self {
            OutputTransform::Identity => 1.0,
            OutputTransform::ExpTanh => {
                let t = z.tanh();
                t.exp() * (1.0 - t * t)
            }
            OutputTransform::Exp => z.exp(),
        }
    }
}

/// Fully connected network: affine, activation, ..., affine, output transform.
///
/// `weights[l]` has shape `widths[l+1] x widths[l]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub widths: Vec<usize>,
    pub activation: Activation,
    pub output: OutputTransform,
    pub weights: Vec<DenseMatrix>,
    pub biases: Vec<Vec<f64>>,
}

impl MlpSpec {
    pub fn new(
        widths: Vec<usize>,
        activation: Activation,
        output: OutputTransform,
        weights: Vec<DenseMatrix>,
        biases: Vec<Vec<f64>>,
    ) -> Result<Self, CouplingError> {
        let m = Self { widths, activation, output, weights, biases };
        m.validate()?;
        Ok(m)
    }

    /// All weights and biases zero.
    pub fn zeros(widths: Vec<usize>, activation: Activation, output: OutputTransform) -> Self {
        let weights = widths.windows(2).map(|w| DenseMatrix::zeros(w[1], w[0])).collect();
        let biases = widths[1..].iter().map(|&w| vec![0.0; w]).collect();
        Self { widths, activation, output, weights, biases }
    }

    /// Gaussian weights with standard deviation `gain / sqrt(fan_in)`, zero biases.
    pub fn random(widths: Vec<usize>, activation: Activation, output: OutputTransform, gain: f64, rng: &mut Rng) -> Self {
        let mut m = Self::zeros(widths, activation, output);
        for w in &mut m.weights {
            let std = gain / (w.cols() as f64).sqrt();
            *w = DenseMatrix::from_fn(w.rows(), w.cols(), |_, _| std * normal(rng));
        }
        m
    }

    pub fn validate(&self) -> Result<(), CouplingError> {
        if self.widths.len() < 2 {
            return Err(CouplingError::InvalidLayer("an MLP needs at least input and output widths".into()));
        }
        if self.weights.len() != self.widths.len() - 1 || self.biases.len() != self.widths.len() - 1 {
            return Err(CouplingError::InvalidLayer("weight/bias count does not match widths".into()));
        }
        for (l, w) in self.weights.iter().enumerate() {
            if w.rows() != self.widths[l + 1] || w.cols() != self.widths[l] || self.biases[l].len() != self.widths[l + 1] {
                return Err(CouplingError::InvalidLayer(format!("layer {l} shape does not match widths")));
            }
        }
        if self.biases.iter().flatten().any(|b| !b.is_finite()) {
            return Err(CouplingError::InvalidLayer("non-finite bias".into()));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap()
    }

    /// Pre-transform output of the last affine map.
    fn raw(&self, x: &[f64]) -> Vec<f64> {
        let mut h = x.to_vec();
        let last = self.weights.len() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = w.mul_vec(&h).expect("validated shapes");
            for (zi, bi) in z.iter_mut().zip(b) {
                *zi += bi;
            }
            if l < last {
                z.iter_mut().for_each(|v| *v = self.activation.eval(*v));
            }
            h = z;
        }
        h
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.raw(x).into_iter().map(|z| self.output.eval(z)).collect()
    }

    /// Elementwise log of the output (positive transforms only).
    pub fn forward_ln(&self, x: &[f64]) -> Vec<f64> {
        self.raw(x).into_iter().map(|z| self.output.eval_ln(z)).collect()
    }

    /// Output and its Jacobian with respect to the input.
    pub fn forward_with_jacobian(&self, x: &[f64]) -> (Vec<f64>, DenseMatrix) {
        let mut h = x.to_vec();
        let mut jac = DenseMatrix::identity(x.len());
        let last = self.weights.len() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = w.mul_vec(&h).expect("validated shapes");
            for (zi, bi) in z.iter_mut().zip(b) {
                *zi += bi;
            }
            jac = w * &jac;
            for (i, zi) in z.iter_mut().enumerate() {
                let (v, g) = if l < last {
                    (self.activation.eval(*zi), self.activation.deriv(*zi))
                } else {
                    (self.output.eval(*zi), self.output.deriv(*zi))
                };
                for j in 0..jac.cols() {
                    jac[(i, j)] *= g;
                }
                *zi = v;
            }
            h = z;
        }
        (h, jac)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{normal_vec, seeded};

    #[test]
    fn jacobian_matches_central_differences() {
        let mut rng = seeded(31);
        for (act, out) in [
            (Activation::Tanh, OutputTransform::Identity),
            (Activation::Tanh, OutputTransform::ExpTanh),
            (Activation::Relu, OutputTransform::Exp),
        ] {
            let net = MlpSpec::random(vec![3, 7, 5, 2], act, out, 1.0, &mut rng);
            let x = normal_vec(&mut rng, 3);
            let (_, j) = net.forward_with_jacobian(&x);
            let h = 1e-6;
            for c in 0..3 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[c] += h;
                xm[c] -= h;
                let (fp, fm) = (net.forward(&xp), net.forward(&xm));
                for r in 0..2 {
                    let fd = (fp[r] - fm[r]) / (2.0 * h);
                    assert!((fd - j[(r, c)]).abs() <= 1e-5 * (1.0 + fd.abs()), "{act:?} {out:?}");
                }
            }
        }
    }

    #[test]
    fn constant_network() {
        let mut net = MlpSpec::zeros(vec![2, 4, 2], Activation::Relu, OutputTransform::Exp);
        net.biases[1] = vec![1.0, 1.0];
        assert_eq!(net.forward(&[3.0, -2.0]), vec![1f64.exp(); 2]);
        assert_eq!(net.forward_ln(&[3.0, -2.0]), vec![1.0; 2]);
    }

    #[test]
    fn rejects_bad_shapes() {
        let mut net = MlpSpec::zeros(vec![2, 3, 2], Activation::Tanh, OutputTransform::Identity);
        net.weights[0] = DenseMatrix::zeros(2, 2);
        assert!(net.validate().is_err());
    }
}
