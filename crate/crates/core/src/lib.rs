pub mod diffgeo;
pub mod error;
pub mod families;
pub mod jet;
pub mod linalg;
pub mod ode;
pub mod qch;
pub mod quadrature;
pub mod rotational;
pub mod sampling;
pub mod scalar;
pub mod structure;
pub mod tensor;

/// Kähler-type tensors in double precision.
pub type KahlerTensor64 = tensor::KahlerTensor4<f64>;
/// Kähler-type tensors in single precision.
pub type KahlerTensor32 = tensor::KahlerTensor4<f32>;
pub type QchCoefficients64 = qch::QchCoefficients<f64>;
pub type RadialMetric64 = families::RadialMetric<f64>;
pub type RotationalProfile64 = rotational::RotationalProfile<f64>;
