use num_complex::Complex64;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("order r = {r} is invalid: r must be an odd integer >= 3")]
    InvalidOrder { r: i64 },

    #[error("color {value} out of range 0..={max} for r = {r}")]
    ColorOutOfRange { value: i64, max: i64, r: i64 },

    #[error("color tuple is not r-admissible")]
    Inadmissible,

    #[error("factorial argument {n} out of range 0..={max}")]
    FactorialRange { n: i64, max: i64 },

    #[error("argument z = {z} lies outside the holomorphy strip -pi/r < Re z < pi + pi/r")]
    StripViolation { z: Complex64 },

    #[error("argument z = {z} is within 1e-8 of a pole of the extended function")]
    PoleProximity { z: Complex64 },

    #[error("quadrature failed to converge: {0}")]
    NonConvergence(String),

    #[error("quadratic coefficient degenerate (|A| or discriminant vanishes): {0}")]
    DegenerateQuadratic(String),

    #[error("point lies outside the admissible complex domain: {0}")]
    DomainViolation(String),

    #[error("angle tuple is not of the hyperideal type")]
    NotHyperideal,

    #[error("result should be real but has imaginary residue {imag:.3e}")]
    NonRealResult { imag: f64 },

    #[error("Newton Jacobian is singular")]
    SingularJacobian,

    #[error("geometry solver did not converge within {iters} iterations (residual {residual:.3e})")]
    SolverStalled { iters: usize, residual: f64 },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("enumeration budget of {budget} 6j evaluations exceeded")]
    BudgetExceeded { budget: u64 },

    #[error("bad triangulation: {0}")]
    BadTriangulation(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
