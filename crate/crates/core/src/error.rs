use thiserror::Error;

pub type Result<T> = std::result::Result<T, EifeError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EifeError {
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    Shape { expected: Vec<usize>, found: Vec<usize> },

    #[error("index {index:?} out of bounds for shape {shape:?}")]
    Bounds { index: Vec<usize>, shape: Vec<usize> },

    #[error("invalid configuration: {0}")]
    Config(String),

    /// The nonlinearity was asked to evaluate outside its admissible range.
    #[error("{}", domain_message(*.value, *.t, *.step))]
    Domain { value: f64, t: f64, step: Option<usize> },

    #[error("dense oracle limited to {limit} unknowns, got {dofs}")]
    Scale { dofs: usize, limit: usize },
}

fn domain_message(value: f64, t: f64, step: Option<usize>) -> String {
    match step {
        Some(s) => format!("nonlinearity undefined at u = {value} (step {s}, t = {t}); maximum bound violated"),
        None => format!("nonlinearity undefined at u = {value} (t = {t})"),
    }
}

impl EifeError {
    pub(crate) fn shape(expected: &[usize], found: &[usize]) -> Self {
        EifeError::Shape {
            expected: expected.to_vec(),
            found: found.to_vec(),
        }
    }

    /// Attach the step index to a domain error raised inside a step.
    pub fn at_step(self, step: usize) -> Self {
        match self {
            EifeError::Domain { value, t, .. } => EifeError::Domain {
                value,
                t,
                step: Some(step),
            },
            other => other,
        }
    }
}
