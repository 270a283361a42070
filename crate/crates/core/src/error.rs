use thiserror::Error;

/// Errors surfaced by the compiler pipeline, tagged by stage.
#[derive(Debug, Error)]
pub enum SpfError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("set algebra error: {0}")]
    Presburger(String),
    #[error("layout error: {0}")]
    Layout(String),
    #[error("contraction error: {0}")]
    Frontend(String),
    #[error("space composition error: {0}")]
    Compose(String),
    #[error("analysis error: {0}")]
    Analysis(String),
    #[error("synthesis error: {0}")]
    Synthesis(String),
    #[error("code generation error: {0}")]
    Codegen(String),
    #[error("interpreter error: {0}")]
    Interp(String),
    #[error("oracle error: {0}")]
    Oracle(String),
    #[error("job error: {0}")]
    Job(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SpfError>;
