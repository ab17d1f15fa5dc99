use std::fmt;

/// Process exit codes. These are part of the command-line contract.
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError { code: EXIT_CONFIG, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError { code: EXIT_DATA, message: message.into() }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        CliError { code: EXIT_NUMERICAL, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<mvqc_core::Error> for CliError {
    fn from(e: mvqc_core::Error) -> Self {
        use mvqc_core::Error as E;
        let code = match &e {
            E::Config(_) | E::QubitIndex { .. } | E::ModelDefinition(_) | E::InvalidModel(_) => EXIT_CONFIG,
            E::Data(_) | E::Parse { .. } | E::Io { .. } | E::Json(_) | E::Csv(_) => EXIT_DATA,
            E::Numerical(_) => EXIT_NUMERICAL,
        };
        CliError { code, message: e.to_string() }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;
    use mvqc_core::Error;

    #[test]
    fn core_errors_map_to_stable_codes() {
        assert_eq!(CliError::from(Error::Config("x".into())).code, 1);
        assert_eq!(CliError::from(Error::QubitIndex { index: 3, n_qubits: 2 }).code, 1);
        assert_eq!(CliError::from(Error::Data("x".into())).code, 2);
        let parse = Error::Parse { path: "a.csv".into(), row: 4, message: "bad".into() };
        let e = CliError::from(parse);
        assert_eq!(e.code, 2);
        assert!(e.message.contains("a.csv") && e.message.contains("row 4"));
        assert_eq!(CliError::from(Error::Numerical("nan".into())).code, 3);
    }
}
