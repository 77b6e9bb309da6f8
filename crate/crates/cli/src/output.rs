use std::fmt;
use std::fs;
use std::path::PathBuf;

/// Exit-code class of a failed command.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, files or a failed check: exit 1.
    Validation(String),
    /// A required computation did not converge: exit 2.
    Numerical(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Numerical(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(m) | Failure::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<tte_stab::Error> for Failure {
    fn from(e: tte_stab::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Validation(e.to_string())
        }
    }
}

/// Output destination. Without a directory only the primary output of a
/// command goes to stdout.
pub struct Sink {
    dir: Option<PathBuf>,
}

impl Sink {
    pub fn new(dir: Option<PathBuf>) -> Result<Self, Failure> {
        if let Some(d) = &dir {
            fs::create_dir_all(d)
                .map_err(|e| Failure::Validation(format!("cannot create {}: {e}", d.display())))?;
        }
        Ok(Self { dir })
    }

    pub fn primary(&self, name: &str, content: &str) -> Result<(), Failure> {
        match &self.dir {
            Some(_) => self.write(name, content),
            None => {
                print!("{content}");
                Ok(())
            }
        }
    }

    /// Written only when an output directory is set.
    pub fn secondary(&self, name: &str, content: &str) -> Result<(), Failure> {
        match &self.dir {
            Some(_) => self.write(name, content),
            None => Ok(()),
        }
    }

    fn write(&self, name: &str, content: &str) -> Result<(), Failure> {
        let path = self.dir.as_ref().expect("directory").join(name);
        fs::write(&path, content)
            .map_err(|e| Failure::Validation(format!("cannot write {}: {e}", path.display())))?;
        eprintln!("wrote {}", path.display());
        Ok(())
    }
}
