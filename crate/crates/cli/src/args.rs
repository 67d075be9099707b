//! Minimal flag parsing.

#[derive(Debug, Clone)]
pub struct CliArgs {
    pub command: String,
    pub config: Option<String>,
    pub out: Option<String>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub model: Option<String>,
    pub data: Option<String>,
    pub data_noobs: Option<String>,
    pub flags: Option<String>,
}

impl CliArgs {
    pub fn parse(argv: Vec<String>) -> Result<Self, String> {
        let mut iter = argv.into_iter();
        let command = iter.next().ok_or_else(|| "missing subcommand".to_string())?;
        let mut args = CliArgs {
            command,
            config: None,
            out: None,
            seed: None,
            threads: None,
            model: None,
            data: None,
            data_noobs: None,
            flags: None,
        };
        while let Some(flag) = iter.next() {
            let mut value = || {
                iter.next()
                    .ok_or_else(|| format!("flag {flag} expects a value"))
            };
            match flag.as_str() {
                "--config" => args.config = Some(value()?),
                "--out" => args.out = Some(value()?),
                "--seed" => {
                    args.seed = Some(
                        value()?
                            .parse()
                            .map_err(|_| "--seed expects an integer".to_string())?,
                    )
                }
                "--threads" => {
                    args.threads = Some(
                        value()?
                            .parse()
                            .map_err(|_| "--threads expects an integer".to_string())?,
                    )
                }
                "--model" => args.model = Some(value()?),
                "--data" => args.data = Some(value()?),
                "--data-noobs" => args.data_noobs = Some(value()?),
                "--flags" => args.flags = Some(value()?),
                other => return Err(format!("unknown flag '{other}'")),
            }
        }
        Ok(args)
    }

    pub fn require_out(&self) -> Result<std::path::PathBuf, crate::CliError> {
        self.out
            .as_ref()
            .map(std::path::PathBuf::from)
            .ok_or_else(|| crate::CliError::Usage("--out DIR is required".into()))
    }

    pub fn require_data(&self) -> Result<std::path::PathBuf, crate::CliError> {
        self.data
            .as_ref()
            .map(std::path::PathBuf::from)
            .ok_or_else(|| crate::CliError::Usage("--data DIR is required".into()))
    }

    pub fn require_model(&self) -> Result<std::path::PathBuf, crate::CliError> {
        self.model
            .as_ref()
            .map(std::path::PathBuf::from)
            .ok_or_else(|| crate::CliError::Usage("--model PATH is required".into()))
    }
}
