//! `key=value` configuration files and the thread-count environment variable.

use std::path::Path;

pub const THREADS_ENV: &str = "TORUSLAB_THREADS";

/// Parses `key=value` lines; `#` starts a comment. Keys are long flag names
/// with `_` or `-`.
pub fn parse(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(format!("config line {}: expected key=value, got {raw:?}", i + 1));
        };
        let key = k.trim().replace('_', "-");
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '-') {
            return Err(format!("config line {}: bad key {k:?}", i + 1));
        }
        if key == "config" {
            return Err(format!("config line {}: nested config files are not supported", i + 1));
        }
        if out.iter().any(|(o, _)| *o == key) {
            return Err(format!("config line {}: duplicate key {key}", i + 1));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

fn config_path(argv: &[String]) -> Result<Option<String>, String> {
    let mut found = None;
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        let path = if a == "--config" {
            Some(it.next().cloned().ok_or("--config needs a file")?)
        } else {
            a.strip_prefix("--config=").map(str::to_string)
        };
        if let Some(p) = path {
            if found.replace(p).is_some() {
                return Err("--config given more than once".into());
            }
        }
    }
    Ok(found)
}

/// `argv` with config entries appended as flags, skipping keys the user set
/// on the command line.
pub fn merge(argv: &[String]) -> Result<Vec<String>, String> {
    let Some(path) = config_path(argv)? else {
        return Ok(argv.to_vec());
    };
    let text = std::fs::read_to_string(Path::new(&path)).map_err(|e| format!("reading config {path}: {e}"))?;
    let mut out = argv.to_vec();
    for (key, value) in parse(&text)? {
        let flag = format!("--{key}");
        let given = argv.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")));
        if given {
            continue;
        }
        match value.as_str() {
            "true" => out.push(flag),
            "false" => {}
            _ => {
                out.push(flag);
                out.extend(value.split_whitespace().map(str::to_string));
            }
        }
    }
    Ok(out)
}

pub fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| format!("{THREADS_ENV}={v:?} is not a thread count"))?;
    if n == 0 {
        return Err(format!("{THREADS_ENV} must be positive"));
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn parse_lines() {
        let kv = parse("# study\nseed = 7\nb_opt=2 # trailing\n\nquick=true\n").unwrap();
        assert_eq!(kv, vec![("seed".into(), "7".into()), ("b-opt".into(), "2".into()), ("quick".into(), "true".into())]);
        assert!(parse("seed 7").is_err());
        assert!(parse("seed=1\nseed=2").is_err());
        assert!(parse("=3").is_err());
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.cfg");
        std::fs::write(&p, "seed=7\nbudget=50\ntori=0,1 0,2\nquick=false\n").unwrap();
        let argv = args(&["toruslab", "--seed", "3", "--config", p.to_str().unwrap(), "teich"]);
        let m = merge(&argv).unwrap();
        assert_eq!(&m[argv.len()..], &args(&["--budget", "50", "--tori", "0,1", "0,2"])[..]);
    }

    #[test]
    fn no_config_is_identity() {
        let argv = args(&["toruslab", "spectrum", "--torus", "0,1"]);
        assert_eq!(merge(&argv).unwrap(), argv);
        assert!(merge(&args(&["toruslab", "--config"])).is_err());
    }
}
