use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::Args;

use crate::manifest::{Manifest, OutputRecord};
use crate::{execute, usage};

#[derive(Args, Debug)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Compare regenerated outputs with the existing ones, byte for byte
    /// apart from the manifest's volatile CSV columns.
    #[arg(long)]
    pub verify: bool,
}

/// CSV text with the named columns removed.
pub fn strip_columns(text: &str, cols: &[String]) -> String {
    let mut lines = text.lines();
    let Some(header) = lines.next() else {
        return String::new();
    };
    let keep: Vec<bool> = header.split(',').map(|h| !cols.iter().any(|c| c == h)).collect();
    let filter = |line: &str| {
        line.split(',')
            .zip(&keep)
            .filter(|(_, k)| **k)
            .map(|(v, _)| v)
            .collect::<Vec<_>>()
            .join(",")
    };
    let mut out = filter(header);
    for l in lines {
        out.push('\n');
        out.push_str(&filter(l));
    }
    out
}

fn comparable(o: &OutputRecord, path: &Path) -> anyhow::Result<Vec<u8>> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if o.volatile_columns.is_empty() {
        return Ok(bytes);
    }
    let text = String::from_utf8(bytes).with_context(|| format!("{} is not text", path.display()))?;
    Ok(strip_columns(&text, &o.volatile_columns).into_bytes())
}

pub fn run(a: ReplayArgs) -> anyhow::Result<()> {
    let m = Manifest::load(&a.manifest)?;
    if m.argv.is_empty() {
        return Err(usage("manifest has an empty command line"));
    }
    let cwd = PathBuf::from(&m.cwd);
    if cwd.is_dir() {
        std::env::set_current_dir(&cwd).with_context(|| format!("entering {}", cwd.display()))?;
    }
    let before = if a.verify {
        m.outputs
            .iter()
            .map(|o| comparable(o, Path::new(&o.path)))
            .collect::<anyhow::Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    execute(&m.argv)?;
    if a.verify {
        let mut differing = Vec::new();
        for (o, old) in m.outputs.iter().zip(&before) {
            if comparable(o, Path::new(&o.path))? != *old {
                differing.push(o.path.clone());
            }
        }
        if !differing.is_empty() {
            bail!("replay differs for: {}", differing.join(", "));
        }
        println!("replay verified {} output(s)", m.outputs.len());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_named_columns() {
        let cols = vec!["wall_ms".to_string()];
        assert_eq!(strip_columns("step,lr,wall_ms\n0,0.1,5\n1,0.2,9\n", &cols), "step,lr\n0,0.1\n1,0.2");
        assert_eq!(strip_columns("a,b\n1,2", &[]), "a,b\n1,2");
        assert_eq!(strip_columns("", &cols), "");
    }
}
