use std::path::Path;

use trails_core::report::{load_document, render, Format};

use crate::DataError;

/// Re-renders a saved report document. Without `output` files land next to the input.
pub fn run(input: &Path, formats: &[Format], output: Option<&Path>) -> anyhow::Result<()> {
    let doc = load_document(input).map_err(|e| DataError(e.to_string()))?;
    for &f in formats {
        let path = match output {
            Some(o) if formats.len() == 1 => o.to_path_buf(),
            Some(o) => o.join(input.with_extension(f.extension()).file_name().expect("input is a file")),
            None => input.with_extension(f.extension()),
        };
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        render(&doc, f, &path)?;
        eprintln!("report: wrote {}", path.display());
    }
    Ok(())
}
