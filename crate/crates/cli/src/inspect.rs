use std::fmt::Write;
use std::path::Path;

use tte_core::metrics::{hit_histogram, trr_at_k, trr_stratified, REPORT_TRR_KS};
use tte_core::registry::{Origin, ToolLibrary};

use crate::error::{usage, CliError};

fn rate(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |r| format!("{r:.4}"))
}

pub fn render(library: &ToolLibrary) -> String {
    let mut s = String::new();
    let evolved = library
        .tools()
        .filter(|t| t.origin == Origin::Evolved)
        .count();
    let _ = writeln!(
        s,
        "embedder: {} (dim {})",
        library.provider(),
        library.dim()
    );
    let _ = writeln!(
        s,
        "size: {} ({evolved} evolved, {} predefined), capacity {}, min usage {}",
        library.len(),
        library.len() - evolved,
        library.capacity(),
        library.min_usage()
    );
    if library.is_empty() {
        s.push_str("TRR undefined (empty library)\n");
        return s;
    }
    let _ = writeln!(
        s,
        "\n{:<6}{:>8}{:>10}{:>11}",
        "k", "TRR@k", "TRR_evol", "TRR_trans"
    );
    for k in REPORT_TRR_KS {
        let st = trr_stratified(library, k);
        let _ = writeln!(
            s,
            "{:<6}{:>8}{:>10}{:>11}",
            k,
            rate(trr_at_k(library, k).ok()),
            rate(st.trr_evol),
            rate(st.trr_trans)
        );
    }
    let _ = writeln!(s, "\n{:<8}{:>6}", "hits", "tools");
    for (label, n) in hit_histogram(library).binned() {
        let _ = writeln!(s, "{label:<8}{n:>6}");
    }
    s
}

pub fn cmd_inspect(path: &Path) -> Result<(), CliError> {
    let bytes = std::fs::read(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let library = ToolLibrary::load_snapshot(&bytes, None)
        .map_err(|e| usage(format!("{}: {e}", path.display())))?;
    print!("{}", render(&library));
    Ok(())
}
